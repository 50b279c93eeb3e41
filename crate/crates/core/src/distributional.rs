//! Distributional agnostic learning under the uniform marginal, by reduction
//! to state learning. Labels with bias `phi(x)` are encoded in the last
//! qubit of `psi_D`; a Hadamard on that qubit followed by post-selection on
//! outcome 1 leaves a state whose amplitudes track `phi`.

use serde::{Deserialize, Serialize};

use crate::access::{CopyLedger, CopySource, OracleMode};
use crate::boosting::ParityDecomposition;
use crate::error::{check_unit_half_open, check_unit_open, Error, Result};
use crate::learners::round_to_boolean;
use crate::statevec::{check_qubits, StateVector};

pub const DEFAULT_GAMMA_FLOOR: f64 = 1e-3;
const DEGENERATE_PROB: f64 = 1e-12;
const WINDOW_TOL: f64 = 1e-12;

/// Bias table `phi: {0,1}^n -> [-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelFunction {
    n: usize,
    phi: Vec<f64>,
    gamma: f64,
}

impl LabelFunction {
    pub fn new(n: usize, phi: Vec<f64>) -> Result<Self> {
        check_qubits(n + 1)?;
        if phi.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: phi.len() });
        }
        if let Some(v) = phi.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::InvalidParameter(format!("label bias {v} outside [-1, 1]")));
        }
        let gamma = phi.iter().map(|v| v * v).sum::<f64>() / phi.len() as f64;
        Ok(LabelFunction { n, phi, gamma })
    }

    /// Deterministic labels: `phi(x) = (-1)^{f(x)}`.
    pub fn from_boolean(n: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        Self::new(n, (0..1usize << n).map(|x| if f(x) { -1.0 } else { 1.0 }).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `E_x[phi(x)^2]`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `E_x[phi(x) (-1)^{h(x)}]`.
    pub fn margin(&self, h: &[bool]) -> f64 {
        let s: f64 = self.phi.iter().zip(h).map(|(p, &b)| if b { -p } else { *p }).sum();
        s / self.phi.len() as f64
    }
}

fn label_amps(p: f64) -> (f64, f64) {
    (((1.0 + p) / 2.0).max(0.0).sqrt(), ((1.0 - p) / 2.0).max(0.0).sqrt())
}

/// `psi_D` on `n + 1` qubits; the label bit is the top qubit, index `x | b << n`.
pub fn build_psi_d(phi: &LabelFunction) -> Result<StateVector> {
    let n = phi.n;
    let k = (0.5f64).powf(n as f64 / 2.0);
    let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 2 << n];
    for (x, &p) in phi.phi.iter().enumerate() {
        let (a, b) = label_amps(p);
        amps[x].re = k * a;
        amps[x | 1 << n].re = k * b;
    }
    StateVector::new(n + 1, amps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostSelection {
    pub state: StateVector,
    pub success_prob: f64,
}

/// Hadamard on the top qubit of `psi_d`, then outcome 1.
pub fn postselect_last_qubit(psi_d: &StateVector) -> Result<PostSelection> {
    let m = psi_d.n();
    if m < 2 {
        return Err(Error::InvalidParameter("need a data qubit and a label qubit".into()));
    }
    let n = m - 1;
    let half = 1usize << n;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let amps: Vec<_> = (0..half).map(|x| (psi_d.amps()[x] - psi_d.amps()[x | half]) * r).collect();
    let success_prob: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if success_prob < DEGENERATE_PROB {
        return Err(Error::PostSelectionFailure { success_prob, cap: 0 });
    }
    Ok(PostSelection { state: StateVector::normalized(n, amps)?, success_prob })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapWindow {
    pub overlap: f64,
    /// `E_x[(-1)^{h(x)} phi(x)]`.
    pub e: f64,
    pub gamma: f64,
    pub lower: f64,
    pub upper: f64,
    pub contains: bool,
}

/// Exact `<psi_1|psi_2>` with `psi_1 = 2^{-n/2} sum_x (a_x - b_x)|x>` left
/// unnormalized and `psi_2` the phase state of `h`, against the window
/// `[E - gamma/2, E + gamma/2] / sqrt(2)`.
pub fn verify_overlap_window(phi: &LabelFunction, h: &[bool]) -> Result<OverlapWindow> {
    if phi.n > 16 {
        return Err(Error::Resource { qubits: phi.n, cap: 16 });
    }
    if h.len() != phi.phi.len() {
        return Err(Error::DimensionMismatch { expected: phi.phi.len(), found: h.len() });
    }
    let sign = |b: bool| if b { -1.0 } else { 1.0 };
    let dim = phi.phi.len() as f64;
    let overlap = phi
        .phi
        .iter()
        .zip(h)
        .map(|(&p, &b)| {
            let (a, c) = label_amps(p);
            (a - c) * sign(b)
        })
        .sum::<f64>()
        / dim;
    let e = phi.margin(h);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let lower = r * (e - phi.gamma / 2.0);
    let upper = r * (e + phi.gamma / 2.0);
    Ok(OverlapWindow {
        overlap,
        e,
        gamma: phi.gamma,
        lower,
        upper,
        contains: overlap >= lower - WINDOW_TOL && overlap <= upper + WINDOW_TOL,
    })
}

/// Learner run on copies of the post-selected state.
pub trait StateLearner {
    fn learn_state(&self, src: &mut CopySource) -> Result<ParityDecomposition>;
}

impl<F> StateLearner for F
where
    F: Fn(&mut CopySource) -> Result<ParityDecomposition>,
{
    fn learn_state(&self, src: &mut CopySource) -> Result<ParityDecomposition> {
        self(src)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionalConfig {
    pub mode: OracleMode,
    pub seed: u64,
    pub delta: f64,
    pub gamma_floor: f64,
    pub attempt_cap: u64,
}

impl Default for DistributionalConfig {
    fn default() -> Self {
        DistributionalConfig {
            mode: OracleMode::Exact,
            seed: 0,
            delta: 0.05,
            gamma_floor: DEFAULT_GAMMA_FLOOR,
            attempt_cap: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionalOutcome {
    /// `h(x)` as Boolean values (true = -1).
    pub hypothesis: Vec<bool>,
    pub decomposition: ParityDecomposition,
    /// Exact `E_x[phi(x) (-1)^{h(x)}]`.
    pub margin: f64,
    /// Estimate of the same quantity used to fix the global sign.
    pub margin_estimate: f64,
    pub sign_flipped: bool,
    pub success_prob: f64,
    pub gamma: f64,
    pub ledger: CopyLedger,
}

/// Learns a +-1 hypothesis with margin close to the best the state learner
/// can reach on the post-selected state.
///
/// The post-selected state only fixes `h` up to a global sign, so the sign
/// is chosen by estimating `E[(-1)^b (-1)^{h(x)}]` from computational-basis
/// samples of `psi_D` to accuracy `eps / 2`.
pub fn distributional_learn(
    phi: &LabelFunction,
    learner: &dyn StateLearner,
    eps: f64,
    cfg: &DistributionalConfig,
) -> Result<DistributionalOutcome> {
    check_unit_open("eps", eps)?;
    check_unit_open("delta", cfg.delta)?;
    check_unit_half_open("gamma floor", cfg.gamma_floor)?;
    if phi.gamma < cfg.gamma_floor {
        return Err(Error::Configuration(format!(
            "label strength {:e} is below the floor {:e}",
            phi.gamma, cfg.gamma_floor
        )));
    }
    let n = phi.n;
    let psi_d = build_psi_d(phi)?;
    let ps = postselect_last_qubit(&psi_d)?;
    let mut root = CopySource::new(psi_d, cfg.mode, cfg.seed);
    let mut child = root.conditioned(ps.state, ps.success_prob, cfg.attempt_cap)?;
    let learned = learner.learn_state(&mut child);
    root.absorb(child);
    let decomposition = learned?;
    if decomposition.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: decomposition.n });
    }
    let mut hypothesis = round_to_boolean(&decomposition);

    let acc = eps / 2.0;
    let shots = (2.0 / (acc * acc) * (2.0 / cfg.delta).ln()).ceil() as u64;
    let counts = root.basis_sample_counts(shots, false)?;
    let signed: f64 = counts
        .iter()
        .map(|&(i, c)| {
            let b = i >> n & 1 == 1;
            let hx = hypothesis[i & ((1 << n) - 1)];
            if b != hx {
                -(c as f64)
            } else {
                c as f64
            }
        })
        .sum();
    let mut margin_estimate = signed / shots as f64;
    let sign_flipped = margin_estimate < 0.0;
    if sign_flipped {
        hypothesis.iter_mut().for_each(|b| *b = !*b);
        margin_estimate = -margin_estimate;
    }
    Ok(DistributionalOutcome {
        margin: phi.margin(&hypothesis),
        hypothesis,
        decomposition,
        margin_estimate,
        sign_flipped,
        success_prob: ps.success_prob,
        gamma: phi.gamma,
        ledger: root.ledger().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boosting::agnostic_boost;
    use crate::statevec::{parity_sign, ParityLabel};
    use crate::weaklearn::{DecisionTreeLearner, ParityLearner};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_phi(n: usize, rng: &mut ChaCha8Rng) -> LabelFunction {
        LabelFunction::new(n, (0..1 << n).map(|_| rng.random_range(-1.0..=1.0)).collect()).unwrap()
    }

    #[test]
    fn constant_labels() {
        let one = build_psi_d(&LabelFunction::new(3, vec![1.0; 8]).unwrap()).unwrap();
        for (i, a) in one.amps().iter().enumerate() {
            let want = if i < 8 { (0.125f64).sqrt() } else { 0.0 };
            assert!((a.re - want).abs() < 1e-15 && a.im == 0.0);
        }
        let zero = build_psi_d(&LabelFunction::new(3, vec![0.0; 8]).unwrap()).unwrap();
        let plus = StateVector::basis(4, 0).unwrap().walsh_hadamard();
        assert!((zero.fidelity(&plus).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(postselect_last_qubit(&zero), Err(Error::PostSelectionFailure { .. })));
    }

    #[test]
    fn random_labels_give_unit_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=8 {
            let s = build_psi_d(&random_phi(n, &mut rng)).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        assert!(LabelFunction::new(2, vec![0.0, 1.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn boolean_round_trip() {
        let f = |x: usize| (x * 7 + 3) % 5 < 2;
        let phi = LabelFunction::from_boolean(6, f).unwrap();
        let ps = postselect_last_qubit(&build_psi_d(&phi).unwrap()).unwrap();
        assert!((ps.success_prob - 0.5).abs() < 1e-12);
        let want = StateVector::phase_state(6, f).unwrap();
        for (a, b) in ps.state.amps().iter().zip(want.amps()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn postselection_probability_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let phi = random_phi(5, &mut rng);
            let ps = postselect_last_qubit(&build_psi_d(&phi).unwrap()).unwrap();
            let want = phi.phi().iter().map(|p| (1.0 - (1.0 - p * p).sqrt()) / 2.0).sum::<f64>() / 32.0;
            assert!((ps.success_prob - want).abs() < 1e-12);
            // always at least gamma / 4
            assert!(ps.success_prob >= phi.gamma() / 4.0 - 1e-12);
        }
    }

    #[test]
    fn window_examples() {
        let zero = LabelFunction::new(3, vec![0.0; 8]).unwrap();
        let w = verify_overlap_window(&zero, &[false; 8]).unwrap();
        assert_eq!(w.overlap, 0.0);
        assert!(w.contains);

        let h: Vec<bool> = (0..16).map(|x| x % 3 == 0).collect();
        let phi = LabelFunction::from_boolean(4, |x| h[x]).unwrap();
        let w = verify_overlap_window(&phi, &h).unwrap();
        assert!((w.overlap - 1.0).abs() < 1e-12 && (w.e - 1.0).abs() < 1e-12);
        assert!((w.lower - 0.353_553_390_593_273_8).abs() < 1e-12);
        assert!((w.upper - 1.060_660_171_779_821_3).abs() < 1e-12);
        assert!(w.contains);
    }

    #[test]
    fn window_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..=8);
            let phi = random_phi(n, &mut rng);
            let h: Vec<bool> = (0..1 << n).map(|_| rng.random()).collect();
            assert!(verify_overlap_window(&phi, &h).unwrap().contains);
        }
    }

    #[test]
    fn square_root_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100_000 {
            let x: f64 = rng.random_range(-1.0..1.0);
            let r = (1.0 + x).sqrt();
            assert!(1.0 + x / 2.0 - x * x / 2.0 <= r + 1e-15);
            assert!(r <= 1.0 + x / 2.0 + 1e-15);
        }
    }

    #[test]
    fn postselected_copy_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = LabelFunction::new(4, (0..16).map(|_| rng.random_range(-0.8..0.8)).collect()).unwrap();
        let psi_d = build_psi_d(&phi).unwrap();
        let ps = postselect_last_qubit(&psi_d).unwrap();
        let mut root = CopySource::new(psi_d, OracleMode::Sampled, 9);
        let mut child = root.conditioned(ps.state, ps.success_prob, u64::MAX).unwrap();
        let trials = 1000u32;
        let total = child.prepare_copies(trials as u128).unwrap() as f64;
        let p = ps.success_prob;
        let sigma = ((1.0 - p) / (p * p) / trials as f64).sqrt();
        assert!((total / trials as f64 - 1.0 / p).abs() <= 3.0 * sigma, "{} vs {}", total / trials as f64, 1.0 / p);
    }

    fn parity_boost(src: &mut CopySource) -> Result<ParityDecomposition> {
        Ok(agnostic_boost(src, &ParityLearner, 0.2, 0.1)?.decomposition)
    }

    #[test]
    fn noiseless_parity_labels() {
        let s = ParityLabel(0b1011);
        for seed in 0..4 {
            let phi = LabelFunction::new(6, (0..64).map(|x| parity_sign(s.index(), x)).collect()).unwrap();
            let cfg = DistributionalConfig { seed, ..Default::default() };
            let out = distributional_learn(&phi, &parity_boost, 0.1, &cfg).unwrap();
            assert!((out.margin - 1.0).abs() < 1e-12);
            assert!(out.ledger.is_conserved());
        }
    }

    #[test]
    fn damped_parity_labels() {
        let s = ParityLabel(0b110);
        let phi = LabelFunction::new(5, (0..32).map(|x| 0.9 * parity_sign(s.index(), x)).collect()).unwrap();
        let learner = |src: &mut CopySource| -> Result<ParityDecomposition> {
            Ok(agnostic_boost(src, &DecisionTreeLearner { size: 3 }, 0.1, 0.1)?.decomposition)
        };
        let cfg = DistributionalConfig { mode: OracleMode::Sampled, seed: 2, ..Default::default() };
        let out = distributional_learn(&phi, &learner, 0.1, &cfg).unwrap();
        assert!(out.margin >= 0.9 - 0.1 - phi.gamma());
    }

    #[test]
    fn weak_labels_are_refused() {
        let phi = LabelFunction::new(3, vec![0.01; 8]).unwrap();
        let r = distributional_learn(&phi, &parity_boost, 0.1, &DistributionalConfig::default());
        assert!(matches!(r, Err(Error::Configuration(_))));
    }
}
