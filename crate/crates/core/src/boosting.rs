//! Agnostic boosting of a weak parity learner.
//!
//! Stage 1 (structure learning) repeatedly runs the weak learner on the
//! current residual state and collects parity labels until the residual
//! carries too little mass or the learner stops finding heavy parities.
//! Stage 2 (parameter learning) recovers the coefficients of the hidden
//! state on those parities, up to one global phase, from SWAP tests against
//! parity states and two-term parity superpositions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::access::{CopyLedger, CopySource, OracleMode};
use crate::error::{check_unit_open, Error, Result};
use crate::statevec::{ParityLabel, ParitySpan, StateVector};
use crate::weaklearn::WeakLearner;

/// Default ceiling on the iteration cap. The loop also ends once every
/// parity is in the span, so this only guards against non-finite caps.
pub const DEFAULT_T_MAX_LIMIT: f64 = 1e18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    FidelityBreak,
    NormBreak,
    TMax,
}

/// Tolerances of one boosting run. Fields are derived in the constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingConfig {
    eps: f64,
    delta: f64,
    eta2: f64,
    eta: f64,
    eps_s: f64,
    wal_tau: f64,
    eps_p: f64,
    t_max: u64,
    delta_prime: f64,
    attempt_cap: u64,
    fidelity_break: bool,
    reorder: bool,
    vacuous: bool,
}

/// Accuracy triple for parameter learning with `kappa` labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Upsilons {
    pub upsilon1: f64,
    pub upsilon2: f64,
    pub upsilon_prime: f64,
}

impl Upsilons {
    /// `(eps mu / 63k, eps sqrt(mu) / 18k, eps sqrt(mu) / 36k)`.
    pub fn new(eps: f64, mu: f64, k: usize) -> Self {
        let k = k.max(1) as f64;
        Upsilons {
            upsilon1: eps * mu / (63.0 * k),
            upsilon2: eps * mu.sqrt() / (18.0 * k),
            upsilon_prime: eps * mu.sqrt() / (36.0 * k),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_config(
    eps: f64,
    delta: f64,
    eta2: f64,
    eta: f64,
    eps_s: f64,
    wal_tau: f64,
    fidelity_break: bool,
    vacuous: bool,
    t_max_limit: f64,
) -> Result<BoostingConfig> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Configuration(format!("promise eta(eps_s) = {eta:e} outside (0, 1]")));
    }
    let t_max = if vacuous { 1.0 } else { (4.0 / (eps_s * eta)).ceil() };
    if !t_max.is_finite() || t_max > t_max_limit {
        return Err(Error::Configuration(format!("iteration cap {t_max:e} exceeds the limit {t_max_limit:e}")));
    }
    let delta_prime = delta / (3.0 * t_max);
    let attempt_cap = ((20.0 / eps_s) * (1.0 / delta_prime).ln()).ceil();
    Ok(BoostingConfig {
        eps,
        delta,
        eta2,
        eta,
        eps_s,
        wal_tau,
        eps_p: (eps / 2.0).min(0.5),
        t_max: t_max as u64,
        delta_prime,
        attempt_cap: if attempt_cap >= u64::MAX as f64 { u64::MAX } else { attempt_cap as u64 },
        fidelity_break,
        reorder: false,
        vacuous,
    })
}

impl BoostingConfig {
    /// Configuration for boosting `wal` to accuracy `eps` with confidence
    /// `1 - delta`. `eps >= 1` asks for nothing and runs one iteration.
    pub fn new(eps: f64, delta: f64, wal: &dyn WeakLearner) -> Result<Self> {
        Self::with_limit(eps, delta, wal, DEFAULT_T_MAX_LIMIT)
    }

    pub fn with_limit(eps: f64, delta: f64, wal: &dyn WeakLearner, t_max_limit: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
        }
        check_unit_open("delta", delta)?;
        let eta2 = wal.exponent();
        if !(eta2 >= 1.0) {
            return Err(Error::Configuration(format!("promise exponent {eta2} must be >= 1")));
        }
        let vacuous = eps >= 1.0;
        let e = eps.min(1.0);
        let eps_s = (2.0f64 / 3.0).powf(1.0 / eta2 + 1.0) * e * e / 16.0;
        finish_config(eps, delta, eta2, wal.eta(eps_s), eps_s, eps_s, true, vacuous, t_max_limit)
    }

    /// Structure learning for depth-3 circuits with fan-in `m`: `eps_s = eps/9`,
    /// the weak learner runs at threshold `eps_s / 4m^2` with promise `eta`,
    /// and only the norm break applies.
    pub fn depth3(eps: f64, delta: f64, m: usize, eta: f64) -> Result<Self> {
        check_unit_open("eps", eps)?;
        check_unit_open("delta", delta)?;
        if m == 0 {
            return Err(Error::InvalidParameter("fan-in must be at least 1".into()));
        }
        let eps_s = eps / 9.0;
        let wal_tau = eps_s / (4 * m * m) as f64;
        finish_config(eps, delta, 1.0, eta, eps_s, wal_tau, false, false, DEFAULT_T_MAX_LIMIT)
    }

    /// Puts the heaviest label first before parameter learning.
    pub fn with_reorder(mut self, reorder: bool) -> Self {
        self.reorder = reorder;
        self
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn eta2(&self) -> f64 {
        self.eta2
    }
    /// `eta(eps_s)`.
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn eta1(&self) -> f64 {
        self.eta / self.eps_s.powf(self.eta2)
    }
    pub fn eps_s(&self) -> f64 {
        self.eps_s
    }
    /// Threshold handed to the weak learner.
    pub fn wal_tau(&self) -> f64 {
        self.wal_tau
    }
    pub fn eps_p(&self) -> f64 {
        self.eps_p
    }
    pub fn t_max(&self) -> u64 {
        self.t_max
    }
    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }
    pub fn attempt_cap(&self) -> u64 {
        self.attempt_cap
    }
    pub fn fidelity_break(&self) -> bool {
        self.fidelity_break
    }
    pub fn reorder(&self) -> bool {
        self.reorder
    }
    pub fn is_vacuous(&self) -> bool {
        self.vacuous
    }

    /// `ceil(4 / (eps_s eta(eps_s)))`.
    pub fn kappa_bound(&self) -> u64 {
        (4.0 / (self.eps_s * self.eta)).ceil() as u64
    }

    /// Weight floor assumed for every collected label, `eps_s eta / 4`.
    pub fn mu(&self) -> f64 {
        self.eps_s * self.eta / 4.0
    }

    /// Accuracies as set inside the boosting loop, with `eta` as the weight floor.
    pub fn loop_upsilons(&self, kappa: usize) -> Upsilons {
        Upsilons::new(self.eps_p, self.eta, kappa)
    }

    /// `1 / (eps^2 eta(eps_s))`, the scale of the asymptotic iteration bound.
    pub fn kappa_scale(&self) -> f64 {
        1.0 / (self.eps.min(1.0).powi(2) * self.eta)
    }
}

/// One structure-learning iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: u64,
    pub label: ParityLabel,
    /// Estimated squared overlap of the label with the current residual.
    pub nu: Option<f64>,
    /// Estimated residual weight after adding the label.
    pub alpha_sq_hat: Option<f64>,
    /// Exact residual weight after adding the label (exact mode).
    pub alpha_sq_exact: Option<f64>,
    /// Exact `|<chi_t|psi>|^2` (exact mode).
    pub beta_sq_exact: Option<f64>,
    /// Root copies consumed so far.
    pub copies: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureOutcome {
    pub labels: Vec<ParityLabel>,
    pub stop_reason: StopReason,
    pub trace: Vec<TraceEntry>,
    /// Label returned by the last weak-learner call, accepted or not.
    pub last_candidate: Option<ParityLabel>,
}

/// Stage 1: collect parity labels from the weak learner run on successive
/// residual states.
pub fn structure_learning(
    src: &mut CopySource,
    wal: &dyn WeakLearner,
    cfg: &BoostingConfig,
) -> Result<StructureOutcome> {
    let mut residual: Option<CopySource> = None;
    let mut out =
        StructureOutcome { labels: Vec::new(), stop_reason: StopReason::TMax, trace: Vec::new(), last_candidate: None };
    let res = structure_loop(src, &mut residual, wal, cfg, &mut out);
    if let Some(r) = residual {
        src.absorb(r);
    }
    res?;
    Ok(out)
}

fn structure_loop(
    src: &mut CopySource,
    residual: &mut Option<CopySource>,
    wal: &dyn WeakLearner,
    cfg: &BoostingConfig,
    out: &mut StructureOutcome,
) -> Result<()> {
    let mut span = ParitySpan::default();
    let dp = cfg.delta_prime;
    let eta = cfg.eta;
    let exact = src.mode() == OracleMode::Exact;
    for t in 1..=cfg.t_max {
        let cur: &mut CopySource = match residual.as_mut() {
            Some(r) => r,
            None => &mut *src,
        };
        let label = wal.learn(cur, cfg.wal_tau, dp)?;
        out.last_candidate = Some(label);
        let nu = if cfg.fidelity_break {
            let nu = cur.swap_test_parity(label, (eta / 2.0).min(0.5), dp / 2.0)?;
            if nu < eta {
                out.stop_reason = StopReason::FidelityBreak;
                return Ok(());
            }
            Some(nu)
        } else {
            None
        };
        span.push(label)?;
        out.labels.push(label);
        let alpha_sq_hat = src.povm_norm_estimate(&span, (cfg.eps_s / 2.0).min(0.5), dp / 2.0)?;
        let (alpha_sq_exact, beta_sq_exact) = if exact {
            (src.exact_residual_weight(&span), Some(src.oracle_parity_weight(label)))
        } else {
            (None, None)
        };
        let copies = src.ledger().copies_consumed + residual.as_ref().map_or(0, |r| r.ledger().copies_consumed);
        out.trace.push(TraceEntry {
            t,
            label,
            nu,
            alpha_sq_hat: Some(alpha_sq_hat),
            alpha_sq_exact,
            beta_sq_exact,
            copies,
        });
        if alpha_sq_hat < cfg.eps_s {
            out.stop_reason = StopReason::NormBreak;
            return Ok(());
        }
        if t == cfg.t_max {
            break;
        }
        let next = src.prepare_residual(&span, cfg.attempt_cap)?;
        if let Some(old) = residual.replace(next) {
            src.absorb(old);
        }
    }
    out.stop_reason = StopReason::TMax;
    Ok(())
}

/// Hypothesis `sum_i beta_i |chi_{S_i}>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityDecomposition {
    pub n: usize,
    pub labels: Vec<ParityLabel>,
    pub coefficients: Vec<Complex64>,
}

impl ParityDecomposition {
    pub fn single(n: usize, label: ParityLabel) -> Self {
        ParityDecomposition { n, labels: vec![label], coefficients: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_state(&self) -> Result<StateVector> {
        let terms: Vec<_> = self.labels.iter().copied().zip(self.coefficients.iter().copied()).collect();
        StateVector::from_parities(self.n, &terms)
    }

    /// `h(x) = sum_i beta_i chi_i(x)`.
    pub fn evaluate(&self, x: usize) -> Complex64 {
        self.labels.iter().zip(&self.coefficients).map(|(l, c)| c * l.chi(x)).sum()
    }

    /// Exact `|<phi_hat|psi>|^2` against a known state.
    pub fn fidelity_with(&self, psi: &StateVector) -> Result<f64> {
        psi.fidelity(&self.to_state()?)
    }
}

/// Output of the projection-coefficient estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimates {
    pub labels: Vec<ParityLabel>,
    /// Magnitude estimates of `|<chi_j|psi>|`.
    pub xi: Vec<f64>,
    /// Magnitude estimates against `(chi_1 + chi_j)/sqrt(2)`.
    pub gamma_r: Vec<f64>,
    /// Magnitude estimates against `(chi_1 + i chi_j)/sqrt(2)`.
    pub gamma_i: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub beta_hat: Vec<Complex64>,
    pub beta_hat_normalized: Vec<Complex64>,
    pub upsilons: Upsilons,
}

/// Real and imaginary parts of `beta_j e^{-i theta_1}` from squared
/// magnitudes: `xi1_sq = |beta_1|^2`, `xi_sq = |beta_j|^2`, and the squared
/// overlaps with the two superpositions of `chi_1` and `chi_j`.
pub fn coefficient_from_magnitudes(xi1_sq: f64, xi_sq: f64, gamma_r_sq: f64, gamma_i_sq: f64) -> (f64, f64) {
    let xi1 = xi1_sq.max(0.0).sqrt();
    let a = (2.0 * gamma_r_sq - xi1_sq - xi_sq) / (2.0 * xi1);
    let b = (2.0 * gamma_i_sq - xi1_sq - xi_sq) / (2.0 * xi1);
    (a, b)
}

/// Estimates `beta_j e^{-i theta_1}` for every label, taking the first label
/// as the phase reference.
///
/// Requires every label to carry weight at least `mu`. The returned
/// coefficients satisfy `|<psi|sum beta_hat_i chi_i>|^2 >= |<psi|Lambda psi>|^2 - eps`
/// and `|beta_hat|^2 <= |<psi|Lambda psi>|^2 + eps` w.p. `1 - delta`.
pub fn estimate_projection_coefficients(
    src: &mut CopySource,
    labels: &[ParityLabel],
    eps: f64,
    mu: f64,
    delta: f64,
) -> Result<ParameterEstimates> {
    check_unit_open("eps", eps)?;
    check_unit_open("delta", delta)?;
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidParameter(format!("mu = {mu} must lie in (0, 1]")));
    }
    if labels.is_empty() {
        return Err(Error::InvalidParameter("no labels to estimate".into()));
    }
    ParitySpan::new(labels.to_vec())?;
    let k = labels.len();
    let ups = Upsilons::new(eps, mu, k);
    let sqrt_mu = mu.sqrt();
    if ups.upsilon1 > sqrt_mu / 2.0 {
        return Err(Error::Configuration("upsilon1 exceeds sqrt(mu)/2".into()));
    }
    let each = delta / (3 * k) as f64;
    let clamp = |e: f64| e.min(0.5);

    // squared-magnitude accuracies giving the magnitude accuracies above
    let xi1_sq = src.swap_test_parity(labels[0], clamp(ups.upsilon1 * sqrt_mu), each)?;
    let xi1 = xi1_sq.sqrt();
    if xi1 < sqrt_mu - ups.upsilon1 {
        return Err(Error::PromiseViolation(format!("reference weight {xi1_sq:e} is below mu = {mu:e}")));
    }
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let mut xi = vec![xi1];
    let mut gamma_r = vec![xi1];
    let mut gamma_i = vec![xi1];
    let mut a = vec![xi1];
    let mut b = vec![0.0];
    for &l in &labels[1..] {
        let xj_sq = src.swap_test_parity(l, clamp(2.0 * ups.upsilon2), each)?;
        let gr_sq = src.swap_test_parity_pair(labels[0], l, one, clamp(2.0 * ups.upsilon_prime), each)?;
        let gi_sq = src.swap_test_parity_pair(labels[0], l, i, clamp(2.0 * ups.upsilon_prime), each)?;
        let (aj, bj) = coefficient_from_magnitudes(xi1_sq, xj_sq, gr_sq, gi_sq);
        xi.push(xj_sq.sqrt());
        gamma_r.push(gr_sq.sqrt());
        gamma_i.push(gi_sq.sqrt());
        a.push(aj);
        b.push(bj);
    }
    let beta_hat: Vec<Complex64> = a.iter().zip(&b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    let norm = beta_hat.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::PromiseViolation("estimated coefficients vanish".into()));
    }
    let beta_hat_normalized = beta_hat.iter().map(|c| c / norm).collect();
    Ok(ParameterEstimates {
        labels: labels.to_vec(),
        xi,
        gamma_r,
        gamma_i,
        a,
        b,
        beta_hat,
        beta_hat_normalized,
        upsilons: ups,
    })
}

/// Orders labels by decreasing estimated weight (smaller mask on ties), so
/// the reference label is the heaviest.
pub fn order_by_weight(src: &mut CopySource, labels: &[ParityLabel], eps: f64, delta: f64) -> Result<Vec<ParityLabel>> {
    let each = delta / labels.len().max(1) as f64;
    let mut scored =
        labels.iter().map(|&l| Ok((src.swap_test_parity(l, eps, each)?, l))).collect::<Result<Vec<_>>>()?;
    scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    Ok(scored.into_iter().map(|(_, l)| l).collect())
}

/// Stage 2 with explicit weight floor `mu`: runs the estimator at
/// `gamma = eps_p * kappa * mu^2 / 2` and normalizes.
pub fn learn_parameters(
    src: &mut CopySource,
    labels: &[ParityLabel],
    eps_p: f64,
    mu: f64,
    delta: f64,
) -> Result<(ParityDecomposition, ParameterEstimates)> {
    let gamma = eps_p * labels.len() as f64 * mu * mu / 2.0;
    let est = estimate_projection_coefficients(src, labels, gamma.min(0.5), mu, delta)?;
    let dec =
        ParityDecomposition { n: src.n(), labels: labels.to_vec(), coefficients: est.beta_hat_normalized.clone() };
    Ok((dec, est))
}

/// Stage 2 for labels from a structure-learning run under `cfg`.
pub fn parameter_learning(
    src: &mut CopySource,
    labels: &[ParityLabel],
    cfg: &BoostingConfig,
) -> Result<ParityDecomposition> {
    Ok(learn_parameters(src, labels, cfg.eps_p, cfg.mu(), cfg.delta / 3.0)?.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostResult {
    pub decomposition: ParityDecomposition,
    pub kappa: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<TraceEntry>,
    pub ledger: CopyLedger,
    pub config: BoostingConfig,
    pub estimates: Option<ParameterEstimates>,
    /// Accuracies the loop would use with `eta` as the weight floor.
    pub loop_upsilons: Upsilons,
    /// `1 / (eps^2 eta)`, recorded for comparison with the observed `kappa`.
    pub kappa_scale: f64,
}

/// Boosts `wal` into an agnostic learner with accuracy `eps`.
pub fn agnostic_boost(src: &mut CopySource, wal: &dyn WeakLearner, eps: f64, delta: f64) -> Result<BoostResult> {
    let cfg = BoostingConfig::new(eps, delta, wal)?;
    boost_with_config(src, wal, &cfg)
}

pub fn boost_with_config(src: &mut CopySource, wal: &dyn WeakLearner, cfg: &BoostingConfig) -> Result<BoostResult> {
    let structure = structure_learning(src, wal, cfg)?;
    let kappa = structure.labels.len();
    assert!(kappa as u64 <= cfg.kappa_bound(), "iteration cap violated: {kappa}");
    let (decomposition, estimates) = if kappa == 0 {
        // the weak learner found nothing heavy in the state itself, so the
        // optimum is below the accuracy and any hypothesis will do
        let l = structure.last_candidate.unwrap_or(ParityLabel(0));
        (ParityDecomposition::single(src.n(), l), None)
    } else {
        let labels = if cfg.reorder && kappa > 1 {
            order_by_weight(src, &structure.labels, (cfg.mu() / 4.0).min(0.5), cfg.delta / 6.0)?
        } else {
            structure.labels.clone()
        };
        let (dec, est) = learn_parameters(src, &labels, cfg.eps_p, cfg.mu(), cfg.delta / 3.0)?;
        (dec, Some(est))
    };
    Ok(BoostResult {
        decomposition,
        kappa,
        stop_reason: structure.stop_reason,
        trace: structure.trace,
        ledger: src.ledger().clone(),
        config: cfg.clone(),
        estimates,
        loop_upsilons: cfg.loop_upsilons(kappa),
        kappa_scale: cfg.kappa_scale(),
    })
}
