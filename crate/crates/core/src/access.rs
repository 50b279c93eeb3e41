//! Simulated copy access to an unknown state.
//!
//! A [`CopySource`] owns the hidden state and answers SWAP tests, basis and
//! Fourier samples and two-outcome projector measurements, charging each
//! consumed copy to a [`CopyLedger`]. Sources derived by post-selection keep
//! the chain of success probabilities back to the root, so every charge is
//! expressed in copies of the root state.

use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Gamma, Geometric, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_open, Error, Result};
use crate::statevec::{ParityLabel, ParitySpan, StateVector};

/// Default constant `c` in the shot formula `ceil(c / eps^2 * ln(1/delta))`.
pub const DEFAULT_SHOT_CONSTANT: f64 = 2.0;
/// Post-selection onto a residual with squared norm below this is refused.
pub const DEGENERATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Estimators return exact values but still charge nominal shot counts.
    Exact,
    /// Estimators simulate finite-shot measurement statistics.
    Sampled,
}

impl fmt::Display for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMode::Exact => "exact",
            OracleMode::Sampled => "sampled",
        })
    }
}

impl FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(OracleMode::Exact),
            "sampled" => Ok(OracleMode::Sampled),
            _ => Err(Error::Parse(format!("unknown oracle mode `{s}`"))),
        }
    }
}

/// Copy accounting in units of root-state copies.
///
/// `copies_consumed` is always the sum of the four consuming categories.
/// `postselect_attempts` counts every root copy fed into a post-selection
/// chain (successful or not) and `weak_learner_calls` counts invocations;
/// neither is part of the sum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CopyLedger {
    pub copies_consumed: u128,
    /// `copies_consumed` as a float, which keeps counting past saturation.
    pub copies_estimate: f64,
    pub swap_test: u128,
    pub basis_sample: u128,
    pub norm_estimate: u128,
    pub postselect_discarded: u128,
    pub postselect_attempts: u128,
    pub weak_learner_calls: u64,
    /// Set once any counter hit `u128::MAX`.
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopyUse {
    SwapTest,
    BasisSample,
    NormEstimate,
}

fn sat_add(a: &mut u128, b: u128, flag: &mut bool) {
    match a.checked_add(b) {
        Some(v) => *a = v,
        None => {
            *a = u128::MAX;
            *flag = true;
        }
    }
}

impl CopyLedger {
    /// Charges `used` copies of the current state that cost `root` root copies.
    fn charge(&mut self, what: CopyUse, used: u128, root: u128, root_f: f64, chained: bool) {
        self.copies_estimate += root_f;
        let mut sat = self.saturated;
        let slot = match what {
            CopyUse::SwapTest => &mut self.swap_test,
            CopyUse::BasisSample => &mut self.basis_sample,
            CopyUse::NormEstimate => &mut self.norm_estimate,
        };
        sat_add(slot, used, &mut sat);
        sat_add(&mut self.postselect_discarded, root.saturating_sub(used), &mut sat);
        sat_add(&mut self.copies_consumed, root.max(used), &mut sat);
        if chained {
            sat_add(&mut self.postselect_attempts, root, &mut sat);
        }
        self.saturated = sat;
    }

    pub fn absorb(&mut self, other: &CopyLedger) {
        let mut sat = self.saturated || other.saturated;
        self.copies_estimate += other.copies_estimate;
        sat_add(&mut self.copies_consumed, other.copies_consumed, &mut sat);
        sat_add(&mut self.swap_test, other.swap_test, &mut sat);
        sat_add(&mut self.basis_sample, other.basis_sample, &mut sat);
        sat_add(&mut self.norm_estimate, other.norm_estimate, &mut sat);
        sat_add(&mut self.postselect_discarded, other.postselect_discarded, &mut sat);
        sat_add(&mut self.postselect_attempts, other.postselect_attempts, &mut sat);
        self.weak_learner_calls = self.weak_learner_calls.saturating_add(other.weak_learner_calls);
        self.saturated = sat;
    }

    /// Whether the breakdown sums to the total (always true unless saturated).
    pub fn is_conserved(&self) -> bool {
        let parts = [self.swap_test, self.basis_sample, self.norm_estimate, self.postselect_discarded];
        let sum = parts.iter().try_fold(0u128, |a, &b| a.checked_add(b));
        match sum {
            Some(s) => s == self.copies_consumed,
            None => self.saturated,
        }
    }
}

/// `ceil(c / eps^2 * ln(1/delta))` as a saturating count.
pub fn nominal_shots(c: f64, eps: f64, delta: f64) -> u128 {
    f64_to_count(nominal_shots_f64(c, eps, delta))
}

/// Unsaturated version of [`nominal_shots`].
pub fn nominal_shots_f64(c: f64, eps: f64, delta: f64) -> f64 {
    (c / (eps * eps) * (1.0 / delta).ln()).ceil()
}

fn f64_to_count(v: f64) -> u128 {
    if v.is_nan() || v <= 0.0 {
        0
    } else {
        // `as` saturates at u128::MAX
        v as u128
    }
}

/// Binomial draw, normal approximation beyond the exact sampler's range.
fn binomial<R: Rng>(rng: &mut R, n: u128, p: f64) -> f64 {
    if n == 0 || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return n as f64;
    }
    if n <= 1u128 << 53 {
        Binomial::new(n as u64, p).expect("valid binomial").sample(rng) as f64
    } else {
        let nf = n as f64;
        let z: f64 = rng.sample(StandardNormal);
        (nf * p + z * (nf * p * (1.0 - p)).sqrt()).clamp(0.0, nf)
    }
}

/// Number of failures before `k` successes of a Bernoulli(p) process.
fn negative_binomial<R: Rng>(rng: &mut R, k: u128, p: f64) -> f64 {
    if p >= 1.0 || k == 0 {
        return 0.0;
    }
    let q = 1.0 - p;
    if k <= 64 {
        let g = Geometric::new(p).expect("valid geometric");
        return (0..k as u64).map(|_| g.sample(rng) as f64).sum();
    }
    let kf = k as f64;
    if kf <= 1e7 {
        let lambda = Gamma::new(kf, q / p).expect("valid gamma").sample(rng);
        if lambda <= 0.0 {
            return 0.0;
        }
        if lambda < 1e12 {
            return Poisson::new(lambda).expect("valid poisson").sample(rng);
        }
    }
    let mean = kf * q / p;
    let sd = (kf * q).sqrt() / p;
    let z: f64 = rng.sample(StandardNormal);
    (mean + z * sd).max(0.0)
}

#[derive(Debug, Clone, Copy)]
struct PrepStage {
    success_prob: f64,
    attempt_cap: u64,
}

/// Copy access to a hidden state.
#[derive(Debug)]
pub struct CopySource {
    hidden: StateVector,
    hat: OnceCell<StateVector>,
    mode: OracleMode,
    rng: ChaCha8Rng,
    ledger: CopyLedger,
    /// Post-selection stages from this source back to the root.
    chain: Vec<PrepStage>,
    shot_constant: f64,
}

impl CopySource {
    pub fn new(hidden: StateVector, mode: OracleMode, seed: u64) -> Self {
        CopySource {
            hidden,
            hat: OnceCell::new(),
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            ledger: CopyLedger::default(),
            chain: Vec::new(),
            shot_constant: DEFAULT_SHOT_CONSTANT,
        }
    }

    pub fn with_shot_constant(mut self, c: f64) -> Self {
        self.shot_constant = c;
        self
    }

    pub fn n(&self) -> usize {
        self.hidden.n()
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn shot_constant(&self) -> f64 {
        self.shot_constant
    }

    pub fn ledger(&self) -> &CopyLedger {
        &self.ledger
    }

    /// Number of post-selection stages between this source and the root.
    pub fn depth(&self) -> usize {
        self.chain.len()
    }

    /// Hidden state, for evaluating outcomes. Learners must not call this.
    pub fn oracle_state(&self) -> &StateVector {
        &self.hidden
    }

    fn hat(&self) -> &StateVector {
        self.hat.get_or_init(|| self.hidden.walsh_hadamard())
    }

    /// Exact `|<chi_S|hidden>|^2`, for evaluation only.
    pub fn oracle_parity_weight(&self, label: ParityLabel) -> f64 {
        self.hat().amps()[label.index()].norm_sqr()
    }

    /// Seed for a dependent generator, drawn from this source's stream.
    pub fn fork_seed(&mut self) -> u64 {
        self.rng.random()
    }

    pub fn record_weak_learner_call(&mut self) {
        self.ledger.weak_learner_calls = self.ledger.weak_learner_calls.saturating_add(1);
    }

    /// Root copies needed to hold `k` copies of this source's state.
    fn acquire(&mut self, k: u128, k_f: f64) -> Result<(u128, f64)> {
        let (mut need, mut need_f) = (k, k_f);
        for i in 0..self.chain.len() {
            let stage = self.chain[i];
            let next = self.attempts_for(need, stage)?;
            need_f = if need == u128::MAX || next == u128::MAX {
                need_f / stage.success_prob
            } else if need > 0 {
                need_f * (next as f64 / need as f64)
            } else {
                0.0
            };
            need = next;
        }
        Ok((need, need_f))
    }

    fn attempts_for(&mut self, k: u128, stage: PrepStage) -> Result<u128> {
        let p = stage.success_prob;
        let fail = Error::PostSelectionFailure { success_prob: p, cap: stage.attempt_cap };
        match self.mode {
            OracleMode::Exact => {
                // tolerate rounding in p so that p = 1/2 costs exactly 2
                let per = (1.0 / p - 1e-9).ceil().max(1.0);
                if per > stage.attempt_cap as f64 {
                    return Err(fail);
                }
                Ok(k.saturating_mul(per as u128))
            }
            OracleMode::Sampled => {
                // probability that any of the k geometric waits exceeds the cap
                let q = (stage.attempt_cap as f64 * (-p).ln_1p()).exp();
                let p_fail = -((k as f64) * (-q).ln_1p()).exp_m1();
                if p_fail > 0.0 && self.rng.random::<f64>() < p_fail {
                    return Err(fail);
                }
                let extra = negative_binomial(&mut self.rng, k, p);
                Ok(k.saturating_add(f64_to_count(extra)))
            }
        }
    }

    fn consume(&mut self, what: CopyUse, k: u128, k_f: f64) -> Result<()> {
        let (root, root_f) = self.acquire(k, k_f)?;
        let chained = !self.chain.is_empty();
        self.ledger.charge(what, k, root, root_f.max(k_f), chained);
        Ok(())
    }

    fn check_accuracy(eps: f64, delta: f64) -> Result<()> {
        check_unit_open("eps", eps)?;
        check_unit_open("delta", delta)
    }

    /// Nominal shot count for accuracy `eps` and confidence `1 - delta`.
    pub fn shots(&self, eps: f64, delta: f64) -> u128 {
        nominal_shots(self.shot_constant, eps, delta)
    }

    /// SWAP-test estimate of `|<hidden|other>|^2` to within `eps` w.p. `1 - delta`.
    pub fn swap_test_estimate(&mut self, other: &StateVector, eps: f64, delta: f64) -> Result<f64> {
        Self::check_accuracy(eps, delta)?;
        let f = self.hidden.fidelity(other)?;
        self.swap_from_fidelity(f, eps, delta)
    }

    /// SWAP test against the parity state `|chi_S>`.
    pub fn swap_test_parity(&mut self, label: ParityLabel, eps: f64, delta: f64) -> Result<f64> {
        Self::check_accuracy(eps, delta)?;
        self.check_label(label)?;
        let f = self.hat().amps()[label.index()].norm_sqr();
        self.swap_from_fidelity(f, eps, delta)
    }

    /// SWAP test against `(|chi_a> + w |chi_b>) / sqrt(2)` for `a != b`.
    pub fn swap_test_parity_pair(
        &mut self,
        a: ParityLabel,
        b: ParityLabel,
        w: Complex64,
        eps: f64,
        delta: f64,
    ) -> Result<f64> {
        Self::check_accuracy(eps, delta)?;
        self.check_label(a)?;
        self.check_label(b)?;
        if a == b {
            return Err(Error::DuplicateLabel(a.to_string()));
        }
        let hat = self.hat().amps();
        let ov = (hat[a.index()] + w.conj() * hat[b.index()]) * std::f64::consts::FRAC_1_SQRT_2;
        self.swap_from_fidelity(ov.norm_sqr(), eps, delta)
    }

    fn check_label(&self, label: ParityLabel) -> Result<()> {
        if label.index() >= self.hidden.dim() {
            return Err(Error::InvalidParameter(format!("label {label} out of range")));
        }
        Ok(())
    }

    fn swap_from_fidelity(&mut self, f: f64, eps: f64, delta: f64) -> Result<f64> {
        let shots = self.shots(eps, delta);
        self.consume(CopyUse::SwapTest, shots, nominal_shots_f64(self.shot_constant, eps, delta))?;
        let f = f.clamp(0.0, 1.0);
        Ok(match self.mode {
            OracleMode::Exact => f,
            OracleMode::Sampled => {
                let hits = binomial(&mut self.rng, shots, (1.0 + f) / 2.0);
                (2.0 * hits / shots as f64 - 1.0).clamp(0.0, 1.0)
            }
        })
    }

    /// `shots` i.i.d. computational-basis (or Fourier-basis) outcomes.
    pub fn basis_sample(&mut self, shots: usize, fourier: bool) -> Result<Vec<usize>> {
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        self.consume(CopyUse::BasisSample, shots as u128, shots as f64)?;
        let probs = if fourier { self.hat().probabilities() } else { self.hidden.probabilities() };
        let dist =
            WeightedIndex::new(&probs).map_err(|e| Error::InvalidParameter(format!("sampling distribution: {e}")))?;
        Ok((0..shots).map(|_| dist.sample(&mut self.rng)).collect())
    }

    /// Histogram of `shots` outcomes as `(outcome, count)` pairs in index
    /// order, zero counts omitted.
    pub fn basis_sample_counts(&mut self, shots: u64, fourier: bool) -> Result<Vec<(usize, u64)>> {
        if shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        self.consume(CopyUse::BasisSample, shots as u128, shots as f64)?;
        let probs = if fourier { self.hat().probabilities() } else { self.hidden.probabilities() };
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        let mut left = shots;
        let mut mass: f64 = probs.iter().sum();
        let mut out = Vec::new();
        for (x, &p) in probs.iter().enumerate() {
            if left == 0 {
                break;
            }
            if p <= 0.0 {
                continue;
            }
            let c = if x == last || p >= mass {
                left
            } else {
                binomial(&mut self.rng, left as u128, (p / mass).min(1.0)) as u64
            };
            if c > 0 {
                out.push((x, c));
            }
            left -= c;
            mass -= p;
        }
        Ok(out)
    }

    /// Estimate of `alpha^2 = <hidden|(I - Lambda_span)|hidden>` from
    /// two-outcome projector measurements.
    pub fn povm_norm_estimate(&mut self, span: &ParitySpan, eps: f64, delta: f64) -> Result<f64> {
        Self::check_accuracy(eps, delta)?;
        let alpha_sq = self.residual_weight(span)?;
        let shots = self.shots(eps, delta);
        self.consume(CopyUse::NormEstimate, shots, nominal_shots_f64(self.shot_constant, eps, delta))?;
        Ok(match self.mode {
            OracleMode::Exact => alpha_sq,
            OracleMode::Sampled => binomial(&mut self.rng, shots, alpha_sq) / shots as f64,
        })
    }

    fn residual_weight(&self, span: &ParitySpan) -> Result<f64> {
        let hat = self.hat().amps();
        let mut in_span = vec![false; hat.len()];
        for l in span.labels() {
            self.check_label(*l)?;
            in_span[l.index()] = true;
        }
        let rest: f64 = hat.iter().zip(&in_span).filter(|(_, &inside)| !inside).map(|(a, _)| a.norm_sqr()).sum();
        Ok(rest.clamp(0.0, 1.0))
    }

    /// Exact `alpha^2` for the span, available only in exact mode.
    pub fn exact_residual_weight(&self, span: &ParitySpan) -> Option<f64> {
        match self.mode {
            OracleMode::Exact => self.residual_weight(span).ok(),
            OracleMode::Sampled => None,
        }
    }

    /// Source for the normalized residual `(I - Lambda_span) hidden / alpha`,
    /// obtained by post-selecting on the complement of the span.
    pub fn prepare_residual(&mut self, span: &ParitySpan, attempt_cap: u64) -> Result<CopySource> {
        let alpha_sq = self.residual_weight(span)?;
        if alpha_sq < DEGENERATE_FLOOR {
            return Err(Error::DegenerateResidual { alpha_sq });
        }
        let rep = self.hidden.project_with_transform(self.hat(), span)?;
        let residual = rep.residual.ok_or(Error::DegenerateResidual { alpha_sq })?;
        self.conditioned(residual, alpha_sq, attempt_cap)
    }

    /// Source whose copies are obtained from this one by a measurement that
    /// succeeds with `success_prob` and leaves `state` behind.
    pub fn conditioned(&mut self, state: StateVector, success_prob: f64, attempt_cap: u64) -> Result<CopySource> {
        if !(success_prob > 0.0 && success_prob <= 1.0) {
            return Err(Error::InvalidParameter(format!("success probability {success_prob}")));
        }
        if attempt_cap == 0 {
            return Err(Error::InvalidParameter("attempt cap must be at least 1".into()));
        }
        let mut chain = vec![PrepStage { success_prob, attempt_cap }];
        chain.extend_from_slice(&self.chain);
        Ok(CopySource {
            hidden: state,
            hat: OnceCell::new(),
            mode: self.mode,
            rng: ChaCha8Rng::seed_from_u64(self.rng.random()),
            ledger: CopyLedger::default(),
            chain,
            shot_constant: self.shot_constant,
        })
    }

    /// Root copies consumed by preparing `k` copies of this state, charged
    /// as basis samples. Returns the root-copy cost.
    pub fn prepare_copies(&mut self, k: u128) -> Result<u128> {
        let before = self.ledger.copies_consumed;
        self.consume(CopyUse::BasisSample, k, k as f64)?;
        Ok(self.ledger.copies_consumed - before)
    }

    /// Folds a derived source's charges into this ledger.
    pub fn absorb(&mut self, child: CopySource) {
        self.ledger.absorb(&child.ledger);
    }
}
