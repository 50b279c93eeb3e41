//! Weak agnostic learners with parity-state outputs.
//!
//! A weak learner for a class promises: whenever the hidden state has
//! fidelity at least `tau` with some concept of the class, it returns a
//! parity whose squared overlap with the state is at least `eta(tau)`.

use serde::{Deserialize, Serialize};

use crate::access::CopySource;
use crate::error::{check_unit_open, Error, Result};
use crate::statevec::ParityLabel;

/// Constant `c` in the Fourier sample count `ceil(c / tau * ln(2/delta))`.
pub const DEFAULT_SAMPLE_CONSTANT: f64 = 2.0;

/// `eta(tau) = eta1 * tau^eta2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Promise {
    pub eta1: f64,
    pub eta2: f64,
}

impl Promise {
    pub fn eta(&self, tau: f64) -> f64 {
        self.eta1 * tau.powf(self.eta2)
    }
}

pub trait WeakLearner {
    fn name(&self) -> String;

    /// Exponent `eta2` of the promise.
    fn exponent(&self) -> f64;

    /// Guaranteed squared overlap of the output when the class fidelity is
    /// at least `tau`. Must be increasing in `tau`.
    fn eta(&self, tau: f64) -> f64;

    fn learn(&self, src: &mut CopySource, tau: f64, delta: f64) -> Result<ParityLabel>;
}

/// Distinct Fourier-sampled masks, ascending.
fn fourier_candidates(src: &mut CopySource, tau: f64, delta: f64) -> Result<Vec<ParityLabel>> {
    let t = (DEFAULT_SAMPLE_CONSTANT / tau * (2.0 / delta).ln()).ceil();
    let t = if t >= u64::MAX as f64 { u64::MAX } else { t.max(1.0) as u64 };
    let counts = src.basis_sample_counts(t, true)?;
    Ok(counts.into_iter().map(|(s, _)| ParityLabel::new(s)).collect())
}

/// Proper agnostic parity learner.
///
/// Draws `ceil(2/tau * ln(2/delta))` Fourier samples, SWAP-tests every
/// distinct sample to `eps/2` and returns the best one (smaller mask on
/// ties). If some parity has squared overlap at least `tau`, the output has
/// squared overlap at least `tau - eps` with probability `1 - delta`.
pub fn agnostic_parity_learner(src: &mut CopySource, tau: f64, eps: f64, delta: f64) -> Result<ParityLabel> {
    if !(eps > 0.0 && eps <= tau && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < eps <= tau <= 1, got eps={eps}, tau={tau}")));
    }
    check_unit_open("delta", delta)?;
    src.record_weak_learner_call();
    let candidates = fourier_candidates(src, tau, delta / 2.0)?;
    let each = delta / (2.0 * candidates.len() as f64);
    let mut best = (f64::NEG_INFINITY, candidates[0]);
    for &s in &candidates {
        let est = src.swap_test_parity(s, eps / 2.0, each)?;
        if est > best.0 {
            best = (est, s);
        }
    }
    Ok(best.1)
}

/// The parity learner as a weak learner for parities: threshold `tau`,
/// accuracy `tau/2`, promise `eta(tau) = tau/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParityLearner;

impl WeakLearner for ParityLearner {
    fn name(&self) -> String {
        "parity".into()
    }

    fn exponent(&self) -> f64 {
        1.0
    }

    fn eta(&self, tau: f64) -> f64 {
        tau / 2.0
    }

    fn learn(&self, src: &mut CopySource, tau: f64, delta: f64) -> Result<ParityLabel> {
        agnostic_parity_learner(src, tau, tau / 2.0, delta)
    }
}

/// Weak learner for size-`s` decision trees.
///
/// A tree of size `s` has Fourier l1 norm at most `s`, so fidelity `tau`
/// with a tree forces some parity to have squared overlap at least
/// `tau / s^2`. Runs the parity learner at that threshold with accuracy
/// `tau / (2 s^2)`.
pub fn wal_decision_tree(src: &mut CopySource, s: usize, tau: f64, delta: f64) -> Result<ParityLabel> {
    if s == 0 {
        return Err(Error::InvalidParameter("tree size must be at least 1".into()));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must lie in (0, 1]")));
    }
    let s2 = (s * s) as f64;
    agnostic_parity_learner(src, tau / s2, tau / (2.0 * s2), delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionTreeLearner {
    pub size: usize,
}

impl DecisionTreeLearner {
    pub fn promise(&self) -> Promise {
        Promise { eta1: 1.0 / (2.0 * (self.size * self.size) as f64), eta2: 1.0 }
    }
}

impl WeakLearner for DecisionTreeLearner {
    fn name(&self) -> String {
        format!("dt(s={})", self.size)
    }

    fn exponent(&self) -> f64 {
        1.0
    }

    fn eta(&self, tau: f64) -> f64 {
        self.promise().eta(tau)
    }

    fn learn(&self, src: &mut CopySource, tau: f64, delta: f64) -> Result<ParityLabel> {
        wal_decision_tree(src, self.size, tau, delta)
    }
}

/// Constants in the DNF concentration exponent
/// `s* = (s/tau)^{c1 * log2 log2(max(s/tau, 4)) * log2(c2/tau)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MansourConstants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for MansourConstants {
    fn default() -> Self {
        MansourConstants { c1: 1.0, c2: 8.0 }
    }
}

/// `log2` of the number of Fourier coefficients that capture all but
/// `gamma` of an `s`-term DNF's mass, per the concentration bound.
pub fn mansour_log2_budget(s: usize, gamma: f64, m: MansourConstants) -> f64 {
    let r = s as f64 / gamma;
    let loglog = r.max(4.0).log2().log2();
    let e = m.c1 * loglog * (m.c2 / gamma).log2() * r.log2();
    e.max(0.0)
}

/// `s*(tau)` for the weak DNF learner, as `(log2 s*, s*)`.
pub fn dnf_s_star(s: usize, tau: f64, m: MansourConstants) -> (f64, f64) {
    let l = mansour_log2_budget(s, tau, m);
    (l, l.exp2())
}

/// Weak learner for `s`-term DNFs: the parity learner at threshold
/// `tau / s*` with accuracy `tau / (2 s*)`.
///
/// Fails with [`Error::ThresholdDegenerate`] when `s* > 2^n`.
pub fn wal_dnf(src: &mut CopySource, s: usize, tau: f64, delta: f64, mansour: MansourConstants) -> Result<ParityLabel> {
    DnfLearner::new(s, mansour).learn(src, tau, delta)
}

/// What the DNF learner does when `s*` exceeds the dimension `2^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DegenerateThreshold {
    /// Report [`Error::ThresholdDegenerate`].
    #[default]
    Fail,
    /// Replace `s*` by `2^n`. Valid because every state has squared overlap
    /// at least `2^-n` with some parity.
    CapAtDimension,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnfLearner {
    pub size: usize,
    pub mansour: MansourConstants,
    pub on_degenerate: DegenerateThreshold,
    /// Qubit count used by the `CapAtDimension` rule in `eta`.
    pub n: Option<usize>,
}

impl DnfLearner {
    pub fn new(size: usize, mansour: MansourConstants) -> Self {
        DnfLearner { size, mansour, on_degenerate: DegenerateThreshold::Fail, n: None }
    }

    /// Learner that caps `s*` at `2^n` instead of failing.
    pub fn capped(size: usize, mansour: MansourConstants, n: usize) -> Self {
        DnfLearner { size, mansour, on_degenerate: DegenerateThreshold::CapAtDimension, n: Some(n) }
    }

    /// Effective `log2 s*` for a source with `n` qubits.
    pub fn log2_s_star(&self, tau: f64, n: usize) -> Result<f64> {
        let (l, _) = dnf_s_star(self.size, tau, self.mansour);
        if l > n as f64 {
            return match self.on_degenerate {
                DegenerateThreshold::Fail => Err(Error::ThresholdDegenerate { log2_s_star: l, n }),
                DegenerateThreshold::CapAtDimension => Ok(n as f64),
            };
        }
        Ok(l)
    }
}

impl WeakLearner for DnfLearner {
    fn name(&self) -> String {
        format!("dnf(s={}, c1={}, c2={})", self.size, self.mansour.c1, self.mansour.c2)
    }

    fn exponent(&self) -> f64 {
        1.0
    }

    fn eta(&self, tau: f64) -> f64 {
        let (mut l, _) = dnf_s_star(self.size, tau, self.mansour);
        if let (DegenerateThreshold::CapAtDimension, Some(n)) = (self.on_degenerate, self.n) {
            l = l.min(n as f64);
        }
        tau / (2.0 * l.exp2())
    }

    fn learn(&self, src: &mut CopySource, tau: f64, delta: f64) -> Result<ParityLabel> {
        if self.size == 0 {
            return Err(Error::InvalidParameter("DNF size must be at least 1".into()));
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidParameter(format!("tau = {tau} must lie in (0, 1]")));
        }
        let s_star = self.log2_s_star(tau, src.n())?.exp2();
        agnostic_parity_learner(src, tau / s_star, tau / (2.0 * s_star), delta)
    }
}
