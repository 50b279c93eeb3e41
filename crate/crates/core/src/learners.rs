//! Strong learners assembled from the boosting loop, the depth-3 PAC
//! learner with sign rounding, and a junta learner that needs no boosting.

use serde::{Deserialize, Serialize};

use crate::access::{CopyLedger, CopySource};
use crate::boosting::{
    agnostic_boost, boost_with_config, learn_parameters, BoostResult, BoostingConfig, ParityDecomposition, StopReason,
};
use crate::error::{check_unit_open, Error, Result};
use crate::statevec::ParityLabel;
use crate::weaklearn::{
    DecisionTreeLearner, DegenerateThreshold, DnfLearner, MansourConstants, DEFAULT_SAMPLE_CONSTANT,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningOutcome {
    pub learner: String,
    pub decomposition: ParityDecomposition,
    /// Exact `|<phi_hat|psi>|^2` against the hidden state. Evaluation only.
    pub achieved_fidelity: f64,
    pub opt_lower_bound: Option<f64>,
    pub kappa: usize,
    pub stop_reason: Option<StopReason>,
    pub ledger: CopyLedger,
    pub log2_s_star: Option<f64>,
    pub warning: Option<String>,
}

impl LearningOutcome {
    fn from_boost(learner: String, src: &CopySource, res: BoostResult) -> Result<Self> {
        let achieved_fidelity = res.decomposition.fidelity_with(src.oracle_state())?;
        Ok(LearningOutcome {
            learner,
            decomposition: res.decomposition,
            achieved_fidelity,
            opt_lower_bound: None,
            kappa: res.kappa,
            stop_reason: Some(res.stop_reason),
            ledger: res.ledger,
            log2_s_star: None,
            warning: None,
        })
    }

    pub fn with_opt_lower_bound(mut self, opt: f64) -> Self {
        self.opt_lower_bound = Some(opt);
        self
    }
}

/// Agnostic learner for size-`s` decision trees.
pub fn agnostic_learn_dt(src: &mut CopySource, s: usize, eps: f64, delta: f64) -> Result<LearningOutcome> {
    if s == 0 {
        return Err(Error::InvalidParameter("tree size must be at least 1".into()));
    }
    let wal = DecisionTreeLearner { size: s };
    let res = agnostic_boost(src, &wal, eps, delta)?;
    LearningOutcome::from_boost(format!("dt(s={s})"), src, res)
}

/// Tree size that covers every `k`-junta.
pub fn junta_tree_size(k: usize) -> usize {
    (1usize << (k + 1)) - 1
}

/// Agnostic learner for `k`-juntas, through the tree learner.
pub fn agnostic_learn_junta(src: &mut CopySource, k: usize, eps: f64, delta: f64) -> Result<LearningOutcome> {
    if k > src.n() {
        return Err(Error::InvalidParameter(format!("junta arity {k} exceeds n={}", src.n())));
    }
    let mut out = agnostic_learn_dt(src, junta_tree_size(k), eps, delta)?;
    out.learner = format!("junta(k={k})");
    Ok(out)
}

/// Agnostic learner for `s`-term DNFs.
pub fn agnostic_learn_dnf(
    src: &mut CopySource,
    s: usize,
    eps: f64,
    delta: f64,
    mansour: MansourConstants,
    on_degenerate: DegenerateThreshold,
) -> Result<LearningOutcome> {
    let wal = DnfLearner { size: s, mansour, on_degenerate, n: Some(src.n()) };
    let cfg = BoostingConfig::new(eps, delta, &wal)?;
    let log2 = wal.log2_s_star(cfg.eps_s(), src.n())?;
    let res = boost_with_config(src, &wal, &cfg)?;
    let mut out = LearningOutcome::from_boost(format!("dnf(s={s})"), src, res)?;
    out.log2_s_star = Some(log2);
    Ok(out)
}

/// Boolean hypothesis from the depth-3 learner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PacOutcome {
    /// `g(x)` for every input, as Boolean values (true = -1).
    pub hypothesis: Vec<bool>,
    pub decomposition: ParityDecomposition,
    pub kappa: usize,
    pub stop_reason: Option<StopReason>,
    pub eta: f64,
    pub log2_s_star: f64,
    pub ledger: CopyLedger,
}

impl PacOutcome {
    /// Fraction of inputs where `g` equals `f`.
    pub fn agreement(&self, f: &[bool]) -> f64 {
        let same = self.hypothesis.iter().zip(f).filter(|(g, f)| g == f).count();
        same as f64 / f.len() as f64
    }

    /// Agreement with `f` or its complement, whichever is larger. The phase
    /// states of `f` and `not f` differ by a global sign, so copies alone
    /// cannot separate them.
    pub fn agreement_mod_complement(&self, f: &[bool]) -> f64 {
        let a = self.agreement(f);
        a.max(1.0 - a)
    }
}

/// `g(x) = sign(Re h(x))` with `h = sum_i beta_i chi_i`, as Boolean values.
/// Zero rounds to `+1`, that is `false`.
pub fn round_to_boolean(dec: &ParityDecomposition) -> Vec<bool> {
    let mut h = vec![0.0; 1usize << dec.n];
    for (l, c) in dec.labels.iter().zip(&dec.coefficients) {
        for (x, v) in h.iter_mut().enumerate() {
            *v += c.re * l.chi(x);
        }
    }
    h.into_iter().map(|v| v < 0.0).collect()
}

/// PAC learner for threshold-of-DNF circuits with fan-in `m` and DNF size `s`
/// under the uniform distribution, given copies of the phase state.
pub fn pac_learn_depth3(
    src: &mut CopySource,
    s: usize,
    m: usize,
    eps: f64,
    delta: f64,
    mansour: MansourConstants,
) -> Result<PacOutcome> {
    if s == 0 || m == 0 {
        return Err(Error::InvalidParameter("DNF size and fan-in must be at least 1".into()));
    }
    check_unit_open("delta", delta)?;
    let n = src.n();
    if eps >= 1.0 {
        return Ok(PacOutcome {
            hypothesis: vec![false; 1 << n],
            decomposition: ParityDecomposition::single(n, ParityLabel(0)),
            kappa: 0,
            stop_reason: None,
            eta: 0.0,
            log2_s_star: 0.0,
            ledger: src.ledger().clone(),
        });
    }
    check_unit_open("eps", eps)?;
    let wal = DnfLearner::capped(s, mansour, n);
    let wal_tau = eps / (36 * m * m) as f64;
    let log2_s_star = wal.log2_s_star(wal_tau, n)?;
    let eta = wal_tau / log2_s_star.exp2();
    let cfg = BoostingConfig::depth3(eps, delta, m, eta)?;
    let res = boost_with_config(src, &wal, &cfg)?;
    Ok(PacOutcome {
        hypothesis: round_to_boolean(&res.decomposition),
        decomposition: res.decomposition,
        kappa: res.kappa,
        stop_reason: Some(res.stop_reason),
        eta,
        log2_s_star,
        ledger: res.ledger,
    })
}

/// Fourier strings kept by the no-boost junta learner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmplitudeSieve {
    pub eps1: f64,
    pub eps2: f64,
    pub samples: u64,
    /// Distinct sampled strings, ascending.
    pub sampled: Vec<ParityLabel>,
    /// Estimated `|alpha_y|^2`, aligned with `sampled`.
    pub estimates: Vec<f64>,
    /// Strings whose estimate reached `3 eps2 / 4`, heaviest first.
    pub survivors: Vec<ParityLabel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoBoostOutcome {
    pub outcome: LearningOutcome,
    pub sieve: AmplitudeSieve,
}

/// Agnostic `k`-junta learner: Fourier sampling, an amplitude sieve, and
/// one round of coefficient estimation.
pub fn agnostic_learn_junta_noboost(src: &mut CopySource, k: usize, eps: f64, delta: f64) -> Result<NoBoostOutcome> {
    check_unit_open("eps", eps)?;
    check_unit_open("delta", delta)?;
    if k > src.n() {
        return Err(Error::InvalidParameter(format!("junta arity {k} exceeds n={}", src.n())));
    }
    let four_k = (4.0f64).powi(k as i32);
    let eps1 = eps * eps / 16.0;
    let eps2 = eps1 / four_k;
    let m = (DEFAULT_SAMPLE_CONSTANT * four_k / eps1 * (k as f64 + (1.0 / delta).ln())).ceil();
    if !(m < 1e15) {
        return Err(Error::Configuration(format!("sample count {m:e} is out of range")));
    }
    let samples = m as u64;
    let counts = src.basis_sample_counts(samples, true)?;
    let sampled: Vec<ParityLabel> = counts.iter().map(|&(y, _)| ParityLabel::new(y)).collect();
    let each = delta / (3 * sampled.len().max(1)) as f64;
    let estimates = sampled.iter().map(|&y| src.swap_test_parity(y, eps2 / 4.0, each)).collect::<Result<Vec<_>>>()?;
    let mut kept: Vec<(f64, ParityLabel)> =
        estimates.iter().zip(&sampled).filter(|(&e, _)| e >= 0.75 * eps2).map(|(&e, &y)| (e, y)).collect();
    kept.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let survivors: Vec<ParityLabel> = kept.iter().map(|&(_, y)| y).collect();
    let sieve = AmplitudeSieve { eps1, eps2, samples, sampled, estimates, survivors };

    let n = src.n();
    let (decomposition, warning) = if sieve.survivors.is_empty() {
        let best = sieve
            .estimates
            .iter()
            .zip(&sieve.sampled)
            .max_by(|a, b| a.0.total_cmp(b.0).then(b.1.cmp(a.1)))
            .map(|(_, &y)| y)
            .unwrap_or(ParityLabel(0));
        (ParityDecomposition::single(n, best), Some("no string passed the sieve".to_string()))
    } else {
        let mu = eps1 / (2.0 * four_k);
        let (dec, _) = learn_parameters(src, &sieve.survivors, 2.0 * eps1.sqrt(), mu, delta / 3.0)?;
        (dec, None)
    };
    let achieved_fidelity = decomposition.fidelity_with(src.oracle_state())?;
    let outcome = LearningOutcome {
        learner: format!("junta-noboost(k={k})"),
        kappa: decomposition.len(),
        decomposition,
        achieved_fidelity,
        opt_lower_bound: None,
        stop_reason: None,
        ledger: src.ledger().clone(),
        log2_s_star: None,
        warning,
    };
    Ok(NoBoostOutcome { outcome, sieve })
}

/// Heaviest-first prefix of the strings supported on `support_mask` whose
/// Fourier weight reaches `tau - eps`, where `tau` is the total weight on
/// those strings. `weights[x] = |alpha_x|^2`.
pub fn junta_core_set(weights: &[f64], support_mask: usize, eps: f64) -> Vec<usize> {
    let mut block: Vec<usize> = (0..weights.len()).filter(|&x| x & !support_mask == 0).collect();
    block.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let tau: f64 = block.iter().map(|&x| weights[x]).sum();
    let mut acc = 0.0;
    let mut out = Vec::new();
    for x in block {
        if acc >= tau - eps {
            break;
        }
        acc += weights[x];
        out.push(x);
    }
    out
}
