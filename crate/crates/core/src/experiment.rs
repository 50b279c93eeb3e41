//! Seeded experiment runs over planted instances.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::access::{CopyLedger, CopySource, OracleMode};
use crate::boosting::StopReason;
use crate::concepts::{random_concept, BooleanConcept, ConceptSpec, DtVariableRule};
use crate::error::{check_unit_half_open, check_unit_open, Error, Result};
use crate::learners::{
    agnostic_learn_dnf, agnostic_learn_dt, agnostic_learn_junta, agnostic_learn_junta_noboost, pac_learn_depth3,
};
use crate::statevec::{check_qubits, StateVector};
use crate::weaklearn::{agnostic_parity_learner, DegenerateThreshold, MansourConstants};

pub const SCHEMA_VERSION: u32 = 1;

const JUNK_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const SOURCE_STREAM: u64 = 0xd1b5_4a32_d192_ed03;

/// `sqrt(opt_lb) |phi_c> + sqrt(1 - opt_lb) |junk>`, with the junk a seeded
/// random state orthogonal to `|phi_c>`.
pub fn make_corrupted_state(concept: &BooleanConcept, opt_lb: f64, junk_seed: u64) -> Result<StateVector> {
    check_unit_half_open("opt_lb", opt_lb)?;
    let phi = concept.phase_state()?;
    if opt_lb == 1.0 {
        return Ok(phi);
    }
    corrupt(&phi, opt_lb, junk_seed)
}

/// Same construction for an arbitrary unit state.
pub fn corrupt(phi: &StateVector, opt_lb: f64, junk_seed: u64) -> Result<StateVector> {
    check_unit_half_open("opt_lb", opt_lb)?;
    let mut rng = ChaCha8Rng::seed_from_u64(junk_seed);
    let junk = StateVector::random(phi.n(), &mut rng)?;
    let ov = phi.overlap(&junk)?;
    let perp: Vec<Complex64> = junk.amps().iter().zip(phi.amps()).map(|(j, p)| j - ov * p).collect();
    let perp = StateVector::normalized(phi.n(), perp)?;
    let (a, b) = (opt_lb.sqrt(), (1.0 - opt_lb).sqrt());
    let amps = phi.amps().iter().zip(perp.amps()).map(|(p, q)| p * a + q * b).collect();
    StateVector::normalized(phi.n(), amps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Task {
    Parity,
    /// Learner for trees of size `size`; the planted tree has the largest
    /// odd size not above it.
    Dt {
        size: usize,
    },
    Junta {
        k: usize,
    },
    JuntaNoboost {
        k: usize,
    },
    Dnf {
        terms: usize,
        width: usize,
    },
    Depth3 {
        m: usize,
        threshold: usize,
        terms: usize,
        width: usize,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Parity => "parity",
            Task::Dt { .. } => "dt",
            Task::Junta { .. } => "junta",
            Task::JuntaNoboost { .. } => "junta-noboost",
            Task::Dnf { .. } => "dnf",
            Task::Depth3 { .. } => "depth3",
        }
    }

    fn concept_spec(&self, n: usize) -> ConceptSpec {
        match *self {
            Task::Parity => ConceptSpec::Parity { n },
            Task::Dt { size } => ConceptSpec::DecisionTree {
                n,
                size: if size % 2 == 0 { size - 1 } else { size },
                rule: DtVariableRule::Uniform,
            },
            Task::Junta { k } | Task::JuntaNoboost { k } => ConceptSpec::Junta { n, k },
            Task::Dnf { terms, width } => ConceptSpec::Dnf { n, terms, width },
            Task::Depth3 { m, threshold, terms, width } => ConceptSpec::Threshold { n, m, threshold, terms, width },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub task: Task,
    pub opt_lb: f64,
    pub eps: f64,
    pub delta: f64,
    pub mode: OracleMode,
    pub seeds: Vec<u64>,
    pub mansour: MansourConstants,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_qubits(self.n)?;
        check_unit_open("eps", self.eps)?;
        check_unit_open("delta", self.delta)?;
        check_unit_half_open("opt_lb", self.opt_lb)?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("no seeds given".into()));
        }
        if !(self.mansour.c1 > 0.0 && self.mansour.c2 > 0.0) {
            return Err(Error::InvalidParameter("Mansour constants must be positive".into()));
        }
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self.task {
            Task::Dt { size: 0 } => bad("tree size must be at least 1".into()),
            Task::Junta { k } | Task::JuntaNoboost { k } if k > self.n => {
                bad(format!("junta arity {k} exceeds n={}", self.n))
            }
            Task::Dnf { terms, width } if terms == 0 || width == 0 || width > self.n => {
                bad("DNF needs terms >= 1 and 1 <= width <= n".into())
            }
            Task::Depth3 { m, threshold, terms, width }
                if m == 0 || threshold == 0 || threshold > m || terms == 0 || width == 0 || width > self.n =>
            {
                bad("depth-3 needs 1 <= threshold <= m, terms >= 1, 1 <= width <= n".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub ok: bool,
    pub error: Option<String>,
    pub concept: Option<String>,
    pub achieved_fidelity: Option<f64>,
    pub pac_agreement: Option<f64>,
    pub pac_agreement_mod_complement: Option<f64>,
    pub success: bool,
    pub kappa: Option<usize>,
    pub stop_reason: Option<StopReason>,
    pub warning: Option<String>,
    pub ledger: Option<CopyLedger>,
    pub wallclock_ms: f64,
}

struct RunOutput {
    achieved: Option<f64>,
    pac: Option<(f64, f64)>,
    kappa: Option<usize>,
    stop_reason: Option<StopReason>,
    warning: Option<String>,
    ledger: CopyLedger,
}

fn run_one(cfg: &ExperimentConfig, concept: &BooleanConcept, seed: u64) -> Result<RunOutput> {
    let opt_lb = if matches!(cfg.task, Task::Depth3 { .. }) { 1.0 } else { cfg.opt_lb };
    let psi = make_corrupted_state(concept, opt_lb, seed ^ JUNK_STREAM)?;
    let mut src = CopySource::new(psi, cfg.mode, seed ^ SOURCE_STREAM);
    let (eps, delta) = (cfg.eps, cfg.delta);
    let boosted = |o: crate::learners::LearningOutcome| RunOutput {
        achieved: Some(o.achieved_fidelity),
        pac: None,
        kappa: Some(o.kappa),
        stop_reason: o.stop_reason,
        warning: o.warning,
        ledger: o.ledger,
    };
    Ok(match cfg.task {
        Task::Parity => {
            let label = agnostic_parity_learner(&mut src, cfg.opt_lb.max(eps), eps, delta)?;
            RunOutput {
                achieved: Some(src.oracle_parity_weight(label)),
                pac: None,
                kappa: None,
                stop_reason: None,
                warning: None,
                ledger: src.ledger().clone(),
            }
        }
        Task::Dt { size } => boosted(agnostic_learn_dt(&mut src, size, eps, delta)?),
        Task::Junta { k } => boosted(agnostic_learn_junta(&mut src, k, eps, delta)?),
        Task::JuntaNoboost { k } => boosted(agnostic_learn_junta_noboost(&mut src, k, eps, delta)?.outcome),
        Task::Dnf { terms, .. } => {
            boosted(agnostic_learn_dnf(&mut src, terms, eps, delta, cfg.mansour, DegenerateThreshold::CapAtDimension)?)
        }
        Task::Depth3 { m, terms, .. } => {
            let out = pac_learn_depth3(&mut src, terms, m, eps, delta, cfg.mansour)?;
            let table = concept.truth_table()?;
            RunOutput {
                achieved: None,
                pac: Some((out.agreement(&table), out.agreement_mod_complement(&table))),
                kappa: Some(out.kappa),
                stop_reason: out.stop_reason,
                warning: None,
                ledger: out.ledger,
            }
        }
    })
}

/// One record for `seed`; failures are recorded, not returned.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> ResultRecord {
    let start = Instant::now();
    let concept = random_concept(&cfg.task.concept_spec(cfg.n), seed);
    let run = concept.as_ref().map_err(Error::clone).and_then(|c| run_one(cfg, c, seed));
    let mut rec = ResultRecord {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        seed,
        ok: run.is_ok(),
        error: None,
        concept: concept.as_ref().ok().map(|c| c.to_string()),
        achieved_fidelity: None,
        pac_agreement: None,
        pac_agreement_mod_complement: None,
        success: false,
        kappa: None,
        stop_reason: None,
        warning: None,
        ledger: None,
        wallclock_ms: 0.0,
    };
    match run {
        Ok(out) => {
            rec.achieved_fidelity = out.achieved;
            rec.success = match (out.achieved, out.pac) {
                (Some(f), _) => f >= cfg.opt_lb - cfg.eps,
                (None, Some((_, m))) => m >= 1.0 - cfg.eps,
                _ => false,
            };
            if let Some((raw, m)) = out.pac {
                rec.pac_agreement = Some(raw);
                rec.pac_agreement_mod_complement = Some(m);
            }
            rec.kappa = out.kappa;
            rec.stop_reason = out.stop_reason;
            rec.warning = out.warning;
            rec.ledger = Some(out.ledger);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec.wallclock_ms = start.elapsed().as_secs_f64() * 1e3;
    rec
}

/// Runs every seed in parallel; records come back in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    Ok(cfg.seeds.par_iter().map(|&s| run_seed(cfg, s)).collect())
}

pub fn write_jsonl<W: Write>(records: &[ResultRecord], mut w: W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub successes: usize,
    pub errors: usize,
    pub success_rate: f64,
    pub mean_copies: f64,
    pub mean_kappa: Option<f64>,
}

impl Summary {
    pub fn of(records: &[ResultRecord]) -> Self {
        let runs = records.len();
        let successes = records.iter().filter(|r| r.success).count();
        let errors = records.iter().filter(|r| !r.ok).count();
        let ok: Vec<&ResultRecord> = records.iter().filter(|r| r.ok).collect();
        let mean = |v: Vec<f64>| if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) };
        let mean_copies =
            mean(ok.iter().filter_map(|r| r.ledger.as_ref()).map(|l| l.copies_estimate).collect()).unwrap_or(0.0);
        let mean_kappa = mean(ok.iter().filter_map(|r| r.kappa).map(|k| k as f64).collect());
        Summary {
            runs,
            successes,
            errors,
            success_rate: if runs == 0 { 0.0 } else { successes as f64 / runs as f64 },
            mean_copies,
            mean_kappa,
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "runs {}  success {}/{} ({:.1}%)  errors {}  mean copies {:.3e}",
            self.runs,
            self.successes,
            self.runs,
            100.0 * self.success_rate,
            self.errors,
            self.mean_copies
        )?;
        if let Some(k) = self.mean_kappa {
            write!(f, "  mean kappa {k:.1}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(task: Task, seeds: std::ops::Range<u64>) -> ExperimentConfig {
        ExperimentConfig {
            n: 6,
            task,
            opt_lb: 0.9,
            eps: 0.1,
            delta: 0.1,
            mode: OracleMode::Sampled,
            seeds: seeds.collect(),
            mansour: MansourConstants::default(),
        }
    }

    #[test]
    fn corrupted_state_has_planted_fidelity() {
        let c = random_concept(&ConceptSpec::Junta { n: 7, k: 3 }, 4).unwrap();
        let phi = c.phase_state().unwrap();
        assert_eq!(make_corrupted_state(&c, 1.0, 0).unwrap(), phi);
        for w in [0.8, 0.5, 0.1] {
            let psi = make_corrupted_state(&c, w, 17).unwrap();
            assert!((psi.fidelity(&phi).unwrap() - w).abs() < 1e-9);
            assert_eq!(psi, make_corrupted_state(&c, w, 17).unwrap());
        }
        assert!(make_corrupted_state(&c, 0.0, 1).is_err());
    }

    #[test]
    fn parity_batch() {
        let recs = run_experiment(&cfg(Task::Parity, 0..50)).unwrap();
        assert_eq!(recs.len(), 50);
        let s = Summary::of(&recs);
        assert_eq!(s.errors, 0);
        assert!(s.to_string().contains("success"));
    }

    #[test]
    fn rerun_is_identical_except_wallclock() {
        let c = cfg(Task::Junta { k: 2 }, 0..6);
        let strip = |mut v: Vec<ResultRecord>| {
            v.iter_mut().for_each(|r| r.wallclock_ms = 0.0);
            let mut buf = Vec::new();
            write_jsonl(&v, &mut buf).unwrap();
            buf
        };
        assert_eq!(strip(run_experiment(&c).unwrap()), strip(run_experiment(&c).unwrap()));
    }

    #[test]
    fn validation_happens_first() {
        let mut c = cfg(Task::Parity, 0..3);
        c.eps = 1.5;
        assert!(matches!(run_experiment(&c), Err(Error::InvalidParameter(_))));
        let c = cfg(Task::Junta { k: 9 }, 0..3);
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn even_tree_size_and_depth3_records() {
        // even tree sizes are planted one smaller
        let mut c = cfg(Task::Dt { size: 2 }, 0..2);
        c.n = 4;
        let recs = run_experiment(&c).unwrap();
        assert!(recs.iter().all(|r| r.ok));
        let mut c = cfg(Task::Depth3 { m: 2, threshold: 1, terms: 2, width: 2 }, 0..2);
        c.n = 5;
        let recs = run_experiment(&c).unwrap();
        assert!(recs.iter().all(|r| r.pac_agreement.is_some()));
    }

    #[test]
    fn records_round_trip() {
        let recs = run_experiment(&cfg(Task::Dt { size: 3 }, 0..2)).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for (line, r) in text.lines().zip(&recs) {
            let back: ResultRecord = serde_json::from_str(line).unwrap();
            assert_eq!(serde_json::to_string(&back).unwrap(), line);
            assert_eq!(back.seed, r.seed);
            assert_eq!(back.schema_version, SCHEMA_VERSION);
        }
    }
}
