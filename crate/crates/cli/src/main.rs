use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use phaseboost::analysis::{
    contiguous_ranks, hard_dnf_cut, hard_dnf_instance, product_distribution, schmidt_rank, verify_discriminator,
    DEFAULT_RANK_TOL,
};
use phaseboost::concepts::{random_concept, ConceptSpec, DtVariableRule};
use phaseboost::distributional::{distributional_learn, DistributionalConfig, LabelFunction};
use phaseboost::experiment::{make_corrupted_state, run_experiment, write_jsonl, Summary};
use phaseboost::learners::agnostic_learn_junta;
use phaseboost::weaklearn::{DecisionTreeLearner, DnfLearner, ParityLearner};
use phaseboost::{
    agnostic_boost, BooleanConcept, BoostingConfig, CopySource, Error, ExperimentConfig, MansourConstants, OracleMode,
    StateVector, Task, WeakLearner,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "phaseboost", version, about = "Agnostic boosting experiments on simulated phase states")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the booster with one weak learner on corrupted random concepts.
    Boost {
        #[arg(long, value_enum, default_value_t = WeakKind::Dt)]
        weak: WeakKind,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Strong agnostic learners, one JSONL record per seed.
    Learn {
        #[arg(value_enum)]
        class: LearnClass,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// PAC learning of depth-3 threshold circuits.
    Pac {
        #[arg(value_enum)]
        target: PacTarget,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Schmidt ranks across contiguous cuts, as CSV.
    Bonddim {
        /// Use the hard DNF instance with this many terms instead of a concept.
        #[arg(long)]
        hard_dnf: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[command(flatten)]
        concept: ConceptArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Brute-force discriminator check on random threshold circuits.
    Discriminator {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Distributional learning of noisy juntas through the state reduction.
    Distrib {
        /// Probability that a label is flipped.
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Largest Fourier coefficients of a concept, as CSV.
    Spectrum {
        #[arg(long, default_value_t = 16)]
        top: usize,
        #[command(flatten)]
        concept: ConceptArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Empirical failure rate of an estimator, as CSV.
    Calibrate {
        #[arg(value_enum)]
        target: CalibrateTarget,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
        overlaps: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// `a..b` (half-open) or a comma-separated list.
    #[arg(long)]
    seeds: Option<SeedList>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = OracleMode::Exact)]
    mode: OracleMode,
    #[arg(long, default_value_t = 1.0)]
    opt_lb: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    mansour_c1: f64,
    #[arg(long, default_value_t = 8.0)]
    mansour_c2: f64,
}

impl Common {
    fn seeds(&self) -> Vec<u64> {
        match (&self.seeds, self.seed) {
            (Some(s), _) => s.0.clone(),
            (None, Some(s)) => vec![s],
            (None, None) => vec![0],
        }
    }

    fn mansour(&self) -> MansourConstants {
        MansourConstants { c1: self.mansour_c1, c2: self.mansour_c2 }
    }

    fn sink(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    /// Summary goes to stdout when results go to a file, else to stderr.
    fn summary(&self, line: &str) {
        if self.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

#[derive(Args, Clone, Copy)]
struct ShapeArgs {
    /// Decision-tree size.
    #[arg(long, default_value_t = 8)]
    size: usize,
    /// Junta arity.
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    terms: usize,
    #[arg(long, default_value_t = 3)]
    width: usize,
    /// Fan-in of the threshold gate.
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    threshold: usize,
}

#[derive(Args)]
struct ConceptArgs {
    /// A concept in corpus syntax, e.g. `parity n=4 mask=5`.
    #[arg(long, conflicts_with = "class")]
    concept: Option<String>,
    #[arg(long, value_enum, default_value_t = ConceptClass::Junta)]
    class: ConceptClass,
    #[command(flatten)]
    shape: ShapeArgs,
}

impl ConceptArgs {
    fn build(&self, n: usize, seed: u64) -> anyhow::Result<BooleanConcept> {
        if let Some(line) = &self.concept {
            return Ok(line.parse::<BooleanConcept>()?);
        }
        let s = self.shape;
        let spec = match self.class {
            ConceptClass::Parity => ConceptSpec::Parity { n },
            ConceptClass::Dt => ConceptSpec::DecisionTree { n, size: s.size, rule: DtVariableRule::Uniform },
            ConceptClass::Junta => ConceptSpec::Junta { n, k: s.k },
            ConceptClass::Dnf => ConceptSpec::Dnf { n, terms: s.terms, width: s.width },
            ConceptClass::Tac => {
                ConceptSpec::Threshold { n, m: s.m, threshold: s.threshold, terms: s.terms, width: s.width }
            }
        };
        Ok(random_concept(&spec, seed)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeakKind {
    Parity,
    Dt,
    Dnf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnClass {
    Parity,
    Dt,
    Junta,
    JuntaNoboost,
    Dnf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PacTarget {
    Depth3,
}

#[derive(Clone, Copy, ValueEnum)]
enum CalibrateTarget {
    Swap,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConceptClass {
    Parity,
    Dt,
    Junta,
    Dnf,
    Tac,
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

impl FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = |_| format!("bad seed list `{s}`");
        if let Some((a, b)) = s.split_once("..") {
            let (a, b): (u64, u64) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
            if a >= b {
                return Err(format!("empty seed range `{s}`"));
            }
            return Ok(SeedList((a..b).collect()));
        }
        s.split(',').map(|p| p.trim().parse().map_err(bad)).collect::<Result<_, _>>().map(SeedList)
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidParameter(msg.into()).into()
}

fn experiment(task: Task, common: &Common) -> anyhow::Result<()> {
    let cfg = ExperimentConfig {
        n: common.n,
        task,
        opt_lb: common.opt_lb,
        eps: common.eps,
        delta: common.delta,
        mode: common.mode,
        seeds: common.seeds(),
        mansour: common.mansour(),
    };
    let records = run_experiment(&cfg)?;
    let mut out = common.sink()?;
    write_jsonl(&records, &mut out)?;
    out.flush()?;
    drop(out);
    let summary = Summary::of(&records);
    common.summary(&format!("{} n={}: {summary}", cfg.task.name(), cfg.n));
    if summary.errors > 0 {
        bail!("{} of {} runs failed", summary.errors, summary.runs);
    }
    Ok(())
}

fn boost(weak: WeakKind, shape: ShapeArgs, common: &Common) -> anyhow::Result<()> {
    let n = common.n;
    let (wal, spec): (Box<dyn WeakLearner>, ConceptSpec) = match weak {
        WeakKind::Parity => (Box::new(ParityLearner), ConceptSpec::Parity { n }),
        WeakKind::Dt => (
            Box::new(DecisionTreeLearner { size: shape.size }),
            ConceptSpec::DecisionTree {
                n,
                size: if shape.size.is_multiple_of(2) { shape.size.saturating_sub(1) } else { shape.size },
                rule: DtVariableRule::Uniform,
            },
        ),
        WeakKind::Dnf => (
            Box::new(DnfLearner::capped(shape.terms, common.mansour(), n)),
            ConceptSpec::Dnf { n, terms: shape.terms, width: shape.width },
        ),
    };
    let cfg = BoostingConfig::new(common.eps, common.delta, wal.as_ref())?;
    let mut out = common.sink()?;
    let (mut runs, mut errors, mut hits) = (0, 0, 0);
    for seed in common.seeds() {
        runs += 1;
        let run = || -> phaseboost::Result<serde_json::Value> {
            let f = random_concept(&spec, seed)?;
            let psi = make_corrupted_state(&f, common.opt_lb, seed ^ 0x5eed)?;
            let mut src = CopySource::new(psi.clone(), common.mode, seed);
            let res = agnostic_boost(&mut src, wal.as_ref(), common.eps, common.delta)?;
            let fidelity = res.decomposition.fidelity_with(&psi)?;
            Ok(json!({
                "seed": seed,
                "weak": wal.name(),
                "kappa": res.kappa,
                "kappa_bound": cfg.kappa_bound(),
                "stop_reason": res.stop_reason,
                "labels": res.decomposition.labels,
                "fidelity": fidelity,
                "success": fidelity >= common.opt_lb - common.eps,
                "copies": res.ledger.copies_estimate,
            }))
        };
        let rec = match run() {
            Ok(v) => {
                hits += v["success"].as_bool().unwrap_or(false) as usize;
                v
            }
            Err(e) => {
                errors += 1;
                json!({ "seed": seed, "error": e.to_string() })
            }
        };
        writeln!(out, "{rec}")?;
    }
    out.flush()?;
    drop(out);
    common.summary(&format!(
        "boost {}: runs {runs}  success {hits}/{runs}  errors {errors}  kappa bound {}",
        wal.name(),
        cfg.kappa_bound()
    ));
    if errors > 0 {
        bail!("{errors} of {runs} runs failed");
    }
    Ok(())
}

fn bonddim(hard_dnf: Option<usize>, tol: f64, concept: &ConceptArgs, common: &Common) -> anyhow::Result<()> {
    let mut out = common.sink()?;
    writeln!(out, "seed,cut,rank")?;
    let mut worst = 0;
    for seed in common.seeds() {
        let psi = match hard_dnf {
            Some(s) => {
                let psi = hard_dnf_instance(s)?.phase_state()?;
                writeln!(out, "{seed},x|y,{}", schmidt_rank(&psi, hard_dnf_cut(s), tol)?)?;
                psi
            }
            None => concept.build(common.n, seed)?.phase_state()?,
        };
        for (cut, rank) in contiguous_ranks(&psi, tol)? {
            worst = worst.max(rank);
            writeln!(out, "{seed},{cut},{rank}")?;
        }
    }
    out.flush()?;
    drop(out);
    common.summary(&format!("bond dimension {worst}"));
    Ok(())
}

fn discriminator(trials: usize, shape: ShapeArgs, common: &Common) -> anyhow::Result<()> {
    let mut out = common.sink()?;
    let mut violations = 0;
    let base = common.seeds()[0];
    for trial in 0..trials as u64 {
        let seed = base.wrapping_mul(1_000_003).wrapping_add(trial);
        let spec = ConceptSpec::Threshold {
            n: common.n,
            m: shape.m,
            threshold: shape.threshold,
            terms: shape.terms,
            width: shape.width,
        };
        let BooleanConcept::Threshold(tac) = random_concept(&spec, seed)? else {
            unreachable!("threshold spec yields a threshold circuit")
        };
        // bias of each variable, derived from the trial seed
        let p: Vec<f64> = (0..common.n)
            .map(|i| {
                let h = (seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
                (h >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        let rep = verify_discriminator(&tac, &product_distribution(&p)?)?;
        violations += !rep.holds as usize;
        writeln!(
            out,
            "{}",
            json!({
                "trial": trial,
                "seed": seed,
                "index": rep.index,
                "correlation": rep.correlation,
                "correlations": rep.correlations,
                "bound": rep.bound,
                "holds": rep.holds,
            })
        )?;
    }
    out.flush()?;
    drop(out);
    common.summary(&format!("discriminator: {violations} violations over {trials} circuits"));
    Ok(())
}

fn distrib(noise: f64, shape: ShapeArgs, common: &Common) -> anyhow::Result<()> {
    if !(0.0..0.5).contains(&noise) {
        return Err(invalid(format!("noise = {noise} must lie in [0, 0.5)")));
    }
    let mut out = common.sink()?;
    let (mut runs, mut errors, mut hits) = (0, 0, 0);
    let best = 1.0 - 2.0 * noise;
    for seed in common.seeds() {
        runs += 1;
        let run = || -> phaseboost::Result<serde_json::Value> {
            let f = random_concept(&ConceptSpec::Junta { n: common.n, k: shape.k }, seed)?;
            let phi = LabelFunction::new(
                common.n,
                (0..1usize << common.n).map(|x| if f.evaluate(x) { -best } else { best }).collect(),
            )?;
            let (eps, delta) = (common.eps, common.delta);
            let learner =
                |src: &mut CopySource| agnostic_learn_junta(src, shape.k, eps, delta).map(|o| o.decomposition);
            let cfg = DistributionalConfig { mode: common.mode, seed, delta, ..Default::default() };
            let res = distributional_learn(&phi, &learner, eps, &cfg)?;
            Ok(json!({
                "seed": seed,
                "margin": res.margin,
                "best_margin": best,
                "success": res.margin >= best - eps,
                "margin_estimate": res.margin_estimate,
                "sign_flipped": res.sign_flipped,
                "success_prob": res.success_prob,
                "gamma": res.gamma,
                "copies": res.ledger.copies_estimate,
            }))
        };
        let rec = match run() {
            Ok(v) => {
                hits += v["success"].as_bool().unwrap_or(false) as usize;
                v
            }
            Err(e) => {
                errors += 1;
                json!({ "seed": seed, "error": e.to_string() })
            }
        };
        writeln!(out, "{rec}")?;
    }
    out.flush()?;
    drop(out);
    common.summary(&format!("distrib junta k={}: runs {runs}  success {hits}/{runs}  errors {errors}", shape.k));
    if errors > 0 {
        bail!("{errors} of {runs} runs failed");
    }
    Ok(())
}

fn spectrum(top: usize, concept: &ConceptArgs, common: &Common) -> anyhow::Result<()> {
    let mut out = common.sink()?;
    writeln!(out, "seed,mask,weight,coefficient")?;
    for seed in common.seeds() {
        let f = concept.build(common.n, seed)?;
        let spec = f.fourier_spectrum()?;
        for mask in spec.ranked().into_iter().take(top) {
            writeln!(out, "{seed},{mask},{},{}", mask.count_ones(), spec.coeffs[mask])?;
        }
        common.summary(&format!("seed {seed}: {} l1 {:.6} parseval {:.6}", f.kind(), spec.l1_norm(), spec.parseval()));
    }
    out.flush()?;
    Ok(())
}

fn calibrate_swap(overlaps: &[f64], trials: u64, common: &Common) -> anyhow::Result<()> {
    let mut out = common.sink()?;
    writeln!(out, "overlap,trials,failures,rate")?;
    let mut worst = 0.0f64;
    let seed = common.seeds()[0];
    for (i, &f) in overlaps.iter().enumerate() {
        if !(0.0..=1.0).contains(&f) {
            return Err(invalid(format!("overlap {f} must lie in [0, 1]")));
        }
        let other = StateVector::from_real(1, &[f.sqrt(), (1.0 - f).sqrt()])?;
        let mut src = CopySource::new(StateVector::basis(1, 0)?, common.mode, seed.wrapping_add(i as u64));
        let mut failures = 0;
        for _ in 0..trials {
            if (src.swap_test_estimate(&other, common.eps, common.delta)? - f).abs() > common.eps {
                failures += 1;
            }
        }
        let rate = failures as f64 / trials as f64;
        worst = worst.max(rate);
        writeln!(out, "{f},{trials},{failures},{rate}")?;
    }
    out.flush()?;
    drop(out);
    common.summary(&format!("swap calibration: worst failure rate {worst:.4} (target {})", common.delta));
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Command::Boost { weak, shape, common } => boost(weak, shape, &common),
        Command::Learn { class, shape, common } => {
            let task = match class {
                LearnClass::Parity => Task::Parity,
                LearnClass::Dt => Task::Dt { size: shape.size },
                LearnClass::Junta => Task::Junta { k: shape.k },
                LearnClass::JuntaNoboost => Task::JuntaNoboost { k: shape.k },
                LearnClass::Dnf => Task::Dnf { terms: shape.terms, width: shape.width },
            };
            experiment(task, &common)
        }
        Command::Pac { target: PacTarget::Depth3, shape, common } => experiment(
            Task::Depth3 { m: shape.m, threshold: shape.threshold, terms: shape.terms, width: shape.width },
            &common,
        ),
        Command::Bonddim { hard_dnf, tol, concept, common } => bonddim(hard_dnf, tol, &concept, &common),
        Command::Discriminator { trials, shape, common } => discriminator(trials, shape, &common),
        Command::Distrib { noise, shape, common } => distrib(noise, shape, &common),
        Command::Spectrum { top, concept, common } => spectrum(top, &concept, &common),
        Command::Calibrate { target: CalibrateTarget::Swap, overlaps, trials, common } => {
            calibrate_swap(&overlaps, trials, &common)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::InvalidParameter(_)
            | Error::Configuration(_)
            | Error::Parse(_)
            | Error::Resource { .. }
            | Error::DimensionMismatch { .. },
        ) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!("2..5".parse::<SeedList>().unwrap().0, vec![2, 3, 4]);
        assert_eq!("7, 1,3".parse::<SeedList>().unwrap().0, vec![7, 1, 3]);
        assert!("5..5".parse::<SeedList>().is_err());
        assert!("a,b".parse::<SeedList>().is_err());
    }

    #[test]
    fn exit_codes_split_validation_from_runtime() {
        assert_eq!(exit_code(&invalid("x")), 2);
        assert_eq!(exit_code(&Error::Parse("x".into()).into()), 2);
        assert_eq!(exit_code(&Error::PostSelectionFailure { success_prob: 0.0, cap: 1 }.into()), 3);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 3);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
