//! Boolean concept classes over `n` variables and their Fourier spectra.
//!
//! Inputs are bitmasks: bit `i` of `x` is the value of variable `x_i`.
//! A concept `f` maps to the ±1 function `F(x) = (-1)^{f(x)}`, and the
//! spectrum is taken of `F`.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{check_qubits, fwht_in_place, ParityLabel, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    #[inline]
    pub fn eval(self, x: usize) -> bool {
        ((x >> self.var) & 1 == 1) != self.negated
    }
}

/// Conjunction of literals; the empty term is constantly true.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub literals: Vec<Literal>,
}

impl Term {
    pub fn new(literals: Vec<Literal>) -> Self {
        Term { literals }
    }

    pub fn eval(&self, x: usize) -> bool {
        self.literals.iter().all(|l| l.eval(x))
    }
}

/// Disjunction of terms; the empty DNF is constantly false.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dnf {
    pub n: usize,
    pub terms: Vec<Term>,
}

impl Dnf {
    pub fn new(n: usize, terms: Vec<Term>) -> Result<Self> {
        let d = Dnf { n, terms };
        d.validate()?;
        Ok(d)
    }

    pub fn eval(&self, x: usize) -> bool {
        self.terms.iter().any(|t| t.eval(x))
    }

    pub fn size(&self) -> usize {
        self.terms.len()
    }

    pub fn max_width(&self) -> usize {
        self.terms.iter().map(|t| t.literals.len()).max().unwrap_or(0)
    }

    fn validate(&self) -> Result<()> {
        for t in &self.terms {
            for l in &t.literals {
                check_var(l.var, self.n)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DtNode {
    Leaf(bool),
    /// Query `var`; go to `low` when it is 0 and to `high` when it is 1.
    Internal {
        var: usize,
        low: usize,
        high: usize,
    },
}

/// Binary decision tree stored as a node array with the root at index 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n: usize,
    pub nodes: Vec<DtNode>,
}

impl DecisionTree {
    pub fn leaf(n: usize, value: bool) -> Self {
        DecisionTree { n, nodes: vec![DtNode::Leaf(value)] }
    }

    /// Tree querying `var` with the given subtrees.
    pub fn split(var: usize, low: DecisionTree, high: DecisionTree) -> Result<Self> {
        if low.n != high.n {
            return Err(Error::DimensionMismatch { expected: low.n, found: high.n });
        }
        check_var(var, low.n)?;
        let n = low.n;
        let lo_off = 1;
        let hi_off = 1 + low.nodes.len();
        let mut nodes = vec![DtNode::Internal { var, low: lo_off, high: hi_off }];
        for (off, sub) in [(lo_off, low), (hi_off, high)] {
            nodes.extend(sub.nodes.into_iter().map(|nd| match nd {
                DtNode::Internal { var, low, high } => DtNode::Internal { var, low: low + off, high: high + off },
                leaf => leaf,
            }));
        }
        Ok(DecisionTree { n, nodes })
    }

    pub fn new(n: usize, nodes: Vec<DtNode>) -> Result<Self> {
        let t = DecisionTree { n, nodes };
        t.validate()?;
        Ok(t)
    }

    /// Total node count, internal nodes plus leaves.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match t.nodes[i] {
                DtNode::Leaf(_) => 0,
                DtNode::Internal { low, high, .. } => 1 + go(t, low).max(go(t, high)),
            }
        }
        go(self, 0)
    }

    pub fn eval(&self, x: usize) -> bool {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                DtNode::Leaf(b) => return b,
                DtNode::Internal { var, low, high } => {
                    i = if (x >> var) & 1 == 1 { high } else { low };
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidParameter("decision tree has no nodes".into()));
        }
        // every non-root node must be referenced exactly once, by an earlier node
        let mut parents = vec![0usize; self.nodes.len()];
        for (i, nd) in self.nodes.iter().enumerate() {
            if let DtNode::Internal { var, low, high } = *nd {
                check_var(var, self.n)?;
                for c in [low, high] {
                    if c <= i || c >= self.nodes.len() {
                        return Err(Error::InvalidParameter(format!("node {i} has invalid child {c}")));
                    }
                    parents[c] += 1;
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
            return Err(Error::InvalidParameter("node array is not a tree".into()));
        }
        Ok(())
    }
}

/// Function of the variables in `support`; `table` is indexed by the packed
/// support bits (bit `j` is `x[support[j]]`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Junta {
    pub n: usize,
    pub support: Vec<usize>,
    pub table: Vec<bool>,
}

impl Junta {
    pub fn new(n: usize, support: Vec<usize>, table: Vec<bool>) -> Result<Self> {
        for &v in &support {
            check_var(v, n)?;
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return Err(Error::InvalidParameter("junta support has repeated variables".into()));
        }
        if table.len() != 1 << support.len() {
            return Err(Error::DimensionMismatch { expected: 1 << support.len(), found: table.len() });
        }
        Ok(Junta { n, support, table })
    }

    pub fn arity(&self) -> usize {
        self.support.len()
    }

    pub fn support_mask(&self) -> usize {
        self.support.iter().fold(0, |m, &v| m | (1 << v))
    }

    pub fn eval(&self, x: usize) -> bool {
        let idx = self.support.iter().enumerate().fold(0, |acc, (j, &v)| acc | (((x >> v) & 1) << j));
        self.table[idx]
    }
}

/// `T_k^m`: true iff at least `threshold` of the DNFs are satisfied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdOfDnfs {
    pub n: usize,
    pub threshold: usize,
    pub dnfs: Vec<Dnf>,
}

impl ThresholdOfDnfs {
    pub fn new(threshold: usize, dnfs: Vec<Dnf>) -> Result<Self> {
        let n = dnfs
            .first()
            .map(|d| d.n)
            .ok_or_else(|| Error::InvalidParameter("threshold circuit needs at least one DNF".into()))?;
        if dnfs.iter().any(|d| d.n != n) {
            return Err(Error::InvalidParameter("DNFs disagree on n".into()));
        }
        if threshold > dnfs.len() {
            return Err(Error::InvalidParameter(format!("threshold {threshold} exceeds fan-in {}", dnfs.len())));
        }
        Ok(ThresholdOfDnfs { n, threshold, dnfs })
    }

    pub fn fan_in(&self) -> usize {
        self.dnfs.len()
    }

    pub fn eval(&self, x: usize) -> bool {
        self.dnfs.iter().filter(|d| d.eval(x)).count() >= self.threshold
    }
}

/// Top gate of a depth-3 circuit whose middle layer is DNFs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth3Top {
    Or,
    And,
}

/// OR-of-DNFs is `T_1^m`; AND-of-DNFs is `T_m^m`.
pub fn depth3_as_threshold(top: Depth3Top, dnfs: Vec<Dnf>) -> Result<ThresholdOfDnfs> {
    let k = match top {
        Depth3Top::Or => 1,
        Depth3Top::And => dnfs.len(),
    };
    ThresholdOfDnfs::new(k, dnfs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BooleanConcept {
    Parity { n: usize, mask: ParityLabel },
    Junta(Junta),
    DecisionTree(DecisionTree),
    Dnf(Dnf),
    Threshold(ThresholdOfDnfs),
}

impl BooleanConcept {
    pub fn n(&self) -> usize {
        match self {
            BooleanConcept::Parity { n, .. } => *n,
            BooleanConcept::Junta(j) => j.n,
            BooleanConcept::DecisionTree(t) => t.n,
            BooleanConcept::Dnf(d) => d.n,
            BooleanConcept::Threshold(t) => t.n,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BooleanConcept::Parity { .. } => "parity",
            BooleanConcept::Junta(_) => "junta",
            BooleanConcept::DecisionTree(_) => "dt",
            BooleanConcept::Dnf(_) => "dnf",
            BooleanConcept::Threshold(_) => "tac",
        }
    }

    pub fn evaluate(&self, x: usize) -> bool {
        match self {
            BooleanConcept::Parity { mask, .. } => (mask.index() & x).count_ones() & 1 == 1,
            BooleanConcept::Junta(j) => j.eval(x),
            BooleanConcept::DecisionTree(t) => t.eval(x),
            BooleanConcept::Dnf(d) => d.eval(x),
            BooleanConcept::Threshold(t) => t.eval(x),
        }
    }

    pub fn truth_table(&self) -> Result<Vec<bool>> {
        check_qubits(self.n())?;
        Ok((0..1usize << self.n()).map(|x| self.evaluate(x)).collect())
    }

    pub fn phase_state(&self) -> Result<StateVector> {
        StateVector::phase_state(self.n(), |x| self.evaluate(x))
    }

    pub fn fourier_spectrum(&self) -> Result<FourierSpectrum> {
        let table = self.truth_table()?;
        Ok(FourierSpectrum::from_truth_table(self.n(), &table))
    }

    pub fn validate(&self) -> Result<()> {
        check_qubits(self.n())?;
        match self {
            BooleanConcept::Parity { n, mask } => {
                if mask.index() >= 1 << n {
                    return Err(Error::InvalidParameter(format!("mask {mask} out of range")));
                }
                Ok(())
            }
            BooleanConcept::Junta(j) => Junta::new(j.n, j.support.clone(), j.table.clone()).map(|_| ()),
            BooleanConcept::DecisionTree(t) => t.validate(),
            BooleanConcept::Dnf(d) => d.validate(),
            BooleanConcept::Threshold(t) => {
                for d in &t.dnfs {
                    d.validate()?;
                }
                ThresholdOfDnfs::new(t.threshold, t.dnfs.clone()).map(|_| ())
            }
        }
    }
}

fn check_var(var: usize, n: usize) -> Result<()> {
    if var >= n {
        return Err(Error::InvalidParameter(format!("variable x{var} out of range for n={n}")));
    }
    Ok(())
}

/// Fourier coefficients `f^(S)` of the ±1 view, indexed by mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSpectrum {
    pub n: usize,
    pub coeffs: Vec<f64>,
}

impl FourierSpectrum {
    pub fn from_truth_table(n: usize, table: &[bool]) -> Self {
        let mut v: Vec<f64> = table.iter().map(|&b| if b { -1.0 } else { 1.0 }).collect();
        Self::from_pm_values(n, &mut v)
    }

    /// Spectrum of an arbitrary real function given by its values.
    pub fn from_pm_values(n: usize, values: &mut [f64]) -> Self {
        fwht_in_place(values);
        let k = (0.5f64).powi(n as i32);
        FourierSpectrum { n, coeffs: values.iter().map(|c| c * k).collect() }
    }

    pub fn coefficient(&self, s: ParityLabel) -> f64 {
        self.coeffs[s.index()]
    }

    pub fn parseval(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Masks ordered by decreasing `|f^|`, ties to the smaller mask.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.coeffs.len()).collect();
        idx.sort_by(|&a, &b| self.coeffs[b].abs().total_cmp(&self.coeffs[a].abs()).then(a.cmp(&b)));
        idx
    }
}

/// `sum |f^(S)|` of a decision tree.
pub fn dt_l1_norm(tree: &DecisionTree) -> Result<f64> {
    Ok(BooleanConcept::DecisionTree(tree.clone()).fourier_spectrum()?.l1_norm())
}

/// Fourier mass in the `budget` largest coefficients.
pub fn spectral_concentration(spec: &FourierSpectrum, budget: usize) -> Result<f64> {
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    Ok(spec.ranked().into_iter().take(budget).map(|s| spec.coeffs[s] * spec.coeffs[s]).sum())
}

/// How the random tree generator picks the variable at a new internal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DtVariableRule {
    /// Uniform over all variables; repeats along a path are allowed.
    #[default]
    Uniform,
    /// A node at depth `d` queries `x_d`.
    ByLevel,
}

/// Parameters for [`random_concept`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConceptSpec {
    Parity { n: usize },
    Junta { n: usize, k: usize },
    DecisionTree { n: usize, size: usize, rule: DtVariableRule },
    Dnf { n: usize, terms: usize, width: usize },
    Threshold { n: usize, m: usize, threshold: usize, terms: usize, width: usize },
}

/// Seeded random concept satisfying the size parameters exactly.
pub fn random_concept(spec: &ConceptSpec, seed: u64) -> Result<BooleanConcept> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = match *spec {
        ConceptSpec::Parity { n } => {
            check_qubits(n)?;
            BooleanConcept::Parity { n, mask: ParityLabel::new(rng.random_range(0..1usize << n)) }
        }
        ConceptSpec::Junta { n, k } => BooleanConcept::Junta(random_junta(n, k, &mut rng)?),
        ConceptSpec::DecisionTree { n, size, rule } => {
            BooleanConcept::DecisionTree(random_tree(n, size, rule, &mut rng)?)
        }
        ConceptSpec::Dnf { n, terms, width } => BooleanConcept::Dnf(random_dnf(n, terms, width, &mut rng)?),
        ConceptSpec::Threshold { n, m, threshold, terms, width } => {
            if m == 0 || threshold == 0 || threshold > m {
                return Err(Error::InvalidParameter(format!("threshold {threshold} must lie in 1..={m}")));
            }
            let dnfs = (0..m).map(|_| random_dnf(n, terms, width, &mut rng)).collect::<Result<Vec<_>>>()?;
            BooleanConcept::Threshold(ThresholdOfDnfs::new(threshold, dnfs)?)
        }
    };
    Ok(c)
}

fn random_junta<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<Junta> {
    check_qubits(n)?;
    if k > n {
        return Err(Error::InvalidParameter(format!("junta arity {k} exceeds n={n}")));
    }
    let mut support = sample(rng, n, k).into_vec();
    support.sort_unstable();
    let table = (0..1usize << k).map(|_| rng.random()).collect();
    Junta::new(n, support, table)
}

fn random_tree<R: Rng>(n: usize, size: usize, rule: DtVariableRule, rng: &mut R) -> Result<DecisionTree> {
    check_qubits(n)?;
    if size.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("decision tree size {size} must be odd (full binary trees)")));
    }
    // grow with explicit parent links, then renumber in preorder
    #[derive(Clone, Copy)]
    enum Raw {
        Leaf,
        Node(usize, usize, usize),
    }
    let mut raw = vec![Raw::Leaf];
    let mut depth = vec![0usize];
    for _ in 0..(size - 1) / 2 {
        let open: Vec<usize> = (0..raw.len())
            .filter(|&i| matches!(raw[i], Raw::Leaf))
            .filter(|&i| rule == DtVariableRule::Uniform || depth[i] < n)
            .collect();
        if open.is_empty() {
            return Err(Error::InvalidParameter(format!("no level-indexed tree of size {size} exists for n={n}")));
        }
        let leaf = open[rng.random_range(0..open.len())];
        let var = match rule {
            DtVariableRule::Uniform => rng.random_range(0..n),
            DtVariableRule::ByLevel => depth[leaf],
        };
        let (lo, hi) = (raw.len(), raw.len() + 1);
        raw.push(Raw::Leaf);
        raw.push(Raw::Leaf);
        depth.push(depth[leaf] + 1);
        depth.push(depth[leaf] + 1);
        raw[leaf] = Raw::Node(var, lo, hi);
    }
    let mut nodes = Vec::with_capacity(size);
    fn emit<R: Rng>(raw: &[Raw], i: usize, nodes: &mut Vec<DtNode>, rng: &mut R) -> usize {
        let at = nodes.len();
        match raw[i] {
            Raw::Leaf => nodes.push(DtNode::Leaf(rng.random())),
            Raw::Node(var, lo, hi) => {
                nodes.push(DtNode::Leaf(false));
                let low = emit(raw, lo, nodes, rng);
                let high = emit(raw, hi, nodes, rng);
                nodes[at] = DtNode::Internal { var, low, high };
            }
        }
        at
    }
    emit(&raw, 0, &mut nodes, rng);
    DecisionTree::new(n, nodes)
}

fn random_dnf<R: Rng>(n: usize, terms: usize, width: usize, rng: &mut R) -> Result<Dnf> {
    check_qubits(n)?;
    if width == 0 || width > n {
        return Err(Error::InvalidParameter(format!("term width {width} must lie in 1..={n}")));
    }
    let terms = (0..terms)
        .map(|_| {
            let w = rng.random_range(1..=width);
            let mut vars = sample(rng, n, w).into_vec();
            vars.sort_unstable();
            Term::new(vars.into_iter().map(|v| Literal { var: v, negated: rng.random() }).collect())
        })
        .collect();
    Dnf::new(n, terms)
}

// ---- text format -------------------------------------------------------
//
//   parity n=4 mask=5
//   junta n=8 support=1,4,6 table=01101001
//   dt n=4 nodes=2:1:2,L0,L1
//   dnf n=6 terms=x0&!x3|x5
//   tac n=6 k=2 dnfs=x0|x1;x2&x3;!x4
//
// The empty DNF is written `false` and the empty term `true`.

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "false");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "|")?;
            }
            if t.literals.is_empty() {
                write!(f, "true")?;
            }
            for (j, l) in t.literals.iter().enumerate() {
                if j > 0 {
                    write!(f, "&")?;
                }
                write!(f, "{}x{}", if l.negated { "!" } else { "" }, l.var)?;
            }
        }
        Ok(())
    }
}

fn parse_dnf(n: usize, s: &str) -> Result<Dnf> {
    let s = s.trim();
    if s == "false" {
        return Dnf::new(n, vec![]);
    }
    let terms = s
        .split('|')
        .map(|t| {
            let t = t.trim();
            if t == "true" {
                return Ok(Term::new(vec![]));
            }
            t.split('&')
                .map(|lit| {
                    let lit = lit.trim();
                    let (negated, rest) = match lit.strip_prefix('!') {
                        Some(r) => (true, r),
                        None => (false, lit),
                    };
                    let var = rest
                        .strip_prefix('x')
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| Error::Parse(format!("bad literal `{lit}`")))?;
                    Ok(Literal { var, negated })
                })
                .collect::<Result<Vec<_>>>()
                .map(Term::new)
        })
        .collect::<Result<Vec<_>>>()?;
    Dnf::new(n, terms)
}

impl fmt::Display for BooleanConcept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BooleanConcept::Parity { n, mask } => write!(f, "parity n={n} mask={}", mask.0),
            BooleanConcept::Junta(j) => {
                let support: Vec<String> = j.support.iter().map(|v| v.to_string()).collect();
                let table: String = j.table.iter().map(|&b| if b { '1' } else { '0' }).collect();
                write!(f, "junta n={} support={} table={}", j.n, support.join(","), table)
            }
            BooleanConcept::DecisionTree(t) => {
                let nodes: Vec<String> = t
                    .nodes
                    .iter()
                    .map(|nd| match nd {
                        DtNode::Leaf(b) => format!("L{}", *b as u8),
                        DtNode::Internal { var, low, high } => format!("{var}:{low}:{high}"),
                    })
                    .collect();
                write!(f, "dt n={} nodes={}", t.n, nodes.join(","))
            }
            BooleanConcept::Dnf(d) => write!(f, "dnf n={} terms={}", d.n, d),
            BooleanConcept::Threshold(t) => {
                let dnfs: Vec<String> = t.dnfs.iter().map(|d| d.to_string()).collect();
                write!(f, "tac n={} k={} dnfs={}", t.n, t.threshold, dnfs.join(";"))
            }
        }
    }
}

impl FromStr for BooleanConcept {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut parts = line.split_whitespace();
        let kind = parts.next().ok_or_else(|| Error::Parse("empty concept line".into()))?;
        let mut field = |key: &str| -> Result<String> {
            let p = parts.next().ok_or_else(|| Error::Parse(format!("missing `{key}=`")))?;
            p.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_owned)
                .ok_or_else(|| Error::Parse(format!("expected `{key}=`, found `{p}`")))
        };
        let num = |s: String| -> Result<usize> { s.parse().map_err(|_| Error::Parse(format!("bad number `{s}`"))) };
        let n = num(field("n")?)?;
        let c = match kind {
            "parity" => BooleanConcept::Parity { n, mask: ParityLabel::new(num(field("mask")?)?) },
            "junta" => {
                let support = field("support")?;
                let support = if support.is_empty() {
                    vec![]
                } else {
                    support.split(',').map(|v| num(v.to_owned())).collect::<Result<Vec<_>>>()?
                };
                let table = field("table")?
                    .chars()
                    .map(|ch| match ch {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::Parse(format!("bad table digit `{ch}`"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                BooleanConcept::Junta(Junta::new(n, support, table)?)
            }
            "dt" => {
                let nodes = field("nodes")?
                    .split(',')
                    .map(|tok| {
                        if let Some(b) = tok.strip_prefix('L') {
                            return match b {
                                "0" => Ok(DtNode::Leaf(false)),
                                "1" => Ok(DtNode::Leaf(true)),
                                _ => Err(Error::Parse(format!("bad leaf `{tok}`"))),
                            };
                        }
                        let f: Vec<&str> = tok.split(':').collect();
                        if f.len() != 3 {
                            return Err(Error::Parse(format!("bad node `{tok}`")));
                        }
                        Ok(DtNode::Internal {
                            var: num(f[0].to_owned())?,
                            low: num(f[1].to_owned())?,
                            high: num(f[2].to_owned())?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                BooleanConcept::DecisionTree(DecisionTree::new(n, nodes)?)
            }
            "dnf" => BooleanConcept::Dnf(parse_dnf(n, &field("terms")?)?),
            "tac" => {
                let k = num(field("k")?)?;
                let dnfs = field("dnfs")?.split(';').map(|d| parse_dnf(n, d)).collect::<Result<Vec<_>>>()?;
                BooleanConcept::Threshold(ThresholdOfDnfs::new(k, dnfs)?)
            }
            other => return Err(Error::Parse(format!("unknown concept kind `{other}`"))),
        };
        if parts.next().is_some() {
            return Err(Error::Parse(format!("trailing fields in `{line}`")));
        }
        c.validate()?;
        Ok(c)
    }
}

/// Reads a corpus with one concept per line; blank lines and `#` comments
/// are skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<BooleanConcept>> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::parse).collect()
}

/// Parses a bit string where character `i` is variable `x_i`.
pub fn parse_bits(s: &str) -> Result<usize> {
    s.chars().enumerate().try_fold(0usize, |acc, (i, ch)| match ch {
        '0' => Ok(acc),
        '1' => Ok(acc | (1 << i)),
        _ => Err(Error::Parse(format!("bad bit `{ch}`"))),
    })
}
