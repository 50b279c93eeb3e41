//! Structural checks on phase states and threshold circuits: Schmidt ranks
//! across cuts, the OR-of-ANDs instance with exponential rank, and exhaustive
//! correlation checks for threshold-of-DNF circuits.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::concepts::{BooleanConcept, Dnf, Literal, Term, ThresholdOfDnfs};
use crate::error::{Error, Result};
use crate::statevec::{ParityLabel, StateVector};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// Largest matrix side accepted by [`schmidt_rank`].
pub const MAX_SIDE_QUBITS: usize = 12;
/// Largest `n` for exhaustive sums over inputs.
pub const MAX_EXHAUSTIVE_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BipartitionCut {
    /// Variables `0..c` against `c..n`.
    Contiguous(usize),
    /// Variables in the mask against the rest.
    Explicit(usize),
}

impl BipartitionCut {
    pub fn left_mask(self, n: usize) -> Result<usize> {
        let full = (1usize << n) - 1;
        let mask = match self {
            BipartitionCut::Contiguous(c) => {
                if c == 0 || c >= n {
                    return Err(Error::InvalidParameter(format!("cut {c} outside 1..{n}")));
                }
                (1usize << c) - 1
            }
            BipartitionCut::Explicit(m) => m,
        };
        if mask == 0 || mask & full == full || mask & !full != 0 {
            return Err(Error::InvalidParameter(format!("cut {mask:#x} leaves an empty side")));
        }
        Ok(mask)
    }
}

fn gather(x: usize, vars: &[usize]) -> usize {
    vars.iter().enumerate().fold(0, |acc, (i, &v)| acc | ((x >> v & 1) << i))
}

/// Amplitude matrix with rows indexed by the left variables.
pub fn amplitude_matrix(s: &StateVector, cut: BipartitionCut) -> Result<DMatrix<Complex64>> {
    let n = s.n();
    let mask = cut.left_mask(n)?;
    let left: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
    let right: Vec<usize> = (0..n).filter(|v| mask >> v & 1 == 0).collect();
    if left.len().min(right.len()) > MAX_SIDE_QUBITS {
        return Err(Error::Resource { qubits: left.len().min(right.len()), cap: MAX_SIDE_QUBITS });
    }
    let mut m = DMatrix::zeros(1 << left.len(), 1 << right.len());
    for (x, a) in s.amps().iter().enumerate() {
        m[(gather(x, &left), gather(x, &right))] = *a;
    }
    Ok(m)
}

/// Singular values of the amplitude matrix, largest first.
pub fn schmidt_coefficients(s: &StateVector, cut: BipartitionCut) -> Result<Vec<f64>> {
    let m = amplitude_matrix(s, cut)?;
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Number of singular values above `tol` times the largest.
pub fn schmidt_rank(s: &StateVector, cut: BipartitionCut, tol: f64) -> Result<usize> {
    let sv = schmidt_coefficients(s, cut)?;
    let top = sv.first().copied().unwrap_or(0.0);
    Ok(sv.iter().filter(|&&v| v > tol * top).count())
}

/// Ranks at every contiguous cut `1..n`.
pub fn contiguous_ranks(s: &StateVector, tol: f64) -> Result<Vec<(usize, usize)>> {
    (1..s.n()).map(|c| Ok((c, schmidt_rank(s, BipartitionCut::Contiguous(c), tol)?))).collect()
}

/// Maximum rank over contiguous cuts; 1 for a single qubit.
pub fn bond_dimension(s: &StateVector, tol: f64) -> Result<usize> {
    Ok(contiguous_ranks(s, tol)?.into_iter().map(|(_, r)| r).max().unwrap_or(1))
}

/// `OR_i (x_i AND y_i)` on `n = 2s` variables, `x_i = i` and `y_i = s + i`.
/// Its phase state has rank `2^s` across [`hard_dnf_cut`].
pub fn hard_dnf_instance(s: usize) -> Result<BooleanConcept> {
    if s == 0 {
        return Err(Error::InvalidParameter("term count must be at least 1".into()));
    }
    if 2 * s > 2 * MAX_SIDE_QUBITS {
        return Err(Error::Resource { qubits: 2 * s, cap: 2 * MAX_SIDE_QUBITS });
    }
    let terms = (0..s).map(|i| Term::new(vec![Literal::pos(i), Literal::pos(s + i)])).collect();
    Ok(BooleanConcept::Dnf(Dnf::new(2 * s, terms)?))
}

pub fn hard_dnf_cut(s: usize) -> BipartitionCut {
    BipartitionCut::Contiguous(s)
}

fn pm(b: bool) -> f64 {
    if b {
        -1.0
    } else {
        1.0
    }
}

/// Probability of every input under independent bits with `Pr[x_i = 1] = p[i]`.
pub fn product_distribution(p: &[f64]) -> Result<Vec<f64>> {
    if p.len() > MAX_EXHAUSTIVE_N {
        return Err(Error::Resource { qubits: p.len(), cap: MAX_EXHAUSTIVE_N });
    }
    if p.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::InvalidParameter("bit probabilities must lie in [0, 1]".into()));
    }
    let mut d = vec![1.0];
    for &q in p {
        d = d.iter().map(|w| w * (1.0 - q)).chain(d.iter().map(|w| w * q)).collect();
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorReport {
    pub index: usize,
    /// `E_D[f C_i]` in the +-1 view for the returned index.
    pub correlation: f64,
    pub correlations: Vec<f64>,
    /// `1 / 2m`.
    pub bound: f64,
    pub holds: bool,
}

/// Exhaustive `E_D[f C_i]` for each input DNF, with `f` and `C_i` as +-1
/// functions. `dist` lists the probability of every input.
pub fn verify_discriminator(f: &ThresholdOfDnfs, dist: &[f64]) -> Result<DiscriminatorReport> {
    let n = f.n;
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::Resource { qubits: n, cap: MAX_EXHAUSTIVE_N });
    }
    if dist.len() != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, found: dist.len() });
    }
    let mut corr = vec![0.0; f.fan_in()];
    for (x, &w) in dist.iter().enumerate() {
        let fx = pm(f.eval(x));
        for (c, d) in corr.iter_mut().zip(&f.dnfs) {
            *c += w * fx * pm(d.eval(x));
        }
    }
    let (index, correlation) = corr
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
        .unwrap_or((0, 0.0));
    let bound = 1.0 / (2 * f.fan_in()) as f64;
    Ok(DiscriminatorReport { index, correlation, correlations: corr, bound, holds: correlation.abs() >= bound })
}

/// Distribution proportional to `|f(x) - h(x)|` over the uniform inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDistribution {
    pub weights: Vec<f64>,
    /// `E_x |f(x) - h(x)|`.
    pub delta: f64,
}

impl ResidualDistribution {
    pub fn new(f_pm: &[f64], h: &[f64]) -> Result<Self> {
        let gap: Vec<f64> = f_pm.iter().zip(h).map(|(a, b)| (a - b).abs()).collect();
        let delta = gap.iter().sum::<f64>() / gap.len() as f64;
        if !(delta > 0.0) {
            return Err(Error::DegenerateResidual { alpha_sq: 0.0 });
        }
        let z = delta * gap.len() as f64;
        Ok(ResidualDistribution { weights: gap.iter().map(|g| g / z).collect(), delta })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `||f - h||^2` under the uniform distribution.
    pub alpha_sq: f64,
    pub delta: f64,
    /// `delta >= alpha_sq / 2`.
    pub delta_ok: bool,
    /// `max_i |<psi_t|phi_{C_i}>|` over the circuit's input DNFs.
    pub max_overlap: f64,
    pub best_index: usize,
    /// `sqrt(eps) / m`.
    pub claimed_bound: f64,
    /// `alpha / 4m`, which follows from `delta >= alpha^2 / 2` and a
    /// correlation of `1/2m` under the residual distribution.
    pub rigorous_bound: f64,
    /// Whether `alpha >= sqrt(eps)`, the case the bounds speak to.
    pub applies: bool,
    pub claimed_holds: bool,
    pub rigorous_holds: bool,
    pub discriminator: DiscriminatorReport,
}

/// Checks the correlation argument behind the depth-3 stopping rule after
/// projecting `f` out of the span of `labels`, by exhaustive sums.
pub fn residual_discriminator_check(f: &ThresholdOfDnfs, labels: &[ParityLabel], eps: f64) -> Result<ResidualReport> {
    let n = f.n;
    if n > 14 {
        return Err(Error::Resource { qubits: n, cap: 14 });
    }
    let concept = BooleanConcept::Threshold(f.clone());
    let table = concept.truth_table()?;
    let spec = concept.fourier_spectrum()?;
    let f_pm: Vec<f64> = table.iter().map(|&b| pm(b)).collect();
    let mut h = vec![0.0; 1 << n];
    for l in labels {
        let c = spec.coefficient(*l);
        for (x, v) in h.iter_mut().enumerate() {
            *v += c * l.chi(x);
        }
    }
    let dim = (1usize << n) as f64;
    let alpha_sq = f_pm.iter().zip(&h).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / dim;
    let dist = ResidualDistribution::new(&f_pm, &h)?;
    let discriminator = verify_discriminator(f, &dist.weights)?;
    let alpha = alpha_sq.sqrt();
    let (best_index, max_overlap) = f
        .dnfs
        .iter()
        .map(|d| (0..1usize << n).map(|x| (f_pm[x] - h[x]) * pm(d.eval(x))).sum::<f64>().abs() / (dim * alpha))
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let m = f.fan_in() as f64;
    let claimed_bound = eps.sqrt() / m;
    let rigorous_bound = alpha / (4.0 * m);
    Ok(ResidualReport {
        alpha_sq,
        delta: dist.delta,
        delta_ok: dist.delta >= alpha_sq / 2.0 - 1e-12,
        max_overlap,
        best_index,
        claimed_bound,
        rigorous_bound,
        applies: alpha >= eps.sqrt(),
        claimed_holds: max_overlap >= claimed_bound - 1e-12,
        rigorous_holds: max_overlap >= rigorous_bound - 1e-12,
        discriminator,
    })
}
