//! Dense statevectors over `n` qubits.
//!
//! Index convention: bit `i` of a basis index is qubit (variable) `i`. The
//! parity state for mask `S` has amplitudes `(-1)^{popcount(S & x)} / sqrt(2^n)`
//! and equals the Hadamard transform of the basis state `|S>`.

use std::fmt;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest qubit count the simulator accepts.
pub const MAX_QUBITS: usize = 24;
/// Tolerance for normalization and orthogonality checks.
pub const NORM_TOL: f64 = 1e-9;
/// Residuals with norm below this are treated as absent.
pub const RESIDUAL_TOL: f64 = 1e-9;

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::Resource { qubits: n, cap: MAX_QUBITS });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("qubit count must be at least 1".into()));
    }
    Ok(())
}

/// `(-1)^{<s, x>}` as a float.
#[inline]
pub fn parity_sign(mask: usize, x: usize) -> f64 {
    if (mask & x).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A parity label `S`, stored as a bitmask. Serializes as a hex string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParityLabel(pub u32);

impl Serialize for ParityLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ParityLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let hex = s.strip_prefix("0x").unwrap_or(&s);
        u32::from_str_radix(hex, 16).map(ParityLabel).map_err(serde::de::Error::custom)
    }
}

impl ParityLabel {
    pub fn new(mask: usize) -> Self {
        ParityLabel(mask as u32)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Hamming weight of the mask.
    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }

    /// `chi_S(x)` in the ±1 convention.
    #[inline]
    pub fn chi(self, x: usize) -> f64 {
        parity_sign(self.index(), x)
    }
}

impl fmt::Display for ParityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

/// Ordered, duplicate-free list of parity labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParitySpan {
    labels: Vec<ParityLabel>,
}

impl ParitySpan {
    pub fn new(labels: Vec<ParityLabel>) -> Result<Self> {
        let mut span = ParitySpan::default();
        for l in labels {
            span.push(l)?;
        }
        Ok(span)
    }

    pub fn push(&mut self, label: ParityLabel) -> Result<()> {
        if self.contains(label) {
            return Err(Error::DuplicateLabel(label.to_string()));
        }
        self.labels.push(label);
        Ok(())
    }

    pub fn contains(&self, label: ParityLabel) -> bool {
        self.labels.contains(&label)
    }

    pub fn labels(&self) -> &[ParityLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Coefficients of a state on a parity span plus its normalized remainder.
#[derive(Debug, Clone)]
pub struct ProjectionReport {
    pub coefficients: Vec<Complex64>,
    pub residual_norm: f64,
    pub residual: Option<StateVector>,
}

/// In-place unnormalized Walsh-Hadamard butterfly.
pub fn fwht_in_place<T>(buf: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let len = buf.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in buf.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps raw amplitudes; requires unit norm.
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        let s = Self::from_raw(n, amps)?;
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(s)
    }

    /// Wraps raw amplitudes and rescales them to unit norm.
    pub fn normalized(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        let mut s = Self::from_raw(n, amps)?;
        let norm = s.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        s.scale(1.0 / norm);
        Ok(s)
    }

    fn from_raw(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: amps.len() });
        }
        Ok(StateVector { n, amps })
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        if index >= 1 << n {
            return Err(Error::InvalidParameter(format!("basis index {index} out of range")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// `|chi_S> = Had^n |S>`.
    pub fn parity(n: usize, label: ParityLabel) -> Result<Self> {
        check_qubits(n)?;
        if label.index() >= 1 << n {
            return Err(Error::InvalidParameter(format!("label {label} out of range for n={n}")));
        }
        let a = (0.5f64).powf(n as f64 / 2.0);
        let amps = (0..1usize << n).map(|x| Complex64::new(a * label.chi(x), 0.0)).collect();
        Ok(StateVector { n, amps })
    }

    /// Phase state `sum_x (-1)^{f(x)} |x> / sqrt(2^n)` of a predicate.
    pub fn phase_state<F: Fn(usize) -> bool>(n: usize, f: F) -> Result<Self> {
        check_qubits(n)?;
        let a = (0.5f64).powf(n as f64 / 2.0);
        let amps = (0..1usize << n).map(|x| Complex64::new(if f(x) { -a } else { a }, 0.0)).collect();
        Ok(StateVector { n, amps })
    }

    /// Real-valued state proportional to `values`.
    pub fn from_real(n: usize, values: &[f64]) -> Result<Self> {
        Self::normalized(n, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Unitarily invariant random state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_qubits(n)?;
        let amps =
            (0..1usize << n).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        Self::normalized(n, amps)
    }

    /// Uniform superposition of parity states with the given coefficients.
    pub fn from_parities(n: usize, terms: &[(ParityLabel, Complex64)]) -> Result<Self> {
        check_qubits(n)?;
        let mut hat = vec![Complex64::new(0.0, 0.0); 1 << n];
        for &(l, c) in terms {
            if l.index() >= hat.len() {
                return Err(Error::InvalidParameter(format!("label {l} out of range for n={n}")));
            }
            hat[l.index()] += c;
        }
        let s = StateVector { n, amps: hat }.walsh_hadamard();
        Self::normalized(n, s.amps)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, k: f64) {
        for a in &mut self.amps {
            *a *= k;
        }
    }

    /// Basis-measurement distribution `|amps[x]|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `Had^n s` in `O(n 2^n)`.
    pub fn walsh_hadamard(&self) -> StateVector {
        let mut amps = self.amps.clone();
        fwht_in_place(&mut amps);
        let k = (0.5f64).powf(self.n as f64 / 2.0);
        for a in &mut amps {
            *a *= k;
        }
        StateVector { n: self.n, amps }
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    pub fn project_onto_span(&self, span: &ParitySpan) -> Result<ProjectionReport> {
        let hat = self.walsh_hadamard();
        self.project_with_transform(&hat, span)
    }

    /// Projection when the Hadamard transform of `self` is already known.
    pub(crate) fn project_with_transform(&self, hat: &StateVector, span: &ParitySpan) -> Result<ProjectionReport> {
        if span.is_empty() {
            return Err(Error::InvalidParameter("projection onto an empty span".into()));
        }
        let mut coefficients = Vec::with_capacity(span.len());
        for l in span.labels() {
            if l.index() >= self.dim() {
                return Err(Error::InvalidParameter(format!("label {l} out of range")));
            }
            coefficients.push(hat.amps[l.index()]);
        }
        let mut rest = hat.amps.clone();
        for l in span.labels() {
            rest[l.index()] = Complex64::new(0.0, 0.0);
        }
        // summing the complement is accurate even when alpha is tiny
        let alpha = rest.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let residual = if alpha >= RESIDUAL_TOL {
            let rest = StateVector { n: self.n, amps: rest }.walsh_hadamard();
            Some(StateVector::normalized(self.n, rest.amps)?)
        } else {
            None
        };
        Ok(ProjectionReport { coefficients, residual_norm: alpha, residual })
    }

    /// Binary dump: u32 `n` then `2^n` little-endian `(re, im)` f64 pairs.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        check_qubits(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        let mut b8 = [0u8; 8];
        for _ in 0..1usize << n {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            amps.push(Complex64::new(re, im));
        }
        Self::new(n, amps)
    }
}
