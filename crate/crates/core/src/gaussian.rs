//! Gaussian-state linear algebra in shot-noise units.
//!
//! Quadratures are ordered `(q1, p1, q2, p2, ..., qN, pN)` and the symplectic
//! form is `Ω = ⊕ [[0, 1], [-1, 0]]`. Vacuum has covariance `I`.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance below 1 accepted for a symplectic eigenvalue of a valid state.
pub const VALIDITY_TOL: f64 = 1e-9;
/// Spectrum members below `1 - INVALID_TOL` are rejected outright.
pub const INVALID_TOL: f64 = 1e-6;
/// Relative symmetry tolerance.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Which quadrature a homodyne detector measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    Q,
    P,
}

/// The `2N x 2N` symplectic form.
pub fn omega(modes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

/// `Z = diag(1, -1)` repeated over `modes` modes.
pub fn z_pattern(modes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * modes, 2 * modes, |i, j| {
        if i != j {
            0.0
        } else if i % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    })
}

/// Binary entropy-like function of a symplectic eigenvalue, in bits.
///
/// `h(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2)`, with `h(1) = 0`.
/// Values within [`VALIDITY_TOL`] below 1 are treated as 1.
pub fn entropy_h(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("h({x}) is not finite")));
    }
    if x < 1.0 - VALIDITY_TOL {
        return Err(Error::Domain(format!(
            "symplectic eigenvalue {x} is below 1"
        )));
    }
    if x <= 1.0 {
        return Ok(0.0);
    }
    let a = 0.5 * (x + 1.0);
    let b = 0.5 * (x - 1.0);
    Ok(a * a.log2() - b * b.log2())
}

/// Symplectic eigenvalues, sorted in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticSpectrum {
    values: Vec<f64>,
}

impl SymplecticSpectrum {
    /// Wraps raw values; sorts descending and rejects members below `1 - INVALID_TOL`.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite symplectic eigenvalue".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        if let Some(&min) = values.last() {
            if min < 1.0 - INVALID_TOL {
                return Err(Error::InvalidState(format!(
                    "symplectic eigenvalue {min} violates the uncertainty relation"
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::INFINITY)
    }

    /// von Neumann entropy `Σ h(ν_k)`.
    pub fn entropy(&self) -> Result<f64> {
        self.values.iter().map(|&v| entropy_h(v.max(1.0))).sum()
    }
}

/// Real-symmetric square root of a positive-definite matrix.
pub(crate) fn sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidState(
            "covariance matrix is not positive definite".into(),
        ));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let q = &eig.eigenvectors;
    let s = q * d * q.transpose();
    Ok(0.5 * (&s + s.transpose()))
}

/// Raw symplectic spectrum of a symmetric matrix (no validity filtering).
///
/// `iΩV` is similar to the Hermitian matrix `i V^{1/2} Ω V^{1/2}`, whose real
/// eigenvalues come in `±ν_k` pairs; the positive half is returned, descending.
pub fn raw_symplectic_eigenvalues(v: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n2 = v.nrows();
    if n2 == 0 || n2 % 2 != 0 || v.ncols() != n2 {
        return Err(Error::Dimension(format!(
            "expected an even square matrix, got {}x{}",
            v.nrows(),
            v.ncols()
        )));
    }
    let s = sqrt_psd(v)?;
    let a = &s * omega(n2 / 2) * &s;
    let h = DMatrix::from_fn(n2, n2, |i, j| {
        Complex::new(0.0, 0.5 * (a[(i, j)] - a[(j, i)]))
    });
    let eig = h
        .try_symmetric_eigen(1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("Hermitian eigen-solver did not converge".into()))?;
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.truncate(n2 / 2);
    Ok(ev)
}

/// Covariance matrix of an `N`-mode Gaussian state, with optional mode labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    m: DMatrix<f64>,
    labels: Vec<String>,
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "covariance matrix must be 2N x 2N, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite covariance entry".into()));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::InvalidState(format!(
            "matrix is not symmetric (max deviation {asym:e})"
        )));
    }
    Ok(())
}

fn default_labels(modes: usize) -> Vec<String> {
    (0..modes).map(|k| format!("m{k}")).collect()
}

impl CovMatrix {
    /// Validated constructor: symmetric and satisfying `V + iΩ ≥ 0`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&m)?;
        let cm = Self::from_symmetric(m);
        cm.validate()?;
        Ok(cm)
    }

    /// Builds from a matrix assumed symmetric and physical; the matrix is
    /// symmetrized to remove round-off asymmetry.
    pub(crate) fn from_symmetric(m: DMatrix<f64>) -> Self {
        let modes = m.nrows() / 2;
        let m = 0.5 * (&m + m.transpose());
        Self {
            m,
            labels: default_labels(modes),
        }
    }

    /// Attaches mode labels (one per mode).
    pub fn with_labels<S: Into<String>>(
        mut self,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != self.modes() {
            return Err(Error::Dimension(format!(
                "{} labels for {} modes",
                labels.len(),
                self.modes()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Vacuum on `modes` modes.
    pub fn vacuum(modes: usize) -> Self {
        Self::from_symmetric(DMatrix::identity(2 * modes, 2 * modes))
    }

    /// Single-mode thermal state `ν I`.
    pub fn thermal(nu: f64) -> Result<Self> {
        if !(nu >= 1.0) {
            return Err(Error::Parameter(format!("thermal variance {nu} < 1")));
        }
        Ok(Self::from_symmetric(DMatrix::identity(2, 2) * nu))
    }

    pub fn modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Round-off floor for the uncertainty check: [`VALIDITY_TOL`], widened
    /// for matrices with very large entries where the eigen-solver itself
    /// cannot resolve 1e-9.
    pub fn validity_tolerance(&self) -> f64 {
        VALIDITY_TOL.max(1024.0 * f64::EPSILON * self.m.amax())
    }

    /// Checks the uncertainty relation via the symplectic spectrum.
    pub fn validate(&self) -> Result<()> {
        let ev = raw_symplectic_eigenvalues(&self.m)?;
        let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
        if min < 1.0 - self.validity_tolerance() {
            return Err(Error::InvalidState(format!(
                "smallest symplectic eigenvalue {min} < 1"
            )));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Marginal on the listed modes, in the listed order (partial trace).
    pub fn reduce(&self, keep: &[usize]) -> Result<Self> {
        let idx = self.quad_indices(keep)?;
        let m = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.m[(idx[i], idx[j])]);
        Ok(Self {
            m,
            labels: keep.iter().map(|&k| self.labels[k].clone()).collect(),
        })
    }

    /// Reorders modes: output mode `i` is input mode `order[i]`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.modes() {
            return Err(Error::Dimension("permutation must list every mode".into()));
        }
        let mut seen = vec![false; self.modes()];
        for &k in order {
            if k >= self.modes() || seen[k] {
                return Err(Error::Dimension("invalid mode permutation".into()));
            }
            seen[k] = true;
        }
        self.reduce(order)
    }

    fn quad_indices(&self, modes: &[usize]) -> Result<Vec<usize>> {
        let n = self.modes();
        let mut idx = Vec::with_capacity(2 * modes.len());
        for &k in modes {
            if k >= n {
                return Err(Error::Dimension(format!("mode {k} out of range (N = {n})")));
            }
            idx.push(2 * k);
            idx.push(2 * k + 1);
        }
        Ok(idx)
    }

    /// Splits into (kept block A, measured block B, cross block C) for mode `mode`.
    fn partition(
        &self,
        mode: usize,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, Vec<usize>)> {
        let n = self.modes();
        if mode >= n {
            return Err(Error::Dimension(format!(
                "mode {mode} out of range (N = {n})"
            )));
        }
        if n < 2 {
            return Err(Error::Dimension("cannot measure the only mode".into()));
        }
        let kept: Vec<usize> = (0..n).filter(|&k| k != mode).collect();
        let ki = self.quad_indices(&kept)?;
        let bi = [2 * mode, 2 * mode + 1];
        let a = DMatrix::from_fn(ki.len(), ki.len(), |i, j| self.m[(ki[i], ki[j])]);
        let b = DMatrix::from_fn(2, 2, |i, j| self.m[(bi[i], bi[j])]);
        let c = DMatrix::from_fn(ki.len(), 2, |i, j| self.m[(ki[i], bi[j])]);
        Ok((a, b, c, kept))
    }

    fn kept_labels(&self, kept: &[usize]) -> Vec<String> {
        kept.iter().map(|&k| self.labels[k].clone()).collect()
    }
}

/// Homodyne detection of `quadrature` on `mode`; returns the conditional CM
/// of the remaining modes, `A - C (Π B Π)^+ Cᵀ`.
pub fn condition_homodyne(v: &CovMatrix, mode: usize, quadrature: Quadrature) -> Result<CovMatrix> {
    let (a, b, c, kept) = v.partition(mode)?;
    let j = match quadrature {
        Quadrature::Q => 0,
        Quadrature::P => 1,
    };
    let var = b[(j, j)];
    if !(var > 0.0) {
        return Err(Error::Degenerate(format!(
            "measured quadrature variance {var} is not positive"
        )));
    }
    let col = c.column(j).into_owned();
    let out = a - (&col * col.transpose()) / var;
    Ok(CovMatrix {
        m: symmetrize(out),
        labels: v.kept_labels(&kept),
    })
}

/// Heterodyne detection of `mode`; returns `A - C (B + I)^{-1} Cᵀ`.
pub fn condition_heterodyne(v: &CovMatrix, mode: usize) -> Result<CovMatrix> {
    let (a, b, c, kept) = v.partition(mode)?;
    let bi = b + DMatrix::identity(2, 2);
    let inv = bi
        .try_inverse()
        .ok_or_else(|| Error::Numeric("B + I is singular".into()))?;
    let out = a - &c * inv * c.transpose();
    Ok(CovMatrix {
        m: symmetrize(out),
        labels: v.kept_labels(&kept),
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (&m + m.transpose())
}

/// Symplectic spectrum of a covariance matrix.
pub fn symplectic_eigenvalues(v: &CovMatrix) -> Result<SymplecticSpectrum> {
    SymplecticSpectrum::new(raw_symplectic_eigenvalues(&v.m)?)
}

/// von Neumann entropy in bits.
pub fn von_neumann_entropy(v: &CovMatrix) -> Result<f64> {
    symplectic_eigenvalues(v)?.entropy()
}

/// Closed-form two-mode spectrum from the symplectic invariants
/// `Δ = det A + det B + 2 det C` and `det V`.
pub fn two_mode_spectrum(v: &CovMatrix) -> Result<SymplecticSpectrum> {
    if v.modes() != 2 {
        return Err(Error::Dimension(
            "two-mode formula needs a 4x4 matrix".into(),
        ));
    }
    let m = &v.m;
    let det2 = |r: usize, c: usize| m[(r, c)] * m[(r + 1, c + 1)] - m[(r, c + 1)] * m[(r + 1, c)];
    let delta = det2(0, 0) + det2(2, 2) + 2.0 * det2(0, 2);
    let det = m.determinant();
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let plus = (0.5 * (delta + disc)).sqrt();
    let minus = if plus > 0.0 {
        det.max(0.0).sqrt() / plus
    } else {
        0.0
    };
    SymplecticSpectrum::new(vec![plus, minus])
}

/// Spectrum of the standard form `[[a I, c Z], [c Z, b I]]`:
/// `ν± = ½[√((a+b)² − 4c²) ± (b − a)]`.
pub fn standard_form_spectrum(a: f64, b: f64, c: f64) -> Result<SymplecticSpectrum> {
    let y = ((a + b) * (a + b) - 4.0 * c * c).max(0.0).sqrt();
    SymplecticSpectrum::new(vec![0.5 * (y + (b - a)), 0.5 * (y - (b - a))])
}

/// A `2N x 2N` symplectic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    s: DMatrix<f64>,
}

impl SymplecticMatrix {
    /// Validated constructor: `S Ω Sᵀ = Ω` entrywise to `1e-10` (scaled by `|S|²`).
    pub fn new(s: DMatrix<f64>) -> Result<Self> {
        let n2 = s.nrows();
        if n2 == 0 || n2 % 2 != 0 || s.ncols() != n2 {
            return Err(Error::Dimension(format!(
                "symplectic matrix must be 2N x 2N, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let om = omega(n2 / 2);
        let dev = (&s * &om * s.transpose() - &om).amax();
        let scale = s.amax().powi(2).max(1.0);
        if dev > 1e-10 * scale {
            return Err(Error::Parameter(format!(
                "matrix is not symplectic (deviation {dev:e})"
            )));
        }
        Ok(Self { s })
    }

    pub(crate) fn from_raw(s: DMatrix<f64>) -> Self {
        Self { s }
    }

    pub fn identity(modes: usize) -> Self {
        Self::from_raw(DMatrix::identity(2 * modes, 2 * modes))
    }

    pub fn modes(&self) -> usize {
        self.s.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn transpose(&self) -> Self {
        Self::from_raw(self.s.transpose())
    }

    /// `S^{-1} = -Ω Sᵀ Ω`.
    pub fn inverse(&self) -> Self {
        let om = omega(self.modes());
        Self::from_raw(-(&om * self.s.transpose() * &om))
    }

    /// Composition `self · other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.modes() != other.modes() {
            return Err(Error::Dimension(
                "cannot compose different mode counts".into(),
            ));
        }
        Ok(Self::from_raw(&self.s * &other.s))
    }

    /// Embeds this `k`-mode transform into an `n`-mode identity, acting on `targets`.
    pub fn embed(&self, n: usize, targets: &[usize]) -> Result<Self> {
        if targets.len() != self.modes() {
            return Err(Error::Dimension(
                "target count differs from transform size".into(),
            ));
        }
        if targets.iter().any(|&t| t >= n) {
            return Err(Error::Dimension("target mode out of range".into()));
        }
        let mut big = DMatrix::identity(2 * n, 2 * n);
        let idx: Vec<usize> = targets.iter().flat_map(|&t| [2 * t, 2 * t + 1]).collect();
        for &i in &idx {
            for &j in &idx {
                big[(i, j)] = 0.0;
            }
        }
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                big[(i, j)] = self.s[(a, b)];
            }
        }
        Ok(Self::from_raw(big))
    }
}

/// `V → S V Sᵀ`.
pub fn apply_symplectic(v: &CovMatrix, s: &SymplecticMatrix) -> Result<CovMatrix> {
    if v.modes() != s.modes() {
        return Err(Error::Dimension(format!(
            "{}-mode transform on {}-mode state",
            s.modes(),
            v.modes()
        )));
    }
    let m = &s.s * &v.m * s.s.transpose();
    Ok(CovMatrix {
        m: symmetrize(m),
        labels: v.labels.clone(),
    })
}

/// Two-mode squeezed vacuum `[[ν I, √(ν²−1) Z], [√(ν²−1) Z, ν I]]`.
pub fn tmsv_cm(nu: f64) -> Result<CovMatrix> {
    if !(nu >= 1.0) || !nu.is_finite() {
        return Err(Error::Parameter(format!("TMSV variance {nu} must be ≥ 1")));
    }
    let c = (nu * nu - 1.0).sqrt();
    let mut m = DMatrix::identity(4, 4) * nu;
    m[(0, 2)] = c;
    m[(2, 0)] = c;
    m[(1, 3)] = -c;
    m[(3, 1)] = -c;
    Ok(CovMatrix::from_symmetric(m))
}

/// Beamsplitter of transmissivity `τ`: `[[√τ I, √(1−τ) I], [−√(1−τ) I, √τ I]]`.
pub fn beamsplitter(tau: f64) -> Result<SymplecticMatrix> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Parameter(format!(
            "transmissivity {tau} outside [0, 1]"
        )));
    }
    let t = tau.sqrt();
    let r = (1.0 - tau).sqrt();
    let mut s = DMatrix::zeros(4, 4);
    for k in 0..2 {
        s[(k, k)] = t;
        s[(k + 2, k + 2)] = t;
        s[(k, k + 2)] = r;
        s[(k + 2, k)] = -r;
    }
    Ok(SymplecticMatrix::from_raw(s))
}

/// Single-mode squeezer `diag(e^{−r}, e^{r})`.
pub fn squeezer(r: f64) -> Result<SymplecticMatrix> {
    if !r.is_finite() {
        return Err(Error::Parameter("squeezing must be finite".into()));
    }
    Ok(SymplecticMatrix::from_raw(DMatrix::from_diagonal(
        &DVector::from_vec(vec![(-r).exp(), r.exp()]),
    )))
}

/// Phase rotation `[[cos θ, sin θ], [−sin θ, cos θ]]`.
pub fn rotation(theta: f64) -> Result<SymplecticMatrix> {
    if !theta.is_finite() {
        return Err(Error::Parameter("rotation angle must be finite".into()));
    }
    let (s, c) = theta.sin_cos();
    Ok(SymplecticMatrix::from_raw(DMatrix::from_row_slice(
        2,
        2,
        &[c, s, -s, c],
    )))
}

fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = DMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        m.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    m
}

/// Block-diagonal direct sum of covariance matrices, preserving mode order and labels.
pub fn direct_sum_cm(parts: &[&CovMatrix]) -> CovMatrix {
    let mats: Vec<&DMatrix<f64>> = parts.iter().map(|p| &p.m).collect();
    CovMatrix {
        m: block_diag(&mats),
        labels: parts
            .iter()
            .flat_map(|p| p.labels.iter().cloned())
            .collect(),
    }
}

/// Block-diagonal direct sum of symplectic matrices.
pub fn direct_sum_symplectic(parts: &[&SymplecticMatrix]) -> SymplecticMatrix {
    let mats: Vec<&DMatrix<f64>> = parts.iter().map(|p| &p.s).collect();
    SymplecticMatrix::from_raw(block_diag(&mats))
}

/// Gaussian purification: a `2N`-mode pure CM whose first `N` modes carry `v`.
///
/// Uses `P = [[V, C], [Cᵀ, ΘVΘ]]` with `Θ = ⊕ diag(1, −1)` and
/// `C = V^{1/2} √(I − N^{-1}) V^{1/2} Θ`, `N = V^{1/2} Ω V Ωᵀ V^{1/2}`.
pub fn purify(v: &CovMatrix) -> Result<CovMatrix> {
    let n = v.modes();
    let om = omega(n);
    let theta = z_pattern(n);
    let s = sqrt_psd(&v.m)?;
    let big_n = &s * &om * &v.m * om.transpose() * &s;
    let eig = symmetrize(big_n).symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidState("state cannot be purified".into()));
    }
    // eigenvalues are ν_k²; snap pure modes so round-off is not amplified by √
    let root = eig.eigenvalues.map(|l| {
        let x = 1.0 - 1.0 / l;
        if x < 1e-10 {
            0.0
        } else {
            x.sqrt()
        }
    });
    let q = &eig.eigenvectors;
    let r = q * DMatrix::from_diagonal(&root) * q.transpose();
    let c = &s * r * &s * &theta;
    let lower = &theta * &v.m * &theta;
    let mut p = DMatrix::zeros(4 * n, 4 * n);
    p.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&v.m);
    p.view_mut((0, 2 * n), (2 * n, 2 * n)).copy_from(&c);
    p.view_mut((2 * n, 0), (2 * n, 2 * n))
        .copy_from(&c.transpose());
    p.view_mut((2 * n, 2 * n), (2 * n, 2 * n)).copy_from(&lower);
    let mut labels = v.labels.clone();
    labels.extend(v.labels.iter().map(|l| format!("{l}'")));
    Ok(CovMatrix {
        m: symmetrize(p),
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_h(1.0).unwrap(), 0.0);
        assert!(close(entropy_h(3.0).unwrap(), 2.0, 1e-14));
        let asym = (std::f64::consts::E * 50.0).log2();
        assert!(close(entropy_h(100.0).unwrap(), asym, 0.01));
        assert!(entropy_h(0.5).is_err());
        assert_eq!(entropy_h(1.0 - 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn spectrum_of_simple_states() {
        let th = CovMatrix::thermal(3.5).unwrap();
        let s = symplectic_eigenvalues(&th).unwrap();
        assert!(close(s.values()[0], 3.5, 1e-12));

        for nu in [1.0, 2.0, 5.0, 50.0] {
            let s = symplectic_eigenvalues(&tmsv_cm(nu).unwrap()).unwrap();
            for v in s.values() {
                assert!(close(*v, 1.0, 1e-9), "nu={nu}: {v}");
            }
            assert!(von_neumann_entropy(&tmsv_cm(nu).unwrap()).unwrap() < 1e-9);
        }

        let prod = direct_sum_cm(&[
            &CovMatrix::thermal(2.0).unwrap(),
            &CovMatrix::thermal(7.0).unwrap(),
        ]);
        let s = symplectic_eigenvalues(&prod).unwrap();
        assert!(close(s.values()[0], 7.0, 1e-12) && close(s.values()[1], 2.0, 1e-12));
    }

    #[test]
    fn entropy_examples_on_states() {
        assert!(von_neumann_entropy(&CovMatrix::vacuum(3)).unwrap().abs() < 1e-12);
        let th = CovMatrix::thermal(3.0).unwrap();
        assert!(close(von_neumann_entropy(&th).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn homodyne_examples() {
        let nu = 4.0;
        let v = tmsv_cm(nu).unwrap();
        let out = condition_homodyne(&v, 1, Quadrature::Q).unwrap();
        assert!(close(out.matrix()[(0, 0)], 1.0 / nu, 1e-12));
        assert!(close(out.matrix()[(1, 1)], nu, 1e-12));

        let prod = direct_sum_cm(&[
            &CovMatrix::thermal(2.0).unwrap(),
            &CovMatrix::thermal(3.0).unwrap(),
        ]);
        let out = condition_homodyne(&prod, 1, Quadrature::P).unwrap();
        assert_eq!(out.matrix(), &(DMatrix::identity(2, 2) * 2.0));
    }

    #[test]
    fn homodyne_rejects_zero_variance() {
        let mut m = DMatrix::identity(4, 4);
        m[(2, 2)] = 0.0;
        let v = CovMatrix::from_symmetric(m);
        assert!(matches!(
            condition_homodyne(&v, 1, Quadrature::Q),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn heterodyne_examples() {
        let v = tmsv_cm(6.0).unwrap();
        let out = condition_heterodyne(&v, 1).unwrap();
        let id = DMatrix::<f64>::identity(2, 2);
        assert!((out.matrix() - id).amax() < 1e-12);

        let prod = direct_sum_cm(&[
            &CovMatrix::thermal(2.0).unwrap(),
            &CovMatrix::thermal(3.0).unwrap(),
        ]);
        let out = condition_heterodyne(&prod, 0).unwrap();
        assert_eq!(out.matrix(), &(DMatrix::identity(2, 2) * 3.0));
    }

    #[test]
    fn builders() {
        assert_eq!(tmsv_cm(1.0).unwrap().matrix(), &DMatrix::identity(4, 4));
        let bs = beamsplitter(0.5).unwrap();
        let r = 0.5f64.sqrt();
        assert!(close(bs.matrix()[(0, 2)], r, 1e-15));
        assert!(close(bs.matrix()[(1, 3)], r, 1e-15));
        assert_eq!(bs.matrix()[(0, 3)], 0.0);
        assert_eq!(squeezer(0.0).unwrap().matrix(), &DMatrix::identity(2, 2));
        assert!(SymplecticMatrix::new(bs.matrix().clone()).is_ok());
        assert!(SymplecticMatrix::new(rotation(0.7).unwrap().matrix().clone()).is_ok());
        assert!(SymplecticMatrix::new(squeezer(1.3).unwrap().matrix().clone()).is_ok());
        assert!(beamsplitter(1.5).is_err());
        assert!(tmsv_cm(0.5).is_err());
    }

    #[test]
    fn apply_symplectic_examples() {
        let v = tmsv_cm(3.0).unwrap();
        let out = apply_symplectic(&v, &SymplecticMatrix::identity(2)).unwrap();
        assert_eq!(out.matrix(), v.matrix());
        let out = apply_symplectic(&v, &beamsplitter(1.0).unwrap()).unwrap();
        assert!((out.matrix() - v.matrix()).amax() < 1e-15);
        let vac = CovMatrix::vacuum(2);
        let out = apply_symplectic(&vac, &beamsplitter(0.5).unwrap()).unwrap();
        assert!((out.matrix() - vac.matrix()).amax() < 1e-15);
        assert!(apply_symplectic(&vac, &SymplecticMatrix::identity(3)).is_err());
    }

    #[test]
    fn closed_forms_match_solver() {
        let v = CovMatrix::new(DMatrix::from_row_slice(
            4,
            4,
            &[
                5.0, 0.0, 3.0, 0.0, 0.0, 5.0, 0.0, -3.0, 3.0, 0.0, 4.0, 0.0, 0.0, -3.0, 0.0, 4.0,
            ],
        ))
        .unwrap();
        let a = symplectic_eigenvalues(&v).unwrap();
        let b = two_mode_spectrum(&v).unwrap();
        let c = standard_form_spectrum(5.0, 4.0, 3.0).unwrap();
        for k in 0..2 {
            assert!(close(a.values()[k], b.values()[k], 1e-12));
            assert!(close(a.values()[k], c.values()[k], 1e-12));
        }
    }

    #[test]
    fn purification_is_pure() {
        let v = direct_sum_cm(&[
            &CovMatrix::thermal(2.5).unwrap(),
            &CovMatrix::thermal(1.0).unwrap(),
        ]);
        let p = purify(&v).unwrap();
        for nu in symplectic_eigenvalues(&p).unwrap().values() {
            assert!(close(*nu, 1.0, 1e-9));
        }
        let red = p.reduce(&[0, 1]).unwrap();
        assert!((red.matrix() - v.matrix()).amax() < 1e-14);
    }

    #[test]
    fn embed_and_inverse() {
        let bs = beamsplitter(0.3).unwrap();
        let big = bs.embed(3, &[2, 0]).unwrap();
        assert!(SymplecticMatrix::new(big.matrix().clone()).is_ok());
        let id = big.compose(&big.inverse()).unwrap();
        assert!((id.matrix() - DMatrix::identity(6, 6)).amax() < 1e-14);
    }

    #[test]
    fn labels_follow_operations() {
        let v = tmsv_cm(2.0).unwrap().with_labels(["A", "B"]).unwrap();
        let out = condition_heterodyne(&v, 1).unwrap();
        assert_eq!(out.labels(), &["A".to_string()]);
        let sw = v.permute(&[1, 0]).unwrap();
        assert_eq!(sw.labels()[0], "B");
    }

    #[test]
    fn invalid_matrices_rejected() {
        let m = DMatrix::identity(2, 2) * 0.5;
        assert!(matches!(CovMatrix::new(m), Err(Error::InvalidState(_))));
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 0.1;
        assert!(CovMatrix::new(m).is_err());
        assert!(CovMatrix::new(DMatrix::identity(3, 3)).is_err());
    }
}
