//! Phase-encoded coherent-state protocols in a truncated Fock space.
//!
//! Alice sends one of `N` equiprobable coherent states `|z e^{2πik/N}⟩`
//! through a pure-loss or thermal-loss channel; Bob heterodynes.

mod ensemble;
mod rates;

pub use ensemble::{beamsplitter_fock, EveEnsemble, FockConfig};
pub use rates::{
    displaced_thermal_density, displaced_thermal_fock_density, mutual_info_discrete,
    optimize_radius, photons_from_excess_noise, pureloss_rates, thermal_rates, thermal_rates_with,
    threshold_discrete, BGrid, DiscreteRates, DiscreteThreshold, RrConditioning,
};

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// `N` coherent states of radius `z` at phases `2πk/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub n: usize,
    pub z: f64,
}

impl Constellation {
    pub fn new(n: usize, z: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 states, got {n}")));
        }
        if !(z >= 0.0 && z.is_finite()) {
            return Err(Error::Parameter(format!(
                "radius z = {z} must be finite and ≥ 0"
            )));
        }
        Ok(Self { n, z })
    }

    pub fn phase(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.n as f64
    }

    /// `a_k = z e^{iφ_k}`.
    pub fn amplitude(&self, k: usize) -> C64 {
        C64::from_polar(self.z, self.phase(k))
    }

    pub fn amplitudes(&self) -> Vec<C64> {
        (0..self.n).map(|k| self.amplitude(k)).collect()
    }
}

/// Gram matrix `V_ij = ⟨s a_i|s a_j⟩ = exp[−½(|sa_i|² + |sa_j|² − 2 s² a_i* a_j)]`.
pub fn overlap_matrix(c: &Constellation, scale: f64) -> Result<DMatrix<C64>> {
    if !(0.0..=1.0).contains(&scale) {
        return Err(Error::Parameter(format!("scale {scale} outside [0, 1]")));
    }
    let a: Vec<C64> = c.amplitudes().into_iter().map(|x| x * scale).collect();
    Ok(DMatrix::from_fn(c.n, c.n, |i, j| {
        (-(0.5 * (a[i].norm_sqr() + a[j].norm_sqr())) + a[i].conj() * a[j]).exp()
    }))
}

/// Lower-triangular `M` with `|a_k⟩ = Σ_{i≤k} M_ki |i⟩` in the Gram–Schmidt
/// basis of the states. Linearly dependent states leave their basis vector
/// unused (column of zeros).
pub fn gram_schmidt(v: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = v.nrows();
    if v.ncols() != n {
        return Err(Error::Dimension("Gram matrix must be square".into()));
    }
    const RANK_TOL: f64 = 1e-10;
    const DEPENDENT: f64 = 1e-8;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        for i in 0..k {
            let mii = m[(i, i)].re;
            if mii <= DEPENDENT {
                continue;
            }
            let mut s = v[(i, k)];
            for j in 0..i {
                s -= m[(i, j)].conj() * m[(k, j)];
            }
            m[(k, i)] = s / mii;
        }
        let used: f64 = (0..k).map(|i| m[(k, i)].norm_sqr()).sum();
        let rad = v[(k, k)].re - used;
        if rad < -RANK_TOL {
            return Err(Error::Numeric(format!(
                "Gram–Schmidt radicand {rad} at row {k}; states are numerically dependent"
            )));
        }
        m[(k, k)] = C64::new(rad.max(0.0).sqrt(), 0.0);
    }
    Ok(m)
}

/// `−Σ λ log₂ λ` over the positive eigenvalues; NaN propagates.
pub fn entropy_from_eigenvalues<I: IntoIterator<Item = f64>>(eigs: I) -> f64 {
    eigs.into_iter()
        .filter(|&l| !(l <= 1e-300))
        .map(|l| -l * l.log2())
        .sum()
}

/// Eigen-decomposition `(values, vectors)` of a Hermitian matrix.
///
/// Fock-space operators carry entries far below any meaningful scale and
/// whole rows of exact zeros; nalgebra's QR iteration can return non-finite
/// values on such input (underflow in the rotations). Entries below
/// `1e-100·max|m|` are flushed, zero rows are deflated (eigenvalue 0, unit
/// vector) and the remaining block is solved with an explicit tolerance.
pub(crate) fn hermitian_eigen(m: DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = m.nrows();
    let floor = 1e-100 * m.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let live: Vec<usize> = (0..n)
        .filter(|&i| m.row(i).iter().any(|x| x.norm() > floor))
        .collect();
    let sub = DMatrix::from_fn(live.len(), live.len(), |i, j| {
        let x = m[(live[i], live[j])];
        if x.norm() > floor {
            x
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let eig = sub
        .try_symmetric_eigen(1e-15, 1_000_000)
        .ok_or_else(|| Error::Numeric("Hermitian eigen-solver did not converge".into()))?;
    if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric(
            "Hermitian eigen-solver produced non-finite values".into(),
        ));
    }
    let mut values = vec![0.0; n];
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (c, l) in eig.eigenvalues.iter().enumerate() {
        values[c] = *l;
        for (r, &i) in live.iter().enumerate() {
            vectors[(i, c)] = eig.eigenvectors[(r, c)];
        }
    }
    let dead = (0..n).filter(|i| !live.contains(i));
    for (c, i) in (live.len()..n).zip(dead) {
        vectors[(i, c)] = C64::new(1.0, 0.0);
    }
    Ok((values, vectors))
}

/// Eigenvalues of a Hermitian matrix; a single NaN on solver failure.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    match hermitian_eigen(m.clone()) {
        Ok((v, _)) => v,
        Err(_) => vec![f64::NAN],
    }
}

/// Entropy of `(1/N) Σ_k |s a_k⟩⟨s a_k|`, built in the Gram–Schmidt basis.
pub fn constellation_entropy(c: &Constellation, scale: f64) -> Result<f64> {
    let m = gram_schmidt(&overlap_matrix(c, scale)?)?;
    let n = c.n;
    let mut rho = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                rho[(i, j)] += m[(k, i)] * m[(k, j)].conj();
            }
        }
    }
    rho /= C64::new(n as f64, 0.0);
    Ok(entropy_from_eigenvalues(hermitian_eigenvalues(&rho)))
}

/// Entropy of the phase-averaged coherent state, the Poisson mixture
/// `e^{−z²} Σ z^{2n}/n! |n⟩⟨n|` truncated at `n_max`.
pub fn continuous_alphabet_entropy(z: f64, n_max: usize) -> Result<f64> {
    let mean = z * z;
    let mut p = (-mean).exp();
    let mut total = 0.0;
    let mut h = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            p *= mean / n as f64;
        }
        total += p;
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    let loss = 1.0 - total;
    if loss > 1e-6 {
        return Err(Error::Cutoff(format!(
            "n_max = {n_max} loses {loss:.3e} of the Poisson weight at z = {z}"
        )));
    }
    Ok(h)
}

/// Hermitian density operator on a product of truncated Fock spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    dims: Vec<usize>,
    matrix: DMatrix<C64>,
    truncation_loss: f64,
}

impl FockDensity {
    pub fn new(dims: Vec<usize>, matrix: DMatrix<C64>, truncation_loss: f64) -> Result<Self> {
        let d: usize = dims.iter().product();
        if dims.is_empty() || dims.len() > 3 || matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension(format!(
                "density of size {}x{} does not match mode dimensions {dims:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            dims,
            matrix,
            truncation_loss,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn entropy(&self) -> f64 {
        entropy_from_eigenvalues(self.eigenvalues())
    }

    /// Hermitian to 1e-12, eigenvalues ≥ −1e-10, trace in `[1 − loss, 1]`.
    pub fn check(&self) -> Result<()> {
        let herm = (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::InvalidState(format!(
                "density is not Hermitian ({herm:.2e})"
            )));
        }
        let ev = self.eigenvalues();
        if ev.iter().any(|l| l.is_nan()) {
            return Err(Error::Numeric(
                "eigenvalues of the density are undefined".into(),
            ));
        }
        let min = ev.into_iter().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        let tr = self.trace();
        if tr > 1.0 + 1e-10 || tr < 1.0 - self.truncation_loss - 1e-10 {
            return Err(Error::InvalidState(format!(
                "trace {tr} outside [1 − {}, 1]",
                self.truncation_loss
            )));
        }
        Ok(())
    }
}
