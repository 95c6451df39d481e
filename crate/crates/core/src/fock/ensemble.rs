//! Eve's conditional states `ρ_{Eve|k}` after an entangling-cloner attack,
//! obtained from the pure three-mode state `|a_k⟩_A ⊗ |TMSV⟩_{Ee}`.
//!
//! The beamsplitter conserves photon number, so each output of `|n⟩_A|m⟩_E`
//! is kept exactly (Bob up to `2n_max` photons); the only truncation is on
//! the inputs and is reported as a trace deficit.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    entropy_from_eigenvalues, hermitian_eigen, hermitian_eigenvalues, overlap_matrix,
    Constellation, FockDensity, C64,
};
use crate::error::{Error, Result};

/// Truncation and quadrature settings of the Fock engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    pub n_max: usize,
    /// Largest cutoff reached by automatic escalation.
    pub n_max_cap: usize,
    /// Escalate when the trace deficit exceeds this.
    pub trace_tol: f64,
    pub auto_escalate: bool,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self {
            n_max: 15,
            n_max_cap: 45,
            trace_tol: 1e-6,
            auto_escalate: true,
        }
    }
}

impl FockConfig {
    pub fn with_cutoff(n_max: usize) -> Self {
        Self {
            n_max,
            ..Self::default()
        }
    }
}

/// `U|n⟩_A|m⟩_E` for all `n, m ≤ n_max`, where `a† → √τ b† + √(1−τ) f†` and
/// `e† → −√(1−τ) b† + √τ f†` (`b` reaches Bob, `f` is Eve's `E′`).
/// Entry `[n][m][j]` is the amplitude of `|j⟩_B |n+m−j⟩_{E′}`.
pub fn beamsplitter_fock(tau: f64, n_max: usize) -> Vec<Vec<Vec<f64>>> {
    let (st, sr) = (tau.sqrt(), (1.0 - tau).sqrt());
    let raise = |v: &[f64], x: f64, y: f64| -> Vec<f64> {
        let s = v.len() - 1;
        let mut out = vec![0.0; s + 2];
        for (j, &a) in v.iter().enumerate() {
            out[j + 1] += a * x * ((j + 1) as f64).sqrt();
            out[j] += a * y * ((s - j + 1) as f64).sqrt();
        }
        out
    };
    let mut table = Vec::with_capacity(n_max + 1);
    let mut first = vec![1.0];
    for n in 0..=n_max {
        if n > 0 {
            first = raise(&first, st, sr)
                .into_iter()
                .map(|x| x / (n as f64).sqrt())
                .collect();
        }
        let mut row = Vec::with_capacity(n_max + 1);
        let mut cur = first.clone();
        row.push(cur.clone());
        for m in 1..=n_max {
            cur = raise(&cur, -sr, st)
                .into_iter()
                .map(|x| x / (m as f64).sqrt())
                .collect();
            row.push(cur.clone());
        }
        table.push(row);
    }
    table
}

/// `λ² = n̄/(n̄+1)`, i.e. `λ = tanh[½ arcosh(2n̄+1)]`.
fn tmsv_lambda(nbar: f64) -> f64 {
    (nbar / (nbar + 1.0)).sqrt()
}

/// Eve's ensemble `{ρ_{Eve|k}}` in factored form: `ρ_{Eve|k} = Ψ_k Ψ_k†`
/// and the joint Gram matrix `G = W†W` of `W = [Ψ_0 … Ψ_{N−1}]` kept as
/// `G = QQ†` with `Q` of numerical rank.
#[derive(Debug, Clone)]
pub struct EveEnsemble {
    pub n_states: usize,
    /// Columns of each `Ψ_k`.
    pub block: usize,
    /// Cutoff actually used (0 for the closed-form pure-loss ensemble).
    pub n_max: usize,
    pub truncation_loss: f64,
    q: DMatrix<C64>,
    lambda: Vec<f64>,
    cond_entropy: Vec<f64>,
    psi: Option<Vec<DMatrix<C64>>>,
    /// Full Gram matrix `W†W` (Fock ensembles only).
    gram: Option<DMatrix<C64>>,
}

impl EveEnsemble {
    /// Pure loss: `ρ_{E′|k} = |√(1−τ) a_k⟩⟨·|`, Gram matrix from overlaps.
    pub fn pure_loss(c: &Constellation, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let g = overlap_matrix(c, (1.0 - tau).sqrt())?;
        Self::from_gram(c.n, 1, 0, 0.0, g, vec![0.0; c.n], None)
    }

    /// Thermal loss with `n̄` thermal photons in Eve's TMSV. The cutoff
    /// escalates in steps of 5 while the deficit exceeds `trace_tol`.
    pub fn thermal(c: &Constellation, tau: f64, nbar: f64, cfg: &FockConfig) -> Result<Self> {
        check_tau(tau)?;
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::Parameter(format!(
                "n̄ = {nbar} must be finite and ≥ 0"
            )));
        }
        let mut n_max = cfg.n_max;
        loop {
            let loss = input_loss(c.z, nbar, n_max);
            if loss <= cfg.trace_tol {
                return Self::thermal_at(c, tau, nbar, n_max, loss);
            }
            if !cfg.auto_escalate || n_max >= cfg.n_max_cap {
                return Err(Error::Cutoff(format!(
                    "trace deficit {loss:.3e} at n_max = {n_max} (z = {}, n̄ = {nbar})",
                    c.z
                )));
            }
            n_max = (n_max + 5).min(cfg.n_max_cap);
        }
    }

    fn thermal_at(c: &Constellation, tau: f64, nbar: f64, n_max: usize, loss: f64) -> Result<Self> {
        let bs = beamsplitter_fock(tau, n_max);
        let lam = tmsv_lambda(nbar);
        let norm_c = (1.0 - lam * lam).sqrt();
        let cm: Vec<f64> = (0..=n_max)
            .map(|m| norm_c * (-lam).powi(m as i32))
            .collect();
        let z = c.z;
        let mut coh = vec![(-0.5 * z * z).exp(); n_max + 1];
        for n in 1..=n_max {
            coh[n] = coh[n - 1] * z / (n as f64).sqrt();
        }
        let dim_f = 2 * n_max + 1;
        let dim_e = n_max + 1;
        let dim_b = 2 * n_max + 1;
        let psi: Vec<DMatrix<C64>> = (0..c.n)
            .into_par_iter()
            .map(|k| {
                let phi = c.phase(k);
                let mut p = DMatrix::<C64>::zeros(dim_f * dim_e, dim_b);
                for l in 0..dim_f {
                    for m in 0..dim_e {
                        for j in 0..dim_b {
                            let n = l as i64 + j as i64 - m as i64;
                            if n < 0 || n as usize > n_max {
                                continue;
                            }
                            let n = n as usize;
                            let amp = coh[n] * cm[m] * bs[n][m][j];
                            if amp != 0.0 {
                                p[(l * dim_e + m, j)] = C64::from_polar(amp, n as f64 * phi);
                            }
                        }
                    }
                }
                p
            })
            .collect();
        let nb = dim_b;
        let mut g = DMatrix::<C64>::zeros(c.n * nb, c.n * nb);
        for a in 0..c.n {
            for b in a..c.n {
                let blk = psi[a].adjoint() * &psi[b];
                g.view_mut((a * nb, b * nb), (nb, nb)).copy_from(&blk);
                if a != b {
                    g.view_mut((b * nb, a * nb), (nb, nb))
                        .copy_from(&blk.adjoint());
                }
            }
        }
        let cond: Vec<f64> = (0..c.n)
            .map(|k| {
                let blk = g.view((k * nb, k * nb), (nb, nb)).into_owned();
                entropy_from_eigenvalues(hermitian_eigenvalues(&blk))
            })
            .collect();
        let mut e = Self::from_gram(c.n, nb, n_max, loss, g.clone(), cond, Some(psi))?;
        e.gram = Some(g);
        Ok(e)
    }

    fn from_gram(
        n_states: usize,
        block: usize,
        n_max: usize,
        loss: f64,
        g: DMatrix<C64>,
        cond_entropy: Vec<f64>,
        psi: Option<Vec<DMatrix<C64>>>,
    ) -> Result<Self> {
        let g = (&g + g.adjoint()) * C64::new(0.5, 0.0);
        let rows = g.nrows();
        let (values, vectors) = hermitian_eigen(g)?;
        let top = values.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..values.len())
            .filter(|&i| values[i] > 1e-15 * top)
            .collect();
        let mut q = DMatrix::<C64>::zeros(rows, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            let s = values[i].sqrt();
            q.set_column(c, &(vectors.column(i) * C64::new(s, 0.0)));
        }
        Ok(Self {
            n_states,
            block,
            n_max,
            truncation_loss: loss,
            q,
            lambda: keep.iter().map(|&i| values[i]).collect(),
            cond_entropy,
            psi,
            gram: None,
        })
    }

    /// `S(ρ_{Eve|k})` for every `k`.
    pub fn conditional_entropies(&self) -> &[f64] {
        &self.cond_entropy
    }

    /// `S(ρ_Eve)` of the uniform mixture.
    pub fn average_entropy(&self) -> f64 {
        let n = self.n_states as f64;
        entropy_from_eigenvalues(self.lambda.iter().map(|l| l / n))
    }

    /// `χ(Eve : X_A) = S(ρ_Eve) − S(ρ_{Eve|0})`.
    pub fn holevo(&self) -> f64 {
        self.average_entropy() - self.cond_entropy[0]
    }

    /// `S(Σ_k w_k ρ_{Eve|k})` from the nonzero spectrum of `Q† diag(w) Q`.
    pub fn mixture_entropy(&self, weights: &[f64]) -> f64 {
        let r = self.q.ncols();
        let mut h = DMatrix::<C64>::zeros(r, r);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let rows = self.q.rows(k * self.block, self.block);
            h += rows.adjoint() * rows * C64::new(w, 0.0);
        }
        entropy_from_eigenvalues(hermitian_eigenvalues(&h))
    }

    /// Eve's state after Bob's heterodyne outcome `b`, projected from the
    /// joint pure states: `v_k = ⟨b|_B Φ_k⟩`, `ρ_{Eve|b} ∝ Σ_k v_k v_k†`.
    /// Returns `(p(b), S(ρ_{Eve|b}))`, where `p(b) = Σ_k |v_k|²/(Nπ)`.
    /// `None` for the closed-form pure-loss ensemble, where Bob's mode is
    /// uncorrelated with Eve's given `k` and the Bayesian mixture is exact.
    pub fn bob_conditioned(&self, b: C64) -> Option<(f64, f64)> {
        let g = self.gram.as_ref()?;
        let nb = self.block;
        let mut w = vec![C64::new((-0.5 * b.norm_sqr()).exp(), 0.0); nb];
        for j in 1..nb {
            w[j] = w[j - 1] * b.conj() / (j as f64).sqrt();
        }
        let wv = nalgebra::DVector::from_vec(w);
        let n = self.n_states;
        let mut h = DMatrix::<C64>::zeros(n, n);
        for k in 0..n {
            for l in k..n {
                let blk = g.view((k * nb, l * nb), (nb, nb));
                let v = (wv.adjoint() * blk * &wv)[(0, 0)];
                h[(k, l)] = v;
                h[(l, k)] = v.conj();
            }
        }
        let tr: f64 = h.diagonal().iter().map(|x| x.re).sum();
        if !(tr > 0.0) {
            return Some((0.0, 0.0));
        }
        let s = entropy_from_eigenvalues(hermitian_eigenvalues(&h).into_iter().map(|x| x / tr));
        Some((tr / (n as f64 * std::f64::consts::PI), s))
    }

    /// `ρ_{Eve|k}` on `E′ ⊗ e` (Fock ensembles only).
    pub fn conditional_density(&self, k: usize) -> Result<FockDensity> {
        let psi = self
            .psi
            .as_ref()
            .ok_or_else(|| Error::Parameter("no Fock representation".into()))?;
        let p = psi
            .get(k)
            .ok_or_else(|| Error::Parameter(format!("state index {k} out of range")))?;
        FockDensity::new(
            vec![2 * self.n_max + 1, self.n_max + 1],
            p * p.adjoint(),
            self.truncation_loss,
        )
    }

    /// `ρ_Eve = (1/N) Σ_k ρ_{Eve|k}` (Fock ensembles only).
    pub fn average_density(&self) -> Result<FockDensity> {
        let psi = self
            .psi
            .as_ref()
            .ok_or_else(|| Error::Parameter("no Fock representation".into()))?;
        let d = psi[0].nrows();
        let mut rho = DMatrix::<C64>::zeros(d, d);
        for p in psi {
            rho += p * p.adjoint();
        }
        rho /= C64::new(psi.len() as f64, 0.0);
        FockDensity::new(
            vec![2 * self.n_max + 1, self.n_max + 1],
            rho,
            self.truncation_loss,
        )
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Parameter(format!("τ = {tau} outside (0, 1)")));
    }
    Ok(())
}

/// Weight lost by truncating `|z⟩` and the TMSV at `n_max` photons.
fn input_loss(z: f64, nbar: f64, n_max: usize) -> f64 {
    let mean = z * z;
    let mut p = (-mean).exp();
    let mut kept = p;
    for n in 1..=n_max {
        p *= mean / n as f64;
        kept += p;
    }
    let lam2 = nbar / (nbar + 1.0);
    let tmsv_kept = 1.0 - lam2.powi(n_max as i32 + 1);
    (1.0 - kept * tmsv_kept).max(0.0)
}
