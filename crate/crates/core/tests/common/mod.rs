//! Random physical states and attacks shared by the integration tests.

#![allow(dead_code)]

use cvqkd_core::gaussian::{
    apply_symplectic, beamsplitter, direct_sum_cm, rotation, squeezer, CovMatrix, SymplecticMatrix,
};
use cvqkd_core::mdi::{max_correlation, MdiAttack};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub fn log_uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Random symplectic transform built from rotations, squeezers and
/// beamsplitters on every mode and adjacent pair.
pub fn random_symplectic(rng: &mut ChaCha20Rng, modes: usize) -> SymplecticMatrix {
    let mut s = SymplecticMatrix::identity(modes);
    for _ in 0..2 {
        for m in 0..modes {
            let local = rotation(rng.random_range(0.0..std::f64::consts::TAU))
                .unwrap()
                .compose(&squeezer(rng.random_range(-1.2..1.2)).unwrap())
                .unwrap()
                .compose(&rotation(rng.random_range(0.0..std::f64::consts::TAU)).unwrap())
                .unwrap();
            s = local.embed(modes, &[m]).unwrap().compose(&s).unwrap();
        }
        for m in 0..modes.saturating_sub(1) {
            let bs = beamsplitter(rng.random_range(0.0..1.0))
                .unwrap()
                .embed(modes, &[m, m + 1])
                .unwrap();
            s = bs.compose(&s).unwrap();
        }
    }
    s
}

/// `S (⊕ ν_i I) Sᵀ` with thermal variances `ν_i` log-uniform on `[1, 30]`;
/// each mode is left pure with probability `pure`.
pub fn random_cm(rng: &mut ChaCha20Rng, modes: usize, pure: f64) -> CovMatrix {
    let parts: Vec<CovMatrix> = (0..modes)
        .map(|_| {
            let nu = if rng.random_bool(pure) {
                1.0
            } else {
                log_uniform(rng, 1.0, 30.0)
            };
            CovMatrix::thermal(nu).unwrap()
        })
        .collect();
    let refs: Vec<&CovMatrix> = parts.iter().collect();
    apply_symplectic(&direct_sum_cm(&refs), &random_symplectic(rng, modes)).unwrap()
}

/// Random valid two-link attack with correlations inside the allowed box.
pub fn random_attack(rng: &mut ChaCha20Rng) -> MdiAttack {
    loop {
        let ta = rng.random_range(0.05..0.999);
        let tb = rng.random_range(0.05..0.999);
        let wa = rng.random_range(1.0..2.5);
        let wb = rng.random_range(1.0..2.5);
        let gmax = max_correlation(wa, wb);
        let g = rng.random_range(-1.0..=1.0) * gmax;
        let gp = rng.random_range(-1.0..=1.0) * gmax;
        if let Ok(a) = MdiAttack::new(ta, tb, wa, wb, g, gp) {
            return a;
        }
    }
}
