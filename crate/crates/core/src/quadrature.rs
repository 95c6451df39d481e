//! Gauss–Legendre quadrature, 1-D and tensor-product.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Golub–Welsch: eigen-decomposition of the symmetric Jacobi matrix.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter(
                "quadrature needs at least one node".into(),
            ));
        }
        let mut j = DMatrix::zeros(n, n);
        for k in 1..n {
            let kf = k as f64;
            let b = kf / (4.0 * kf * kf - 1.0).sqrt();
            j[(k, k - 1)] = b;
            j[(k - 1, k)] = b;
        }
        let eig = j.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k], 2.0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Enforce the exact reflection symmetry of the rule.
        for k in 0..n / 2 {
            let x = 0.5 * (pairs[n - 1 - k].0 - pairs[k].0);
            let w = 0.5 * (pairs[n - 1 - k].1 + pairs[k].1);
            pairs[k] = (-x, w);
            pairs[n - 1 - k] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (c + h * x, h * w))
            .collect()
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (x, w) in self.mapped(a, b) {
            let y = f(x);
            if !y.is_finite() {
                return Err(Error::Integration(format!("integrand is {y} at x = {x}")));
            }
            acc += w * y;
        }
        Ok(acc)
    }
}

/// Mean of `f` over `[a, b]`: `(1/(b−a)) ∫_a^b f`, using `nodes` points.
pub fn integrate_uniform<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, nodes: usize) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Parameter(format!("empty interval [{a}, {b}]")));
    }
    let gl = GaussLegendre::new(nodes)?;
    Ok(gl.integrate(a, b, f)? / (b - a))
}

/// Mean of `f` over the box `∏ [a_i, b_i]` with a tensor-product rule.
/// Points are visited in lexicographic order, so the sum is deterministic.
pub fn tensor_mean<F>(bounds: &[(f64, f64)], nodes: usize, mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let gl = GaussLegendre::new(nodes)?;
    let axes: Vec<Vec<(f64, f64)>> = bounds
        .iter()
        .map(|&(a, b)| {
            gl.mapped(a, b)
                .into_iter()
                .map(|(x, w)| (x, w / (b - a)))
                .collect()
        })
        .collect();
    let dim = bounds.len();
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        for d in 0..dim {
            point[d] = axes[d][idx[d]].0;
            w *= axes[d][idx[d]].1;
        }
        let y = f(&point)?;
        if !y.is_finite() {
            return Err(Error::Integration(format!("integrand is {y} at {point:?}")));
        }
        acc += w * y;
        let mut d = dim;
        loop {
            if d == 0 {
                return Ok(acc);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < nodes {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Every point of the tensor grid with its normalized weight, in lexicographic order.
pub fn tensor_points(bounds: &[(f64, f64)], nodes: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let mut out = Vec::new();
    tensor_mean(bounds, nodes, |p| {
        out.push(p.to_vec());
        Ok(0.0)
    })?;
    let gl = GaussLegendre::new(nodes)?;
    let w1: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(a, b)| {
            gl.mapped(a, b)
                .into_iter()
                .map(|(_, w)| w / (b - a))
                .collect()
        })
        .collect();
    let dim = bounds.len();
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(flat, p)| {
            let mut rem = flat;
            let mut w = 1.0;
            for d in (0..dim).rev() {
                w *= w1[d][rem % nodes];
                rem /= nodes;
            }
            (p, w)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_exact_with_two_nodes() {
        let v = integrate_uniform(|x| 3.0 * x - 1.0, 0.0, 2.0, 2).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_normalization() {
        let v = integrate_uniform(|_| 4.5, -3.0, 7.0, 5).unwrap();
        assert!((v - 4.5).abs() < 1e-14);
    }

    #[test]
    fn square_with_eight_nodes() {
        let gl = GaussLegendre::new(8).unwrap();
        let v = gl.integrate(0.0, 1.0, |x| x * x).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 7, 24, 32, 64] {
            let gl = GaussLegendre::new(n).unwrap();
            let s: f64 = gl.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn smooth_function_converges() {
        let f = |x: f64| (3.0 * x).exp() * x.cos();
        let a = integrate_uniform(f, 0.0, 1.0, 16).unwrap();
        let b = integrate_uniform(f, 0.0, 1.0, 32).unwrap();
        assert!(((a - b) / b).abs() < 1e-7);
    }

    #[test]
    fn tensor_product() {
        let v = tensor_mean(&[(0.0, 1.0), (0.0, 2.0)], 4, |p| Ok(p[0] * p[1] * p[1])).unwrap();
        // mean of x over [0,1] is 1/2, mean of y^2 over [0,2] is 4/3
        assert!((v - 2.0 / 3.0).abs() < 1e-14);
        let pts = tensor_points(&[(0.0, 1.0), (0.0, 2.0)], 4).unwrap();
        let s: f64 = pts.iter().map(|(p, w)| w * p[0] * p[1] * p[1]).sum();
        assert!((s - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_rejected() {
        assert!(matches!(
            integrate_uniform(|x| 1.0 / (x - x), 0.0, 1.0, 3),
            Err(Error::Integration(_))
        ));
    }
}
