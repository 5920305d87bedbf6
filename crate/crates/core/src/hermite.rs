//! Normalized Hermite functions and Gauss–Hermite quadrature.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// h_0(x) … h_n(x) with h_n = (√π 2^n n!)^{-1/2} e^{−x²/2} H_n(x).
///
/// Uses the three-term recurrence on the normalized functions, which stays
/// finite where H_n and e^{−x²/2} separately would not.
pub fn functions(n_max: usize, x: f64) -> Vec<f64> {
    let mut h = vec![0.0; n_max + 1];
    h[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n_max >= 1 {
        h[1] = 2f64.sqrt() * x * h[0];
    }
    for n in 1..n_max {
        let nf = n as f64;
        h[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
    }
    h
}

/// Values, first and second derivatives of h_0 … h_n at `x`.
pub fn functions_with_derivatives(n_max: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = functions(n_max + 1, x);
    let d1 = (0..=n_max)
        .map(|n| {
            let down = if n > 0 { (n as f64 / 2.0).sqrt() * h[n - 1] } else { 0.0 };
            down - ((n as f64 + 1.0) / 2.0).sqrt() * h[n + 1]
        })
        .collect();
    let d2 = (0..=n_max).map(|n| (x * x - 2.0 * n as f64 - 1.0) * h[n]).collect();
    (h[..=n_max].to_vec(), d1, d2)
}

/// Gauss–Hermite rule: ∫ e^{−x²} f(x) dx ≈ Σ w_i f(x_i), exact for
/// polynomials of degree ≤ 2n − 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature needs at least one node");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k, k - 1)] = b;
            jacobi[(k - 1, k)] = b;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], PI.sqrt() * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weights for ∫ g(x) dx with g = e^{−x²}·polynomial, i.e. w_i e^{x_i²}.
    pub fn unweighted(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * (x * x).exp())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_under_quadrature() {
        let n_max = 12;
        let rule = GaussHermite::new(n_max + 1);
        let w = rule.unweighted();
        let vals: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| functions(n_max, x)).collect();
        for a in 0..=n_max {
            for b in 0..=n_max {
                let s: f64 = vals.iter().zip(&w).map(|(h, w)| w * h[a] * h[b]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-10, "{a} {b} {s}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let x = 0.7;
        let e = 1e-5;
        let (h, d1, d2) = functions_with_derivatives(6, x);
        let hp = functions(6, x + e);
        let hm = functions(6, x - e);
        for n in 0..=6 {
            assert!((d1[n] - (hp[n] - hm[n]) / (2.0 * e)).abs() < 1e-8);
            assert!((d2[n] - (hp[n] - 2.0 * h[n] + hm[n]) / (e * e)).abs() < 1e-4);
        }
    }

    #[test]
    fn rule_integrates_moments() {
        let rule = GaussHermite::new(5);
        let m2: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x * x).sum();
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-13);
        let m0: f64 = rule.weights.iter().sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-13);
    }
}
