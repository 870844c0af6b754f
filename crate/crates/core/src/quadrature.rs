//! Semicircle density, its Catalan moments, and the two weighted
//! Gauss–Chebyshev rules used by every limiting integral.
//!
//! Both weights that show up in the closed-form limits are Chebyshev
//! weights on `[-2w, 2w]`: the arcsine weight `1/sqrt(4w^2 - x^2)`
//! (first kind) and the semicircle density itself (second kind).
//! Substituting `x = 2w cos(theta)` makes every singular factor analytic,
//! so the rules converge geometrically for the analytic test-function
//! catalog.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Semicircle density `(2 pi w^2)^-1 sqrt(4w^2 - x^2)` on `[-2w, 2w]`, 0 outside.
pub fn rho_sc(lambda: f64, w: f64) -> f64 {
    let r2 = 4.0 * w * w - lambda * lambda;
    if r2 <= 0.0 {
        0.0
    } else {
        r2.sqrt() / (2.0 * PI * w * w)
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Moment `m_k` of the semicircle law: `Catalan(k/2) * w^k` for even k,
/// 0 for odd k by symmetry.
pub fn semicircle_moment(k: u32, w: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let m = (k / 2) as u64;
    binomial(2 * m, m) / (m as f64 + 1.0) * w.powi(k as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadKind {
    /// Arcsine weight `1/sqrt(4w^2 - x^2)`; weights sum to pi.
    Cheb1,
    /// Semicircle weight `rho_sc`; weights sum to 1.
    Cheb2,
}

/// A fixed-order rule with nodes strictly inside `(-2w, 2w)`, mirrored
/// about 0 so that odd integrands cancel exactly.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    kind: QuadKind,
    w: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn cheb1(order: usize, w: f64) -> Self {
        assert!(order >= 2 && w > 0.0);
        let k = order;
        let mut nodes = vec![0.0; k];
        let weights = vec![PI / k as f64; k];
        for i in 0..k / 2 {
            let theta = (2 * i + 1) as f64 * PI / (2.0 * k as f64);
            let x = 2.0 * w * theta.cos();
            nodes[i] = x;
            nodes[k - 1 - i] = -x;
        }
        // odd order: exact middle node at 0
        if k % 2 == 1 {
            nodes[k / 2] = 0.0;
        }
        QuadratureRule { kind: QuadKind::Cheb1, w, nodes, weights }
    }

    pub fn cheb2(order: usize, w: f64) -> Self {
        assert!(order >= 2 && w > 0.0);
        let k = order;
        let mut nodes = vec![0.0; k];
        let mut weights = vec![0.0; k];
        for i in 0..k.div_ceil(2) {
            let theta = (i + 1) as f64 * PI / (k + 1) as f64;
            let x = 2.0 * w * theta.cos();
            let wt = 2.0 / (k + 1) as f64 * theta.sin().powi(2);
            nodes[i] = x;
            nodes[k - 1 - i] = -x;
            weights[i] = wt;
            weights[k - 1 - i] = wt;
        }
        if k % 2 == 1 {
            nodes[k / 2] = 0.0;
        }
        QuadratureRule { kind: QuadKind::Cheb2, w, nodes, weights }
    }

    pub fn kind(&self) -> QuadKind {
        self.kind
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted sum over the nodes. Mirrored nodes are summed as pairs so
    /// that an odd integrand cancels exactly instead of to rounding noise.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let k = self.nodes.len();
        let mut acc = 0.0;
        let (mut i, mut j) = (0, k - 1);
        while i < j {
            let (fi, fj) = (f(self.nodes[i]), f(self.nodes[j]));
            if !fi.is_finite() || !fj.is_finite() {
                let bad = if fi.is_finite() { self.nodes[j] } else { self.nodes[i] };
                return Err(Error::NonFinite(format!("integrand at node {bad}")));
            }
            acc += self.weights[i] * (fi + fj);
            i += 1;
            j -= 1;
        }
        if i == j {
            let fm = f(self.nodes[i]);
            if !fm.is_finite() {
                return Err(Error::NonFinite(format!("integrand at node {}", self.nodes[i])));
            }
            acc += self.weights[i] * fm;
        }
        Ok(acc)
    }

    pub fn integrate_complex<F: Fn(f64) -> Complex64>(&self, f: F) -> Result<Complex64> {
        let k = self.nodes.len();
        let mut acc = Complex64::ZERO;
        let (mut i, mut j) = (0, k - 1);
        while i < j {
            let s = f(self.nodes[i]) + f(self.nodes[j]);
            if !s.re.is_finite() || !s.im.is_finite() {
                return Err(Error::NonFinite(format!("integrand near node {}", self.nodes[i])));
            }
            acc += self.weights[i] * s;
            i += 1;
            j -= 1;
        }
        if i == j {
            acc += self.weights[i] * f(self.nodes[i]);
        }
        Ok(acc)
    }
}
