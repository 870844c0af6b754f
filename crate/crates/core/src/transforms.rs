//! Transform machinery verified numerically: the semicircle
//! characteristic function `v(t)`, its Stieltjes transform, finite
//! Volterra convolutions, and the second-kind integral equations whose
//! closed-form solutions the limit proofs rely on.

use crate::error::{Error, Result};
use crate::limit_laws::divided_difference_exp;
use crate::quadrature::QuadratureRule;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform grid `t_k = k h`, `k = 0..=steps`, with `steps * h = horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    step: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, step: f64) -> Result<TimeGrid> {
        if !(horizon > 0.0 && step > 0.0) {
            return Err(Error::InvalidParameter("grid horizon and step must be positive".into()));
        }
        if step > 0.05 {
            return Err(Error::InvalidParameter(format!(
                "grid step must be <= 0.05, got {step}"
            )));
        }
        let ratio = horizon / step;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon/step must be an integer, got {ratio}"
            )));
        }
        Ok(TimeGrid { horizon, step, steps: steps as usize })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// Nearest grid index of `t`; errors if `t` is off-grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.step).round();
        if (t - k * self.step).abs() > 1e-9 || k < 0.0 || k as usize >= self.len() {
            return Err(Error::GridMismatch(format!("{t} is not a grid node")));
        }
        Ok(k as usize)
    }
}

/// Complex samples over a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: TimeGrid,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: TimeGrid, f: F) -> GridFunction {
        let samples = (0..grid.len()).map(|k| f(grid.t(k))).collect();
        GridFunction { grid, samples }
    }

    pub fn from_real<F: Fn(f64) -> f64>(grid: TimeGrid, f: F) -> GridFunction {
        Self::from_fn(grid, |t| Complex64::new(f(t), 0.0))
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "grids differ: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Finite Volterra convolution `(f * g)(t) = int_0^t f(t-s) g(s) ds`
    /// by trapezoidal product integration; `O(h^2)` for smooth inputs.
    pub fn convolve(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        let h = self.grid.step;
        let n = self.grid.len();
        let f = &self.samples;
        let g = &other.samples;
        let mut out = vec![Complex64::ZERO; n];
        for k in 1..n {
            let mut acc = 0.5 * (f[k] * g[0] + f[0] * g[k]);
            for m in 1..k {
                acc += f[k - m] * g[m];
            }
            out[k] = acc * h;
        }
        Ok(GridFunction { grid: self.grid, samples: out })
    }

    /// Running integral `int_0^{t_k}` by the trapezoidal rule.
    pub fn cumulative(&self) -> GridFunction {
        let h = self.grid.step;
        let mut out = Vec::with_capacity(self.samples.len());
        out.push(Complex64::ZERO);
        let mut acc = Complex64::ZERO;
        for k in 1..self.samples.len() {
            acc += 0.5 * h * (self.samples[k - 1] + self.samples[k]);
            out.push(acc);
        }
        GridFunction { grid: self.grid, samples: out }
    }
}

/// `v(t) = int e^{it l} rho_sc(l) dl`, evaluated by the semicircle-weight
/// rule; real and even in `t` with `v(0) = 1`, `|v| <= 1`.
pub fn v_of_t(t: f64, rule: &QuadratureRule) -> f64 {
    rule.integrate(|l| (t * l).cos()).expect("cosine integrand is finite")
}

/// Grid samples of `v` (order picked to resolve oscillations up to the
/// grid horizon).
pub fn v_grid(grid: TimeGrid, w: f64) -> GridFunction {
    let order = quad_order_for(grid.horizon(), w);
    let rule = QuadratureRule::cheb2(order, w);
    GridFunction::from_real(grid, |t| v_of_t(t, &rule))
}

/// Rule order that keeps the oscillatory integrands of `e^{itl}` resolved
/// out to `t = horizon`.
pub fn quad_order_for(horizon: f64, w: f64) -> usize {
    (128usize).max((4.0 * horizon * w) as usize + 64)
}

/// Stieltjes transform of the semicircle law: the root of
/// `w^2 v^2 + z v + 1 = 0` with `v(z) ~ -1/z` at infinity.
pub fn stieltjes_v(z: Complex64, w: f64) -> Result<Complex64> {
    if z.im == 0.0 && z.re.abs() <= 2.0 * w {
        return Err(Error::InvalidParameter(format!(
            "Stieltjes transform undefined on the support, z = {z}"
        )));
    }
    let mut s = (z * z - 4.0 * w * w).sqrt();
    // pick the branch asymptotic to z itself
    if s.re * z.re + s.im * z.im < 0.0 {
        s = -s;
    }
    Ok((s - z) / (2.0 * w * w))
}

/// Solve `P(t) + coeff * int_0^t int_0^s Q(s - u) P(u) du ds = R(t)`
/// by forward substitution on the grid (trapezoidal rule in both layers).
pub fn solve_volterra(kernel: &GridFunction, rhs: &GridFunction, coeff: f64) -> Result<GridFunction> {
    if kernel.grid != rhs.grid {
        return Err(Error::GridMismatch("kernel and right-hand side grids differ".into()));
    }
    let h = kernel.grid.step;
    let n = kernel.grid.len();
    let q = &kernel.samples;
    let r = &rhs.samples;
    let mut p = vec![Complex64::ZERO; n];
    p[0] = r[0];
    // P_k enters its own update through the trapezoid corners of both
    // integral layers with weight coeff * h^2 q_0 / 4
    let denom = Complex64::ONE + coeff * h * h * 0.25 * q[0];
    let mut running = Complex64::ZERO; // sum_{j=1}^{k-1} (Q * P)(t_j)
    for k in 1..n {
        let mut partial = 0.5 * q[k] * p[0];
        for m in 1..k {
            partial += q[k - m] * p[m];
        }
        partial *= h;
        let outer_without_pk = h * (running + 0.5 * partial);
        p[k] = (r[k] - coeff * outer_without_pk) / denom;
        running += partial + h * 0.5 * q[0] * p[k];
    }
    Ok(GridFunction { grid: kernel.grid, samples: p })
}

/// Closed-form solution of the third equation: double arcsine-weighted
/// integral of the exponential divided differences against the
/// `(4w^2 - l1 l2)` kernel.
pub fn f3_closed_form(t1: f64, t2: f64, rule: &QuadratureRule) -> f64 {
    let w = rule.w();
    let nodes = rule.nodes();
    let wts = rule.weights();
    let k = nodes.len();
    let e1: Vec<Complex64> = nodes.iter().map(|l| Complex64::from_polar(1.0, t1 * l)).collect();
    let e2: Vec<Complex64> = nodes.iter().map(|l| Complex64::from_polar(1.0, t2 * l)).collect();
    let mut acc = Complex64::ZERO;
    for i in 0..k {
        for j in 0..k {
            let d1 = divided_difference_exp(t1, nodes[i], nodes[j], e1[i], e1[j], w);
            let d2 = divided_difference_exp(t2, nodes[i], nodes[j], e2[i], e2[j], w);
            acc += wts[i] * wts[j] * d1 * d2 * (4.0 * w * w - nodes[i] * nodes[j]);
        }
    }
    (acc / (2.0 * PI * PI)).re
}

/// Sup errors of the three second-kind equations against their closed
/// forms, on the given grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub h: f64,
    pub horizon: f64,
    /// sup |P_1 - v|
    pub f1_sup: f64,
    /// per requested t2: sup_t |P_2(t, t2) - (v(t + t2) - v(t) v(t2))|
    pub f2: Vec<(f64, f64)>,
    /// per requested t2: sup_t |P_3(t, t2) - closed form|
    pub f3: Vec<(f64, f64)>,
}

impl Lemma1Report {
    pub fn max_error(&self) -> f64 {
        let mut m = self.f1_sup;
        for (_, e) in self.f2.iter().chain(self.f3.iter()) {
            m = m.max(*e);
        }
        m
    }
}

/// Solve the three equations numerically and report sup deviations from
/// the closed forms. The third equation carries the doubled kernel
/// weight `2 w^2`. Offsets `t2` are snapped to the nearest grid node.
pub fn verify_lemma1(grid: TimeGrid, w: f64, t2_values: &[f64]) -> Result<Lemma1Report> {
    let w2 = w * w;
    let h = grid.step();
    let n = grid.len();
    let t2_max = t2_values.iter().cloned().fold(0.0, f64::max);
    let m_max = (t2_max / h).round() as usize;
    let order = quad_order_for(grid.horizon() + t2_max, w);
    let rule2 = QuadratureRule::cheb2(order, w);
    let rule1 = QuadratureRule::cheb1(order, w);

    // v on the extended grid [0, horizon + t2_max]; every shifted argument
    // below lands on one of these nodes
    let v_ext: Vec<f64> = (0..n + m_max).map(|k| v_of_t(k as f64 * h, &rule2)).collect();
    let v = GridFunction {
        grid,
        samples: v_ext[..n].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
    };

    // first equation: kernel v, rhs 1, solution v itself
    let one = GridFunction::from_real(grid, |_| 1.0);
    let p1 = solve_volterra(&v, &one, w2)?;
    let f1_sup = p1.sup_distance(&v)?;

    let mut f2 = Vec::new();
    let mut f3 = Vec::new();
    for &t2_raw in t2_values {
        let m = (t2_raw / h).round() as usize;
        let t2 = m as f64 * h;

        // second equation, rhs -w^2 int_0^t1 int_0^t2 v(t2-u) v(s+u) du ds
        let inner2 = GridFunction {
            grid,
            samples: (0..n)
                .map(|k| {
                    if m == 0 {
                        return Complex64::ZERO;
                    }
                    let mut acc = 0.0;
                    for j in 0..=m {
                        let term = v_ext[m - j] * v_ext[k + j];
                        acc += if j == 0 || j == m { 0.5 * term } else { term };
                    }
                    Complex64::new(acc * h, 0.0)
                })
                .collect(),
        };
        let cum2 = inner2.cumulative();
        let rhs2 = GridFunction {
            grid,
            samples: cum2.samples().iter().map(|s| -w2 * s).collect(),
        };
        let p2 = solve_volterra(&v, &rhs2, w2)?;
        let exact2 = GridFunction {
            grid,
            samples: (0..n)
                .map(|k| Complex64::new(v_ext[k + m] - v_ext[k] * v_ext[m], 0.0))
                .collect(),
        };
        f2.push((t2, p2.sup_distance(&exact2)?));

        // third equation with doubled kernel weight
        let shifted = GridFunction {
            grid,
            samples: (0..n).map(|k| Complex64::new(v_ext[k + m], 0.0)).collect(),
        };
        let cum3 = shifted.cumulative();
        let rhs3 = GridFunction {
            grid,
            samples: cum3.samples().iter().map(|s| -2.0 * w2 * t2 * s).collect(),
        };
        let p3 = solve_volterra(&v, &rhs3, 2.0 * w2)?;
        let exact3 = GridFunction::from_real(grid, |t| f3_closed_form(t, t2, &rule1));
        f3.push((t2, p3.sup_distance(&exact3)?));
    }

    Ok(Lemma1Report { h, horizon: grid.horizon(), f1_sup, f2, f3 })
}

/// Sup errors of the three convolution identities relating powers of `v`
/// to weighted semicircle integrals, plus the Stieltjes-transform
/// residual check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvolutionReport {
    pub h: f64,
    pub horizon: f64,
    /// `(v*v)(t)` vs `-i w^{-2} int e^{iut} u rho du`
    pub vv_sup: f64,
    /// `(v * t v)(t)` vs `w^{-2} int e^{iut} [1 - 2w^2/(4w^2-u^2)] rho du`
    pub vtv_sup: f64,
    /// `(v*v*v)(t)` vs `w^{-4} int e^{iut} (w^2-u^2) rho du`
    pub vvv_sup: f64,
}

impl ConvolutionReport {
    pub fn max_error(&self) -> f64 {
        self.vv_sup.max(self.vtv_sup).max(self.vvv_sup)
    }
}

pub fn verify_convolution_identities(grid: TimeGrid, w: f64) -> Result<ConvolutionReport> {
    let w2 = w * w;
    let order = quad_order_for(grid.horizon(), w);
    let rule2 = QuadratureRule::cheb2(order, w);
    let rule1 = QuadratureRule::cheb1(order, w);
    let v = GridFunction::from_real(grid, |t| v_of_t(t, &rule2));

    let vv = v.convolve(&v)?;
    let vv_ref = GridFunction::from_fn(grid, |t| {
        let int = rule2
            .integrate_complex(|u| Complex64::from_polar(1.0, u * t) * u)
            .expect("finite integrand");
        -Complex64::i() / w2 * int
    });
    let vv_sup = vv.sup_distance(&vv_ref)?;

    let tv = GridFunction::from_fn(grid, |t| t * Complex64::new(v_of_t(t, &rule2), 0.0));
    let vtv = v.convolve(&tv)?;
    let vtv_ref = GridFunction::from_fn(grid, |t| {
        let plain = rule2
            .integrate_complex(|u| Complex64::from_polar(1.0, u * t))
            .expect("finite integrand");
        // 2w^2 rho/(4w^2-u^2) integrates as an arcsine-weight integral
        let sing = rule1
            .integrate_complex(|u| Complex64::from_polar(1.0, u * t))
            .expect("finite integrand")
            / PI;
        (plain - sing) / w2
    });
    let vtv_sup = vtv.sup_distance(&vtv_ref)?;

    let vvv = vv.convolve(&v)?;
    let vvv_ref = GridFunction::from_fn(grid, |t| {
        rule2
            .integrate_complex(|u| Complex64::from_polar(1.0, u * t) * (w2 - u * u))
            .expect("finite integrand")
            / (w2 * w2)
    });
    let vvv_sup = vvv.sup_distance(&vvv_ref)?;

    Ok(ConvolutionReport { h: grid.step(), horizon: grid.horizon(), vv_sup, vtv_sup, vvv_sup })
}

/// Truncated rotated Laplace transform `i^{-1} int_0^T e^{-izt} v(t) dt`
/// on the grid; converges to the Stieltjes transform for `Im z < 0` with
/// tail bounded by `e^{Im z * T} / |Im z|`.
pub fn generalized_fourier(v: &GridFunction, z: Complex64) -> Complex64 {
    let h = v.grid.step;
    let mut acc = Complex64::ZERO;
    let last = v.samples.len() - 1;
    for (k, s) in v.samples.iter().enumerate() {
        let weight = if k == 0 || k == last { 0.5 } else { 1.0 };
        let t = v.grid.t(k);
        acc += weight * (-Complex64::i() * z * t).exp() * s;
    }
    acc * h / Complex64::i()
}
