//! Closed-form limiting variances and the log-characteristic function of
//! the centered statistic `Tr phi(M) A`.
//!
//! The Gaussian part decomposes over the probe functionals as
//! `v_goe = T_A^2 v_n + (T_AC/2 - T_A^2) v_jj`; non-Gaussian entry laws
//! add the third- and fourth-cumulant corrections `c_k3`, `c_k4`, and the
//! limit law's higher cumulants form the series tail
//! `kappa_p A_p c_phi^p` for `p >= 3`.

use crate::entry_laws::EntryLaw;
use crate::error::Result;
use crate::probes::Functionals;
use crate::quadrature::QuadratureRule;
use crate::test_functions::TestFunction;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_QUAD_ORDER: usize = 128;
pub const DEFAULT_SERIES_ORDER: usize = 8;
/// Orders past the stored series used when estimating the truncation tail.
const TAIL_EXTENSION: usize = 24;

/// The two Chebyshev rules at a common order and support radius.
#[derive(Debug, Clone)]
pub struct QuadPair {
    pub cheb1: QuadratureRule,
    pub cheb2: QuadratureRule,
}

impl QuadPair {
    pub fn new(order: usize, w: f64) -> Self {
        QuadPair { cheb1: QuadratureRule::cheb1(order, w), cheb2: QuadratureRule::cheb2(order, w) }
    }

    pub fn w(&self) -> f64 {
        self.cheb1.w()
    }
}

/// `(phi(l1) - phi(l2)) / (l1 - l2)` with a midpoint-derivative fallback
/// on the near-diagonal (threshold `1e-6 * 2w`).
pub fn divided_difference(phi: &TestFunction, l1: f64, l2: f64, w: f64) -> f64 {
    let eps = 1e-6 * 2.0 * w;
    if (l1 - l2).abs() > eps {
        (phi.eval(l1) - phi.eval(l2)) / (l1 - l2)
    } else {
        phi.deriv(0.5 * (l1 + l2))
    }
}

/// Divided difference of `l -> e^{itl}` with the same fallback policy;
/// callers pass the precomputed exponentials at the two nodes.
pub fn divided_difference_exp(
    t: f64,
    l1: f64,
    l2: f64,
    e1: Complex64,
    e2: Complex64,
    w: f64,
) -> Complex64 {
    let eps = 1e-6 * 2.0 * w;
    if (l1 - l2).abs() > eps {
        (e1 - e2) / (l1 - l2)
    } else {
        Complex64::i() * t * Complex64::from_polar(1.0, t * 0.5 * (l1 + l2))
    }
}

/// Bilinear form behind the linear-statistics variance: the double
/// arcsine-weighted integral of
/// `(d phi1 / d l)(d phi2 / d l) (4w^2 - l1 l2) / (2 pi^2)`.
pub fn linear_stat_cov(
    phi1: &TestFunction,
    phi2: &TestFunction,
    cheb1: &QuadratureRule,
) -> f64 {
    let w = cheb1.w();
    let nodes = cheb1.nodes();
    let wts = cheb1.weights();
    let k = nodes.len();
    let same = phi1 == phi2;
    let dd1: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| divided_difference(phi1, nodes[i], nodes[j], w)).collect())
        .collect();
    let dd2: Vec<Vec<f64>> = if same {
        Vec::new()
    } else {
        (0..k)
            .map(|i| (0..k).map(|j| divided_difference(phi2, nodes[i], nodes[j], w)).collect())
            .collect()
    };
    let mut acc = 0.0;
    for i in 0..k {
        for j in 0..k {
            let d2 = if same { dd1[i][j] } else { dd2[i][j] };
            acc += wts[i] * wts[j] * dd1[i][j] * d2 * (4.0 * w * w - nodes[i] * nodes[j]);
        }
    }
    acc / (2.0 * PI * PI)
}

/// Limiting variance of the centered linear statistic `Tr phi(M)` in the
/// Gaussian case.
pub fn v_n_goe(phi: &TestFunction, cheb1: &QuadratureRule) -> f64 {
    linear_stat_cov(phi, phi, cheb1)
}

/// Bilinear form behind the matrix-element variance:
/// `int int (phi1(l1)-phi1(l2))(phi2(l1)-phi2(l2)) rho rho
///  = 2 (int phi1 phi2 rho - int phi1 rho * int phi2 rho)`.
pub fn matrix_element_cov(
    phi1: &TestFunction,
    phi2: &TestFunction,
    cheb2: &QuadratureRule,
) -> f64 {
    let p12 = cheb2.integrate(|x| phi1.eval(x) * phi2.eval(x)).expect("catalog integrand");
    let p1 = cheb2.integrate(|x| phi1.eval(x)).expect("catalog integrand");
    let p2 = cheb2.integrate(|x| phi2.eval(x)).expect("catalog integrand");
    2.0 * (p12 - p1 * p2)
}

/// Limiting variance of the centered normalized matrix element in the
/// Gaussian case (also the bilinear-form variance).
pub fn v_jj_goe(phi: &TestFunction, cheb2: &QuadratureRule) -> f64 {
    matrix_element_cov(phi, phi, cheb2)
}

/// Gaussian-case limiting covariance for a probe with functionals
/// `t_a`, `t_ac`.
pub fn c_goe_covariance(
    phi1: &TestFunction,
    phi2: &TestFunction,
    t_a: f64,
    t_ac: f64,
    quad: &QuadPair,
) -> f64 {
    t_a * t_a * linear_stat_cov(phi1, phi2, &quad.cheb1)
        + (t_ac / 2.0 - t_a * t_a) * matrix_element_cov(phi1, phi2, &quad.cheb2)
}

/// Third-cumulant covariance correction.
///
/// The kernel couples `l1` against
/// `k1 (l2^2 - w^2) + k2 (2w^4/(4w^2 - l2^2) - l2^2)`; the singular `k2`
/// piece is integrated as an arcsine-weight integral after cancelling the
/// semicircle density against `1/(4w^2 - l2^2)` analytically
/// (`2w^4 rho_sc(l)/(4w^2-l^2) = w^2 / (pi sqrt(4w^2-l^2))`).
pub fn c_kappa3(
    phi1: &TestFunction,
    phi2: &TestFunction,
    kappa3: f64,
    k1: f64,
    k2: f64,
    quad: &QuadPair,
) -> f64 {
    if kappa3 == 0.0 || (k1 == 0.0 && k2 == 0.0) {
        return 0.0;
    }
    let w = quad.w();
    let w2 = w * w;
    let odd = |phi: &TestFunction| {
        quad.cheb2.integrate(|x| x * phi.eval(x)).expect("catalog integrand")
    };
    let kernel = |phi: &TestFunction| {
        let j1 = quad
            .cheb2
            .integrate(|x| (x * x - w2) * phi.eval(x))
            .expect("catalog integrand");
        let sing = w2 / PI * quad.cheb1.integrate(|x| phi.eval(x)).expect("catalog integrand");
        let j2 = sing - quad.cheb2.integrate(|x| x * x * phi.eval(x)).expect("catalog integrand");
        k1 * j1 + k2 * j2
    };
    kappa3 / w2.powi(3) * (odd(phi1) * kernel(phi2) + odd(phi2) * kernel(phi1))
}

/// Fourth-cumulant covariance correction.
pub fn c_kappa4(
    phi1: &TestFunction,
    phi2: &TestFunction,
    kappa4: f64,
    k3: f64,
    t_a: f64,
    quad: &QuadPair,
) -> f64 {
    if kappa4 == 0.0 {
        return 0.0;
    }
    let w = quad.w();
    let w2 = w * w;
    let jw = |phi: &TestFunction| {
        quad.cheb2.integrate(|x| (w2 - x * x) * phi.eval(x)).expect("catalog integrand")
    };
    let jc = |phi: &TestFunction| {
        quad.cheb1
            .integrate(|x| (2.0 * w2 - x * x) * phi.eval(x))
            .expect("catalog integrand")
    };
    kappa4 / w2.powi(4)
        * (k3 * jw(phi1) * jw(phi2) + t_a * t_a / (2.0 * PI * PI) * jc(phi1) * jc(phi2))
}

/// The `x`-free factor of the rescaled series variable:
/// `w^{-2} int phi(u) u rho_sc(u) du`.
pub fn c_phi(phi: &TestFunction, cheb2: &QuadratureRule) -> f64 {
    let w2 = cheb2.w() * cheb2.w();
    cheb2.integrate(|x| phi.eval(x) * x).expect("catalog integrand") / w2
}

/// Experiment identity carried by runs, limit laws and reports so that
/// mismatched artifacts are rejected instead of silently compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMeta {
    pub ensemble: String,
    pub probe: String,
    pub test_function: String,
    pub w2: f64,
    #[serde(default)]
    pub w2_variant: Option<f64>,
}

impl ExperimentMeta {
    pub fn matches(&self, other: &ExperimentMeta) -> Result<()> {
        use crate::error::Error;
        if self != other {
            return Err(Error::MetadataMismatch(format!(
                "{self:?} vs {other:?}"
            )));
        }
        Ok(())
    }
}

/// The decomposed theoretical limit for one (ensemble, probe, phi) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub meta: ExperimentMeta,
    /// support radius parameter (off-diagonal standard deviation)
    pub w: f64,
    pub v_n: f64,
    pub v_jj: f64,
    pub v_goe: f64,
    pub c_k3: f64,
    pub c_k4: f64,
    pub v_w: f64,
    pub c_phi: f64,
    /// `kappa_p A_p c_phi^p` for `p = 3..=p_max`
    pub tail: Vec<f64>,
    /// diagonal-variance correction, present when the variant multiplier
    /// differs from 2
    pub w2_corr: Option<f64>,
}

impl LimitLaw {
    pub fn p_max(&self) -> usize {
        self.tail.len() + 2
    }

    /// Limit cumulant of order `p >= 3` of the centered statistic.
    pub fn tail_cumulant(&self, p: usize) -> f64 {
        self.tail[p - 3]
    }
}

#[derive(Debug, Clone)]
pub struct LimitOptions {
    pub quad_order: usize,
    pub p_max: usize,
    /// Diagonal-variance multiplier when it differs from the standard 2.
    pub w2_variant: Option<f64>,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { quad_order: DEFAULT_QUAD_ORDER, p_max: DEFAULT_SERIES_ORDER, w2_variant: None }
    }
}

/// Assemble the full limit law for `(phi, entry law, probe functionals)`.
pub fn v_w(
    phi: &TestFunction,
    law: &EntryLaw,
    functionals: &Functionals,
    meta: ExperimentMeta,
    opts: &LimitOptions,
) -> LimitLaw {
    let w = law.w();
    let quad = QuadPair::new(opts.quad_order, w);
    let vn = v_n_goe(phi, &quad.cheb1);
    let vjj = v_jj_goe(phi, &quad.cheb2);
    let t_a = functionals.t_a;
    let v_goe = t_a * t_a * vn + (functionals.t_ac / 2.0 - t_a * t_a) * vjj;
    let ck3 = c_kappa3(phi, phi, law.cumulant(3), functionals.k1, functionals.k2, &quad);
    let ck4 = c_kappa4(phi, phi, law.cumulant(4), functionals.k3, t_a, &quad);
    let cphi = c_phi(phi, &quad.cheb2);
    let mut vw = v_goe + ck3 + ck4;

    let w2_corr = opts.w2_variant.map(|w2d| {
        let w2 = w * w;
        let m1 = w2 * cphi; // int phi(u) u rho du
        let arc = quad
            .cheb1
            .integrate(|x| phi.eval(x) * x)
            .expect("catalog integrand")
            / (2.0 * PI);
        (w2d - 2.0) / w2 * (functionals.k3 * m1 * m1 + t_a * t_a * arc * arc)
    });
    if let Some(corr) = w2_corr {
        vw += corr;
    }

    let p_max = opts.p_max.min(functionals.p_max());
    let kappas = law.cumulants_to(p_max);
    let tail = (3..=p_max)
        .map(|p| kappas[p - 1] * functionals.a_p(p) * cphi.powi(p as i32))
        .collect();

    LimitLaw {
        meta,
        w,
        v_n: vn,
        v_jj: vjj,
        v_goe,
        c_k3: ck3,
        c_k4: ck4,
        v_w: vw,
        c_phi: cphi,
        tail,
        w2_corr,
    }
}

/// One evaluation of the limiting log-characteristic function together
/// with its truncation-tail majorant.
#[derive(Debug, Clone, Copy)]
pub struct LogCf {
    pub value: Complex64,
    /// Majorant of the dropped series terms,
    /// `sum_{p > p_max} |kappa_p| 2^{p/2} |x c_phi|^p / p!` continued
    /// geometrically when the term ratios have settled below 1.
    pub tail_bound: f64,
    /// False when the majorant terms are still growing at the extension
    /// horizon: the formal series does not converge at this `x` and the
    /// reported bound controls nothing.
    pub converged: bool,
}

impl LogCf {
    pub fn flagged(&self, tol: f64) -> bool {
        !self.converged || self.tail_bound > tol
    }
}

/// `-x^2 v_w / 2 + sum_{p=3}^{p_max} kappa_p A_p (i x c_phi)^p / p!`.
///
/// The tail majorant uses the uniform coefficient bound `|A_p| <= 2^{p/2}`
/// and the entry law's closed-form cumulants past the stored order.
pub fn log_cf(x: f64, lim: &LimitLaw, law: &EntryLaw) -> LogCf {
    let mut value = Complex64::new(-x * x * lim.v_w / 2.0, 0.0);
    let mut fact = 2.0; // (p-1)! running, starts at 2! for p = 3
    for (i, t) in lim.tail.iter().enumerate() {
        let p = i + 3;
        fact *= p as f64;
        // tail[p] already carries c_phi^p; multiply by (i x)^p / p!
        let ip = Complex64::i().powu(p as u32);
        value += t * ip * x.powi(p as i32) / fact;
    }

    let p_max = lim.p_max();
    let y = 2.0f64.sqrt() * (x * lim.c_phi).abs();
    if y == 0.0 {
        return LogCf { value, tail_bound: 0.0, converged: true };
    }
    let ext = p_max + TAIL_EXTENSION;
    let kappas = law.cumulants_to(ext);
    let mut fact = 1.0f64;
    for p in 1..=p_max {
        fact *= p as f64;
    }
    let mut bound = 0.0;
    let mut terms: Vec<f64> = Vec::new();
    for p in (p_max + 1)..=ext {
        fact *= p as f64;
        let term = kappas[p - 1].abs() * y.powi(p as i32) / fact;
        if term > 0.0 {
            terms.push(term);
        }
        bound += term;
    }
    // Growth of the majorant terms decides convergence. Cumulant
    // magnitudes oscillate (complex poles of the log-characteristic
    // function), so a windowed geometric-mean ratio is used instead of
    // consecutive ratios, and the geometric continuation carries a
    // factor-2 cushion over the window peak.
    let mut converged = true;
    let m = terms.len();
    if m >= 2 {
        let k = 4.min(m - 1);
        let r = (terms[m - 1] / terms[m - 1 - k]).powf(1.0 / k as f64);
        if r >= 1.0 {
            converged = false;
        } else {
            let peak = terms[m - 1 - k..].iter().cloned().fold(0.0, f64::max);
            bound += 2.0 * peak * r / (1.0 - r);
        }
    }
    LogCf { value, tail_bound: bound, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probes::Probe;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn meta_for(probe: &str, phi: &str) -> ExperimentMeta {
        ExperimentMeta {
            ensemble: "goe:w2=1.0".into(),
            probe: probe.into(),
            test_function: phi.into(),
            w2: 1.0,
            w2_variant: None,
        }
    }

    #[test]
    fn divided_difference_basics() {
        let sq = TestFunction::monomial(2).unwrap();
        assert_relative_eq!(divided_difference(&sq, 1.0, 3.0, 1.0), 4.0);
        assert_relative_eq!(divided_difference(&sq, 1.0, 1.0, 1.0), 2.0);
        let lin = TestFunction::monomial(1).unwrap();
        assert_relative_eq!(divided_difference(&lin, -0.3, 1.9, 1.0), 1.0);
    }

    #[test]
    fn linear_statistic_variance_of_trace_is_entrywise_exact() {
        // independent oracle: Var(Tr M) = sum of entry variances = 2 w^2
        // for every n, so the limiting value must be exactly 2 w^2
        for w2 in [1.0f64, 2.25] {
            let w = w2.sqrt();
            let q = QuadratureRule::cheb1(128, w);
            let phi = TestFunction::monomial(1).unwrap();
            assert_relative_eq!(v_n_goe(&phi, &q), 2.0 * w2, max_relative = 1e-10);
        }
    }

    #[test]
    fn linear_statistic_variance_of_square() {
        // combinatorial oracle: Var(Tr M^2) -> 4 w^4 in the Gaussian case
        let q = QuadratureRule::cheb1(128, 1.0);
        let phi = TestFunction::monomial(2).unwrap();
        assert_relative_eq!(v_n_goe(&phi, &q), 4.0, max_relative = 1e-10);
        let c = TestFunction::monomial(0).unwrap();
        assert_abs_diff_eq!(v_n_goe(&c, &q), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn matrix_element_variances_from_catalan_moments() {
        let q = QuadratureRule::cheb2(128, 1.0);
        let phi = TestFunction::monomial(1).unwrap();
        assert_relative_eq!(v_jj_goe(&phi, &q), 2.0, max_relative = 1e-12);
        let phi2 = TestFunction::monomial(2).unwrap();
        // 2 (m4 - m2^2) = 2 (2 - 1)
        assert_relative_eq!(v_jj_goe(&phi2, &q), 2.0, max_relative = 1e-12);
        let c = TestFunction::monomial(0).unwrap();
        assert_abs_diff_eq!(v_jj_goe(&c, &q), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn covariance_is_symmetric_bilinear_with_nonnegative_diagonal() {
        let quad = QuadPair::new(96, 1.0);
        let f1 = TestFunction::parse("exp:a=0.5").unwrap();
        let f2 = TestFunction::parse("poly:0,1,0.5").unwrap();
        let a = c_goe_covariance(&f1, &f2, 1.0, 2.0, &quad);
        let b = c_goe_covariance(&f2, &f1, 1.0, 2.0, &quad);
        assert_relative_eq!(a, b, max_relative = 1e-12);
        for f in [&f1, &f2] {
            assert!(c_goe_covariance(f, f, 1.0, 2.0, &quad) >= 0.0);
        }
    }

    #[test]
    fn covariance_pairs_odd_with_even_to_zero() {
        let quad = QuadPair::new(128, 1.0);
        let odd = TestFunction::monomial(1).unwrap();
        let even = TestFunction::monomial(2).unwrap();
        let c = c_goe_covariance(&odd, &even, 1.0, 2.0, &quad);
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn covariance_reduces_to_matrix_element_form_when_traceless() {
        let quad = QuadPair::new(128, 1.0);
        let f = TestFunction::parse("poly:0,1,1").unwrap();
        let lhs = c_goe_covariance(&f, &f, 0.0, 2.0, &quad);
        assert_relative_eq!(lhs, v_jj_goe(&f, &quad.cheb2), max_relative = 1e-12);
    }

    #[test]
    fn third_cumulant_term_parity_and_trivial_zeros() {
        let quad = QuadPair::new(128, 1.0);
        let lin = TestFunction::monomial(1).unwrap();
        // l2-kernel is even, phi = l pairs an odd factor: zero by parity
        assert_abs_diff_eq!(c_kappa3(&lin, &lin, 1.2, 0.7, 0.0, &quad), 0.0, epsilon = 1e-12);
        let f = TestFunction::parse("poly:0,1,0.5").unwrap();
        assert_eq!(c_kappa3(&f, &f, 0.0, 0.7, 0.3, &quad), 0.0);
        assert_eq!(c_kappa3(&f, &f, 1.5, 0.0, 0.0, &quad), 0.0);
        // nonzero when everything is switched on
        assert!(c_kappa3(&f, &f, 1.5, 0.7, 0.0, &quad).abs() > 1e-3);
    }

    #[test]
    fn fourth_cumulant_term_identity_probe_square() {
        let quad = QuadPair::new(128, 1.0);
        let phi2 = TestFunction::monomial(2).unwrap();
        // trig oracle: int x^2 (2 - x^2)/sqrt(4 - x^2) dx = -2 pi
        let jc = quad
            .cheb1
            .integrate(|x| (2.0 - x * x) * x * x)
            .unwrap();
        assert_relative_eq!(jc, -2.0 * PI, max_relative = 1e-12);
        for kappa4 in [-1.2, 0.7] {
            let c = c_kappa4(&phi2, &phi2, kappa4, 0.0, 1.0, &quad);
            assert_relative_eq!(c, 2.0 * kappa4, max_relative = 1e-11);
        }
        // odd phi kills both factors
        let odd = TestFunction::monomial(3).unwrap();
        assert_abs_diff_eq!(c_kappa4(&odd, &odd, 1.0, 0.5, 1.0, &quad), 0.0, epsilon = 1e-12);
        assert_eq!(c_kappa4(&phi2, &phi2, 0.0, 0.5, 1.0, &quad), 0.0);
    }

    #[test]
    fn series_factor_values() {
        let q = QuadratureRule::cheb2(128, 1.0);
        assert_relative_eq!(c_phi(&TestFunction::monomial(1).unwrap(), &q), 1.0, max_relative = 1e-12);
        assert_eq!(c_phi(&TestFunction::monomial(2).unwrap(), &q), 0.0);
        assert_relative_eq!(c_phi(&TestFunction::monomial(3).unwrap(), &q), 2.0, max_relative = 1e-11);
    }

    #[test]
    fn assembled_law_satisfies_decomposition_identities() {
        let law = EntryLaw::uniform(1.0).unwrap();
        let probe = Probe::spiked(0.8).unwrap();
        let f = probe.limit_functionals(8).unwrap().f;
        let phi = TestFunction::parse("poly:0,1,0.5").unwrap();
        let lim = v_w(&phi, &law, &f, meta_for("bilinear:spiked,a=0.8", "poly:0,1,0.5"), &LimitOptions::default());
        let expect_goe =
            f.t_a * f.t_a * lim.v_n + (f.t_ac / 2.0 - f.t_a * f.t_a) * lim.v_jj;
        assert_relative_eq!(lim.v_goe, expect_goe, max_relative = 1e-12);
        assert_relative_eq!(lim.v_w, lim.v_goe + lim.c_k3 + lim.c_k4, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_law_adds_no_corrections() {
        let law = EntryLaw::gaussian(1.0).unwrap();
        let probe = Probe::spiked(0.8).unwrap();
        let f = probe.limit_functionals(8).unwrap().f;
        let phi = TestFunction::parse("poly:0,1,0.5").unwrap();
        let lim = v_w(&phi, &law, &f, meta_for("bilinear:spiked,a=0.8", "poly:0,1,0.5"), &LimitOptions::default());
        assert_eq!(lim.c_k3, 0.0);
        assert_eq!(lim.c_k4, 0.0);
        assert_eq!(lim.v_w, lim.v_goe);
    }

    #[test]
    fn uniform_law_identity_probe_square_variance() {
        // Var(Tr M^2) -> 4 w^4 + 2 kappa_4 = 8/5 for the uniform law
        let law = EntryLaw::uniform(1.0).unwrap();
        let f = Probe::Identity.limit_functionals(8).unwrap().f;
        let phi = TestFunction::monomial(2).unwrap();
        let lim = v_w(&phi, &law, &f, meta_for("identity", "x2"), &LimitOptions::default());
        assert_relative_eq!(lim.v_w, 1.6, max_relative = 1e-9);
    }

    #[test]
    fn delocalized_bilinear_variance_is_gaussian_universal() {
        let law = EntryLaw::two_point(0.25, 1.0).unwrap();
        let f = Probe::BilinearDelocalized.limit_functionals(8).unwrap().f;
        let phi = TestFunction::monomial(2).unwrap();
        let lim = v_w(&phi, &law, &f, meta_for("bilinear:delocalized", "x2"), &LimitOptions::default());
        assert_relative_eq!(lim.v_w, lim.v_jj, max_relative = 1e-12);
    }

    #[test]
    fn even_test_function_kills_odd_structure() {
        let law = EntryLaw::two_point(0.25, 1.0).unwrap();
        let probe = Probe::matrix_element(1).unwrap();
        let f = probe.limit_functionals(8).unwrap().f;
        let phi = TestFunction::monomial(2).unwrap();
        let lim = v_w(&phi, &law, &f, meta_for("elem:j=1", "x2"), &LimitOptions::default());
        assert_eq!(lim.c_phi, 0.0);
        assert_eq!(lim.c_k3, 0.0);
        assert!(lim.tail.iter().all(|&t| t == 0.0));
        let lc = log_cf(0.8, &lim, &law);
        assert_eq!(lc.value.im, 0.0);
        assert_eq!(lc.tail_bound, 0.0);
    }

    #[test]
    fn log_cf_is_pure_gaussian_when_series_is_empty() {
        let law = EntryLaw::gaussian(1.0).unwrap();
        let f = Probe::Identity.limit_functionals(8).unwrap().f;
        let phi = TestFunction::monomial(1).unwrap();
        let lim = v_w(&phi, &law, &f, meta_for("identity", "x"), &LimitOptions::default());
        for x in [0.3, 1.0, 2.0] {
            let lc = log_cf(x, &lim, &law);
            assert_relative_eq!(lc.value.re, -x * x * lim.v_w / 2.0, max_relative = 1e-13);
            assert_eq!(lc.value.im, 0.0);
            assert!(lc.converged);
        }
    }

    #[test]
    fn matrix_element_third_order_term() {
        // the exact finite-size identity makes the p = 3 term
        // kappa_3 2^{3/2} (i x)^3 / 3!
        let law = EntryLaw::two_point(0.25, 1.0).unwrap();
        let probe = Probe::matrix_element(1).unwrap();
        let f = probe.limit_functionals(8).unwrap().f;
        let phi = TestFunction::monomial(1).unwrap();
        let lim = v_w(&phi, &law, &f, meta_for("elem:j=1", "x"), &LimitOptions::default());
        assert_relative_eq!(
            lim.tail_cumulant(3),
            law.cumulant(3) * 2f64.powf(1.5),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            lim.tail_cumulant(4),
            law.cumulant(4) * 4.0,
            max_relative = 1e-12
        );
        let x = 0.1;
        let lc = log_cf(x, &lim, &law);
        // the imaginary part is the third-order term up to O(x^5)
        let expect3 = law.cumulant(3) * 2f64.powf(1.5) * x.powi(3) / 6.0 * (-1.0);
        assert_relative_eq!(lc.value.im, expect3, max_relative = 0.01);
    }

    #[test]
    fn truncation_tail_flags_divergence_beyond_the_radius() {
        let law = EntryLaw::two_point(0.25, 1.0).unwrap();
        let probe = Probe::matrix_element(1).unwrap();
        let f = probe.limit_functionals(8).unwrap().f;
        let phi = TestFunction::monomial(1).unwrap();
        let lim = v_w(&phi, &law, &f, meta_for("elem:j=1", "x"), &LimitOptions::default());
        let small = log_cf(0.5, &lim, &law);
        assert!(small.converged);
        assert!(small.tail_bound < 1e-3, "bound {}", small.tail_bound);
        assert!(!small.flagged(1e-2));
        let large = log_cf(2.0, &lim, &law);
        assert!(!large.converged);
        assert!(large.flagged(1e-2));
    }

    #[test]
    fn quadrature_order_doubling_is_stable() {
        let law = EntryLaw::two_point(0.25, 1.0).unwrap();
        let probe = Probe::spiked(0.8).unwrap();
        let f = probe.limit_functionals(8).unwrap().f;
        for phi in [
            TestFunction::parse("poly:0,1,0.5").unwrap(),
            TestFunction::parse("exp:a=0.7").unwrap(),
            TestFunction::parse("gauss:s=1.0").unwrap(),
        ] {
            let meta = meta_for("bilinear:spiked,a=0.8", &phi.name());
            let a = v_w(&phi, &law, &f, meta.clone(), &LimitOptions { quad_order: 128, ..Default::default() });
            let b = v_w(&phi, &law, &f, meta, &LimitOptions { quad_order: 256, ..Default::default() });
            for (x, y) in [
                (a.v_n, b.v_n),
                (a.v_jj, b.v_jj),
                (a.v_goe, b.v_goe),
                (a.c_k3, b.c_k3),
                (a.c_k4, b.c_k4),
                (a.v_w, b.v_w),
                (a.c_phi, b.c_phi),
            ] {
                let scale = x.abs().max(1e-3);
                assert!((x - y).abs() / scale <= 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn diagonal_variant_correction() {
        // variant multiplier 2 must add nothing; other multipliers shift
        // the variance by the stated quadratic functionals
        let law = EntryLaw::gaussian(1.0).unwrap();
        let probe = Probe::matrix_element(1).unwrap();
        let f = probe.limit_functionals(8).unwrap().f;
        let phi = TestFunction::monomial(1).unwrap();
        let base = v_w(&phi, &law, &f, meta_for("elem:j=1", "x"), &LimitOptions::default());
        let same = v_w(
            &phi,
            &law,
            &f,
            meta_for("elem:j=1", "x"),
            &LimitOptions { w2_variant: Some(2.0), ..Default::default() },
        );
        assert_relative_eq!(same.v_w, base.v_w, max_relative = 1e-13);
        let one = v_w(
            &phi,
            &law,
            &f,
            meta_for("elem:j=1", "x"),
            &LimitOptions { w2_variant: Some(1.0), ..Default::default() },
        );
        // K3 = 1, c_phi = 1, T_A = 0: correction = (1-2) * (w^2 c_phi)^2 = -1
        assert_relative_eq!(one.w2_corr.unwrap(), -1.0, max_relative = 1e-11);
        assert_relative_eq!(one.v_w, base.v_w - 1.0, max_relative = 1e-11);
    }
}
