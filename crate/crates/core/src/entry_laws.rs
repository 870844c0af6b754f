//! Centered entry distributions for the matrix ensembles, with their
//! moment/cumulant calculus and sampling rules.

use crate::error::{Error, Result};
use crate::kvspec::{self, fmt_f64};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Highest cumulant order kept by default; enough for the truncated
/// log-characteristic-function series at desk scale.
pub const DEFAULT_CUMULANT_ORDER: usize = 8;

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Cumulants from raw moments via the recursion
/// `kappa_n = mu_n - sum_{m=1}^{n-1} C(n-1, m-1) kappa_m mu_{n-m}`.
///
/// `moments[0]` is the first moment and must vanish; the inverse
/// composition with [`moments_from_cumulants`] is the identity.
pub fn cumulants_from_moments(moments: &[f64]) -> Result<Vec<f64>> {
    if moments.len() < 2 {
        return Err(Error::InsufficientData("need moments up to order 2".into()));
    }
    if moments[0] != 0.0 {
        return Err(Error::NonzeroFirstMoment(moments[0]));
    }
    let p = moments.len();
    let mut kappa = vec![0.0; p];
    for n in 1..=p {
        let mut s = moments[n - 1];
        for m in 1..n {
            let mu = if n - m == 0 { 1.0 } else { moments[n - m - 1] };
            s -= binomial(n - 1, m - 1) * kappa[m - 1] * mu;
        }
        kappa[n - 1] = s;
    }
    Ok(kappa)
}

/// Raw moments from cumulants: `mu_n = sum_{m=1}^{n} C(n-1, m-1) kappa_m mu_{n-m}`.
pub fn moments_from_cumulants(cumulants: &[f64]) -> Vec<f64> {
    let p = cumulants.len();
    let mut mu = vec![0.0; p];
    for n in 1..=p {
        let mut s = 0.0;
        for m in 1..=n {
            let lower = if n - m == 0 { 1.0 } else { mu[n - m - 1] };
            s += binomial(n - 1, m - 1) * cumulants[m - 1] * lower;
        }
        mu[n - 1] = s;
    }
    mu
}

/// Named sampling rule of an entry law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sampler {
    Gaussian,
    Rademacher,
    Uniform,
    TwoPoint { p: f64 },
}

/// A centered real distribution with variance `w2`, moments and cumulants
/// up to a configurable order, and a named sampling rule.
///
/// Immutable after construction and safe to share between workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryLaw {
    name: String,
    w2: f64,
    sampler: Sampler,
    moments: Vec<f64>,
    cumulants: Vec<f64>,
    cf_entire: bool,
}

impl EntryLaw {
    /// Build a law from a sampling rule and variance, carrying moments and
    /// cumulants up to `order`.
    pub fn make(sampler: Sampler, w2: f64, order: usize) -> Result<EntryLaw> {
        if !(w2 > 0.0) || !w2.is_finite() {
            return Err(Error::InvalidParameter(format!("w2 must be positive, got {w2}")));
        }
        if order < 2 {
            return Err(Error::InvalidParameter("cumulant order must be >= 2".into()));
        }
        if let Sampler::TwoPoint { p } = sampler {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "two_point weight must lie in (0, 1), got {p}"
                )));
            }
        }
        let name = match sampler {
            Sampler::Gaussian => "gaussian".to_string(),
            Sampler::Rademacher => "rademacher".to_string(),
            Sampler::Uniform => "uniform".to_string(),
            Sampler::TwoPoint { p } => format!("two_point(p={})", fmt_f64(p)),
        };
        let moments: Vec<f64> = (1..=order).map(|k| raw_moment(sampler, w2, k as u32)).collect();
        let mut cumulants = cumulants_from_moments(&moments)?;
        if matches!(sampler, Sampler::Gaussian) {
            // exact zeros beyond the variance
            for k in cumulants.iter_mut().skip(2) {
                *k = 0.0;
            }
        }
        Ok(EntryLaw { name, w2, sampler, moments, cumulants, cf_entire: true })
    }

    pub fn gaussian(w2: f64) -> Result<EntryLaw> {
        Self::make(Sampler::Gaussian, w2, DEFAULT_CUMULANT_ORDER)
    }

    pub fn rademacher(w2: f64) -> Result<EntryLaw> {
        Self::make(Sampler::Rademacher, w2, DEFAULT_CUMULANT_ORDER)
    }

    pub fn uniform(w2: f64) -> Result<EntryLaw> {
        Self::make(Sampler::Uniform, w2, DEFAULT_CUMULANT_ORDER)
    }

    pub fn two_point(p: f64, w2: f64) -> Result<EntryLaw> {
        Self::make(Sampler::TwoPoint { p }, w2, DEFAULT_CUMULANT_ORDER)
    }

    /// Parse a law specification such as `gaussian:w2=1.0`, `rademacher:w2=1.0`,
    /// `uniform:w2=1.0` or `two_point:p=0.25,w2=1.0`.
    pub fn parse(spec: &str) -> Result<EntryLaw> {
        let s = kvspec::split(spec)?;
        let w2 = s.get_f64("w2")?.unwrap_or(1.0);
        match s.head {
            "gaussian" => Self::gaussian(w2),
            "rademacher" => Self::rademacher(w2),
            "uniform" => Self::uniform(w2),
            "two_point" => {
                let p = s
                    .get_f64("p")?
                    .ok_or_else(|| Error::UnknownSpec(format!("{spec} (missing p)")))?;
                Self::two_point(p, w2)
            }
            _ => Err(Error::UnknownSpec(spec.to_string())),
        }
    }

    /// Canonical specification string; `parse` of this is the identity.
    pub fn spec_string(&self) -> String {
        match self.sampler {
            Sampler::Gaussian => format!("gaussian:w2={}", fmt_f64(self.w2)),
            Sampler::Rademacher => format!("rademacher:w2={}", fmt_f64(self.w2)),
            Sampler::Uniform => format!("uniform:w2={}", fmt_f64(self.w2)),
            Sampler::TwoPoint { p } => {
                format!("two_point:p={},w2={}", fmt_f64(p), fmt_f64(self.w2))
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sampler(&self) -> Sampler {
        self.sampler
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn w(&self) -> f64 {
        self.w2.sqrt()
    }

    pub fn cf_entire(&self) -> bool {
        self.cf_entire
    }

    /// Stored moment `mu_k`, 1-based.
    pub fn moment(&self, k: usize) -> f64 {
        self.moments[k - 1]
    }

    /// Stored cumulant `kappa_k`, 1-based.
    pub fn cumulant(&self, k: usize) -> f64 {
        self.cumulants[k - 1]
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    pub fn cumulants(&self) -> &[f64] {
        &self.cumulants
    }

    pub fn order(&self) -> usize {
        self.moments.len()
    }

    /// Closed-form raw moment of any order (not limited to the stored ones).
    pub fn raw_moment(&self, k: u32) -> f64 {
        raw_moment(self.sampler, self.w2, k)
    }

    /// Cumulants `kappa_1..kappa_order` recomputed to an arbitrary order,
    /// e.g. for series-truncation bounds beyond the stored range.
    pub fn cumulants_to(&self, order: usize) -> Vec<f64> {
        if matches!(self.sampler, Sampler::Gaussian) {
            let mut k = vec![0.0; order];
            if order >= 2 {
                k[1] = self.w2;
            }
            return k;
        }
        let moments: Vec<f64> =
            (1..=order).map(|k| raw_moment(self.sampler, self.w2, k as u32)).collect();
        cumulants_from_moments(&moments).expect("closed-form moments are centered")
    }

    /// One i.i.d. draw; deterministic given the generator state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w = self.w();
        match self.sampler {
            Sampler::Gaussian => {
                let z: f64 = rng.sample(StandardNormal);
                w * z
            }
            Sampler::Rademacher => {
                if rng.random::<bool>() {
                    w
                } else {
                    -w
                }
            }
            Sampler::Uniform => {
                let s = 3.0f64.sqrt() * w;
                rng.random::<f64>().mul_add(2.0 * s, -s)
            }
            Sampler::TwoPoint { p } => {
                let (a, b) = two_point_values(p, w);
                if rng.random::<f64>() < p {
                    a
                } else {
                    b
                }
            }
        }
    }
}

/// Support points of the two-point law: value `a = w sqrt((1-p)/p)` with
/// probability `p`, `b = -w sqrt(p/(1-p))` otherwise.
pub fn two_point_values(p: f64, w: f64) -> (f64, f64) {
    (w * ((1.0 - p) / p).sqrt(), -w * (p / (1.0 - p)).sqrt())
}

fn raw_moment(sampler: Sampler, w2: f64, k: u32) -> f64 {
    match sampler {
        Sampler::Gaussian => {
            if k % 2 == 1 {
                0.0
            } else {
                // (k-1)!! w^k
                let mut acc = 1.0;
                let mut i = k as i64 - 1;
                while i > 1 {
                    acc *= i as f64;
                    i -= 2;
                }
                acc * w2.powi((k / 2) as i32)
            }
        }
        Sampler::Rademacher => {
            if k % 2 == 1 {
                0.0
            } else {
                w2.powi((k / 2) as i32)
            }
        }
        Sampler::Uniform => {
            if k % 2 == 1 {
                0.0
            } else {
                // uniform on [-sqrt(3) w, sqrt(3) w]
                (3.0 * w2).powi((k / 2) as i32) / (k as f64 + 1.0)
            }
        }
        Sampler::TwoPoint { p } => {
            let (a, b) = two_point_values(p, w2.sqrt());
            p * a.powi(k as i32) + (1.0 - p) * b.powi(k as i32)
        }
    }
}
