//! Probe-sequence catalog `{A^(n)}` and the functionals of `A` that the
//! limiting covariance and characteristic-function formulas consume.
//!
//! A probe is normalized so that `n^{-1} Tr A^T A -> 1`. Structured probes
//! (identity, matrix element, rank-one bilinear) carry enough data to
//! avoid dense storage; a dense materialization exists for cross-checks.

use crate::error::{Error, Result};
use crate::kvspec::{self, fmt_f64};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// Which diagonal weighting the cumulant-series coefficients `A_p` use:
/// the standard construction doubles the diagonal variance, the variant
/// keeps it equal to the off-diagonal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApVariant {
    #[default]
    Standard,
    /// Diagonal variance multiplier 1 (matrix built directly from the law).
    DiagOne,
}

impl ApVariant {
    /// Exponent `e` in the diagonal correction factor `2^e - 1` of the
    /// `A_p` sums.
    fn diag_exponent(self, p: usize) -> f64 {
        match self {
            ApVariant::Standard => (2.0 - p as f64) / 2.0,
            ApVariant::DiagOne => (1.0 - 2.0 * p as f64) / 2.0,
        }
    }
}

/// The scalar functionals of a probe family entering the limit laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    /// `n^{-1} Tr A`
    pub t_a: f64,
    /// `n^{-1} Tr A (A + A^T)`
    pub t_ac: f64,
    /// `n^{-3/2} sum_lm A_ll C_lm`
    pub k1: f64,
    /// `t_a * n^{-3/2} sum_lm C_lm`
    pub k2: f64,
    /// `n^{-1} sum_m A_mm (A_mm - n^{-1} Tr A)`
    pub k3: f64,
    /// `A_p` for `p = 3..=p_max`
    pub a_p: Vec<f64>,
    /// `n^{-3/2} sum_lm A_lm`
    pub kprime2: f64,
    /// `n^{-1} Tr A^T A` (1 in the limit by normalization)
    pub norm: f64,
}

impl Functionals {
    pub fn a_p(&self, p: usize) -> f64 {
        self.a_p[p - 3]
    }

    pub fn p_max(&self) -> usize {
        self.a_p.len() + 2
    }

    fn fields(&self) -> Vec<(String, f64)> {
        let mut v = vec![
            ("t_a".to_string(), self.t_a),
            ("t_ac".to_string(), self.t_ac),
            ("k1".to_string(), self.k1),
            ("k2".to_string(), self.k2),
            ("k3".to_string(), self.k3),
            ("kprime2".to_string(), self.kprime2),
            ("norm".to_string(), self.norm),
        ];
        for (i, a) in self.a_p.iter().enumerate() {
            v.push((format!("a_{}", i + 3), *a));
        }
        v
    }
}

/// Limit values plus how each was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitFunctionals {
    pub f: Functionals,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    /// Closed form for a catalog probe.
    Exact,
    /// Two-point evaluation at `n` and `2n`; `gaps` holds the per-field
    /// Cauchy gap `|f(2n) - f(n)|` and `flagged` lists fields whose gap
    /// exceeded the tolerance.
    Extrapolated { gaps: Box<Functionals>, flagged: Vec<String> },
}

#[derive(Debug, Clone)]
pub enum Probe {
    Identity,
    /// `A = sqrt(n) e_j e_j^T`, 1-based index.
    MatrixElement { j: usize },
    /// `A = sqrt(n) eta eta^T`, `eta_m = n^{-1/2}`.
    BilinearDelocalized,
    /// `A = sqrt(n) eta eta^T`, `eta = (a, b, ..., b)` with
    /// `b = sqrt((1 - a^2)/(n - 1))`.
    BilinearSpiked { a: f64 },
    /// Dense probe fixed at one size (optionally a companion at `2n` for
    /// limit extrapolation).
    Custom { name: String, matrix: Arc<Mat<f64>>, doubled: Option<Arc<Mat<f64>>> },
}

impl Probe {
    pub fn matrix_element(j: usize) -> Result<Probe> {
        if j == 0 {
            return Err(Error::InvalidParameter("matrix-element index is 1-based".into()));
        }
        Ok(Probe::MatrixElement { j })
    }

    pub fn spiked(a: f64) -> Result<Probe> {
        if !(a.abs() < 1.0) || a == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "spike amplitude must satisfy 0 < |a| < 1, got {a}"
            )));
        }
        Ok(Probe::BilinearSpiked { a })
    }

    /// Parse a probe specification: `identity`, `elem:j=1`,
    /// `bilinear:delocalized`, `bilinear:spiked,a=0.8`,
    /// `custom:file=<path>[,file2=<path>]`.
    pub fn parse(spec: &str) -> Result<Probe> {
        let s = kvspec::split(spec)?;
        match s.head {
            "identity" => Ok(Probe::Identity),
            "elem" => {
                let j = s
                    .get_usize("j")?
                    .ok_or_else(|| Error::UnknownSpec(format!("{spec} (missing j)")))?;
                Probe::matrix_element(j)
            }
            "bilinear" => {
                let kind = s
                    .get_str("")
                    .ok_or_else(|| Error::UnknownSpec(spec.to_string()))?;
                match kind {
                    "delocalized" => Ok(Probe::BilinearDelocalized),
                    "spiked" => {
                        let a = s
                            .get_f64("a")?
                            .ok_or_else(|| Error::UnknownSpec(format!("{spec} (missing a)")))?;
                        Probe::spiked(a)
                    }
                    other => Err(Error::UnknownSpec(format!("bilinear:{other}"))),
                }
            }
            "custom" => {
                let path = s
                    .get_str("file")
                    .ok_or_else(|| Error::UnknownSpec(format!("{spec} (missing file)")))?;
                let matrix = Arc::new(read_dense_probe(Path::new(path))?);
                let doubled = match s.get_str("file2") {
                    None => None,
                    Some(p2) => {
                        let m2 = read_dense_probe(Path::new(p2))?;
                        if m2.nrows() != 2 * matrix.nrows() {
                            return Err(Error::DimensionMismatch(format!(
                                "companion probe must have size {} (got {})",
                                2 * matrix.nrows(),
                                m2.nrows()
                            )));
                        }
                        Some(Arc::new(m2))
                    }
                };
                Ok(Probe::Custom { name: spec.to_string(), matrix, doubled })
            }
            _ => Err(Error::UnknownSpec(spec.to_string())),
        }
    }

    pub fn spec_string(&self) -> String {
        match self {
            Probe::Identity => "identity".to_string(),
            Probe::MatrixElement { j } => format!("elem:j={j}"),
            Probe::BilinearDelocalized => "bilinear:delocalized".to_string(),
            Probe::BilinearSpiked { a } => format!("bilinear:spiked,a={}", fmt_f64(*a)),
            Probe::Custom { name, .. } => name.clone(),
        }
    }

    /// Unit vector of the bilinear probes; `None` for the others.
    pub fn eta(&self, n: usize) -> Option<Vec<f64>> {
        match self {
            Probe::BilinearDelocalized => {
                let v = 1.0 / (n as f64).sqrt();
                Some(vec![v; n])
            }
            Probe::BilinearSpiked { a } => {
                let b = ((1.0 - a * a) / (n as f64 - 1.0)).sqrt();
                let mut eta = vec![b; n];
                eta[0] = *a;
                Some(eta)
            }
            _ => None,
        }
    }

    /// Dense `A^(n)`, mainly for cross-checks against the structured paths.
    pub fn materialize(&self, n: usize) -> Result<Mat<f64>> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("probe size must be >= 2, got {n}")));
        }
        let sq = (n as f64).sqrt();
        match self {
            Probe::Identity => Ok(Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })),
            Probe::MatrixElement { j } => {
                if *j > n {
                    return Err(Error::InvalidParameter(format!(
                        "matrix-element index {j} out of range for n = {n}"
                    )));
                }
                let jj = j - 1;
                Ok(Mat::from_fn(n, n, |r, c| if r == jj && c == jj { sq } else { 0.0 }))
            }
            Probe::BilinearDelocalized | Probe::BilinearSpiked { .. } => {
                let eta = self.eta(n).unwrap();
                Ok(Mat::from_fn(n, n, |r, c| sq * eta[r] * eta[c]))
            }
            Probe::Custom { matrix, doubled, .. } => {
                if matrix.nrows() == n {
                    Ok(matrix.as_ref().clone())
                } else if doubled.as_ref().is_some_and(|m| m.nrows() == n) {
                    Ok(doubled.as_ref().unwrap().as_ref().clone())
                } else {
                    Err(Error::DimensionMismatch(format!(
                        "custom probe has size {}, requested {n}",
                        matrix.nrows()
                    )))
                }
            }
        }
    }

    /// Exact functionals of the finite-size probe. Structured probes use
    /// closed forms; custom probes are summed directly.
    pub fn finite_functionals(&self, n: usize, p_max: usize) -> Result<Functionals> {
        self.finite_functionals_variant(n, p_max, ApVariant::Standard)
    }

    pub fn finite_functionals_variant(
        &self,
        n: usize,
        p_max: usize,
        variant: ApVariant,
    ) -> Result<Functionals> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("probe size must be >= 2, got {n}")));
        }
        if p_max < 3 {
            return Err(Error::InvalidParameter("p_max must be >= 3".into()));
        }
        let nf = n as f64;
        match self {
            Probe::Identity => {
                // C = 2 I
                let a_p = (3..=p_max)
                    .map(|p| {
                        let diag = 2f64.powf(variant.diag_exponent(p));
                        nf.powf(1.0 - p as f64 / 2.0) * 2f64.powi(p as i32 - 1) * diag
                    })
                    .collect();
                Ok(Functionals {
                    t_a: 1.0,
                    t_ac: 2.0,
                    k1: 2.0 / nf.sqrt(),
                    k2: 2.0 / nf.sqrt(),
                    k3: 0.0,
                    a_p,
                    kprime2: 1.0 / nf.sqrt(),
                    norm: 1.0,
                })
            }
            Probe::MatrixElement { j } => {
                if *j > n {
                    return Err(Error::InvalidParameter(format!(
                        "matrix-element index {j} out of range for n = {n}"
                    )));
                }
                // A = sqrt(n) e_j e_j^T, C = 2 sqrt(n) e_j e_j^T
                let a_p = (3..=p_max)
                    .map(|p| 2f64.powi(p as i32 - 1) * 2f64.powf(variant.diag_exponent(p)))
                    .collect();
                Ok(Functionals {
                    t_a: 1.0 / nf.sqrt(),
                    t_ac: 2.0,
                    k1: 2.0 / nf.sqrt(),
                    k2: 2.0 / nf.powf(1.5),
                    k3: (nf - 1.0) / nf,
                    a_p,
                    kprime2: 1.0 / nf,
                    norm: 1.0,
                })
            }
            Probe::BilinearDelocalized | Probe::BilinearSpiked { .. } => {
                let eta = self.eta(n).unwrap();
                let power = |r: u32| eta.iter().map(|e| e.powi(r as i32)).sum::<f64>();
                let s1 = power(1);
                let s2 = power(2);
                let s3 = power(3);
                let s4 = power(4);
                let a_p = (3..=p_max)
                    .map(|p| {
                        let sp = power(p as u32);
                        let s2p = power(2 * p as u32);
                        let diag = 2f64.powf(variant.diag_exponent(p)) - 1.0;
                        2f64.powi(p as i32 - 1) * (sp * sp + diag * s2p)
                    })
                    .collect();
                Ok(Functionals {
                    t_a: s2 / nf.sqrt(),
                    t_ac: 2.0 * s2 * s2,
                    k1: 2.0 * s3 * s1 / nf.sqrt(),
                    k2: (s2 / nf.sqrt()) * (2.0 * s1 * s1 / nf),
                    k3: s4 - s2 * s2 / nf,
                    a_p,
                    kprime2: s1 * s1 / nf,
                    norm: s2 * s2,
                })
            }
            Probe::Custom { .. } => {
                let a = self.materialize(n)?;
                Ok(direct_functionals(&a, p_max, variant))
            }
        }
    }

    /// Limit functionals. Catalog probes have closed-form limits; custom
    /// probes require the companion matrix at `2n` and report the Cauchy
    /// gap per field, flagging any gap above `gap_tol`.
    pub fn limit_functionals(&self, p_max: usize) -> Result<LimitFunctionals> {
        self.limit_functionals_variant(p_max, ApVariant::Standard, 1e-2)
    }

    pub fn limit_functionals_variant(
        &self,
        p_max: usize,
        variant: ApVariant,
        gap_tol: f64,
    ) -> Result<LimitFunctionals> {
        if p_max < 3 {
            return Err(Error::InvalidParameter("p_max must be >= 3".into()));
        }
        match self {
            Probe::Identity => Ok(LimitFunctionals {
                f: Functionals {
                    t_a: 1.0,
                    t_ac: 2.0,
                    k1: 0.0,
                    k2: 0.0,
                    k3: 0.0,
                    a_p: vec![0.0; p_max - 2],
                    kprime2: 0.0,
                    norm: 1.0,
                },
                provenance: Provenance::Exact,
            }),
            Probe::MatrixElement { .. } => {
                let a_p = (3..=p_max)
                    .map(|p| 2f64.powi(p as i32 - 1) * 2f64.powf(variant.diag_exponent(p)))
                    .collect();
                Ok(LimitFunctionals {
                    f: Functionals {
                        t_a: 0.0,
                        t_ac: 2.0,
                        k1: 0.0,
                        k2: 0.0,
                        k3: 1.0,
                        a_p,
                        kprime2: 0.0,
                        norm: 1.0,
                    },
                    provenance: Provenance::Exact,
                })
            }
            Probe::BilinearDelocalized => Ok(LimitFunctionals {
                f: Functionals {
                    t_a: 0.0,
                    t_ac: 2.0,
                    k1: 0.0,
                    k2: 0.0,
                    k3: 0.0,
                    a_p: vec![0.0; p_max - 2],
                    kprime2: 1.0,
                    norm: 1.0,
                },
                provenance: Provenance::Exact,
            }),
            Probe::BilinearSpiked { a } => {
                // eta concentrates all p>=3 power sums on the spike
                let a_p = (3..=p_max)
                    .map(|p| {
                        let a2p = a.powi(2 * p as i32);
                        2f64.powi(p as i32 - 1)
                            * (1.0 + (2f64.powf(variant.diag_exponent(p)) - 1.0))
                            * a2p
                    })
                    .collect();
                Ok(LimitFunctionals {
                    f: Functionals {
                        t_a: 0.0,
                        t_ac: 2.0,
                        k1: 2.0 * a.powi(3) * (1.0 - a * a).sqrt(),
                        k2: 0.0,
                        k3: a.powi(4),
                        a_p,
                        kprime2: 1.0 - a * a,
                        norm: 1.0,
                    },
                    provenance: Provenance::Exact,
                })
            }
            Probe::Custom { matrix, doubled, .. } => {
                let Some(doubled) = doubled else {
                    return Err(Error::ExtrapolationUnavailable(
                        "custom probe needs a companion matrix at 2n (file2=...)".into(),
                    ));
                };
                let n = matrix.nrows();
                let lo = self.finite_functionals_variant(n, p_max, variant)?;
                let hi = direct_functionals(doubled, p_max, variant);
                let gaps = Functionals {
                    t_a: (hi.t_a - lo.t_a).abs(),
                    t_ac: (hi.t_ac - lo.t_ac).abs(),
                    k1: (hi.k1 - lo.k1).abs(),
                    k2: (hi.k2 - lo.k2).abs(),
                    k3: (hi.k3 - lo.k3).abs(),
                    a_p: hi
                        .a_p
                        .iter()
                        .zip(lo.a_p.iter())
                        .map(|(h, l)| (h - l).abs())
                        .collect(),
                    kprime2: (hi.kprime2 - lo.kprime2).abs(),
                    norm: (hi.norm - lo.norm).abs(),
                };
                let flagged = gaps
                    .fields()
                    .into_iter()
                    .filter(|(_, g)| *g > gap_tol)
                    .map(|(name, _)| name)
                    .collect();
                Ok(LimitFunctionals {
                    f: hi,
                    provenance: Provenance::Extrapolated { gaps: Box::new(gaps), flagged },
                })
            }
        }
    }
}

/// Direct O(n^2 p) summation of the probe functionals from a dense matrix.
pub fn direct_functionals(a: &Mat<f64>, p_max: usize, variant: ApVariant) -> Functionals {
    let n = a.nrows();
    let nf = n as f64;
    let tr_a: f64 = (0..n).map(|i| a[(i, i)]).sum();
    let mut tr_ata = 0.0;
    let mut tr_ac = 0.0;
    let mut sum_c = 0.0;
    let mut sum_a = 0.0;
    let mut k1 = 0.0;
    let mut cp_sums = vec![0.0f64; p_max.saturating_sub(2)];
    let mut cp_diag = vec![0.0f64; p_max.saturating_sub(2)];
    for l in 0..n {
        for m in 0..n {
            let alm = a[(l, m)];
            let clm = alm + a[(m, l)];
            tr_ata += alm * alm;
            tr_ac += alm * clm;
            sum_c += clm;
            sum_a += alm;
            k1 += a[(l, l)] * clm;
            let mut cpow = clm * clm * clm;
            for (p, acc) in cp_sums.iter_mut().enumerate() {
                *acc += cpow;
                if l == m {
                    cp_diag[p] += cpow;
                }
                cpow *= clm;
            }
        }
    }
    let t_a = tr_a / nf;
    let k3 = (0..n).map(|m| a[(m, m)] * (a[(m, m)] - t_a)).sum::<f64>() / nf;
    let a_p = (0..cp_sums.len())
        .map(|i| {
            let p = i + 3;
            let diag = 2f64.powf(variant.diag_exponent(p)) - 1.0;
            nf.powf(-(p as f64) / 2.0) * (cp_sums[i] + diag * cp_diag[i]) / 2.0
        })
        .collect();
    Functionals {
        t_a,
        t_ac: tr_ac / nf,
        k1: k1 / nf.powf(1.5),
        k2: t_a * sum_c / nf.powf(1.5),
        k3,
        a_p,
        kprime2: sum_a / nf.powf(1.5),
        norm: tr_ata / nf,
    }
}

/// Dense probe file: first line `n`, then `n` whitespace-separated rows.
pub fn read_dense_probe(path: &Path) -> Result<Mat<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::InvalidParameter(format!("{}: empty probe file", path.display())))?
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{}: bad size line", path.display())))?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("{}: probe size must be >= 2", path.display())));
    }
    let mut rows = Vec::with_capacity(n);
    for line in lines.take(n) {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!("{}: bad entry `{t}`", path.display()))
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}: row has {} entries, expected {n}",
                path.display(),
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}: found {} rows, expected {n}",
            path.display(),
            rows.len()
        )));
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}
