//! Monte-Carlo experiment engine: replica-parallel sampling of the trace
//! statistic, cumulant estimation with jackknife errors, the empirical
//! characteristic function, and comparison against a limit law.
//!
//! Determinism contract: replica `r` always sees the generator
//! `child_rng(seed, r)`, replicas land in an index-ordered vector, and
//! every reduction is a fixed-shape pairwise sum. Results are therefore
//! bit-identical for any worker count.

use crate::ensembles::Ensemble;
use crate::entry_laws::EntryLaw;
use crate::error::{Error, Result};
use crate::limit_laws::{log_cf, ExperimentMeta, LimitLaw};
use crate::probes::Probe;
use crate::rng::child_rng;
use crate::spectral::{decompose, decompose_values, xi};
use crate::test_functions::TestFunction;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MIN_REPS: usize = 100;
pub const MIN_N: usize = 16;
/// Acceptance gate on z-scores; balances 1e4-replica noise against
/// finite-size bias.
pub const Z_GATE: f64 = 4.0;
/// Absolute tolerance absorbing quadrature noise when both the estimate
/// and the theory value are numerically zero.
const ABS_FLOOR: f64 = 1e-8;
/// Reported z-scores are capped so emitted numbers stay finite.
const Z_CAP: f64 = 1e6;

/// One experiment definition.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub ensemble: Ensemble,
    pub probe: Probe,
    pub test_function: TestFunction,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub x_grid: Vec<f64>,
    pub n_sweep: Option<Vec<usize>>,
}

impl McConfig {
    pub fn meta(&self) -> ExperimentMeta {
        ExperimentMeta {
            ensemble: self.ensemble.spec_string(),
            probe: self.probe.spec_string(),
            test_function: self.test_function.spec_string(),
            w2: self.ensemble.w2(),
            w2_variant: if self.ensemble.diag_multiplier() == 2.0 {
                None
            } else {
                Some(self.ensemble.diag_multiplier())
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(Error::InvalidParameter(format!(
                "reps must be >= {MIN_REPS}, got {}",
                self.reps
            )));
        }
        if self.n < MIN_N {
            return Err(Error::InvalidParameter(format!(
                "n must be >= {MIN_N}, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Point of the empirical characteristic function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcfPoint {
    pub x: f64,
    pub re: f64,
    pub im: f64,
}

impl EcfPoint {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Cumulant estimates (unbiased k-statistics) with jackknife standard
/// errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub mean: f64,
    pub k2: f64,
    pub k2_se: f64,
    pub k3: f64,
    pub k3_se: f64,
    pub k4: f64,
    pub k4_se: f64,
    pub ecf: Vec<EcfPoint>,
}

/// Everything the comparison step needs, serialization-friendly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub meta: ExperimentMeta,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub stats: RunStats,
}

/// A completed run: summary plus the raw centered inputs.
#[derive(Debug, Clone)]
pub struct McRun {
    pub summary: RunSummary,
    /// raw statistic per replica, replica-indexed
    pub samples: Vec<f64>,
}

impl McRun {
    pub fn centered(&self) -> Vec<f64> {
        let m = self.summary.stats.mean;
        self.samples.iter().map(|x| x - m).collect()
    }
}

/// Fixed-shape pairwise sum; the reduction tree depends only on the
/// length, never on the worker count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    match xs.len() {
        0 => Complex64::ZERO,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
        }
    }
}

/// Unbiased sample cumulants k2, k3, k4 with delete-1 jackknife standard
/// errors, as `(k2, se2, k3, se3, k4, se4)` plus the sample mean.
pub fn k_statistics(samples: &[f64]) -> Result<(f64, (f64, f64), (f64, f64), (f64, f64))> {
    let n = samples.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!(
            "k-statistics need at least 5 samples, got {n}"
        )));
    }
    let mean = pairwise_sum(samples) / n as f64;
    let dev: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let pow2: Vec<f64> = dev.iter().map(|d| d * d).collect();
    let pow3: Vec<f64> = dev.iter().zip(&pow2).map(|(d, p)| d * p).collect();
    let pow4: Vec<f64> = pow2.iter().map(|p| p * p).collect();
    let s1 = pairwise_sum(&dev);
    let s2 = pairwise_sum(&pow2);
    let s3 = pairwise_sum(&pow3);
    let s4 = pairwise_sum(&pow4);

    let full = k_from_central_sums(n as f64, s1, s2, s3, s4);

    // delete-1 jackknife from the same central sums
    let m = (n - 1) as f64;
    let mut jk: Vec<[f64; 3]> = Vec::with_capacity(n);
    for i in 0..n {
        let t1 = s1 - dev[i];
        let t2 = s2 - pow2[i];
        let t3 = s3 - pow3[i];
        let t4 = s4 - pow4[i];
        jk.push(k_from_central_sums(m, t1, t2, t3, t4));
    }
    let se = |idx: usize| -> f64 {
        let vals: Vec<f64> = jk.iter().map(|k| k[idx]).collect();
        let jm = pairwise_sum(&vals) / n as f64;
        let sq: Vec<f64> = vals.iter().map(|v| (v - jm) * (v - jm)).collect();
        (m / n as f64 * pairwise_sum(&sq)).sqrt()
    };
    Ok((mean, (full[0], se(0)), (full[1], se(1)), (full[2], se(2))))
}

/// k2, k3, k4 from sums of powers of deviations about the overall mean.
/// `t1` carries the mean shift of a deleted observation.
fn k_from_central_sums(n: f64, t1: f64, t2: f64, t3: f64, t4: f64) -> [f64; 3] {
    // recenter on the subset mean
    let shift = t1 / n;
    let c2 = t2 - n * shift * shift;
    let c3 = t3 - 3.0 * shift * t2 + 2.0 * n * shift.powi(3);
    let c4 = t4 - 4.0 * shift * t3 + 6.0 * shift * shift * t2 - 3.0 * n * shift.powi(4);
    let m2 = c2 / n;
    let m3 = c3 / n;
    let m4 = c4 / n;
    let k2 = n / (n - 1.0) * m2;
    let k3 = n * n / ((n - 1.0) * (n - 2.0)) * m3;
    let k4 = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2)
        / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    [k2, k3, k4]
}

/// Empirical characteristic function of centered samples on the grid.
pub fn ecf(centered: &[f64], x_grid: &[f64]) -> Vec<EcfPoint> {
    x_grid
        .iter()
        .map(|&x| {
            let terms: Vec<Complex64> =
                centered.iter().map(|&d| Complex64::from_polar(1.0, x * d)).collect();
            let z = pairwise_sum_complex(&terms) / terms.len() as f64;
            EcfPoint { x, re: z.re, im: z.im }
        })
        .collect()
}

/// Run the experiment at size `config.n`.
pub fn run(config: &McConfig) -> Result<McRun> {
    run_at(config, config.n)
}

/// Run the experiment at every size of the sweep list (primary `n` if no
/// sweep is configured).
pub fn run_sweep(config: &McConfig) -> Result<Vec<McRun>> {
    match &config.n_sweep {
        None => Ok(vec![run_at(config, config.n)?]),
        Some(list) => list.iter().map(|&n| run_at(config, n)).collect(),
    }
}

fn run_at(config: &McConfig, n: usize) -> Result<McRun> {
    config.validate()?;
    let values_only = matches!(config.probe, Probe::Identity);
    let samples: Vec<f64> = (0..config.reps)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut rng = child_rng(config.seed, r as u64);
            let m = config.ensemble.sample_matrix(n, &mut rng)?;
            let d = if values_only { decompose_values(&m) } else { decompose(&m) }
                .map_err(|e| match e {
                    Error::Eigensolver { n, .. } => Error::Eigensolver { n, replica: Some(r) },
                    other => other,
                })?;
            let x = xi(&config.probe, &d, &config.test_function)?;
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("statistic at replica {r}")));
            }
            Ok(x)
        })
        .collect::<Result<Vec<f64>>>()?;

    let (mean, k2, k3, k4) = k_statistics(&samples)?;
    let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let ecf_points = ecf(&centered, &config.x_grid);
    Ok(McRun {
        summary: RunSummary {
            meta: config.meta(),
            n,
            reps: config.reps,
            seed: config.seed,
            stats: RunStats {
                mean,
                k2: k2.0,
                k2_se: k2.1,
                k3: k3.0,
                k3_se: k3.1,
                k4: k4.0,
                k4_se: k4.1,
                ecf: ecf_points,
            },
        },
        samples,
    })
}

/// One estimate-vs-theory row of a comparison report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatRow {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub theory: f64,
    pub z: f64,
    pub provenance: String,
    pub pass: bool,
}

/// One grid point of the characteristic-function comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EcfRow {
    pub x: f64,
    pub empirical_re: f64,
    pub empirical_im: f64,
    pub theory_re: f64,
    pub theory_im: f64,
    pub discrepancy: f64,
    pub tail_bound: f64,
    /// true when the truncated series does not converge at this `x`; the
    /// point is reported but carries no theoretical control
    pub divergent: bool,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub k2: f64,
    pub se: f64,
    pub gap: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub meta: ExperimentMeta,
    pub n: usize,
    pub reps: usize,
    pub z_gate: f64,
    pub rows: Vec<StatRow>,
    pub ecf: Vec<EcfRow>,
    /// sup discrepancy over the grid points with a convergent tail bound
    pub ecf_sup_discrepancy: f64,
    pub ecf_mc_allowance: f64,
    pub truncation_tail_bound: f64,
    pub sweep: Vec<SweepRow>,
    pub pass: bool,
}

/// Compare a run (plus optional sweep companions) against its limit law.
///
/// z-scores gate `k2` against `v_w` and `k3`, `k4` against the
/// corresponding series cumulants; the characteristic function is gated
/// pointwise by `5/sqrt(reps)` plus the truncation bound, with divergent
/// points marked instead of gated.
pub fn compare(
    primary: &RunSummary,
    sweep_runs: &[RunSummary],
    law: &LimitLaw,
    entry: &EntryLaw,
) -> Result<ComparisonReport> {
    primary.meta.matches(&law.meta)?;
    for s in sweep_runs {
        s.meta.matches(&law.meta)?;
    }
    if law.p_max() < 4 {
        return Err(Error::InvalidParameter("limit law must carry the series up to p = 4".into()));
    }

    let stats = &primary.stats;
    let mut rows = Vec::new();
    let mut make_row = |name: &str, est: f64, se: f64, theory: f64, prov: &str| {
        // the absolute floor absorbs the quadrature noise of an exactly
        // zero theory value when the sample statistic is degenerate
        let pass = (est - theory).abs() <= Z_GATE * se + ABS_FLOOR;
        let z = if se > 0.0 {
            ((est - theory) / se).clamp(-Z_CAP, Z_CAP)
        } else if (est - theory).abs() <= ABS_FLOOR {
            0.0
        } else {
            Z_CAP * (est - theory).signum()
        };
        rows.push(StatRow {
            name: name.to_string(),
            estimate: est,
            se,
            theory,
            z,
            provenance: prov.to_string(),
            pass,
        });
    };
    make_row("k2", stats.k2, stats.k2_se, law.v_w, "limit_laws::v_w");
    make_row(
        "k3",
        stats.k3,
        stats.k3_se,
        law.tail_cumulant(3),
        "limit_laws::v_w (series p=3: kappa_3 A_3 c_phi^3)",
    );
    make_row(
        "k4",
        stats.k4,
        stats.k4_se,
        law.tail_cumulant(4),
        "limit_laws::v_w (series p=4: kappa_4 A_4 c_phi^4)",
    );

    let mc_allowance = 5.0 / (primary.reps as f64).sqrt();
    let mut ecf_rows = Vec::new();
    let mut sup = 0.0f64;
    let mut max_bound = 0.0f64;
    for p in &stats.ecf {
        let lc = log_cf(p.x, law, entry);
        // cap the exponent so divergent points still render finitely
        let theory = Complex64::new(lc.value.re.min(300.0), lc.value.im).exp();
        let disc = (p.value() - theory).norm();
        let allowed = mc_allowance + lc.tail_bound;
        let pass = !lc.converged || disc <= allowed;
        if lc.converged {
            sup = sup.max(disc);
            max_bound = max_bound.max(lc.tail_bound);
        }
        ecf_rows.push(EcfRow {
            x: p.x,
            empirical_re: p.re,
            empirical_im: p.im,
            theory_re: theory.re,
            theory_im: theory.im,
            discrepancy: disc,
            tail_bound: lc.tail_bound,
            divergent: !lc.converged,
            allowed,
            pass,
        });
    }

    let sweep = sweep_runs
        .iter()
        .map(|s| {
            let gap = (s.stats.k2 - law.v_w).abs();
            SweepRow {
                n: s.n,
                k2: s.stats.k2,
                se: s.stats.k2_se,
                gap,
                z: if s.stats.k2_se > 0.0 {
                    ((s.stats.k2 - law.v_w) / s.stats.k2_se).clamp(-Z_CAP, Z_CAP)
                } else {
                    0.0
                },
            }
        })
        .collect();

    let pass = rows.iter().all(|r| r.pass) && ecf_rows.iter().all(|r| r.pass);
    Ok(ComparisonReport {
        meta: primary.meta.clone(),
        n: primary.n,
        reps: primary.reps,
        z_gate: Z_GATE,
        rows,
        ecf: ecf_rows,
        ecf_sup_discrepancy: sup,
        ecf_mc_allowance: mc_allowance,
        truncation_tail_bound: max_bound,
        sweep,
        pass,
    })
}
