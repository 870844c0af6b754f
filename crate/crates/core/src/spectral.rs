//! Spectral evaluation of the trace statistic `Tr phi(M) A` from a
//! symmetric eigendecomposition.
//!
//! The statistic is `sum_i phi(lambda_i) d_i` with spectral weights
//! `d_i = (Q^T A Q)_ii`; structured probes get closed-form weights so the
//! dense `O(n^3)` path is only needed for cross-checks.

use crate::ensembles::SymmetricMatrixSample;
use crate::error::{Error, Result};
use crate::probes::Probe;
use crate::test_functions::TestFunction;
use faer::{Mat, Par, Side};
use num_complex::Complex64;
use std::sync::Once;

static FAER_SEQ: Once = Once::new();

/// Pin the solver to sequential mode so replica results never depend on
/// its internal thread count; parallelism lives at the replica level.
fn pin_solver_threads() {
    FAER_SEQ.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Eigenvalues (ascending) and orthogonal eigenvectors of one sample.
/// Eigenvectors are omitted when only the spectrum is needed.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    n: usize,
    eigenvalues: Vec<f64>,
    q: Option<Mat<f64>>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn q(&self) -> Option<&Mat<f64>> {
        self.q.as_ref()
    }
}

/// Full symmetric eigendecomposition, eigenvalues ascending.
pub fn decompose(m: &SymmetricMatrixSample) -> Result<SpectralDecomposition> {
    pin_solver_threads();
    let n = m.n();
    let dense = m.materialize();
    let eig = dense
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Eigensolver { n, replica: None })?;
    let s = eig.S().column_vector();
    let mut eigenvalues = Vec::with_capacity(n);
    for i in 0..n {
        eigenvalues.push(s[i]);
    }
    let q = eig.U().to_owned();
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver { n, replica: None });
    }
    debug_assert!(eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    Ok(SpectralDecomposition { n, eigenvalues, q: Some(q) })
}

/// Eigenvalues only; enough for the identity probe and noticeably faster.
pub fn decompose_values(m: &SymmetricMatrixSample) -> Result<SpectralDecomposition> {
    pin_solver_threads();
    let n = m.n();
    let dense = m.materialize();
    let eigenvalues = dense
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Eigensolver { n, replica: None })?;
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver { n, replica: None });
    }
    Ok(SpectralDecomposition { n, eigenvalues, q: None })
}

/// Spectral weights `d_i = (Q^T A Q)_ii` of the probe.
///
/// Identity: `d_i = 1`. Matrix element `j`: `d_i = sqrt(n) Q_ji^2`.
/// Bilinear with vector `eta`: `d_i = sqrt(n) (Q^T eta)_i^2`. Custom
/// probes fall back to the dense product.
pub fn spectral_weights(probe: &Probe, decomposition: &SpectralDecomposition) -> Result<Vec<f64>> {
    let n = decomposition.n;
    let sq = (n as f64).sqrt();
    match probe {
        Probe::Identity => Ok(vec![1.0; n]),
        Probe::MatrixElement { j } => {
            if *j > n {
                return Err(Error::DimensionMismatch(format!(
                    "matrix-element index {j} out of range for n = {n}"
                )));
            }
            let q = decomposition
                .q
                .as_ref()
                .ok_or_else(|| Error::DimensionMismatch("eigenvectors not computed".into()))?;
            let row = j - 1;
            Ok((0..n).map(|i| sq * q[(row, i)] * q[(row, i)]).collect())
        }
        Probe::BilinearDelocalized | Probe::BilinearSpiked { .. } => {
            let q = decomposition
                .q
                .as_ref()
                .ok_or_else(|| Error::DimensionMismatch("eigenvectors not computed".into()))?;
            let eta = probe.eta(n).unwrap();
            let mut d = Vec::with_capacity(n);
            for i in 0..n {
                let mut proj = 0.0;
                for k in 0..n {
                    proj += q[(k, i)] * eta[k];
                }
                d.push(sq * proj * proj);
            }
            Ok(d)
        }
        Probe::Custom { .. } => {
            let q = decomposition
                .q
                .as_ref()
                .ok_or_else(|| Error::DimensionMismatch("eigenvectors not computed".into()))?;
            let a = probe.materialize(n)?;
            Ok(dense_weights(&a, q))
        }
    }
}

fn dense_weights(a: &Mat<f64>, q: &Mat<f64>) -> Vec<f64> {
    let n = q.nrows();
    let aq = a * q;
    (0..n)
        .map(|i| (0..n).map(|k| q[(k, i)] * aq[(k, i)]).sum())
        .collect()
}

/// `Tr phi(M) A = sum_i phi(lambda_i) d_i`.
pub fn xi(probe: &Probe, decomposition: &SpectralDecomposition, phi: &TestFunction) -> Result<f64> {
    let d = spectral_weights(probe, decomposition)?;
    Ok(decomposition
        .eigenvalues
        .iter()
        .zip(&d)
        .map(|(l, di)| phi.eval(*l) * di)
        .sum())
}

/// Dense-path evaluation of the same statistic from an explicit `A`,
/// for cross-checking the structured weights.
pub fn xi_dense(a: &Mat<f64>, decomposition: &SpectralDecomposition, phi: &TestFunction) -> Result<f64> {
    let q = decomposition
        .q
        .as_ref()
        .ok_or_else(|| Error::DimensionMismatch("eigenvectors not computed".into()))?;
    if a.nrows() != decomposition.n {
        return Err(Error::DimensionMismatch(format!(
            "probe size {} vs decomposition size {}",
            a.nrows(),
            decomposition.n
        )));
    }
    let d = dense_weights(a, q);
    Ok(decomposition
        .eigenvalues
        .iter()
        .zip(&d)
        .map(|(l, di)| phi.eval(*l) * di)
        .sum())
}

/// `Tr A e^{itM} = sum_i e^{it lambda_i} d_i`.
pub fn xi_exponential(
    probe: &Probe,
    decomposition: &SpectralDecomposition,
    t: f64,
) -> Result<Complex64> {
    let d = spectral_weights(probe, decomposition)?;
    let mut acc = Complex64::ZERO;
    for (l, di) in decomposition.eigenvalues.iter().zip(&d) {
        acc += Complex64::from_polar(1.0, t * l) * di;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::Ensemble;
    use crate::rng::child_rng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn two_by_two_exchange_matrix() {
        let m = Mat::from_fn(2, 2, |i, j| if i != j { 1.0 } else { 0.0 });
        let eig = m.self_adjoint_eigen(Side::Lower).unwrap();
        let s = eig.S().column_vector();
        assert_relative_eq!(s[0], -1.0, max_relative = 1e-14);
        assert_relative_eq!(s[1], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn diagonal_matrix_eigenvalues_sorted() {
        let m = Mat::from_fn(3, 3, |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.0 });
        let eig = m.self_adjoint_eigen(Side::Lower).unwrap();
        let s = eig.S().column_vector();
        assert_relative_eq!(s[0], 1.0, max_relative = 1e-13);
        assert_relative_eq!(s[1], 2.0, max_relative = 1e-13);
        assert_relative_eq!(s[2], 3.0, max_relative = 1e-13);
        // columns of U are unit up to sign
        let u = eig.U();
        for c in 0..3 {
            let norm: f64 = (0..3).map(|r| u[(r, c)] * u[(r, c)]).sum();
            assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn reconstruction_and_orthogonality_residuals() {
        let n = 64;
        let ens = Ensemble::goe(1.0).unwrap();
        let m = ens.sample_matrix(n, &mut child_rng(13, 0)).unwrap();
        let d = decompose(&m).unwrap();
        let q = d.q().unwrap();
        let dense = m.materialize();

        let mut qq_max: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += q[(k, i)] * q[(k, j)];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                qq_max = qq_max.max((acc - target).abs());
            }
        }
        assert!(qq_max <= 1e-10 * n as f64, "orthogonality residual {qq_max}");

        let mut rec_max: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += q[(i, k)] * d.eigenvalues()[k] * q[(j, k)];
                }
                rec_max = rec_max.max((acc - dense[(i, j)]).abs());
            }
        }
        assert!(rec_max <= 1e-8, "reconstruction residual {rec_max}");
    }

    #[test]
    fn identity_probe_gives_trace() {
        let ens = Ensemble::goe(1.0).unwrap();
        let m = ens.sample_matrix(16, &mut child_rng(3, 1)).unwrap();
        let d = decompose(&m).unwrap();
        let phi = TestFunction::monomial(1).unwrap();
        assert_relative_eq!(
            xi(&Probe::Identity, &d, &phi).unwrap(),
            m.trace(),
            max_relative = 1e-10
        );
        let phi2 = TestFunction::monomial(2).unwrap();
        assert_relative_eq!(
            xi(&Probe::Identity, &d, &phi2).unwrap(),
            m.frobenius_sq(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn matrix_element_probe_reads_the_entry() {
        let ens = Ensemble::goe(1.0).unwrap();
        let n = 12;
        let m = ens.sample_matrix(n, &mut child_rng(3, 2)).unwrap();
        let d = decompose(&m).unwrap();
        let phi = TestFunction::monomial(1).unwrap();
        let probe = Probe::matrix_element(4).unwrap();
        assert_relative_eq!(
            xi(&probe, &d, &phi).unwrap(),
            (n as f64).sqrt() * m.entry(3, 3),
            max_relative = 1e-9
        );
    }

    #[test]
    fn fast_paths_match_dense_path() {
        let ens = Ensemble::wigner(crate::entry_laws::EntryLaw::uniform(1.0).unwrap());
        let n = 24;
        let m = ens.sample_matrix(n, &mut child_rng(8, 0)).unwrap();
        let d = decompose(&m).unwrap();
        let phi = TestFunction::parse("exp:a=0.5").unwrap();
        for probe in [
            Probe::Identity,
            Probe::matrix_element(2).unwrap(),
            Probe::BilinearDelocalized,
            Probe::spiked(0.8).unwrap(),
        ] {
            let fast = xi(&probe, &d, &phi).unwrap();
            let dense = xi_dense(&probe.materialize(n).unwrap(), &d, &phi).unwrap();
            let scale = fast.abs().max(1.0);
            assert!(
                (fast - dense).abs() / scale <= 1e-10,
                "{}: {fast} vs {dense}",
                probe.spec_string()
            );
        }
    }

    #[test]
    fn xi_is_linear_in_the_test_function() {
        let ens = Ensemble::goe(1.0).unwrap();
        let m = ens.sample_matrix(20, &mut child_rng(4, 4)).unwrap();
        let d = decompose(&m).unwrap();
        let probe = Probe::spiked(0.5).unwrap();
        let f1 = TestFunction::monomial(1).unwrap();
        let f2 = TestFunction::monomial(2).unwrap();
        let (a, b) = (0.7, -1.3);
        let combo = TestFunction::poly(&[0.0, a, b]).unwrap();
        let lhs = xi(&probe, &d, &combo).unwrap();
        let rhs = a * xi(&probe, &d, &f1).unwrap() + b * xi(&probe, &d, &f2).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }

    #[test]
    fn exponential_statistic_normalizations() {
        let ens = Ensemble::goe(1.0).unwrap();
        let n = 10;
        let m = ens.sample_matrix(n, &mut child_rng(5, 5)).unwrap();
        let d = decompose(&m).unwrap();
        let at0 = xi_exponential(&Probe::Identity, &d, 0.0).unwrap();
        assert_relative_eq!(at0.re, n as f64, max_relative = 1e-12);
        assert_abs_diff_eq!(at0.im, 0.0, epsilon = 1e-12);
        let elem = Probe::matrix_element(1).unwrap();
        let at0 = xi_exponential(&elem, &d, 0.0).unwrap();
        assert_relative_eq!(at0.re, (n as f64).sqrt(), max_relative = 1e-10);
        for t in [0.5, 1.0, 3.5] {
            let v = xi_exponential(&Probe::Identity, &d, t).unwrap();
            assert!(v.norm() / n as f64 <= 1.0 + 1e-12);
        }
    }
}
