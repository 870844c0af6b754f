//! Real symmetric random-matrix ensembles `M = n^{-1/2} W` with
//! independent entries above the diagonal.
//!
//! The off-diagonal entries of `W` follow the entry law; diagonal entries
//! are the same law scaled so that their variance carries the diagonal
//! multiplier (2 in the standard normalization, matching the Gaussian
//! orthogonal ensemble's `E W_jk^2 = w^2 (1 + delta_jk)`).

use crate::entry_laws::EntryLaw;
use crate::error::{Error, Result};
use crate::kvspec::{self, fmt_f64};
use faer::Mat;
use rand::Rng;

/// Packed upper triangle of one sampled matrix `M = n^{-1/2} W`.
///
/// Storing only the upper triangle halves generator usage and makes the
/// materialized matrix exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrixSample {
    n: usize,
    upper: Vec<f64>,
}

impl SymmetricMatrixSample {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    #[inline]
    fn idx(&self, j: usize, k: usize) -> usize {
        debug_assert!(j <= k && k < self.n);
        j * self.n - j * (j + 1) / 2 + k
    }

    /// Entry `M_jk` (either triangle).
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        self.upper[self.idx(j, k)]
    }

    /// Full dense matrix; exactly symmetric by construction.
    pub fn materialize(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| self.entry(i, j))
    }

    /// `Tr M`.
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|j| self.entry(j, j)).sum()
    }

    /// `Tr M^2` (squared Frobenius norm).
    pub fn frobenius_sq(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n {
            for k in j..self.n {
                let v = self.entry(j, k);
                acc += if j == k { v * v } else { 2.0 * v * v };
            }
        }
        acc
    }
}

/// Ensemble definition: an entry law plus the diagonal-variance multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    law: EntryLaw,
    /// `Var(W_jj) = diag_multiplier * w^2`; 2 in the standard normalization.
    diag_multiplier: f64,
    goe: bool,
}

impl Ensemble {
    /// Gaussian orthogonal ensemble with off-diagonal variance `w2`.
    pub fn goe(w2: f64) -> Result<Ensemble> {
        Ok(Ensemble { law: EntryLaw::gaussian(w2)?, diag_multiplier: 2.0, goe: true })
    }

    /// Wigner ensemble with the standard diagonal doubling.
    pub fn wigner(law: EntryLaw) -> Ensemble {
        Ensemble { law, diag_multiplier: 2.0, goe: false }
    }

    /// Variant with diagonal variance `w2_diag * w^2` instead of `2 w^2`.
    pub fn wigner_variant(law: EntryLaw, w2_diag: f64) -> Result<Ensemble> {
        if !(w2_diag > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "diagonal variance multiplier must be positive, got {w2_diag}"
            )));
        }
        Ok(Ensemble { law, diag_multiplier: w2_diag, goe: false })
    }

    /// Parse `goe:w2=1.0` or any entry-law specification (a bare law spec
    /// denotes the Wigner ensemble over that law).
    pub fn parse(spec: &str) -> Result<Ensemble> {
        let s = kvspec::split(spec)?;
        if s.head == "goe" {
            let w2 = s.get_f64("w2")?.unwrap_or(1.0);
            Ensemble::goe(w2)
        } else {
            Ok(Ensemble::wigner(EntryLaw::parse(spec)?))
        }
    }

    pub fn spec_string(&self) -> String {
        if self.goe {
            format!("goe:w2={}", fmt_f64(self.law.w2()))
        } else {
            self.law.spec_string()
        }
    }

    pub fn law(&self) -> &EntryLaw {
        &self.law
    }

    pub fn w2(&self) -> f64 {
        self.law.w2()
    }

    pub fn w(&self) -> f64 {
        self.law.w()
    }

    pub fn diag_multiplier(&self) -> f64 {
        self.diag_multiplier
    }

    pub fn is_goe(&self) -> bool {
        self.goe
    }

    /// Replace the diagonal-variance multiplier (used by the `w2`-variant
    /// limit formulas).
    pub fn with_diag_multiplier(mut self, w2_diag: f64) -> Result<Ensemble> {
        if !(w2_diag > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "diagonal variance multiplier must be positive, got {w2_diag}"
            )));
        }
        self.diag_multiplier = w2_diag;
        Ok(self)
    }

    /// Draw one matrix. Entries above the diagonal are i.i.d. per the law,
    /// the diagonal carries the `sqrt(diag_multiplier)` scaling, and the
    /// whole matrix is scaled by `n^{-1/2}`. Deterministic given the seed:
    /// the draw order is the row-major upper triangle.
    pub fn sample_matrix<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SymmetricMatrixSample> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("matrix size must be >= 2, got {n}")));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let diag_scale = self.diag_multiplier.sqrt() * scale;
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for k in j..n {
                let v = self.law.sample(rng);
                upper.push(if j == k { diag_scale * v } else { scale * v });
            }
        }
        Ok(SymmetricMatrixSample { n, upper })
    }
}

/// One draw of the diagonal-variance variant `Var(W_jj) = w2_diag * w^2`.
pub fn w2_variant_matrix<R: Rng + ?Sized>(
    law: &EntryLaw,
    w2_diag: f64,
    n: usize,
    rng: &mut R,
) -> Result<SymmetricMatrixSample> {
    Ensemble::wigner_variant(law.clone(), w2_diag)?.sample_matrix(n, rng)
}
