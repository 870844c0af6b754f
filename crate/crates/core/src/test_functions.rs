//! Analytic test-function catalog: polynomials up to degree 6,
//! exponentials, sine/cosine, and a Gaussian bump. Every member carries
//! its derivative and parity, which the limit formulas exploit.

use crate::error::{Error, Result};
use crate::kvspec::{self, fmt_f64};
use serde::{Deserialize, Serialize};

pub const MAX_POLY_DEGREE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `sum_k coeffs[k] * x^k`, ascending powers, degree <= 6.
    Poly { coeffs: Vec<f64> },
    /// `exp(a x)`
    Exp { a: f64 },
    /// `sin(a x)`
    Sin { a: f64 },
    /// `cos(a x)`
    Cos { a: f64 },
    /// `exp(-x^2 / (2 s^2))`
    GaussBump { s: f64 },
}

impl TestFunction {
    pub fn poly(coeffs: &[f64]) -> Result<TestFunction> {
        if coeffs.is_empty() || coeffs.len() > MAX_POLY_DEGREE + 1 {
            return Err(Error::InvalidParameter(format!(
                "polynomial degree must be 0..={MAX_POLY_DEGREE}"
            )));
        }
        Ok(TestFunction::Poly { coeffs: coeffs.to_vec() })
    }

    /// Monomial `x^k`.
    pub fn monomial(k: usize) -> Result<TestFunction> {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Self::poly(&c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Poly { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            TestFunction::Exp { a } => (a * x).exp(),
            TestFunction::Sin { a } => (a * x).sin(),
            TestFunction::Cos { a } => (a * x).cos(),
            TestFunction::GaussBump { s } => (-x * x / (2.0 * s * s)).exp(),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            TestFunction::Poly { coeffs } => {
                let mut acc = 0.0;
                for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * x + k as f64 * c;
                }
                acc
            }
            TestFunction::Exp { a } => a * (a * x).exp(),
            TestFunction::Sin { a } => a * (a * x).cos(),
            TestFunction::Cos { a } => -a * (a * x).sin(),
            TestFunction::GaussBump { s } => -x / (s * s) * (-x * x / (2.0 * s * s)).exp(),
        }
    }

    pub fn parity(&self) -> Parity {
        match self {
            TestFunction::Poly { coeffs } => {
                let any_even = coeffs.iter().step_by(2).any(|&c| c != 0.0);
                let any_odd = coeffs.iter().skip(1).step_by(2).any(|&c| c != 0.0);
                match (any_even, any_odd) {
                    (true, false) => Parity::Even,
                    (false, true) => Parity::Odd,
                    // the zero polynomial counts as even
                    (false, false) => Parity::Even,
                    (true, true) => Parity::Neither,
                }
            }
            TestFunction::Exp { .. } => Parity::Neither,
            TestFunction::Sin { .. } => Parity::Odd,
            TestFunction::Cos { .. } => Parity::Even,
            TestFunction::GaussBump { .. } => Parity::Even,
        }
    }

    /// Parse a test-function specification: shortcuts `x`, `x2`, ..., `x6`,
    /// `const`, or `poly:c0,c1,...`, `exp:a=1.0`, `sin:a=1.0`, `cos:a=1.0`,
    /// `gauss:s=1.0`.
    pub fn parse(spec: &str) -> Result<TestFunction> {
        let s = kvspec::split(spec)?;
        match s.head {
            "x" | "x1" => Self::monomial(1),
            "x2" => Self::monomial(2),
            "x3" => Self::monomial(3),
            "x4" => Self::monomial(4),
            "x5" => Self::monomial(5),
            "x6" => Self::monomial(6),
            "const" | "one" => Self::monomial(0),
            "poly" => {
                let coeffs: Vec<f64> = s
                    .args
                    .iter()
                    .map(|(_, v)| {
                        v.parse::<f64>().map_err(|_| Error::UnknownSpec(format!("poly:{v}")))
                    })
                    .collect::<Result<_>>()?;
                Self::poly(&coeffs)
            }
            "exp" => Ok(TestFunction::Exp { a: s.get_f64("a")?.unwrap_or(1.0) }),
            "sin" => Ok(TestFunction::Sin { a: s.get_f64("a")?.unwrap_or(1.0) }),
            "cos" => Ok(TestFunction::Cos { a: s.get_f64("a")?.unwrap_or(1.0) }),
            "gauss" => {
                let sigma = s.get_f64("s")?.unwrap_or(1.0);
                if !(sigma > 0.0) {
                    return Err(Error::InvalidParameter("gauss width must be positive".into()));
                }
                Ok(TestFunction::GaussBump { s: sigma })
            }
            _ => Err(Error::UnknownSpec(spec.to_string())),
        }
    }

    pub fn spec_string(&self) -> String {
        match self {
            TestFunction::Poly { coeffs } => {
                let body: Vec<String> = coeffs.iter().map(|c| fmt_f64(*c)).collect();
                format!("poly:{}", body.join(","))
            }
            TestFunction::Exp { a } => format!("exp:a={}", fmt_f64(*a)),
            TestFunction::Sin { a } => format!("sin:a={}", fmt_f64(*a)),
            TestFunction::Cos { a } => format!("cos:a={}", fmt_f64(*a)),
            TestFunction::GaussBump { s } => format!("gauss:s={}", fmt_f64(*s)),
        }
    }

    pub fn name(&self) -> String {
        self.spec_string()
    }
}
