use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::polynomial::Polynomial;
use crate::error::{Error, Result};

/// Real interval on which a [`ScalarFunction`] is defined. Bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
}

impl Domain {
    pub const REALS: Domain = Domain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        lo_open: true,
    };
    pub const NONNEGATIVE: Domain = Domain {
        lo: 0.0,
        hi: f64::INFINITY,
        lo_open: false,
    };
    pub const POSITIVE: Domain = Domain {
        lo: 0.0,
        hi: f64::INFINITY,
        lo_open: true,
    };

    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        above && x <= self.hi
    }

    pub fn contains_interval(&self, m: f64, big_m: f64) -> bool {
        self.contains(m) && self.contains(big_m)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_open { "(" } else { "[" };
        write!(f, "{open}{}, {})", self.lo, self.hi)
    }
}

/// Named, evaluatable real function with a registry-supplied derivative.
///
/// Textual forms: `pow:q`, `exp`, `log`, `neg`, `affine:a,b` (a x + b),
/// `poly:c0,c1,...` (ascending powers), `scaled:c:<inner>` and the alias `id`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFunction {
    Power(f64),
    Exp,
    Log,
    /// x -> -x
    Neg,
    Affine {
        a: f64,
        b: f64,
    },
    Poly(Polynomial),
    Scaled {
        c: f64,
        inner: Box<ScalarFunction>,
    },
}

fn as_integer(q: f64) -> Option<i32> {
    if q.fract() == 0.0 && q.abs() <= i32::MAX as f64 {
        Some(q as i32)
    } else {
        None
    }
}

impl ScalarFunction {
    pub fn identity() -> Self {
        ScalarFunction::Power(1.0)
    }

    pub fn scaled(c: f64, inner: ScalarFunction) -> Self {
        ScalarFunction::Scaled {
            c,
            inner: Box::new(inner),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            ScalarFunction::Power(q) => match as_integer(*q) {
                Some(k) if k >= 0 => Domain::REALS,
                Some(_) => Domain::POSITIVE,
                None if *q > 0.0 => Domain::NONNEGATIVE,
                None => Domain::POSITIVE,
            },
            ScalarFunction::Log => Domain::POSITIVE,
            ScalarFunction::Scaled { inner, .. } => inner.domain(),
            _ => Domain::REALS,
        }
    }

    /// Raw evaluation; callers are responsible for the domain.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFunction::Power(q) => match as_integer(*q) {
                Some(k) => x.powi(k),
                None => x.powf(*q),
            },
            ScalarFunction::Exp => x.exp(),
            ScalarFunction::Log => x.ln(),
            ScalarFunction::Neg => -x,
            ScalarFunction::Affine { a, b } => a * x + b,
            ScalarFunction::Poly(p) => p.eval(x),
            ScalarFunction::Scaled { c, inner } => c * inner.eval(x),
        }
    }

    /// Evaluation with a domain check.
    pub fn try_eval(&self, x: f64) -> Result<f64> {
        if !self.domain().contains(x) {
            return Err(Error::DomainViolation(format!(
                "{x} is outside the domain {} of {self}",
                self.domain()
            )));
        }
        Ok(self.eval(x))
    }

    pub fn check_interval(&self, m: f64, big_m: f64) -> Result<()> {
        if !self.domain().contains_interval(m, big_m) {
            return Err(Error::DomainViolation(format!(
                "[{m}, {big_m}] is not inside the domain {} of {self}",
                self.domain()
            )));
        }
        Ok(())
    }

    pub fn derivative(&self) -> ScalarFunction {
        match self {
            ScalarFunction::Power(q) if *q == 0.0 => ScalarFunction::Affine { a: 0.0, b: 0.0 },
            ScalarFunction::Power(q) => ScalarFunction::scaled(*q, ScalarFunction::Power(q - 1.0)),
            ScalarFunction::Exp => ScalarFunction::Exp,
            ScalarFunction::Log => ScalarFunction::Power(-1.0),
            ScalarFunction::Neg => ScalarFunction::Affine { a: 0.0, b: -1.0 },
            ScalarFunction::Affine { a, .. } => ScalarFunction::Affine { a: 0.0, b: *a },
            ScalarFunction::Poly(p) => ScalarFunction::Poly(p.derivative()),
            ScalarFunction::Scaled { c, inner } => ScalarFunction::scaled(*c, inner.derivative()),
        }
    }

    /// The polynomial this function equals, if any.
    pub fn as_polynomial(&self) -> Option<Polynomial> {
        match self {
            ScalarFunction::Power(q) => match as_integer(*q) {
                Some(k) if k >= 0 => Some(Polynomial::monomial(k as usize, 1.0)),
                _ => None,
            },
            ScalarFunction::Neg => Some(Polynomial::linear(0.0, -1.0)),
            ScalarFunction::Affine { a, b } => Some(Polynomial::linear(*b, *a)),
            ScalarFunction::Poly(p) => Some(p.clone()),
            ScalarFunction::Scaled { c, inner } => inner.as_polynomial().map(|p| p.scale(*c)),
            _ => None,
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

impl FromStr for ScalarFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        match (head, rest) {
            ("id", None) => Ok(ScalarFunction::identity()),
            ("exp", None) => Ok(ScalarFunction::Exp),
            ("log", None) => Ok(ScalarFunction::Log),
            ("neg", None) => Ok(ScalarFunction::Neg),
            ("pow", Some(q)) => Ok(ScalarFunction::Power(parse_f64(q)?)),
            ("affine", Some(args)) => {
                let parts: Vec<&str> = args.split(',').collect();
                if parts.len() != 2 {
                    return Err(Error::Parse(format!("affine needs a,b: {s:?}")));
                }
                Ok(ScalarFunction::Affine {
                    a: parse_f64(parts[0])?,
                    b: parse_f64(parts[1])?,
                })
            }
            ("poly", Some(args)) => {
                let coeffs = args.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?;
                Ok(ScalarFunction::Poly(Polynomial::new(coeffs)))
            }
            ("scaled", Some(args)) => {
                let (c, inner) = args
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("scaled needs c:<inner>: {s:?}")))?;
                Ok(ScalarFunction::scaled(parse_f64(c)?, inner.parse()?))
            }
            _ => Err(Error::Parse(format!("unknown function {s:?}"))),
        }
    }
}

impl fmt::Display for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFunction::Power(q) => write!(f, "pow:{q}"),
            ScalarFunction::Exp => write!(f, "exp"),
            ScalarFunction::Log => write!(f, "log"),
            ScalarFunction::Neg => write!(f, "neg"),
            ScalarFunction::Affine { a, b } => write!(f, "affine:{a},{b}"),
            ScalarFunction::Poly(p) => write!(f, "{p}"),
            ScalarFunction::Scaled { c, inner } => write!(f, "scaled:{c}:{inner}"),
        }
    }
}

impl Serialize for ScalarFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScalarFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_textual_form() {
        let cases = [
            ("pow:2", ScalarFunction::Power(2.0)),
            ("exp", ScalarFunction::Exp),
            ("log", ScalarFunction::Log),
            ("neg", ScalarFunction::Neg),
            ("affine:2,0", ScalarFunction::Affine { a: 2.0, b: 0.0 }),
            (
                "poly:0,-2,1",
                ScalarFunction::Poly(Polynomial::new(vec![0.0, -2.0, 1.0])),
            ),
            (
                "scaled:-1:pow:2",
                ScalarFunction::scaled(-1.0, ScalarFunction::Power(2.0)),
            ),
        ];
        for (text, expected) in cases {
            let parsed: ScalarFunction = text.parse().unwrap();
            assert_eq!(parsed, expected, "{text}");
            let again: ScalarFunction = parsed.to_string().parse().unwrap();
            assert_eq!(again, expected);
        }
        assert!("sin".parse::<ScalarFunction>().is_err());
        assert!("affine:1".parse::<ScalarFunction>().is_err());
        assert!("pow:x".parse::<ScalarFunction>().is_err());
    }

    #[test]
    fn domains() {
        assert!(ScalarFunction::Log.check_interval(0.0, 1.0).is_err());
        assert!(ScalarFunction::Log.check_interval(0.5, 1.0).is_ok());
        assert!(ScalarFunction::Power(0.5).check_interval(0.0, 1.0).is_ok());
        assert!(ScalarFunction::Power(0.5).check_interval(-1.0, 1.0).is_err());
        assert!(ScalarFunction::Power(3.0).check_interval(-1.0, 1.0).is_ok());
        assert!(ScalarFunction::Power(-1.0).try_eval(0.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fs = [
            "pow:3",
            "pow:0.5",
            "pow:-2",
            "exp",
            "log",
            "neg",
            "affine:2,1",
            "poly:1,2,3",
            "scaled:-2:exp",
        ];
        for text in fs {
            let f: ScalarFunction = text.parse().unwrap();
            let d = f.derivative();
            for &x in &[0.7, 1.3, 2.9] {
                let h = 1e-6;
                let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
                assert!((fd - d.eval(x)).abs() < 1e-6 * (1.0 + fd.abs()), "{text} at {x}");
            }
        }
    }

    #[test]
    fn negative_base_integer_power() {
        assert_eq!(ScalarFunction::Power(3.0).eval(-2.0), -8.0);
    }
}
