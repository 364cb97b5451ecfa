//! Univariate laws for activity durations and risk impacts.
//!
//! Every law has a compact textual form, e.g. `triangular(2, 3, 5)` or
//! `discrete(0:0.7, 3:0.3)`, which is what project files use.

use std::fmt;
use std::str::FromStr;

use statrs::function::erf::erfc;
use thiserror::Error;

/// Tolerance on the probability mass of a discrete law.
pub const DISCRETE_MASS_TOLERANCE: f64 = 1e-9;

/// A normal law is rejected when its mean lies further than this many
/// standard deviations below zero; the truncated tail mass would underflow.
pub const NORMAL_MIN_STANDARDIZED_MEAN: f64 = -30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("cannot parse distribution `{text}`: {reason}")]
    Parse { text: String, reason: String },
    #[error("{0}")]
    Invalid(String),
}

/// A sampleable law over non-negative reals.
///
/// Normal laws are truncated at zero: draws below zero are rejected, and
/// [`Distribution::mean`] / [`Distribution::variance`] report the moments of
/// the truncated law actually sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Point(f64),
    /// Atoms as `(value, probability)`.
    Discrete(Vec<(f64, f64)>),
    Uniform {
        min: f64,
        max: f64,
    },
    Triangular {
        min: f64,
        mode: f64,
        max: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    Pert {
        min: f64,
        mode: f64,
        max: f64,
    },
}

impl Distribution {
    pub fn point(v: f64) -> Self {
        Distribution::Point(v)
    }

    pub fn uniform(min: f64, max: f64) -> Self {
        Distribution::Uniform { min, max }
    }

    pub fn triangular(min: f64, mode: f64, max: f64) -> Self {
        Distribution::Triangular { min, mode, max }
    }

    pub fn normal(mean: f64, sd: f64) -> Self {
        Distribution::Normal { mean, sd }
    }

    pub fn pert(min: f64, mode: f64, max: f64) -> Self {
        Distribution::Pert { min, mode, max }
    }

    pub fn discrete(atoms: impl Into<Vec<(f64, f64)>>) -> Self {
        Distribution::Discrete(atoms.into())
    }

    /// Keyword used in the textual form.
    pub fn kind(&self) -> &'static str {
        match self {
            Distribution::Point(_) => "point",
            Distribution::Discrete(_) => "discrete",
            Distribution::Uniform { .. } => "uniform",
            Distribution::Triangular { .. } => "triangular",
            Distribution::Normal { .. } => "normal",
            Distribution::Pert { .. } => "pert",
        }
    }

    /// Checks parameter invariants, including non-negative support.
    pub fn check(&self) -> Result<(), DistributionError> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        let invalid = |msg: String| Err(DistributionError::Invalid(msg));
        match *self {
            Distribution::Point(v) => {
                if !finite(&[v]) || v < 0.0 {
                    return invalid(format!("point value must be finite and >= 0, got {v}"));
                }
            }
            Distribution::Discrete(ref atoms) => {
                if atoms.is_empty() {
                    return invalid("discrete law needs at least one atom".into());
                }
                let mut mass = 0.0;
                for &(v, p) in atoms {
                    if !finite(&[v, p]) || v < 0.0 {
                        return invalid(format!("discrete value must be finite and >= 0, got {v}"));
                    }
                    if p <= 0.0 {
                        return invalid(format!("discrete probability must be > 0, got {p}"));
                    }
                    mass += p;
                }
                if (mass - 1.0).abs() > DISCRETE_MASS_TOLERANCE {
                    return invalid(format!("discrete probabilities sum to {mass}, expected 1"));
                }
            }
            Distribution::Uniform { min, max } => {
                if !finite(&[min, max]) || min < 0.0 || min > max {
                    return invalid(format!("uniform needs 0 <= min <= max, got ({min}, {max})"));
                }
            }
            Distribution::Triangular { min, mode, max } | Distribution::Pert { min, mode, max } => {
                if !finite(&[min, mode, max]) || min < 0.0 || min > mode || mode > max {
                    return invalid(format!(
                        "{} needs 0 <= min <= mode <= max, got ({min}, {mode}, {max})",
                        self.kind()
                    ));
                }
            }
            Distribution::Normal { mean, sd } => {
                if !finite(&[mean, sd]) || sd < 0.0 {
                    return invalid(format!(
                        "normal needs finite mean and sd >= 0, got ({mean}, {sd})"
                    ));
                }
                if sd == 0.0 && mean < 0.0 {
                    return invalid(format!("degenerate normal at negative value {mean}"));
                }
                if sd > 0.0 && mean / sd < NORMAL_MIN_STANDARDIZED_MEAN {
                    return invalid(format!(
                        "normal({mean}, {sd}) has almost no mass above zero"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Point(v) => v,
            Distribution::Discrete(ref atoms) => atoms.iter().map(|&(v, p)| v * p).sum(),
            Distribution::Uniform { min, max } => 0.5 * (min + max),
            Distribution::Triangular { min, mode, max } => (min + mode + max) / 3.0,
            Distribution::Pert { min, mode, max } => (min + 4.0 * mode + max) / 6.0,
            Distribution::Normal { mean, sd } => {
                if sd == 0.0 {
                    return mean;
                }
                let (_, hazard) = normal_upper_tail(-mean / sd);
                mean + sd * hazard
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Distribution::Point(_) => 0.0,
            Distribution::Discrete(ref atoms) => {
                let m = self.mean();
                atoms.iter().map(|&(v, p)| p * (v - m) * (v - m)).sum()
            }
            Distribution::Uniform { min, max } => (max - min) * (max - min) / 12.0,
            Distribution::Triangular {
                min: a,
                mode: c,
                max: b,
            } => (a * a + b * b + c * c - a * b - a * c - b * c) / 18.0,
            Distribution::Pert { min, mode, max } => {
                let range = max - min;
                if range == 0.0 {
                    return 0.0;
                }
                let (alpha, beta) = pert_shape(min, mode, max);
                let s = alpha + beta;
                alpha * beta * range * range / (s * s * (s + 1.0))
            }
            Distribution::Normal { mean, sd } => {
                if sd == 0.0 {
                    return 0.0;
                }
                let alpha = -mean / sd;
                let (_, hazard) = normal_upper_tail(alpha);
                sd * sd * (1.0 + alpha * hazard - hazard * hazard).max(0.0)
            }
        }
    }

    /// Smallest closed interval holding all the mass (normal: `[0, inf)`
    /// unless degenerate).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Distribution::Point(v) => (v, v),
            Distribution::Discrete(ref atoms) => atoms
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(v, _)| {
                    (lo.min(v), hi.max(v))
                }),
            Distribution::Uniform { min, max }
            | Distribution::Triangular { min, max, .. }
            | Distribution::Pert { min, max, .. } => (min, max),
            Distribution::Normal { mean, sd } => {
                if sd == 0.0 {
                    (mean, mean)
                } else {
                    (0.0, f64::INFINITY)
                }
            }
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.variance() == 0.0
    }

    /// The same law with every value multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            Distribution::Point(v) => Distribution::Point(v * factor),
            Distribution::Discrete(ref atoms) => {
                Distribution::Discrete(atoms.iter().map(|&(v, p)| (v * factor, p)).collect())
            }
            Distribution::Uniform { min, max } => Distribution::Uniform {
                min: min * factor,
                max: max * factor,
            },
            Distribution::Triangular { min, mode, max } => Distribution::Triangular {
                min: min * factor,
                mode: mode * factor,
                max: max * factor,
            },
            Distribution::Normal { mean, sd } => Distribution::Normal {
                mean: mean * factor,
                sd: sd * factor,
            },
            Distribution::Pert { min, mode, max } => Distribution::Pert {
                min: min * factor,
                mode: mode * factor,
                max: max * factor,
            },
        }
    }
}

/// Beta shape parameters of a PERT law (shape 4).
pub(crate) fn pert_shape(min: f64, mode: f64, max: f64) -> (f64, f64) {
    let range = max - min;
    (
        1.0 + 4.0 * (mode - min) / range,
        1.0 + 4.0 * (max - mode) / range,
    )
}

/// `(P(Z >= alpha), pdf(alpha) / P(Z >= alpha))` for a standard normal `Z`.
pub(crate) fn normal_upper_tail(alpha: f64) -> (f64, f64) {
    let tail = 0.5 * erfc(alpha / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * alpha * alpha).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (tail, pdf / tail)
}

/// Formats a float so that `f64::from_str` recovers it exactly.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-6..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = format_number;
        match *self {
            Distribution::Point(v) => write!(f, "point({})", n(v)),
            Distribution::Discrete(ref atoms) => {
                let body: Vec<String> = atoms
                    .iter()
                    .map(|&(v, p)| format!("{}:{}", n(v), n(p)))
                    .collect();
                write!(f, "discrete({})", body.join(", "))
            }
            Distribution::Uniform { min, max } => write!(f, "uniform({}, {})", n(min), n(max)),
            Distribution::Triangular { min, mode, max } => {
                write!(f, "triangular({}, {}, {})", n(min), n(mode), n(max))
            }
            Distribution::Normal { mean, sd } => write!(f, "normal({}, {})", n(mean), n(sd)),
            Distribution::Pert { min, mode, max } => {
                write!(f, "pert({}, {}, {})", n(min), n(mode), n(max))
            }
        }
    }
}

impl FromStr for Distribution {
    type Err = DistributionError;

    /// Parses the textual form. Only syntax is checked here; call
    /// [`Distribution::check`] for parameter invariants.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| DistributionError::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = text.trim();
        let open = trimmed
            .find('(')
            .ok_or_else(|| fail("expected `kind(args)`"))?;
        if !trimmed.ends_with(')') {
            return Err(fail("missing closing parenthesis"));
        }
        let kind = trimmed[..open].trim().to_ascii_lowercase();
        let body = &trimmed[open + 1..trimmed.len() - 1];
        let number = |s: &str| -> Result<f64, DistributionError> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| fail(&format!("`{}` is not a number", s.trim())))
        };
        let args = |expected: usize| -> Result<Vec<f64>, DistributionError> {
            let parts: Vec<&str> = body.split(',').collect();
            if parts.len() != expected {
                return Err(fail(&format!(
                    "{kind} takes {expected} argument(s), got {}",
                    parts.len()
                )));
            }
            parts.into_iter().map(number).collect()
        };
        let dist = match kind.as_str() {
            "point" => Distribution::Point(args(1)?[0]),
            "uniform" => {
                let a = args(2)?;
                Distribution::uniform(a[0], a[1])
            }
            "triangular" => {
                let a = args(3)?;
                Distribution::triangular(a[0], a[1], a[2])
            }
            "pert" => {
                let a = args(3)?;
                Distribution::pert(a[0], a[1], a[2])
            }
            "normal" => {
                let a = args(2)?;
                Distribution::normal(a[0], a[1])
            }
            "discrete" => {
                let mut atoms = Vec::new();
                for part in body.split(',') {
                    let (v, p) = part
                        .split_once(':')
                        .ok_or_else(|| fail("discrete atoms are written `value:probability`"))?;
                    atoms.push((number(v)?, number(p)?));
                }
                Distribution::Discrete(atoms)
            }
            _ => return Err(fail(&format!("unknown distribution kind `{kind}`"))),
        };
        Ok(dist)
    }
}
