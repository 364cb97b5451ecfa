//! Project description: activities, precedences, risk events, and the
//! validated activity-on-node network built from them.

mod distribution;
mod network;

pub use distribution::{format_number, Distribution, DistributionError, DISCRETE_MASS_TOLERANCE};
pub(crate) use distribution::{normal_upper_tail, pert_shape};
pub use network::{expand_duration_risk, validate, DurationLaw, Node, NodeKind, ValidatedNetwork};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("duplicate id `{id}`")]
    DuplicateId { id: String },
    #[error("invalid id `{id}`: ids are non-empty and use only letters, digits, `_`, `-` and `.`")]
    InvalidId { id: String },
    #[error("bad distribution parameters for `{id}`: {reason}")]
    BadDistributionParams { id: String, reason: String },
    #[error("activity `{id}` has a negative or non-finite cost")]
    BadCost { id: String },
    #[error("risk `{id}` has probability {probability}, expected a value in [0, 1]")]
    BadRiskProbability { id: String, probability: f64 },
    #[error("risk `{id}` targets `{target}`: {reason}")]
    BadRiskTarget {
        id: String,
        target: String,
        reason: String,
    },
    #[error("activity `{activity}` lists unknown predecessor `{predecessor}`")]
    UnknownPredecessor {
        activity: String,
        predecessor: String,
    },
    #[error("precedence refers to unknown activity `{id}`")]
    UnknownActivity { id: String },
    #[error("precedence cycle: {}", cycle.join(" -> "))]
    CycleDetected { cycle: Vec<String> },
    #[error("expected exactly one start activity (no predecessors), found {}: [{}]", found.len(), found.join(", "))]
    MultipleSources { found: Vec<String> },
    #[error("expected exactly one end activity (no successors), found {}: [{}]", found.len(), found.join(", "))]
    MultipleSinks { found: Vec<String> },
    #[error("`{id}` is the network's start or end and must be a dummy with point(0) duration and zero cost")]
    NonDummyTerminal { id: String },
    #[error("precedence matrix: {reason}")]
    MatrixShape { reason: String },
}

/// A schedule activity. Its cost in a realization is
/// `fixed_cost + variable_cost_rate * duration`.
#[derive(Debug, Clone, PartialEq)]
pub struct Activity {
    pub id: String,
    pub name: String,
    pub duration: Distribution,
    pub fixed_cost: f64,
    pub variable_cost_rate: f64,
}

impl Activity {
    pub fn new(id: impl Into<String>, name: impl Into<String>, duration: Distribution) -> Self {
        Activity {
            id: id.into(),
            name: name.into(),
            duration,
            fixed_cost: 0.0,
            variable_cost_rate: 0.0,
        }
    }

    /// Zero-duration, zero-cost marker activity.
    pub fn dummy(id: impl Into<String>) -> Self {
        let id = id.into();
        Activity::new(id.clone(), id, Distribution::Point(0.0))
    }

    pub fn with_costs(mut self, fixed_cost: f64, variable_cost_rate: f64) -> Self {
        self.fixed_cost = fixed_cost;
        self.variable_cost_rate = variable_cost_rate;
        self
    }

    pub fn is_dummy(&self) -> bool {
        self.duration == Distribution::Point(0.0)
            && self.fixed_cost == 0.0
            && self.variable_cost_rate == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RiskKind {
    Duration,
    Cost,
}

impl RiskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskKind::Duration => "duration",
            RiskKind::Cost => "cost",
        }
    }
}

/// A discrete uncertain event: with probability `probability` it adds a draw
/// of `impact` to the target's duration (as a successor node) or to the
/// project cost.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEvent {
    pub id: String,
    pub name: String,
    pub probability: f64,
    pub impact: Distribution,
    pub kind: RiskKind,
    pub target: String,
}

/// `successor` cannot start before `predecessor` finishes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Precedence {
    pub successor: String,
    pub predecessor: String,
}

impl Precedence {
    pub fn new(successor: impl Into<String>, predecessor: impl Into<String>) -> Self {
        Precedence {
            successor: successor.into(),
            predecessor: predecessor.into(),
        }
    }
}

/// Unvalidated project as read from a file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProjectSpec {
    pub activities: Vec<Activity>,
    pub precedences: Vec<Precedence>,
    pub risks: Vec<RiskEvent>,
}

impl ProjectSpec {
    /// Builds the precedence list from a square 0/1 matrix where
    /// `matrix[i][j] == 1` means activity `i` has predecessor `j`.
    pub fn from_matrix(
        activities: Vec<Activity>,
        matrix: &[Vec<u8>],
        risks: Vec<RiskEvent>,
    ) -> Result<Self, ModelError> {
        let n = activities.len();
        if matrix.len() != n {
            return Err(ModelError::MatrixShape {
                reason: format!("{} rows for {} activities", matrix.len(), n),
            });
        }
        let mut precedences = Vec::new();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::MatrixShape {
                    reason: format!(
                        "row {} (`{}`) has {} entries, expected {}",
                        i + 1,
                        activities[i].id,
                        row.len(),
                        n
                    ),
                });
            }
            for (j, &cell) in row.iter().enumerate() {
                match cell {
                    0 => {}
                    1 => precedences.push(Precedence::new(&activities[i].id, &activities[j].id)),
                    other => {
                        return Err(ModelError::MatrixShape {
                            reason: format!(
                                "row {} (`{}`) has non-binary entry {other}",
                                i + 1,
                                activities[i].id
                            ),
                        })
                    }
                }
            }
        }
        Ok(ProjectSpec {
            activities,
            precedences,
            risks,
        })
    }

    /// Square 0/1 matrix over the activity list (row has predecessor column).
    pub fn precedence_matrix(&self) -> Result<Vec<Vec<u8>>, ModelError> {
        let index = |id: &str| self.activities.iter().position(|a| a.id == id);
        let n = self.activities.len();
        let mut m = vec![vec![0u8; n]; n];
        for p in &self.precedences {
            let s = index(&p.successor).ok_or_else(|| ModelError::UnknownActivity {
                id: p.successor.clone(),
            })?;
            let q = index(&p.predecessor).ok_or_else(|| ModelError::UnknownPredecessor {
                activity: p.successor.clone(),
                predecessor: p.predecessor.clone(),
            })?;
            m[s][q] = 1;
        }
        Ok(m)
    }
}

pub(crate) fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}
