//! Per-iteration record of how a decode proceeded.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decode::SuffixMatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Many positions verified against copied input in one scorer call.
    Aggressive,
    /// One token decoded from the scorer's argmax.
    Autoregressive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub mode: Mode,
    pub positions_scored: usize,
    pub accepted: usize,
    pub suffix_match: Option<SuffixMatch>,
    /// Output index `j + k` of the first prediction that disagreed with the
    /// copied input.
    pub bifurcation: Option<usize>,
}

impl IterationRecord {
    pub fn autoregressive() -> Self {
        IterationRecord {
            mode: Mode::Autoregressive,
            positions_scored: 1,
            accepted: 1,
            suffix_match: None,
            bifurcation: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub iterations: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceViolation {
    AcceptedSum { accepted: usize, output: usize },
    EmptyAggressive { iteration: usize },
    AutoregressiveShape { iteration: usize },
    OverAccepted { iteration: usize },
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceViolation::AcceptedSum { accepted, output } => {
                write!(f, "accepted tokens sum to {accepted}, output has {output}")
            }
            TraceViolation::EmptyAggressive { iteration } => {
                write!(f, "aggressive iteration {iteration} accepted nothing")
            }
            TraceViolation::AutoregressiveShape { iteration } => {
                write!(f, "autoregressive iteration {iteration} is not 1/1")
            }
            TraceViolation::OverAccepted { iteration } => {
                write!(f, "iteration {iteration} accepted more than it scored")
            }
        }
    }
}

impl std::error::Error for TraceViolation {}

impl DecodeTrace {
    pub fn push(&mut self, record: IterationRecord) {
        self.iterations.push(record);
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Scorer calls made by the decode loop.
    pub fn sequential_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn positions_scored(&self) -> usize {
        self.iterations.iter().map(|r| r.positions_scored).sum()
    }

    pub fn accepted(&self) -> usize {
        self.iterations.iter().map(|r| r.accepted).sum()
    }

    pub fn count_mode(&self, mode: Mode) -> usize {
        self.iterations.iter().filter(|r| r.mode == mode).count()
    }

    /// Checks the structural invariants against an output of `output_len`
    /// tokens (BOS excluded).
    pub fn validate(&self, output_len: usize) -> Result<(), TraceViolation> {
        for (iteration, r) in self.iterations.iter().enumerate() {
            match r.mode {
                Mode::Aggressive if r.accepted == 0 => {
                    return Err(TraceViolation::EmptyAggressive { iteration })
                }
                Mode::Autoregressive if r.positions_scored != 1 || r.accepted != 1 => {
                    return Err(TraceViolation::AutoregressiveShape { iteration })
                }
                _ => {}
            }
            if r.accepted > r.positions_scored {
                return Err(TraceViolation::OverAccepted { iteration });
            }
        }
        let accepted = self.accepted();
        if accepted != output_len {
            return Err(TraceViolation::AcceptedSum {
                accepted,
                output: output_len,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agg(scored: usize, accepted: usize) -> IterationRecord {
        IterationRecord {
            mode: Mode::Aggressive,
            positions_scored: scored,
            accepted,
            suffix_match: Some(SuffixMatch { i: 0, q: 0 }),
            bifurcation: None,
        }
    }

    #[test]
    fn valid_trace() {
        let t = DecodeTrace {
            iterations: vec![agg(5, 3), IterationRecord::autoregressive(), agg(1, 1)],
        };
        assert_eq!(t.validate(5), Ok(()));
        assert_eq!(t.sequential_iterations(), 3);
        assert_eq!(t.positions_scored(), 7);
        assert_eq!(t.count_mode(Mode::Aggressive), 2);
    }

    #[test]
    fn violations() {
        let t = DecodeTrace {
            iterations: vec![agg(5, 3)],
        };
        assert_eq!(
            t.validate(4),
            Err(TraceViolation::AcceptedSum {
                accepted: 3,
                output: 4
            })
        );
        let t = DecodeTrace {
            iterations: vec![agg(2, 0)],
        };
        assert_eq!(
            t.validate(0),
            Err(TraceViolation::EmptyAggressive { iteration: 0 })
        );
        let mut bad = IterationRecord::autoregressive();
        bad.positions_scored = 2;
        let t = DecodeTrace {
            iterations: vec![bad],
        };
        assert_eq!(
            t.validate(1),
            Err(TraceViolation::AutoregressiveShape { iteration: 0 })
        );
        let t = DecodeTrace {
            iterations: vec![agg(1, 2)],
        };
        assert_eq!(
            t.validate(2),
            Err(TraceViolation::OverAccepted { iteration: 0 })
        );
    }
}
