//! Simulated averaging substrate and communication accounting.
//!
//! Both topologies call the same reduction kernel, so they return the same
//! average to the last bit; they differ only in what the ledger charges.
//! No wall-clock or bandwidth model: the unit of cost is the round.

use std::fmt;

use thiserror::Error;

use crate::problems::ParamVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommsError {
    #[error("cannot average an empty set of states")]
    Empty,
    #[error("dimension mismatch in state {index}: expected {expected}, found {found}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} participants, got {found}")]
    ParticipantMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    ParameterServer,
    AllReduce,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::ParameterServer => f.write_str("parameter_server"),
            TopologyKind::AllReduce => f.write_str("all_reduce"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommTopology {
    pub kind: TopologyKind,
    pub participants: usize,
}

impl CommTopology {
    pub fn new(kind: TopologyKind, participants: usize) -> Self {
        Self { kind, participants }
    }

    /// Full `m`-vector transfers charged per averaging round.
    ///
    /// Parameter server: `N` uploads plus `N` broadcasts. Ring all-reduce:
    /// reduce-scatter and all-gather each move `N(N-1)` chunks of `m/N`
    /// values, i.e. `2N(N-1)` chunks or `2(N-1)` vector-equivalents in total.
    pub fn vectors_per_round(&self) -> u64 {
        let n = self.participants as u64;
        match self.kind {
            TopologyKind::ParameterServer => 2 * n,
            TopologyKind::AllReduce => 2 * n.saturating_sub(1),
        }
    }

    /// Messages per round: whole vectors for the server, `m/N` chunks for the ring.
    pub fn messages_per_round(&self) -> u64 {
        let n = self.participants as u64;
        match self.kind {
            TopologyKind::ParameterServer => 2 * n,
            TopologyKind::AllReduce => 2 * n * n.saturating_sub(1),
        }
    }

    pub fn accounting(&self) -> &'static str {
        match self.kind {
            TopologyKind::ParameterServer => {
                "parameter_server: per round 2N vector transfers (N up, N down); bytes = vectors * m * 8"
            }
            TopologyKind::AllReduce => {
                "all_reduce (ring): per round 2N(N-1) chunk messages of m/N values = 2(N-1) vector-equivalents; bytes = vectors * m * 8"
            }
        }
    }
}

/// Running totals of communication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommLedger {
    pub topology: CommTopology,
    pub dim: usize,
    pub rounds: u64,
    pub vectors_transferred: u64,
    pub messages: u64,
}

impl CommLedger {
    pub fn new(topology: CommTopology, dim: usize) -> Self {
        Self {
            topology,
            dim,
            rounds: 0,
            vectors_transferred: 0,
            messages: 0,
        }
    }

    /// 64-bit reals assumed.
    pub fn bytes(&self) -> u64 {
        self.vectors_transferred * self.dim as u64 * 8
    }

    pub fn record_round(&mut self) {
        self.rounds += 1;
        self.vectors_transferred += self.topology.vectors_per_round();
        self.messages += self.topology.messages_per_round();
    }

    /// Averages `states` and charges one round.
    pub fn average(&mut self, states: &[ParamVector]) -> Result<ParamVector, CommsError> {
        if states.len() != self.topology.participants {
            return Err(CommsError::ParticipantMismatch {
                expected: self.topology.participants,
                found: states.len(),
            });
        }
        let avg = average(states.iter().map(|s| s.as_slice()))?;
        self.record_round();
        // the mean of finite vectors is finite
        Ok(ParamVector::new(avg).expect("average of finite states"))
    }
}

/// Shared reduction kernel: `x_1 + (Σ_{i≥2} (x_i − x_1)) / N`.
///
/// Differences are accumulated in worker-index order and divided once.
/// Shifting by the first state makes the average of identical states exact,
/// which a plain running sum does not guarantee for `N ≥ 3`.
pub fn mean_into<'a, I>(states: I, out: &mut [f64]) -> Result<usize, CommsError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = states.into_iter();
    let first = iter.next().ok_or(CommsError::Empty)?;
    if first.len() != out.len() {
        return Err(CommsError::DimensionMismatch {
            index: 0,
            expected: out.len(),
            found: first.len(),
        });
    }
    out.fill(0.0);
    let mut count = 1usize;
    for state in iter {
        if state.len() != out.len() {
            return Err(CommsError::DimensionMismatch {
                index: count,
                expected: out.len(),
                found: state.len(),
            });
        }
        for ((o, x), x1) in out.iter_mut().zip(state).zip(first) {
            *o += x - x1;
        }
        count += 1;
    }
    let n = count as f64;
    for (o, x1) in out.iter_mut().zip(first) {
        *o = x1 + *o / n;
    }
    Ok(count)
}

pub fn average<'a, I>(states: I) -> Result<Vec<f64>, CommsError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = states.into_iter().peekable();
    let dim = iter.peek().ok_or(CommsError::Empty)?.len();
    let mut out = vec![0.0; dim];
    mean_into(iter, &mut out)?;
    Ok(out)
}

/// Averaging events in `T` iterations with interval `I`.
pub fn rounds_expected(iterations: u64, interval: u64) -> u64 {
    assert!(interval >= 1, "interval must be positive");
    iterations / interval
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_states_average_exactly() {
        // 3v/3 != v for plain summation on this value
        let v = [0.1 + 0.2, -7.3e-5, 1234.5678];
        for n in 1..=16 {
            let states: Vec<&[f64]> = vec![&v[..]; n];
            assert_eq!(average(states).unwrap(), v.to_vec(), "n = {n}");
        }
    }

    #[test]
    fn two_state_average() {
        let mut ledger = CommLedger::new(CommTopology::new(TopologyKind::AllReduce, 2), 2);
        let avg = ledger.average(&[pv(&[0.0, 2.0]), pv(&[2.0, 0.0])]).unwrap();
        assert_eq!(avg.as_slice(), &[1.0, 1.0]);
        assert_eq!(ledger.rounds, 1);
    }

    #[test]
    fn errors() {
        let empty: Vec<&[f64]> = vec![];
        assert_eq!(average(empty), Err(CommsError::Empty));
        let a = [1.0, 2.0];
        let b = [1.0];
        assert!(matches!(
            average(vec![&a[..], &b[..]]),
            Err(CommsError::DimensionMismatch { index: 1, .. })
        ));
        let mut ledger = CommLedger::new(CommTopology::new(TopologyKind::ParameterServer, 3), 2);
        assert!(matches!(
            ledger.average(&[pv(&a)]),
            Err(CommsError::ParticipantMismatch {
                expected: 3,
                found: 1
            })
        ));
        assert_eq!(ledger.rounds, 0);
    }

    #[test]
    fn ledger_accounting() {
        let n = 4;
        let mut ps = CommLedger::new(CommTopology::new(TopologyKind::ParameterServer, n), 10);
        let mut ring = CommLedger::new(CommTopology::new(TopologyKind::AllReduce, n), 10);
        let states = vec![pv(&[1.0; 10]); n];
        for _ in 0..3 {
            let a = ps.average(&states).unwrap();
            let b = ring.average(&states).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(ps.rounds, 3);
        assert_eq!(ps.vectors_transferred, 3 * 8);
        assert_eq!(ps.bytes(), 3 * 8 * 10 * 8);
        assert_eq!(ring.vectors_transferred, 3 * 6);
        assert_eq!(ring.messages, 3 * 2 * 4 * 3);
    }

    #[test]
    fn expected_rounds() {
        assert_eq!(rounds_expected(100, 1), 100);
        assert_eq!(rounds_expected(100, 16), 6);
        assert_eq!(rounds_expected(37, 37), 1);
    }
}
