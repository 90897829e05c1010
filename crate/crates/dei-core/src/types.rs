//! Identifiers shared across the pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Identity of one candidate column: which agent produced it and which run
/// of that agent it came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CandidateKey {
    pub agent_id: String,
    pub run_index: u32,
}

impl CandidateKey {
    pub fn new(agent_id: impl Into<String>, run_index: u32) -> Self {
        Self {
            agent_id: agent_id.into(),
            run_index,
        }
    }
}

impl fmt::Display for CandidateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.agent_id, self.run_index)
    }
}

/// The explicit sequence in which candidates are added to prefix metrics.
///
/// Single-agent multi-run analyses use generation order; multi-agent groups
/// use a fixed shuffled order so that prefix metrics are well-defined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateOrder {
    pub order: Vec<CandidateKey>,
    pub provenance: String,
}

impl CandidateOrder {
    pub fn new(order: Vec<CandidateKey>, provenance: impl Into<String>) -> Self {
        Self {
            order,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Position of a candidate in the order, if present.
    pub fn position(&self, key: &CandidateKey) -> Option<usize> {
        self.order.iter().position(|k| k == key)
    }

    /// Checks there are no duplicate keys.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for key in &self.order {
            if !seen.insert(key) {
                return Err(format!("duplicate candidate {key} in order"));
            }
        }
        Ok(())
    }
}
