//! Ordered sequences of incrementally shifted domains.

use crate::error::{Error, Result};
use crate::runtime::seed::SeedSplitter;
use serde::{Deserialize, Serialize};

/// One target domain: a compression factor plus its position and sampling
/// seed. Factors decrease strictly along a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Vertical compression ratio in (0, 1]; 1.0 = undeformed.
    pub factor: f64,
    /// Position in the sequence.
    pub index: usize,
    /// Seed for sample-order streaming.
    pub seed: u64,
}

impl DomainSpec {
    pub fn new(factor: f64, index: usize, seed: u64) -> Result<DomainSpec> {
        if factor > 0.0 && factor <= 1.0 {
            Ok(DomainSpec { factor, index, seed })
        } else {
            Err(Error::invalid(format!(
                "domain factor must lie in (0, 1], got {factor}"
            )))
        }
    }
}

/// Equally spaced factors from `start_factor` down to `end_factor`
/// (inclusive). `count = 1` degenerates to the single final domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSequence {
    pub start_factor: f64,
    pub end_factor: f64,
    pub count: usize,
    pub specs: Vec<DomainSpec>,
}

impl DomainSequence {
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn final_spec(&self) -> &DomainSpec {
        self.specs.last().expect("sequence has ≥ 1 domain")
    }

    /// Assign each domain a seed derived from `root` so realizations stream
    /// deterministically and independently.
    pub fn with_base_seed(mut self, root: u64) -> DomainSequence {
        let splitter = SeedSplitter::new(root);
        for spec in &mut self.specs {
            spec.seed = splitter.derive("domain-stream", spec.index as u64);
        }
        self
    }
}

/// Build the factor ladder. For `count > 1` the spacing is
/// `(start − end)/(count − 1)`, the first factor is exactly `start_factor`
/// and the last exactly `end_factor`; `count = 1` yields `[end_factor]`.
pub fn make_domain_sequence(
    start_factor: f64,
    end_factor: f64,
    count: usize,
) -> Result<DomainSequence> {
    if !(end_factor > 0.0 && end_factor <= start_factor && start_factor <= 1.0) {
        return Err(Error::invalid(format!(
            "factors must satisfy 0 < end ≤ start ≤ 1, got start={start_factor} end={end_factor}"
        )));
    }
    if count == 0 {
        return Err(Error::invalid("domain count must be ≥ 1"));
    }
    if count > 1 && start_factor == end_factor {
        return Err(Error::invalid(
            "count > 1 needs start_factor > end_factor (factors decrease strictly)",
        ));
    }
    let mut specs = Vec::with_capacity(count);
    if count == 1 {
        specs.push(DomainSpec::new(end_factor, 0, 0)?);
    } else {
        let step = (start_factor - end_factor) / (count - 1) as f64;
        for i in 0..count {
            let factor = if i + 1 == count {
                end_factor
            } else {
                start_factor - step * i as f64
            };
            specs.push(DomainSpec::new(factor, i, 0)?);
        }
    }
    Ok(DomainSequence {
        start_factor,
        end_factor,
        count,
        specs,
    })
}
