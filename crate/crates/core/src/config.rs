use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether reflexive pairs `(v, v)` are reported for every vertex when the
/// automaton accepts the empty word.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonPairs {
    #[default]
    All,
    None,
}

impl FromStr for EpsilonPairs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(EpsilonPairs::All),
            "none" => Ok(EpsilonPairs::None),
            _ => Err(Error::Config(format!("epsilon-pairs must be `all` or `none`, got `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterializeMode {
    /// Drains run inline on the exploring thread.
    #[default]
    Sequential,
    /// Drains run on a consumer thread while exploration fills the other buffer.
    Overlap,
}

impl FromStr for MaterializeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(MaterializeMode::Sequential),
            "overlap" => Ok(MaterializeMode::Overlap),
            _ => Err(Error::Config(format!(
                "materialize mode must be `sequential` or `overlap`, got `{s}`"
            ))),
        }
    }
}

/// Plan strategy. Indices refer to top-level concatenation factors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanVariant {
    #[default]
    Forward,
    Reverse,
    /// Split before factor `k`: the suffix is materialized and transposed,
    /// the prefix is joined against it from the middle.
    Middle(usize),
    /// Cache the starred factor `k` as a virtual label.
    LoopCache(usize),
}

impl fmt::Display for PlanVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanVariant::Forward => f.write_str("forward"),
            PlanVariant::Reverse => f.write_str("reverse"),
            PlanVariant::Middle(k) => write!(f, "middle:{k}"),
            PlanVariant::LoopCache(k) => write!(f, "loop-cache:{k}"),
        }
    }
}

impl FromStr for PlanVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown plan `{s}`"));
        match s {
            "forward" => Ok(PlanVariant::Forward),
            "reverse" => Ok(PlanVariant::Reverse),
            _ => {
                let (kind, k) = s.split_once(':').ok_or_else(bad)?;
                let k: usize = k.parse().map_err(|_| bad())?;
                match kind {
                    "middle" => Ok(PlanVariant::Middle(k)),
                    "loop-cache" => Ok(PlanVariant::LoopCache(k)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

/// Test hooks that deliberately break the engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Sub-TGs ignore bridge segments and fall back to the visited check.
    SkipBridge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub static_hop: usize,
    pub batch_size: usize,
    pub theta: usize,
    pub input_buffer_bytes: usize,
    pub segment_buffer_bytes: usize,
    /// Capacity of each of the two result buffers.
    pub ur_buffer_bytes: usize,
    pub ur_chunk_bytes: usize,
    pub workers: usize,
    pub epsilon_pairs: EpsilonPairs,
    pub plan: PlanVariant,
    pub materialize_mode: MaterializeMode,
    pub trace: bool,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            static_hop: 5,
            batch_size: 4096,
            theta: 4096,
            input_buffer_bytes: 8 << 20,
            segment_buffer_bytes: 16 << 20,
            ur_buffer_bytes: 2 << 20,
            ur_chunk_bytes: 64 << 10,
            workers: 1,
            epsilon_pairs: EpsilonPairs::All,
            plan: PlanVariant::Forward,
            materialize_mode: MaterializeMode::Sequential,
            trace: false,
            seed: 0,
            fault: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("static_hop", self.static_hop),
            ("batch_size", self.batch_size),
            ("theta", self.theta),
            ("input_buffer_bytes", self.input_buffer_bytes),
            ("segment_buffer_bytes", self.segment_buffer_bytes),
            ("workers", self.workers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.ur_chunk_bytes < crate::materialize::UR_RECORD_BYTES {
            return Err(Error::Config("ur_chunk_bytes must hold at least one record".into()));
        }
        if self.ur_buffer_bytes < self.ur_chunk_bytes {
            return Err(Error::Config("ur_buffer_bytes must hold at least one chunk".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_variant_round_trip() {
        for p in [
            PlanVariant::Forward,
            PlanVariant::Reverse,
            PlanVariant::Middle(2),
            PlanVariant::LoopCache(0),
        ] {
            assert_eq!(p.to_string().parse::<PlanVariant>().unwrap(), p);
        }
        assert!("middle".parse::<PlanVariant>().is_err());
        assert!("sideways:1".parse::<PlanVariant>().is_err());
    }

    #[test]
    fn defaults_validate() {
        EngineConfig::default().validate().unwrap();
        let bad = EngineConfig {
            batch_size: 0,
            ..EngineConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
