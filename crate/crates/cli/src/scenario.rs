//! Scenario documents: what to run, with which rates, randomness, and
//! analysis toggles. Strict parsing, like topology documents.

use hybrid_keynet_core::protocols::ProtocolConfig;
use hybrid_keynet_core::rates::{KemRateParams, QkdRateParams, RateConfig};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Optional topology reference; the command-line path wins when both
    /// are given.
    #[serde(default)]
    pub topology: Option<String>,
    #[serde(default)]
    pub rates: Option<RateConfig>,
    #[serde(default)]
    pub protocol: Option<ProtocolConfig>,
    /// Named protocol options compared by the rate command.
    #[serde(default)]
    pub options: Vec<NamedProtocolOption>,
    #[serde(default)]
    pub length_bits: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub analysis: AnalysisToggles,
    /// Optional threat-event stream reference (JSON lines).
    #[serde(default)]
    pub events: Option<String>,
    /// QKD/KEM template pairs for crossover-distance computation.
    #[serde(default)]
    pub crossover: Vec<CrossoverPair>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedProtocolOption {
    pub name: String,
    pub protocol: ProtocolConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisToggles {
    #[serde(default = "yes")]
    pub access_structures: bool,
    #[serde(default = "yes")]
    pub break_probability: bool,
}

fn yes() -> bool {
    true
}

impl Default for AnalysisToggles {
    fn default() -> Self {
        AnalysisToggles { access_structures: true, break_probability: true }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossoverPair {
    pub qkd: QkdRateParams,
    pub kem: KemRateParams,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, String> {
    serde_json::from_str(text).map_err(|e| format!("invalid scenario: {e}"))
}
