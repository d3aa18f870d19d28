//! The machine-readable report: versioned schema, stable field order,
//! deterministic for fixed inputs. Secrets are redacted unless explicitly
//! revealed.

use hybrid_keynet_core::protocols::SessionResult;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: String,
    pub inputs: Inputs,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session: Option<SessionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub access: Option<AccessSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switch: Option<SwitchSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn new(command: &str, inputs: Inputs) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            inputs,
            warnings: Vec::new(),
            rates: None,
            session: None,
            access: None,
            switch: None,
            error: None,
        }
    }

    pub fn render(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

#[derive(Debug, Serialize)]
pub struct Inputs {
    pub topology_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct RatesSection {
    pub per_link: Vec<LinkRateRow>,
    pub options: Vec<OptionRateRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fastest_option: Option<String>,
    pub crossover: Vec<CrossoverRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepTable>,
}

#[derive(Debug, Serialize)]
pub struct LinkRateRow {
    pub link_id: String,
    pub kind: String,
    pub rate_bits_per_sec: f64,
}

#[derive(Debug, Serialize)]
pub struct OptionRateRow {
    pub name: String,
    pub protocol: String,
    pub rate_bits_per_sec: f64,
    pub channel_rates: Vec<ChannelRateRow>,
}

#[derive(Debug, Serialize)]
pub struct ChannelRateRow {
    pub channel_id: String,
    pub rate_bits_per_sec: f64,
}

#[derive(Debug, Serialize)]
pub struct CrossoverRow {
    pub qkd_rate_at_zero_km: f64,
    pub kem_rate_bits_per_sec: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossover_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_crossover_reason: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SweepTable {
    pub from_km: f64,
    pub to_km: f64,
    pub step_km: f64,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub length_km: f64,
    pub qkd_bits_per_sec: f64,
    pub kem_bits_per_sec: f64,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("length_km,qkd_bits_per_sec,kem_bits_per_sec\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                row.length_km, row.qkd_bits_per_sec, row.kem_bits_per_sec
            ));
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct SessionSection {
    pub protocol: String,
    pub key_length_bits: usize,
    pub keys_match: bool,
    pub elapsed_model_time_sec: f64,
    pub transcript_messages: usize,
    pub transcript_bytes: usize,
    pub transcript: Vec<TranscriptRow>,
    pub link_bits_drawn: BTreeMap<String, u64>,
    pub secrets: SecretsSection,
}

#[derive(Debug, Serialize)]
pub struct TranscriptRow {
    pub sender: String,
    pub payload_hex: String,
}

#[derive(Debug, Serialize)]
pub struct SecretsSection {
    pub redacted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_key_hex: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_keys: Option<Vec<LinkKeyRow>>,
}

#[derive(Debug, Serialize)]
pub struct LinkKeyRow {
    pub link_id: String,
    pub key_hex: String,
}

pub fn session_section(result: &SessionResult, protocol: &str, reveal: bool) -> SessionSection {
    let transcript: Vec<TranscriptRow> = result
        .transcript
        .iter()
        .map(|m| TranscriptRow { sender: m.sender.clone(), payload_hex: hex::encode(&m.payload) })
        .collect();
    let secrets = if reveal {
        SecretsSection {
            redacted: false,
            final_key_hex: Some(hex::encode(result.alice_key.bytes())),
            link_keys: Some(
                result
                    .link_keys
                    .iter()
                    .map(|(id, key)| LinkKeyRow {
                        link_id: id.clone(),
                        key_hex: hex::encode(key.bytes()),
                    })
                    .collect(),
            ),
        }
    } else {
        SecretsSection { redacted: true, final_key_hex: None, link_keys: None }
    };
    SessionSection {
        protocol: protocol.to_string(),
        key_length_bits: result.alice_key.length_bits(),
        keys_match: result.alice_key.bytes() == result.bob_key.bytes(),
        elapsed_model_time_sec: result.elapsed_model_time,
        transcript_messages: result.transcript.len(),
        transcript_bytes: result.transcript.iter().map(|m| m.payload.len()).sum(),
        transcript,
        link_bits_drawn: result.link_bits_drawn.clone(),
        secrets,
    }
}

#[derive(Debug, Serialize)]
pub struct AccessSection {
    pub protocol: String,
    pub leaf_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimal_sets: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criticality: Option<Vec<CriticalityRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub break_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub most_critical: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CriticalityRow {
    pub element: String,
    pub minimal_set_count: usize,
}

#[derive(Debug, Serialize)]
pub struct SwitchSection {
    pub events_applied: usize,
    pub transitions: Vec<TransitionRow>,
    pub final_risks: BTreeMap<String, f64>,
    pub link_states: BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
pub struct TransitionRow {
    pub link_id: String,
    pub from: String,
    pub to: String,
    pub reason: String,
    pub model_time: f64,
}
