//! Phenomenological key-rate curves for QKD and KEM links, series
//! composition, and the QKD/KEM crossover distance.
//!
//! The QKD curve scales with channel transmittance eta = 10^(-loss*L/10),
//! linearly for repeaterless operation and as sqrt(eta) for twin-field
//! operation. The KEM curve is distance-independent except through the
//! round-trip time. Both are deliberately simple: the simulator needs the
//! distance scaling, not finite-key statistics.

use crate::topology::{ComputeTier, Link, LinkKind, NetworkTopology, ProtocolMode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QkdRateParams {
    pub source_rate_hz: f64,
    pub protocol_efficiency: f64,
    pub loss_db_per_km: f64,
    pub length_km: f64,
    pub protocol_mode: ProtocolMode,
    /// Minimum useful rate; below it the link yields 0.
    pub cutoff_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KemRateParams {
    pub handshakes_per_sec: f64,
    pub bits_per_handshake: f64,
    pub rtt_ms: f64,
    pub bandwidth_bits_per_sec: f64,
}

/// Tunable rate model shared by the whole run; scenario documents may
/// override any field. The numbers are illustrative defaults, not measured
/// hardware figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub qkd_source_rate_hz: f64,
    pub qkd_protocol_efficiency: f64,
    pub qkd_cutoff_rate_hz: f64,
    pub kem_handshakes_per_sec_limited: f64,
    pub kem_handshakes_per_sec_high_performance: f64,
    pub kem_bits_per_handshake: f64,
    pub kem_bandwidth_bits_per_sec: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            qkd_source_rate_hz: 2.0e6,
            qkd_protocol_efficiency: 0.5,
            qkd_cutoff_rate_hz: 0.0,
            kem_handshakes_per_sec_limited: 1.0e2,
            kem_handshakes_per_sec_high_performance: 1.0e5,
            kem_bits_per_handshake: 256.0,
            kem_bandwidth_bits_per_sec: 1.0e9,
        }
    }
}

impl RateConfig {
    pub fn handshakes_for_tier(&self, tier: ComputeTier) -> f64 {
        match tier {
            ComputeTier::Limited => self.kem_handshakes_per_sec_limited,
            ComputeTier::HighPerformance => self.kem_handshakes_per_sec_high_performance,
        }
    }

    /// Rate parameters for a concrete link of the topology. KEM handshake
    /// throughput is set by the slower endpoint's compute tier.
    pub fn params_for_link(&self, topology: &NetworkTopology, link: &Link) -> LinkRateParams {
        match &link.kind {
            LinkKind::Qkd { length_km, loss_db_per_km, protocol_mode } => {
                LinkRateParams::Qkd(QkdRateParams {
                    source_rate_hz: self.qkd_source_rate_hz,
                    protocol_efficiency: self.qkd_protocol_efficiency,
                    loss_db_per_km: *loss_db_per_km,
                    length_km: *length_km,
                    protocol_mode: *protocol_mode,
                    cutoff_rate_hz: self.qkd_cutoff_rate_hz,
                })
            }
            LinkKind::Kem { rtt_ms, .. } => {
                let tier_of = |id: &str| {
                    topology.node(id).map(|n| n.compute_tier).unwrap_or(ComputeTier::Limited)
                };
                let a = self.handshakes_for_tier(tier_of(&link.endpoints.0));
                let b = self.handshakes_for_tier(tier_of(&link.endpoints.1));
                LinkRateParams::Kem(KemRateParams {
                    handshakes_per_sec: a.min(b),
                    bits_per_handshake: self.kem_bits_per_handshake,
                    rtt_ms: *rtt_ms,
                    bandwidth_bits_per_sec: self.kem_bandwidth_bits_per_sec,
                })
            }
        }
    }

    pub fn link_rate(&self, topology: &NetworkTopology, link: &Link) -> f64 {
        match self.params_for_link(topology, link) {
            LinkRateParams::Qkd(p) => qkd_rate(&p),
            LinkRateParams::Kem(p) => kem_rate(&p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinkRateParams {
    Qkd(QkdRateParams),
    Kem(KemRateParams),
}

/// Secret-key rate of a QKD link in bits per second.
pub fn qkd_rate(params: &QkdRateParams) -> f64 {
    let eta = 10f64.powf(-params.loss_db_per_km * params.length_km / 10.0);
    let channel = match params.protocol_mode {
        ProtocolMode::Repeaterless => eta,
        ProtocolMode::TwinField => eta.sqrt(),
    };
    let rate = params.source_rate_hz * params.protocol_efficiency * channel;
    if rate < params.cutoff_rate_hz {
        0.0
    } else {
        rate
    }
}

/// Symmetric-key rate of a KEM link in bits per second. Handshakes are
/// serialized behind the round trip; the link bandwidth caps the result.
pub fn kem_rate(params: &KemRateParams) -> f64 {
    let handshake_rate = params.handshakes_per_sec * params.bits_per_handshake
        / (1.0 + params.handshakes_per_sec * params.rtt_ms / 1000.0);
    handshake_rate.min(params.bandwidth_bits_per_sec)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("path is empty")]
    Empty,
    #[error("unknown link id {0:?}")]
    UnknownLink(String),
    #[error("path not contiguous at link {0:?}")]
    NotContiguous(String),
    #[error("path ends at {got:?}, expected {expected:?}")]
    WrongEndpoint { got: String, expected: String },
}

/// Walk a path of link ids from alice, checking contiguity, and return the
/// visited node sequence (alice first, bob last).
pub fn walk_path(
    topology: &NetworkTopology,
    path: &[String],
) -> Result<Vec<String>, PathError> {
    if path.is_empty() {
        return Err(PathError::Empty);
    }
    let mut nodes = vec![topology.alice.clone()];
    let mut current = topology.alice.clone();
    for id in path {
        let link = topology.link(id).ok_or_else(|| PathError::UnknownLink(id.clone()))?;
        let next = link
            .other_endpoint(&current)
            .ok_or_else(|| PathError::NotContiguous(id.clone()))?;
        current = next.to_string();
        nodes.push(current.clone());
    }
    if current != topology.bob {
        return Err(PathError::WrongEndpoint { got: current, expected: topology.bob.clone() });
    }
    Ok(nodes)
}

/// End-to-end rate of a relayed path: the minimum per-link rate, since a
/// relayed key is produced no faster than its slowest segment.
pub fn end_to_end_rate(
    topology: &NetworkTopology,
    path: &[String],
    config: &RateConfig,
) -> Result<f64, PathError> {
    walk_path(topology, path)?;
    let mut min_rate = f64::INFINITY;
    for id in path {
        let link = topology.link(id).expect("walk checked ids");
        min_rate = min_rate.min(config.link_rate(topology, link));
    }
    Ok(min_rate)
}

/// Why no crossover distance exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NoCrossover {
    /// The KEM rate already meets or beats QKD at zero distance.
    KemDominatesAtZero,
    /// No crossing within the search horizon of 1e5 km.
    NoneWithinHorizon,
}

const CROSSOVER_HORIZON_KM: f64 = 1.0e5;
const CROSSOVER_REL_TOL: f64 = 1.0e-9;

/// Distance at which the QKD rate falls to the (distance-independent) KEM
/// rate, found by bisection. QKD beats KEM below the result and loses above
/// it.
pub fn crossover_distance(
    qkd_template: &QkdRateParams,
    kem_template: &KemRateParams,
) -> Result<f64, NoCrossover> {
    let qkd_at = |length_km: f64| {
        qkd_rate(&QkdRateParams { length_km, ..qkd_template.clone() })
    };
    let target = kem_rate(kem_template);
    if qkd_at(0.0) <= target {
        return Err(NoCrossover::KemDominatesAtZero);
    }
    if qkd_at(CROSSOVER_HORIZON_KM) > target {
        return Err(NoCrossover::NoneWithinHorizon);
    }
    let mut lo = 0.0f64;
    let mut hi = CROSSOVER_HORIZON_KM;
    loop {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= CROSSOVER_REL_TOL * mid.max(1.0) {
            return Ok(mid);
        }
        if qkd_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
