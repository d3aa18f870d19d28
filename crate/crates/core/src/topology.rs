//! Network description: nodes, typed links, and the two named end users.
//!
//! Topology documents are single self-contained JSON files, parsed strictly
//! (unknown keys are an error). Parsed topologies are immutable and safe to
//! share across concurrent analyses.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    EndUser,
    DataCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputeTier {
    Limited,
    HighPerformance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMode {
    Repeaterless,
    TwinField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub compute_tier: ComputeTier,
    /// Probability in [0,1] that the node resists compromise. Reporting only.
    pub trust_weight: f64,
}

/// Kind-specific link parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkKind {
    Qkd {
        length_km: f64,
        loss_db_per_km: f64,
        protocol_mode: ProtocolMode,
    },
    Kem {
        algorithm_label: String,
        rtt_ms: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: String,
    pub endpoints: (String, String),
    pub kind: LinkKind,
    pub compromise_prob: f64,
}

impl Link {
    pub fn is_qkd(&self) -> bool {
        matches!(self.kind, LinkKind::Qkd { .. })
    }

    pub fn other_endpoint(&self, node: &str) -> Option<&str> {
        if self.endpoints.0 == node {
            Some(&self.endpoints.1)
        } else if self.endpoints.1 == node {
            Some(&self.endpoints.0)
        } else {
            None
        }
    }

    pub fn touches(&self, node: &str) -> bool {
        self.endpoints.0 == node || self.endpoints.1 == node
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub alice: String,
    pub bob: String,
}

impl NetworkTopology {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn link(&self, id: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.id == id)
    }
}

pub const DEFAULT_LOSS_DB_PER_KM: f64 = 0.2;
pub const DEFAULT_COMPROMISE_PROB: f64 = 0.0;
pub const DEFAULT_TRUST_WEIGHT: f64 = 1.0;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("unknown node id {0:?}")]
    UnknownNodeId(String),
    #[error("missing {0} node")]
    MissingEndpoint(&'static str),
    #[error("link {link}: kind/field mismatch: {detail}")]
    KindFieldMismatch { link: String, detail: String },
}

// Raw document shapes: strict, everything optional that the format allows.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    nodes: Vec<RawNode>,
    links: Vec<RawLink>,
    alice: String,
    bob: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    kind: NodeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    compute_tier: Option<ComputeTier>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trust_weight: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawLinkKind {
    Qkd,
    Kem,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    id: String,
    endpoints: [String; 2],
    kind: RawLinkKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    length_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss_db_per_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    protocol_mode: Option<ProtocolMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    algorithm_label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rtt_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    compromise_prob: Option<f64>,
}

/// Parse a topology document, filling documented defaults. Structural
/// problems (unknown ids, duplicate ids, kind/field mismatches) are errors;
/// weaker invariants are reported by [`validate`] instead.
pub fn parse_topology(text: &str) -> Result<NetworkTopology, TopologyError> {
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| TopologyError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut node_ids = BTreeSet::new();
    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for n in raw.nodes {
        if !node_ids.insert(n.id.clone()) {
            return Err(TopologyError::DuplicateId(n.id));
        }
        let compute_tier = n.compute_tier.unwrap_or(match n.kind {
            NodeKind::EndUser => ComputeTier::Limited,
            NodeKind::DataCenter => ComputeTier::HighPerformance,
        });
        nodes.push(Node {
            id: n.id,
            kind: n.kind,
            compute_tier,
            trust_weight: n.trust_weight.unwrap_or(DEFAULT_TRUST_WEIGHT),
        });
    }

    let mut seen_ids: BTreeSet<String> = node_ids.clone();
    let mut links = Vec::with_capacity(raw.links.len());
    for l in raw.links {
        if !seen_ids.insert(l.id.clone()) {
            return Err(TopologyError::DuplicateId(l.id));
        }
        for ep in &l.endpoints {
            if !node_ids.contains(ep) {
                return Err(TopologyError::UnknownNodeId(ep.clone()));
            }
        }
        let kind = match l.kind {
            RawLinkKind::Qkd => {
                if let Some(label) = &l.algorithm_label {
                    return Err(TopologyError::KindFieldMismatch {
                        link: l.id,
                        detail: format!("qkd link carries algorithm_label {label:?}"),
                    });
                }
                if l.rtt_ms.is_some() {
                    return Err(TopologyError::KindFieldMismatch {
                        link: l.id,
                        detail: "qkd link carries rtt_ms".into(),
                    });
                }
                let length_km = l.length_km.ok_or_else(|| TopologyError::KindFieldMismatch {
                    link: l.id.clone(),
                    detail: "qkd link missing length_km".into(),
                })?;
                LinkKind::Qkd {
                    length_km,
                    loss_db_per_km: l.loss_db_per_km.unwrap_or(DEFAULT_LOSS_DB_PER_KM),
                    protocol_mode: l.protocol_mode.unwrap_or(ProtocolMode::Repeaterless),
                }
            }
            RawLinkKind::Kem => {
                if l.length_km.is_some() || l.loss_db_per_km.is_some() || l.protocol_mode.is_some()
                {
                    return Err(TopologyError::KindFieldMismatch {
                        link: l.id,
                        detail: "kem link carries qkd-only fields".into(),
                    });
                }
                let algorithm_label =
                    l.algorithm_label.ok_or_else(|| TopologyError::KindFieldMismatch {
                        link: l.id.clone(),
                        detail: "kem link missing algorithm_label".into(),
                    })?;
                LinkKind::Kem { algorithm_label, rtt_ms: l.rtt_ms.unwrap_or(0.0) }
            }
        };
        links.push(Link {
            id: l.id,
            endpoints: (l.endpoints[0].clone(), l.endpoints[1].clone()),
            kind,
            compromise_prob: l.compromise_prob.unwrap_or(DEFAULT_COMPROMISE_PROB),
        });
    }

    if !node_ids.contains(&raw.alice) {
        return Err(TopologyError::MissingEndpoint("alice"));
    }
    if !node_ids.contains(&raw.bob) {
        return Err(TopologyError::MissingEndpoint("bob"));
    }

    Ok(NetworkTopology { nodes, links, alice: raw.alice, bob: raw.bob })
}

/// Serialize back to the document format with every field explicit, so
/// parse ∘ serialize is the identity.
pub fn serialize_topology(topology: &NetworkTopology) -> String {
    let raw = RawDocument {
        nodes: topology
            .nodes
            .iter()
            .map(|n| RawNode {
                id: n.id.clone(),
                kind: n.kind,
                compute_tier: Some(n.compute_tier),
                trust_weight: Some(n.trust_weight),
            })
            .collect(),
        links: topology
            .links
            .iter()
            .map(|l| {
                let mut raw = RawLink {
                    id: l.id.clone(),
                    endpoints: [l.endpoints.0.clone(), l.endpoints.1.clone()],
                    kind: RawLinkKind::Qkd,
                    length_km: None,
                    loss_db_per_km: None,
                    protocol_mode: None,
                    algorithm_label: None,
                    rtt_ms: None,
                    compromise_prob: Some(l.compromise_prob),
                };
                match &l.kind {
                    LinkKind::Qkd { length_km, loss_db_per_km, protocol_mode } => {
                        raw.kind = RawLinkKind::Qkd;
                        raw.length_km = Some(*length_km);
                        raw.loss_db_per_km = Some(*loss_db_per_km);
                        raw.protocol_mode = Some(*protocol_mode);
                    }
                    LinkKind::Kem { algorithm_label, rtt_ms } => {
                        raw.kind = RawLinkKind::Kem;
                        raw.algorithm_label = Some(algorithm_label.clone());
                        raw.rtt_ms = Some(*rtt_ms);
                    }
                }
                raw
            })
            .collect(),
        alice: topology.alice.clone(),
        bob: topology.bob.clone(),
    };
    let mut out = serde_json::to_string_pretty(&raw).expect("topology serializes");
    out.push('\n');
    out
}

/// Check every topology invariant; the empty list means the topology is
/// valid. Violations are values, not errors.
pub fn validate(topology: &NetworkTopology) -> Vec<String> {
    let mut violations = Vec::new();
    let mut ids = BTreeSet::new();
    for n in &topology.nodes {
        if !ids.insert(&n.id) {
            violations.push(format!("duplicate id {:?}", n.id));
        }
        if !(0.0..=1.0).contains(&n.trust_weight) {
            violations.push(format!(
                "node {:?}: trust_weight {} outside [0,1]",
                n.id, n.trust_weight
            ));
        }
    }
    for l in &topology.links {
        if !ids.insert(&l.id) {
            violations.push(format!("duplicate id {:?}", l.id));
        }
        for ep in [&l.endpoints.0, &l.endpoints.1] {
            if topology.node(ep).is_none() {
                violations.push(format!("link {:?}: unknown node id {ep:?}", l.id));
            }
        }
        if l.endpoints.0 == l.endpoints.1 {
            violations.push(format!("link {:?}: endpoints must differ", l.id));
        }
        if !(0.0..=1.0).contains(&l.compromise_prob) {
            violations.push(format!(
                "link {:?}: compromise_prob {} outside [0,1]",
                l.id, l.compromise_prob
            ));
        }
        match &l.kind {
            LinkKind::Qkd { length_km, loss_db_per_km, .. } => {
                if *length_km < 0.0 {
                    violations.push(format!("link {:?}: negative length_km", l.id));
                }
                if *loss_db_per_km < 0.0 {
                    violations.push(format!("link {:?}: negative loss_db_per_km", l.id));
                }
            }
            LinkKind::Kem { rtt_ms, .. } => {
                if *rtt_ms < 0.0 {
                    violations.push(format!("link {:?}: negative rtt_ms", l.id));
                }
            }
        }
    }
    for (name, id) in [("alice", &topology.alice), ("bob", &topology.bob)] {
        match topology.node(id) {
            None => violations.push(format!("{name} node {id:?} does not exist")),
            Some(n) if n.kind != NodeKind::EndUser => {
                violations.push(format!("{name} node {id:?} must have kind end_user"))
            }
            _ => {}
        }
    }
    if topology.alice == topology.bob {
        violations.push("alice and bob must differ".into());
    } else if topology.node(&topology.alice).is_some()
        && topology.node(&topology.bob).is_some()
        && !connected(topology, &topology.alice, &topology.bob)
    {
        violations.push(format!("no path {}\u{2192}{}", topology.alice, topology.bob));
    }
    violations
}

fn connected(topology: &NetworkTopology, from: &str, to: &str) -> bool {
    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for l in &topology.links {
        adjacency.entry(&l.endpoints.0).or_default().push(&l.endpoints.1);
        adjacency.entry(&l.endpoints.1).or_default().push(&l.endpoints.0);
    }
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(cur) = queue.pop_front() {
        if cur == to {
            return true;
        }
        for &next in adjacency.get(cur).into_iter().flatten() {
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    false
}
