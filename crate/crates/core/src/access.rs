//! Access-structure analysis: which compromise sets reveal the final key.
//!
//! A protocol deployment translates into a monotone formula over network
//! elements (links and interior relay nodes). Minimal satisfying sets are
//! expanded bottom-up with absorption; instance sizes here are small and
//! the minimal sets are the required output anyway, so no BDD machinery.

use crate::protocols::ProtocolConfig;
use crate::rates::{walk_path, PathError};
use crate::topology::NetworkTopology;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Monotone compromise formula: leaves are network element ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AccessFormula {
    Leaf(String),
    And(Vec<AccessFormula>),
    Or(Vec<AccessFormula>),
    Threshold { t: usize, children: Vec<AccessFormula> },
}

impl AccessFormula {
    /// OR over element ids, collapsing singletons to a leaf.
    fn or_of_elements(ids: Vec<String>) -> AccessFormula {
        let mut leaves: Vec<AccessFormula> = Vec::new();
        let mut seen = BTreeSet::new();
        for id in ids {
            if seen.insert(id.clone()) {
                leaves.push(AccessFormula::Leaf(id));
            }
        }
        if leaves.len() == 1 {
            leaves.pop().expect("nonempty")
        } else {
            AccessFormula::Or(leaves)
        }
    }

    /// Distinct leaf elements.
    pub fn leaves(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut BTreeSet<String>) {
        match self {
            AccessFormula::Leaf(id) => {
                out.insert(id.clone());
            }
            AccessFormula::And(cs) | AccessFormula::Or(cs) => {
                for c in cs {
                    c.collect_leaves(out);
                }
            }
            AccessFormula::Threshold { children, .. } => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AccessError {
    #[error("channel {channel:?}: {source}")]
    BadChannel { channel: String, source: PathError },
    #[error("threshold {t} out of bounds for {n} channels")]
    BadThreshold { t: usize, n: usize },
    #[error("formula has {leaves} leaves, above the configured bound {bound}")]
    LeafBoundExceeded { leaves: usize, bound: usize },
    #[error("exact break probability supports at most {bound} elements, got {got}")]
    TooManyElements { got: usize, bound: usize },
    #[error("element {0:?} not found in topology")]
    UnknownElement(String),
}

/// Default bound on distinct formula leaves for exact enumeration.
pub const DEFAULT_MAX_LEAVES: usize = 24;
/// Exact break-probability enumeration bound.
pub const MAX_PROBABILITY_ELEMENTS: usize = 20;

/// Compromise formula of one series channel: any segment key (a broken link
/// or a relay node that held it) plus the public transcript yields the final
/// key, so the channel falls to any single element on it.
fn channel_formula(
    topology: &NetworkTopology,
    channel: &crate::protocols::Channel,
) -> Result<AccessFormula, AccessError> {
    let nodes = walk_path(topology, &channel.path).map_err(|source| AccessError::BadChannel {
        channel: channel.id.clone(),
        source,
    })?;
    let mut ids: Vec<String> = channel.path.clone();
    ids.extend(
        nodes[1..nodes.len() - 1]
            .iter()
            .filter(|n| **n != topology.alice && **n != topology.bob)
            .cloned(),
    );
    Ok(AccessFormula::or_of_elements(ids))
}

/// Translate a protocol deployment into its compromise formula. Alice and
/// bob are never leaves.
pub fn derive_access_formula(
    topology: &NetworkTopology,
    config: &ProtocolConfig,
) -> Result<AccessFormula, AccessError> {
    match config {
        ProtocolConfig::Series { channel } => channel_formula(topology, channel),
        ProtocolConfig::ParallelXor { channels } => {
            let fs = channels
                .iter()
                .map(|c| channel_formula(topology, c))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(AccessFormula::And(fs))
        }
        ProtocolConfig::ParallelSecretSharing { channels, threshold } => {
            if *threshold < 1 || *threshold > channels.len() {
                return Err(AccessError::BadThreshold { t: *threshold, n: channels.len() });
            }
            let fs = channels
                .iter()
                .map(|c| channel_formula(topology, c))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(AccessFormula::Threshold { t: *threshold, children: fs })
        }
    }
}

/// Standard monotone evaluation: a leaf holds iff its element is
/// compromised; THRESHOLD(t, ..) holds iff at least t children hold.
pub fn evaluate(formula: &AccessFormula, compromised: &BTreeSet<String>) -> bool {
    match formula {
        AccessFormula::Leaf(id) => compromised.contains(id),
        AccessFormula::And(cs) => cs.iter().all(|c| evaluate(c, compromised)),
        AccessFormula::Or(cs) => cs.iter().any(|c| evaluate(c, compromised)),
        AccessFormula::Threshold { t, children } => {
            children.iter().filter(|c| evaluate(c, compromised)).count() >= *t
        }
    }
}

/// Antichain of inclusion-minimal satisfying sets plus per-element counts.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessStructureSet {
    /// Canonically ordered: by set size, then lexicographically.
    pub minimal_sets: Vec<BTreeSet<String>>,
    /// Number of minimal sets containing each element.
    pub element_criticality: BTreeMap<String, usize>,
    /// Filled by [`break_probability`].
    pub break_probability: Option<f64>,
}

/// Insert with absorption: drop the new set if a kept set is contained in
/// it; drop kept supersets of the new set.
fn absorb_insert(sets: &mut Vec<BTreeSet<String>>, candidate: BTreeSet<String>) {
    if sets.iter().any(|s| s.is_subset(&candidate)) {
        return;
    }
    sets.retain(|s| !candidate.is_subset(s));
    sets.push(candidate);
}

fn union_product(
    left: &[BTreeSet<String>],
    right: &[BTreeSet<String>],
) -> Vec<BTreeSet<String>> {
    let mut out = Vec::new();
    for a in left {
        for b in right {
            let mut u = a.clone();
            u.extend(b.iter().cloned());
            absorb_insert(&mut out, u);
        }
    }
    out
}

fn minimal_sets_of(formula: &AccessFormula) -> Vec<BTreeSet<String>> {
    match formula {
        AccessFormula::Leaf(id) => vec![BTreeSet::from([id.clone()])],
        AccessFormula::Or(cs) => {
            let mut out = Vec::new();
            for c in cs {
                for s in minimal_sets_of(c) {
                    absorb_insert(&mut out, s);
                }
            }
            out
        }
        AccessFormula::And(cs) => {
            let mut acc = vec![BTreeSet::new()];
            for c in cs {
                acc = union_product(&acc, &minimal_sets_of(c));
            }
            acc
        }
        AccessFormula::Threshold { t, children } => {
            let child_sets: Vec<Vec<BTreeSet<String>>> =
                children.iter().map(minimal_sets_of).collect();
            let mut out = Vec::new();
            for combo in subsets_of_size(children.len(), *t) {
                let mut acc = vec![BTreeSet::new()];
                for idx in combo {
                    acc = union_product(&acc, &child_sets[idx]);
                }
                for s in acc {
                    absorb_insert(&mut out, s);
                }
            }
            out
        }
    }
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Enumerate all inclusion-minimal satisfying sets of a monotone formula,
/// in canonical order (size, then lexicographic).
pub fn minimal_access_structures(
    formula: &AccessFormula,
    max_leaves: usize,
) -> Result<AccessStructureSet, AccessError> {
    let leaves = formula.leaves().len();
    if leaves > max_leaves {
        return Err(AccessError::LeafBoundExceeded { leaves, bound: max_leaves });
    }
    let mut minimal_sets = minimal_sets_of(formula);
    minimal_sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut element_criticality: BTreeMap<String, usize> = BTreeMap::new();
    for set in &minimal_sets {
        for element in set {
            *element_criticality.entry(element.clone()).or_insert(0) += 1;
        }
    }
    Ok(AccessStructureSet { minimal_sets, element_criticality, break_probability: None })
}

/// Exact break probability under independent per-element compromise, plus
/// the highest-criticality element.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakProbability {
    pub probability: f64,
    pub most_critical: Option<String>,
}

/// Probability that an independently sampled compromise set contains some
/// minimal set. Link elements use their `compromise_prob`; node elements use
/// `1 - trust_weight`. Exact enumeration, bounded at 20 elements.
pub fn break_probability(
    structures: &AccessStructureSet,
    topology: &NetworkTopology,
) -> Result<BreakProbability, AccessError> {
    let universe: Vec<&String> = {
        let mut set = BTreeSet::new();
        for s in &structures.minimal_sets {
            set.extend(s.iter());
        }
        set.into_iter().collect()
    };
    if universe.len() > MAX_PROBABILITY_ELEMENTS {
        return Err(AccessError::TooManyElements {
            got: universe.len(),
            bound: MAX_PROBABILITY_ELEMENTS,
        });
    }
    let probs: Vec<f64> = universe
        .iter()
        .map(|id| {
            if let Some(link) = topology.link(id) {
                Ok(link.compromise_prob)
            } else if let Some(node) = topology.node(id) {
                Ok(1.0 - node.trust_weight)
            } else {
                Err(AccessError::UnknownElement((*id).clone()))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let masks: Vec<u32> = structures
        .minimal_sets
        .iter()
        .map(|s| {
            s.iter()
                .map(|e| 1u32 << universe.iter().position(|u| *u == e).expect("element in universe"))
                .fold(0, |acc, bit| acc | bit)
        })
        .collect();
    let mut probability = 0.0;
    for subset in 0u32..(1u32 << universe.len()) {
        if !masks.iter().any(|m| subset & m == *m) {
            continue;
        }
        let mut p = 1.0;
        for (i, prob) in probs.iter().enumerate() {
            if subset & (1 << i) != 0 {
                p *= prob;
            } else {
                p *= 1.0 - prob;
            }
        }
        probability += p;
    }
    let most_critical = structures
        .element_criticality
        .iter()
        .max_by(|(ea, ca), (eb, cb)| ca.cmp(cb).then_with(|| eb.cmp(ea)))
        .map(|(e, _)| e.clone());
    Ok(BreakProbability { probability, most_critical })
}
