//! Desk-scale exhaustive secrecy analysis of the protocols.
//!
//! Every protocol here is symbol-wise: link keys, relay messages, pads, and
//! shares all act independently on each symbol position. That makes a
//! single-symbol model over a small field (GF(16), 4-bit keys) a faithful
//! miniature: enumerating all assignments of the unknown symbols that are
//! consistent with an observed transcript yields the exact conditional
//! distribution of the final key given an adversary's view.
//!
//! The model reuses the production forwarding algebra from
//! [`super::algebra`] and the sharing algebra from [`crate::combiners`]; it
//! never consults the access-structure module, so the two can be checked
//! against each other.

use super::algebra::{otp_encrypt, relay_messages};
use super::{Channel, ProtocolConfig, ProtocolError};
use crate::combiners::share_symbols;
use crate::field::Field;
use crate::rates::walk_path;
use crate::topology::NetworkTopology;
use std::collections::BTreeSet;

/// One enumerable random symbol of the protocol run.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Var {
    /// Key of the link at `path_pos` of channel `channel`.
    LinkKey { channel: usize, path_pos: usize, link_id: String },
    /// The secret final key sampled by alice (secret sharing only).
    Secret,
    /// A sharing polynomial coefficient (secret sharing only).
    Coefficient(usize),
}

/// A single-symbol model of a configured protocol deployment.
pub struct DeskModel {
    channels: Vec<Channel>,
    /// Interior node ids per channel, aligned with relay message order.
    interiors: Vec<Vec<String>>,
    vars: Vec<Var>,
    kind: Kind,
    /// All compromisable element ids: path links and interior relay nodes.
    elements: BTreeSet<String>,
    /// element id -> indices of vars its compromise reveals.
    reveal_map: Vec<(String, Vec<usize>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Series,
    ParallelXor,
    SecretSharing { threshold: usize },
}

impl DeskModel {
    pub fn new(
        topology: &NetworkTopology,
        config: &ProtocolConfig,
    ) -> Result<Self, ProtocolError> {
        let (channels, kind) = match config {
            ProtocolConfig::Series { channel } => (vec![channel.clone()], Kind::Series),
            ProtocolConfig::ParallelXor { channels } => (channels.clone(), Kind::ParallelXor),
            ProtocolConfig::ParallelSecretSharing { channels, threshold } => {
                (channels.clone(), Kind::SecretSharing { threshold: *threshold })
            }
        };
        let mut interiors = Vec::with_capacity(channels.len());
        let mut vars = Vec::new();
        let mut elements = BTreeSet::new();
        for (ci, channel) in channels.iter().enumerate() {
            let nodes = walk_path(topology, &channel.path).map_err(|source| {
                ProtocolError::BadPath { channel: channel.id.clone(), source }
            })?;
            let interior: Vec<String> = nodes[1..nodes.len() - 1]
                .iter()
                .filter(|n| **n != topology.alice && **n != topology.bob)
                .cloned()
                .collect();
            for n in &interior {
                elements.insert(n.clone());
            }
            for (pi, link_id) in channel.path.iter().enumerate() {
                elements.insert(link_id.clone());
                vars.push(Var::LinkKey {
                    channel: ci,
                    path_pos: pi,
                    link_id: link_id.clone(),
                });
            }
            interiors.push(interior);
        }
        if let Kind::SecretSharing { threshold } = kind {
            if threshold < 1 || threshold > channels.len() {
                return Err(ProtocolError::BadThreshold { t: threshold, n: channels.len() });
            }
            vars.push(Var::Secret);
            for i in 0..threshold - 1 {
                vars.push(Var::Coefficient(i));
            }
        }
        let reveal_map = elements
            .iter()
            .map(|element| {
                let is_node = topology.node(element).is_some();
                let indices = vars
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| match v {
                        Var::LinkKey { link_id, .. } => {
                            let link = topology.link(link_id).expect("walked");
                            let hit = if is_node {
                                link.touches(element)
                            } else {
                                link_id == element
                            };
                            hit.then_some(i)
                        }
                        _ => None,
                    })
                    .collect();
                (element.clone(), indices)
            })
            .collect();
        Ok(DeskModel { channels, interiors, vars, kind, elements, reveal_map })
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    /// The compromisable universe: path links and interior relay nodes.
    pub fn elements(&self) -> &BTreeSet<String> {
        &self.elements
    }

    /// Sequence of interior-node senders, for cross-checks against the
    /// engine's transcript ordering.
    pub fn interior_nodes(&self) -> &[Vec<String>] {
        &self.interiors
    }

    /// Which vars a compromise of `elements` reveals directly (segment keys
    /// held by broken links and relay nodes).
    pub fn known_mask(&self, compromised: &BTreeSet<String>) -> Vec<bool> {
        let mut mask = vec![false; self.vars.len()];
        for (element, indices) in &self.reveal_map {
            if compromised.contains(element) {
                for &i in indices {
                    mask[i] = true;
                }
            }
        }
        mask
    }

    fn channel_link_keys<F: Field>(&self, assign: &[F], channel: usize) -> Vec<F> {
        self.vars
            .iter()
            .zip(assign)
            .filter_map(|(v, &x)| match v {
                Var::LinkKey { channel: c, .. } if *c == channel => Some(x),
                _ => None,
            })
            .collect()
    }

    fn secret_and_coeffs<F: Field>(&self, assign: &[F]) -> (F, Vec<F>) {
        let mut secret = F::ZERO;
        let mut coeffs = Vec::new();
        for (v, &x) in self.vars.iter().zip(assign) {
            match v {
                Var::Secret => secret = x,
                Var::Coefficient(_) => coeffs.push(x),
                _ => {}
            }
        }
        (secret, coeffs)
    }

    /// The public transcript symbols of a run, in deterministic order:
    /// per channel, the relay messages, then (for secret sharing) alice's
    /// padded share for that channel.
    pub fn transcript<F: Field>(&self, assign: &[F]) -> Vec<F> {
        let mut out = Vec::new();
        let shares = match self.kind {
            Kind::SecretSharing { threshold } => {
                let (secret, coeffs) = self.secret_and_coeffs(assign);
                let mut next = coeffs.into_iter();
                let shares = share_symbols(&[secret], threshold, self.channels.len(), || {
                    next.next().expect("coefficient vars cover the polynomial")
                })
                .expect("bounds checked at construction");
                Some(shares)
            }
            _ => None,
        };
        for ci in 0..self.channels.len() {
            let keys: Vec<Vec<F>> = self
                .channel_link_keys(assign, ci)
                .into_iter()
                .map(|k| vec![k])
                .collect();
            for msg in relay_messages(&keys) {
                out.extend(msg);
            }
            if let Some(shares) = &shares {
                // channel end-to-end key = first segment key (relay output)
                let pad = keys[0].clone();
                out.extend(otp_encrypt(&pad, &shares[ci].payload));
            }
        }
        out
    }

    /// The final key symbol of a run.
    pub fn final_key<F: Field>(&self, assign: &[F]) -> F {
        match self.kind {
            Kind::Series => self.channel_link_keys(assign, 0)[0],
            Kind::ParallelXor => (0..self.channels.len())
                .fold(F::ZERO, |acc, ci| acc.add(self.channel_link_keys(assign, ci)[0])),
            Kind::SecretSharing { .. } => self.secret_and_coeffs(assign).0,
        }
    }

    /// Exact conditional distribution of the final key given the transcript
    /// of `actual` and the vars marked known: counts over field elements of
    /// the final key across all consistent completions.
    pub fn conditional_key_counts<F: Field>(&self, actual: &[F], known: &[bool]) -> Vec<u64> {
        assert_eq!(actual.len(), self.vars.len());
        assert_eq!(known.len(), self.vars.len());
        let observed = self.transcript(actual);
        let unknown: Vec<usize> =
            (0..self.vars.len()).filter(|&i| !known[i]).collect();
        let mut counts = vec![0u64; F::ORDER as usize];
        let mut assign = actual.to_vec();
        let mut odometer = vec![0u16; unknown.len()];
        loop {
            for (slot, &i) in odometer.iter().zip(&unknown) {
                assign[i] = F::from_index(*slot);
            }
            if self.transcript(&assign) == observed {
                counts[self.final_key(&assign).index() as usize] += 1;
            }
            // advance
            let mut pos = 0;
            loop {
                if pos == odometer.len() {
                    return counts;
                }
                odometer[pos] += 1;
                if odometer[pos] < F::ORDER {
                    break;
                }
                odometer[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Does compromising `compromised` reveal the final key? True iff every
    /// completion consistent with the adversary's view (its segment keys
    /// plus the public transcript) yields the same final key.
    pub fn reveals<F: Field>(&self, actual: &[F], compromised: &BTreeSet<String>) -> bool {
        let counts = self.conditional_key_counts(actual, &self.known_mask(compromised));
        counts.iter().filter(|&&c| c > 0).count() == 1
    }
}
