//! Execution of the key-distribution protocols between simulated parties.
//!
//! A session is a deterministic single-threaded event sequence: every random
//! draw comes from a per-link (or per-party) stream derived from the session
//! seed, so identical inputs replay to identical results, transcripts
//! included. Model time derives purely from the rate models.

pub mod algebra;
pub mod exhaustive;

use crate::combiners::{
    self, encode_share, xor_combine, KeyMaterial, SecretShare, SHARE_WIRE_HEADER_LEN,
};
use crate::rates::{walk_path, PathError, RateConfig};
use crate::topology::NetworkTopology;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

/// An end-to-end channel: an ordered list of link ids from alice to bob.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub id: String,
    pub path: Vec<String>,
}

/// Protocol deployment over a topology; consumed by the engine and by the
/// access-structure derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    Series { channel: Channel },
    ParallelXor { channels: Vec<Channel> },
    ParallelSecretSharing { channels: Vec<Channel>, threshold: usize },
}

impl ProtocolConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolConfig::Series { .. } => "series",
            ProtocolConfig::ParallelXor { .. } => "parallel_xor",
            ProtocolConfig::ParallelSecretSharing { .. } => "parallel_secret_sharing",
        }
    }

    pub fn channels(&self) -> Vec<&Channel> {
        match self {
            ProtocolConfig::Series { channel } => vec![channel],
            ProtocolConfig::ParallelXor { channels } => channels.iter().collect(),
            ProtocolConfig::ParallelSecretSharing { channels, .. } => channels.iter().collect(),
        }
    }
}

/// A public classical message in the transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptMessage {
    pub sender: String,
    pub payload: Vec<u8>,
}

/// Outcome of one protocol session. `link_keys` are raw segment keys kept
/// for analysis only; treat them as secret.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub alice_key: KeyMaterial,
    pub bob_key: KeyMaterial,
    pub transcript: Vec<TranscriptMessage>,
    pub link_keys: Vec<(String, KeyMaterial)>,
    pub elapsed_model_time: f64,
    /// Bits drawn from each link's key stream, for consumption accounting.
    pub link_bits_drawn: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("requested key length must be a positive multiple of 8 bits, got {0}")]
    BadLength(usize),
    #[error("link {0:?} dead at this distance (rate 0)")]
    DeadLink(String),
    #[error("channel {0:?} failed: {1}")]
    ChannelDead(String, String),
    #[error("channel {channel:?}: {source}")]
    BadPath { channel: String, source: PathError },
    #[error("need at least 2 channels, got {0}")]
    TooFewChannels(usize),
    #[error("threshold {t} out of bounds for {n} channels")]
    BadThreshold { t: usize, n: usize },
    #[error("only {live} live channels for threshold {t}")]
    NotEnoughLiveChannels { live: usize, t: usize },
}

fn stream_for(seed: u64, domain: &str, label: &str) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"hybrid-keynet/v1/");
    hasher.update(domain.as_bytes());
    hasher.update(b"/");
    hasher.update(seed.to_le_bytes());
    hasher.update(b"/");
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut seed_bytes = [0u8; 32];
    seed_bytes.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(seed_bytes)
}

/// One session's worth of seeded randomness and accounting.
struct Session<'a> {
    topology: &'a NetworkTopology,
    rates: &'a RateConfig,
    seed: u64,
    link_streams: BTreeMap<String, ChaCha12Rng>,
    link_keys: Vec<(String, KeyMaterial)>,
    link_bits_drawn: BTreeMap<String, u64>,
    transcript: Vec<TranscriptMessage>,
    warnings: Vec<String>,
}

struct ChannelKey {
    key: KeyMaterial,
    /// Min per-link rate along the channel.
    rate: f64,
}

impl<'a> Session<'a> {
    fn new(topology: &'a NetworkTopology, rates: &'a RateConfig, seed: u64) -> Self {
        Session {
            topology,
            rates,
            seed,
            link_streams: BTreeMap::new(),
            link_keys: Vec::new(),
            link_bits_drawn: BTreeMap::new(),
            transcript: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn link_rate(&self, link_id: &str) -> Result<f64, ProtocolError> {
        let link = self
            .topology
            .link(link_id)
            .ok_or_else(|| ProtocolError::DeadLink(link_id.to_string()))?;
        Ok(self.rates.link_rate(self.topology, link))
    }

    /// Draw `length_bits` fresh key bits from the link's stream; both
    /// endpoints hold the result.
    fn establish_link_key(
        &mut self,
        link_id: &str,
        length_bits: usize,
    ) -> Result<KeyMaterial, ProtocolError> {
        if length_bits == 0 || !length_bits.is_multiple_of(8) {
            return Err(ProtocolError::BadLength(length_bits));
        }
        if self.link_rate(link_id)? <= 0.0 {
            return Err(ProtocolError::DeadLink(link_id.to_string()));
        }
        let seed = self.seed;
        let stream = self
            .link_streams
            .entry(link_id.to_string())
            .or_insert_with(|| stream_for(seed, "link", link_id));
        let mut bits = vec![0u8; length_bits / 8];
        stream.fill_bytes(&mut bits);
        *self.link_bits_drawn.entry(link_id.to_string()).or_insert(0) += length_bits as u64;
        let key = KeyMaterial::new(bits, link_id).expect("link id is nonempty");
        self.link_keys.push((link_id.to_string(), key.clone()));
        Ok(key)
    }

    /// Establish an end-to-end channel key by the series relay: per-link
    /// keys, pairwise XORs published by interior nodes, final key = first
    /// segment key. Receiver-side reconstruction is executed and checked.
    fn run_channel(
        &mut self,
        channel: &Channel,
        length_bits: usize,
    ) -> Result<ChannelKey, ProtocolError> {
        let nodes = walk_path(self.topology, &channel.path).map_err(|source| {
            ProtocolError::BadPath { channel: channel.id.clone(), source }
        })?;
        let mut rate = f64::INFINITY;
        for link_id in &channel.path {
            let r = self.link_rate(link_id)?;
            if r <= 0.0 {
                return Err(ProtocolError::DeadLink(link_id.clone()));
            }
            rate = rate.min(r);
        }
        let mut keys = Vec::with_capacity(channel.path.len());
        for link_id in &channel.path {
            keys.push(self.establish_link_key(link_id, length_bits)?);
        }
        for (i, window) in keys.windows(2).enumerate() {
            let payload: Vec<u8> = window[0]
                .bytes()
                .iter()
                .zip(window[1].bytes())
                .map(|(a, b)| a ^ b)
                .collect();
            self.transcript.push(TranscriptMessage {
                sender: nodes[i + 1].clone(),
                payload,
            });
        }
        // Bob's route: last segment key folded back through the messages.
        let mut bob = keys.last().expect("path nonempty").bytes().to_vec();
        for window in keys.windows(2).rev() {
            let msg: Vec<u8> = window[0]
                .bytes()
                .iter()
                .zip(window[1].bytes())
                .map(|(a, b)| a ^ b)
                .collect();
            bob = msg.iter().zip(&bob).map(|(c, k)| c ^ k).collect();
        }
        debug_assert_eq!(&bob, keys[0].bytes());
        let key = KeyMaterial::new(bob, format!("channel:{}", channel.id))
            .expect("channel id is nonempty");
        Ok(ChannelKey { key, rate })
    }

    fn warn_on_shared_elements(&mut self, channels: &[&Channel]) {
        let mut elements: Vec<(String, std::collections::BTreeSet<String>)> = Vec::new();
        for ch in channels {
            let mut set: std::collections::BTreeSet<String> =
                ch.path.iter().cloned().collect();
            if let Ok(nodes) = walk_path(self.topology, &ch.path) {
                for n in &nodes[1..nodes.len().saturating_sub(1)] {
                    set.insert(n.clone());
                }
            }
            elements.push((ch.id.clone(), set));
        }
        for i in 0..elements.len() {
            for j in (i + 1)..elements.len() {
                let shared: Vec<&String> =
                    elements[i].1.intersection(&elements[j].1).collect();
                if !shared.is_empty() {
                    let names: Vec<&str> = shared.iter().map(|s| s.as_str()).collect();
                    self.warnings.push(format!(
                        "channels {:?} and {:?} share elements: {}",
                        elements[i].0,
                        elements[j].0,
                        names.join(", ")
                    ));
                }
            }
        }
    }

    fn finish(self, alice_key: KeyMaterial, bob_key: KeyMaterial, elapsed: f64) -> SessionResult {
        SessionResult {
            alice_key,
            bob_key,
            transcript: self.transcript,
            link_keys: self.link_keys,
            elapsed_model_time: elapsed,
            link_bits_drawn: self.link_bits_drawn,
            warnings: self.warnings,
        }
    }
}

/// Outcome of a single pairwise key establishment.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkKeyOutcome {
    pub key: KeyMaterial,
    pub elapsed_model_time: f64,
}

/// Establish a pairwise key on one link: both endpoints end up holding the
/// returned bits. Model time is length / rate.
pub fn establish_link_key(
    topology: &NetworkTopology,
    rates: &RateConfig,
    link_id: &str,
    length_bits: usize,
    seed: u64,
) -> Result<LinkKeyOutcome, ProtocolError> {
    let mut session = Session::new(topology, rates, seed);
    let rate = session.link_rate(link_id)?;
    if rate <= 0.0 {
        return Err(ProtocolError::DeadLink(link_id.to_string()));
    }
    let key = session.establish_link_key(link_id, length_bits)?;
    Ok(LinkKeyOutcome { key, elapsed_model_time: length_bits as f64 / rate })
}

/// Run the series-connection relay over one channel.
pub fn run_series_relay(
    topology: &NetworkTopology,
    rates: &RateConfig,
    channel: &Channel,
    length_bits: usize,
    seed: u64,
) -> Result<SessionResult, ProtocolError> {
    if length_bits == 0 || !length_bits.is_multiple_of(8) {
        return Err(ProtocolError::BadLength(length_bits));
    }
    let mut session = Session::new(topology, rates, seed);
    let ChannelKey { key, rate } = session.run_channel(channel, length_bits)?;
    let alice = KeyMaterial::new(key.bytes().to_vec(), format!("series:{}", channel.id))
        .expect("nonempty origin");
    let bob = alice.clone();
    let elapsed = length_bits as f64 / rate;
    Ok(session.finish(alice, bob, elapsed))
}

/// Run the XOR-based parallel scheme: every channel must deliver; the final
/// key is the XOR of the per-channel keys.
pub fn run_parallel_xor(
    topology: &NetworkTopology,
    rates: &RateConfig,
    channels: &[Channel],
    length_bits: usize,
    seed: u64,
) -> Result<SessionResult, ProtocolError> {
    if channels.len() < 2 {
        return Err(ProtocolError::TooFewChannels(channels.len()));
    }
    if length_bits == 0 || !length_bits.is_multiple_of(8) {
        return Err(ProtocolError::BadLength(length_bits));
    }
    let mut session = Session::new(topology, rates, seed);
    session.warn_on_shared_elements(&channels.iter().collect::<Vec<_>>());
    let mut keys = Vec::with_capacity(channels.len());
    let mut min_rate = f64::INFINITY;
    for channel in channels {
        let ck = session.run_channel(channel, length_bits).map_err(|e| match e {
            ProtocolError::DeadLink(link) => {
                ProtocolError::ChannelDead(channel.id.clone(), format!("link {link:?} dead"))
            }
            other => other,
        })?;
        min_rate = min_rate.min(ck.rate);
        keys.push(ck.key);
    }
    let combined = xor_combine(&keys).expect("channels checked nonempty and equal length");
    let alice = KeyMaterial::new(combined.bytes().to_vec(), format!("parallel_xor:seed{seed}"))
        .expect("nonempty origin");
    let bob = alice.clone();
    let elapsed = length_bits as f64 / min_rate;
    Ok(session.finish(alice, bob, elapsed))
}

/// Run the secret-sharing parallel scheme: alice samples the final key,
/// splits it t-of-n, and sends share j over channel j under a one-time pad
/// drawn from that channel's end-to-end key. Up to n - t dead channels are
/// tolerated.
pub fn run_parallel_secret_sharing(
    topology: &NetworkTopology,
    rates: &RateConfig,
    channels: &[Channel],
    threshold: usize,
    length_bits: usize,
    seed: u64,
) -> Result<SessionResult, ProtocolError> {
    let n = channels.len();
    if threshold < 1 || threshold > n {
        return Err(ProtocolError::BadThreshold { t: threshold, n });
    }
    if length_bits == 0 || !length_bits.is_multiple_of(8) {
        return Err(ProtocolError::BadLength(length_bits));
    }
    let mut session = Session::new(topology, rates, seed);
    session.warn_on_shared_elements(&channels.iter().collect::<Vec<_>>());

    // Liveness scan before any key material is drawn.
    let mut live = Vec::new();
    for (idx, channel) in channels.iter().enumerate() {
        walk_path(topology, &channel.path).map_err(|source| ProtocolError::BadPath {
            channel: channel.id.clone(),
            source,
        })?;
        let alive = channel
            .path
            .iter()
            .all(|id| session.link_rate(id).map(|r| r > 0.0).unwrap_or(false));
        if alive {
            live.push(idx);
        }
    }
    if live.len() < threshold {
        return Err(ProtocolError::NotEnoughLiveChannels { live: live.len(), t: threshold });
    }
    if threshold == n && live.len() < n {
        // t = n tolerates nothing; already covered above, kept for clarity.
        return Err(ProtocolError::NotEnoughLiveChannels { live: live.len(), t: threshold });
    }

    // Alice samples the final key and the sharing from her own stream.
    let mut alice_stream = stream_for(seed, "alice", "secret-sharing");
    let mut secret_bytes = vec![0u8; length_bits / 8];
    alice_stream.fill_bytes(&mut secret_bytes);
    let alice_key =
        KeyMaterial::new(secret_bytes, format!("parallel_secret_sharing:seed{seed}"))
            .expect("nonempty origin");
    let shares = combiners::share_secret(&alice_key, threshold, n, &mut alice_stream)
        .expect("threshold bounds checked");

    let share_bits = 8 * (SHARE_WIRE_HEADER_LEN + length_bits / 8);
    let mut delivered: Vec<SecretShare> = Vec::new();
    let mut live_rates = Vec::new();
    for &idx in &live {
        let channel = &channels[idx];
        let ck = session.run_channel(channel, share_bits)?;
        live_rates.push(ck.rate);
        let wire = encode_share(&shares[idx]);
        let cipher: Vec<u8> = wire.iter().zip(ck.key.bytes()).map(|(p, k)| p ^ k).collect();
        session.transcript.push(TranscriptMessage {
            sender: topology.alice.clone(),
            payload: cipher.clone(),
        });
        // Bob's side: decrypt with his copy of the channel key and decode.
        let plain: Vec<u8> = cipher.iter().zip(ck.key.bytes()).map(|(c, k)| c ^ k).collect();
        let share = combiners::decode_share(&plain)
            .expect("well-formed share survives the pad round trip");
        delivered.push(share);
    }

    delivered.sort_by_key(|s| s.index);
    let bob_key_raw = combiners::reconstruct(&delivered[..threshold])
        .expect("threshold delivered shares reconstruct");
    let bob_key = KeyMaterial::new(
        bob_key_raw.bytes().to_vec(),
        format!("parallel_secret_sharing:seed{seed}"),
    )
    .expect("nonempty origin");

    // The session completes when the t-th fastest live channel delivers.
    live_rates.sort_by(|a, b| b.partial_cmp(a).expect("rates are finite"));
    let elapsed = share_bits as f64 / live_rates[threshold - 1];
    Ok(session.finish(alice_key, bob_key, elapsed))
}

/// Dispatch a configured protocol.
pub fn run_protocol(
    topology: &NetworkTopology,
    rates: &RateConfig,
    config: &ProtocolConfig,
    length_bits: usize,
    seed: u64,
) -> Result<SessionResult, ProtocolError> {
    match config {
        ProtocolConfig::Series { channel } => {
            run_series_relay(topology, rates, channel, length_bits, seed)
        }
        ProtocolConfig::ParallelXor { channels } => {
            run_parallel_xor(topology, rates, channels, length_bits, seed)
        }
        ProtocolConfig::ParallelSecretSharing { channels, threshold } => {
            run_parallel_secret_sharing(topology, rates, channels, *threshold, length_bits, seed)
        }
    }
}
