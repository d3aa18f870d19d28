//! The quantum-classical switch: a per-link state machine driven by threat
//! events and additive-with-decay risk scores.
//!
//! Risk is a scalar in [0,1] per mechanism label. Events add a
//! severity-dependent weight; between events every score halves once per
//! configured half-life. Links escalate (extend key size, migrate PQC
//! algorithm, switch to QKD) when the active mechanism's risk crosses a
//! threshold and de-escalate with hysteresis once the risk that caused the
//! transition falls below threshold minus the configured margin.

use crate::topology::{LinkKind, NetworkTopology};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Advisory,
    Suspected,
    Demonstrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreatEvent {
    pub event_id: String,
    pub target: String,
    pub severity: Severity,
    pub model_time: f64,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mechanism {
    Pqc(String),
    Qkd,
    /// QKD and the named PQC algorithm XOR-combined.
    HybridXor(String),
}

impl Mechanism {
    pub fn render(&self) -> String {
        match self {
            Mechanism::Pqc(label) => format!("pqc:{label}"),
            Mechanism::Qkd => "qkd".to_string(),
            Mechanism::HybridXor(label) => format!("hybrid-xor:{label}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeySizeTier {
    Standard,
    Extended,
}

impl KeySizeTier {
    fn render(self) -> &'static str {
        match self {
            KeySizeTier::Standard => "standard",
            KeySizeTier::Extended => "extended",
        }
    }
}

/// Risk label used for QKD hardware.
pub const QKD_RISK_LABEL: &str = "qkd";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchConfig {
    pub weight_advisory: f64,
    pub weight_suspected: f64,
    pub weight_demonstrated: f64,
    /// Risk scores halve once per this much elapsed model time.
    pub risk_half_life_secs: f64,
    pub threshold_extend: f64,
    pub threshold_migrate: f64,
    pub threshold_quantum: f64,
    pub hysteresis: f64,
    /// Switch to Hybrid-XOR instead of bare QKD at the quantum threshold.
    pub prefer_hybrid: bool,
    /// Extra PQC algorithms available for migration beyond those already
    /// deployed on the topology.
    pub algorithm_pool: Vec<String>,
    /// Tie-break preference order for equal-risk migration targets.
    pub algorithm_preference: Vec<String>,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        SwitchConfig {
            weight_advisory: 0.2,
            weight_suspected: 0.5,
            weight_demonstrated: 1.0,
            risk_half_life_secs: 30.0 * 86_400.0,
            threshold_extend: 0.25,
            threshold_migrate: 0.5,
            threshold_quantum: 0.9,
            hysteresis: 0.05,
            prefer_hybrid: false,
            algorithm_pool: Vec::new(),
            algorithm_preference: vec!["hash-kem".into(), "lattice-kem".into()],
        }
    }
}

impl SwitchConfig {
    pub fn weight(&self, severity: Severity) -> f64 {
        match severity {
            Severity::Advisory => self.weight_advisory,
            Severity::Suspected => self.weight_suspected,
            Severity::Demonstrated => self.weight_demonstrated,
        }
    }

    pub fn validate(&self) -> Result<(), SwitchError> {
        let ok = 0.0 < self.threshold_extend
            && self.threshold_extend < self.threshold_migrate
            && self.threshold_migrate < self.threshold_quantum
            && self.threshold_quantum <= 1.0
            && self.hysteresis > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SwitchError::BadThresholds(format!(
                "need 0 < t_extend < t_migrate < t_quantum <= 1 and h > 0, got \
                 t_extend={}, t_migrate={}, t_quantum={}, h={}",
                self.threshold_extend,
                self.threshold_migrate,
                self.threshold_quantum,
                self.hysteresis
            )))
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SwitchError {
    #[error("bad thresholds: {0}")]
    BadThresholds(String),
    #[error("events not sorted by model_time at index {0}")]
    UnsortedEvents(usize),
    #[error("model time went backwards: {from} -> {to}")]
    TimeReversal { from: f64, to: f64 },
}

/// A logged mechanism or key-size transition. Alert findings use
/// `from == to` with an `alert:` reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub link_id: String,
    pub from: String,
    pub to: String,
    pub reason: String,
    pub model_time: f64,
}

/// Protection level of a KEM link, highest applicable condition wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Base,
    Migrated,
    Quantum,
}

#[derive(Debug, Clone, PartialEq)]
struct LinkPolicy {
    /// Base PQC label for KEM links; None for QKD-kind links.
    base_label: Option<String>,
    active: Mechanism,
    tier: KeySizeTier,
    /// Per-threshold hysteresis latches, driven by the base mechanism's
    /// risk: set at the threshold, cleared below threshold - h.
    extend_on: bool,
    migrate_on: bool,
    quantum_on: bool,
    /// Migration target while at the migrated level.
    target: Option<String>,
    alert_latched: bool,
}

impl LinkPolicy {
    fn render(&self) -> String {
        format!("{}:{}", self.active.render(), self.tier.render())
    }

    fn level(&self) -> Level {
        match &self.active {
            Mechanism::Qkd | Mechanism::HybridXor(_) if self.base_label.is_some() => {
                Level::Quantum
            }
            Mechanism::Pqc(label) if Some(label) != self.base_label.as_ref() => Level::Migrated,
            _ => Level::Base,
        }
    }
}

/// Latch update: on at the threshold, off below threshold minus the margin,
/// unchanged inside the band.
fn update_latch(on: &mut bool, risk: f64, threshold: f64, hysteresis: f64) {
    if !*on && risk >= threshold {
        *on = true;
    } else if *on && risk < threshold - hysteresis {
        *on = false;
    }
}

/// Per-link switch state plus the risk table and append-only history.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchState {
    pub risk: BTreeMap<String, f64>,
    links: BTreeMap<String, LinkPolicy>,
    pub history: Vec<Transition>,
    pub model_time: f64,
}

impl SwitchState {
    pub fn new(topology: &NetworkTopology) -> Self {
        let links = topology
            .links
            .iter()
            .map(|l| {
                let (base_label, active) = match &l.kind {
                    LinkKind::Kem { algorithm_label, .. } => (
                        Some(algorithm_label.clone()),
                        Mechanism::Pqc(algorithm_label.clone()),
                    ),
                    LinkKind::Qkd { .. } => (None, Mechanism::Qkd),
                };
                let policy = LinkPolicy {
                    base_label,
                    active,
                    tier: KeySizeTier::Standard,
                    extend_on: false,
                    migrate_on: false,
                    quantum_on: false,
                    target: None,
                    alert_latched: false,
                };
                (l.id.clone(), policy)
            })
            .collect();
        SwitchState { risk: BTreeMap::new(), links, history: Vec::new(), model_time: 0.0 }
    }

    pub fn risk_of_label(&self, label: &str) -> f64 {
        self.risk.get(label).copied().unwrap_or(0.0)
    }

    /// Active mechanism and key-size tier per link, rendered.
    pub fn link_states(&self) -> BTreeMap<String, String> {
        self.links.iter().map(|(id, lp)| (id.clone(), lp.render())).collect()
    }

    /// Active mechanism and key-size tier of one link.
    pub fn posture(&self, link_id: &str) -> Option<(Mechanism, KeySizeTier)> {
        self.links.get(link_id).map(|lp| (lp.active.clone(), lp.tier))
    }

    /// Decay every risk score for the elapsed model time and advance the
    /// clock. Going backwards is an error.
    pub fn advance_to(&mut self, model_time: f64, config: &SwitchConfig) -> Result<(), SwitchError> {
        if model_time < self.model_time {
            return Err(SwitchError::TimeReversal { from: self.model_time, to: model_time });
        }
        let elapsed = model_time - self.model_time;
        if elapsed > 0.0 {
            let factor = (-elapsed / config.risk_half_life_secs).exp2();
            for value in self.risk.values_mut() {
                *value *= factor;
            }
        }
        self.model_time = model_time;
        Ok(())
    }
}

/// Fold one threat event into the risk table: decay everything for the
/// elapsed time, then add the severity weight to the event's target
/// (capped at 1). Unknown targets get a fresh entry.
pub fn assess_risk(
    state: &mut SwitchState,
    event: &ThreatEvent,
    config: &SwitchConfig,
) -> Result<(), SwitchError> {
    state.advance_to(event.model_time, config)?;
    let entry = state.risk.entry(event.target.clone()).or_insert(0.0);
    *entry = (*entry + config.weight(event.severity)).min(1.0);
    Ok(())
}

fn qkd_sibling_exists(topology: &NetworkTopology, link_id: &str) -> bool {
    let Some(link) = topology.link(link_id) else { return false };
    topology.links.iter().any(|other| {
        other.id != link.id
            && other.is_qkd()
            && ((other.endpoints.0 == link.endpoints.0 && other.endpoints.1 == link.endpoints.1)
                || (other.endpoints.0 == link.endpoints.1
                    && other.endpoints.1 == link.endpoints.0))
    })
}

/// Migration candidates for a link whose active label is `active`:
/// algorithms deployed anywhere on the topology plus the configured extra
/// pool, ordered by the configured preference, minus the active label.
fn migration_candidates(
    topology: &NetworkTopology,
    config: &SwitchConfig,
    active: &str,
) -> Vec<String> {
    let mut available: BTreeSet<String> = config.algorithm_pool.iter().cloned().collect();
    for link in &topology.links {
        if let LinkKind::Kem { algorithm_label, .. } = &link.kind {
            available.insert(algorithm_label.clone());
        }
    }
    available.remove(active);
    let mut ordered = Vec::new();
    for preferred in &config.algorithm_preference {
        if available.remove(preferred) {
            ordered.push(preferred.clone());
        }
    }
    ordered.extend(available);
    ordered
}

fn lowest_risk_candidate(state: &SwitchState, candidates: &[String]) -> Option<String> {
    candidates
        .iter()
        .min_by(|a, b| {
            state
                .risk_of_label(a)
                .partial_cmp(&state.risk_of_label(b))
                .expect("risk scores are finite")
        })
        .cloned()
}

/// Evaluate every link against the current risk table. Each KEM link runs
/// three hysteresis latches on its base mechanism's risk (extend, migrate,
/// quantum); the protection level is the highest latched condition the
/// hardware supports, so raising risks can only raise the level. QKD links
/// adjust key size only, on the "qkd" label. Transitions are appended to
/// the state's history and returned.
pub fn decide_switch(
    state: &mut SwitchState,
    topology: &NetworkTopology,
    config: &SwitchConfig,
) -> Result<Vec<Transition>, SwitchError> {
    config.validate()?;
    let mut transitions = Vec::new();
    let link_ids: Vec<String> = state.links.keys().cloned().collect();
    for link_id in link_ids {
        let lp = state.links.get(&link_id).expect("link exists").clone();
        let mut next = lp.clone();
        let mut alert: Option<String> = None;

        let base_risk_label = match &lp.base_label {
            Some(base) => base.clone(),
            None => QKD_RISK_LABEL.to_string(),
        };
        let r = state.risk_of_label(&base_risk_label);
        update_latch(&mut next.extend_on, r, config.threshold_extend, config.hysteresis);
        next.tier = if next.extend_on { KeySizeTier::Extended } else { KeySizeTier::Standard };

        if let Some(base) = &lp.base_label {
            update_latch(&mut next.migrate_on, r, config.threshold_migrate, config.hysteresis);
            update_latch(&mut next.quantum_on, r, config.threshold_quantum, config.hysteresis);

            let candidates = migration_candidates(topology, config, base);
            let level = if next.quantum_on && qkd_sibling_exists(topology, &link_id) {
                Level::Quantum
            } else if next.migrate_on && !candidates.is_empty() {
                Level::Migrated
            } else {
                Level::Base
            };

            if level == Level::Migrated {
                let best = lowest_risk_candidate(state, &candidates)
                    .expect("candidates nonempty at the migrated level");
                match &next.target {
                    // Re-target only when the best candidate undercuts the
                    // current one by the hysteresis margin.
                    Some(current)
                        if state.risk_of_label(&best)
                            < state.risk_of_label(current) - config.hysteresis =>
                    {
                        next.target = Some(best);
                    }
                    Some(_) => {}
                    None => next.target = Some(best),
                }
            } else {
                next.target = None;
            }

            next.active = match level {
                Level::Quantum => {
                    if config.prefer_hybrid {
                        Mechanism::HybridXor(base.clone())
                    } else {
                        Mechanism::Qkd
                    }
                }
                Level::Migrated => {
                    Mechanism::Pqc(next.target.clone().expect("target set at migrated level"))
                }
                Level::Base => Mechanism::Pqc(base.clone()),
            };

            // Alert: migration warranted but the network offers nowhere to
            // go. Latched until the migrate condition releases.
            if next.migrate_on && candidates.is_empty() && level != Level::Quantum {
                if !lp.alert_latched {
                    alert = Some(format!(
                        "alert: risk {r:.6} >= t_migrate {:.6} on {base} but no \
                         alternative pqc algorithm available",
                        config.threshold_migrate
                    ));
                    next.alert_latched = true;
                }
            } else if !next.migrate_on {
                next.alert_latched = false;
            }

            if next.render() != lp.render() {
                let old_level = lp.level();
                let reason = if level > old_level {
                    let (name, value) = match level {
                        Level::Quantum => ("t_quantum", config.threshold_quantum),
                        _ => ("t_migrate", config.threshold_migrate),
                    };
                    format!("risk {r:.6} >= {name} {value:.6} on {base}")
                } else if level < old_level {
                    let (name, value) = match old_level {
                        Level::Quantum => ("t_quantum", config.threshold_quantum),
                        _ => ("t_migrate", config.threshold_migrate),
                    };
                    format!(
                        "risk {r:.6} < {name} {value:.6} - h {:.6} on {base}: hysteresis release",
                        config.hysteresis
                    )
                } else if next.active != lp.active {
                    format!(
                        "lowest-risk alternative is now {} (risk {:.6})",
                        next.active.render(),
                        state.risk_of_label(next.target.as_deref().unwrap_or(base)),
                    )
                } else if next.extend_on {
                    format!("risk {r:.6} >= t_extend {:.6} on {base}", config.threshold_extend)
                } else {
                    format!(
                        "risk {r:.6} < t_extend {:.6} - h {:.6} on {base}: hysteresis release",
                        config.threshold_extend, config.hysteresis
                    )
                };
                transitions.push(Transition {
                    link_id: link_id.clone(),
                    from: lp.render(),
                    to: next.render(),
                    reason,
                    model_time: state.model_time,
                });
            }
        } else if next.render() != lp.render() {
            // QKD-kind link: key-size adjustments only.
            let reason = if next.extend_on {
                format!(
                    "risk {r:.6} >= t_extend {:.6} on {QKD_RISK_LABEL}",
                    config.threshold_extend
                )
            } else {
                format!(
                    "risk {r:.6} < t_extend {:.6} - h {:.6} on {QKD_RISK_LABEL}: hysteresis release",
                    config.threshold_extend, config.hysteresis
                )
            };
            transitions.push(Transition {
                link_id: link_id.clone(),
                from: lp.render(),
                to: next.render(),
                reason,
                model_time: state.model_time,
            });
        }

        if let Some(reason) = alert {
            let rendered = next.render();
            transitions.push(Transition {
                link_id: link_id.clone(),
                from: rendered.clone(),
                to: rendered,
                reason,
                model_time: state.model_time,
            });
        }
        state.links.insert(link_id, next);
    }
    state.history.extend(transitions.iter().cloned());
    Ok(transitions)
}

/// Fold a sorted event stream through assess_risk and decide_switch.
pub fn replay(
    events: &[ThreatEvent],
    topology: &NetworkTopology,
    config: &SwitchConfig,
) -> Result<SwitchState, SwitchError> {
    config.validate()?;
    for (i, pair) in events.windows(2).enumerate() {
        if pair[1].model_time < pair[0].model_time {
            return Err(SwitchError::UnsortedEvents(i + 1));
        }
    }
    let mut state = SwitchState::new(topology);
    for event in events {
        assess_risk(&mut state, event, config)?;
        decide_switch(&mut state, topology, config)?;
    }
    Ok(state)
}
