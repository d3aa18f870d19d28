//! Subcommand implementations. Every command is pure file-in/file-out and
//! byte-deterministic for fixed inputs.
//!
//! Exit codes: 0 success, 1 domain failure (validation, protocol abort,
//! analysis bound), 2 I/O or usage error.

use crate::report::{
    self, AccessSection, ChannelRateRow, CriticalityRow, CrossoverRow, Inputs, LinkRateRow,
    OptionRateRow, RatesSection, Report, SweepRow, SweepTable, SwitchSection, TransitionRow,
};
use crate::scenario::{parse_scenario, CrossoverPair, Scenario};
use hybrid_keynet_core::access::{
    break_probability, derive_access_formula, minimal_access_structures, AccessError,
    DEFAULT_MAX_LEAVES,
};
use hybrid_keynet_core::combiners::SHARE_WIRE_HEADER_LEN;
use hybrid_keynet_core::protocols::{run_protocol, ProtocolConfig};
use hybrid_keynet_core::rates::{
    crossover_distance, end_to_end_rate, kem_rate, qkd_rate, KemRateParams, NoCrossover,
    QkdRateParams, RateConfig,
};
use hybrid_keynet_core::switch::{replay, SwitchConfig, SwitchError, ThreatEvent};
use hybrid_keynet_core::topology::{parse_topology, validate, NetworkTopology, ProtocolMode};

pub const MAX_LEAVES_ENV: &str = "HYBRID_KEYNET_MAX_LEAVES";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub from_km: f64,
    pub to_km: f64,
    pub step_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct GlobalOpts {
    pub seed: Option<u64>,
    pub format: OutputFormat,
    pub reveal_secrets: bool,
    pub sweep: Option<SweepSpec>,
}

pub struct CommandOutput {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

impl CommandOutput {
    fn ok(stdout: String) -> Self {
        CommandOutput { stdout, stderr: String::new(), code: 0 }
    }

    fn domain_report(report: Report) -> Self {
        CommandOutput { stdout: report.render(), stderr: String::new(), code: 1 }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Domain(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Domain(m) => m,
        }
    }
}

fn read_input(path: &str) -> Result<(String, String), CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?;
    let digest = report::sha256_hex(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Io(format!("{path} is not valid UTF-8")))?;
    Ok((text, digest))
}

fn load_topology(path: &str) -> Result<(NetworkTopology, String), CliError> {
    let (text, digest) = read_input(path)?;
    let topology =
        parse_topology(&text).map_err(|e| CliError::Domain(format!("{path}: {e}")))?;
    let violations = validate(&topology);
    if !violations.is_empty() {
        return Err(CliError::Domain(format!(
            "{path}: invalid topology: {}",
            violations.join("; ")
        )));
    }
    Ok((topology, digest))
}

fn load_scenario(path: &str) -> Result<(Scenario, String), CliError> {
    let (text, digest) = read_input(path)?;
    let scenario = parse_scenario(&text).map_err(|e| CliError::Domain(format!("{path}: {e}")))?;
    Ok((scenario, digest))
}

/// Warnings shared by scenario-driven commands.
fn scenario_warnings(scenario: &Scenario, topology_path: &str) -> Vec<String> {
    let mut warnings = Vec::new();
    if let Some(reference) = &scenario.topology {
        if reference != topology_path {
            warnings.push(format!(
                "scenario references topology {reference:?}; using command-line path {topology_path:?}"
            ));
        }
    }
    if scenario.rates.is_none() {
        warnings.push(
            "rates are illustrative defaults; override via the scenario \"rates\" section"
                .to_string(),
        );
    }
    if let Some(events) = &scenario.events {
        warnings.push(format!(
            "scenario references event stream {events:?}; replay it with the switch subcommand"
        ));
    }
    warnings
}

pub fn cmd_validate(topology_path: &str) -> Result<CommandOutput, CliError> {
    let (text, _digest) = read_input(topology_path)?;
    let topology = match parse_topology(&text) {
        Ok(t) => t,
        Err(e) => {
            return Ok(CommandOutput {
                stdout: String::new(),
                stderr: format!("{e}\n"),
                code: 1,
            })
        }
    };
    let violations = validate(&topology);
    if violations.is_empty() {
        Ok(CommandOutput::ok(String::new()))
    } else {
        let mut stderr = String::new();
        for v in &violations {
            stderr.push_str(v);
            stderr.push('\n');
        }
        Ok(CommandOutput { stdout: String::new(), stderr, code: 1 })
    }
}

/// Rate of one protocol option: min of channel rates for the XOR scheme,
/// t-th fastest channel scaled by the share overhead for secret sharing.
fn option_rate(
    topology: &NetworkTopology,
    rates: &RateConfig,
    protocol: &ProtocolConfig,
    length_bits: usize,
) -> Result<(f64, Vec<ChannelRateRow>), CliError> {
    let channel_rate = |path: &[String]| -> Result<f64, CliError> {
        end_to_end_rate(topology, path, rates)
            .map_err(|e| CliError::Domain(format!("invalid scenario: {e}")))
    };
    match protocol {
        ProtocolConfig::Series { channel } => {
            let rate = channel_rate(&channel.path)?;
            Ok((
                rate,
                vec![ChannelRateRow { channel_id: channel.id.clone(), rate_bits_per_sec: rate }],
            ))
        }
        ProtocolConfig::ParallelXor { channels } => {
            let mut rows = Vec::new();
            let mut min = f64::INFINITY;
            for ch in channels {
                let rate = channel_rate(&ch.path)?;
                min = min.min(rate);
                rows.push(ChannelRateRow {
                    channel_id: ch.id.clone(),
                    rate_bits_per_sec: rate,
                });
            }
            Ok((min, rows))
        }
        ProtocolConfig::ParallelSecretSharing { channels, threshold } => {
            let mut rows = Vec::new();
            let mut live: Vec<f64> = Vec::new();
            for ch in channels {
                let rate = channel_rate(&ch.path)?;
                if rate > 0.0 {
                    live.push(rate);
                }
                rows.push(ChannelRateRow {
                    channel_id: ch.id.clone(),
                    rate_bits_per_sec: rate,
                });
            }
            live.sort_by(|a, b| b.partial_cmp(a).expect("finite rates"));
            let rate = if live.len() >= *threshold && *threshold >= 1 {
                let share_bits = length_bits + 8 * SHARE_WIRE_HEADER_LEN;
                live[threshold - 1] * length_bits as f64 / share_bits as f64
            } else {
                0.0
            };
            Ok((rate, rows))
        }
    }
}

fn default_sweep_templates(rates: &RateConfig) -> (QkdRateParams, KemRateParams) {
    (
        QkdRateParams {
            source_rate_hz: rates.qkd_source_rate_hz,
            protocol_efficiency: rates.qkd_protocol_efficiency,
            loss_db_per_km: 0.2,
            length_km: 0.0,
            protocol_mode: ProtocolMode::Repeaterless,
            cutoff_rate_hz: rates.qkd_cutoff_rate_hz,
        },
        KemRateParams {
            handshakes_per_sec: rates.kem_handshakes_per_sec_limited,
            bits_per_handshake: rates.kem_bits_per_handshake,
            rtt_ms: 0.0,
            bandwidth_bits_per_sec: rates.kem_bandwidth_bits_per_sec,
        },
    )
}

fn sweep_table(
    spec: &SweepSpec,
    qkd_template: &QkdRateParams,
    kem_template: &KemRateParams,
) -> SweepTable {
    let steps = ((spec.to_km - spec.from_km) / spec.step_km + 1e-9).floor() as usize;
    let rows = (0..=steps)
        .map(|i| {
            let length_km = spec.from_km + i as f64 * spec.step_km;
            SweepRow {
                length_km,
                qkd_bits_per_sec: qkd_rate(&QkdRateParams {
                    length_km,
                    ..qkd_template.clone()
                }),
                kem_bits_per_sec: kem_rate(kem_template),
            }
        })
        .collect();
    SweepTable {
        from_km: spec.from_km,
        to_km: spec.to_km,
        step_km: spec.step_km,
        rows,
    }
}

pub fn cmd_rate(
    topology_path: &str,
    scenario_path: &str,
    opts: &GlobalOpts,
) -> Result<CommandOutput, CliError> {
    if opts.format == OutputFormat::Csv && opts.sweep.is_none() {
        return Err(CliError::Usage("--format csv requires --sweep".into()));
    }
    let (topology, topo_digest) = load_topology(topology_path)?;
    let (scenario, scen_digest) = load_scenario(scenario_path)?;
    let rates = scenario.rates.clone().unwrap_or_default();
    let length_bits = scenario.length_bits.unwrap_or(128);

    let per_link: Vec<LinkRateRow> = topology
        .links
        .iter()
        .map(|l| LinkRateRow {
            link_id: l.id.clone(),
            kind: if l.is_qkd() { "qkd".into() } else { "kem".into() },
            rate_bits_per_sec: rates.link_rate(&topology, l),
        })
        .collect();

    let mut named: Vec<(String, ProtocolConfig)> = scenario
        .options
        .iter()
        .map(|o| (o.name.clone(), o.protocol.clone()))
        .collect();
    if named.is_empty() {
        if let Some(protocol) = &scenario.protocol {
            named.push((protocol.name().to_string(), protocol.clone()));
        }
    }
    let mut options = Vec::new();
    for (name, protocol) in &named {
        let (rate, channel_rates) = option_rate(&topology, &rates, protocol, length_bits)?;
        options.push(OptionRateRow {
            name: name.clone(),
            protocol: protocol.name().to_string(),
            rate_bits_per_sec: rate,
            channel_rates,
        });
    }
    let fastest_option = options
        .iter()
        .max_by(|a, b| {
            a.rate_bits_per_sec
                .partial_cmp(&b.rate_bits_per_sec)
                .expect("finite rates")
        })
        .map(|o| o.name.clone());

    let crossover: Vec<CrossoverRow> = scenario
        .crossover
        .iter()
        .map(|CrossoverPair { qkd, kem }| {
            let zero = QkdRateParams { length_km: 0.0, ..qkd.clone() };
            let row = match crossover_distance(qkd, kem) {
                Ok(km) => (Some(km), None),
                Err(NoCrossover::KemDominatesAtZero) => {
                    (None, Some("kem rate meets or beats qkd at zero distance".to_string()))
                }
                Err(NoCrossover::NoneWithinHorizon) => {
                    (None, Some("no crossover within 1e5 km".to_string()))
                }
            };
            CrossoverRow {
                qkd_rate_at_zero_km: qkd_rate(&zero),
                kem_rate_bits_per_sec: kem_rate(kem),
                crossover_km: row.0,
                no_crossover_reason: row.1,
            }
        })
        .collect();

    let sweep = opts.sweep.as_ref().map(|spec| {
        let (qkd_t, kem_t) = scenario
            .crossover
            .first()
            .map(|p| (p.qkd.clone(), p.kem.clone()))
            .unwrap_or_else(|| default_sweep_templates(&rates));
        sweep_table(spec, &qkd_t, &kem_t)
    });

    if opts.format == OutputFormat::Csv {
        let table = sweep.expect("sweep checked above");
        return Ok(CommandOutput::ok(table.to_csv()));
    }

    let mut report = Report::new(
        "rate",
        Inputs {
            topology_sha256: topo_digest,
            scenario_sha256: Some(scen_digest),
            events_sha256: None,
            config_sha256: None,
        },
    );
    report.warnings = scenario_warnings(&scenario, topology_path);
    report.rates = Some(RatesSection { per_link, options, fastest_option, crossover, sweep });
    Ok(CommandOutput::ok(report.render()))
}

pub fn cmd_simulate(
    topology_path: &str,
    scenario_path: &str,
    opts: &GlobalOpts,
) -> Result<CommandOutput, CliError> {
    let (topology, topo_digest) = load_topology(topology_path)?;
    let (scenario, scen_digest) = load_scenario(scenario_path)?;
    let protocol = scenario
        .protocol
        .clone()
        .ok_or_else(|| CliError::Domain("scenario has no protocol to simulate".into()))?;
    let seed = opts.seed.or(scenario.seed).ok_or_else(|| {
        CliError::Domain("a seed is required for protocol runs (scenario \"seed\" or --seed)".into())
    })?;
    let rates = scenario.rates.clone().unwrap_or_default();
    let length_bits = scenario.length_bits.unwrap_or(128);

    let mut report = Report::new(
        "simulate",
        Inputs {
            topology_sha256: topo_digest,
            scenario_sha256: Some(scen_digest),
            events_sha256: None,
            config_sha256: None,
        },
    );
    report.warnings = scenario_warnings(&scenario, topology_path);

    match run_protocol(&topology, &rates, &protocol, length_bits, seed) {
        Ok(result) => {
            report.warnings.extend(result.warnings.iter().cloned());
            report.session =
                Some(report::session_section(&result, protocol.name(), opts.reveal_secrets));
            Ok(CommandOutput::ok(report.render()))
        }
        Err(e) => {
            report.error = Some(e.to_string());
            Ok(CommandOutput::domain_report(report))
        }
    }
}

fn max_leaves_bound() -> Result<usize, CliError> {
    match std::env::var(MAX_LEAVES_ENV) {
        Ok(value) => value.trim().parse().map_err(|_| {
            CliError::Usage(format!("{MAX_LEAVES_ENV} must be an integer, got {value:?}"))
        }),
        Err(_) => Ok(DEFAULT_MAX_LEAVES),
    }
}

pub fn cmd_analyze(
    topology_path: &str,
    scenario_path: &str,
    _opts: &GlobalOpts,
) -> Result<CommandOutput, CliError> {
    let (topology, topo_digest) = load_topology(topology_path)?;
    let (scenario, scen_digest) = load_scenario(scenario_path)?;
    let protocol = scenario
        .protocol
        .clone()
        .ok_or_else(|| CliError::Domain("scenario has no protocol to analyze".into()))?;
    let bound = max_leaves_bound()?;

    let mut report = Report::new(
        "analyze",
        Inputs {
            topology_sha256: topo_digest,
            scenario_sha256: Some(scen_digest),
            events_sha256: None,
            config_sha256: None,
        },
    );
    report.warnings = scenario_warnings(&scenario, topology_path);

    let formula = match derive_access_formula(&topology, &protocol) {
        Ok(f) => f,
        Err(e) => {
            report.error = Some(e.to_string());
            return Ok(CommandOutput::domain_report(report));
        }
    };
    let leaf_count = formula.leaves().len();
    let structures = match minimal_access_structures(&formula, bound) {
        Ok(s) => s,
        Err(e @ AccessError::LeafBoundExceeded { .. }) => {
            report.error = Some(e.to_string());
            return Ok(CommandOutput::domain_report(report));
        }
        Err(e) => {
            report.error = Some(e.to_string());
            return Ok(CommandOutput::domain_report(report));
        }
    };

    let (probability, most_critical) = if scenario.analysis.break_probability {
        match break_probability(&structures, &topology) {
            Ok(b) => (Some(b.probability), b.most_critical),
            Err(e) => {
                report.error = Some(e.to_string());
                return Ok(CommandOutput::domain_report(report));
            }
        }
    } else {
        (None, None)
    };

    let (minimal_sets, criticality) = if scenario.analysis.access_structures {
        let sets: Vec<Vec<String>> = structures
            .minimal_sets
            .iter()
            .map(|s| s.iter().cloned().collect())
            .collect();
        let mut rows: Vec<CriticalityRow> = structures
            .element_criticality
            .iter()
            .map(|(element, count)| CriticalityRow {
                element: element.clone(),
                minimal_set_count: *count,
            })
            .collect();
        rows.sort_by(|a, b| {
            b.minimal_set_count
                .cmp(&a.minimal_set_count)
                .then_with(|| a.element.cmp(&b.element))
        });
        (Some(sets), Some(rows))
    } else {
        (None, None)
    };

    report.access = Some(AccessSection {
        protocol: protocol.name().to_string(),
        leaf_count,
        minimal_sets,
        criticality,
        break_probability: probability,
        most_critical,
    });
    Ok(CommandOutput::ok(report.render()))
}

fn parse_events(text: &str, path: &str) -> Result<Vec<ThreatEvent>, CliError> {
    let mut events = Vec::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let event: ThreatEvent = serde_json::from_str(line).map_err(|e| {
            CliError::Domain(format!("{path}:{}: invalid event: {e}", number + 1))
        })?;
        events.push(event);
    }
    Ok(events)
}

pub fn cmd_switch(
    topology_path: &str,
    events_path: &str,
    config_path: &str,
) -> Result<CommandOutput, CliError> {
    let (topology, topo_digest) = load_topology(topology_path)?;
    let (events_text, events_digest) = read_input(events_path)?;
    let events = parse_events(&events_text, events_path)?;
    let (config_text, config_digest) = read_input(config_path)?;
    let config: SwitchConfig = serde_json::from_str(&config_text)
        .map_err(|e| CliError::Domain(format!("{config_path}: invalid switch config: {e}")))?;

    let mut report = Report::new(
        "switch",
        Inputs {
            topology_sha256: topo_digest,
            scenario_sha256: None,
            events_sha256: Some(events_digest),
            config_sha256: Some(config_digest),
        },
    );

    match replay(&events, &topology, &config) {
        Ok(state) => {
            report.switch = Some(SwitchSection {
                events_applied: events.len(),
                transitions: state
                    .history
                    .iter()
                    .map(|t| TransitionRow {
                        link_id: t.link_id.clone(),
                        from: t.from.clone(),
                        to: t.to.clone(),
                        reason: t.reason.clone(),
                        model_time: t.model_time,
                    })
                    .collect(),
                final_risks: state.risk.clone(),
                link_states: state.link_states(),
            });
            Ok(CommandOutput::ok(report.render()))
        }
        Err(e @ SwitchError::UnsortedEvents(_)) => {
            report.error = Some(e.to_string());
            Ok(CommandOutput::domain_report(report))
        }
        Err(e) => {
            report.error = Some(e.to_string());
            Ok(CommandOutput::domain_report(report))
        }
    }
}

/// Parse "--sweep FROM..TO:STEP".
pub fn parse_sweep(text: &str) -> Result<SweepSpec, String> {
    let (range, step) = text
        .rsplit_once(':')
        .ok_or_else(|| format!("sweep must look like 0..200:10, got {text:?}"))?;
    let (from, to) = range
        .split_once("..")
        .ok_or_else(|| format!("sweep must look like 0..200:10, got {text:?}"))?;
    let from_km: f64 = from.parse().map_err(|_| format!("bad sweep start {from:?}"))?;
    let to_km: f64 = to.parse().map_err(|_| format!("bad sweep end {to:?}"))?;
    let step_km: f64 = step.parse().map_err(|_| format!("bad sweep step {step:?}"))?;
    let finite = from_km.is_finite() && to_km.is_finite() && step_km.is_finite();
    if !finite || step_km <= 0.0 || to_km < from_km || from_km < 0.0 {
        return Err(format!("sweep range {text:?} is empty or negative"));
    }
    Ok(SweepSpec { from_km, to_km, step_km })
}
