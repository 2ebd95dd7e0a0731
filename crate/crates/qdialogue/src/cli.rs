//! Command-line front end: experiment execution, oracle reports, attack
//! demonstrations, and basis-table printing.
//!
//! Configuration comes from defaults, then an optional flat `key = value`
//! config file with `[sections]`, then command-line flags; later sources win.
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 internal
//! invariant violation.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::adversary::{EveStrategy, InterceptScope, ProbeTarget};
use crate::error::{Error, Result};
use crate::ghz_codec::{allowed_outcomes, ghz_family, QuadCode};
use crate::harness::{
    exact_oracle, run_experiment, ExperimentConfig, MessageSource, OracleReport, Stats,
};
use crate::protocol::{Mode, Protocol, RoundRecord, Verdict};
use crate::qstate::Axis;

#[derive(Debug, Parser)]
#[command(
    name = "qdialogue",
    about = "Simulator for entanglement-based quantum dialogue protocols \
             with pluggable eavesdroppers and an exact oracle"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte-Carlo experiment and print aggregate statistics
    Simulate(SimulateArgs),
    /// Print exact reference probabilities for a (protocol, strategy) scenario
    Oracle(OracleArgs),
    /// Run a small annotated scenario, one narrative line per round
    AttackDemo(AttackDemoArgs),
    /// Print the eight GHZ basis members and their outcome tables
    Bases(BasesArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct StrategyFlags {
    /// Eavesdropper strategy: none | intercept-resend[:scope] |
    /// entangle-measure[:target[:basis]]
    #[arg(long)]
    pub eve: Option<String>,
    /// Interception scope for intercept-resend: both | t-only | p-only
    #[arg(long)]
    pub scope: Option<String>,
    /// Probe target for entangle-measure: t | p | both
    #[arg(long)]
    pub probe_target: Option<String>,
    /// Probe basis for entangle-measure: z | x
    #[arg(long)]
    pub probe_basis: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Protocol to run: baseline | revised
    #[arg(long)]
    pub protocol: Option<String>,
    #[command(flatten)]
    pub strategy: StrategyFlags,
    /// Number of rounds
    #[arg(long)]
    pub rounds: Option<u64>,
    /// Probability that a round is a control-mode check
    #[arg(long)]
    pub cm_probability: Option<f64>,
    /// Fraction of message rounds sacrificed to the full-reveal check
    #[arg(long)]
    pub s7_fraction: Option<f64>,
    /// Experiment seed; identical seeds give byte-identical transcripts
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config file (flat key = value with [sections]); flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the transcript (one JSON record per round) to this path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format for statistics: lines | table
    #[arg(long)]
    pub format: Option<String>,
    /// Print the effective configuration to stderr
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Protocol: baseline | revised
    pub protocol: String,
    /// Strategy spec, e.g. none, intercept-resend:both, entangle-measure:p:z
    pub strategy: String,
    /// Output format: lines | table
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct AttackDemoArgs {
    /// Protocol to demonstrate: baseline | revised
    #[arg(long, default_value = "revised")]
    pub protocol: String,
    #[command(flatten)]
    pub strategy: StrategyFlags,
    /// Number of rounds to narrate
    #[arg(long, default_value_t = 20)]
    pub rounds: u64,
    /// Probability that a round is a control-mode check
    #[arg(long, default_value_t = 0.5)]
    pub cm_probability: f64,
    /// Fraction of message rounds sacrificed to the full-reveal check
    #[arg(long, default_value_t = 0.25)]
    pub s7_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BasesArgs {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Lines,
    Table,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lines" => Ok(OutputFormat::Lines),
            "table" => Ok(OutputFormat::Table),
            other => Err(Error::Config(format!(
                "unknown format '{other}' (expected lines|table)"
            ))),
        }
    }
}

/// Fully resolved configuration for a simulate run.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub experiment: ExperimentConfig,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub verbosity: u8,
}

// -- config file ------------------------------------------------------------

fn parse_config_text(text: &str) -> Result<Vec<(String, String, String)>> {
    let mut section = String::from("experiment");
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            });
        };
        entries.push((
            section.clone(),
            key.trim().to_string(),
            value.trim().to_string(),
        ));
    }
    Ok(entries)
}

fn parse_bitstring(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Config(format!(
                "bitstring may contain only 0 and 1, found '{other}'"
            ))),
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for key '{key}'")))
}

#[derive(Debug, Default, Clone)]
struct StrategyParts {
    kind: Option<String>,
    scope: Option<InterceptScope>,
    target: Option<ProbeTarget>,
    basis: Option<Axis>,
}

impl StrategyParts {
    fn apply_spec(&mut self, spec: &str) -> Result<()> {
        // validate the whole spec, then remember its explicit components
        EveStrategy::parse(spec)?;
        let mut parts = spec.split(':');
        self.kind = Some(parts.next().unwrap_or("none").to_string());
        match self.kind.as_deref() {
            Some("intercept-resend") => {
                if let Some(q) = parts.next() {
                    self.scope = Some(q.parse()?);
                }
            }
            Some("entangle-measure") => {
                if let Some(q) = parts.next() {
                    self.target = Some(q.parse()?);
                }
                if let Some(q) = parts.next() {
                    self.basis = Some(parse_axis(q)?);
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn build(&self) -> Result<EveStrategy> {
        let kind = self.kind.as_deref().unwrap_or("none");
        match kind {
            "none" => {
                if self.scope.is_some() || self.target.is_some() || self.basis.is_some() {
                    return Err(Error::Config(
                        "scope/probe options require an eavesdropper strategy".into(),
                    ));
                }
                Ok(EveStrategy::None)
            }
            "intercept-resend" => {
                if self.target.is_some() || self.basis.is_some() {
                    return Err(Error::Config(
                        "probe_target/probe_basis only apply to entangle-measure".into(),
                    ));
                }
                Ok(EveStrategy::InterceptResend {
                    scope: self.scope.unwrap_or(InterceptScope::BothChannels),
                })
            }
            "entangle-measure" => {
                if self.scope.is_some() {
                    return Err(Error::Config(
                        "scope only applies to intercept-resend".into(),
                    ));
                }
                Ok(EveStrategy::EntangleMeasure {
                    target: self.target.unwrap_or(ProbeTarget::T),
                    basis: self.basis.unwrap_or(Axis::Z),
                })
            }
            other => Err(Error::Config(format!(
                "unknown eavesdropper strategy '{other}'"
            ))),
        }
    }
}

fn parse_axis(s: &str) -> Result<Axis> {
    match s {
        "z" | "Z" => Ok(Axis::Z),
        "x" | "X" => Ok(Axis::X),
        other => Err(Error::Config(format!(
            "unknown basis '{other}' (expected z|x)"
        ))),
    }
}

/// Resolves the simulate configuration: defaults, then config file, then flags.
pub fn resolve_config(args: &SimulateArgs) -> Result<CliConfig> {
    let mut experiment = ExperimentConfig::default();
    let mut strategy = StrategyParts::default();
    let mut output_path = None;
    let mut output_format = OutputFormat::Lines;
    let mut message_source = String::from("random");
    let mut alice_bits = None;
    let mut bob_bits = None;

    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        for (section, key, value) in parse_config_text(&text)? {
            match (section.as_str(), key.as_str()) {
                ("experiment", "protocol") => experiment.protocol = value.parse()?,
                ("experiment", "rounds") => experiment.rounds = parse_num(&key, &value)?,
                ("experiment", "cm_probability") => {
                    experiment.cm_probability = parse_num(&key, &value)?
                }
                ("experiment", "s7_reveal_fraction") => {
                    experiment.s7_reveal_fraction = parse_num(&key, &value)?
                }
                ("experiment", "seed") => experiment.seed = parse_num(&key, &value)?,
                ("experiment", "message_source") => message_source = value,
                ("experiment", "alice_bits") => alice_bits = Some(parse_bitstring(&value)?),
                ("experiment", "bob_bits") => bob_bits = Some(parse_bitstring(&value)?),
                ("eve", "kind") => strategy.apply_spec(&value)?,
                ("eve", "scope") => strategy.scope = Some(value.parse()?),
                ("eve", "probe_target") => strategy.target = Some(value.parse()?),
                ("eve", "probe_basis") => strategy.basis = Some(parse_axis(&value)?),
                ("output", "path") => output_path = Some(PathBuf::from(value)),
                ("output", "format") => output_format = value.parse()?,
                (section, key) => {
                    return Err(Error::Config(format!(
                        "unknown config key '{key}' in section [{section}]"
                    )))
                }
            }
        }
    }

    // flags override file values
    if let Some(p) = &args.protocol {
        experiment.protocol = p.parse()?;
    }
    if let Some(spec) = &args.strategy.eve {
        strategy.apply_spec(spec)?;
    }
    if let Some(s) = &args.strategy.scope {
        strategy.scope = Some(s.parse()?);
    }
    if let Some(t) = &args.strategy.probe_target {
        strategy.target = Some(t.parse()?);
    }
    if let Some(b) = &args.strategy.probe_basis {
        strategy.basis = Some(parse_axis(b)?);
    }
    if let Some(r) = args.rounds {
        experiment.rounds = r;
    }
    if let Some(c) = args.cm_probability {
        experiment.cm_probability = c;
    }
    if let Some(s) = args.s7_fraction {
        experiment.s7_reveal_fraction = s;
    }
    if let Some(s) = args.seed {
        experiment.seed = s;
    }
    if let Some(o) = &args.out {
        output_path = Some(o.clone());
    }
    if let Some(f) = &args.format {
        output_format = f.parse()?;
    }

    experiment.strategy = strategy.build()?;
    experiment.message_source = match message_source.as_str() {
        "random" => MessageSource::Random,
        "explicit" => {
            let (Some(alice_bits), Some(bob_bits)) = (alice_bits, bob_bits) else {
                return Err(Error::Config(
                    "message_source = explicit needs alice_bits and bob_bits".into(),
                ));
            };
            MessageSource::Explicit {
                alice_bits,
                bob_bits,
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown message_source '{other}' (expected random|explicit)"
            )))
        }
    };
    experiment.validate()?;

    Ok(CliConfig {
        experiment,
        output_path,
        output_format,
        verbosity: args.verbose,
    })
}

// -- output helpers ----------------------------------------------------------

fn stats_table(stats: &Stats) -> String {
    let mut out = String::from("metric\tcount\ttotal\tratio\n");
    let mut row = |name: &str, c: crate::harness::Counter| {
        out.push_str(&format!(
            "{name}\t{}\t{}\t{:.6}\n",
            c.count, c.total, c.ratio
        ));
    };
    row("cm_rounds", stats.cm_rounds);
    row("cm_pass_rate", stats.cm_pass_rate);
    row("s7_checks", stats.s7_checks);
    row("s7_pass_rate", stats.s7_pass_rate);
    row("checking_bits_pass_rate", stats.checking_bits_pass_rate);
    row("alice_decode_error_rate", stats.alice_decode_error_rate);
    row("bob_decode_error_rate", stats.bob_decode_error_rate);
    row("eve_alice_accuracy", stats.eve_alice_accuracy);
    row("eve_alice_block_accuracy", stats.eve_alice_block_accuracy);
    row("eve_bob_accuracy", stats.eve_bob_accuracy);
    row("eve_bob_block_accuracy", stats.eve_bob_block_accuracy);
    row("detection_overall", stats.detection_overall);
    out.push_str(&format!(
        "rounds_total\t{}\t{}\t1.000000\n",
        stats.rounds_total, stats.rounds_total
    ));
    out.push_str(&format!(
        "mm_rounds\t{}\t{}\t{:.6}\n",
        stats.mm_rounds,
        stats.rounds_total,
        if stats.rounds_total == 0 {
            0.0
        } else {
            stats.mm_rounds as f64 / stats.rounds_total as f64
        }
    ));
    out.push_str(&format!(
        "post_abort_rounds\t{}\t{}\t{:.6}\n",
        stats.post_abort_rounds,
        stats.rounds_total,
        if stats.rounds_total == 0 {
            0.0
        } else {
            stats.post_abort_rounds as f64 / stats.rounds_total as f64
        }
    ));
    out
}

fn oracle_table(report: &OracleReport) -> String {
    let mut out = String::from("key\tvalue\n");
    out.push_str(&format!("protocol\t{}\n", report.protocol));
    out.push_str(&format!("strategy\t{}\n", report.strategy));
    for e in &report.cm_entries {
        out.push_str(&format!(
            "cm_pass[{}][{}]\t{:.6}\n",
            e.basis, e.encoding, e.pass_probability
        ));
    }
    let mut opt = |name: &str, v: Option<f64>| {
        if let Some(v) = v {
            out.push_str(&format!("{name}\t{v:.6}\n"));
        }
    };
    opt("cm_pass_z", report.cm_pass_z);
    opt("cm_pass_x", report.cm_pass_x);
    out.push_str(&format!("cm_pass_average\t{:.6}\n", report.cm_pass_average));
    out.push_str(&format!(
        "cm_detection_average\t{:.6}\n",
        report.cm_detection_average
    ));
    if let Some(v) = report.s7_pass_probability {
        out.push_str(&format!("s7_pass_probability\t{v:.6}\n"));
    }
    if let Some(v) = report.checking_bits_pass_probability {
        out.push_str(&format!("checking_bits_pass_probability\t{v:.6}\n"));
    }
    out.push_str(&format!(
        "decode_error_probability\t{:.6}\n",
        report.decode_error_probability
    ));
    out.push_str(&format!(
        "eve_alice_quad_accuracy\t{:.6}\n",
        report.eve_alice_quad_accuracy
    ));
    out.push_str(&format!(
        "eve_alice_block_accuracy\t{:.6}\n",
        report.eve_alice_block_accuracy
    ));
    out.push_str(&format!(
        "eve_bob_quad_accuracy\t{:.6}\n",
        report.eve_bob_quad_accuracy
    ));
    out.push_str(&format!(
        "eve_bob_block_accuracy\t{:.6}\n",
        report.eve_bob_block_accuracy
    ));
    out
}

fn quad_str(bits: [u8; 4]) -> String {
    format!("({},{},{},{})", bits[0], bits[1], bits[2], bits[3])
}

fn outcome_char(basis: Axis, bit: u8) -> char {
    match (basis, bit) {
        (Axis::Z, b) => char::from(b'0' + b),
        (Axis::X, 0) => '+',
        (Axis::X, _) => '-',
    }
}

fn demo_line(r: &RoundRecord) -> String {
    let mut line = format!("round {:03} {} ", r.round, r.mode);
    match r.mode {
        Mode::Control => {
            if r.protocol == Protocol::Baseline {
                let alice = r.alice_quad.unwrap_or_default();
                let bell = r.bell_result.unwrap_or_default();
                line.push_str(&format!(
                    "alice reveals ({},{}) bell=({},{})",
                    alice[0], alice[1], bell[0], bell[1]
                ));
            } else if let (Some(basis), Some(o)) = (r.cm_basis, r.cm_outcomes) {
                line.push_str(&format!(
                    "basis={} alice=({},{}) bob_h={}",
                    basis,
                    outcome_char(basis, o.t),
                    outcome_char(basis, o.p),
                    outcome_char(basis, o.h),
                ));
            }
            match r.verdicts.cm_pass {
                Verdict::Pass => line.push_str(" verdict=PASS"),
                Verdict::Fail => line.push_str(" verdict=DETECTED"),
                Verdict::NotRun => {}
            }
        }
        Mode::Message => {
            line.push_str(&format!("bob={}", quad_str(r.bob_quad)));
            if let Some(a) = r.alice_quad {
                line.push_str(&format!(" alice={}", quad_str(a)));
            }
            if let Some(g) = r.ghz_result {
                line.push_str(&format!(" result={}", quad_str(g)));
            }
            if let Some(b) = r.bell_result {
                line.push_str(&format!(" bell=({},{})", b[0], b[1]));
            }
            if let (Some(ga), Some(a)) = (r.eve_alice_guess, r.alice_quad) {
                let hit = if ga == a { "hit" } else { "miss" };
                line.push_str(&format!(" eve_alice={}[{hit}]", quad_str(ga)));
            }
            if let Some(gb) = r.eve_bob_guess {
                let hit = if gb == r.bob_quad { "hit" } else { "miss" };
                line.push_str(&format!(" eve_bob={}[{hit}]", quad_str(gb)));
            }
            if r.verdicts.s7_pass == Verdict::Fail {
                line.push_str(" s7=DETECTED");
            } else if r.verdicts.s7_pass == Verdict::Pass {
                line.push_str(" s7=pass");
            }
            if r.verdicts.checking_bits_pass == Verdict::Fail {
                line.push_str(" check_bits=DETECTED");
            }
        }
    }
    if r.post_abort {
        line.push_str(" (post-abort)");
    }
    line
}

// -- subcommands -------------------------------------------------------------

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = resolve_config(args)?;
    if cfg.verbosity > 0 {
        eprintln!(
            "protocol={} strategy={} rounds={} cm_probability={} \
             s7_reveal_fraction={} seed={}",
            cfg.experiment.protocol,
            cfg.experiment.strategy,
            cfg.experiment.rounds,
            cfg.experiment.cm_probability,
            cfg.experiment.s7_reveal_fraction,
            cfg.experiment.seed
        );
    }
    let run = run_experiment(&cfg.experiment)?;
    if let Some(path) = &cfg.output_path {
        let mut file = std::fs::File::create(path)?;
        file.write_all(run.transcript().as_bytes())?;
    }
    match cfg.output_format {
        OutputFormat::Lines => println!(
            "{}",
            serde_json::to_string_pretty(&run.stats)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
        ),
        OutputFormat::Table => print!("{}", stats_table(&run.stats)),
    }
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let protocol: Protocol = args.protocol.parse()?;
    let strategy = EveStrategy::parse(&args.strategy)?;
    let report = exact_oracle(protocol, &strategy)?;
    let format = match &args.format {
        Some(f) => f.parse()?,
        None => OutputFormat::Lines,
    };
    match format {
        OutputFormat::Lines => println!(
            "{}",
            serde_json::to_string_pretty(&report)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
        ),
        OutputFormat::Table => print!("{}", oracle_table(&report)),
    }
    Ok(())
}

fn cmd_attack_demo(args: &AttackDemoArgs) -> Result<()> {
    let protocol: Protocol = args.protocol.parse()?;
    let mut parts = StrategyParts::default();
    if let Some(spec) = &args.strategy.eve {
        parts.apply_spec(spec)?;
    }
    if let Some(s) = &args.strategy.scope {
        parts.scope = Some(s.parse()?);
    }
    if let Some(t) = &args.strategy.probe_target {
        parts.target = Some(t.parse()?);
    }
    if let Some(b) = &args.strategy.probe_basis {
        parts.basis = Some(parse_axis(b)?);
    }
    let strategy = parts.build()?;
    let cfg = ExperimentConfig {
        protocol,
        strategy,
        rounds: args.rounds,
        cm_probability: args.cm_probability,
        s7_reveal_fraction: args.s7_fraction,
        seed: args.seed,
        message_source: MessageSource::Random,
    };
    let run = run_experiment(&cfg)?;
    println!("protocol={protocol} strategy={strategy} rounds={}", args.rounds);
    for r in &run.records {
        println!("{}", demo_line(r));
    }
    let s = &run.stats;
    println!(
        "summary: cm_pass {}/{} s7_pass {}/{} detection {}/{} eve_alice {}/{} eve_bob {}/{}",
        s.cm_pass_rate.count,
        s.cm_pass_rate.total,
        s.s7_pass_rate.count,
        s.s7_pass_rate.total,
        s.detection_overall.count,
        s.detection_overall.total,
        s.eve_alice_accuracy.count,
        s.eve_alice_accuracy.total,
        s.eve_bob_accuracy.count,
        s.eve_bob_accuracy.total,
    );
    Ok(())
}

fn format_member(state: &crate::qstate::StateVector) -> String {
    let mut terms = Vec::new();
    for (i, a) in state.amplitudes().iter().enumerate() {
        if a.norm() < 1e-12 {
            continue;
        }
        let ket = format!("{:03b}", i);
        if a.im.abs() < 1e-12 {
            terms.push(format!("{:+.7}|{ket}>", a.re));
        } else {
            terms.push(format!("({:+.7}{:+.7}i)|{ket}>", a.re, a.im));
        }
    }
    terms.join(" ")
}

fn cmd_bases(_args: &BasesArgs) -> Result<()> {
    println!("GHZ basis members, register order (h,t,p):");
    for code in QuadCode::all_admissible() {
        let member = ghz_family().member(code)?;
        println!("{code}  {}", format_member(member));
    }
    for (basis, label) in [(Axis::Z, "Z"), (Axis::X, "X")] {
        println!();
        println!("allowed (h,t,p) outcomes, {label} basis:");
        for code in QuadCode::all_admissible() {
            let outcomes = allowed_outcomes(code, basis)?;
            let cells: Vec<String> = outcomes
                .iter()
                .map(|(h, t, p)| {
                    format!(
                        "{}{}{}",
                        outcome_char(basis, *h),
                        outcome_char(basis, *t),
                        outcome_char(basis, *p)
                    )
                })
                .collect();
            println!("{code}  {}", cells.join(" "));
        }
    }
    Ok(())
}

/// Runs a parsed command; the binary maps errors onto exit codes.
pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::AttackDemo(args) => cmd_attack_demo(args),
        Command::Bases(args) => cmd_bases(args),
    }
}

/// Exit code for a failed run: 2 configuration, 3 I/O, 4 internal.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidCode(_)
        | Error::Parse { .. } => 2,
        Error::Io(_) => 3,
        Error::IncompleteFamily(_)
        | Error::ModeViolation(_)
        | Error::PossessionViolation(_) => 4,
    }
}
