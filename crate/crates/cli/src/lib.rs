//! Command implementations behind the `bqsdc` binary.
//!
//! Every command renders into a byte buffer first, so output is identical
//! whether it goes to stdout or a file, and tests can call [`execute`]
//! without spawning a process.

use std::fmt::Write as _;
use std::path::PathBuf;

use bqsdc::adversary::{
    estimate_detection, AttackConfig, BasisPolicy, CheckTemplate, DecoyPolicy, Strategy,
    Transmission,
};
use bqsdc::analysis::{analysis_report, monte_carlo_leakage, AnalysisReport, MonteCarloLeakage};
use bqsdc::codebook::{format_message_bits, parse_message_bits, verify_table1, GhzLabel, Table1Report};
use bqsdc::protocol::{random_messages, run_session, DecoyCounts, SessionConfig, SessionTranscript};
use bqsdc::swap::{verify_table2, Table2Report};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

pub const TOOL: &str = "bqsdc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or inputs; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that failed while running; exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "bqsdc", version, about = "Bidirectional GHZ-swapping QSDC simulator")]
pub struct Cli {
    /// Master seed; drawn from system entropy and recorded in the output when absent.
    #[arg(long, global = true, env = "BQSDC_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rebuild both codebook tables from state vectors and compare them with the printed ones.
    Verify(VerifyArgs),
    /// Run one full session.
    Run(RunArgs),
    /// Estimate the detection probability of an attack.
    Attack(AttackArgs),
    /// Entropy, leakage, efficiency and comparison figures.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Shorthand for --format.
    #[arg(long, value_enum)]
    pub emit: Option<Format>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Number of groups (two GHZ triples each).
    #[arg(long = "N", short = 'N', visible_alias = "groups")]
    pub groups: usize,
    /// Alice's message bits, 3 per group.
    #[arg(long, requires = "bob", conflicts_with = "random_messages")]
    pub alice: Option<String>,
    /// Bob's message bits, 3 per group.
    #[arg(long, requires = "alice")]
    pub bob: Option<String>,
    #[arg(long)]
    pub random_messages: bool,
    /// Force every group's initial state, e.g. psi0.
    #[arg(long)]
    pub initial: Option<GhzLabel>,
    /// Decoys per check (defaults to 16, or N when N > 16).
    #[arg(long)]
    pub decoys: Option<usize>,
    #[arg(long)]
    pub decoys_step1: Option<usize>,
    #[arg(long)]
    pub decoys_step3: Option<usize>,
    #[arg(long)]
    pub decoys_step5: Option<usize>,
    /// Attack one transmission, e.g. `intercept:S_C`, `measure-resend:X@S_B`,
    /// `entangle:0.25@S_A`.
    #[arg(long)]
    pub attack: Option<String>,
    /// Largest tolerated error rate per check.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// `none`, `intercept[:FAKE]`, `measure-resend[:Z|X|uniform]` or `entangle[:BETA2]`.
    #[arg(long)]
    pub strategy: String,
    #[arg(long, default_value = "S_C")]
    pub target: Transmission,
    /// Flip probability for `entangle`.
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// GHZ sample state for S_C checks.
    #[arg(long, default_value = "psi0")]
    pub sample: GhzLabel,
    /// Bob's basis for S_C checks (default: Z for entangle, else uniform).
    #[arg(long)]
    pub check_basis: Option<BasisPolicy>,
    /// Decoy states for S_B / S_A checks: Z, X, bb84 or a single state
    /// (default: Z for entangle, else bb84).
    #[arg(long)]
    pub decoys: Option<DecoyPolicy>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Also cross-check the leakage enumeration with a session of this many groups.
    #[arg(long)]
    pub mc_groups: Option<usize>,
}

/// Rendered output of one command.
#[derive(Debug)]
pub struct Outcome {
    pub bytes: Vec<u8>,
    /// Short human summary, printed separately from the report.
    pub summary: String,
    pub exit_code: i32,
    pub format: Format,
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    seed: Option<u64>,
    config: C,
    result: R,
}

fn json<C: Serialize, R: Serialize>(command: &str, seed: Option<u64>, config: C, result: R) -> Result<Vec<u8>, CliError> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        seed,
        config,
        result,
    };
    let mut v = serde_json::to_vec_pretty(&env).map_err(runtime)?;
    v.push(b'\n');
    Ok(v)
}

fn csv_header(command: &str, seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("# {TOOL} {VERSION} command={command} seed={s}\n"),
        None => format!("# {TOOL} {VERSION} command={command}\n"),
    }
}

fn csv_rows<T: Serialize>(header: String, rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(header.into_bytes());
    for r in rows {
        w.serialize(r).map_err(runtime)?;
    }
    w.into_inner().map_err(runtime)
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Verify(a) => cmd_verify(a.emit.unwrap_or(cli.format)),
        Command::Run(a) => cmd_run(a, resolve_seed(cli.seed), cli.format),
        Command::Attack(a) => cmd_attack(a, resolve_seed(cli.seed), cli.format),
        Command::Analyze(a) => cmd_analyze(a, cli.seed, cli.format),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

#[derive(Serialize)]
struct VerifySummary {
    table1_matched: usize,
    table1_total: usize,
    table1_phases_are_signs: bool,
    table2_matched: usize,
    table2_total: usize,
    collection_sets_matched: usize,
    checks_passed: usize,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyResult {
    summary: VerifySummary,
    table1: Table1Report,
    table2: Table2Report,
}

#[derive(Serialize)]
struct Table2Row {
    g1: String,
    g2: String,
    printed: String,
    derived: String,
    support_size: usize,
    support_matches_printed: bool,
    max_prob_deviation: f64,
}

pub fn cmd_verify(format: Format) -> Result<Outcome, CliError> {
    let t1 = verify_table1();
    let t2 = verify_table2();
    let summary = VerifySummary {
        table1_matched: t1.matched,
        table1_total: t1.entries.len(),
        table1_phases_are_signs: t1.entries.iter().all(|e| (e.phase.abs() - 1.0).abs() < 1e-9),
        table2_matched: t2.matched,
        table2_total: t2.entries.len(),
        collection_sets_matched: t2.printed_sets_matched,
        checks_passed: t1.matched + t2.matched,
        passed: t1.passed() && t2.passed(),
    };
    let text = format!(
        "Table 1: {}/{} entries match (phases ±1: {})\nTable 2: {}/{} entries match\ncollections: {}/8 member sets match\ntotal: {}/128 checks passed\n",
        summary.table1_matched,
        summary.table1_total,
        summary.table1_phases_are_signs,
        summary.table2_matched,
        summary.table2_total,
        summary.collection_sets_matched,
        summary.checks_passed,
    );
    let exit_code = if summary.passed { 0 } else { 1 };
    let bytes = match format {
        Format::Json => json("verify", None, (), VerifyResult { summary, table1: t1, table2: t2 })?,
        Format::Text => text.clone().into_bytes(),
        Format::Csv => csv_rows(
            csv_header("verify", None),
            t2.entries.iter().map(|e| Table2Row {
                g1: e.g1.to_string(),
                g2: e.g2.to_string(),
                printed: e.expected.to_string(),
                derived: e.got.map_or("-".into(), |g| g.to_string()),
                support_size: e.support.len(),
                support_matches_printed: e.support_matches_printed,
                max_prob_deviation: e.max_prob_deviation,
            }),
        )?,
    };
    Ok(Outcome {
        bytes,
        summary: text,
        exit_code,
        format,
    })
}

/// Parses `STRATEGY@TARGET`, or `STRATEGY:TARGET` when the last field names
/// a transmission.
pub fn parse_attack_spec(s: &str) -> Result<AttackConfig, CliError> {
    let (strategy, target) = if let Some((st, t)) = s.rsplit_once('@') {
        (st, t.parse::<Transmission>().map_err(usage)?)
    } else if let Some((st, t)) = s.rsplit_once(':').and_then(|(st, t)| Some((st, t.parse().ok()?))) {
        (st, t)
    } else {
        return Err(usage(format!("attack `{s}` names no target transmission (e.g. intercept:S_C)")));
    };
    let strategy: Strategy = strategy.parse().map_err(usage)?;
    AttackConfig::new(target, strategy).map_err(usage)
}

#[derive(Serialize)]
struct GroupRow {
    n: usize,
    prepared_label: String,
    a_op: String,
    p_label: String,
    b_op: String,
    bell_triple: String,
    announcement: String,
    decoded_by_alice: String,
    decoded_by_bob: String,
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or(String::new(), |x| x.to_string())
}

pub fn cmd_run(a: &RunArgs, seed: u64, format: Format) -> Result<Outcome, CliError> {
    let mut decoys = a.decoys.map_or(DecoyCounts::default_for(a.groups), DecoyCounts::uniform);
    decoys.step1 = a.decoys_step1.unwrap_or(decoys.step1);
    decoys.step3 = a.decoys_step3.unwrap_or(decoys.step3);
    decoys.step5 = a.decoys_step5.unwrap_or(decoys.step5);
    let cfg = SessionConfig {
        decoys,
        attack: a.attack.as_deref().map(parse_attack_spec).transpose()?,
        check_threshold: a.threshold,
        initial: a.initial,
        ..SessionConfig::new(a.groups, seed)
    };
    cfg.validate().map_err(usage)?;
    let (alice, bob) = match (&a.alice, &a.bob) {
        (Some(x), Some(y)) => (
            parse_message_bits(x).map_err(usage)?,
            parse_message_bits(y).map_err(usage)?,
        ),
        _ if a.random_messages => (random_messages(a.groups, seed, 0), random_messages(a.groups, seed, 1)),
        _ => return Err(usage("supply --alice and --bob, or --random-messages")),
    };
    let t = run_session(&cfg, &alice, &bob).map_err(usage)?;

    let mut summary = String::new();
    for c in &t.checks {
        let _ = writeln!(
            summary,
            "check at step {}: {}/{} errors (rate {:.4}){}",
            c.step,
            c.errors,
            c.samples,
            c.error_rate,
            if c.aborted { " -> abort" } else { "" }
        );
    }
    let mut exit_code = 0;
    if let Some(ab) = &t.abort {
        let _ = writeln!(summary, "session aborted at step {}", ab.step);
    } else {
        let to_alice = t.bits_decoded_by_alice().unwrap_or_default();
        let to_bob = t.bits_decoded_by_bob().unwrap_or_default();
        let _ = writeln!(summary, "Alice decoded: {to_alice}\nBob decoded:   {to_bob}");
        if to_alice != format_message_bits(&bob) || to_bob != format_message_bits(&alice) {
            let _ = writeln!(summary, "decoded messages differ from those sent");
            exit_code = 1;
        }
    }

    #[derive(Serialize)]
    struct RunConfig<'a> {
        alice: String,
        bob: String,
        session: &'a SessionConfig,
    }
    let bytes = match format {
        Format::Json => json(
            "run",
            Some(seed),
            RunConfig {
                alice: format_message_bits(&alice),
                bob: format_message_bits(&bob),
                session: &cfg,
            },
            &t,
        )?,
        Format::Text => render_transcript_text(&t, seed, &summary).into_bytes(),
        Format::Csv => csv_rows(
            csv_header("run", Some(seed)),
            t.groups.iter().map(|g| GroupRow {
                n: g.n,
                prepared_label: g.prepared_label.to_string(),
                a_op: opt(g.a_op),
                p_label: opt(g.p_label),
                b_op: opt(g.b_op),
                bell_triple: opt(g.bell_triple),
                announcement: opt(g.announcement),
                decoded_by_alice: opt(g.decoded_by_alice),
                decoded_by_bob: opt(g.decoded_by_bob),
            }),
        )?,
    };
    Ok(Outcome {
        bytes,
        summary,
        exit_code,
        format,
    })
}

fn render_transcript_text(t: &SessionTranscript, seed: u64, summary: &str) -> String {
    let mut s = format!("{TOOL} {VERSION} run seed={seed} groups={}\n", t.groups.len());
    let _ = writeln!(s, "{:>4}  {:<5} {:<3} {:<5} {:<3} {:<16} {:<3} {:<5} {:<5}", "n", "init", "a", "p", "b", "bell", "m", "->A", "->B");
    for g in &t.groups {
        let _ = writeln!(
            s,
            "{:>4}  {:<5} {:<3} {:<5} {:<3} {:<16} {:<3} {:<5} {:<5}",
            g.n,
            g.prepared_label.to_string(),
            opt(g.a_op),
            opt(g.p_label),
            opt(g.b_op),
            opt(g.bell_triple),
            opt(g.announcement),
            opt(g.decoded_by_alice),
            opt(g.decoded_by_bob),
        );
    }
    s.push_str(summary);
    s
}

/// Resolves the attack and check template for `bqsdc attack`.
pub fn attack_setup(a: &AttackArgs) -> Result<(Option<AttackConfig>, CheckTemplate), CliError> {
    let raw = a.strategy.trim();
    let attack = if raw == "none" {
        None
    } else {
        let spec = match a.beta2 {
            Some(b) if matches!(raw, "entangle" | "entangle-measure" | "entangle_measure") => format!("{raw}:{b}"),
            Some(_) => return Err(usage("--beta2 only applies to --strategy entangle")),
            None => raw.to_string(),
        };
        let strategy: Strategy = spec.parse().map_err(usage)?;
        Some(AttackConfig::new(a.target, strategy).map_err(usage)?)
    };
    let entangle = matches!(attack.map(|x| x.strategy), Some(Strategy::EntangleMeasure { .. }));
    let template = match a.target {
        Transmission::SC => {
            if a.decoys.is_some() {
                return Err(usage("--decoys applies to S_B / S_A; use --check-basis for S_C"));
            }
            CheckTemplate::GhzSample {
                label: a.sample,
                bob_basis: a.check_basis.unwrap_or(if entangle {
                    BasisPolicy::Fixed(bqsdc::protocol::CheckBasis::Z)
                } else {
                    BasisPolicy::Uniform
                }),
            }
        }
        Transmission::SB | Transmission::SA => {
            if a.check_basis.is_some() {
                return Err(usage("--check-basis applies to S_C; use --decoys for S_B / S_A"));
            }
            CheckTemplate::SingleDecoy {
                decoys: a.decoys.unwrap_or(if entangle { DecoyPolicy::ZBasis } else { DecoyPolicy::Bb84 }),
            }
        }
    };
    Ok((attack, template))
}

pub fn cmd_attack(a: &AttackArgs, seed: u64, format: Format) -> Result<Outcome, CliError> {
    let (attack, template) = attack_setup(a)?;
    let est = estimate_detection(attack.as_ref(), &template, a.trials, seed).map_err(usage)?;
    let summary = format!(
        "{} on {} ({}): rate {:.4} ± {:.4} over {} trials{}\n",
        est.strategy,
        est.target,
        est.params,
        est.rate,
        est.ci95,
        est.trials,
        match (est.reference_value, est.abs_error) {
            (Some(r), Some(e)) => format!("; published {r} (|error| {e:.4})"),
            _ => String::new(),
        }
    );

    #[derive(Serialize)]
    struct AttackRunConfig {
        attack: Option<AttackConfig>,
        check: String,
        trials: u64,
    }
    let bytes = match format {
        Format::Json => json(
            "attack",
            Some(seed),
            AttackRunConfig {
                attack,
                check: template.to_string(),
                trials: a.trials,
            },
            &est,
        )?,
        Format::Text => format!("{TOOL} {VERSION} attack seed={seed}\n{summary}").into_bytes(),
        Format::Csv => csv_rows(csv_header("attack", Some(seed)), [&est])?,
    };
    Ok(Outcome {
        bytes,
        summary,
        exit_code: 0,
        format,
    })
}

#[derive(Serialize)]
struct AnalyzeResult {
    #[serde(flatten)]
    report: AnalysisReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<MonteCarloLeakage>,
}

pub fn cmd_analyze(a: &AnalyzeArgs, seed: Option<u64>, format: Format) -> Result<Outcome, CliError> {
    let report = analysis_report();
    let (seed, monte_carlo) = match a.mc_groups {
        Some(n) => {
            let s = resolve_seed(seed);
            (Some(s), Some(monte_carlo_leakage(n, s).map_err(usage)?))
        }
        None => (seed, None),
    };
    let l = &report.leakage;
    let mut text = String::new();
    let _ = writeln!(text, "capacity: {} bits per group", report.capacity_bits_per_group);
    let _ = writeln!(text, "Eve's entropy over op pairs: {:.4} bits (as published: {} bits)", l.entropy_bits, l.published_entropy_bits);
    let _ = writeln!(text, "entropy given announcement:  {:.4} bits (as computed)", l.conditional_entropy_bits);
    let _ = writeln!(
        text,
        "leakage: {:.4} bits as computed, {} bits as published{}",
        l.leakage_bits,
        l.published_leakage_bits,
        if l.discrepancy { " [discrepancy]" } else { "" }
    );
    if let Some(mc) = &monte_carlo {
        let _ = writeln!(
            text,
            "Monte Carlo ({} groups): H = {:.4}, H|m = {:.4}, leakage = {:.4} bits",
            mc.groups, mc.entropy_bits, mc.conditional_entropy_bits, mc.leakage_bits
        );
    }
    let _ = writeln!(text, "efficiency:");
    for e in &report.efficiency {
        let _ = writeln!(
            text,
            "  {:<14} {}/({}+{}) = {}",
            e.protocols, e.inputs.secret_bits, e.inputs.qubits, e.inputs.classical_bits, e.percent
        );
    }
    let _ = writeln!(text, "comparison:\n  {:<44} {:>4} {:>6} {:>7}", "protocols", "bits", "leaked", "eta");
    for r in &report.comparison {
        let _ = writeln!(
            text,
            "  {:<44} {:>4} {:>6} {:>7}",
            r.protocols,
            r.bits_per_round,
            format!("{}{}", r.leaked_bits, if r.claimed { "*" } else { "" }),
            r.efficiency.map_or("-".into(), bqsdc::analysis::format_percent)
        );
    }
    let bytes = match format {
        Format::Json => json("analyze", seed, (), AnalyzeResult { report, monte_carlo })?,
        Format::Text => text.clone().into_bytes(),
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                protocols: &'a str,
                bits_per_round: u32,
                leaked_bits: u32,
                efficiency: Option<f64>,
                claimed: bool,
            }
            csv_rows(
                csv_header("analyze", seed),
                report.comparison.iter().map(|r| Row {
                    protocols: &r.protocols,
                    bits_per_round: r.bits_per_round,
                    leaked_bits: r.leaked_bits,
                    efficiency: r.efficiency,
                    claimed: r.claimed,
                }),
            )?
        }
    };
    Ok(Outcome {
        bytes,
        summary: text,
        exit_code: 0,
        format,
    })
}
