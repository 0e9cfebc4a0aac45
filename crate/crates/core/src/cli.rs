//! Command-line front end. Exit codes: 0 success, 2 configuration error, 3 enumeration cap.

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ca::{preimage_cylinders, Word};
use crate::entropy::{
    check_invariance, closed_form_entropy, entropy_sequence, generator_probe, PartitionSpec,
};
use crate::error::Error;
use crate::measure::{LogBase, MarkovMeasure, MeasureSpec, StochasticMatrix};
use crate::rule::{odometer, LocalRule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAP: i32 = 3;

const DEFAULT_ENTROPY_TOL: f64 = 1e-9;
const DEFAULT_INVARIANCE_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "lca-entropy",
    version,
    about = "Entropy of linear cellular automata under Markov measures"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Unit for reported entropies.
    #[arg(long, global = true, value_enum, default_value_t = LogBaseArg::Nats)]
    pub log_base: LogBaseArg,

    /// Maximum number of words a single enumeration may visit.
    #[arg(long, global = true, env = "LCA_ENTROPY_CAP", default_value_t = crate::DEFAULT_CAP)]
    pub cap: u128,

    /// Tolerance for agreement and invariance verdicts.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Base partition: zero-time, window:a,b, or default (window:-l,r-1).
    #[arg(long, global = true, default_value = "default")]
    pub partition: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogBaseArg {
    Nats,
    Bits,
    #[value(name = "base-m")]
    BaseM,
}

impl From<LogBaseArg> for LogBase {
    fn from(arg: LogBaseArg) -> Self {
        match arg {
            LogBaseArg::Nats => LogBase::Natural,
            LogBaseArg::Bits => LogBase::Two,
            LogBaseArg::BaseM => LogBase::Alphabet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct RuleArg {
    /// Rule as inline JSON ({"m":2,"l":1,"r":1,"coeffs":[1,0,1]}) or a path to a JSON file.
    #[arg(long)]
    pub rule: String,
}

#[derive(Debug, Args, Default)]
pub struct MeasureArgs {
    /// Measure as inline JSON ({"P": [[...]], "pi": [...]}) or a path to a JSON file.
    #[arg(long)]
    pub measure: Option<String>,

    /// Bernoulli measure with the given symbol probabilities, e.g. 0.7,0.3.
    #[arg(long, value_delimiter = ',')]
    pub bernoulli: Option<Vec<f64>>,

    /// Uniform Bernoulli measure on the rule's alphabet (the default).
    #[arg(long)]
    pub uniform: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Permutativity class with a brute-force check per offset.
    Classify(RuleArg),
    /// Local rule of the n-th iterate.
    Iterate {
        #[command(flatten)]
        rule: RuleArg,
        #[arg(short = 'n', long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
    /// Local rule whose series is the product of the two given rules' series.
    Compose {
        #[command(flatten)]
        rule: RuleArg,
        /// Right-hand factor, same syntax as --rule.
        #[arg(long = "with")]
        other: String,
    },
    /// Closed-form entropy and the exact join-entropy sequence.
    Entropy {
        #[command(flatten)]
        rule: RuleArg,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        n_max: u64,
        /// Shorthand for --format csv.
        #[arg(long)]
        csv: bool,
    },
    /// Preimage cylinders of one cylinder.
    Preimages {
        #[command(flatten)]
        rule: RuleArg,
        /// Cylinder as digits@start, e.g. 010@-1.
        #[arg(long, allow_hyphen_values = true)]
        cylinder: String,
    },
    /// Compare μ(T^{-1}C) with μ(C) over all cylinders up to a length.
    Invariance {
        #[command(flatten)]
        rule: RuleArg,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
    },
    /// Whether the n-fold join separates every word on its dependency window.
    Generator {
        #[command(flatten)]
        rule: RuleArg,
        #[arg(short = 'n', long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
    /// CSV sweep over a matrix family or over all coefficient vectors.
    Sweep {
        #[command(flatten)]
        rule: RuleArg,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        n_max: u64,
        /// Matrix template in JSON; entries are numbers, "p" or "1-p".
        #[arg(long, requires = "values")]
        template: Option<String>,
        /// Values of p: start:stop:step (inclusive) or a comma list; empty for no rows.
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
        /// Sweep every coefficient vector of the --rule's shape under the given measure.
        #[arg(long, conflicts_with = "template")]
        coeff_grid: bool,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_cap() => EXIT_CAP,
            _ => EXIT_CONFIG,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => f.write_str(s),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Rounds to 12 significant digits for output.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn read_json_arg(arg: &str, what: &str) -> CliResult<String> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(arg.to_string());
    }
    std::fs::read_to_string(Path::new(arg))
        .map_err(|e| CliError::Config(format!("{what}: cannot read {arg:?}: {e}")))
}

fn parse_rule(arg: &str) -> CliResult<LocalRule> {
    let text = read_json_arg(arg, "rule")?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("rule: {e}")))
}

fn resolve_measure(args: &MeasureArgs, m: u32) -> CliResult<MarkovMeasure> {
    let given = args.measure.is_some() as u8 + args.bernoulli.is_some() as u8 + args.uniform as u8;
    if given > 1 {
        return Err(CliError::Config(
            "give at most one of --measure, --bernoulli, --uniform".into(),
        ));
    }
    let mu = if let Some(spec) = &args.measure {
        let text = read_json_arg(spec, "measure")?;
        let spec: MeasureSpec =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("measure: {e}")))?;
        MarkovMeasure::from_spec(spec)?
    } else if let Some(p) = &args.bernoulli {
        MarkovMeasure::bernoulli(p)?
    } else {
        MarkovMeasure::uniform(m as usize)?
    };
    if mu.alphabet_size() != m as usize {
        return Err(CliError::Config(format!(
            "measure has {} states but the rule is over Z_{m}",
            mu.alphabet_size()
        )));
    }
    Ok(mu)
}

fn resolve_partition(arg: &str, rule: &LocalRule) -> CliResult<PartitionSpec> {
    if arg.trim() == "default" {
        return Ok(PartitionSpec::default_for(rule));
    }
    arg.parse()
        .map_err(|e| CliError::Config(format!("partition: {e}")))
}

/// Everything an entropy-style run needs, resolved from the command line.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub rule: LocalRule,
    pub measure: MarkovMeasure,
    pub base: PartitionSpec,
    pub n_max: usize,
    pub cap: u128,
    pub log_base: LogBase,
    pub tol: f64,
}

impl RunConfig {
    fn resolve(
        g: &GlobalOpts,
        rule: &RuleArg,
        measure: &MeasureArgs,
        n_max: u64,
    ) -> CliResult<Self> {
        let rule = parse_rule(&rule.rule)?;
        let measure = resolve_measure(measure, rule.modulus())?;
        let base = resolve_partition(&g.partition, &rule)?;
        Ok(Self {
            base,
            measure,
            n_max: n_max as usize,
            cap: g.cap,
            log_base: g.log_base.into(),
            tol: g.tol.unwrap_or(DEFAULT_ENTROPY_TOL),
            rule,
        })
    }
}

/// Parses arguments, runs the command, writes the report to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Config(format!("output: {e}"))
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::Classify(rule) => cmd_classify(g, rule, out),
        Command::Iterate { rule, n } => {
            let rule = parse_rule(&rule.rule)?.iterate(*n)?;
            print_rule(g, &rule, out)
        }
        Command::Compose { rule, other } => {
            let rule = parse_rule(&rule.rule)?.compose(&parse_rule(other)?)?;
            print_rule(g, &rule, out)
        }
        Command::Entropy {
            rule,
            measure,
            n_max,
            csv,
        } => {
            let cfg = RunConfig::resolve(g, rule, measure, *n_max)?;
            let format = if *csv {
                Format::Csv
            } else {
                g.format.unwrap_or(Format::Json)
            };
            cmd_entropy(&cfg, format, out)
        }
        Command::Preimages { rule, cylinder } => cmd_preimages(g, rule, cylinder, out),
        Command::Invariance {
            rule,
            measure,
            max_len,
        } => cmd_invariance(g, rule, measure, *max_len, out),
        Command::Generator { rule, n } => cmd_generator(g, rule, *n as usize, out),
        Command::Sweep {
            rule,
            measure,
            n_max,
            template,
            values,
            coeff_grid,
        } => cmd_sweep(
            g,
            rule,
            measure,
            *n_max as usize,
            template.as_deref(),
            values.as_deref(),
            *coeff_grid,
            out,
        ),
    }
}

#[derive(Serialize)]
struct OffsetReport {
    offset: i64,
    coeff: u32,
    unit: bool,
    brute_force: Option<bool>,
}

fn cmd_classify(g: &GlobalOpts, rule: &RuleArg, out: &mut dyn Write) -> CliResult<i32> {
    let rule = parse_rule(&rule.rule)?;
    let class = rule.classify();
    let (l, r) = (rule.left_radius() as i64, rule.right_radius() as i64);
    let offsets: Vec<OffsetReport> = (-l..=r)
        .map(|offset| OffsetReport {
            offset,
            coeff: rule.coeff(offset),
            unit: rule.is_permutative_at(offset),
            brute_force: rule.brute_force_permutative(offset, g.cap).ok(),
        })
        .collect();
    match g.format.unwrap_or(Format::Text) {
        Format::Text => {
            writeln!(out, "{class}").map_err(io)?;
            for o in &offsets {
                let bf = match o.brute_force {
                    Some(true) => "permutative",
                    Some(false) => "not permutative",
                    None => "skipped (cap)",
                };
                writeln!(
                    out,
                    "offset {:>3}: coeff {} unit={} brute-force: {bf}",
                    o.offset, o.coeff, o.unit
                )
                .map_err(io)?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                class: String,
                left: bool,
                right: bool,
                offsets: &'a [OffsetReport],
            }
            let rep = Report {
                class: class.to_string(),
                left: class.is_left(),
                right: class.is_right(),
                offsets: &offsets,
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string(&rep).expect("serializable")
            )
            .map_err(io)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["offset", "coeff", "unit", "brute_force"])
                .map_err(csv_err)?;
            for o in &offsets {
                let bf = o.brute_force.map_or(String::new(), |b| b.to_string());
                w.write_record([
                    o.offset.to_string(),
                    o.coeff.to_string(),
                    o.unit.to_string(),
                    bf,
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Config(format!("output: {e}"))
}

fn print_rule(g: &GlobalOpts, rule: &LocalRule, out: &mut dyn Write) -> CliResult<i32> {
    match g.format.unwrap_or(Format::Text) {
        Format::Text | Format::Json => writeln!(out, "{rule}").map_err(io)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["offset", "coeff"]).map_err(csv_err)?;
            let l = rule.left_radius() as i64;
            for (i, c) in rule.coeffs().iter().enumerate() {
                w.write_record([(i as i64 - l).to_string(), c.to_string()])
                    .map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SequenceJson {
    #[serde(rename = "H")]
    h: Vec<f64>,
    diffs: Vec<Option<f64>>,
    ratios: Vec<f64>,
    atom_counts: Vec<usize>,
}

#[derive(Serialize)]
struct EntropyJson {
    formula: Option<f64>,
    sequence: SequenceJson,
    units: &'static str,
    base_partition: String,
    stationary: bool,
    verdict: Option<&'static str>,
    truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

/// Closed form (when bipermutative), sequence in the configured unit, and the agreement verdict.
pub struct EntropyReport {
    pub formula: Option<f64>,
    pub sequence: crate::entropy::EntropySequence,
    pub verdict: Option<bool>,
    pub note: Option<String>,
}

pub fn entropy_report(cfg: &RunConfig) -> crate::Result<EntropyReport> {
    let m = cfg.rule.modulus();
    let (formula, note) = match closed_form_entropy(&cfg.rule, &cfg.measure, cfg.log_base) {
        Ok(h) => (Some(h), None),
        Err(e @ Error::NotBipermutative { .. }) => {
            (None, Some(format!("{e}; closed form not applicable")))
        }
        Err(e) => return Err(e),
    };
    let sequence = entropy_sequence(&cfg.rule, &cfg.measure, &cfg.base, cfg.n_max, cfg.cap)?
        .in_base(cfg.log_base, m);
    let verdict = match (formula, sequence.last_diff()) {
        (Some(f), Some(d)) => Some((d - f).abs() <= cfg.tol),
        _ => None,
    };
    Ok(EntropyReport {
        formula,
        sequence,
        verdict,
        note,
    })
}

fn verdict_str(v: Option<bool>) -> Option<&'static str> {
    v.map(|ok| if ok { "agree" } else { "disagree" })
}

fn cmd_entropy(cfg: &RunConfig, format: Format, out: &mut dyn Write) -> CliResult<i32> {
    let rep = entropy_report(cfg)?;
    let seq = &rep.sequence;
    if seq.truncated && seq.len() < 2 {
        return Err(CliError::Lib(cap_error(cfg, seq.len() + 1)));
    }
    match format {
        Format::Json => {
            let json = EntropyJson {
                formula: rep.formula.map(sig12),
                sequence: SequenceJson {
                    h: seq.h.iter().copied().map(sig12).collect(),
                    diffs: seq.diffs.iter().map(|d| d.map(sig12)).collect(),
                    ratios: seq.ratios.iter().copied().map(sig12).collect(),
                    atom_counts: seq.atom_counts.clone(),
                },
                units: cfg.log_base.units(),
                base_partition: cfg.base.to_string(),
                stationary: seq.stationary,
                verdict: verdict_str(rep.verdict),
                truncated: seq.truncated,
                note: rep.note,
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string(&json).expect("serializable")
            )
            .map_err(io)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["n", "H", "diff", "ratio", "atoms"])
                .map_err(csv_err)?;
            for i in 0..seq.len() {
                w.write_record([
                    (i + 1).to_string(),
                    sig12(seq.h[i]).to_string(),
                    seq.diffs[i].map_or(String::new(), |d| sig12(d).to_string()),
                    sig12(seq.ratios[i]).to_string(),
                    seq.atom_counts[i].to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
        Format::Text => {
            let units = cfg.log_base.units();
            match rep.formula {
                Some(f) => writeln!(out, "formula: {} {units}", sig12(f)),
                None => writeln!(out, "formula: n/a ({})", rep.note.as_deref().unwrap_or("")),
            }
            .map_err(io)?;
            writeln!(out, "base partition: {}", cfg.base).map_err(io)?;
            for i in 0..seq.len() {
                let diff = seq.diffs[i].map_or("-".to_string(), |d| sig12(d).to_string());
                writeln!(
                    out,
                    "n={} H={} diff={diff} ratio={} atoms={}",
                    i + 1,
                    sig12(seq.h[i]),
                    sig12(seq.ratios[i]),
                    seq.atom_counts[i]
                )
                .map_err(io)?;
            }
            if let Some(v) = verdict_str(rep.verdict) {
                writeln!(out, "verdict: {v}").map_err(io)?;
            }
            if seq.truncated {
                writeln!(out, "truncated at n={} by the enumeration cap", seq.len()).map_err(io)?;
            }
            if !seq.stationary {
                writeln!(out, "warning: pi is not stationary; values are formal").map_err(io)?;
            }
        }
    }
    Ok(EXIT_OK)
}

/// The cap error a join of depth `n` would hit.
fn cap_error(cfg: &RunConfig, n: usize) -> Error {
    let (lo, hi) = cfg.base.dependency_window(&cfg.rule, n);
    let required = (cfg.rule.modulus() as u128)
        .checked_pow((hi - lo + 1) as u32)
        .unwrap_or(u128::MAX);
    Error::CapExceeded {
        required,
        cap: cfg.cap,
    }
}

fn cmd_preimages(
    g: &GlobalOpts,
    rule: &RuleArg,
    cylinder: &str,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let rule = parse_rule(&rule.rule)?;
    let c: Word = cylinder
        .parse()
        .map_err(|e| CliError::Config(format!("cylinder: {e}")))?;
    let pre = preimage_cylinders(&rule, &c, g.cap)?;
    let m = rule.modulus();
    let (lo, hi) = (
        c.start - rule.left_radius() as i64,
        c.end() + rule.right_radius() as i64,
    );
    match g.format.unwrap_or(Format::Text) {
        Format::Text => {
            for w in &pre {
                writeln!(out, "[{lo}..{hi}] {}", w.digits(m)).map_err(io)?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                cylinder: String,
                window: (i64, i64),
                count: usize,
                preimages: Vec<String>,
            }
            let rep = Report {
                cylinder: format!("[{}..{}] {}", c.start, c.end(), c.digits(m)),
                window: (lo, hi),
                count: pre.len(),
                preimages: pre.iter().map(|w| w.digits(m)).collect(),
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string(&rep).expect("serializable")
            )
            .map_err(io)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["start", "end", "word"]).map_err(csv_err)?;
            for p in &pre {
                w.write_record([lo.to_string(), hi.to_string(), p.digits(m)])
                    .map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_invariance(
    g: &GlobalOpts,
    rule: &RuleArg,
    measure: &MeasureArgs,
    max_len: usize,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let rule = parse_rule(&rule.rule)?;
    let mu = resolve_measure(measure, rule.modulus())?;
    let tol = g.tol.unwrap_or(DEFAULT_INVARIANCE_TOL);
    let rep = check_invariance(&rule, &mu, max_len, tol, g.cap)?;
    let m = rule.modulus();
    let worst = rep
        .worst
        .as_ref()
        .map(|w| format!("[{}..{}] {}", w.start, w.end(), w.digits(m)));
    match g.format.unwrap_or(Format::Text) {
        Format::Text => {
            let verdict = if rep.preserved {
                "preserved"
            } else {
                "not preserved"
            };
            write!(out, "{verdict} (max dev {:.1e}", rep.max_deviation).map_err(io)?;
            if let (false, Some(w)) = (rep.preserved, &worst) {
                write!(out, " at {w}").map_err(io)?;
            }
            writeln!(out, ")").map_err(io)?;
            if !rep.stationary {
                writeln!(out, "warning: pi is not stationary").map_err(io)?;
            }
        }
        Format::Json | Format::Csv => {
            #[derive(Serialize)]
            struct Report {
                preserved: bool,
                max_deviation: f64,
                worst: Option<String>,
                cylinders_checked: usize,
                tol: f64,
                stationary: bool,
            }
            let r = Report {
                preserved: rep.preserved,
                max_deviation: sig12(rep.max_deviation),
                worst,
                cylinders_checked: rep.cylinders_checked,
                tol,
                stationary: rep.stationary,
            };
            if g.format == Some(Format::Csv) {
                let mut w = csv::Writer::from_writer(out);
                w.serialize(&r).map_err(csv_err)?;
                w.flush().map_err(io)?;
            } else {
                writeln!(out, "{}", serde_json::to_string(&r).expect("serializable"))
                    .map_err(io)?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_generator(g: &GlobalOpts, rule: &RuleArg, n: usize, out: &mut dyn Write) -> CliResult<i32> {
    let rule = parse_rule(&rule.rule)?;
    let base = resolve_partition(&g.partition, &rule)?;
    let probe = generator_probe(&rule, &base, n, g.cap)?;
    match g.format.unwrap_or(Format::Text) {
        Format::Text => {
            let verdict = if probe.injective {
                "injective"
            } else {
                "not injective"
            };
            writeln!(
                out,
                "{verdict}: {} classes from {} words",
                probe.classes, probe.words
            )
            .map_err(io)?;
            writeln!(
                out,
                "base partition {base}, depth {n}, window [{}..{}]",
                probe.window.0, probe.window.1
            )
            .map_err(io)?;
        }
        Format::Json | Format::Csv => {
            #[derive(Serialize)]
            struct Report {
                injective: bool,
                classes: usize,
                words: u64,
                window_start: i64,
                window_end: i64,
                base_partition: String,
                n: usize,
            }
            let r = Report {
                injective: probe.injective,
                classes: probe.classes,
                words: probe.words as u64,
                window_start: probe.window.0,
                window_end: probe.window.1,
                base_partition: base.to_string(),
                n,
            };
            if g.format == Some(Format::Csv) {
                let mut w = csv::Writer::from_writer(out);
                w.serialize(&r).map_err(csv_err)?;
                w.flush().map_err(io)?;
            } else {
                writeln!(out, "{}", serde_json::to_string(&r).expect("serializable"))
                    .map_err(io)?;
            }
        }
    }
    Ok(EXIT_OK)
}

/// `start:stop:step` (inclusive) or a comma list. Empty input is an empty grid.
fn parse_values(s: &str) -> CliResult<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| CliError::Config(format!("values: {t:?}: {e}")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 || !step.is_finite() {
                return Err(CliError::Config("values: step must be positive".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor();
            if count < 0.0 {
                return Ok(Vec::new());
            }
            Ok((0..=count as usize)
                .map(|i| sig12(start + i as f64 * step))
                .collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(CliError::Config(format!("values: cannot parse {s:?}"))),
    }
}

#[derive(Debug, Clone)]
enum Cell {
    Const(f64),
    P,
    OneMinusP,
}

fn parse_template(arg: &str) -> CliResult<Vec<Vec<Cell>>> {
    let text = read_json_arg(arg, "template")?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("template: {e}")))?;
    let bad =
        || CliError::Config("template: expected a JSON matrix of numbers, \"p\" or \"1-p\"".into());
    value
        .as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|cell| match cell {
                    serde_json::Value::Number(n) => n.as_f64().map(Cell::Const).ok_or_else(bad),
                    serde_json::Value::String(s) if s.replace(' ', "") == "p" => Ok(Cell::P),
                    serde_json::Value::String(s) if s.replace(' ', "") == "1-p" => {
                        Ok(Cell::OneMinusP)
                    }
                    _ => Err(bad()),
                })
                .collect()
        })
        .collect()
}

struct SweepRow {
    formula: Option<f64>,
    diff: Option<f64>,
    verdict: Option<bool>,
}

fn sweep_point(cfg: &RunConfig) -> crate::Result<SweepRow> {
    let rep = entropy_report(cfg)?;
    if rep.sequence.truncated {
        return Err(cap_error(cfg, rep.sequence.len() + 1));
    }
    Ok(SweepRow {
        formula: rep.formula,
        diff: rep.sequence.last_diff(),
        verdict: rep.verdict,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| sig12(v).to_string())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    g: &GlobalOpts,
    rule_arg: &RuleArg,
    measure: &MeasureArgs,
    n_max: usize,
    template: Option<&str>,
    values: Option<&str>,
    coeff_grid: bool,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let rule = parse_rule(&rule_arg.rule)?;
    let log_base: LogBase = g.log_base.into();
    let tol = g.tol.unwrap_or(DEFAULT_ENTROPY_TOL);
    let mut w = csv::Writer::from_writer(out);
    let base_cfg = |rule: LocalRule, mu: MarkovMeasure| -> CliResult<RunConfig> {
        Ok(RunConfig {
            base: resolve_partition(&g.partition, &rule)?,
            rule,
            measure: mu,
            n_max,
            cap: g.cap,
            log_base,
            tol,
        })
    };
    let row_result = |res: crate::Result<SweepRow>| -> [String; 4] {
        match res {
            Ok(row) => [
                fmt_opt(row.formula),
                fmt_opt(row.diff),
                verdict_str(row.verdict).unwrap_or("n/a").to_string(),
                String::new(),
            ],
            Err(e) => [String::new(), String::new(), String::new(), e.to_string()],
        }
    };

    if coeff_grid {
        let mu = resolve_measure(measure, rule.modulus())?;
        w.write_record(["coeffs", "class", "formula", "diff", "verdict", "error"])
            .map_err(csv_err)?;
        let (l, r, m) = (rule.left_radius(), rule.right_radius(), rule.modulus());
        let mut digits = vec![0u32; l + r + 1];
        loop {
            let coeffs: Vec<i64> = digits.iter().map(|&d| d as i64).collect();
            let label = digits
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            let point = LocalRule::new(m as u64, l, r, &coeffs)?;
            let class = point.classify().to_string();
            let cfg = base_cfg(point, mu.clone())?;
            let [f, d, v, e] = row_result(sweep_point(&cfg));
            w.write_record([label, class, f, d, v, e])
                .map_err(csv_err)?;
            if !odometer(&mut digits, m) {
                break;
            }
        }
    } else {
        let (Some(template), Some(values)) = (template, values) else {
            return Err(CliError::Config(
                "sweep needs --template with --values, or --coeff-grid".into(),
            ));
        };
        let cells = parse_template(template)?;
        let values = parse_values(values)?;
        w.write_record(["p", "formula", "diff", "verdict", "error"])
            .map_err(csv_err)?;
        for p in values {
            let rows: Vec<Vec<f64>> = cells
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|c| match c {
                            Cell::Const(x) => *x,
                            Cell::P => p,
                            Cell::OneMinusP => 1.0 - p,
                        })
                        .collect()
                })
                .collect();
            let res = StochasticMatrix::new(rows)
                .and_then(|mat| MarkovMeasure::new(mat, None))
                .and_then(|mu| {
                    if mu.alphabet_size() != rule.modulus() as usize {
                        return Err(Error::ModulusMismatch(
                            rule.modulus(),
                            mu.alphabet_size() as u32,
                        ));
                    }
                    let cfg = base_cfg(rule.clone(), mu)
                        .map_err(|e| Error::InvalidMatrix(e.to_string()))?;
                    sweep_point(&cfg)
                });
            let [f, d, v, e] = row_result(res);
            w.write_record([sig12(p).to_string(), f, d, v, e])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(io)?;
    Ok(EXIT_OK)
}
