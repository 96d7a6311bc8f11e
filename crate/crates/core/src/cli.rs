//! The `compop` command line: `check`, `membership` and `harness`.
//!
//! Exit codes: 0 Pass/Holds/no discrepancies, 1 Fail/Fails/discrepancies,
//! 2 Inconclusive, 3 usage errors, 4 expression or evaluation errors,
//! 5 I/O errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::criteria::{self, check, check_b, part_for, Bounds, Overall};
use crate::empirical::{
    crosscheck, gorny_corpus, lemma1_samples, trail_csv, verify_gorny, verify_lemma1, Implication, Lemma1Setup,
};
use crate::expr::{parse, parse_smooth, Expr};
use crate::spaces::{membership, Family, MembershipTag, SpaceBounds, SpaceSpec, REGRESSION_CORPUS};
use crate::weights::{Classifier, Schedule, Thresholds, WeightSystem};

pub const SCHEMA: &str = "compop-check/1";

pub const EXIT_USAGE: i32 = 3;
pub const EXIT_EXPR: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(m: impl Into<String>) -> CliError {
        CliError { code: EXIT_USAGE, message: m.into() }
    }

    fn expr(m: impl ToString) -> CliError {
        CliError { code: EXIT_EXPR, message: m.to_string() }
    }

    fn io(m: impl ToString) -> CliError {
        CliError { code: EXIT_IO, message: m.to_string() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "compop", version, about = "Composition operators between weighted spaces of smooth functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// N=..,M=..,n=..,p=..,k=..
    #[arg(long, global = true)]
    bounds: Option<String>,
    /// K=..,samples=..
    #[arg(long, global = true)]
    windows: Option<String>,
    /// eps_b=..,rho=..,T=..,k0=..
    #[arg(long, global = true)]
    thresholds: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether C_φ maps a space into another
    Check(SpaceArgs),
    /// Decide whether f belongs to a space
    Membership {
        /// K, OC, OM, B, B:<N> or OMn:<n>
        #[arg(long)]
        space: Option<String>,
        /// Base weight v; the system is v^N
        #[arg(long)]
        weight: Option<String>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        f: Option<String>,
    },
    /// Constructive verification harnesses
    Harness {
        #[command(subcommand)]
        which: Harness,
    },
}

#[derive(Args, Debug)]
struct SpaceArgs {
    /// S, OC, OM, B or EXP
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    phi: Option<String>,
    /// Source space descriptor (JSON text or a path to a JSON file)
    #[arg(long)]
    space_in: Option<String>,
    /// Target space descriptor
    #[arg(long)]
    space_out: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Harness {
    /// Composition inequalities for bumps at sample points
    Lemma1 {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        v: Option<String>,
        #[arg(long)]
        vt: Option<String>,
        #[arg(long)]
        w: Option<String>,
    },
    /// Fitted Gorny constants and their stability
    Gorny {
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Corpus size; stability compares against its first half
        #[arg(long)]
        corpus_size: Option<usize>,
    },
    /// Criteria verdict against memberships of composed functions
    Crosscheck {
        #[command(flatten)]
        spaces: SpaceArgs,
        /// Corpus entry (repeatable; default: the regression corpus)
        #[arg(long)]
        f: Vec<String>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n_weight: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m_weight: Option<usize>,
    #[serde(rename = "n", skip_serializing_if = "Option::is_none")]
    pub n_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsConfig {
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub annuli: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<usize>,
}

/// Everything a run depends on. Worker count and output path are not
/// part of it, so reports do not depend on them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub f: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space_in: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space_out: Option<Value>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub bounds: BoundsConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub windows: WindowsConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub thresholds: ThresholdsConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vt: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<String>,
}

fn is_default<T: Default + PartialEq>(t: &T) -> bool {
    *t == T::default()
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )+
    };
}

impl RunConfig {
    /// `self` with every value set in `top` replaced.
    pub fn overlay(mut self, top: &RunConfig) -> RunConfig {
        overlay!(self, top, phi, weight, space, preset, space_in, space_out, seed, p, n, j, m, corpus_size, v, vt, w);
        overlay!(self.bounds, top.bounds, n_weight, m_weight, n_order, p, k);
        overlay!(self.windows, top.windows, annuli, samples);
        overlay!(self.thresholds, top.thresholds, eps_b, rho, t, k0);
        if !top.f.is_empty() {
            self.f = top.f.clone();
        }
        self
    }

    pub fn criteria_bounds(&self) -> Result<Bounds, CliError> {
        let d = Bounds::default();
        let b = &self.bounds;
        let out = Bounds {
            n_max: b.n_weight.unwrap_or(d.n_max),
            m_max: b.m_weight.unwrap_or(d.m_max),
            p_max: b.p.unwrap_or(d.p_max),
            k_max: b.k.unwrap_or(d.k_max),
        };
        if out.n_max == 0 || out.m_max == 0 || out.p_max == 0 || out.k_max == 0 {
            return Err(CliError::usage("bounds must be positive"));
        }
        if out.p_max > 12 {
            return Err(CliError::usage("p must be at most 12"));
        }
        Ok(out)
    }

    pub fn space_bounds(&self) -> Result<SpaceBounds, CliError> {
        let d = SpaceBounds::default();
        let out = SpaceBounds {
            n_max_weight: self.bounds.n_weight.unwrap_or(d.n_max_weight),
            n_max_order: self.bounds.n_order.unwrap_or(d.n_max_order),
        };
        if out.n_max_weight == 0 || out.n_max_order == 0 {
            return Err(CliError::usage("bounds must be positive"));
        }
        Ok(out)
    }

    pub fn classifier(&self) -> Result<Classifier, CliError> {
        let (ds, dt) = (Schedule::default(), Thresholds::default());
        let schedule = Schedule {
            annuli: self.windows.annuli.unwrap_or(ds.annuli),
            samples: self.windows.samples.unwrap_or(ds.samples),
        };
        if schedule.annuli == 0 || schedule.samples < 4 || schedule.annuli > 60 {
            return Err(CliError::usage("windows need 1 ≤ K ≤ 60 and samples ≥ 4"));
        }
        let th = &self.thresholds;
        let thresholds = Thresholds {
            eps_b: th.eps_b.unwrap_or(dt.eps_b),
            k0: th.k0.unwrap_or(dt.k0),
            t: th.t.unwrap_or(dt.t),
            rho: th.rho.unwrap_or(dt.rho),
        };
        thresholds.validate().map_err(CliError::usage)?;
        Ok(Classifier::new(schedule, thresholds))
    }
}

// "a=1,b=2" into pairs
fn key_values(text: &str) -> Result<Vec<(String, String)>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::usage(format!("expected key=value, got {kv:?}")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::usage(format!("invalid value {v:?} for {key}")))
}

fn descriptor(text: &str) -> Result<Value, CliError> {
    let body = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).map_err(|e| CliError::io(format!("{text}: {e}")))?
    };
    serde_json::from_str(&body).map_err(|e| CliError::usage(format!("space descriptor: {e}")))
}

fn flags_config(common: &Common, command: &Command) -> Result<RunConfig, CliError> {
    let mut c = RunConfig { seed: common.seed, ..Default::default() };
    if let Some(b) = &common.bounds {
        for (k, v) in key_values(b)? {
            match k.as_str() {
                "N" => c.bounds.n_weight = Some(num(&k, &v)?),
                "M" => c.bounds.m_weight = Some(num(&k, &v)?),
                "n" => c.bounds.n_order = Some(num(&k, &v)?),
                "p" => c.bounds.p = Some(num(&k, &v)?),
                "k" => c.bounds.k = Some(num(&k, &v)?),
                _ => return Err(CliError::usage(format!("unknown bound {k:?}"))),
            }
        }
    }
    if let Some(w) = &common.windows {
        for (k, v) in key_values(w)? {
            match k.as_str() {
                "K" => c.windows.annuli = Some(num(&k, &v)?),
                "samples" => c.windows.samples = Some(num(&k, &v)?),
                _ => return Err(CliError::usage(format!("unknown window setting {k:?}"))),
            }
        }
    }
    if let Some(t) = &common.thresholds {
        for (k, v) in key_values(t)? {
            match k.as_str() {
                "eps_b" => c.thresholds.eps_b = Some(num(&k, &v)?),
                "rho" => c.thresholds.rho = Some(num(&k, &v)?),
                "T" => c.thresholds.t = Some(num(&k, &v)?),
                "k0" => c.thresholds.k0 = Some(num(&k, &v)?),
                _ => return Err(CliError::usage(format!("unknown threshold {k:?}"))),
            }
        }
    }
    let spaces = |c: &mut RunConfig, a: &SpaceArgs| -> Result<(), CliError> {
        c.preset = a.preset.clone();
        c.phi = a.phi.clone();
        c.space_in = a.space_in.as_deref().map(descriptor).transpose()?;
        c.space_out = a.space_out.as_deref().map(descriptor).transpose()?;
        Ok(())
    };
    match command {
        Command::Check(a) => spaces(&mut c, a)?,
        Command::Membership { space, weight, preset, f } => {
            c.space = space.clone();
            c.weight = weight.clone();
            c.preset = preset.clone();
            c.f = f.iter().cloned().collect();
        }
        Command::Harness { which } => match which {
            Harness::Lemma1 { preset, phi, p, n, v, vt, w } => {
                c.preset = preset.clone();
                c.phi = phi.clone();
                c.p = *p;
                c.n = *n;
                c.v = v.clone();
                c.vt = vt.clone();
                c.w = w.clone();
            }
            Harness::Gorny { j, m, corpus_size } => {
                c.j = *j;
                c.m = *m;
                c.corpus_size = *corpus_size;
            }
            Harness::Crosscheck { spaces: a, f } => {
                spaces(&mut c, a)?;
                c.f = f.clone();
            }
        },
    }
    Ok(c)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Check(_) => "check",
        Command::Membership { .. } => "membership",
        Command::Harness { which: Harness::Lemma1 { .. } } => "harness lemma1",
        Command::Harness { which: Harness::Gorny { .. } } => "harness gorny",
        Command::Harness { which: Harness::Crosscheck { .. } } => "harness crosscheck",
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Reports go to `--out` or stdout, errors to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("compop: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let file = match &cli.common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| CliError::usage(format!("config: {e}")))?
        }
        None => RunConfig::default(),
    };
    let config = file.overlay(&flags_config(&cli.common, &cli.command)?);
    let jobs = match cli.common.jobs {
        Some(0) => return Err(CliError::usage("--jobs must be positive")),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(CliError::io)?;
    let name = command_name(&cli.command);
    let (code, body) = pool.install(|| dispatch(&cli.command, &config))?;
    let mut report = serde_json::Map::new();
    report.insert("schema".into(), json!(SCHEMA));
    report.insert("command".into(), json!(name));
    report.insert("config".into(), serde_json::to_value(&config).map_err(CliError::io)?);
    match body {
        Value::Object(m) => report.extend(m),
        other => {
            report.insert("result".into(), other);
        }
    }
    write_report(&Value::Object(report), cli.common.out.as_deref())?;
    Ok(code)
}

fn write_report(report: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(CliError::io)?;
    text.push('\n');
    match out {
        None => std::io::stdout().write_all(text.as_bytes()).map_err(CliError::io),
        Some(path) => {
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
            tmp.write_all(text.as_bytes()).map_err(CliError::io)?;
            tmp.persist(path).map_err(|e| CliError::io(format!("{}: {}", path.display(), e.error)))?;
            Ok(())
        }
    }
}

fn dispatch(command: &Command, config: &RunConfig) -> Result<(i32, Value), CliError> {
    let c = config.classifier()?;
    match command {
        Command::Check(_) => cmd_check(config, &c),
        Command::Membership { .. } => cmd_membership(config, &c),
        Command::Harness { which: Harness::Lemma1 { .. } } => cmd_lemma1(config, &c),
        Command::Harness { which: Harness::Gorny { .. } } => cmd_gorny(config),
        Command::Harness { which: Harness::Crosscheck { .. } } => cmd_crosscheck(config, &c),
    }
}

fn to_value<T: Serialize>(t: &T) -> Result<Value, CliError> {
    serde_json::to_value(t).map_err(CliError::io)
}

fn smooth(name: &str, text: Option<&str>) -> Result<Expr, CliError> {
    let text = text.ok_or_else(|| CliError::usage(format!("--{name} is required")))?;
    parse_smooth(text).map_err(|e| CliError::expr(format!("--{name}: {e}")))
}

fn spec(v: &Value, space_bounds: SpaceBounds, explicit: bool) -> Result<SpaceSpec, CliError> {
    let mut s: SpaceSpec = serde_json::from_value(v.clone()).map_err(|e| CliError::usage(format!("space descriptor: {e}")))?;
    if !explicit {
        s.bounds = space_bounds;
    }
    Ok(s)
}

// Source and target spaces from a preset or two descriptors.
fn resolve_spaces(config: &RunConfig) -> Result<(SpaceSpec, SpaceSpec), CliError> {
    match (&config.preset, &config.space_in, &config.space_out) {
        (Some(p), None, None) => criteria::preset(p).map_err(|e| CliError::usage(e.to_string())),
        (None, Some(a), Some(b)) => {
            let sb = config.space_bounds()?;
            let has = |v: &Value| v.get("bounds").is_some();
            Ok((spec(a, sb, has(a))?, spec(b, sb, has(b))?))
        }
        _ => Err(CliError::usage("give either --preset or both --space-in and --space-out")),
    }
}

fn overall_code(o: Overall) -> i32 {
    match o {
        Overall::Pass => 0,
        Overall::Fail => 1,
        Overall::Inconclusive => 2,
    }
}

fn cmd_check(config: &RunConfig, c: &Classifier) -> Result<(i32, Value), CliError> {
    let phi = smooth("phi", config.phi.as_deref())?;
    let bounds = config.criteria_bounds()?;
    let (verdict, part) = if config.preset.as_deref() == Some("B") {
        (check_b(&phi, &bounds, c).map_err(CliError::expr)?, json!("B"))
    } else {
        let (s, t) = resolve_spaces(config)?;
        let (part, v) = check(&s, &t, &phi, &bounds, c).map_err(|e| CliError::usage(e.to_string()))?;
        (v, to_value(&part)?)
    };
    let mut body = to_value(&verdict)?;
    body["paper_part"] = part;
    body["bounds"] = to_value(&bounds)?;
    if let Some(w) = &verdict.witness {
        body["witness_csv"] = json!(trail_csv(&w.trail));
    }
    Ok((overall_code(verdict.overall), body))
}

fn membership_space(config: &RunConfig) -> Result<SpaceSpec, CliError> {
    let name = config.space.as_deref().ok_or_else(|| CliError::usage("--space is required"))?;
    let (fam, arg) = match name.split_once(':') {
        Some((a, b)) => (a, Some(num::<usize>("space", b)?)),
        None => (name, None),
    };
    let family = match (fam, arg) {
        ("K", None) => Family::K,
        ("OC", None) => Family::OC,
        ("OM", None) => Family::OM,
        ("B", n) => Family::B(n.unwrap_or(0)),
        ("OMn", Some(n)) => Family::OMn(n),
        _ => return Err(CliError::usage(format!("unknown space {name:?} (K, OC, OM, B, B:<N>, OMn:<n>)"))),
    };
    let system = match (&config.weight, &config.preset) {
        (Some(w), _) => WeightSystem::power(parse(w).map_err(|e| CliError::expr(format!("--weight: {e}")))?),
        (None, Some(p)) => criteria::preset(p).map_err(|e| CliError::usage(e.to_string()))?.0.system,
        (None, None) if matches!(family, Family::B(_)) => WeightSystem::constant(),
        (None, None) => return Err(CliError::usage("--weight or --preset is required")),
    };
    let mut s = SpaceSpec::new(family, system);
    s.bounds = config.space_bounds()?;
    Ok(s)
}

fn cmd_membership(config: &RunConfig, c: &Classifier) -> Result<(i32, Value), CliError> {
    let f = smooth("f", config.f.first().map(String::as_str))?;
    let space = membership_space(config)?;
    let v = membership(&f, &space, c).map_err(CliError::expr)?;
    let code = match v.tag {
        MembershipTag::Holds => 0,
        MembershipTag::Fails => 1,
        MembershipTag::Inconclusive => 2,
    };
    let mut body = to_value(&v)?;
    body["space"] = to_value(&space)?;
    Ok((code, body))
}

fn cmd_lemma1(config: &RunConfig, c: &Classifier) -> Result<(i32, Value), CliError> {
    let phi = smooth("phi", config.phi.as_deref())?;
    let (p, n) = (config.p.unwrap_or(1), config.n.unwrap_or(1));
    let expr = |name: &str, t: &Option<String>| {
        t.as_deref().map(|s| parse(s).map_err(|e| CliError::expr(format!("--{name}: {e}")))).transpose()
    };
    let (v, vt, w) = (expr("v", &config.v)?, expr("vt", &config.vt)?, expr("w", &config.w)?);
    let mut setup = match (&config.preset, &v, &w) {
        (Some(name), _, _) => Lemma1Setup::preset(name, phi, p, n).map_err(|e| CliError::usage(e.to_string()))?,
        (None, Some(v), Some(w)) => {
            Lemma1Setup { v: v.clone(), v_tilde: v.clone(), w: w.clone(), phi, p, n }
        }
        _ => return Err(CliError::usage("give --preset or both --v and --w")),
    };
    if let Some(v) = v {
        setup.v_tilde = v.clone();
        setup.v = v;
    }
    if let Some(vt) = vt {
        setup.v_tilde = vt;
    }
    if let Some(w) = w {
        setup.w = w;
    }
    let report = verify_lemma1(&setup, &lemma1_samples(c.schedule.annuli), c).map_err(|e| CliError::usage(e.to_string()))?;
    let code = match report.status {
        Implication::Consistent => 0,
        Implication::Violated => 1,
        Implication::Inconclusive => 2,
    };
    let mut body = to_value(&report)?;
    body["weights"] = json!({"v": setup.v.to_string(), "vt": setup.v_tilde.to_string(), "w": setup.w.to_string()});
    Ok((code, body))
}

fn cmd_gorny(config: &RunConfig) -> Result<(i32, Value), CliError> {
    let (j, m) = (config.j.unwrap_or(1), config.m.unwrap_or(2));
    let size = config.corpus_size.unwrap_or(64);
    if size < 2 {
        return Err(CliError::usage("corpus size must be at least 2"));
    }
    let corpus = gorny_corpus(config.seed.unwrap_or(0), size);
    let report = verify_gorny(&corpus, j, m).map_err(|e| CliError::usage(e.to_string()))?;
    let code = if report.stable && report.violations == 0 { 0 } else { 1 };
    Ok((code, to_value(&report)?))
}

fn cmd_crosscheck(config: &RunConfig, c: &Classifier) -> Result<(i32, Value), CliError> {
    let phi = smooth("phi", config.phi.as_deref())?;
    let (s, t) = resolve_spaces(config)?;
    let part = part_for(&s, &t).map_err(|e| CliError::usage(e.to_string()))?;
    let texts: Vec<&str> =
        if config.f.is_empty() { REGRESSION_CORPUS.to_vec() } else { config.f.iter().map(String::as_str).collect() };
    let corpus: Vec<Expr> = texts
        .iter()
        .map(|f| parse_smooth(f).map_err(|e| CliError::expr(format!("--f {f:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    let report = crosscheck(&s.system, &t.system, &phi, part, &corpus, &config.criteria_bounds()?, c)
        .map_err(CliError::expr)?;
    let code = if report.discrepancies.is_empty() { 0 } else { 1 };
    Ok((code, to_value(&report)?))
}
