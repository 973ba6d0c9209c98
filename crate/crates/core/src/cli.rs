//! Command-line front end. `run` is the whole program minus process exit,
//! so it can be driven from tests.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::alba::run_alba;
use crate::classifier::{classify_inequality, is_crypto_inductive, Label};
use crate::corpus::builtin_signature;
use crate::inverse::{inverse_alba, inverse_from_form, proper_connectives, InverseError};
use crate::kracht::{inductive_to_kracht_traced, kracht_shape, KrachtError};
use crate::oracle::{battery_sized, compare, FiniteDle, Formula, OracleError, BATTERY_ENV, RANDOM_MODELS};
use crate::signature::{Signature, SignatureError};
use crate::syntax::{parse_ineq, parse_meta, pretty_term, print_ineq, print_meta, Ineq, ParseError};
use crate::trace::Trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_EQUIVALENT: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_CLASSIFICATION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("signature: {0}")]
    Signature(#[from] SignatureError),
    #[error("parse: {0}")]
    Parse(#[from] ParseError),
    #[error("input: {0}")]
    Input(String),
    #[error("{0}")]
    Classification(String),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Classification(_) => EXIT_CLASSIFICATION,
            _ => EXIT_PARSE,
        }
    }
}

impl From<KrachtError> for CliError {
    fn from(e: KrachtError) -> Self {
        CliError::Classification(e.to_string())
    }
}

impl From<InverseError> for CliError {
    fn from(e: InverseError) -> Self {
        CliError::Classification(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    #[default]
    Text,
    /// One JSON record per line.
    Structured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Label and witnesses of an inequality.
    Classify,
    /// Forward reduction to a pure formula.
    Alba,
    /// Kracht form of a definite inductive inequality.
    ToKracht,
    /// Inverse correspondence from a Kracht formula.
    Inverse,
    /// Inequality to Kracht form and back, with oracle verdicts.
    Roundtrip,
    /// Compares two formulas on the battery or on given models.
    Check,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "dle-correspond", version, about = "Correspondence for distributive lattice expansion logics")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Signature file, or one of `modal`, `tense`, `lambek`.
    #[arg(long, global = true, default_value = "modal")]
    pub sig: String,
    /// Input file; one formula per non-empty line.
    #[arg(long = "in", global = true)]
    pub input: Option<PathBuf>,
    /// Inline formula. Repeat for `check`.
    #[arg(long, global = true)]
    pub expr: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = Emit::Text)]
    pub emit: Emit,
    #[arg(long, global = true)]
    pub trace: bool,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Number of random models in the battery (default from the environment).
    #[arg(long, global = true)]
    pub random_models: Option<usize>,
    /// Model files for `check`, replacing the battery.
    #[arg(long, global = true)]
    pub model: Vec<PathBuf>,
    /// `inverse`: accept Kracht-shaped input that fails the polarity condition.
    #[arg(long, global = true)]
    pub lenient: bool,
}

/// Exit code and everything written to stdout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

pub fn load_signature(arg: &str) -> Result<Signature, CliError> {
    let path = PathBuf::from(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{arg}: {e}")))?;
        return Ok(Signature::parse(&text)?);
    }
    builtin_signature(arg).ok_or_else(|| CliError::Io(format!("no signature file or builtin named `{arg}`")))
}

fn inputs(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let mut out = cfg.expr.clone();
    if let Some(p) = &cfg.input {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        out.extend(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with("//")).map(String::from));
    }
    Ok(out)
}

fn single(cfg: &RunConfig) -> Result<String, CliError> {
    let mut v = inputs(cfg)?;
    match v.len() {
        1 => Ok(v.remove(0)),
        n => Err(CliError::Input(format!("expected one formula, got {n}"))),
    }
}

fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, CliError> {
    match parse_ineq(text, sig) {
        Ok(i) => Ok(Formula::Ineq(i)),
        Err(e) => parse_meta(text, sig).map(Formula::Meta).map_err(|_| e.into()),
    }
}

fn pretty_ineq(i: &Ineq) -> String {
    format!("{} ≤ {}", pretty_term(&i.lhs), pretty_term(&i.rhs))
}

fn models(cfg: &RunConfig, sig: &Signature) -> Result<Vec<FiniteDle>, CliError> {
    if !cfg.model.is_empty() {
        return cfg
            .model
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Ok(FiniteDle::load(&text, sig)?)
            })
            .collect();
    }
    let random = cfg
        .random_models
        .or_else(|| std::env::var(BATTERY_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(RANDOM_MODELS);
    Ok(battery_sized(sig, cfg.seed, random))
}

/// Collects output in either format.
struct Report {
    emit: Emit,
    out: String,
}

impl Report {
    fn line(&mut self, kind: &str, text: impl AsRef<str>, record: Value) {
        match self.emit {
            Emit::Text => {
                let _ = writeln!(self.out, "{}", text.as_ref());
            }
            Emit::Structured => {
                let mut r = json!({ "kind": kind });
                if let (Value::Object(a), Value::Object(b)) = (&mut r, record) {
                    a.extend(b);
                }
                let _ = writeln!(self.out, "{r}");
            }
        }
    }

    fn trace(&mut self, t: &Trace, on: bool) {
        if !on {
            return;
        }
        match self.emit {
            Emit::Text => self.out.push_str(&t.to_text()),
            Emit::Structured => {
                for s in &t.steps {
                    self.line("trace", "", serde_json::to_value(s).expect("trace step serializes"));
                }
            }
        }
    }
}

pub fn run(cfg: &RunConfig) -> Outcome {
    let mut rep = Report { emit: cfg.emit, out: String::new() };
    let code = match dispatch(cfg, &mut rep) {
        Ok(code) => code,
        Err(e) => {
            rep.line("error", format!("error: {e}"), json!({ "message": e.to_string(), "code": e.exit_code() }));
            e.exit_code()
        }
    };
    Outcome { code, stdout: rep.out }
}

fn dispatch(cfg: &RunConfig, rep: &mut Report) -> Result<i32, CliError> {
    let sig = load_signature(&cfg.sig)?;
    match cfg.command {
        Command::Classify => cmd_classify(cfg, &sig, rep),
        Command::Alba => cmd_alba(cfg, &sig, rep),
        Command::ToKracht => cmd_to_kracht(cfg, &sig, rep),
        Command::Inverse => cmd_inverse(cfg, &sig, rep),
        Command::Roundtrip => cmd_roundtrip(cfg, &sig, rep),
        Command::Check => cmd_check(cfg, &sig, rep),
    }
}

fn cmd_classify(cfg: &RunConfig, sig: &Signature, rep: &mut Report) -> Result<i32, CliError> {
    let i = parse_ineq(&single(cfg)?, sig)?;
    if i.is_pure() || i.leaves().iter().any(|l| !matches!(l, crate::syntax::Leaf::Var(_))) {
        rep.line("classification", "not an L-inequality (pure variables present)", json!({ "label": null, "pure": true }));
        return Ok(EXIT_OK);
    }
    let c = classify_inequality(&i, sig);
    let proper = proper_connectives(&i, sig);
    let mut text = c.label.to_string();
    if let Some(a) = c.best() {
        let _ = write!(text, "; {}", a.witness);
    }
    let crypto = if proper.is_empty() {
        None
    } else {
        let ok = is_crypto_inductive(&i, sig).is_some();
        let _ = write!(text, " in L*; {}", if ok { "crypto-inductive" } else { "not crypto-inductive" });
        Some(ok)
    };
    rep.line(
        "classification",
        text,
        json!({
            "input": print_ineq(&i),
            "label": c.label.to_string(),
            "proper": proper,
            "crypto_inductive": crypto,
        }),
    );
    for a in &c.analyses {
        rep.line(
            "witness",
            format!("  {} [{}{}] skeleton {}", a.witness, a.label, if a.definite { ", definite" } else { "" }, print_ineq(&a.skeleton)),
            json!({
                "witness": a.witness.to_string(),
                "label": a.label.to_string(),
                "definite": a.definite,
                "canonical": a.canonical,
                "skeleton": print_ineq(&a.skeleton),
            }),
        );
    }
    Ok(EXIT_OK)
}

fn cmd_alba(cfg: &RunConfig, sig: &Signature, rep: &mut Report) -> Result<i32, CliError> {
    let i = parse_ineq(&single(cfg)?, sig)?;
    let run = run_alba(&i, sig).map_err(|e| CliError::Classification(e.to_string()))?;
    rep.trace(&run.trace, cfg.trace);
    rep.line("alba", print_meta(&run.output), json!({ "input": print_ineq(&i), "output": print_meta(&run.output) }));
    Ok(EXIT_OK)
}

fn cmd_to_kracht(cfg: &RunConfig, sig: &Signature, rep: &mut Report) -> Result<i32, CliError> {
    let i = parse_ineq(&single(cfg)?, sig)?;
    let (k, t) = inductive_to_kracht_traced(&i, sig)?;
    rep.trace(&t, cfg.trace);
    let m = print_meta(&k.to_meta());
    rep.line("kracht", &m, json!({ "input": print_ineq(&i), "kracht": m }));
    Ok(EXIT_OK)
}

fn cmd_inverse(cfg: &RunConfig, sig: &Signature, rep: &mut Report) -> Result<i32, CliError> {
    let m = parse_meta(&single(cfg)?, sig)?;
    let r = if cfg.lenient { inverse_from_form(&kracht_shape(&m, sig)?, sig)? } else { inverse_alba(&m, sig)? };
    rep.trace(&r.trace, cfg.trace);
    rep.line("kracht", format!("kracht:    {}", r.kracht), json!({ "kracht": r.kracht.to_string() }));
    rep.line("vss", format!("vss:       {}", pretty_ineq(&r.vss)), json!({ "vss": print_ineq(&r.vss) }));
    rep.line(
        "inductive",
        format!("inductive: {}", pretty_ineq(&r.inductive)),
        json!({ "inductive": print_ineq(&r.inductive), "flags": r.flags }),
    );
    if !r.flags.is_empty() {
        rep.line("flags", format!("flags:     {}", r.flags.join(", ")), json!({ "flags": r.flags }));
    }
    Ok(EXIT_OK)
}

fn cmd_roundtrip(cfg: &RunConfig, sig: &Signature, rep: &mut Report) -> Result<i32, CliError> {
    let x = parse_ineq(&single(cfg)?, sig)?;
    if x.is_pure() || !proper_connectives(&x, sig).is_empty() || x.leaves().iter().any(|l| !matches!(l, crate::syntax::Leaf::Var(_))) {
        return Err(CliError::Classification(format!("not an L-inequality: {}", print_ineq(&x))));
    }
    let c = classify_inequality(&x, sig);
    if c.label < Label::Inductive {
        return Err(CliError::Classification(format!("not inductive: {}", print_ineq(&x))));
    }
    let ms = models(cfg, sig)?;
    rep.line(
        "input",
        format!("input:     {}  [{}]", pretty_ineq(&x), c.label),
        json!({ "input": print_ineq(&x), "label": c.label.to_string(), "seed": cfg.seed, "models": ms.len() }),
    );
    let run = run_alba(&x, sig).map_err(|e| CliError::Classification(e.to_string()))?;
    let (k, kt) = inductive_to_kracht_traced(&x, sig)?;
    let inv = inverse_alba(&k.to_meta(), sig)?;
    let mut trace = kt;
    trace.extend(inv.trace.clone());
    rep.trace(&trace, cfg.trace);

    let base = Formula::Ineq(x.clone());
    let stages = [
        ("alba", print_meta(&run.output), Formula::Meta(run.output.clone())),
        ("kracht", print_meta(&k.to_meta()), Formula::Meta(k.to_meta())),
        ("quasi", inv.quasi.to_string(), Formula::Meta(inv.quasi.to_meta())),
        ("vss", print_ineq(&inv.vss), Formula::Ineq(inv.vss.clone())),
        ("inductive", print_ineq(&inv.inductive), Formula::Ineq(inv.inductive.clone())),
    ];
    let mut all = true;
    for (name, text, f) in stages {
        let verdicts = compare(&ms, &base, &f)?;
        let ok = verdicts.iter().all(|v| v.left == v.right);
        all &= ok;
        let failing: Vec<&str> = verdicts.iter().filter(|v| v.left != v.right).map(|v| v.model.as_str()).collect();
        rep.line(
            "stage",
            format!("{name:<10} {text}  [{}]", if ok { "equivalent" } else { "NOT equivalent" }),
            json!({ "stage": name, "formula": text, "equivalent": ok, "separating": failing }),
        );
    }
    if !inv.flags.is_empty() {
        rep.line("flags", format!("flags:     {}", inv.flags.join(", ")), json!({ "flags": inv.flags }));
    }
    rep.line("summary", if all { "all stages equivalent" } else { "equivalence failure" }, json!({ "equivalent": all }));
    Ok(if all { EXIT_OK } else { EXIT_NOT_EQUIVALENT })
}

fn cmd_check(cfg: &RunConfig, sig: &Signature, rep: &mut Report) -> Result<i32, CliError> {
    let texts = inputs(cfg)?;
    if texts.len() != 2 {
        return Err(CliError::Input(format!("check expects two formulas, got {}", texts.len())));
    }
    let a = parse_formula(&texts[0], sig)?;
    let b = parse_formula(&texts[1], sig)?;
    let ms = models(cfg, sig)?;
    let verdicts = compare(&ms, &a, &b)?;
    for v in &verdicts {
        let mark = if v.left == v.right { "" } else { "  <- separates" };
        rep.line(
            "model",
            format!("{:<10} {:<5} {:<5}{mark}", v.model, v.left, v.right),
            json!({ "model": v.model, "left": v.left, "right": v.right }),
        );
    }
    let all = verdicts.iter().all(|v| v.left == v.right);
    rep.line(
        "summary",
        if all { "equivalent on all models".to_string() } else { "not equivalent".to_string() },
        json!({ "equivalent": all, "models": verdicts.len() }),
    );
    Ok(if all { EXIT_OK } else { EXIT_NOT_EQUIVALENT })
}
