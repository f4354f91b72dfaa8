//! Command-line front end.
//!
//! A spec file is TOML with a `[field]` table, named `[extensions.NAME]`
//! tables and a list of `[[task]]` entries:
//!
//! ```toml
//! [field]
//! p = 2
//! vars = ["t", "u"]
//! prec = 12
//!
//! [extensions.wild]
//! kind = "as"
//! a = "u^-1"
//!
//! [[task]]
//! type = "verify"
//! ext = "wild"
//! samples = 20
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::cohomology::{cup_pair, CohClass};
use crate::error::Error;
use crate::extensions::{CyclicExt, ExtKind};
use crate::kgroup::{p_divisibility_check, KClass};
use crate::parse::{parse_elem, parse_symbol_sum, parse_tensor};
use crate::reciprocity::{symbol_identity_check, verify_iso, Certificate, SampleCounts};
use crate::sample::{random_nonzero, Shape};
use crate::tower::{FieldConfig, Tower};

#[derive(Parser, Debug)]
#[command(name = "hlcft", version, about = "Reciprocity computations over F_q((t_1))...((t_d))")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalOpts,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Spec file describing the field, extensions and tasks.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Seed for all sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Filtration bound M.
    #[arg(long, global = true)]
    pub level: Option<i64>,
    /// Number of random samples for sampled checks.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run every task of the spec file in order.
    Run,
    /// Check the isomorphism theorem for extensions.
    Verify {
        #[arg(long)]
        ext: Vec<String>,
    },
    /// Pair an extension's character with a symbol.
    Pair {
        #[arg(long)]
        ext: String,
        #[arg(long)]
        symbol: String,
    },
    /// Invariant of a top-degree class, `w (x) b_1 (x) ...` or `{b_0, ..., b_d}` for ℓ ≠ p.
    Inv {
        #[arg(long)]
        class: String,
        #[arg(long)]
        ell: Option<u32>,
    },
    /// Reduce and classify extensions.
    Classify {
        #[arg(long)]
        ext: Vec<String>,
    },
    /// Check the four-term K_2 symbol identity against probe characters.
    Identity {
        #[arg(long)]
        probe: Vec<String>,
        /// Level of the random arguments.
        #[arg(long)]
        over: Option<usize>,
    },
    /// Reduce random symbols of K_2 of the first level to p-th powers.
    Divisibility,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub field: FieldSection,
    #[serde(default)]
    pub extensions: BTreeMap<String, ExtSection>,
    #[serde(default)]
    pub task: Vec<TaskSection>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub p: u32,
    #[serde(default = "one")]
    pub f: u32,
    pub modulus: Option<Vec<u32>>,
    pub vars: Vec<String>,
    #[serde(default = "default_prec")]
    pub prec: i64,
}

fn one() -> u32 {
    1
}
fn default_prec() -> i64 {
    12
}

#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct ExtSection {
    pub kind: String,
    pub a: String,
    pub ell: Option<u32>,
    pub level: Option<usize>,
}

#[derive(Deserialize, Debug, Clone)]
#[serde(untagged)]
pub enum Names {
    One(String),
    Many(Vec<String>),
}

impl Names {
    fn list(&self) -> Vec<String> {
        match self {
            Names::One(s) => vec![s.clone()],
            Names::Many(v) => v.clone(),
        }
    }
}

#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    #[serde(rename = "type")]
    pub kind: String,
    pub ext: Option<Names>,
    pub symbol: Option<String>,
    pub class: Option<String>,
    pub ell: Option<u32>,
    pub samples: Option<usize>,
    pub level: Option<i64>,
    pub seed: Option<u64>,
    pub probes: Option<Vec<String>>,
    pub over: Option<usize>,
}

/// Failure categories, mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Malformed input (exit 2).
    Input(String),
    /// Precision or filtration refusal (exit 3).
    Refusal(String),
    /// Internal inconsistency (exit 1).
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Input(_) => 2,
            CliError::Refusal(_) => 3,
        }
    }

    fn from_lib(context: &str, e: Error) -> Self {
        let msg = format!("{context}: {e}");
        if e.is_refusal() {
            CliError::Refusal(msg)
        } else if matches!(e, Error::Inconsistent(_)) {
            CliError::Failure(msg)
        } else {
            CliError::Input(msg)
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Refusal(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

pub fn load_spec(path: &Path) -> Result<SpecFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

struct Session {
    spec: SpecFile,
    tower: Arc<Tower>,
    global: GlobalOpts,
}

struct TaskResult {
    json: Value,
    line: String,
    ok: bool,
}

impl Session {
    fn new(spec: SpecFile, global: GlobalOpts) -> Result<Self, CliError> {
        let f = &spec.field;
        let vars: Vec<&str> = f.vars.iter().map(String::as_str).collect();
        let mut cfg = FieldConfig::new(f.p, f.f, &vars, f.prec);
        cfg.modulus = f.modulus.clone();
        let tower = Tower::new(cfg).map_err(|e| CliError::from_lib("field", e))?;
        Ok(Session { spec, tower, global })
    }

    fn field_json(&self) -> Value {
        let f = &self.spec.field;
        json!({
            "p": f.p,
            "f": f.f,
            "modulus": self.tower.fq().modulus(),
            "vars": f.vars,
            "prec": f.prec,
        })
    }

    fn ext(&self, name: &str) -> Result<(CyclicExt, &ExtSection), CliError> {
        let sec = self
            .spec
            .extensions
            .get(name)
            .ok_or_else(|| CliError::Input(format!("unknown extension {name:?}")))?;
        let kind = match sec.kind.as_str() {
            "as" | "artin-schreier" => ExtKind::ArtinSchreier,
            "kummer" => ExtKind::Kummer,
            other => return Err(CliError::Input(format!("extension {name}: unknown kind {other:?}"))),
        };
        let level = sec.level.unwrap_or(self.tower.depth());
        let ctx = format!("extension {name}");
        if level > self.tower.depth() {
            return Err(CliError::Input(format!("{ctx}: level {level} exceeds the tower depth")));
        }
        let a = parse_elem(&self.tower, level, &sec.a).map_err(|e| CliError::from_lib(&ctx, e))?;
        let ell = sec.ell.unwrap_or(self.tower.p());
        let ext = CyclicExt::classify(&self.tower, level, kind, a, ell).map_err(|e| CliError::from_lib(&ctx, e))?;
        Ok((ext, sec))
    }

    fn ext_names(&self, task: &TaskSection) -> Vec<String> {
        task.ext.as_ref().map_or_else(|| self.spec.extensions.keys().cloned().collect(), Names::list)
    }

    fn seed(&self, task: &TaskSection) -> u64 {
        task.seed.or(self.global.seed).unwrap_or(0)
    }

    fn samples(&self, task: &TaskSection, default: usize) -> usize {
        task.samples.or(self.global.samples).unwrap_or(default)
    }

    fn bound(&self, task: &TaskSection) -> Option<i64> {
        task.level.or(self.global.level)
    }

    fn run_task(&self, task: &TaskSection) -> Result<Vec<TaskResult>, CliError> {
        match task.kind.as_str() {
            "verify" => self.verify(task),
            "classify" => self.classify(task),
            "pair" => self.pair(task).map(|r| vec![r]),
            "inv" => self.inv(task).map(|r| vec![r]),
            "identity" => self.identity(task).map(|r| vec![r]),
            "divisibility" => self.divisibility(task).map(|r| vec![r]),
            other => Err(CliError::Input(format!("unknown task type {other:?}"))),
        }
    }

    fn verify(&self, task: &TaskSection) -> Result<Vec<TaskResult>, CliError> {
        let mut out = Vec::new();
        for name in self.ext_names(task) {
            let (ext, sec) = self.ext(&name)?;
            let seed = self.seed(task);
            let samples = self.samples(task, 20);
            let bound = self.bound(task).unwrap_or(ext.conductor());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = verify_iso(&ext, samples, bound, &mut rng)
                .map_err(|e| CliError::from_lib(&format!("verify {name}"), e))?;
            let certificate = match &r.index_upper.certificate {
                Certificate::OrderP(c) => json!({
                    "case": r.index_upper.label(),
                    "samples": c.samples,
                    "consistent": c.consistent,
                    "additive": c.additive,
                    "source_surjective": c.source_surjective,
                }),
                _ => json!({ "case": r.index_upper.label() }),
            };
            let json = json!({
                "task": "verify",
                "ext": name,
                "inputs": { "kind": sec.kind, "a": sec.a, "ell": ext.ell(), "level": ext.level(), "samples": samples, "seed": seed },
                "ramification": ext.ramification().name(),
                "break": ext.break_i(),
                "bound": bound,
                "index": r.index_upper.bound,
                "certificate": certificate,
                "certificate_sound": r.index_upper.sound(),
                "witness": r.witness.render(),
                "witness_value": r.witness_value.to_string(),
                "psi_image_order": r.psi_image_order,
                "norm_kernel": counts(&r.norm_kernel),
                "filtration_kernel": counts(&r.filtration_kernel),
                "verdict": r.verdict(),
            });
            let line = format!(
                "verify {name:<12} {:<11} break {:<2} index {} ({}) witness {} -> {}  {}",
                ext.ramification().name(),
                ext.break_i(),
                r.index_upper.bound,
                r.index_upper.label(),
                r.witness.render(),
                r.witness_value,
                r.verdict()
            );
            out.push(TaskResult { json, line, ok: r.verified() });
        }
        Ok(out)
    }

    fn classify(&self, task: &TaskSection) -> Result<Vec<TaskResult>, CliError> {
        let mut out = Vec::new();
        for name in self.ext_names(task) {
            let (ext, sec) = self.ext(&name)?;
            let t = &self.tower;
            let k = ext.level();
            let data = ext.residue_extension_data().map_err(|e| CliError::from_lib(&format!("classify {name}"), e))?;
            let json = json!({
                "task": "classify",
                "ext": name,
                "inputs": { "kind": sec.kind, "a": sec.a, "ell": ext.ell(), "level": k },
                "reduced": t.render(k, ext.a()),
                "polynomial": ext.defining_polynomial(),
                "ramification": ext.ramification().name(),
                "break": ext.break_i(),
                "conductor": ext.conductor(),
                "pi_l": ext.render_l(ext.pi_l()),
                "b": ext.b().map(|b| t.render(k, b)),
                "residue_field": data.description,
                "residue_degree": data.residue_degree,
            });
            let line = format!(
                "classify {name:<12} {} : {}, break {}, residue field {}",
                ext.defining_polynomial(),
                ext.ramification().name(),
                ext.break_i(),
                data.description
            );
            out.push(TaskResult { json, line, ok: true });
        }
        Ok(out)
    }

    fn pair(&self, task: &TaskSection) -> Result<TaskResult, CliError> {
        let names = self.ext_names(task);
        let [name] = names.as_slice() else {
            return Err(CliError::Input("pair needs exactly one extension".into()));
        };
        let (ext, _) = self.ext(name)?;
        let src = task.symbol.as_deref().ok_or_else(|| CliError::Input("pair needs a symbol".into()))?;
        let ctx = format!("pair {name}");
        let terms = parse_symbol_sum(&self.tower, ext.level(), src).map_err(|e| CliError::from_lib(&ctx, e))?;
        let xi = KClass::from_terms(&self.tower, ext.level(), ext.level(), ext.ell(), terms)
            .map_err(|e| CliError::from_lib(&ctx, e))?;
        let bound = self.bound(task).unwrap_or(ext.conductor());
        let v = cup_pair(&ext, &xi, bound).map_err(|e| CliError::from_lib(&ctx, e))?;
        Ok(TaskResult {
            json: json!({ "task": "pair", "ext": name, "inputs": { "symbol": src }, "bound": bound, "value": v.to_string() }),
            line: format!("pair {name} {src} = {v} (M = {bound})"),
            ok: true,
        })
    }

    fn inv(&self, task: &TaskSection) -> Result<TaskResult, CliError> {
        let src = task.class.as_deref().ok_or_else(|| CliError::Input("inv needs a class".into()))?;
        let t = &self.tower;
        let d = t.depth();
        let ell = task.ell.unwrap_or(t.p());
        let lib = |e| CliError::from_lib("inv", e);
        let class = if ell == t.p() {
            let mut factors = parse_tensor(t, d, src).map_err(lib)?;
            let w = factors.remove(0);
            CohClass::make_class(t, d, w, factors).map_err(lib)?
        } else {
            let terms = parse_symbol_sum(t, d, src).map_err(lib)?;
            CohClass::from_symbols(t, d, ell, terms).map_err(lib)?
        };
        let v = class.inv().map_err(lib)?;
        Ok(TaskResult {
            json: json!({ "task": "inv", "inputs": { "class": src, "ell": ell }, "value": v.to_string() }),
            line: format!("inv {src} = {v}"),
            ok: true,
        })
    }

    fn identity(&self, task: &TaskSection) -> Result<TaskResult, CliError> {
        let t = &self.tower;
        let over = task.over.unwrap_or(t.depth());
        let names: Vec<String> = match &task.probes {
            Some(p) => p.clone(),
            None => self.spec.extensions.keys().cloned().collect(),
        };
        let mut probes = Vec::new();
        for n in &names {
            let (e, _) = self.ext(n)?;
            if e.level() == 2 && e.ell() == t.p() {
                probes.push(e);
            }
        }
        if probes.is_empty() || over == 0 || over > 2 {
            return Err(CliError::Input("identity needs level-2 probe characters and arguments of level 1 or 2".into()));
        }
        let samples = self.samples(task, 100);
        let seed = self.seed(task);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = Shape::new(-1, 2, 2);
        let mut tally = SampleCounts::default();
        let mut skipped = 0;
        let mut agree = 0;
        while tally.passed + tally.failed + tally.unresolved < samples {
            let a = random_nonzero(t, over, shape, &mut rng);
            let b = random_nonzero(t, over, shape, &mut rng);
            match symbol_identity_check(t, over, &a, &b, t.p(), &probes) {
                Ok(r) => {
                    if r.normal_forms_agree == Some(true) {
                        agree += 1;
                    }
                    if r.holds() {
                        tally.passed += 1
                    } else {
                        tally.failed += 1
                    }
                }
                Err(Error::Precondition(_)) => skipped += 1,
                Err(e) if e.is_refusal() => tally.unresolved += 1,
                Err(e) => return Err(CliError::from_lib("identity", e)),
            }
        }
        let ok = tally.all_passed();
        Ok(TaskResult {
            json: json!({
                "task": "identity",
                "inputs": { "samples": samples, "seed": seed, "over": over, "probes": names },
                "pairs": counts(&tally),
                "normal_forms_agree": agree,
                "skipped_preconditions": skipped,
                "holds": ok,
            }),
            line: format!(
                "identity over level {over}: {} / {samples} pairs vanish against {} probes ({skipped} skipped)",
                tally.passed,
                probes.len()
            ),
            ok,
        })
    }

    fn divisibility(&self, task: &TaskSection) -> Result<TaskResult, CliError> {
        let samples = self.samples(task, 100);
        let seed = self.seed(task);
        let bound = self.bound(task).unwrap_or(8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = p_divisibility_check(&self.tower, samples, bound, &mut rng);
        let ok = r.reduced == r.samples;
        Ok(TaskResult {
            json: json!({
                "task": "divisibility",
                "inputs": { "samples": samples, "seed": seed, "bound": bound },
                "reduced": r.reduced,
                "inconclusive": r.inconclusive,
                "failures": r.failures,
            }),
            line: format!("divisibility: {} / {} symbols reduced to p-th powers", r.reduced, r.samples),
            ok,
        })
    }
}

fn counts(c: &SampleCounts) -> Value {
    json!({ "passed": c.passed, "failed": c.failed, "unresolved": c.unresolved })
}

/// A finished run: the JSON report and the human-readable lines.
pub struct Outcome {
    pub report: Value,
    pub lines: Vec<String>,
    pub all_ok: bool,
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli.global.spec.as_ref().ok_or_else(|| CliError::Input("--spec is required".into()))?;
    let spec = load_spec(path)?;
    let session = Session::new(spec, cli.global.clone())?;
    let tasks: Vec<TaskSection> = match &cli.command {
        Command::Run => {
            if session.spec.task.is_empty() {
                return Err(CliError::Input("spec file has no tasks".into()));
            }
            session.spec.task.clone()
        }
        Command::Verify { ext } => vec![TaskSection { kind: "verify".into(), ext: names(ext), ..Default::default() }],
        Command::Classify { ext } => vec![TaskSection { kind: "classify".into(), ext: names(ext), ..Default::default() }],
        Command::Pair { ext, symbol } => vec![TaskSection {
            kind: "pair".into(),
            ext: Some(Names::One(ext.clone())),
            symbol: Some(symbol.clone()),
            ..Default::default()
        }],
        Command::Inv { class, ell } => {
            vec![TaskSection { kind: "inv".into(), class: Some(class.clone()), ell: *ell, ..Default::default() }]
        }
        Command::Identity { probe, over } => vec![TaskSection {
            kind: "identity".into(),
            probes: (!probe.is_empty()).then(|| probe.clone()),
            over: *over,
            ..Default::default()
        }],
        Command::Divisibility => vec![TaskSection { kind: "divisibility".into(), ..Default::default() }],
    };
    let mut results = Vec::new();
    let mut lines = Vec::new();
    let mut all_ok = true;
    for task in &tasks {
        for r in session.run_task(task)? {
            all_ok &= r.ok;
            results.push(r.json);
            lines.push(r.line);
        }
    }
    let report = json!({
        "tool": "hlcft",
        "version": env!("CARGO_PKG_VERSION"),
        "field": session.field_json(),
        "results": results,
    });
    Ok(Outcome { report, lines, all_ok })
}

fn names(v: &[String]) -> Option<Names> {
    (!v.is_empty()).then(|| Names::Many(v.to_vec()))
}

/// Runs the command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.report).expect("reports serialize") + "\n";
            match cli.global.json.as_deref() {
                Some(p) if p == Path::new("-") => print!("{text}"),
                Some(p) => {
                    if let Err(e) = std::fs::write(p, &text) {
                        eprintln!("error: {}: {e}", p.display());
                        return 2;
                    }
                    out.lines.iter().for_each(|l| println!("{l}"));
                }
                None => out.lines.iter().for_each(|l| println!("{l}")),
            }
            if out.all_ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
