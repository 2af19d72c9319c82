//! Command-line front end. Every command builds a JSON payload; `--format
//! table` renders that same payload.
//!
//! Exit codes: 0 success or positive verdict, 1 negative verdict, 2 input or
//! parameter error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::dieudonne::{
    exterior_power, gm_module, honda_module, make_na, top_exterior_is_gm, validate, DieudonneModule,
    ModuleData,
};
use crate::error::{Error, Result};
use crate::fgl::{self, detect_gm, is_degenerate, westerland_solve, FglData, TruncatedFGL};
use crate::hopfring::{f0_nonnilpotence, verify_xpzero, Verdict as CertVerdict};
use crate::padic::make_ring;

#[derive(Debug, Parser)]
#[command(name = "chromalg", version, about = "Exact algebra for Dieudonne modules, formal group laws and Hopf-ring certificates")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    pub format: Format,
    /// TOML file with defaults for p, d, N and D.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the payload here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the Dieudonne module axioms.
    Validate { module: PathBuf },
    /// Exterior power of a Dieudonne module.
    Exterior {
        #[arg(long)]
        m: usize,
        module: PathBuf,
    },
    /// Is the top exterior power the Dieudonne module of the multiplicative group?
    DetectGm { module: PathBuf },
    /// Truncated formal group law commands.
    Fgl {
        #[command(subcommand)]
        command: FglCommand,
    },
    /// Hopf-ring verifiers.
    Hopf {
        #[command(subcommand)]
        command: HopfCommand,
    },
    /// Write standard input files.
    Generate {
        #[command(subcommand)]
        command: GenerateCommand,
    },
}

#[derive(Debug, Args)]
pub struct FglArgs {
    pub law: PathBuf,
    /// Truncation degree (defaults to the law's own).
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum FglCommand {
    /// The p-series `[p](x)`.
    Pseries(FglArgs),
    /// Height read off the p-series.
    Height(FglArgs),
    /// All solutions of `f(F(x, y)) = f(x) + f(y) + f(x) f(y)`.
    Westerland {
        #[command(flatten)]
        args: FglArgs,
        /// Maximum number of solutions listed.
        #[arg(long, default_value_t = 256)]
        limit: usize,
    },
    /// Detect an isomorphism with the multiplicative law.
    Detect(FglArgs),
}

#[derive(Debug, Subcommand)]
pub enum HopfCommand {
    /// Certificate that `u^{*p} = 0` for the bottom class.
    VerifyXpzero {
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        h: u32,
        #[arg(long)]
        n: u32,
    },
    /// Powers `f^{p^m}` in `F_p[v^{+-1}][f]/(f^p - (-1)^{h-1} v f)`.
    F0 {
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        h: u32,
        #[arg(long)]
        m: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModuleKind {
    Gm,
    Na,
    Honda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawKind {
    Gm,
    Ga,
    Honda,
}

#[derive(Debug, Subcommand)]
pub enum GenerateCommand {
    /// A Dieudonne module over `W(F_{p^d})/p^N`.
    Module {
        #[arg(value_enum)]
        kind: ModuleKind,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        d: Option<usize>,
        /// Precision `N`.
        #[arg(long = "prec")]
        prec: Option<u32>,
        /// Twist for `na`.
        #[arg(long, allow_hyphen_values = true)]
        a: Option<i64>,
        /// Height for `honda`.
        #[arg(long)]
        height: Option<usize>,
    },
    /// A truncated formal group law.
    Fgl {
        #[arg(value_enum)]
        kind: LawKind,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        height: Option<u32>,
    },
}

/// Defaults read from `--config`.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub p: Option<u64>,
    pub d: Option<usize>,
    #[serde(rename = "N")]
    pub prec: Option<u32>,
    #[serde(rename = "D")]
    pub degree: Option<usize>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        toml::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
    }
}

/// Result of a command: a payload and whether the verdict was positive.
struct Outcome {
    payload: Value,
    positive: bool,
}

impl Outcome {
    fn ok(payload: Value) -> Self {
        Outcome { payload, positive: true }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn load_module(path: &Path) -> Result<DieudonneModule> {
    let data: ModuleData = load_json(path)?;
    let ring = make_ring(data.ring.p, data.ring.d, data.ring.n)?;
    DieudonneModule::from_data(data, ring)
}

fn load_law(args: &FglArgs) -> Result<(TruncatedFGL, usize)> {
    let data: FglData = load_json(&args.law)?;
    let law = TruncatedFGL::from_data(&data)?;
    let degree = args.degree.unwrap_or(law.degree());
    if degree > law.degree() {
        return Err(Error::DegreeTooSmall(format!(
            "law is known to degree {}, asked for {degree}",
            law.degree()
        )));
    }
    Ok((law.truncate(degree)?, degree))
}

fn series_json(s: &fgl::TruncatedSeries) -> Value {
    json!({ "terms": s.to_data(), "render": s.render() })
}

fn need<T>(name: &str, flag: Option<T>, config: Option<T>) -> Result<T> {
    flag.or(config).ok_or_else(|| Error::Malformed(format!("missing parameter {name} (flag or config)")))
}

fn dispatch(cli: &Cli, config: &Config) -> Result<Outcome> {
    match &cli.command {
        Command::Validate { module } => {
            let report = validate(&load_module(module)?);
            let positive = report.passed();
            let mut payload = serde_json::to_value(&report).expect("report serializes");
            payload["verdict"] = json!(if positive { "PASS" } else { "FAIL" });
            Ok(Outcome { payload, positive })
        }
        Command::Exterior { m, module } => {
            let ext = exterior_power(&load_module(module)?, *m)?;
            Ok(Outcome::ok(serde_json::to_value(ext.to_data()).expect("module serializes")))
        }
        Command::DetectGm { module } => {
            let (verdict, invariant, top) = top_exterior_is_gm(&load_module(module)?)?;
            let positive = verdict.multiplicative;
            let payload = json!({
                "verdict": if positive { "ISO" } else { "NOT-ISO" },
                "reason": verdict.reason,
                "alpha": invariant.alpha,
                "alpha_is_unit": invariant.is_unit,
                "witness": verdict.witness,
                "precision": verdict.precision,
                "experimental": verdict.experimental,
                "top": top.to_data(),
            });
            Ok(Outcome { payload, positive })
        }
        Command::Fgl { command } => fgl_command(command),
        Command::Hopf { command } => match command {
            HopfCommand::VerifyXpzero { p, h, n } => {
                let p = need("p", *p, config.p)?;
                let cert = verify_xpzero(p, *h, *n)?;
                Ok(Outcome { payload: cert.to_json(), positive: cert.verdict == CertVerdict::Verified })
            }
            HopfCommand::F0 { p, h, m } => {
                let p = need("p", *p, config.p)?;
                let report = f0_nonnilpotence(p, *h, *m)?;
                let positive = report.passed();
                Ok(Outcome { payload: serde_json::to_value(&report).expect("report serializes"), positive })
            }
        },
        Command::Generate { command } => generate(command, config),
    }
}

fn fgl_command(command: &FglCommand) -> Result<Outcome> {
    match command {
        FglCommand::Pseries(args) => {
            let (law, degree) = load_law(args)?;
            Ok(Outcome::ok(json!({ "degree": degree, "p_series": series_json(&law.p_series()) })))
        }
        FglCommand::Height(args) => {
            let (law, degree) = load_law(args)?;
            let height = law.height()?;
            Ok(Outcome::ok(json!({ "degree": degree, "height": height, "render": height.to_string() })))
        }
        FglCommand::Westerland { args, limit } => {
            let (law, degree) = load_law(args)?;
            let tree = westerland_solve(&law, degree)?;
            let sols = tree.solutions();
            let listed: Vec<Value> = sols
                .iter()
                .take(*limit)
                .map(|f| {
                    let mut v = series_json(f);
                    v["degenerate"] = json!(!f.is_zero() && is_degenerate(f));
                    v
                })
                .collect();
            Ok(Outcome::ok(json!({
                "degree": degree,
                "count": sols.len(),
                "free_degrees": tree.free_degrees(),
                "truncated": sols.len() > *limit,
                "solutions": listed,
            })))
        }
        FglCommand::Detect(args) => {
            let (law, degree) = load_law(args)?;
            let det = detect_gm(&law, degree)?;
            let witness = det.witness.as_ref().map(|(f, fac)| {
                json!({
                    "f": series_json(f),
                    "frobenius_power": fac.n,
                    "g": series_json(&fac.g),
                    "g_untwisted": series_json(&fac.g_untwisted),
                    "experimental": fac.experimental,
                })
            });
            Ok(Outcome {
                positive: det.is_iso(),
                payload: json!({
                    "verdict": det.verdict.to_string(),
                    "solutions": det.solutions,
                    "degenerate": det.degenerate,
                    "witness": witness,
                }),
            })
        }
    }
}

fn generate(command: &GenerateCommand, config: &Config) -> Result<Outcome> {
    match command {
        GenerateCommand::Module { kind, p, d, prec, a, height } => {
            let p = need("p", *p, config.p)?;
            let d = d.or(config.d).unwrap_or(1);
            let prec = need("N", *prec, config.prec)?;
            let ring = make_ring(p, d, prec)?;
            let module = match kind {
                ModuleKind::Gm => gm_module(&ring),
                ModuleKind::Na => make_na(&ring, &ring.from_int(need("a", *a, None)?))?,
                ModuleKind::Honda => honda_module(&ring, need("height", *height, None)?)?,
            };
            Ok(Outcome::ok(serde_json::to_value(module.to_data()).expect("module serializes")))
        }
        GenerateCommand::Fgl { kind, p, d, degree, height } => {
            let p = need("p", *p, config.p)?;
            let d = d.or(config.d).unwrap_or(1);
            let degree = degree.or(config.degree).unwrap_or((p as usize).pow(3));
            let law = match kind {
                LawKind::Gm => fgl::gm_law(&fgl::field(p, d)?, degree)?,
                LawKind::Ga => fgl::ga_law(&fgl::field(p, d)?, degree)?,
                LawKind::Honda => fgl::honda_law(p, need("height", *height, None)?, degree)?,
            };
            Ok(Outcome::ok(serde_json::to_value(law.to_data()).expect("law serializes")))
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn table_into(v: &Value, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(map) => {
            let width = map.keys().map(String::len).max().unwrap_or(0);
            for (k, x) in map {
                match x {
                    Value::Object(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        table_into(x, indent + 2, out);
                    }
                    Value::Array(items) if items.iter().any(|i| i.is_object()) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        for (i, item) in items.iter().enumerate() {
                            out.push_str(&format!("{pad}  [{i}]\n"));
                            table_into(item, indent + 4, out);
                        }
                    }
                    _ => out.push_str(&format!("{pad}{k:<width$}  {}\n", scalar(x))),
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

/// Plain-text rendering of a JSON payload.
pub fn render_table(v: &Value) -> String {
    let mut out = String::new();
    table_into(v, 0, &mut out);
    out
}

fn render(format: Format, payload: &Value) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(payload).expect("payload serializes");
            s.push('\n');
            s
        }
        Format::Table => render_table(payload),
    }
}

/// Runs one invocation and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let config = match cli.config.as_deref().map(Config::load).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    match dispatch(&cli, &config) {
        Ok(outcome) => {
            let text = render(cli.format, &outcome.payload);
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &text).map_err(|e| e.to_string()),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                return 2;
            }
            if outcome.positive {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}
