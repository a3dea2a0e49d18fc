//! `safelam` command-line tool.
//!
//! Exit codes: 0 ok / equal, 1 parse error, 2 type error, 3 budget
//! exceeded, 4 internal inconsistency, 10 not equal / not equivalent.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use safelam::church::{decode_bool, tower, Alphabet, ChurchError};
use safelam::compiler::{build_b, certificate, compile};
use safelam::infer::{infer, infer_at, InferError, TypeCheckError};
use safelam::normalize::{
    beta_convertible, beta_eta_convertible, eta_reduce, normalize_parallel, Budget, NormalizeError, TraceRow,
};
use safelam::safety::{check_hls, check_long_safe, check_safe};
use safelam::starfree::{first_difference, member, nonempty_up_to, parse_expr, words_up_to, StarFreeError};
use safelam::{parse_term, ParseError, Ty, TypeStore};

/// Types whose tree is larger than this are shown only as DAG node lists.
const MAX_TYPE_TEXT: u64 = 4096;

#[derive(Parser)]
#[command(name = "safelam", version, about = "Simply typed λ-calculus toolkit and star-free reduction compiler")]
struct Cli {
    #[command(flatten)]
    cfg: Config,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Config {
    /// Step budget for normalization.
    #[arg(long = "budget", global = true, env = "SAFELAM_STEP_BUDGET", default_value_t = safelam::normalize::DEFAULT_STEP_BUDGET)]
    steps: u64,
    /// Size budget (term nodes) for normalization.
    #[arg(long, global = true, env = "SAFELAM_SIZE_BUDGET", default_value_t = safelam::normalize::DEFAULT_SIZE_BUDGET)]
    size_budget: u64,
    /// Maximum number of words a star-free query may enumerate.
    #[arg(long, global = true, env = "SAFELAM_ENUM_CAP", default_value_t = safelam::starfree::DEFAULT_ENUM_CAP)]
    enum_cap: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Safe,
    LongSafe,
    Hls,
}

#[derive(Subcommand)]
enum Command {
    /// β-normal form (βη with --eta) of a typable term.
    Normalize {
        term: String,
        #[arg(long)]
        eta: bool,
        /// Print size, height and maximal redex degree after each parallel step.
        #[arg(long)]
        trace: bool,
    },
    /// Decide β- (or βη-) convertibility of two terms.
    Convert {
        left: String,
        right: String,
        #[arg(long)]
        eta: bool,
    },
    /// Check a term at a type for safety.
    CheckSafety {
        term: String,
        #[arg(value_name = "TYPE")]
        ty: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Safe)]
        mode: ModeArg,
    },
    /// Star-free expressions.
    Sf {
        #[command(subcommand)]
        cmd: SfCommand,
    },
}

#[derive(Subcommand)]
enum SfCommand {
    /// Whether a word belongs to the language of an expression.
    Member {
        expr: String,
        word: String,
        #[arg(long)]
        alphabet: String,
    },
    /// Compare two expressions on all words up to a length.
    Equiv {
        left: String,
        right: String,
        #[arg(long)]
        alphabet: String,
        #[arg(long, default_value_t = 6)]
        maxlen: usize,
    },
    /// Compile an expression into a λ-term and certify it.
    Compile {
        expr: String,
        #[arg(long)]
        alphabet: String,
    },
    /// Build b_E for a tower height, normalize it and compare with enumeration.
    Reduce {
        expr: String,
        n: usize,
        #[arg(long)]
        alphabet: String,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Type(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Inconsistent(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Type(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Inconsistent(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Type(_) => "type",
            CliError::Budget(_) => "budget",
            CliError::Inconsistent(_) => "inconsistent",
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<InferError> for CliError {
    fn from(e: InferError) -> Self {
        CliError::Type(e.to_string())
    }
}

impl From<TypeCheckError> for CliError {
    fn from(e: TypeCheckError) -> Self {
        CliError::Type(e.to_string())
    }
}

impl From<NormalizeError> for CliError {
    fn from(e: NormalizeError) -> Self {
        match e {
            NormalizeError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Type(e.to_string()),
        }
    }
}

impl From<ChurchError> for CliError {
    fn from(e: ChurchError) -> Self {
        match e {
            ChurchError::Normalize(n) => n.into(),
            ChurchError::NotABoolean(_) | ChurchError::NotAStringNormalForm(_) => CliError::Type(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<StarFreeError> for CliError {
    fn from(e: StarFreeError) -> Self {
        match e {
            StarFreeError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

/// What a command produced: text lines, a JSON record and an exit code.
struct Output {
    text: Vec<String>,
    record: Value,
    code: u8,
}

impl Output {
    fn ok(text: Vec<String>, record: Value) -> Self {
        Output { text, record, code: 0 }
    }
}

fn ty_json(s: &TypeStore, t: Ty) -> Value {
    let mut v = json!({ "dag": s.serialize_dag(t), "order": s.order(t) });
    if s.unfold_size(t).is_ok_and(|n| n <= MAX_TYPE_TEXT) {
        v["text"] = json!(s.display(t));
    }
    v
}

fn ty_text(s: &TypeStore, t: Ty) -> String {
    match s.unfold_size(t) {
        Ok(n) if n <= MAX_TYPE_TEXT => s.display(t),
        Ok(n) => format!("<{} tree nodes, {} shared>", n, s.dag_nodes(t).len()),
        Err(_) => format!("<too large to unfold, {} shared nodes>", s.dag_nodes(t).len()),
    }
}

fn row_json(r: &TraceRow) -> Value {
    json!({ "size": r.size, "height": r.height, "max_degree": r.max_degree })
}

fn alphabet(letters: &str) -> Result<Alphabet, CliError> {
    Ok(Alphabet::parse(letters)?)
}

fn run(cli: &Cli, s: &TypeStore) -> Result<Output, CliError> {
    let budget = Budget {
        steps: cli.cfg.steps,
        size: cli.cfg.size_budget,
    };
    if budget.steps == 0 || budget.size == 0 || cli.cfg.enum_cap == 0 {
        return Err(CliError::Parse("budgets must be positive".into()));
    }
    match &cli.cmd {
        Command::Normalize { term, eta, trace } => {
            let t = parse_term(term, s)?;
            let typing = infer(s, &t)?;
            let tr = normalize_parallel(s, &typing, &budget)?;
            let mut result = tr.result.erase();
            if *eta {
                result = eta_reduce(&result)?;
            }
            let mut text = vec![result.to_string()];
            if *trace {
                text.push("step size height max-degree".into());
                for (i, r) in std::iter::once(&tr.initial).chain(&tr.steps).enumerate() {
                    let d = r.max_degree.map_or("-".to_string(), |d| d.to_string());
                    text.push(format!("{i} {} {} {d}", r.size, r.height));
                }
            }
            let m = result.metrics();
            let record = json!({
                "command": "normalize",
                "input": term,
                "eta": eta,
                "type": ty_json(s, typing.ty),
                "result": result.to_string(),
                "metrics": { "size": m.size, "height": m.height },
                "steps": tr.steps.len(),
                "trace": trace.then(|| std::iter::once(&tr.initial).chain(&tr.steps).map(row_json).collect::<Vec<_>>()),
            });
            Ok(Output::ok(text, record))
        }
        Command::Convert { left, right, eta } => {
            let (t, u) = (parse_term(left, s)?, parse_term(right, s)?);
            let equal = if *eta {
                beta_eta_convertible(s, &t, &u, &budget)?
            } else {
                beta_convertible(s, &t, &u, &budget)?
            };
            let verdict = match (equal, eta) {
                (true, false) => "beta-equal",
                (true, true) => "beta-eta-equal",
                (false, _) => "not-equal",
            };
            Ok(Output {
                text: vec![verdict.into()],
                record: json!({ "command": "convert", "left": left, "right": right, "eta": eta, "verdict": verdict }),
                code: if equal { 0 } else { 10 },
            })
        }
        Command::CheckSafety { term, ty, mode } => {
            let t = parse_term(term, s)?;
            let a = s.parse(ty)?;
            let report = match mode {
                ModeArg::Hls => check_hls(s, &t, a)?,
                ModeArg::Safe | ModeArg::LongSafe => {
                    let typing = infer_at(s, &t, a).map_err(|e| CliError::Type(format!("not typable at {ty}: {e}")))?;
                    match mode {
                        ModeArg::Safe => check_safe(s, &typing)?,
                        _ => check_long_safe(s, &typing)?,
                    }
                }
            };
            let mut record = json!({ "command": "check-safety", "term": term, "type": ty_json(s, a) });
            record["report"] = report.to_json(s);
            let line = report.display(s).to_string();
            Ok(Output::ok(vec![line], record))
        }
        Command::Sf { cmd } => run_sf(cmd, s, &budget, cli.cfg.enum_cap),
    }
}

fn run_sf(cmd: &SfCommand, s: &TypeStore, budget: &Budget, cap: u64) -> Result<Output, CliError> {
    match cmd {
        SfCommand::Member { expr, word, alphabet: letters } => {
            let sigma = alphabet(letters)?;
            let e = parse_expr(expr, &sigma)?;
            if let Some(c) = word.chars().find(|c| !sigma.contains(*c)) {
                return Err(CliError::Parse(format!("letter {c:?} is not in the alphabet")));
            }
            let m = member(&e, word);
            Ok(Output::ok(
                vec![m.to_string()],
                json!({ "command": "sf member", "expr": e.to_string(), "alphabet": sigma.to_string(), "word": word, "member": m }),
            ))
        }
        SfCommand::Equiv { left, right, alphabet: letters, maxlen } => {
            let sigma = alphabet(letters)?;
            let (e, f) = (parse_expr(left, &sigma)?, parse_expr(right, &sigma)?);
            let diff = first_difference(&e, &f, *maxlen, cap)?;
            let mut text = vec![if diff.is_none() { "equivalent" } else { "not-equivalent" }.to_string()];
            if let Some(w) = &diff {
                text.push(format!("counterexample: {w:?} (in left: {}, in right: {})", member(&e, w), member(&f, w)));
            }
            Ok(Output {
                text,
                record: json!({
                    "command": "sf equiv",
                    "left": e.to_string(),
                    "right": f.to_string(),
                    "alphabet": sigma.to_string(),
                    "maxlen": maxlen,
                    "equivalent": diff.is_none(),
                    "counterexample": diff,
                }),
                code: if diff.is_none() { 0 } else { 10 },
            })
        }
        SfCommand::Compile { expr, alphabet: letters } => {
            let sigma = alphabet(letters)?;
            let e = parse_expr(expr, &sigma)?;
            let c = compile(s, &e);
            let cert = certificate(s, &e, &c);
            let hls = cert.hls["verdict"].as_str().unwrap_or("?").to_string();
            let text = vec![
                c.term.to_string(),
                format!("expression size: {}", cert.expression_size),
                format!("term size: {} (bound {} = C·|E| with C = {})", cert.term_size, cert.size_constant * cert.expression_size as u64, cert.size_constant),
                format!("ord(A_E): {}", cert.base_order),
                format!("A_E: {}", ty_text(s, c.base_type)),
                format!("hls at Str[A_E] -> Bool: {hls}"),
            ];
            let mut record = serde_json::to_value(&cert).expect("certificate serializes");
            record["command"] = json!("sf compile");
            record["term"] = json!(c.term.to_string());
            Ok(Output::ok(text, record))
        }
        SfCommand::Reduce { expr, n, alphabet: letters } => {
            let sigma = alphabet(letters)?;
            let e = parse_expr(expr, &sigma)?;
            let inst = build_b(s, &e, *n);
            let value = decode_bool(&inst.term, budget)?;
            let bound = tower(*n);
            let within_cap = bound.is_some_and(|b| words_up_to(sigma.len(), b as usize) <= cap);
            let oracle = match bound {
                Some(b) if within_cap => Some(nonempty_up_to(&e, b as usize, cap)?),
                _ => None,
            };
            if let Some(w) = &oracle {
                if w.is_some() != value {
                    return Err(CliError::Inconsistent(format!(
                        "b_E normalized to {value} but enumeration found {w:?}"
                    )));
                }
            }
            let oracle_text = match &oracle {
                Some(Some(w)) => format!("oracle: agrees (witness {w:?})"),
                Some(None) => "oracle: agrees (no word of length at most tower(n))".to_string(),
                None => "oracle: skipped (enumeration cap)".to_string(),
            };
            let record = json!({
                "command": "sf reduce",
                "expr": e.to_string(),
                "alphabet": sigma.to_string(),
                "n": n,
                "tower": bound,
                "term_size": inst.term.size(),
                "result": value,
                "oracle": match &oracle {
                    Some(w) => json!({ "checked": true, "witness": w }),
                    None => json!({ "checked": false }),
                },
            });
            Ok(Output::ok(vec![value.to_string(), oracle_text], record))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_out = cli.cfg.format == Format::Json;
    // Normal forms of compiled terms are deep; recurse on a large stack.
    let outcome = std::thread::scope(|sc| {
        std::thread::Builder::new()
            .stack_size(1 << 30)
            .spawn_scoped(sc, || run(&cli, &TypeStore::new()))
            .expect("spawn worker thread")
            .join()
            .expect("worker thread panicked")
    });
    match outcome {
        Ok(out) => {
            if json_out {
                println!("{}", out.record);
            } else {
                for line in &out.text {
                    println!("{line}");
                }
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            if json_out {
                println!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}
