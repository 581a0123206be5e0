//! `ctmix` command-line front end.
//!
//! Exit codes: 0 constant-time observed (or plain success), 1 non-constant-time,
//! 2 inconclusive, 64 usage error, 65 bad input data, 66 unreadable file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ctmix_core::corpus::{load_corpus, load_corpus_from, Benchmark};
use ctmix_core::harness::{VerificationReport, CONFIDENCE_ROUNDS, DEFAULT_SEED};
use ctmix_core::ingest::{parse_mix_csv, parse_trace, write_trace};
use ctmix_core::isa::{read_secret, run_with_secret, ExitStatus, PublicWrite, DEFAULT_BUDGET, DEFAULT_MEMORY_SIZE};
use ctmix_core::report::{render_json, render_text};
use ctmix_core::{
    assemble, build_mix, builtin_map, pairwise_check, verify, verify_directed, FuzzConfig, InputBinding, InstructionClass,
    MixVector, MnemonicMap, Program, SecretManifest, TargetSpec, Verdict, VerifyJob,
};

const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_NOINPUT: u8 = 66;

#[derive(Parser)]
#[command(name = "ctmix", version, about = "Constant-time verification by instruction-mix comparison")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuzz the secret and compare instruction mixes across rounds.
    Verify(VerifyArgs),
    /// Compare instruction mixes for an explicit list of secrets.
    VerifyDirected {
        #[command(flatten)]
        common: VerifyArgs,
        /// Comma-separated hex secrets, e.g. `736563726574,736563757265`.
        #[arg(long, value_delimiter = ',', required = true)]
        secrets: Vec<String>,
    },
    /// Execute once and print the mix vector of the traced function.
    Run(RunArgs),
    /// Assemble a program and print the resolved listing.
    Assemble {
        #[arg(long)]
        program: PathBuf,
    },
    /// Classify a foreign `index mnemonic` trace and print its mix vector.
    IngestTrace {
        #[arg(long)]
        trace: PathBuf,
        /// `mnemonic<TAB>class` file; defaults to the built-in ISA map.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare the rows of a mix-vector CSV.
    IngestMix {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Verify every corpus benchmark against its expected verdict.
    Corpus {
        /// Corpus directory with a `manifest.toml`; defaults to the built-in corpus.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, value_parser = parse_u64, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_parser = parse_u64, default_value_t = CONFIDENCE_ROUNDS)]
        rounds: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct ProgramArgs {
    /// Assembly source.
    #[arg(long, required_unless_present = "benchmark", conflicts_with = "benchmark")]
    program: Option<PathBuf>,
    /// Corpus benchmark, `name` or `name[variant]`, instead of --program.
    #[arg(long)]
    benchmark: Option<String>,
    /// Label of the function to trace.
    #[arg(long, required_unless_present = "benchmark")]
    target: Option<String>,
    /// Trace only the target's own instructions, not its callees.
    #[arg(long)]
    no_callees: bool,
    /// Address of the secret region.
    #[arg(long, value_parser = parse_u64, conflicts_with = "secret_regs")]
    secret_addr: Option<u64>,
    /// Length of the secret region in bytes.
    #[arg(long, value_parser = parse_usize, requires = "secret_addr")]
    secret_len: Option<usize>,
    /// Integer registers holding the secret, e.g. `2,3`.
    #[arg(long, value_delimiter = ',', value_parser = parse_reg)]
    secret_regs: Vec<u8>,
    /// Bytes of secret per register (1-8).
    #[arg(long, value_parser = parse_usize, default_value_t = 8)]
    secret_width: usize,
    /// Fixed public input: `ADDR=HEX` (memory) or `rN=VALUE` (register). Repeatable.
    #[arg(long = "public")]
    public: Vec<String>,
    #[arg(long, value_parser = parse_u64, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long, value_parser = parse_u64, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_parser = parse_u64, default_value_t = CONFIDENCE_ROUNDS)]
    rounds: u64,
    /// Starting secret as hex; defaults to the region's initial contents.
    #[arg(long)]
    base_secret: Option<String>,
    /// Run every round even after a violation is found.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    program: ProgramArgs,
    /// Secret as hex; defaults to the region's initial contents.
    #[arg(long)]
    secret: Option<String>,
    /// Also print the trace in `index mnemonic` form.
    #[arg(long)]
    dump_trace: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

enum Failure {
    Usage(String),
    Data(String),
    NoInput(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EX_USAGE,
            Failure::Data(_) => EX_DATAERR,
            Failure::NoInput(_) => EX_NOINPUT,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::NoInput(m) => m,
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EX_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("ctmix: error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Verify(args) => cmd_verify(&args, None),
        Command::VerifyDirected { common, secrets } => cmd_verify(&common, Some(&secrets)),
        Command::Run(args) => cmd_run(&args),
        Command::Assemble { program } => cmd_assemble(&program),
        Command::IngestTrace { trace, map, format } => cmd_ingest_trace(&trace, map.as_deref(), format),
        Command::IngestMix { csv, format } => cmd_ingest_mix(&csv, format),
        Command::Corpus { dir, seed, rounds, format } => cmd_corpus(dir.as_deref(), seed, rounds, format),
    }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::ConstantTimeObserved => 0,
        Verdict::NonConstantTime => 1,
        Verdict::Inconclusive => 2,
    }
}

// ---- argument parsing helpers ----

fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| format!("`{s}` is not a non-negative integer (decimal or 0x hex)"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    let v = parse_u64(s)?;
    usize::try_from(v).map_err(|_| format!("{v} is too large"))
}

fn parse_reg(s: &str) -> Result<u8, String> {
    let digits = s.trim().strip_prefix('r').unwrap_or(s.trim());
    match digits.parse::<u8>() {
        Ok(n) if (n as usize) < ctmix_core::isa::INT_REGS => Ok(n),
        _ => Err(format!("`{s}` is not an integer register r0-r31")),
    }
}

fn parse_hex(what: &str, s: &str) -> Result<Vec<u8>, Failure> {
    let s = s.trim();
    let s = s.strip_prefix("0x").unwrap_or(s);
    hex::decode(s).map_err(|e| Failure::Usage(format!("{what} `{s}` is not valid hex: {e}")))
}

fn parse_public(spec: &str) -> Result<PublicWrite, Failure> {
    let (lhs, rhs) = spec
        .split_once('=')
        .ok_or_else(|| Failure::Usage(format!("--public `{spec}`: expected ADDR=HEX or rN=VALUE")))?;
    if lhs.trim().starts_with('r') {
        let reg = parse_reg(lhs).map_err(Failure::Usage)?;
        let value = parse_u64(rhs).map_err(|e| Failure::Usage(format!("--public `{spec}`: {e}")))?;
        Ok(PublicWrite::Register { reg, value })
    } else {
        let addr = parse_u64(lhs).map_err(|e| Failure::Usage(format!("--public `{spec}`: {e}")))?;
        Ok(PublicWrite::Memory { addr, bytes: parse_hex("--public", rhs)? })
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::NoInput(format!("cannot read {}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    let source = read_file(path)?;
    assemble(&source).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn find_benchmark(spec: &str) -> Result<Benchmark, Failure> {
    let (name, variant) = match spec.split_once('[') {
        Some((n, rest)) => (n, rest.trim_end_matches(']')),
        None => (spec, "plain"),
    };
    let corpus = load_corpus().map_err(|e| Failure::Data(e.to_string()))?;
    corpus
        .into_iter()
        .find(|b| b.name == name && b.variant == variant)
        .ok_or_else(|| Failure::Usage(format!("no corpus benchmark `{name}[{variant}]`")))
}

/// Program, target, binding and default base secret from the flags.
struct Setup {
    program: Program,
    target: TargetSpec,
    binding: InputBinding,
    default_secret: Vec<u8>,
    budget: u64,
}

fn setup(args: &ProgramArgs) -> Result<Setup, Failure> {
    let bench = args.benchmark.as_deref().map(find_benchmark).transpose()?;
    let program = match (&args.program, &bench) {
        (Some(path), _) => load_program(path)?,
        (None, Some(b)) => b.program.clone(),
        (None, None) => return Err(Failure::Usage("--program or --benchmark is required".into())),
    };
    let target_label = match (&args.target, &bench) {
        (Some(t), _) => t.clone(),
        (None, Some(b)) => b.target.function_label.clone(),
        (None, None) => return Err(Failure::Usage("--target is required".into())),
    };
    let mut target = TargetSpec::new(target_label);
    if args.no_callees {
        target = target.without_callees();
    }
    if program.label(&target.function_label).is_none() {
        return Err(Failure::Usage(format!("target label `{}` is not defined", target.function_label)));
    }

    let manifest = match (args.secret_addr, args.secret_len, args.secret_regs.is_empty(), &bench) {
        (Some(addr), Some(len), true, _) => SecretManifest::memory(addr, len),
        (Some(_), None, _, _) => return Err(Failure::Usage("--secret-addr needs --secret-len".into())),
        (None, _, false, _) => SecretManifest::registers(args.secret_regs.clone(), args.secret_width),
        (None, _, true, Some(b)) => b.binding.secret_manifest.clone(),
        _ => return Err(Failure::Usage("declare the secret with --secret-addr/--secret-len or --secret-regs".into())),
    };
    let mut binding = InputBinding::new(manifest);
    let from_bench = args.secret_addr.is_none() && args.secret_regs.is_empty();
    if let (Some(b), true) = (&bench, args.public.is_empty()) {
        binding.public_writes = b.binding.public_writes.clone();
    }
    for p in &args.public {
        binding.public_writes.push(parse_public(p)?);
    }
    let state = binding
        .prepare(&program, DEFAULT_MEMORY_SIZE)
        .map_err(|e| Failure::Usage(format!("input binding: {e}")))?;
    let default_secret = match (&bench, from_bench) {
        (Some(b), true) => b.base_secret.clone(),
        _ => read_secret(&state, &binding.secret_manifest),
    };
    if args.budget == 0 {
        return Err(Failure::Usage("--budget must be positive".into()));
    }
    Ok(Setup { program, target, binding, default_secret, budget: args.budget })
}

// ---- subcommands ----

fn emit_report(report: &VerificationReport, format: Format) -> u8 {
    match format {
        Format::Text => print!("{}", render_text(report)),
        Format::Json => println!("{}", render_json(report)),
    }
    verdict_code(report.verdict)
}

fn cmd_verify(args: &VerifyArgs, directed: Option<&[String]>) -> Outcome {
    let s = setup(&args.program)?;
    let base = match &args.base_secret {
        Some(h) => parse_hex("--base-secret", h)?,
        None => s.default_secret.clone(),
    };
    let fuzz = FuzzConfig::new(args.seed, args.rounds, base).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut job = VerifyJob::new(s.program, s.target, s.binding, fuzz);
    job.budget = s.budget;
    job.exhaustive = args.exhaustive;
    let report = match directed {
        None => verify(&job),
        Some(list) => {
            let secrets = list.iter().map(|h| parse_hex("--secrets entry", h)).collect::<Result<Vec<_>, _>>()?;
            verify_directed(&job, &secrets)
        }
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(emit_report(&report, args.format))
}

fn mix_json(mix: &MixVector) -> serde_json::Value {
    serde_json::to_value(mix).expect("mix vectors serialize")
}

fn mix_lines(out: &mut String, mix: &MixVector) {
    for class in InstructionClass::ALL {
        let _ = writeln!(out, "{:<16} {}", class.column(), mix.get(class));
    }
    let _ = writeln!(out, "{:<16} {}", "total", mix.total());
}

fn cmd_run(args: &RunArgs) -> Outcome {
    let s = setup(&args.program)?;
    let secret = match &args.secret {
        Some(h) => parse_hex("--secret", h)?,
        None => s.default_secret.clone(),
    };
    let exec = run_with_secret(&s.program, &s.binding, &secret, &s.target, s.budget)
        .map_err(|e| Failure::Data(format!("execution failed: {e}")))?;
    let mix = build_mix(&exec.trace);
    let exit = match exec.exit {
        ExitStatus::Halted => "halted",
        ExitStatus::Returned => "returned",
    };
    match args.format {
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "target: {}", s.target.function_label);
            let _ = writeln!(out, "secret: {}", hex::encode(&secret));
            let _ = writeln!(out, "exit: {exit}");
            let _ = writeln!(out, "traced: {}", exec.trace.len());
            let _ = writeln!(out, "retired: {}", exec.retired);
            let _ = writeln!(out, "r1: {:#x}", exec.state.int_regs[1]);
            let _ = writeln!(out);
            mix_lines(&mut out, &mix);
            if args.dump_trace {
                let _ = writeln!(out);
                out.push_str(&write_trace(&exec.trace, Some(ctmix_core::isa::ISA_VERSION)));
            }
            print!("{out}");
        }
        Format::Json => {
            let mut doc = serde_json::json!({
                "target": s.target.function_label,
                "secret": hex::encode(&secret),
                "exit": exit,
                "traced": exec.trace.len(),
                "retired": exec.retired,
                "mix": mix_json(&mix),
            });
            if args.dump_trace {
                doc["trace"] = exec.trace.iter().map(|e| e.mnemonic.as_str().to_string()).collect();
            }
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        }
    }
    Ok(0)
}

fn cmd_assemble(path: &Path) -> Outcome {
    let program = load_program(path)?;
    let mut by_index: std::collections::BTreeMap<usize, Vec<&str>> = Default::default();
    for (name, &idx) in program.labels() {
        by_index.entry(idx).or_default().push(name);
    }
    let mut out = String::new();
    for (i, instr) in program.instructions().iter().enumerate() {
        if let Some(names) = by_index.get(&i) {
            for name in names {
                let _ = writeln!(out, "{name}:");
            }
        }
        let _ = writeln!(out, "{i:5}  {instr}");
    }
    let _ = writeln!(out, "; {} instructions, {} data bytes, entry {}", program.len(), program.data_segment().len(), program.entry());
    print!("{out}");
    Ok(0)
}

fn cmd_ingest_trace(path: &Path, map_path: Option<&Path>, format: Format) -> Outcome {
    let map = match map_path {
        Some(p) => MnemonicMap::parse(&read_file(p)?).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        None => builtin_map(),
    };
    let text = read_file(path)?;
    let foreign = parse_trace(&text, &map).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let mix = build_mix(&foreign.trace);
    match format {
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "arch: {}", foreign.arch.as_deref().unwrap_or("-"));
            let _ = writeln!(out, "map: {}", map.arch());
            let _ = writeln!(out, "events: {}", foreign.trace.len());
            let _ = writeln!(out);
            mix_lines(&mut out, &mix);
            print!("{out}");
        }
        Format::Json => {
            let doc = serde_json::json!({
                "arch": foreign.arch,
                "map": map.arch(),
                "events": foreign.trace.len(),
                "mix": mix_json(&mix),
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        }
    }
    Ok(0)
}

fn cmd_ingest_mix(path: &Path, format: Format) -> Outcome {
    let rows = parse_mix_csv(&read_file(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let outcome = pairwise_check(&rows).map_err(|_| Failure::Data(format!("{}: no rows", path.display())))?;
    match format {
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "verdict: {}", outcome.verdict);
            let _ = writeln!(out, "rows: {}", rows.len());
            match &outcome.violation {
                Some(v) => {
                    let _ = writeln!(out, "violation: rounds {} and {} (L1 {})", v.first, v.second, v.diff.l1());
                    for (class, d) in v.diff.nonzero() {
                        let _ = writeln!(out, "  {:<16} {:+}", class.name(), d);
                    }
                }
                None => {
                    let _ = writeln!(out, "violation: none");
                }
            }
            print!("{out}");
        }
        Format::Json => {
            let doc = serde_json::json!({
                "verdict": outcome.verdict,
                "violation": outcome.violation,
                "rows": rows.iter().map(|(r, m)| serde_json::json!({"round": r, "mix": mix_json(m)})).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        }
    }
    Ok(verdict_code(outcome.verdict))
}

fn cmd_corpus(dir: Option<&Path>, seed: u64, rounds: u64, format: Format) -> Outcome {
    let corpus = match dir {
        Some(d) => load_corpus_from(d),
        None => load_corpus(),
    }
    .map_err(|e| Failure::Data(e.to_string()))?;
    let mut rows = Vec::new();
    for b in &corpus {
        let job = b.job(seed, rounds).map_err(|e| Failure::Usage(format!("{}: {e}", b.id())))?;
        let report = verify(&job).map_err(|e| Failure::Data(format!("{}: {e}", b.id())))?;
        rows.push((b, report));
    }
    let mismatches = rows.iter().filter(|(b, r)| r.verdict != b.expected).count();
    match format {
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "seed: {seed:#x}");
            let _ = writeln!(out, "rounds: {rounds}");
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<34} {:<24} {:<24} {:>6}  {:<9} match", "benchmark", "expected", "verdict", "rounds", "pair");
            for (b, r) in &rows {
                let pair = r.violation.as_ref().map_or("-".to_string(), |v| format!("{},{}", v.first, v.second));
                let ok = if r.verdict == b.expected { "yes" } else { "NO" };
                let _ = writeln!(
                    out,
                    "{:<34} {:<24} {:<24} {:>6}  {:<9} {ok}",
                    b.id(),
                    b.expected.as_str(),
                    r.verdict.as_str(),
                    r.rounds.len(),
                    pair
                );
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "{} of {} benchmarks match", rows.len() - mismatches, rows.len());
            print!("{out}");
        }
        Format::Json => {
            let doc: Vec<_> = rows
                .iter()
                .map(|(b, r)| {
                    serde_json::json!({
                        "benchmark": b.id(),
                        "expected": b.expected,
                        "verdict": r.verdict,
                        "rounds": r.rounds.len(),
                        "violation": r.violation,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        }
    }
    Ok(if mismatches == 0 { 0 } else { 1 })
}
