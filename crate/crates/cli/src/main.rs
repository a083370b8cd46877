//! `f2lab`: command-line front end.
//!
//! Exit codes: 0 success, 1 negative mathematical result (none exists,
//! condition fails), 2 search budget exhausted or search gave up, 64 usage
//! or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use f2lab_core::coloring::ColoringDomain;
use f2lab_core::extremal::{f_exact, fk_check, niveau_experiment, FMode, FkOutcome};
use f2lab_core::increment::{run_dichotomy, DichotomyParams, TraceRow};
use f2lab_core::io::{
    coloring_to_json, read_set_file, read_subspace_file, set_to_json, write_atomic, SetEncoding,
    SCHEMA,
};
use f2lab_core::ramsey::{bound_table, multicolor_pipeline, ramsey_value, union_bound_lower, RamseyOptions, Symmetry};
use f2lab_core::rational::{format_rational, parse_rational};
use f2lab_core::search::{find_subspace_avoiding, Outcome, SearchBudget};
use f2lab_core::set::{dyadic_sumfree_cover, DYADIC_COVER_CONSTANT};
use f2lab_core::spectral::{conv_counts, popular_difference_set};
use f2lab_core::{Error, GroupSet, Rational, Subspace};

const EXIT_NEGATIVE: u8 = 1;
const EXIT_EXHAUSTED: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "f2lab", version, about = "Subspaces, sum-free sets and Ramsey colorings over F_p^n")]
struct Cli {
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "F2LAB_WORKERS")]
    workers: Option<usize>,
    /// Write the report here (atomically) instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Node budget for exact searches.
    #[arg(long, global = true)]
    nodes: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summary of a set: size, density, sum-free and solution-free status.
    Set(SetArgs),
    /// Difference convolution counts of two sets.
    Conv(ConvArgs),
    /// A d-dimensional subspace avoiding a set.
    Avoid(AvoidArgs),
    /// Run the sparsity/expansion dichotomy engine.
    Dichotomy(DichotomyArgs),
    /// Exact small geometric Ramsey numbers.
    Ramsey(RamseyArgs),
    /// Multicolor pipeline: a d-space disjoint from every given set.
    Pipeline(PipelineArgs),
    /// Table of f(n, alpha) as CSV.
    Ftable(FtableArgs),
    /// Parallelepiped check for a set and a subspace.
    Fk(FkArgs),
    /// Hamming-ball experiment row.
    Niveau(NiveauArgs),
    /// Upper-bound shapes and the union-bound lower bound.
    Bounds(BoundsArgs),
    /// Sum-free cover of the nonzero points of F_p^n.
    Cover(CoverArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    Hexmask,
    Points,
}

impl From<Encoding> for SetEncoding {
    fn from(e: Encoding) -> Self {
        match e {
            Encoding::Hexmask => SetEncoding::Hexmask,
            Encoding::Points => SetEncoding::Points,
        }
    }
}

#[derive(Args)]
struct SetArgs {
    #[arg(long)]
    set: PathBuf,
    /// Re-encode the set and emit the file instead of the summary.
    #[arg(long, value_enum)]
    convert: Option<Encoding>,
}

#[derive(Args)]
struct ConvArgs {
    #[arg(long)]
    a: PathBuf,
    /// Defaults to A.
    #[arg(long)]
    b: Option<PathBuf>,
    /// Also report the popular-difference set of A relative to the whole group.
    #[arg(long)]
    popular: bool,
}

#[derive(Args)]
struct AvoidArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    dim: u32,
    /// Search inside this subspace instead of the whole group.
    #[arg(long)]
    space: Option<PathBuf>,
}

#[derive(Args)]
struct DichotomyArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    sets: Vec<PathBuf>,
    #[arg(long, value_parser = rational)]
    alpha: Rational,
    #[arg(long, value_parser = rational)]
    gamma: Rational,
    /// Increment factor 1/F; F must be 128 or 16.
    #[arg(long, default_value_t = 128)]
    factor: u32,
    #[arg(long, default_value_t = 6)]
    max_step_codim: u32,
    /// Write the step trace as CSV.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Projective,
    Points,
}

#[derive(Clone, Copy, ValueEnum)]
enum SymmetryArg {
    None,
    Generators,
    Full,
}

#[derive(Args)]
struct RamseyArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<u32>,
    #[arg(long, default_value_t = 4)]
    nmax: u32,
    #[arg(long, default_value_t = 2)]
    p: u32,
    #[arg(long, value_enum, default_value_t = DomainArg::Projective)]
    domain: DomainArg,
    #[arg(long, value_enum, default_value_t = SymmetryArg::Generators)]
    symmetry: SymmetryArg,
    /// Directory for witness colorings and search logs.
    #[arg(long)]
    emit_certificates: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    sets: Vec<PathBuf>,
    #[arg(long)]
    d: u32,
    #[arg(long, default_value_t = 2)]
    p: u32,
}

#[derive(Args)]
struct FtableArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, value_delimiter = ',', value_parser = rational, required = true)]
    alphas: Vec<Rational>,
    /// Exhaustive minimisation (the default unless --sampled is given).
    #[arg(long, conflicts_with = "sampled")]
    exact: bool,
    /// Number of random sets; reports an upper bound.
    #[arg(long)]
    sampled: Option<u32>,
    /// Allow exact mode above its size cap.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct FkArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    k: u32,
}

#[derive(Args)]
struct NiveauArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, value_parser = rational)]
    alpha: Rational,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    d: u32,
    /// Constant in the (d / c) 2^d shape.
    #[arg(long, value_parser = rational, default_value = "1")]
    c: Rational,
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    n: u32,
    /// Write each class as a set file into this directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// A failure together with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotPrime(_)
            | Error::TooLarge { .. }
            | Error::AmbientMismatch { .. }
            | Error::NotInGroup { .. }
            | Error::OutOfRange { .. }
            | Error::EmptySet(_)
            | Error::Precondition(_)
            | Error::Format(_)
            | Error::Io(_)
            | Error::Json(_) => EXIT_USAGE,
            Error::IncrementNotFound { .. } => EXIT_EXHAUSTED,
            Error::Dichotomy { cause, .. } if matches!(**cause, Error::IncrementNotFound { .. }) => EXIT_EXHAUSTED,
            _ => EXIT_NEGATIVE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(Value, u8), Failure>;

fn read_set(path: &Path) -> Result<GroupSet, Failure> {
    read_set_file(path).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("{}: {e}", path.display()),
    })
}

fn read_space(path: &Path) -> Result<Subspace, Failure> {
    read_subspace_file(path).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("{}: {e}", path.display()),
    })
}

fn report(kind: &str, body: Value) -> Value {
    let mut v = json!({ "schema": SCHEMA, "kind": kind });
    if let (Some(obj), Value::Object(b)) = (v.as_object_mut(), body) {
        obj.extend(b);
    }
    v
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialise")
}

fn budget(cli: &Cli) -> SearchBudget {
    let mut b = SearchBudget::default();
    if let Some(n) = cli.nodes {
        b.node_limit = n;
    }
    b.seed = cli.seed;
    b
}

fn cmd_set(args: &SetArgs) -> CmdResult {
    let s = read_set(&args.set)?;
    if let Some(enc) = args.convert {
        return Ok((Value::String(set_to_json(&s, enc.into())), 0));
    }
    let spec = s.spec();
    let sum_free = s.sum_free_witness();
    let body = json!({
        "p": spec.p(),
        "n": spec.n(),
        "card": s.card(),
        "density": format_rational(&s.mu()),
        "sum_free": sum_free.is_none(),
        "sum_free_witness": sum_free.map(|(x, y, z)| vec![x, y, z]),
        "solution_free": s.is_solution_free().map(|(a, b)| vec![a, b]),
    });
    Ok((report("set", body), 0))
}

fn cmd_conv(args: &ConvArgs) -> CmdResult {
    let a = read_set(&args.a)?;
    let b = match &args.b {
        Some(p) => read_set(p)?,
        None => a.clone(),
    };
    let cc = conv_counts(&a, &b)?;
    let mut body = json!({
        "p": a.spec().p(),
        "n": a.spec().n(),
        "card_a": cc.card_a(),
        "card_b": cc.card_b(),
        "counts": cc.counts(),
    });
    if args.popular {
        let d = popular_difference_set(&a, &Subspace::whole(a.spec()))?;
        body["popular_card"] = json!(d.card());
        body["popular"] = to_value(&d);
    }
    Ok((report("conv", body), 0))
}

fn cmd_avoid(cli: &Cli, args: &AvoidArgs) -> CmdResult {
    let s = read_set(&args.set)?;
    let v = match &args.space {
        Some(p) => read_space(p)?,
        None => Subspace::whole(s.spec()),
    };
    let out = find_subspace_avoiding(&s, &v, args.dim, &budget(cli))?;
    Ok(match out {
        Outcome::Found(w) => (report("avoid", json!({ "result": "found", "subspace": to_value(&w) })), 0),
        Outcome::NoneExists(why) => (report("avoid", json!({ "result": "none", "reason": why })), EXIT_NEGATIVE),
        Outcome::Exhausted { nodes } => (
            report("avoid", json!({ "result": "exhausted", "nodes": nodes })),
            EXIT_EXHAUSTED,
        ),
    })
}

fn cmd_dichotomy(args: &DichotomyArgs) -> CmdResult {
    let sets = args.sets.iter().map(|p| read_set(p)).collect::<Result<Vec<_>, _>>()?;
    let p = sets[0].spec().p();
    let mut params = DichotomyParams::new(p, args.alpha, args.gamma)?.with_factor(args.factor)?;
    params.max_step_codim = args.max_step_codim;
    let result = run_dichotomy(&sets, &params);
    let trace = match &result {
        Ok(r) => Some(&r.trace),
        Err(Error::Dichotomy { trace, .. }) => Some(trace),
        Err(_) => None,
    };
    if let (Some(path), Some(trace)) = (&args.trace_csv, trace) {
        let mut csv = String::from(TraceRow::CSV_HEADER);
        csv.push('\n');
        for row in trace {
            csv.push_str(&row.csv_line());
            csv.push('\n');
        }
        write_atomic(path, csv.as_bytes())?;
    }
    let rep = result?;
    Ok((report("dichotomy", to_value(&rep)), 0))
}

fn cmd_ramsey(cli: &Cli, args: &RamseyArgs) -> CmdResult {
    let opts = RamseyOptions {
        domain: match args.domain {
            DomainArg::Projective => ColoringDomain::Projective,
            DomainArg::Points => ColoringDomain::Points,
        },
        symmetry: match args.symmetry {
            SymmetryArg::None => Symmetry::None,
            SymmetryArg::Generators => Symmetry::Generators,
            SymmetryArg::Full => Symmetry::FullGroup,
        },
        budget: budget(cli),
    };
    let res = ramsey_value(args.p, &args.dims, args.nmax, &opts)?;
    if let Some(dir) = &args.emit_certificates {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        for c in &res.witnesses {
            let path = dir.join(format!("witness_n{}.json", c.spec().n()));
            write_atomic(&path, coloring_to_json(c).as_bytes())?;
        }
        if let Some(u) = &res.unsat {
            let log = format!(
                "n = {}\nnodes = {}\nnaive_agrees = {:?}\n{}\n",
                u.n, u.nodes, u.naive_agrees, u.summary
            );
            write_atomic(&dir.join(format!("unsat_n{}.log", u.n)), log.as_bytes())?;
        }
    }
    let mut body = to_value(&res);
    body["value"] = json!(res.exact);
    body["hi"] = json!(res.exact);
    let code = if res.exact.is_some() { 0 } else { EXIT_EXHAUSTED };
    Ok((report("ramsey", body), code))
}

fn cmd_pipeline(cli: &Cli, args: &PipelineArgs) -> CmdResult {
    let sets = args.sets.iter().map(|p| read_set(p)).collect::<Result<Vec<_>, _>>()?;
    let rep = multicolor_pipeline(&sets, args.d, args.p, &budget(cli))?;
    Ok((report("pipeline", to_value(&rep)), 0))
}

fn cmd_ftable(cli: &Cli, args: &FtableArgs) -> CmdResult {
    let mode = match args.sampled {
        Some(trials) => FMode::Sampled { trials, seed: cli.seed },
        None => FMode::Exact { force: args.force },
    };
    let mut csv = String::from("n,alpha,mode,value,upper_bound_only,witness\n");
    for &alpha in &args.alphas {
        let e = f_exact(args.n, alpha, mode)?;
        let witness: Vec<String> = e.witness.iter().map(|x| x.to_string()).collect();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.n,
            format_rational(&e.alpha),
            e.mode,
            e.value,
            e.upper_bound_only,
            witness.join(" ")
        ));
    }
    Ok((Value::String(csv), 0))
}

fn cmd_fk(cli: &Cli, args: &FkArgs) -> CmdResult {
    let a = read_set(&args.set)?;
    let v = read_space(&args.space)?;
    let out = fk_check(&a, &v, args.k, &budget(cli))?;
    let code = match out {
        FkOutcome::Holds { .. } => 0,
        FkOutcome::Fails { .. } => EXIT_NEGATIVE,
        FkOutcome::Exhausted { .. } => EXIT_EXHAUSTED,
    };
    Ok((report("fk", json!({ "k": args.k, "outcome": to_value(&out) })), code))
}

fn cmd_niveau(cli: &Cli, args: &NiveauArgs) -> CmdResult {
    Ok(match niveau_experiment(args.n, args.alpha, &budget(cli))? {
        Outcome::Found(row) => (report("niveau", to_value(&row)), 0),
        Outcome::NoneExists(why) => (report("niveau", json!({ "result": "none", "reason": why })), EXIT_NEGATIVE),
        Outcome::Exhausted { nodes } => (
            report("niveau", json!({ "result": "exhausted", "nodes": nodes })),
            EXIT_EXHAUSTED,
        ),
    })
}

fn cmd_bounds(args: &BoundsArgs) -> CmdResult {
    let table = bound_table(args.d, args.c)?;
    let mut body = to_value(&table);
    if args.d >= 2 {
        body["union_bound"] = to_value(&union_bound_lower(args.d)?);
    }
    Ok((report("bounds", body), 0))
}

fn cmd_cover(args: &CoverArgs) -> CmdResult {
    let classes = dyadic_sumfree_cover(args.p, args.n)?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        for (i, c) in classes.iter().enumerate() {
            let path = dir.join(format!("class_{i:03}.json"));
            write_atomic(&path, set_to_json(c, SetEncoding::Hexmask).as_bytes())?;
        }
    }
    let bound = DYADIC_COVER_CONSTANT * (args.p as f64).ln() * args.n as f64;
    let body = json!({
        "p": args.p,
        "n": args.n,
        "classes": classes.len(),
        "bound": bound,
        "class_sizes": classes.iter().map(|c| c.card()).collect::<Vec<_>>(),
    });
    Ok((report("cover", body), 0))
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Set(a) => cmd_set(a),
        Command::Conv(a) => cmd_conv(a),
        Command::Avoid(a) => cmd_avoid(cli, a),
        Command::Dichotomy(a) => cmd_dichotomy(a),
        Command::Ramsey(a) => cmd_ramsey(cli, a),
        Command::Pipeline(a) => cmd_pipeline(cli, a),
        Command::Ftable(a) => cmd_ftable(cli, a),
        Command::Fk(a) => cmd_fk(cli, a),
        Command::Niveau(a) => cmd_niveau(cli, a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Cover(a) => cmd_cover(a),
    }
}

fn emit(cli: &Cli, value: &Value) -> Result<(), Failure> {
    let mut text = match value {
        Value::String(s) => s.clone(),
        v => serde_json::to_string_pretty(v).expect("reports serialise"),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &cli.out {
        Some(path) => write_atomic(path, text.as_bytes()).map_err(Failure::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("f2lab: cannot set up {w} workers: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let outcome = run(&cli).and_then(|(value, code)| emit(&cli, &value).map(|_| code));
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("f2lab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
