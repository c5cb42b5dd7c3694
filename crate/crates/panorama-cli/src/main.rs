//! `panorama`: instance generation, allocator runs, offline optima, factor-revealing
//! LPs, PanOCS verification and trace certification.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use panorama::allocators::{self, dual, Algo, Allocator, RunTrace};
use panorama::eval::{self, ReportRow, VerifyMode};
use panorama::instance::{generate, Family, GenParams, Instance};
use panorama::lp::basic::build_basic_lp;
use panorama::lp::hybrid::{solve_hybrid, HYBRID_KMAX};
use panorama::lp::ACCEPT_VIOLATION;
use panorama::panocs::exact::Script;
use panorama::panocs::{Variant, VariantKind};
use panorama::rat::{self, Q};
use panorama::tables::{gamma_large_frozen, BasicTable, ParamTable};

/// Rows of the closed-form table checked by `lp basic --closed-form`.
const CERTIFY_DEPTH: usize = 64;

#[derive(Parser)]
#[command(name = "panorama", version, about = "Panorama-view AdWords experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from a family.
    Gen(GenArgs),
    /// Run an allocator over seeded trials and append a report row.
    Run(RunArgs),
    /// Compute the offline optimum.
    Opt(OptArgs),
    /// Solve a factor-revealing LP and certify the table.
    Lp(LpArgs),
    /// Check PanOCS guarantees on a chain or a scripted sequence.
    PanocsVerify(VerifyArgs),
    /// Replay a run trace and re-check its ledger and dual feasibility.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    advertisers: usize,
    #[arg(long)]
    impressions: usize,
    #[arg(long)]
    seed: u64,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algo: Algo,
    #[arg(long)]
    instance: PathBuf,
    /// Parameter table JSON; the allocator's default table when absent.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the trace of trial 0 here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct OptArgs {
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LpKind {
    Basic,
    Hybrid,
}

#[derive(Args)]
struct LpArgs {
    kind: LpKind,
    /// PanOCS `γ` as a decimal or fraction.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    kmax: Option<usize>,
    /// Use the explicit basic solution instead of solving the LP.
    #[arg(long)]
    closed_form: bool,
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    variant: VariantKind,
    #[arg(long, conflicts_with = "script", required_unless_present = "script")]
    chain: Option<usize>,
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    mode: Mode,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// `kmax` of the general-bid variant.
    #[arg(long, default_value_t = 18)]
    kmax: usize,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Competitive ratio to certify dual feasibility at.
    #[arg(long)]
    gamma: String,
}

enum Failure {
    /// Bad input: exit code 2.
    Usage(String),
    /// A check did not pass: exit code 1.
    Check(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Instance::from_json(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_q(s: &str, what: &str) -> Result<Q, Failure> {
    rat::parse(s).ok_or_else(|| usage(format!("{what}: `{s}` is not a number")))
}

/// `p/q = decimal` for short fractions, the decimal alone otherwise.
fn show(x: &Q) -> String {
    let exact = rat::format(x);
    if exact.len() <= 40 {
        format!("{exact} = {:.9}", rat::to_f64(x))
    } else {
        format!("{:.12}", rat::to_f64(x))
    }
}

fn gen(a: GenArgs) -> Outcome {
    let params = GenParams { advertisers: a.advertisers, impressions: a.impressions, seed: a.seed };
    let inst = generate(a.family, params).map_err(usage)?;
    write(&a.output, &inst.to_json())?;
    println!("wrote {} ({} advertisers, {} impressions)", a.output.display(), a.advertisers, a.impressions);
    Ok(())
}

fn run(a: RunArgs) -> Outcome {
    let inst = load_instance(&a.instance)?;
    let alloc = match &a.table {
        None => Allocator::default_for(a.algo, &inst),
        Some(p) => {
            let table = ParamTable::from_json(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            Allocator::with_table(a.algo, table, &inst).map_err(usage)?
        }
    };
    let estimate = || eval::estimate_ratio(&inst, &alloc, a.trials, a.seed);
    let est = match a.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(usage)?
            .install(estimate),
        None => estimate(),
    }
    .map_err(usage)?;
    if let Some(path) = &a.trace {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(a.seed);
        rng.set_stream(0);
        let trace = allocators::run_with(&inst, &alloc, &mut rng, a.seed).map_err(|e| Failure::Check(e.to_string()))?;
        write(path, &trace.to_json())?;
    }
    let row = ReportRow {
        instance: a.instance.display().to_string(),
        algo: a.algo.to_string(),
        table: a.table.as_ref().map_or_else(|| "default".to_string(), |p| p.display().to_string()),
        estimate: est,
    };
    eval::append_report(&a.report, &row).map_err(usage)?;
    println!("{}", eval::REPORT_HEADER);
    println!("{}", row.to_csv());
    if row.estimate.pass {
        Ok(())
    } else {
        Err(Failure::Check(format!("ratio interval stays below the guarantee {:.6}", row.estimate.guarantee)))
    }
}

fn opt(a: OptArgs) -> Outcome {
    let inst = load_instance(&a.instance)?;
    let r = eval::offline_opt(&inst);
    let assignment: Vec<Option<&str>> = r.assignment.iter().map(|x| x.map(|a| inst.advertiser_id(a))).collect();
    let out = serde_json::json!({"value": r.value, "method": r.method, "assignment": assignment});
    println!("{}", serde_json::to_string_pretty(&out).expect("JSON"));
    Ok(())
}

fn lp(a: LpArgs) -> Outcome {
    let gamma = match &a.gamma {
        Some(g) => parse_q(g, "--gamma")?,
        None => gamma_large_frozen(),
    };
    if gamma < Q::from_integer(0.into()) || gamma > Q::from_integer(1.into()) {
        return Err(usage("--gamma must lie in [0, 1]"));
    }
    let table_json = match a.kind {
        LpKind::Basic if a.closed_form => {
            let t = BasicTable::closed_form(gamma);
            let cert = t.certify(CERTIFY_DEPTH);
            println!("Gamma = {}", show(t.ratio()));
            println!(
                "certified through k = {CERTIFY_DEPTH}: min slack {}, not-to-a tight {}, bound-at-limit tight {}",
                rat::format(&cert.min_slack()),
                cert.tight("not-to-a"),
                cert.tight("bound-at-limit")
            );
            if !cert.passes() {
                return Err(Failure::Check("closed-form table violates a constraint".into()));
            }
            t.to_json()
        }
        LpKind::Basic => {
            let kmax = a.kmax.unwrap_or(allocators::BASIC_GENERAL_KMAX);
            if kmax == 0 {
                return Err(usage("--kmax must be at least 1"));
            }
            let lp = build_basic_lp(&gamma, kmax);
            let (_, cert) = lp.lp.solve_exact().map_err(|e| Failure::Check(e.to_string()))?;
            let t = BasicTable::truncated(gamma, kmax);
            let mut x = vec![t.ratio().clone()];
            x.extend((1..=kmax).map(|k| t.dalpha(k)));
            x.extend((1..=kmax).map(|k| t.dbeta(k)));
            let table_cert = lp.lp.certify(&x);
            println!("LP optimum = {:.9}", rat::to_f64(&cert.objective));
            println!("Gamma = {} (truncated table)", show(t.ratio()));
            println!("max violation {:e}", rat::to_f64(&table_cert.max_violation));
            if !table_cert.exact() {
                return Err(Failure::Check("truncated table violates the LP".into()));
            }
            t.to_json()
        }
        LpKind::Hybrid => {
            let kmax = a.kmax.unwrap_or(HYBRID_KMAX);
            if kmax < 2 {
                return Err(usage("--kmax must be at least 2"));
            }
            let e = solve_hybrid(&gamma, kmax).map_err(|e| Failure::Check(e.to_string()))?;
            let violation = rat::to_f64(&e.certificate.max_violation);
            println!("LP optimum = {:.9}", rat::to_f64(&e.optimum));
            println!("Gamma = {}", show(e.table.ratio()));
            println!("max violation {violation:e}");
            if violation > ACCEPT_VIOLATION {
                return Err(Failure::Check("hybrid table violates the LP".into()));
            }
            e.table.to_json()
        }
    };
    let text = serde_json::to_string_pretty(&table_json).expect("JSON");
    match &a.output {
        Some(p) => {
            write(p, &(text + "\n"))?;
            println!("wrote {}", p.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Outcome {
    if a.kmax == 0 {
        return Err(usage("--kmax must be at least 1"));
    }
    let variant = Variant::of(a.variant, a.kmax);
    let script = match (&a.chain, &a.script) {
        (Some(k), _) => Script::chain(*k),
        (None, Some(p)) => Script::from_json(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        (None, None) => return Err(usage("one of --chain or --script is required")),
    };
    let mode = match a.mode {
        Mode::Exact => VerifyMode::Exact,
        Mode::Mc => {
            let trials = a.trials.ok_or_else(|| usage("--mode mc needs --trials"))?;
            let seed = a.seed.ok_or_else(|| usage("--mode mc needs --seed"))?;
            if !(a.delta > 0.0 && a.delta < 1.0) {
                return Err(usage("--delta must lie in (0, 1)"));
            }
            VerifyMode::MonteCarlo { trials, delta: a.delta, seed }
        }
    };
    let report = eval::verify_panocs_bound(&variant, &script, mode).map_err(|e| Failure::Check(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&report).expect("JSON"));
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Check("PanOCS guarantee not met".into()))
    }
}

fn certify(a: CertifyArgs) -> Outcome {
    let ratio = parse_q(&a.gamma, "--gamma")?;
    if ratio <= Q::from_integer(0.into()) {
        return Err(usage("--gamma must be positive"));
    }
    let trace = RunTrace::from_json(&read(&a.trace)?).map_err(usage)?;
    let (inst, _, replayed) = allocators::replay(&trace).map_err(|e| Failure::Check(e.to_string()))?;
    let t = &replayed.totals;
    println!("replayed {} steps: P = {}, panorama = {}", replayed.steps.len(), t.p, t.panorama);
    if let (Some(pbar), Some(d)) = (&t.pbar, &t.dual) {
        println!("Pbar = {:.12}, D = {:.12}, equal exactly: {}", rat::to_f64(pbar), rat::to_f64(d), pbar == d);
    }
    if trace.table.is_none() && trace.totals.dual.is_none() {
        println!("no dual ledger to check");
        return Ok(());
    }
    let check = dual::check(&inst, &replayed.alphas(), &replayed.betas(), &ratio)
        .ok_or_else(|| Failure::Check(format!("more than {} impressions for subset enumeration", dual::MAX_IMPRESSIONS)))?;
    println!(
        "dual feasibility at Gamma = {}: min slack {:.12} (sign exact) over {} pairs",
        show(&ratio),
        rat::to_f64(&check.min_slack),
        check.pairs_checked
    );
    if check.feasible() {
        Ok(())
    } else {
        let ids: Vec<&str> = check.subset.iter().map(|&i| inst.impression_id(i)).collect();
        Err(Failure::Check(format!("infeasible for advertiser {} on {:?}", inst.advertiser_id(check.advertiser), ids)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Opt(a) => opt(a),
        Command::Lp(a) => lp(a),
        Command::PanocsVerify(a) => verify(a),
        Command::Certify(a) => certify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
