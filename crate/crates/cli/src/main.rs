//! `qbdesign`: evaluate, optimize and analyse two-level screening designs
//! under the Q_B criterion.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qbdesign::criteria::{es2, main_effects_as, qb, ue_s2, AsOutcome, Prior};
use qbdesign::fixtures::{self, load_fixture};
use qbdesign::optimizer::{multi_restart, OptimizerConfig};
use qbdesign::projection::{projection_report, InteractionRange};
use qbdesign::sweep::{format_sig, sweep, SweepGrid};
use qbdesign::theory::{balance_intervals, lemma_feasible, qb_block_value, verify_block_pattern};
use qbdesign::wordcounts::{word_counts_default, WordCounts};
use qbdesign::{Design, ModelOrder};

#[derive(Parser, Debug)]
#[command(
    name = "qbdesign",
    version,
    about = "Q_B-criterion tools for two-level screening designs"
)]
struct Cli {
    /// Worker threads for parallel searches (0 = one per core).
    #[arg(long, global = true, env = "QBDESIGN_THREADS", default_value_t = 0)]
    threads: usize,

    /// Print real numbers with three decimals instead of six significant digits.
    #[arg(long, global = true)]
    fixed3: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report word counts, Q_B and classical criteria of a design.
    Evaluate(EvaluateArgs),
    /// Search for a Q_B-optimal design by multi-restart coordinate exchange.
    Optimize(OptimizeArgs),
    /// Tabulate Q_B of several designs over a grid of pi1 values (CSV).
    Sweep(SweepArgs),
    /// Estimability and A_s of all projection submodels (CSV).
    Project(ProjectArgs),
    /// Level-balance intervals for N = 2 (mod 4) and block-pattern checks.
    Theory(TheoryArgs),
    /// Inspect and verify the bundled reference designs.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

/// Design files are `-1`/`1` matrices, one run per line; `fixture:<id>`
/// names a bundled design.
#[derive(Args, Debug)]
struct PriorArgs {
    /// Maximal model: 1 (first order) or 2 (second order).
    #[arg(long, default_value = "1")]
    order: ModelOrder,
    /// Prior probability that a main effect is active.
    #[arg(long)]
    pi1: f64,
    /// Prior probability that an interaction of two active factors is active
    /// (second-order model only).
    #[arg(long)]
    pi2: Option<f64>,
}

impl PriorArgs {
    fn prior(&self) -> Result<Prior> {
        let pi2 = match (self.order, self.pi2) {
            (ModelOrder::SecondOrder, None) => bail!("--pi2 is required with --order 2"),
            (_, p) => p.unwrap_or(0.0),
        };
        Ok(Prior::new(self.pi1, pi2, self.order)?)
    }
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Design file or `fixture:<id>`.
    design: String,
    #[command(flatten)]
    prior: PriorArgs,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[arg(long)]
    runs: usize,
    #[arg(long)]
    factors: usize,
    #[command(flatten)]
    prior: PriorArgs,
    #[arg(long, default_value_t = 100)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on consecutive sweeps without an accepted flip.
    #[arg(long, default_value_t = 2)]
    max_stale_sweeps: usize,
    /// A flip is accepted only if it lowers Q_B by more than this.
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    /// Break Q_B ties by restart index only, ignoring main-effects A_s.
    #[arg(long)]
    no_tiebreak: bool,
    /// Write the best design here instead of printing it.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Print one line per restart.
    #[arg(long)]
    log: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Two or more design files or `fixture:<id>` names.
    #[arg(required = true, num_args = 2..)]
    designs: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    lo: f64,
    #[arg(long, default_value_t = 0.8)]
    hi: f64,
    #[arg(long, default_value_t = 0.001)]
    step: f64,
    #[arg(long, default_value = "1")]
    order: ModelOrder,
    #[arg(long, default_value_t = 0.0)]
    pi2: f64,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    /// Design file or `fixture:<id>`.
    design: String,
    /// Projection sizes (number of factors in each submodel).
    #[arg(long, short, value_delimiter = ',', required = true)]
    f: Vec<usize>,
    /// Smallest number of interactions per submodel.
    #[arg(long, default_value_t = 1)]
    t_min: usize,
    /// Largest number of interactions (default: as many as N − 1 − f allows).
    #[arg(long)]
    t_max: Option<usize>,
}

#[derive(Args, Debug)]
struct TheoryArgs {
    #[arg(long)]
    runs: usize,
    #[arg(long)]
    factors: usize,
    /// Report the optimal split of level-balanced factors at this pi1.
    #[arg(long)]
    pi1: Option<f64>,
    /// Check a design's information matrix against the two-block pattern.
    #[arg(long)]
    design: Option<String>,
}

#[derive(Subcommand, Debug)]
enum FixtureAction {
    /// List bundled fixture ids.
    List,
    /// Verify fixtures against their recorded expectations (all if none given).
    Check { ids: Vec<String> },
    /// Print a fixture's design and expectations.
    Show { id: String },
}

struct Fmt {
    fixed3: bool,
}

impl Fmt {
    fn num(&self, v: f64) -> String {
        if self.fixed3 {
            format!("{v:.3}")
        } else {
            format_sig(v, 6)
        }
    }

    fn word_counts(&self, w: &WordCounts) -> String {
        let parts: Vec<String> = (1..=w.k_max())
            .map(|k| self.num(w.b_f64(k).expect("computed")))
            .collect();
        format!("({})", parts.join(", "))
    }

    fn as_outcome(&self, a: AsOutcome) -> String {
        match a {
            AsOutcome::Estimable(v) => self.num(v),
            AsOutcome::NonEstimable => "not estimable".into(),
        }
    }
}

fn load_design(spec: &str) -> Result<Design> {
    if let Some(id) = spec.strip_prefix("fixture:") {
        let fx = load_fixture(id)?;
        return fx
            .design
            .with_context(|| format!("fixture {id} has no design matrix"));
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
    Design::parse(&text).with_context(|| format!("parsing {spec}"))
}

fn label(spec: &str) -> String {
    match spec.strip_prefix("fixture:") {
        Some(id) => id.to_string(),
        None => Path::new(spec)
            .file_stem()
            .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned()),
    }
}

fn evaluate(args: &EvaluateArgs, fmt: &Fmt) -> Result<String> {
    let d = load_design(&args.design)?;
    let prior = args.prior.prior()?;
    let w = word_counts_default(&d);
    let profile = d.balance_profile();
    let e = es2(&d)?;
    let ue = ue_s2(&d);
    let mut out = String::new();
    writeln!(out, "runs: {}", d.runs())?;
    writeln!(out, "factors: {}", d.factors())?;
    writeln!(
        out,
        "level-balanced: {} of {} (imbalance per factor: {})",
        profile.n_balanced,
        d.factors(),
        profile
            .imbalance
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    )?;
    writeln!(out, "word counts: {w}")?;
    writeln!(out, "word counts (decimal): {}", fmt.word_counts(&w))?;
    writeln!(
        out,
        "Q_B ({}, pi1={}, pi2={}): {}",
        prior.order,
        prior.pi1,
        prior.pi2,
        fmt.num(qb(&w, &prior))
    )?;
    writeln!(
        out,
        "E(s2): {} (level-balanced design: {})",
        fmt.num(e.value),
        if e.b1_zero { "yes" } else { "no" }
    )?;
    writeln!(
        out,
        "UE(s2): {ue} = {}",
        fmt.num(*ue.numer() as f64 / *ue.denom() as f64)
    )?;
    writeln!(
        out,
        "A_s (main effects): {}",
        fmt.as_outcome(main_effects_as(&d))
    )?;
    Ok(out)
}

fn optimize(args: &OptimizeArgs, fmt: &Fmt) -> Result<String> {
    let mut cfg = OptimizerConfig::new(args.runs, args.factors, args.prior.prior()?);
    cfg.restarts = args.restarts;
    cfg.seed = args.seed;
    cfg.max_stale_sweeps = args.max_stale_sweeps;
    cfg.epsilon = args.epsilon;
    cfg.tiebreak_as = !args.no_tiebreak;
    let res = multi_restart(&cfg)?;
    let mut out = String::new();
    if args.log {
        for l in &res.restart_log {
            writeln!(out, "{l}")?;
        }
    }
    writeln!(out, "runs: {}", args.runs)?;
    writeln!(out, "factors: {}", args.factors)?;
    writeln!(out, "restarts: {} (seed {})", cfg.restarts, cfg.seed)?;
    writeln!(out, "best restart: {}", res.best_restart)?;
    writeln!(out, "Q_B: {}", fmt.num(res.qb))?;
    writeln!(out, "word counts: {}", res.word_counts)?;
    writeln!(out, "level-balanced: {}", res.n_level_balanced)?;
    writeln!(
        out,
        "A_s (main effects): {}",
        fmt.as_outcome(res.main_effects_as)
    )?;
    match &args.output {
        Some(path) => {
            fs::write(path, format!("{}\n", res.best))
                .with_context(|| format!("writing {}", path.display()))?;
            writeln!(out, "design written to {}", path.display())?;
        }
        None => {
            writeln!(out, "design:")?;
            writeln!(out, "{}", res.best)?;
        }
    }
    Ok(out)
}

fn sweep_cmd(args: &SweepArgs, fmt: &Fmt) -> Result<String> {
    let designs: Vec<WordCounts> = args
        .designs
        .iter()
        .map(|s| load_design(s).map(|d| word_counts_default(&d)))
        .collect::<Result<_>>()?;
    let labels: Vec<String> = args.designs.iter().map(|s| label(s)).collect();
    let grid = SweepGrid::new(args.lo, args.hi, args.step)?;
    let s = sweep(&designs, &grid, args.order, args.pi2)?;
    let mut out = if fmt.fixed3 {
        let mut csv = String::from("pi1");
        for l in &labels {
            write!(csv, ",qb_{l}")?;
        }
        for l in &labels {
            write!(csv, ",releff_{l}")?;
        }
        csv.push_str(",best\n");
        for r in &s.rows {
            write!(csv, "{}", fmt.num(r.pi1))?;
            for v in r.qb.iter().chain(&r.relative_efficiency) {
                write!(csv, ",{}", fmt.num(*v))?;
            }
            writeln!(csv, ",{}", labels[r.argmin])?;
        }
        csv
    } else {
        s.to_csv(&labels, 6)
    };
    for c in &s.crossovers {
        writeln!(
            out,
            "# crossover near pi1={} ({} -> {} between {} and {})",
            fmt.num(c.location()),
            labels[c.from],
            labels[c.to],
            fmt.num(c.before),
            fmt.num(c.after)
        )?;
    }
    Ok(out)
}

fn project(args: &ProjectArgs, fmt: &Fmt) -> Result<String> {
    let d = load_design(&args.design)?;
    let range = InteractionRange {
        t_min: args.t_min,
        t_max: args.t_max,
    };
    let rep = projection_report(&d, &args.f, range)?;
    let mut out = String::from("f,t,n_models,no_est,mean_as\n");
    for r in &rep.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.f,
            r.t,
            r.n_models,
            r.no_est,
            fmt.num(r.mean_as)
        )?;
    }
    Ok(out)
}

fn theory(args: &TheoryArgs, fmt: &Fmt) -> Result<String> {
    let table = balance_intervals(args.runs, args.factors)?;
    let mut out = table.to_string();
    if let Some(pi1) = args.pi1 {
        let iv = table.interval_for(pi1)?;
        let n1 = iv.level_balanced;
        writeln!(
            out,
            "pi1={pi1}: {} level-balanced, {} non-level-balanced, Q_B = {}{}",
            n1,
            iv.non_level_balanced,
            fmt.num(qb_block_value(args.runs, args.factors, n1, pi1)),
            if lemma_feasible(args.factors, n1) {
                ""
            } else {
                " (outside the range where the block form is known optimal)"
            }
        )?;
    }
    if let Some(spec) = &args.design {
        let d = load_design(spec)?;
        if d.runs() != args.runs || d.factors() != args.factors {
            bail!(
                "design is {}x{}, expected {}x{}",
                d.runs(),
                d.factors(),
                args.runs,
                args.factors
            );
        }
        write!(out, "{}", verify_block_pattern(&d)?)?;
    }
    Ok(out)
}

/// Returns the report and whether every check passed.
fn fixtures_cmd(action: &FixtureAction) -> Result<(String, bool)> {
    let mut out = String::new();
    match action {
        FixtureAction::List => {
            for (id, desc) in fixtures::list() {
                writeln!(out, "{id}\t{desc}")?;
            }
            Ok((out, true))
        }
        FixtureAction::Check { ids } => {
            let ids: Vec<String> = if ids.is_empty() {
                fixtures::list().into_iter().map(|(id, _)| id).collect()
            } else {
                ids.clone()
            };
            let mut all = true;
            for id in ids {
                let c = fixtures::check(&load_fixture(&id)?)?;
                all &= c.passed();
                writeln!(out, "{c}")?;
            }
            Ok((out, all))
        }
        FixtureAction::Show { id } => {
            let fx = load_fixture(id)?;
            writeln!(out, "# {}: {}", fx.id, fx.description)?;
            writeln!(out, "# order: {}", fx.order)?;
            for (k, b) in &fx.expected_b {
                writeln!(out, "# expected b{k} = {b}")?;
            }
            match &fx.design {
                Some(d) => writeln!(out, "{d}")?,
                None => writeln!(out, "# no design matrix (information matrix only)")?,
            }
            if let Some(xtx) = &fx.expected_xtx {
                writeln!(out, "# expected information matrix:")?;
                writeln!(out, "{xtx}")?;
            }
            Ok((out, true))
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let fmt = Fmt { fixed3: cli.fixed3 };
    let (out, ok) = match &cli.command {
        Command::Evaluate(a) => (evaluate(a, &fmt)?, true),
        Command::Optimize(a) => (optimize(a, &fmt)?, true),
        Command::Sweep(a) => (sweep_cmd(a, &fmt)?, true),
        Command::Project(a) => (project(a, &fmt)?, true),
        Command::Theory(a) => (theory(a, &fmt)?, true),
        Command::Fixtures { action } => fixtures_cmd(action)?,
    };
    print!("{out}");
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
