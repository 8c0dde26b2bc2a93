//! Command-line driver behind the `santa` binary.
//!
//! Exit codes: 0 success, 1 bad input or other error, 2 reject or
//! violation found, 3 budget exhausted.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use serde_json::json;

use crate::auggraph::{build_aug_instance, check_feasible};
use crate::augment::{AugAnswer, StepParams, augment_once, exact_aug_solver, lp_aug_solver, solve};
use crate::clp::{ClpContext, ClpParams, ClpStats, Membership, membership};
use crate::config::{AugSolverKind, Config, Engine, Mode, Params};
use crate::error::{Error, Result};
use crate::generators::{GenParams, generate};
use crate::instance::{Instance, SubmodularVerdict, ValuationOracle, check_submodular};
use crate::io::{AllocationSpec, FORMAT_VERSION, ReportWriter, instance_to_json, parse_instance_spec, read_instance};
use crate::oracle::brute_opt;
use crate::reduction::canonicalize;
use crate::rng::stream;
use crate::rounding::round_all_levels;
use crate::sep::{GreedyOptions, continuous_greedy, multilinear_exact};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_REJECT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "santa", version, about = "Max-min fair allocation with monotone submodular valuations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline and write an allocation.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Allocation JSON destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON-lines report destination.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate an instance; planted families also write `<out>.opt.json`.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long)]
        players: usize,
        #[arg(long)]
        resources: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instance destination (stdout, without sidecar, when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively check every valuation of an instance.
    CheckSubmodular { instance: PathBuf },
    /// Continuous greedy on a bundled 6-element coverage function under `|S| ≤ 2`.
    Cgreedy {
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decide configuration-LP membership at a constant budget.
    ClpMembership {
        #[command(flatten)]
        aug: AugArgs,
    },
    /// Solve the configuration LP and round it level by level.
    Round {
        #[command(flatten)]
        aug: AugArgs,
    },
    /// One augmentation step from the initial canonical assignment.
    AugmentOnce {
        #[command(flatten)]
        aug: AugArgs,
    },
    /// Exact optimum by enumeration (tiny instances only).
    Brute { instance: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Theory,
    Practical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EngineArg {
    ColumnGeneration,
    Ellipsoid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolverArg {
    Lp,
    Exact,
}

/// Config file plus flag overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<u32>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long, value_enum)]
    pub aug_solver: Option<SolverArg>,
    #[arg(long)]
    pub grid_steps: Option<usize>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<Config> {
        let mut c = match &self.config {
            Some(p) => Config::from_json(&read_text(p)?)?,
            None => Config::default(),
        };
        if let Some(m) = self.mode {
            c.mode = match m {
                ModeArg::Theory => Mode::Theory,
                ModeArg::Practical => Mode::Practical,
            };
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c.alpha = self.alpha.or(c.alpha);
        c.beta = self.beta.or(c.beta);
        c.gamma = self.gamma.or(c.gamma);
        c.h = self.h.or(c.h);
        if let Some(e) = self.engine {
            c.engine = Some(match e {
                EngineArg::ColumnGeneration => Engine::ColumnGeneration,
                EngineArg::Ellipsoid => Engine::Ellipsoid,
            });
        }
        if let Some(s) = self.aug_solver {
            c.aug_solver = match s {
                SolverArg::Lp => AugSolverKind::Lp,
                SolverArg::Exact => AugSolverKind::Exact,
            };
        }
        if let Some(g) = self.grid_steps {
            c.grid_steps = g;
        }
        Ok(c)
    }
}

/// Instance, target value and config for the component subcommands.
#[derive(Debug, Clone, Args)]
pub struct AugArgs {
    pub instance: PathBuf,
    /// Target value the valuations are normalized by.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Per-edge budget for membership (defaults to the rounding budget).
    #[arg(long)]
    pub budget: Option<f64>,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

fn read_text(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| Error::Input(format!("{}: {e}", p.display())))
}

fn write_file(p: &Path, text: &str) -> Result<()> {
    fs::write(p, text).map_err(|e| Error::Input(format!("{}: {e}", p.display())))
}

/// Size parameter `n` used to resolve a config: players plus resources.
pub fn instance_size(inst: &Instance) -> usize {
    inst.num_players() + inst.num_resources()
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Budget(_) => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Solve { instance, cfg, out: dest, report } => {
            cmd_solve(instance, cfg, dest.as_deref(), report.as_deref(), out, err)
        }
        Command::Gen { family, players, resources, seed, out: dest } => {
            let p = GenParams { family: family.parse()?, players: *players, resources: *resources, seed: *seed };
            cmd_gen(&p, dest.as_deref(), out)
        }
        Command::CheckSubmodular { instance } => cmd_check_submodular(instance, out),
        Command::Cgreedy { delta, samples, seed } => cmd_cgreedy(*delta, *samples, *seed, out),
        Command::ClpMembership { aug } => cmd_clp_membership(aug, out),
        Command::Round { aug } => cmd_round(aug, out),
        Command::AugmentOnce { aug } => cmd_augment_once(aug, out),
        Command::Brute { instance } => cmd_brute(instance, out),
    }
}

fn cmd_solve(
    path: &Path,
    cfg: &ConfigArgs,
    dest: Option<&Path>,
    report: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let inst = read_instance(path)?;
    let config = cfg.load()?;
    let params = config.resolve(instance_size(&inst))?;
    let rep = solve(&inst, &params)?;
    let code = if rep.all_rejected() {
        EXIT_REJECT
    } else if rep.budget_exhausted() {
        EXIT_BUDGET
    } else {
        EXIT_OK
    };
    let alloc = AllocationSpec::new(&inst, &rep.assignment, rep.eta_star);
    let alloc_text = serde_json::to_string_pretty(&alloc)? + "\n";
    match dest {
        Some(p) => write_file(p, &alloc_text)?,
        None => out.write_all(alloc_text.as_bytes())?,
    }
    if let Some(p) = report {
        let mut w = ReportWriter::new(Vec::new());
        w.record(
            "run",
            json!({
                "instance": path.display().to_string(),
                "config_file": cfg.config.as_ref().map(|p| p.display().to_string()),
                "seed": config.seed,
                "config": config,
                "params": params,
            }),
        )?;
        for a in &rep.attempts {
            w.record("attempt", a)?;
        }
        for (eta, steps) in &rep.steps {
            for s in steps {
                let mut v = serde_json::to_value(s)?;
                v["eta"] = json!(eta);
                w.record("step", v)?;
            }
        }
        w.record(
            "summary",
            json!({
                "eta_star": rep.eta_star,
                "min_value": rep.min_value,
                "opt_upper_bound": rep.opt_upper_bound,
                "stats": rep.stats,
                "exit_code": code,
            }),
        )?;
        write_file(p, &String::from_utf8(w.into_inner()).expect("utf-8 json"))?;
    }
    writeln!(err, "instance      {} ({} players, {} resources)", path.display(), inst.num_players(), inst.num_resources())?;
    writeln!(err, "mode          {:?}, seed {}", params.mode, params.seed)?;
    writeln!(err, "parameters    α = {}, β = {}, γ = {}, h = {}", params.alpha, params.beta, params.gamma, params.h)?;
    for a in &rep.attempts {
        let detail = if a.detail.is_empty() { String::new() } else { format!(" ({})", a.detail) };
        writeln!(err, "  η = {:<12.6} {}{}", a.eta, a.outcome, detail)?;
    }
    writeln!(err, "eta_star      {}", rep.eta_star)?;
    writeln!(err, "min value     {}", rep.min_value)?;
    if let Some(u) = rep.opt_upper_bound {
        writeln!(err, "OPT below     {u}")?;
    }
    writeln!(
        err,
        "lp work       {} separation calls, {} LP solves, {} columns",
        rep.stats.sep_calls, rep.stats.lp_solves, rep.stats.columns
    )?;
    Ok(code)
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".opt.json");
    PathBuf::from(s)
}

fn cmd_gen(p: &GenParams, dest: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let g = generate(p)?;
    let text = instance_to_json(&g.instance)?;
    match dest {
        None => out.write_all(text.as_bytes())?,
        Some(path) => {
            write_file(path, &text)?;
            if let Some((a, opt)) = &g.planted {
                let side = json!({
                    "format_version": FORMAT_VERSION,
                    "family": p.family.name(),
                    "players": p.players,
                    "resources": p.resources,
                    "seed": p.seed,
                    "opt": opt,
                    "planted": AllocationSpec::new(&g.instance, a, *opt),
                });
                write_file(&sidecar_path(path), &(serde_json::to_string_pretty(&side)? + "\n"))?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_check_submodular(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let inst = parse_instance_spec(&read_text(path)?)?.build_unchecked()?;
    let name = |r: &usize| inst.resource_ids()[*r].clone();
    let names = |s: &[usize]| s.iter().map(name).collect::<Vec<_>>();
    let mut code = EXIT_OK;
    for p in 0..inst.num_players() {
        let id = &inst.player_ids()[p];
        match check_submodular(inst.valuation(p))? {
            SubmodularVerdict::Ok => writeln!(out, "{id}: ok")?,
            SubmodularVerdict::NotNormalized { value } => {
                code = EXIT_REJECT;
                writeln!(out, "{id}: not normalized, f(∅) = {value}")?;
            }
            SubmodularVerdict::NotMonotone { set, r } => {
                code = EXIT_REJECT;
                writeln!(out, "{id}: not monotone, A = {:?}, r = {}", names(&set), name(&r))?;
            }
            SubmodularVerdict::Counterexample { a, b, r } => {
                code = EXIT_REJECT;
                writeln!(out, "{id}: counterexample A = {:?}, B = {:?}, r = {}", names(&a), names(&b), name(&r))?;
            }
        }
    }
    Ok(code)
}

/// The bundled example: six sets over a weighted universe of eight elements.
pub fn cgreedy_example() -> ValuationOracle {
    let covers = vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5], vec![0, 5], vec![6], vec![1, 6, 7]];
    let weights = vec![1.0, 2.0, 1.0, 2.0, 1.0, 1.0, 3.0, 1.0];
    ValuationOracle::weighted_coverage(covers, weights).expect("valid example")
}

fn cmd_cgreedy(delta: f64, samples: usize, seed: u64, out: &mut dyn Write) -> Result<i32> {
    const K: usize = 2;
    let f = cgreedy_example();
    let n = f.domain();
    let opts = GreedyOptions { delta, samples, exact_limit: 10 };
    let mut rng = stream(seed, &[0x6367]);
    let top_k = |w: &[f64]| -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let mut idx: Vec<usize> = (0..w.len()).collect();
        idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        let mut x = vec![0.0; w.len()];
        for &j in idx.iter().take(K) {
            if w[j] > 0.0 {
                x[j] = 1.0;
            }
        }
        Ok(Some((x.clone(), x)))
    };
    let g =
        continuous_greedy(n, |s| f.value(s), &opts, &mut rng, top_k)?.ok_or_else(|| Error::Internal("empty polytope".into()))?;
    let fy = multilinear_exact(|s| f.value(s), &g.y)?;
    let mut opt = 0.0f64;
    for mask in 0..1usize << n {
        if mask.count_ones() as usize <= K {
            let s: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
            opt = opt.max(f.value(&s));
        }
    }
    let y: Vec<String> = g.y.iter().map(|v| format!("{v:.4}")).collect();
    writeln!(out, "y      = [{}]", y.join(", "))?;
    writeln!(out, "F(y)   = {fy:.6}")?;
    writeln!(out, "OPT    = {opt:.6}")?;
    writeln!(out, "ratio  = {:.6} (guarantee 1 - 1/e = {:.6})", fy / opt, 1.0 - (-1.0f64).exp())?;
    Ok(EXIT_OK)
}

struct AugSetup {
    params: Params,
    canon: crate::reduction::CanonicalInstance,
    sigma: crate::instance::Assignment,
    inst: crate::auggraph::AugInstance,
    budget: f64,
}

fn aug_setup(a: &AugArgs) -> Result<AugSetup> {
    let instance = read_instance(&a.instance)?;
    if !(a.eta > 0.0) {
        return Err(Error::Input("eta must be positive".into()));
    }
    let params = a.cfg.load()?.resolve(instance_size(&instance))?;
    let canon = canonicalize(&instance.scaled(a.eta), params.gamma)?;
    let sigma = canon.initial_assignment();
    let inst = build_aug_instance(&canon, &sigma, params.h)?;
    let budget = a.budget.unwrap_or(params.rounding_gamma);
    Ok(AugSetup { params, canon, sigma, inst, budget })
}

fn collector(s: &AugSetup) -> usize {
    s.inst.layout.as_ref().expect("canonical layout").collector
}

fn clp_params(s: &AugSetup) -> ClpParams {
    let mut cp = ClpParams::from_params(&s.params);
    cp.seed = stream(s.params.seed, &[1]).next_u64();
    cp
}

fn cmd_clp_membership(a: &AugArgs, out: &mut dyn Write) -> Result<i32> {
    let s = aug_setup(a)?;
    let t = collector(&s);
    let mut ctx = ClpContext::new(&s.inst, clp_params(&s));
    let b = vec![s.budget; s.inst.total_edges()];
    let res = membership(&mut ctx, 0, &[t], &b)?;
    writeln!(out, "levels {}, edges {}, budget {}", s.inst.depth(), s.inst.total_edges(), s.budget)?;
    let code = match &res {
        Membership::Member(w) => {
            let peak = w.usage().iter().map(|&(_, x)| x).fold(0.0, f64::max);
            writeln!(out, "member: {} columns, weight on t {:.6}, peak edge usage {:.6}", w.num_columns(), w.weight_of(t), peak)?;
            EXIT_OK
        }
        Membership::Separated(hp) => {
            writeln!(out, "separated: w·b = {:.6} < rhs = {:.6}", hp.eval(&b), hp.rhs)?;
            EXIT_REJECT
        }
    };
    print_stats(&ctx.stats, out)?;
    Ok(code)
}

fn print_stats(st: &ClpStats, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "separation calls {}, LP solves {}, columns {}", st.sep_calls, st.lp_solves, st.columns)?;
    Ok(())
}

fn cmd_round(a: &AugArgs, out: &mut dyn Write) -> Result<i32> {
    let s = aug_setup(a)?;
    let t = collector(&s);
    let cp = clp_params(&s);
    let seed = cp.seed;
    let mut ctx = ClpContext::new(&s.inst, cp);
    let b = vec![s.budget; s.inst.total_edges()];
    let w = match membership(&mut ctx, 0, &[t], &b)? {
        Membership::Member(w) => w,
        Membership::Separated(_) => {
            writeln!(out, "separated: nothing to round")?;
            return Ok(EXIT_REJECT);
        }
    };
    let r = round_all_levels(&s.inst, &w, &[t], s.params.alpha, s.budget, seed, s.params.rounding_attempts)?;
    for l in &r.levels {
        writeln!(
            out,
            "level {}: γ = {:.3}, congestion {}, next-level peak {:.3}, attempts {}",
            l.level, r.gammas[l.level], l.congestion, l.next_peak, l.attempts
        )?;
    }
    let beta = r.solution.congestion().max(1);
    let verdict = check_feasible(&s.inst, &r.solution, &[t], s.params.alpha, beta);
    writeln!(out, "feasible at coverage 1/{} and congestion {}: {:?}", s.params.alpha, beta, verdict)?;
    Ok(EXIT_OK)
}

fn cmd_augment_once(a: &AugArgs, out: &mut dyn Write) -> Result<i32> {
    let s = aug_setup(a)?;
    let mut stats = ClpStats::default();
    let answer = match s.params.aug_solver {
        AugSolverKind::Exact => exact_aug_solver()(&s.inst, 1)?,
        AugSolverKind::Lp => lp_aug_solver(&s.params, &mut stats)(&s.inst, 1)?,
    };
    let AugAnswer::Solution { solution, alpha, beta } = answer else {
        writeln!(out, "no solution with coverage 1 and congestion 1 exists")?;
        return Ok(EXIT_REJECT);
    };
    let p = StepParams { alpha, beta, h: s.params.h, k: 1, strict: s.params.mode == Mode::Theory };
    let step = augment_once(&s.canon, &s.sigma, &s.inst, &solution, p)?;
    writeln!(out, "{}", serde_json::to_string(&step)?)?;
    Ok(EXIT_OK)
}

fn cmd_brute(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let inst = read_instance(path)?;
    let (opt, a) = brute_opt(&inst)?;
    writeln!(out, "OPT = {opt}")?;
    writeln!(out, "{}", serde_json::to_string_pretty(&AllocationSpec::new(&inst, &a, opt))?)?;
    Ok(EXIT_OK)
}
