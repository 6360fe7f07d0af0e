use std::collections::HashSet;
use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use lowrank_gn::io::{read_matrix_market, MatrixMarket, RunConfig};
use lowrank_gn::linalg::{rayleigh_ritz, truncated_svd};
use lowrank_gn::problems::{
    evaluate, evaluate_instance, gen_lowrank_clustered, gen_mc_integer, gen_sensing, gen_sparse_spikes,
    gen_symmetric, SensingKind, SymmetricKind,
};
use lowrank_gn::solvers::{
    factorization_start, init_point, solve_adm, solve_factorization, solve_fsgn, solve_gn_admm, solve_l1,
    solve_lsgn, solve_rad_admm, solve_slsgn,
};
use lowrank_gn::{rng, selftest, DenseMatrix, Error, FactorPair, IterationTrace, LinearOperator, Problem};
use lowrank_gn::{SolverConfig, Status};

use crate::output::{read_dense, with_suffix, write_dense, write_trace, Summary};
use crate::{
    Cli, Command, Common, CompleteArgs, CompletionSolver, FactorizeArgs, FactorizeSolver, Failure, InpaintArgs,
    RecoverL1Args, SenseCompareArgs, SymArgs, SymKind,
};

type Outcome = Result<u8, Failure>;

// Random starting points use their own stream of the user seed.
const START_STREAM: u64 = 0x5851_f42d_4c95_7f2d;

/// Merged `--config` file and global flags.
struct Settings {
    run: RunConfig,
    /// Keys set in the config file or by a global flag.
    explicit: HashSet<String>,
    trace_out: Option<PathBuf>,
    result_out: Option<PathBuf>,
}

impl Settings {
    fn load(common: &Common) -> Result<Self, Failure> {
        let (mut run, mut explicit) = match &common.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(Error::from)?;
                let keys = text
                    .lines()
                    .filter_map(|l| l.split_once('='))
                    .map(|(k, _)| k.trim().to_string())
                    .collect::<HashSet<_>>();
                (text.parse::<RunConfig>()?, keys)
            }
            None => (RunConfig::default(), HashSet::new()),
        };
        if !explicit.contains("timing") {
            run.solver.timing = false;
        }
        let s = &mut run.solver;
        let mut flag = |key: &str| explicit.insert(key.to_string());
        if common.timing {
            s.timing = true;
            flag("timing");
        }
        if let Some(v) = common.seed {
            s.seed = v;
            flag("seed");
        }
        if let Some(v) = common.max_iters {
            s.max_iters = v;
            flag("max_iters");
        }
        if let Some(v) = common.eps1 {
            s.eps1 = v;
            flag("eps1");
        }
        if let Some(v) = common.eps2 {
            s.eps2 = v;
            flag("eps2");
        }
        run.validate()?;
        let trace_out = common.trace_out.clone().or_else(|| run.trace_out.clone());
        let result_out = common.result_out.clone().or_else(|| run.result_out.clone());
        Ok(Self { run, explicit, trace_out, result_out })
    }

    fn seed(&self) -> u64 {
        self.run.solver.seed
    }

    fn solver<E: ValueEnum>(&self, flag: Option<E>, default: E) -> Result<E, Failure> {
        if let Some(e) = flag {
            return Ok(e);
        }
        match &self.run.method {
            Some(name) => E::from_str(name, true).map_err(|e| Failure::Usage(format!("solver: {e}"))),
            None => Ok(default),
        }
    }

    /// Rejects a config `generator` this command cannot honor.
    fn generator(&self, allowed: &[&str]) -> Result<(), Failure> {
        match &self.run.generator {
            Some(g) if !allowed.contains(&g.as_str()) => {
                Err(Failure::Usage(format!("generator `{g}` (expected one of: {})", allowed.join(", "))))
            }
            _ => Ok(()),
        }
    }

    fn input(&self, flag: &Option<PathBuf>) -> Option<PathBuf> {
        flag.clone().or_else(|| self.run.input.clone())
    }

    fn finish(&self, summary: &Summary, trace: &IterationTrace) -> Outcome {
        if let Some(path) = &self.trace_out {
            write_trace(path, trace)?;
        }
        summary.emit(self.result_out.as_deref())?;
        Ok(status_code(&trace.status))
    }
}

fn status_code(status: &Status) -> u8 {
    if status.is_converged() {
        0
    } else if status.is_failure() {
        3
    } else {
        2
    }
}

fn rank_fits(r: usize, m: usize, n: usize) -> Result<(), Failure> {
    if r == 0 || r > m.min(n) {
        return Err(Failure::Usage(format!("--r {r} must lie in 1..={}", m.min(n))));
    }
    Ok(())
}

fn relative_gap(x: &DenseMatrix, truth: &DenseMatrix) -> f64 {
    (x - truth).norm() / truth.norm().max(f64::MIN_POSITIVE)
}

fn header(summary: &mut Summary, command: &str, solver: &str, trace: &IterationTrace) {
    summary.text("command", command);
    summary.text("solver", solver);
    summary.text("status", &trace.status);
    summary.text("iterations", trace.iterations());
    summary.float("objective", trace.last().objective);
}

pub fn run(cli: Cli) -> Outcome {
    if let Command::Selftest = cli.command {
        return selftest_cmd();
    }
    let settings = Settings::load(&cli.common)?;
    match cli.command {
        Command::Complete(a) => complete(&settings, a),
        Command::Factorize(a) => factorize(&settings, a),
        Command::RecoverL1(a) => recover_l1(&settings, a),
        Command::Sym(a) => sym(&settings, a),
        Command::SenseCompare(a) => sense_compare(&settings, a),
        Command::Inpaint(a) => inpaint(&settings, a),
        Command::Selftest => unreachable!(),
    }
}

fn solve_completion(
    prob: &Problem,
    solver: CompletionSolver,
    cfg: &SolverConfig,
) -> lowrank_gn::Result<(FactorPair, IterationTrace)> {
    let x0 = init_point(prob)?;
    match solver {
        CompletionSolver::Lsgn => solve_lsgn(prob, &x0, cfg),
        CompletionSolver::Fsgn => solve_fsgn(prob, &x0, cfg),
        CompletionSolver::Adm => solve_adm(prob, &x0, cfg),
        CompletionSolver::GnAdmm => solve_gn_admm(prob, &x0, cfg).map(|(s, t)| (s.x, t)),
        CompletionSolver::RadAdmm => solve_rad_admm(prob, &x0, cfg).map(|(s, t)| (s.x, t)),
    }
}

fn name<E: ValueEnum>(e: E) -> String {
    e.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn complete(s: &Settings, a: CompleteArgs) -> Outcome {
    let solver = s.solver(a.solver, CompletionSolver::Lsgn)?;
    let mut cfg = s.run.solver.clone();
    cfg.option = a.option.unwrap_or(cfg.option);
    cfg.rho = a.rho.unwrap_or(cfg.rho);
    cfg.validate()?;
    let r = a.r.or(s.run.r).unwrap_or(5);
    let mut summary = Summary::default();

    if let Some(path) = s.input(&a.input) {
        let MatrixMarket::Coordinate { rows, cols, omega, values } = read_matrix_market(&path)? else {
            return Err(Failure::Usage(format!("{} is not a coordinate file", path.display())));
        };
        if omega.is_empty() {
            return Err(Failure::Usage("--input holds no observations".into()));
        }
        rank_fits(r, rows, cols)?;
        let prob = Problem::least_squares(LinearOperator::selection(rows, cols, omega.clone())?, values.clone(), r)?;
        let (x, trace) = solve_completion(&prob, solver, &cfg)?;
        let met = evaluate(&x, &omega, &values)?;
        header(&mut summary, "complete", &name(solver), &trace);
        summary.float("delta_f", met.delta_f);
        summary.float("nmae", met.nmae);
        summary.float("delta_x", met.delta_x);
        return s.finish(&summary, &trace);
    }

    s.generator(&["mc"])?;
    let (m, n) = (a.m.or(s.run.m).unwrap_or(100), a.n.or(s.run.n).unwrap_or(200));
    rank_fits(r, m, n)?;
    let fraction = a.fraction.or(s.run.fraction).unwrap_or(0.5);
    let sigma = a.sigma.or(s.run.sigma).unwrap_or(0.0);
    let inst = gen_mc_integer(m, n, r, fraction, sigma, s.seed())?;
    let prob = inst.problem()?;
    let (x, trace) = solve_completion(&prob, solver, &cfg)?;
    let met = evaluate_instance(&x, &inst)?;
    header(&mut summary, "complete", &name(solver), &trace);
    summary.float("delta_f", met.delta_f);
    summary.float("nmae", met.nmae);
    summary.float("delta_x", met.delta_x);
    summary.float("recovery_error", relative_gap(&x.product(), &inst.ground_truth.product()));
    s.finish(&summary, &trace)
}

fn factorize(s: &Settings, a: FactorizeArgs) -> Outcome {
    let solver = s.solver(a.solver, FactorizeSolver::Fsgn)?;
    let r = a.r.or(s.run.r).unwrap_or(6);
    let b = match s.input(&a.input) {
        Some(path) => read_dense(&path)?,
        None => {
            s.generator(&["clustered"])?;
            let (m, n) = (a.m.or(s.run.m).unwrap_or(64), a.n.or(s.run.n).unwrap_or(64));
            rank_fits(r, m, n)?;
            gen_lowrank_clustered(m, n, r, s.seed())?.0
        }
    };
    let (m, n) = b.shape();
    rank_fits(r, m, n)?;
    let cfg = &s.run.solver;
    let x0 = factorization_start(m, n, r);
    let (x, trace) = match solver {
        FactorizeSolver::Fsgn => solve_factorization(&b, &x0, cfg)?,
        FactorizeSolver::Lsgn | FactorizeSolver::Adm => {
            let op = LinearOperator::identity(m, n);
            let prob = Problem::least_squares(op.clone(), op.apply(&b)?, r)?;
            if solver == FactorizeSolver::Lsgn {
                solve_lsgn(&prob, &x0, cfg)?
            } else {
                solve_adm(&prob, &x0, cfg)?
            }
        }
    };
    let mut summary = Summary::default();
    header(&mut summary, "factorize", &name(solver), &trace);
    if !trace.status.is_failure() {
        let rr = rayleigh_ritz(&x.u, &x.v, &b)?;
        let reference = truncated_svd(&b, r)?;
        let mut gap: f64 = 0.0;
        for (i, (got, want)) in rr.sigma.iter().zip(&reference.sigma).enumerate() {
            summary.float(&format!("sigma_{}", i + 1), *got);
            gap = gap.max((got - want).abs() / want.max(f64::MIN_POSITIVE));
        }
        summary.float("svd_gap", gap);
    }
    s.finish(&summary, &trace)
}

fn recover_l1(s: &Settings, a: RecoverL1Args) -> Outcome {
    let r = a.r.or(s.run.r).unwrap_or(2);
    let (b, low) = match s.input(&a.input) {
        Some(path) => (read_dense(&path)?, None),
        None => {
            s.generator(&["spikes"])?;
            let (m, n) = (a.m.or(s.run.m).unwrap_or(64), a.n.or(s.run.n).unwrap_or(64));
            rank_fits(r, m, n)?;
            let fraction = a.fraction.or(s.run.fraction).unwrap_or(0.02);
            let (b, low) = gen_sparse_spikes(m, n, r, fraction, a.magnitude.unwrap_or(5.0), s.seed())?;
            (b, Some(low))
        }
    };
    let (m, n) = b.shape();
    rank_fits(r, m, n)?;
    let mut cfg = s.run.solver.clone();
    cfg.rho = a.rho.unwrap_or(cfg.rho);
    cfg.dual_step = a.dual_step.unwrap_or(cfg.dual_step);
    cfg.validate()?;
    let op = LinearOperator::identity(m, n);
    let prob = Problem::least_squares(op.clone(), op.apply(&b)?, r)?;
    let x0 = FactorPair::new(DenseMatrix::eye(m, r), DenseMatrix::eye(n, r))?;
    let (x, trace) = solve_l1(&prob, &x0, &cfg)?;
    let mut summary = Summary::default();
    header(&mut summary, "recover-l1", "l1", &trace);
    if let Some(low) = low {
        summary.float("recovery_error", relative_gap(&x.product(), &low));
    }
    s.finish(&summary, &trace)
}

fn sym(s: &Settings, a: SymArgs) -> Outcome {
    let r = a.r.or(s.run.r).unwrap_or(2);
    let b = match s.input(&a.input) {
        Some(path) => read_dense(&path)?,
        None => {
            s.generator(&["psd", "indefinite"])?;
            let kind = match (a.kind, s.run.generator.as_deref()) {
                (Some(SymKind::Indefinite), _) | (None, Some("indefinite")) => SymmetricKind::Indefinite,
                _ => SymmetricKind::Psd,
            };
            let m = a.m.or(s.run.m).unwrap_or(32);
            rank_fits(r, m, m)?;
            gen_symmetric(m, r, kind, s.seed())?
        }
    };
    let (m, n) = b.shape();
    rank_fits(r, m, n)?;
    let op = LinearOperator::identity(m, n);
    let prob = Problem::least_squares(op.clone(), op.apply(&b)?, r)?;
    let u0 = rng::gaussian_matrix(m, r, &mut rng::seeded(s.seed() ^ START_STREAM));
    let (u, trace) = solve_slsgn(&prob, &u0, &s.run.solver)?;
    let mut summary = Summary::default();
    header(&mut summary, "sym", "slsgn", &trace);
    let stationarity = u.t_matmul(&prob.phi_prime(&u, &u)?).norm() / prob.b_norm().max(1.0);
    summary.float("stationarity", stationarity);
    s.finish(&summary, &trace)
}

struct Comparison {
    fsgn: IterationTrace,
    adm: IterationTrace,
    b_sq: f64,
}

fn sense_compare(s: &Settings, a: SenseCompareArgs) -> Outcome {
    s.generator(&["sensing"])?;
    if a.repeats == 0 {
        return Err(Failure::Usage("--repeats must be at least 1".into()));
    }
    let (m, n) = (a.m.or(s.run.m).unwrap_or(64), a.n.or(s.run.n).unwrap_or(64));
    let r = a.r.or(s.run.r).unwrap_or(8);
    rank_fits(r, m, n)?;
    let l_ratio = a.l_ratio.or(s.run.l_ratio).unwrap_or(0.5);
    if !(l_ratio > 0.0 && l_ratio.is_finite()) {
        return Err(Failure::Usage(format!("--l-ratio {l_ratio} must be positive")));
    }
    let l = ((l_ratio * (r * (m + n)) as f64).round() as usize).max(1);
    let sigma = a.sigma.or(s.run.sigma).unwrap_or(0.0);
    let kind = match a.density {
        Some(density) => SensingKind::SparseGaussian { density },
        None => SensingKind::DenseGaussian,
    };
    let mut cfg = s.run.solver.clone();
    cfg.max_iters = a.iters.unwrap_or(if s.explicit.contains("max_iters") { cfg.max_iters } else { 300 });
    if !s.explicit.contains("eps1") {
        // both schemes spend the whole budget
        cfg.eps1 = 1e-14;
    }

    let one = |seed: u64| -> lowrank_gn::Result<Comparison> {
        let inst = gen_sensing(m, n, r, l, kind, sigma, seed)?;
        let mut g = rng::seeded(seed ^ START_STREAM);
        let x0 = FactorPair::new(rng::gaussian_matrix(m, r, &mut g), rng::gaussian_matrix(n, r, &mut g))?;
        let (_, fsgn) = solve_fsgn(&inst.problem, &x0, &cfg)?;
        let (_, adm) = solve_adm(&inst.problem, &x0, &cfg)?;
        Ok(Comparison { fsgn, adm, b_sq: inst.problem.b_norm().powi(2) })
    };
    let seed = s.seed();
    let runs: Vec<lowrank_gn::Result<Comparison>> = std::thread::scope(|scope| {
        let workers: Vec<_> =
            (0..a.repeats as u64).map(|k| scope.spawn(move || one(seed.wrapping_add(k)))).collect();
        workers.into_iter().map(|w| w.join().expect("sense-compare worker panicked")).collect()
    });

    let stem = s.trace_out.clone().unwrap_or_else(|| PathBuf::from("sense-compare"));
    let mut summary = Summary::default();
    summary.text("command", "sense-compare");
    summary.text("measurements", l);
    summary.text("iterations", cfg.max_iters);
    let mut code = 0;
    for (k, run) in runs.into_iter().enumerate() {
        let c = run?;
        let tag = if a.repeats == 1 { String::new() } else { format!("-{k}") };
        write_trace(&with_suffix(&stem, &format!("{tag}-fsgn")), &c.fsgn)?;
        write_trace(&with_suffix(&stem, &format!("{tag}-adm")), &c.adm)?;
        let key = |name: &str| if a.repeats == 1 { name.to_string() } else { format!("repeat{k}.{name}") };
        let (f, d) = (c.fsgn.last().objective / c.b_sq, c.adm.last().objective / c.b_sq);
        summary.text(&key("fsgn_status"), &c.fsgn.status);
        summary.text(&key("adm_status"), &c.adm.status);
        summary.float(&key("fsgn_final"), f);
        summary.float(&key("adm_final"), d);
        summary.float(&key("ratio"), if d > 0.0 { f / d } else { f64::NAN });
        if c.fsgn.status.is_failure() || c.adm.status.is_failure() {
            code = 3;
        }
    }
    summary.emit(s.result_out.as_deref())?;
    Ok(code)
}

fn inpaint(s: &Settings, a: InpaintArgs) -> Outcome {
    let input = s.input(&a.input).ok_or_else(|| Failure::Usage("--input is required".into()))?;
    let mask = a.mask.or_else(|| s.run.mask.clone()).ok_or_else(|| Failure::Usage("--mask is required".into()))?;
    let solver = s.solver(a.solver, CompletionSolver::Lsgn)?;
    let r = a.r.or(s.run.r).unwrap_or(5);
    let image = read_dense(&input)?;
    let (m, n) = image.shape();
    let MatrixMarket::Coordinate { rows, cols, omega, .. } = read_matrix_market(&mask)? else {
        return Err(Failure::Usage("--mask must be a coordinate file".into()));
    };
    if (rows, cols) != (m, n) {
        return Err(Failure::Usage(format!("--mask is {rows}x{cols} but --input is {m}x{n}")));
    }
    if omega.is_empty() {
        return Err(Failure::Usage("--mask marks no known pixels".into()));
    }
    rank_fits(r, m, n)?;
    let b: Vec<f64> = omega.iter().map(|(i, j)| image[(i, j)]).collect();
    let (lo, hi) = b.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let prob = Problem::least_squares(LinearOperator::selection(m, n, omega)?, b, r)?;
    let (x, trace) = solve_completion(&prob, solver, &s.run.solver)?;
    write_dense(&a.out, &x.product().map(|v| v.clamp(lo, hi)))?;
    let mut summary = Summary::default();
    header(&mut summary, "inpaint", &name(solver), &trace);
    summary.text("known", prob.op().out_len());
    summary.float("clamp_low", lo);
    summary.float("clamp_high", hi);
    s.finish(&summary, &trace)
}

fn selftest_cmd() -> Outcome {
    let checks = selftest::run_all();
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!("{c}");
    }
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    Ok(if failed == 0 { 0 } else { 1 })
}
