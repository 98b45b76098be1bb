//! One function per subcommand. Each turns a resolved configuration into
//! result tables, a JSON summary and a list of failed checks.

use std::f64::consts::{LN_2, PI};

use exlab_core::cumulants::{
    envelope_entry, joint_cumulant, stationary_variance_check, summarize_envelope, SamplingPlan, TestFunction,
};
use exlab_core::estimates::{
    comparison_identity_check, decay_slope, grad_bound_probe, kernel_difference_sums, pair_set_states,
    rw_gradient_sum, tv_gradient_sums, BoundReport, PairSet,
};
use exlab_core::exclusion::{sample_bernoulli_field, simulate_labelled, Stirring};
use exlab_core::lattice::SiteGrid;
use exlab_core::pam::{
    build_environment, compare_summaries, pam_solve, probe_replica, renorm_constant, summarize_replicas,
    EnvironmentSpec, InitialCondition, PamConfig, RenormSource, PROBE_STATISTICS,
};
use exlab_core::{ExclusionSystem, Geometry, ParticleConfig, RngStream, SpaceTimePoint};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::{parse_particles, Command, ConfigError, ExperimentConfig};
use crate::table::{Cell, ResultTable};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] exlab_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl RunError {
    pub fn is_capacity(&self) -> bool {
        matches!(self, RunError::Core(exlab_core::Error::Capacity { .. }))
    }
}

type Result<T> = std::result::Result<T, RunError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(RunError::Usage(msg.into()))
}

/// What a run produced.
#[derive(Debug, Default)]
pub struct Outcome {
    /// `(suffix, table)`; the empty suffix is the main table.
    pub tables: Vec<(String, ResultTable)>,
    pub summary: Map<String, Value>,
    /// Descriptions of failed checks; non-empty means exit code 2.
    pub failures: Vec<String>,
}

impl Outcome {
    fn main(table: ResultTable) -> Self {
        Outcome { tables: vec![(String::new(), table)], ..Default::default() }
    }

    fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.command() {
        Command::SimulateSsep => simulate_ssep(cfg),
        Command::KernelExact => kernel_exact(cfg),
        Command::KernelMc => kernel_mc(cfg),
        Command::GradBound => grad_bound(cfg),
        Command::TvSum => tv_sum(cfg),
        Command::RwGradSum => rw_grad_sum(cfg),
        Command::CompareRw => compare_rw(cfg),
        Command::DiffSum => diff_sum(cfg),
        Command::Cumulants => cumulants(cfg),
        Command::Fluctuation => fluctuation(cfg),
        Command::RenormConst => renorm_const(cfg),
        Command::Pam => pam(cfg),
        Command::ProbeConvergence => probe_convergence(cfg),
    }
}

/// Column names `{prefix}{i}_{axis}` for a `k`-particle configuration.
fn coord_columns(prefix: &str, k: usize, d: usize) -> Vec<String> {
    (0..k).flat_map(|i| (0..d).map(move |a| format!("{prefix}{i}_{a}"))).collect()
}

fn coord_cells(c: &ParticleConfig) -> Vec<Cell> {
    c.positions().iter().flat_map(|p| p.coords().iter().map(|&v| Cell::Int(v))).collect()
}

fn table(fixed_front: &[&str], coords: Vec<String>, fixed_back: &[&str]) -> ResultTable {
    let mut cols: Vec<String> = fixed_front.iter().map(|s| s.to_string()).collect();
    cols.extend(coords);
    cols.extend(fixed_back.iter().map(|s| s.to_string()));
    ResultTable { columns: cols, rows: Vec::new() }
}

fn row(front: Vec<Cell>, coords: Vec<Cell>, back: Vec<Cell>) -> Vec<Cell> {
    front.into_iter().chain(coords).chain(back).collect()
}

fn key_of(t: f64) -> String {
    crate::table::fmt_g17(t)
}

/// Torus system plus a starting configuration with `k` particles.
fn system_and_start(cfg: &ExperimentConfig) -> Result<(ExclusionSystem, ParticleConfig)> {
    let (d, side, k) = (cfg.usize("d")?, cfg.i64("L")?, cfg.usize("k")?);
    let x = cfg.particles("x")?;
    check_start(&x, k, d)?;
    Ok((ExclusionSystem::torus(d, side, k)?, x))
}

fn check_start(x: &ParticleConfig, k: usize, d: usize) -> Result<()> {
    if x.len() != k || x.dim() != d {
        return usage(format!("x has {} points in dimension {}, expected {k} in dimension {d}", x.len(), x.dim()));
    }
    Ok(())
}

fn simulate_ssep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (d, side, rho, horizon) = (cfg.usize("d")?, cfg.i64("L")?, cfg.f64("rho")?, cfg.f64("T")?);
    let snapshots = cfg.usize("snapshots")?.max(1);
    if !(horizon >= 0.0) {
        return usage("T must be non-negative");
    }
    let g = Geometry::torus(d, side)?;
    let grid = SiteGrid::torus(&g)?;
    let stirring = Stirring::new(&grid)?;
    let mut rng = RngStream::new(cfg.u64("seed")?, 0).rng();
    let mut field = sample_bernoulli_field(&g, rho, &mut rng)?;
    let particles = field.particle_count();

    let mut t = table(&["snapshot", "t", "site"], (0..d).map(|a| format!("x_{a}")).collect(), &["eta"]);
    let mut jumps = 0u64;
    let mut now = 0.0;
    let mut counts = Vec::new();
    for s in 0..=snapshots {
        let target = horizon * s as f64 / snapshots as f64;
        jumps += stirring.advance(&mut field, target - now, &mut rng, None)?;
        now = target;
        counts.push(field.particle_count());
        for site in 0..grid.num_sites() {
            let p = grid.point(site);
            t.push(row(
                vec![s.into(), target.into(), site.into()],
                p.coords().iter().map(|&c| Cell::Int(c)).collect(),
                vec![(field.get(site) as i64).into()],
            ));
        }
    }
    let mut out = Outcome::main(t);
    out.put("particles", particles);
    out.put("jumps", jumps);
    out.put("density", particles as f64 / grid.num_sites() as f64);
    if counts.iter().any(|&c| c != particles) {
        out.failures.push("particle number changed during the run".into());
    }
    Ok(out)
}

fn kernel_exact(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (system, x) = system_and_start(cfg)?;
    let times = cfg.f64_list("t")?;
    let threshold = cfg.f64("threshold")?;
    let (k, d) = (x.len(), x.dim());
    let i = system.index_of(&x)?;
    let rows = system.rows(i, &times)?;
    let mut t = table(&["t", "y"], coord_columns("y", k, d), &["p"]);
    let mut sums = Map::new();
    let mut tails = Map::new();
    let mut out_failures = Vec::new();
    for r in &rows {
        for (y, &p) in r.probs.iter().enumerate() {
            if p > threshold {
                t.push(row(vec![r.t.into(), y.into()], coord_cells(&system.space().config(y)), vec![p.into()]));
            }
        }
        let s = r.sum();
        sums.insert(key_of(r.t), s.into());
        tails.insert(key_of(r.t), r.tail.into());
        if (s - 1.0).abs() > 1e-10 {
            out_failures.push(format!("row sum at t = {} is {s}", r.t));
        }
    }
    let mut out = Outcome::main(t);
    out.put("states", system.len());
    out.put("row_sum", sums);
    out.put("truncation_tail", tails);
    out.failures = out_failures;
    Ok(out)
}

fn kernel_mc(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (system, x) = system_and_start(cfg)?;
    let t_end = cfg.f64("t")?;
    let samples = cfg.u64("samples")?;
    let z_max = cfg.f64("z_max")?;
    if samples == 0 {
        return usage("samples must be positive");
    }
    let exact = system.row(system.index_of(&x)?, t_end)?;
    let stream = RngStream::new(cfg.u64("seed")?, 0);
    let g = *system.geometry();
    // Fixed chunking keeps the tally independent of the thread count.
    let chunk = samples.div_ceil(64).max(1);
    let starts: Vec<u64> = (0..samples).step_by(chunk as usize).collect();
    let partial: Vec<std::result::Result<Vec<u64>, exlab_core::Error>> = starts
        .par_iter()
        .map(|&a| {
            let mut counts = vec![0u64; system.len()];
            for r in a..(a + chunk).min(samples) {
                let end = simulate_labelled(&x, t_end, &g, &mut stream.substream(r).rng())?;
                counts[system.index_of(&end)?] += 1;
            }
            Ok(counts)
        })
        .collect();
    let mut counts = vec![0u64; system.len()];
    for p in partial {
        for (c, v) in counts.iter_mut().zip(p?) {
            *c += v;
        }
    }
    let n = samples as f64;
    let (k, d) = (x.len(), x.dim());
    let mut t = table(&["y"], coord_columns("y", k, d), &["exact", "mc", "stderr", "z"]);
    let mut worst = 0.0f64;
    for (y, (&c, &p)) in counts.iter().zip(&exact.probs).enumerate() {
        let f = c as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        let z = if se > 0.0 { (f - p) / se } else if f == p { 0.0 } else { f64::INFINITY };
        worst = worst.max(z.abs());
        t.push(row(vec![y.into()], coord_cells(&system.space().config(y)), vec![p.into(), f.into(), se.into(), z.into()]));
    }
    let mut out = Outcome::main(t);
    out.put("samples", samples);
    out.put("max_abs_z", worst);
    if worst > z_max {
        out.failures.push(format!("largest |z| = {worst} exceeds {z_max}"));
    }
    Ok(out)
}

/// Runs the scan with one task per starting point and merges in order.
pub fn grad_bound_report(system: &ExclusionSystem, theta: f64, times: &[f64], pairs: &PairSet) -> Result<BoundReport> {
    let xs = pair_set_states(system, pairs)?;
    let parts: Vec<std::result::Result<BoundReport, exlab_core::Error>> =
        xs.par_iter().map(|&xi| grad_bound_probe(system, xi, times, theta)).collect();
    let mut report = BoundReport::empty(theta, system.space().k(), *system.geometry());
    for p in parts {
        report.merge(p?);
    }
    Ok(report)
}

fn grad_bound(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (d, side, k, theta) = (cfg.usize("d")?, cfg.i64("L")?, cfg.usize("k")?, cfg.f64("theta")?);
    let times = cfg.f64_list("times")?;
    let pairs = match cfg.str("pairs") {
        "origin" => PairSet::OriginRooted,
        s => PairSet::Explicit(
            s.split('|').map(parse_particles).collect::<std::result::Result<_, _>>().map_err(RunError::Usage)?,
        ),
    };
    let system = ExclusionSystem::torus(d, side, k)?;
    let report = grad_bound_report(&system, theta, &times, &pairs)?;
    let mut cols = coord_columns("x", k, d);
    cols.extend(coord_columns("y", k, d));
    let mut t = table(&["t"], cols, &["difference", "ratio"]);
    for e in &report.entries {
        let mut c = coord_cells(&e.x);
        c.extend(coord_cells(&e.y));
        t.push(row(vec![e.t.into()], c, vec![e.difference.into(), e.ratio.into()]));
    }
    let by_t: Map<String, Value> = times.iter().map(|&s| (key_of(s), report.c_fit_at(s).into())).collect();
    let mut out = Outcome::main(t);
    out.put("c_fit", report.c_fit);
    out.put("c_fit_by_t", by_t);
    out.put("probes", report.probes);
    out.put("skipped", report.skipped);
    out.put("states", system.len());
    if !report.c_fit.is_finite() {
        out.failures.push("C_fit is not finite".into());
    }
    Ok(out)
}

fn tv_sum(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (system, x) = system_and_start(cfg)?;
    let times = cfg.f64_list("times")?;
    let sums = tv_gradient_sums(&x, &times, &system)?;
    let mut t = ResultTable::new(&["t", "tv"]);
    for (&s, &v) in times.iter().zip(&sums) {
        t.push(vec![s.into(), v.into()]);
    }
    let mut out = Outcome::main(t);
    if times.len() >= 2 {
        out.put("slope", decay_slope(&times, &sums)?);
    }
    Ok(out)
}

fn rw_grad_sum(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (d, k) = (cfg.usize("d")?, cfg.usize("k")?);
    let x = cfg.particles("x")?;
    check_start(&x, k, d)?;
    let times = cfg.f64_list("times")?;
    let mut t = ResultTable::new(&["t", "sum", "scaled", "single_walker"]);
    let mut scaled = Vec::new();
    let mut k_gap = 0.0f64;
    for &s in &times {
        let v = rw_gradient_sum(x.positions(), s)?;
        let one = rw_gradient_sum(&x.positions()[..1], s)?;
        k_gap = k_gap.max((v - one).abs());
        let sc = v * (s.sqrt() + 1.0);
        scaled.push(sc);
        t.push(vec![s.into(), v.into(), sc.into(), one.into()]);
    }
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let mut out = Outcome::main(t);
    out.put("scaled_min", lo);
    out.put("scaled_max", hi);
    out.put("variation", hi / lo - 1.0);
    out.put("k_dependence", k_gap);
    Ok(out)
}

fn compare_rw(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (system, x) = system_and_start(cfg)?;
    let times = cfg.f64_list("t")?;
    let (tol, threshold) = (cfg.f64("tol")?, cfg.f64("threshold")?);
    let ys: Vec<ParticleConfig> = match cfg.str("y") {
        "" => {
            let mut v = vec![x.clone()];
            let mut rev = x.positions().to_vec();
            rev.reverse();
            v.push(ParticleConfig::new(rev)?);
            if let Some(s) = x.shift_first(system.geometry()) {
                v.push(s);
            }
            v.dedup();
            v
        }
        s => s.split('|').map(parse_particles).collect::<std::result::Result<_, _>>().map_err(RunError::Usage)?,
    };
    let jobs: Vec<(f64, &ParticleConfig)> = times.iter().flat_map(|&s| ys.iter().map(move |y| (s, y))).collect();
    let checks: Vec<_> =
        jobs.par_iter().map(|&(s, y)| comparison_identity_check(&x, y, s, &system, tol)).collect();
    let (k, d) = (x.len(), x.dim());
    let mut t = table(&["t"], coord_columns("y", k, d), &["lhs", "rhs", "residual", "quadrature_error", "evaluations"]);
    let mut worst = 0.0f64;
    for (&(s, y), c) in jobs.iter().zip(checks) {
        let c = c?;
        worst = worst.max(c.residual);
        t.push(row(
            vec![s.into()],
            coord_cells(y),
            vec![c.lhs.into(), c.rhs.into(), c.residual.into(), c.quadrature_error.into(), c.evaluations.into()],
        ));
    }
    let mut out = Outcome::main(t);
    out.put("max_residual", worst);
    out.put("threshold", threshold);
    if !(worst < threshold) {
        out.failures.push(format!("identity residual {worst:e} is not below {threshold:e}"));
    }
    Ok(out)
}

fn diff_sum(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (system, x) = system_and_start(cfg)?;
    let times = cfg.f64_list("times")?;
    let sums = kernel_difference_sums(&x, &times, &system)?;
    let mut t = ResultTable::new(&["t", "sum", "scaled", "scaled_log"]);
    let mut logs = Vec::new();
    for (&s, &v) in times.iter().zip(&sums) {
        let sc = v * (s.sqrt() + 1.0);
        let sl = sc / (s + 2.0).ln();
        logs.push(sl);
        t.push(vec![s.into(), v.into(), sc.into(), sl.into()]);
    }
    let (lo, hi) = logs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let mut out = Outcome::main(t);
    out.put("scaled_log_max_over_min", hi / lo);
    Ok(out)
}

/// `t:x₁,…,x_d;…` for one configuration; configurations separated by `|`.
pub fn parse_spacetime(s: &str) -> std::result::Result<Vec<Vec<SpaceTimePoint>>, String> {
    s.split('|')
        .map(|conf| {
            conf.split(';')
                .map(|p| {
                    let (t, x) = p.split_once(':').ok_or_else(|| format!("expected `t:x` in `{p}`"))?;
                    let t: f64 = t.trim().parse().map_err(|_| format!("bad time `{t}`"))?;
                    let x: Vec<f64> = x
                        .split(',')
                        .map(|c| c.trim().parse::<f64>().map_err(|_| format!("bad coordinate `{c}`")))
                        .collect::<std::result::Result<_, _>>()?;
                    SpaceTimePoint::new(t, &x).map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect()
}

fn cumulants(cfg: &ExperimentConfig) -> Result<Outcome> {
    let d = cfg.usize("d")?;
    let levels = cfg.u32_list("N")?;
    let rho = cfg.f64("rho")?;
    let configs = parse_spacetime(cfg.str("points")).map_err(RunError::Usage)?;
    if configs.iter().flatten().any(|p| p.dim() != d) {
        return usage(format!("points must have {d} coordinates"));
    }
    let plan = SamplingPlan {
        samples: cfg.u64("samples")?,
        batches: cfg.usize("batches")?,
        origin_spacing: cfg.f64("spacing")?,
        stream: RngStream::new(cfg.u64("seed")?, 0),
    };
    let jobs: Vec<(u32, usize)> =
        levels.iter().flat_map(|&n| (0..configs.len()).map(move |c| (n, c))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(n, ci)| {
            let sub = SamplingPlan { stream: plan.stream.substream(((n as u64) << 32) | ci as u64), ..plan };
            let q = joint_cumulant(&configs[ci], n, rho, &sub)?;
            Ok::<_, exlab_core::Error>((q.samples, q.order, envelope_entry(ci, &q, n)?))
        })
        .collect();
    let mut t = ResultTable::new(&[
        "N", "configuration", "order", "estimate", "stderr", "envelope", "ratio", "excluded", "samples",
    ]);
    let mut entries = Vec::new();
    for r in results {
        let (samples, order, e) = r?;
        t.push(vec![
            e.level.into(),
            e.configuration.into(),
            order.into(),
            e.estimate.into(),
            e.stderr.into(),
            e.envelope.into(),
            e.ratio.into(),
            (e.excluded as i64).into(),
            samples.into(),
        ]);
        entries.push(e);
    }
    let scan = summarize_envelope(entries);
    let mut out = Outcome::main(t);
    let c_fit: Map<String, Value> = scan.c_fit.iter().map(|(n, c)| (n.to_string(), (*c).into())).collect();
    out.put("c_fit", c_fit);
    out.put("growth", json_num(scan.growth()));
    out.put("excluded", scan.excluded());
    Ok(out)
}

fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn parse_test_function(s: &str) -> Result<TestFunction> {
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    let nums: Vec<f64> = if arg.is_empty() {
        Vec::new()
    } else {
        arg.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| {
            RunError::Usage(format!("bad test function arguments `{arg}`"))
        })?
    };
    match (name, nums.as_slice()) {
        ("constant", [c]) => Ok(TestFunction::constant(*c)),
        ("cosine", [m]) if *m >= 0.0 && m.fract() == 0.0 => Ok(TestFunction::cosine(*m as u32)),
        ("bump", [c, r]) if *r > 0.0 => Ok(TestFunction::bump(*c, *r)),
        _ => usage(format!("unknown test function `{s}` (constant:c, cosine:m, bump:c,r)")),
    }
}

fn fluctuation(cfg: &ExperimentConfig) -> Result<Outcome> {
    let d = cfg.usize("d")?;
    let levels = cfg.u32_list("N")?;
    let (rho, samples, z_max, seed) = (cfg.f64("rho")?, cfg.u64("samples")?, cfg.f64("z_max")?, cfg.u64("seed")?);
    let f = parse_test_function(cfg.str("f"))?;
    let checks: Vec<_> = levels
        .par_iter()
        .map(|&n| stationary_variance_check(&f, n, d, rho, samples, RngStream::new(seed, n as u64)))
        .collect();
    let mut t = ResultTable::new(&["N", "empirical", "limit", "z", "samples"]);
    let mut worst = 0.0f64;
    for (&n, c) in levels.iter().zip(checks) {
        let c = c?;
        worst = worst.max(c.z_score.abs());
        t.push(vec![n.into(), c.empirical.into(), c.limit.into(), c.z_score.into(), c.samples.into()]);
    }
    let mut out = Outcome::main(t);
    out.put("max_abs_z", worst);
    if worst > z_max {
        out.failures.push(format!("largest |z| = {worst} exceeds {z_max}"));
    }
    Ok(out)
}

fn renorm_const(cfg: &ExperimentConfig) -> Result<Outcome> {
    let d = cfg.usize("d")?;
    let horizon = cfg.f64("T")?;
    let levels = cfg.u32_list("N")?;
    let asymptote = LN_2 / (4.0 * PI);
    let mut t = ResultTable::new(&["N", "C_N", "difference", "relative_difference", "difference_over_log2_4pi"]);
    let mut prev: Option<f64> = None;
    let mut values = Map::new();
    for &n in &levels {
        let c = renorm_constant(n, horizon, d)?;
        let diff = prev.map_or(f64::NAN, |p| c - p);
        let rel = prev.map_or(f64::NAN, |p| diff / p);
        t.push(vec![n.into(), c.into(), diff.into(), rel.into(), (diff / asymptote).into()]);
        values.insert(n.to_string(), c.into());
        prev = Some(c);
    }
    let mut out = Outcome::main(t);
    out.put("C_N", values);
    if d == 2 {
        out.put("asymptotic_difference", asymptote);
    }
    Ok(out)
}

fn parse_environment(s: &str) -> Result<EnvironmentSpec> {
    match s.split_once(':') {
        None if s == "ssep" => Ok(EnvironmentSpec::Ssep),
        Some(("constant", v)) => {
            v.trim().parse().map(EnvironmentSpec::Constant).map_err(|_| RunError::Usage(format!("bad environment `{s}`")))
        }
        _ => usage(format!("unknown environment `{s}` (ssep, constant:v)")),
    }
}

fn pam_config(cfg: &ExperimentConfig, level: u32, initial: InitialCondition) -> Result<PamConfig> {
    let mut pc = PamConfig::new(level, cfg.usize("d")?, cfg.f64("rho")?, cfg.f64("T")?, initial);
    if let Ok(dt) = cfg.str("dt").parse::<f64>() {
        pc.dt = dt;
    } else if cfg.str("dt") != "auto" {
        return usage("dt must be `auto` or a number");
    }
    Ok(pc)
}

fn pam(cfg: &ExperimentConfig) -> Result<Outcome> {
    let level = cfg.u32("N")?;
    let initial = match cfg.str("initial").split_once(':') {
        Some(("constant", v)) => InitialCondition::Constant(cfg_num(v)?),
        Some(("point", v)) => InitialCondition::PointMass { site: cfg_num::<usize>(v)? },
        None if cfg.str("initial") == "cosine" => InitialCondition::CosineBump,
        _ => return usage("initial must be constant:c, cosine or point:site"),
    };
    let mut pc = pam_config(cfg, level, initial)?;
    pc.renorm = match cfg.str("renorm") {
        "computed" => RenormSource::Computed,
        v => RenormSource::Supplied(cfg_num(v)?),
    };
    let n = cfg.usize("snapshots")?.max(1);
    pc.snapshots = (1..=n).map(|j| pc.horizon * j as f64 / n as f64).collect();
    let spec = parse_environment(cfg.str("env"))?;
    let mut env = build_environment(spec, &pc, RngStream::new(cfg.u64("seed")?, 0))?;
    let snaps = pam_solve(&pc, env.as_mut())?;
    let d = pc.dim;
    let grid = SiteGrid::torus(&Geometry::dyadic_torus(d, level)?)?;
    let mut t = table(&["t", "site"], (0..d).map(|a| format!("x_{a}")).collect(), &["u"]);
    let mut masses = Vec::new();
    let mut min_u = f64::INFINITY;
    for s in &snaps {
        for (site, &u) in s.values.iter().enumerate() {
            min_u = min_u.min(u);
            t.push(row(
                vec![s.t.into(), site.into()],
                grid.point(site).coords().iter().map(|&c| Cell::Int(c)).collect(),
                vec![u.into()],
            ));
        }
        masses.push(json_num(s.pair(&|_| 1.0)?));
    }
    let mut out = Outcome::main(t);
    out.put("C_N", pc.renorm_value()?);
    out.put("dt", pc.dt);
    out.put("mass", masses);
    out.put("min_value", min_u);
    if min_u < 0.0 {
        out.failures.push(format!("solution became negative ({min_u:e})"));
    }
    Ok(out)
}

fn cfg_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| RunError::Usage(format!("cannot parse `{s}`")))
}

fn probe_convergence(cfg: &ExperimentConfig) -> Result<Outcome> {
    let level = cfg.u32("N")?;
    let eta = cfg.f64("eta")?;
    let replicas = cfg.u64("replicas")?;
    if replicas < 2 {
        return usage("need at least two replicas");
    }
    let spec = parse_environment(cfg.str("env"))?;
    let seed = cfg.u64("seed")?;
    let summarize = |lvl: u32, stream: RngStream| -> Result<_> {
        let pc = pam_config(cfg, lvl, InitialCondition::CosineBump)?;
        let rows: Vec<_> =
            (0..replicas).into_par_iter().map(|r| probe_replica(&pc, spec, eta, stream.substream(r))).collect();
        let rows: Vec<Vec<f64>> = rows.into_iter().collect::<std::result::Result<_, _>>()?;
        Ok(summarize_replicas(&rows))
    };
    let report = compare_summaries(summarize(level, RngStream::new(seed, 1))?, summarize(level + 1, RngStream::new(seed, 2))?);
    let mut t = ResultTable::new(&["statistic", "coarse", "coarse_stderr", "fine", "fine_stderr", "difference", "z"]);
    for (name, (a, b)) in PROBE_STATISTICS.iter().zip(report.coarse.iter().zip(&report.fine)) {
        let diff = b.value - a.value;
        let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        let z = if se > 0.0 { diff / se } else { 0.0 };
        t.push(vec![(*name).into(), a.value.into(), a.stderr.into(), b.value.into(), b.stderr.into(), diff.into(), z.into()]);
    }
    let mut out = Outcome::main(t);
    out.put("distance", report.distance);
    out.put("stderr", report.stderr);
    out.put("levels", json!([level, level + 1]));
    Ok(out)
}
