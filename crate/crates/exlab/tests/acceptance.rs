//! Acceptance suite: one PASS/FAIL line per criterion. Run a subset with
//! `cargo test --test acceptance -- 2 8`.

use std::f64::consts::{LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use exlab::experiments::grad_bound_report;
use exlab_core::cumulants::{envelope_ratio_scan, site_cumulant, SamplingPlan, SitePoint};
use exlab_core::estimates::{
    comparison_identity_check, decay_slope, kernel_difference_sums, pair_set_states, rw_gradient_sum,
    tv_gradient_sums, PairSet,
};
use exlab_core::pam::{
    pam_solve, renorm_constant, renorm_constant_quadrature, FrozenEnvironment, InitialCondition, PamConfig,
    RenormSource, SsepEnvironment,
};
use exlab_core::{ExclusionSystem, Geometry, ParticleConfig, Point, RngStream, SpaceTimePoint};

type Criterion = (u32, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn cfg(c: &[&[i64]]) -> ParticleConfig {
    ParticleConfig::from_coords(c).unwrap()
}

// ---------------------------------------------------------------- oracles

/// Torus walk kernel from the Fourier series, one coordinate.
fn ring_kernel(delta: i64, t: f64, side: i64) -> f64 {
    (0..side)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / side as f64;
            (-2.0 * t * (1.0 - th.cos())).exp() * (th * delta as f64).cos()
        })
        .sum::<f64>()
        / side as f64
}

fn torus_walk(x: &[i64], y: &[i64], t: f64, side: i64) -> f64 {
    x.iter().zip(y).map(|(a, b)| ring_kernel(b - a, t, side)).product()
}

/// Line walk kernel by the trapezoid rule on the Fourier integral; the
/// aliasing error is the mass beyond distance `m`, negligible here.
fn line_kernel_table(t: f64, reach: i64) -> Vec<f64> {
    let m = 16384;
    (0..=reach)
        .map(|n| {
            (0..m)
                .map(|j| {
                    let th = 2.0 * PI * j as f64 / m as f64;
                    (-2.0 * t * (1.0 - th.cos())).exp() * (th * n as f64).cos()
                })
                .sum::<f64>()
                / m as f64
        })
        .collect()
}

/// Dense generator of labelled stirring, built from the positions alone.
#[allow(clippy::needless_range_loop)]
fn dense_generator(sys: &ExclusionSystem) -> Vec<Vec<f64>> {
    let space = sys.space();
    let g = *sys.geometry();
    let n = sys.len();
    let d = g.dim();
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        let pts = space.points(i);
        for p in 0..pts.len() {
            for axis in 0..d {
                for step in [-1, 1] {
                    let target = g.reduce(&pts[p].shifted(axis, step));
                    let mut next = pts.clone();
                    let rate = match pts.iter().position(|w| *w == target) {
                        // Bond between two particles: counted from both ends.
                        Some(o) => {
                            next.swap(p, o);
                            0.5
                        }
                        None => {
                            next[p] = target;
                            1.0
                        }
                    };
                    let j = sys.index_of(&ParticleConfig::new(next).unwrap()).unwrap();
                    q[i][j] += rate;
                    q[i][i] -= rate;
                }
            }
        }
    }
    q
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..n {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
    }
    c
}

/// `exp(tQ)` by scaling and squaring with a Taylor polynomial.
fn expm(q: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    let n = q.len();
    let norm = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) * t;
    let squarings = (norm / 0.25).log2().ceil().max(0.0) as u32;
    let h = t / 2f64.powi(squarings as i32);
    let a: Vec<Vec<f64>> = q.iter().map(|r| r.iter().map(|v| v * h).collect()).collect();
    let mut result: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    let mut term = result.clone();
    for m in 1..=20 {
        term = matmul(&term, &a);
        for r in term.iter_mut() {
            for v in r.iter_mut() {
                *v /= m as f64;
            }
        }
        for (rr, tr) in result.iter_mut().zip(&term) {
            for (x, y) in rr.iter_mut().zip(tr) {
                *x += y;
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

// ---------------------------------------------------------------- criteria

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    let mut checks = 0;
    for (d, side, x, stride) in [(1usize, 6i64, cfg(&[&[0], &[1]]), 1usize), (2, 4, cfg(&[&[0, 0], &[1, 0]]), 17)] {
        let sys = ExclusionSystem::torus(d, side, 2).unwrap();
        for &t in &[0.25, 1.0, 4.0] {
            for yi in (0..sys.len()).step_by(stride) {
                let y = sys.space().config(yi);
                let c = comparison_identity_check(&x, &y, t, &sys, 1e-8).unwrap();
                worst = worst.max((c.lhs - c.rhs).abs());
                checks += 1;
            }
        }
    }
    verdict(worst < 1e-6, format!("max |lhs - rhs| = {worst:.3e} over {checks} (t, y) pairs"))
}

fn criterion_2() -> Verdict {
    let mut row_sum = 0.0f64;
    let mut sym = 0.0f64;
    let mut ck = 0.0f64;
    let mut dense = 0.0f64;
    for (d, side) in [(1usize, 6i64), (2, 4)] {
        let sys = ExclusionSystem::torus(d, side, 2).unwrap();
        let n = sys.len();
        let q = dense_generator(&sys);
        for &t in &[0.5, 2.0] {
            let rows: Vec<Vec<f64>> = (0..n).map(|i| sys.row(i, t).unwrap().probs).collect();
            let rows2: Vec<Vec<f64>> = (0..n).map(|i| sys.row(i, 2.0 * t).unwrap().probs).collect();
            let e = expm(&q, t);
            for i in 0..n {
                row_sum = row_sum.max((rows[i].iter().sum::<f64>() - 1.0).abs());
                for j in 0..n {
                    sym = sym.max((rows[i][j] - rows[j][i]).abs());
                    dense = dense.max((rows[i][j] - e[i][j]).abs());
                    let comp: f64 = (0..n).map(|z| rows[i][z] * rows[z][j]).sum();
                    ck = ck.max((rows2[i][j] - comp).abs());
                }
            }
        }
    }
    let mut walk = 0.0f64;
    for (d, side) in [(1usize, 7i64), (2, 6), (3, 4)] {
        let sys = ExclusionSystem::torus(d, side, 1).unwrap();
        for &t in &[0.3, 1.0, 5.0] {
            let row = sys.row(0, t).unwrap();
            let x = sys.space().points(0)[0];
            for (j, p) in row.probs.iter().enumerate() {
                let y = sys.space().points(j)[0];
                walk = walk.max((p - torus_walk(x.coords(), y.coords(), t, side)).abs());
            }
        }
    }
    let pass = row_sum < 1e-10 && sym < 1e-10 && ck < 1e-8 && walk < 1e-8 && dense < 1e-10;
    verdict(
        pass,
        format!(
            "row sums {row_sum:.1e}, symmetry {sym:.1e}, Chapman-Kolmogorov {ck:.1e}, k=1 vs Fourier walk {walk:.1e}, dense expm {dense:.1e}"
        ),
    )
}

fn criterion_3() -> Verdict {
    let times = [0.25, 1.0, 4.0, 16.0];
    let mut fits = Vec::new();
    let mut oracle_gap = 0.0f64;
    for side in [4i64, 8, 16] {
        let sys = ExclusionSystem::torus(2, side, 2).unwrap();
        let report = grad_bound_report(&sys, 0.5, &times, &PairSet::OriginRooted).unwrap();
        if side == 4 {
            // Recompute the reported worst differences from a dense exponential.
            let q = dense_generator(&sys);
            for &t in &times {
                let e = expm(&q, t);
                for entry in report.entries.iter().filter(|e| e.t == t) {
                    let x = sys.index_of(&entry.x).unwrap();
                    let xs = sys.index_of(&entry.x.shift_first(sys.geometry()).unwrap()).unwrap();
                    let y = sys.index_of(&entry.y).unwrap();
                    oracle_gap = oracle_gap.max((e[x][y] - e[xs][y] - entry.difference).abs());
                }
            }
        }
        fits.push((side, report.c_fit));
    }
    let lo = fits.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let hi = fits.iter().map(|f| f.1).fold(0.0, f64::max);
    let variation = hi / lo - 1.0;
    let pass = fits.iter().all(|f| f.1.is_finite()) && variation < 0.25 && oracle_gap < 1e-10;
    let list: Vec<String> = fits.iter().map(|(l, c)| format!("L={l}: {c:.4}")).collect();
    verdict(pass, format!("C_fit {}; variation {:.1}%; dense-oracle gap {oracle_gap:.1e}", list.join(", "), 100.0 * variation))
}

fn criterion_4() -> Verdict {
    let sys = ExclusionSystem::torus(2, 16, 2).unwrap();
    let times = [1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0, 50.0, 70.0, 100.0];
    let x = cfg(&[&[0, 0], &[0, 1]]);
    let tv = tv_gradient_sums(&x, &times, &sys).unwrap();
    let slope = decay_slope(&times, &tv).unwrap();
    // Independent least squares in the test.
    let xs: Vec<f64> = times.iter().map(|t| (t.sqrt() + 1.0).ln()).collect();
    let ys: Vec<f64> = tv.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let ls = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / xs.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
    verdict(
        slope <= -0.4 && (slope - ls).abs() < 1e-9,
        format!("slope {slope:.3} (oracle fit {ls:.3}); tv(1) = {:.4e}, tv(100) = {:.4e}", tv[0], tv[tv.len() - 1]),
    )
}

fn criterion_5() -> Verdict {
    let times = [1.0, 10.0, 100.0, 1000.0];
    // Brute-force sum over (Z^1)^2 from an independent kernel table.
    let mut brute_gap = 0.0f64;
    for &t in &[1.0f64, 10.0, 100.0] {
        let reach = (8.0 * t.sqrt() + 30.0) as i64;
        let q = line_kernel_table(t, reach + 2);
        let qk = |n: i64| if n.abs() <= reach + 2 { q[n.unsigned_abs() as usize] } else { 0.0 };
        let mut s = 0.0;
        for a in -reach..=reach + 1 {
            for b in -reach..=reach + 1 {
                // x = (0, 1), x + e11 = (1, 1).
                s += (qk(a) * qk(b - 1) - qk(a - 1) * qk(b - 1)).abs();
            }
        }
        let v = rw_gradient_sum(&[Point::new(&[0]).unwrap(), Point::new(&[1]).unwrap()], t).unwrap();
        brute_gap = brute_gap.max((s - v).abs());
    }
    let mut k_gap = 0.0f64;
    let mut scaled_all = Vec::new();
    let mut lines = Vec::new();
    for d in [1usize, 2] {
        let configs: Vec<Vec<Point>> = (1..=3)
            .map(|k| (0..k).map(|i| Point::new(&vec![i as i64; d]).unwrap()).collect())
            .collect();
        let mut scaled = Vec::new();
        for &t in &times {
            let vals: Vec<f64> = configs.iter().map(|c| rw_gradient_sum(c, t).unwrap()).collect();
            k_gap = k_gap.max(vals.iter().map(|v| (v - vals[0]).abs()).fold(0.0, f64::max));
            scaled.push(vals[0] * (t.sqrt() + 1.0));
        }
        lines.push(format!("d={d}: [{}]", scaled.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")));
        scaled_all.extend(scaled);
    }
    let lo = scaled_all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled_all.iter().cloned().fold(0.0, f64::max);
    let variation = hi / lo - 1.0;
    let pass = variation < 0.25 && k_gap < 1e-14 && brute_gap < 1e-10;
    verdict(
        pass,
        format!(
            "sum*(sqrt(t)+1) over t=1,10,100,1000 {}; variation {:.0}% (limit 25%); k-dependence {k_gap:.1e}; brute-force gap {brute_gap:.1e}",
            lines.join(" "),
            100.0 * variation
        ),
    )
}

fn criterion_6() -> Verdict {
    let sys = ExclusionSystem::torus(2, 8, 2).unwrap();
    let times = [1.0, 4.0, 16.0];
    let scale = |t: f64| (t.sqrt() + 1.0) / (t + 2.0).ln();
    // Uniform-in-x constant: the largest scaled sum over starting points.
    let mut sup = [0.0f64; 3];
    for x in pair_set_states(&sys, &PairSet::OriginRooted).unwrap() {
        let sums = kernel_difference_sums(&sys.space().config(x), &times, &sys).unwrap();
        for (s, (v, &t)) in sup.iter_mut().zip(sums.iter().zip(&times)) {
            *s = s.max(v * scale(t));
        }
    }
    // Oracle at t = 16: the torus has mixed, so the sum is the walk mass on
    // collision configurations, L^d · L^-2d = 1/64.
    let mixed = (sup[2] / scale(16.0) - 1.0 / 64.0).abs();
    let ratio = sup.iter().cloned().fold(0.0, f64::max) / sup.iter().cloned().fold(f64::INFINITY, f64::min);
    verdict(
        ratio < 3.0,
        format!(
            "max_x sum*(sqrt(t)+1)/log(t+2) at t=1,4,16: {:.4}, {:.4}, {:.4}; max/min {ratio:.2} (limit 3); t=16 vs 1/64 {mixed:.1e}",
            sup[0], sup[1], sup[2]
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    let rho = 0.3;
    let plan = |seed| SamplingPlan::new(100_000, RngStream::new(seed, 7));
    // Two-point function against duality.
    for (d, side, t, x, seed) in [(1usize, 8i64, 1.0, vec![1i64], 1u64), (1, 8, 0.5, vec![0], 2), (2, 4, 0.5, vec![1, 0], 3)] {
        let g = Geometry::torus(d, side).unwrap();
        let pts = [
            SitePoint { time: 0.0, site: Point::origin(d) },
            SitePoint { time: t, site: Point::new(&x).unwrap() },
        ];
        let (v, se, _) = site_cumulant(&pts, &g, rho, &plan(seed)).unwrap();
        let oracle = rho * (1.0 - rho) * torus_walk(&vec![0; d], &x, t, side);
        let z = (v - oracle) / se;
        pass &= z.abs() < 4.0;
        lines.push(format!("k2 d={d} t={t}: {v:.5} vs {oracle:.5} (z={z:.2})"));
    }
    // Single-site third cumulant of a Bernoulli variable. Equal-time samples
    // of one replica depend only on its conserved particle count, so a long
    // ring is needed for that count to concentrate.
    let g = Geometry::torus(1, 256).unwrap();
    let p = SitePoint { time: 0.0, site: Point::origin(1) };
    let (v, se, _) = site_cumulant(&[p, p, p], &g, rho, &plan(4)).unwrap();
    let oracle = rho * (1.0 - rho) * (1.0 - 2.0 * rho);
    let z = (v - oracle) / se;
    pass &= z.abs() < 4.0;
    lines.push(format!("k3: {v:.5} vs {oracle:.5} (z={z:.2})"));
    // Envelope scan over levels.
    let configs = vec![
        vec![SpaceTimePoint::new(0.0, &[0.0, 0.0]).unwrap(), SpaceTimePoint::new(0.0, &[0.0, 0.0]).unwrap()],
        vec![SpaceTimePoint::new(0.0, &[0.0, 0.0]).unwrap(), SpaceTimePoint::new(0.0625, &[0.0, 0.0]).unwrap()],
        vec![SpaceTimePoint::new(0.0, &[0.0, 0.0]).unwrap(), SpaceTimePoint::new(0.0625, &[0.25, 0.0]).unwrap()],
    ];
    let scan = envelope_ratio_scan(&configs, &[2, 3, 4], 0.5, &SamplingPlan::new(100_000, RngStream::new(5, 0))).unwrap();
    let growth = scan.growth();
    pass &= growth - 1.0 < 0.5;
    let fits: Vec<String> = scan.c_fit.iter().map(|(n, c)| format!("N={n}: {c:.4}")).collect();
    lines.push(format!("envelope C_fit {} variation {:.1}%", fits.join(", "), 100.0 * (growth - 1.0)));
    verdict(pass, lines.join("; "))
}

fn criterion_8() -> Verdict {
    let asym = LN_2 / (4.0 * PI);
    let c2: Vec<f64> = (7..=8).map(|n| renorm_constant(n, 1.0, 2).unwrap()).collect();
    let rel = (c2[1] - c2[0]) / asym - 1.0;
    let c3: Vec<f64> = (7..=8).map(|n| renorm_constant(n, 1.0, 3).unwrap()).collect();
    let cauchy = (c3[1] - c3[0]).abs() / c3[0];
    // Closed form against the Bessel quadrature.
    let mut oracle = 0.0f64;
    for (n, d) in [(4, 2), (6, 2), (3, 3), (4, 3)] {
        let a = renorm_constant(n, 1.0, d).unwrap();
        let b = renorm_constant_quadrature(n, 1.0, d, 1e-9).unwrap();
        oracle = oracle.max((a / b - 1.0).abs());
    }
    verdict(
        rel.abs() < 0.1 && cauchy < 0.05 && oracle < 1e-6,
        format!(
            "d=2 C_8 - C_7 = {:.6} vs log2/(4pi) = {asym:.6} ({:+.3}%); d=3 |C_8 - C_7|/C_7 = {cauchy:.4}; quadrature gap {oracle:.1e}",
            c2[1] - c2[0],
            100.0 * rel
        ),
    )
}

fn criterion_9() -> Verdict {
    // Constant frozen potential V: exact scalar decay.
    let (n, d, horizon, v) = (3u32, 1usize, 0.2, 1.3);
    let mut c = PamConfig::new(n, d, 0.5, horizon, InitialCondition::Constant(1.0));
    c.renorm = RenormSource::Supplied(0.0);
    let amp = 2f64.powf((n as usize * d) as f64 / 2.0);
    let mut env = FrozenEnvironment::constant(0.5 + v / amp, 8);
    let u = pam_solve(&c, &mut env).unwrap().pop().unwrap();
    let decay = u.values.iter().map(|x| (x - (-v * horizon).exp()).abs()).fold(0.0, f64::max);

    // Step halving on a frozen, spatially varying potential.
    let values: Vec<f64> = (0..64).map(|i| 0.5 + 0.3 * ((i % 8) as f64 * 0.9).sin() * ((i / 8) as f64 * 0.7).cos()).collect();
    let run = |dt: f64| {
        let mut c = PamConfig::new(3, 2, 0.5, 0.05, InitialCondition::CosineBump);
        c.dt = dt;
        c.renorm = RenormSource::Supplied(0.0);
        pam_solve(&c, &mut FrozenEnvironment::new(values.clone())).unwrap().pop().unwrap().values
    };
    let base = 4f64.powi(-3) / 8.0;
    let reference = run(base / 64.0);
    let err = |u: &[f64]| u.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ratio = err(&run(base)) / err(&run(base / 2.0));

    // Point mass, zero potential, against the Fourier heat kernel.
    let (n, d, horizon) = (4u32, 2usize, 0.05);
    let side = 1i64 << n;
    let mut c = PamConfig::new(n, d, 0.5, horizon, InitialCondition::PointMass { site: 0 });
    c.renorm = RenormSource::Supplied(0.0);
    let sites = (side * side) as usize;
    let u = pam_solve(&c, &mut FrozenEnvironment::constant(0.5, sites)).unwrap().pop().unwrap();
    let s = 4f64.powi(n as i32) * horizon;
    let heat = u
        .values
        .iter()
        .enumerate()
        .map(|(i, x)| (x - torus_walk(&[0, 0], &[i as i64 % side, i as i64 / side], s, side)).abs())
        .fold(0.0, f64::max);

    // Positivity under moving environments.
    let mut negative = 0;
    for r in 0..1000u64 {
        let mut c = PamConfig::new(3, 2, 0.5, 0.05, InitialCondition::CosineBump);
        c.renorm = RenormSource::Computed;
        let mut env = SsepEnvironment::new(3, 2, 0.5, RngStream::new(11, r)).unwrap();
        let u = pam_solve(&c, &mut env).unwrap().pop().unwrap();
        negative += u.values.iter().any(|x| x.is_nan() || *x < 0.0) as usize;
    }
    verdict(
        decay < 1e-12 && (ratio - 4.0).abs() <= 1.0 && heat < 1e-6 && negative == 0,
        format!(
            "constant potential vs exp(-Vt) {decay:.1e}; step-halving error ratio {ratio:.3}; heat kernel gap {heat:.1e}; negative solutions {negative}/1000"
        ),
    )
}

fn criterion_10() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_exlab");
    let dir = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let commands = [
        "simulate-ssep",
        "kernel-exact",
        "kernel-mc",
        "grad-bound",
        "tv-sum",
        "rw-grad-sum",
        "compare-rw",
        "diff-sum",
        "cumulants",
        "fluctuation",
        "renorm-const",
        "pam",
        "probe-convergence",
    ];
    for c in commands {
        let mut outputs = Vec::new();
        for (run, threads) in [(0, "1"), (1, "1"), (2, "3")] {
            let out = dir.path().join(format!("{c}-{run}"));
            let status = Command::new(bin)
                .args([c, "--threads", threads, "--out"])
                .arg(&out)
                .env_remove("EXLAB_SEED")
                .output()
                .unwrap();
            assert!(matches!(status.status.code(), Some(0 | 2)), "{c}: {}", String::from_utf8_lossy(&status.stderr));
            outputs.push(std::fs::read(out.join(format!("{c}.csv"))).unwrap());
        }
        if outputs[0] != outputs[1] || outputs[0] != outputs[2] {
            differing.push(c);
        }
    }
    verdict(
        differing.is_empty(),
        format!("{} subcommands, 3 runs each (1, 1 and 3 threads); differing: {:?}", commands.len(), differing),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "exact comparison identity", criterion_1),
        (2, "kernel correctness", criterion_2),
        (3, "gradient bound uniform in L", criterion_3),
        (4, "TV gradient decay", criterion_4),
        (5, "random-walk gradient plateau", criterion_5),
        (6, "kernel difference envelope", criterion_6),
        (7, "cumulant checks", criterion_7),
        (8, "renormalization constant", criterion_8),
        (9, "PAM solver", criterion_9),
        (10, "reproducibility", criterion_10),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| verdict(false, format!("panicked: {:?}", e.downcast_ref::<String>())));
        let tag = if v.pass { "PASS" } else { "FAIL" };
        failed += !v.pass as usize;
        println!("criterion {id:>2} [{tag}] {name}: {} ({:.1} s)", v.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
