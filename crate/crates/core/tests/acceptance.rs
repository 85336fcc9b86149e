//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! (straight to stdout, so the lines survive output capture) and fails if
//! any criterion fails.

use std::io::Write;
use std::time::Instant;

use proxeps::harness::{self, ExperimentConfig, Settings};
use proxeps::linalg::Vector;
use proxeps::oracles::{eps_subdiff_interval_abs, L1Norm};
use proxeps::problems::{make_lasso, make_tv_deblur, ProblemInstance};
use proxeps::prox::{
    check_sigma_approximate, check_sigma_quasi_approximate, prox_objective, r_to_e, solve_prox_absolute,
    solve_prox_segment, Criterion,
};
use proxeps::solvers::{
    self, rate_bound_accel, rate_bound_alg1, rate_bound_alg2, verify_descent_lemma, AccelState, Algorithm,
    Momentum, Schedule, SolverConfig, StopRule,
};
use proxeps::stepsize::StepsizePolicy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    results: Vec<(u32, bool)>,
}

impl Report {
    fn emit(&mut self, n: u32, pass: bool, detail: String) {
        let line = format!("criterion {n:>2}: {} | {detail}\n", if pass { "PASS" } else { "FAIL" });
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(line.as_bytes());
        let _ = out.flush();
        self.results.push((n, pass));
    }
}

// ---------------------------------------------------------------------------
// independent oracles

/// Plain ISTA with its own step, soft-threshold and duality gap; returns the
/// best objective value reached.
fn ista_oracle(p: &ProblemInstance, max_iter: usize) -> (f64, f64) {
    let ls = p.f.as_least_squares().expect("lasso");
    let lambda = p.g.l1_weight().expect("l1");
    let op = ls.operator();
    let b = ls.rhs().as_slice().to_vec();
    let n = p.dim();
    let apply = |x: &[f64]| op.apply(&Vector::new(x.to_vec()).unwrap()).into_inner();
    let adjoint = |y: &[f64]| op.adjoint(&Vector::new(y.to_vec()).unwrap()).into_inner();
    let obj = |x: &[f64]| {
        let r: Vec<f64> = apply(x).iter().zip(&b).map(|(a, b)| a - b).collect();
        0.5 * r.iter().map(|v| v * v).sum::<f64>() + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    };
    // own Lipschitz estimate, padded
    let mut v = vec![1.0; n];
    let mut l = 0.0;
    for _ in 0..3000 {
        let w = adjoint(&apply(&v));
        let nrm = w.iter().map(|t| t * t).sum::<f64>().sqrt();
        l = nrm / v.iter().map(|t| t * t).sum::<f64>().sqrt();
        v = w.iter().map(|t| t / nrm).collect();
    }
    let step = 1.0 / (l * 1.01);
    let gap = |x: &[f64]| {
        let r: Vec<f64> = apply(x).iter().zip(&b).map(|(a, b)| a - b).collect();
        let atr = adjoint(&r);
        let m = atr.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let s = if m > lambda { lambda / m } else { 1.0 };
        let dual = -0.5 * s * s * r.iter().map(|t| t * t).sum::<f64>() - s * r.iter().zip(&b).map(|(a, b)| a * b).sum::<f64>();
        obj(x) - dual
    };
    let mut x = vec![1.0; n];
    let mut best = obj(&x);
    let mut last_gap = f64::INFINITY;
    for it in 0..max_iter {
        let r: Vec<f64> = apply(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
        let g = adjoint(&r);
        for i in 0..n {
            let z = x[i] - step * g[i];
            x[i] = z.signum() * (z.abs() - step * lambda).max(0.0);
        }
        if it % 500 == 499 {
            best = best.min(obj(&x));
            last_gap = gap(&x);
            if last_gap <= 1e-12 * (1.0 + best.abs()) {
                break;
            }
        }
    }
    best = best.min(obj(&x));
    (best, last_gap.min(gap(&x)))
}

/// `argmin_x αλ|x| + ½(x − y)²` by grid search and ternary refinement.
fn brute_prox_1d(lambda: f64, alpha: f64, y: f64) -> (f64, f64) {
    let phi = |x: f64| lambda * x.abs() + (x - y) * (x - y) / (2.0 * alpha);
    let (lo, hi) = (y - alpha * lambda - 0.5, y + alpha * lambda + 0.5);
    let m = 4000;
    let h = (hi - lo) / m as f64;
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..=m {
        let v = phi(lo + i as f64 * h);
        if v < best.0 {
            best = (v, i);
        }
    }
    let (mut a, mut b) = (lo + (best.1 as f64 - 1.0) * h, lo + (best.1 as f64 + 1.0) * h);
    for _ in 0..200 {
        let (c, d) = (a + (b - a) / 3.0, b - (b - a) / 3.0);
        if phi(c) <= phi(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    (x, phi(x))
}

fn lasso_runs(alpha0: f64, seed: u64) -> Vec<SolverConfig> {
    let base = |algo, sigma: f64| SolverConfig {
        eps_schedule: Schedule::Power { scale: 1.0, exponent: 1.0 },
        r_schedule: Schedule::Power { scale: 1.0, exponent: 1.0 },
        sigma,
        max_outer: 200,
        keep_vectors: true,
        seed,
        ..SolverConfig::new(algo, StepsizePolicy::Diminishing { alpha0, exponent: 1.0 })
    };
    vec![base(Algorithm::Pesm1, 0.0), base(Algorithm::Pesm2, 0.3), base(Algorithm::Pesm2, 0.9)]
}

// ---------------------------------------------------------------------------

fn criteria_1_2(rep: &mut Report) {
    let start = Instant::now();
    let mut instances = Vec::new();
    for n in [2usize, 5, 10, 50] {
        for s in 0..5u64 {
            instances.push(make_lasso(n, 100 * n as u64 + s).unwrap());
        }
    }
    let mut worst_slack = f64::INFINITY;
    let mut lemma_ok = true;
    let mut bound_ok = true;
    let mut worst_bound_margin = f64::INFINITY;
    let mut refs_converged = true;
    for p in &instances {
        let r = p.reference.as_ref().unwrap();
        refs_converged &= r.converged;
        let f_ref = p.objective(&r.x_star);
        for cfg in lasso_runs(1.0 / p.lipschitz.unwrap(), p.seed) {
            let out = solvers::run(p, &cfg).unwrap();
            assert_eq!(out.records.len(), 200);
            for (k, rec) in out.records.iter().enumerate() {
                match verify_descent_lemma(rec, &r.x_star, f_ref) {
                    Ok(sl) => worst_slack = worst_slack.min(sl / rec.lemma_scale),
                    Err(_) => lemma_ok = false,
                }
                let bound = match cfg.algorithm {
                    Algorithm::Pesm1 => rate_bound_alg1(&out.records, r.d0, k),
                    _ => rate_bound_alg2(&out.records, r.d0, k),
                };
                let gap = rec.best_val - r.s_star;
                let scale = 1.0 + bound.abs() + r.s_star.abs();
                worst_bound_margin = worst_bound_margin.min((bound - gap) / scale);
                bound_ok &= gap <= bound + 1e-9 * scale;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    rep.emit(
        1,
        lemma_ok && elapsed < 30.0,
        format!(
            "20 lasso instances x 3 runs x 200 its; min slack/scale {worst_slack:.3e}; {elapsed:.2} s (limit 30 s)"
        ),
    );

    let start = Instant::now();
    let mut worst_diff = 0.0f64;
    let mut worst_gap = 0.0f64;
    for p in &instances {
        let (oracle, gap) = ista_oracle(p, 1_000_000);
        let s = p.reference.as_ref().unwrap().s_star;
        worst_diff = worst_diff.max((oracle - s).abs());
        worst_gap = worst_gap.max(gap);
    }
    let s_ok = worst_diff <= 1e-8;
    rep.emit(
        2,
        bound_ok && s_ok && refs_converged,
        format!(
            "min (bound - gap)/scale {worst_bound_margin:.3e}; |s* - ISTA oracle| max {worst_diff:.2e} (tol 1e-8, oracle gap {worst_gap:.1e}, {:.1} s)",
            start.elapsed().as_secs_f64()
        ),
    );
}

fn criterion_3(rep: &mut Report) {
    // the value target is checked at a small relative level; Fejér monotonicity at every level
    const SIGMA_VALUE: f64 = 0.02;
    let p = make_lasso(10, 7).unwrap();
    let r = p.reference.clone().unwrap();
    let run = |sigma: f64| {
        let cfg = SolverConfig {
            sigma,
            max_outer: 5000,
            ..SolverConfig::new(
                Algorithm::Pesm2,
                StepsizePolicy::PolyakExact { gamma_lo: 1.0, gamma_hi: 1.0, s_star: r.s_star },
            )
        };
        solvers::run(&p, &cfg).unwrap()
    };
    let mut fejer_ok = true;
    let mut worst = f64::NEG_INFINITY;
    let mut final_gap = f64::NAN;
    for sigma in [SIGMA_VALUE, 0.3, 0.9] {
        let out = run(sigma);
        for rec in &out.records {
            let inc = rec.dist_ref_next.unwrap() - rec.dist_ref.unwrap();
            worst = worst.max(inc);
            fejer_ok &= inc <= 1e-10;
        }
        if sigma == SIGMA_VALUE {
            final_gap = out.final_value - r.s_star;
        }
    }
    rep.emit(
        3,
        fejer_ok && final_gap <= 1e-6,
        format!(
            "lasso n=10, Polyak-exact gamma=1; max distance increase {worst:.2e} over sigma in {{{SIGMA_VALUE}, 0.3, 0.9}}; F - s* after 5000 its at sigma={SIGMA_VALUE}: {final_gap:.2e}"
        ),
    );
}

fn criterion_4(rep: &mut Report) {
    let p = make_lasso(10, 11).unwrap();
    let r = p.reference.clone().unwrap();
    let alpha = 1e-3;
    let sigma: f64 = 0.5;
    let mut details = Vec::new();
    let mut ok = true;
    for algo in [Algorithm::Pesm1, Algorithm::Pesm2] {
        let cfg = SolverConfig {
            r_schedule: Schedule::Power { scale: 1.0, exponent: 1.0 },
            sigma,
            max_outer: 10_000,
            ..SolverConfig::new(algo, StepsizePolicy::Constant(alpha))
        };
        let out = solvers::run(&p, &cfg).unwrap();
        let c = out.tracker.c();
        let best = out.records.iter().map(|x| x.func_val).fold(f64::INFINITY, f64::min);
        let radius = match algo {
            Algorithm::Pesm1 => 2.0 * alpha * c * c,
            _ => alpha * c * c * (sigma * sigma / ((1.0 - sigma) * (1.0 - sigma)) + 4.0) / 2.0,
        };
        ok &= best <= r.s_star + radius + 1e-6;
        details.push(format!("{}: min F - s* = {:.2e} vs radius {radius:.3e} (c = {c:.1})", algo.label(), best - r.s_star));
    }
    rep.emit(4, ok, format!("alpha=1e-3, eps=0, 1e4 its; {}", details.join("; ")));
}

fn criterion_5(rep: &mut Report) {
    let a: f64 = 0.25 * 0.75;
    let b1 = 0.5 * (a + (a * a).sqrt());
    let b2 = 0.5 * (a + (a * a + 4.0 * a * b1).sqrt());
    let recursion_ok = (b1 - 0.1875).abs() <= 1e-6 && (b2 - 0.303382).abs() <= 1e-6 && (b1 + b2 - 0.490881).abs() <= 1e-6;

    let mut ok = recursion_ok;
    let mut worst_mono = f64::INFINITY;
    let mut worst_argmin = 0.0f64;
    let mut worst_rate = f64::INFINITY;
    for n in [5usize, 50] {
        let p = make_lasso(n, 3).unwrap();
        let r = p.reference.clone().unwrap();
        let lip = p.lipschitz.unwrap();
        for s2 in [0.1f64, 0.25, 0.45] {
            let cfg = SolverConfig {
                sigma: s2.sqrt(),
                max_outer: 2000,
                keep_vectors: true,
                ..SolverConfig::new(Algorithm::Accel, StepsizePolicy::Constant(1.0))
            };
            let out = solvers::run(&p, &cfg).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for (st, rec) in out.accel.iter().zip(&out.records) {
                ok &= st.t_k >= AccelState::t_lower_bound(st.k, cfg.sigma, lip);
                let q = st.eta_k - st.t_k * st.f_bar;
                let scale = 1.0 + st.eta_k.abs() + (st.t_k * st.f_bar).abs();
                if prev.is_finite() {
                    worst_mono = worst_mono.min((q - prev) / scale);
                    ok &= q >= prev - 1e-9 * scale;
                }
                prev = q;
                let xk = st.x_k.as_ref().unwrap();
                let rel = st.argmin_gap / (1.0 + xk.norm());
                worst_argmin = worst_argmin.max(rel);
                ok &= st.argmin_gap <= 1e-9 * (1.0 + xk.norm());
                let bound = rate_bound_accel(lip, cfg.sigma, r.d0, st.k).unwrap();
                let gap = rec.func_val - r.s_star;
                worst_rate = worst_rate.min(bound - gap);
                ok &= gap <= bound + 1e-12 * (1.0 + r.s_star.abs());
            }
        }
    }
    rep.emit(
        5,
        ok,
        format!(
            "beta1={b1}, beta2={b2:.6}, t2={:.6}; min monotonicity step {worst_mono:.2e}; max argmin gap {worst_argmin:.1e}; min rate margin {worst_rate:.2e}",
            b1 + b2
        ),
    );
}

fn criterion_6(rep: &mut Report) {
    let p = make_lasso(50, 5).unwrap();
    let r = p.reference.clone().unwrap();
    let l = p.lipschitz.unwrap();
    let target = 1e-4;
    let first_hit = |out: &solvers::RunOutput| out.records.iter().position(|x| x.func_val - r.s_star <= target).map(|k| k + 1);
    let accel = solvers::run(
        &p,
        &SolverConfig {
            sigma: 0.45f64.sqrt(),
            max_outer: 200_000,
            exact_prox: true,
            ..SolverConfig::new(Algorithm::Accel, StepsizePolicy::Constant(1.0))
        },
    )
    .unwrap();
    let ipgm = solvers::run(
        &p,
        &SolverConfig {
            e_schedule: Schedule::Zero,
            momentum: Momentum::None,
            max_outer: 200_000,
            exact_prox: true,
            ..SolverConfig::new(Algorithm::Ipgm, StepsizePolicy::Constant(1.0 / l))
        },
    )
    .unwrap();
    let (a, b) = (first_hit(&accel), first_hit(&ipgm));
    let pass = matches!((a, b), (Some(a), Some(b)) if a < b) || matches!((a, b), (Some(_), None));
    rep.emit(
        6,
        pass,
        format!("lasso n=50, F - s* <= 1e-4: accel (sigma^2=0.45) after {a:?} its, ipgm (beta=0, e_k=0) after {b:?} its"),
    );
}

fn criterion_7(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut nest_ok, mut dist_ok, mut conv_ok) = (true, true, true);
    let mut nest_cases = 0usize;
    let mut worst_dist = f64::NEG_INFINITY;
    let mut worst_conv = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let lambda = rng.random_range(0.2..2.0);
        let g = L1Norm::new(1, lambda);
        let alpha = rng.random_range(0.05..3.0);
        let yv = rng.random_range(-5.0..5.0);
        let y = Vector::from_slice(&[yv]).unwrap();
        let sigma = rng.random_range(0.0..0.95);
        let (px, pmin) = brute_prox_1d(lambda, alpha, yv);

        // solver certificates
        let cert = solve_prox_segment(&g, alpha, &y, &Criterion::SigmaApprox(sigma)).unwrap();
        let a = check_sigma_approximate(&g, alpha, &y, &cert.x_bar, &cert.w_bar, cert.eps_bar, sigma).unwrap();
        let b = check_sigma_quasi_approximate(&g, alpha, &y, &cert.x_bar, &cert.w_bar, cert.eps_bar, sigma).unwrap();
        nest_ok &= !a.pass || b.pass;
        // random triplets with v drawn from the ε-subdifferential
        let xv = yv + rng.random_range(-2.0..2.0);
        let eps = rng.random_range(0.0..0.5);
        let iv = eps_subdiff_interval_abs(xv, eps / lambda);
        let v = lambda * rng.random_range(iv.lo..=iv.hi);
        let xs = Vector::from_slice(&[xv]).unwrap();
        let vs = Vector::from_slice(&[v]).unwrap();
        let a = check_sigma_approximate(&g, alpha, &y, &xs, &vs, eps, sigma).unwrap();
        let b = check_sigma_quasi_approximate(&g, alpha, &y, &xs, &vs, eps, sigma).unwrap();
        if a.pass {
            nest_cases += 1;
            nest_ok &= b.pass;
        }

        let r = rng.random_range(0.0..1.0);
        let c = solve_prox_absolute(&g, alpha, &y, r).unwrap();
        let d = (c.x_bar[0] - px).abs() - r;
        worst_dist = worst_dist.max(d);
        dist_ok &= d <= 1e-9;
        let excess = prox_objective(&g, alpha, &y, &c.x_bar) - pmin;
        let slack = excess - r_to_e(r, alpha);
        worst_conv = worst_conv.max(slack);
        conv_ok &= slack <= 1e-9;
    }

    // ε-subdifferential of |·| against a brute-force slope scan
    let mut xs: Vec<f64> = (-800..=800).map(|i| i as f64 * 0.025).collect();
    for j in 1..=6 {
        xs.extend([10f64.powi(j), -(10f64.powi(j))]);
    }
    let h = 2e-3;
    let mut interval_ok = true;
    let mut worst_end = 0.0f64;
    for _ in 0..1000 {
        let t: f64 = rng.random_range(-3.0..3.0);
        let eps = rng.random_range(0.0..2.0);
        let members: Vec<f64> = (-750..=750)
            .map(|i| i as f64 * h)
            .filter(|&v| xs.iter().all(|&x| x.abs() >= t.abs() + v * (x - t) - eps - 1e-12))
            .collect();
        let iv = eps_subdiff_interval_abs(t, eps);
        let (lo, hi) = (members[0], *members.last().unwrap());
        let e = (lo - iv.lo).abs().max((hi - iv.hi).abs());
        worst_end = worst_end.max(e);
        interval_ok &= e <= h + 1e-12;
    }
    rep.emit(
        7,
        nest_ok && dist_ok && conv_ok && interval_ok,
        format!(
            "1000 1-D instances: nesting ({nest_cases} random relative triplets + solver certificates), max(dist - r) {worst_dist:.1e}, max(excess - r/(2a)) {worst_conv:.1e}; 1000 (t, eps) pairs: endpoint error {worst_end:.1e} (grid {h})"
        ),
    );
}

fn criterion_8(rep: &mut Report) {
    let start = Instant::now();
    // τ is raised from the large-image setting so the inner problems are not trivial at N = 32
    let tau = 1e-3;
    let p = make_tv_deblur(32, tau, 1e-4, 1).unwrap();
    let l = p.lipschitz.unwrap();
    let base = |algo| SolverConfig {
        max_outer: 5000,
        max_inner: 3000,
        stop: StopRule::RelativeDiff(1e-3),
        ..SolverConfig::new(algo, StepsizePolicy::Constant(1.0 / l))
    };
    let inner = |cfg: SolverConfig| {
        let out = solvers::run(&p, &cfg).unwrap();
        (out.inner_iterations(), out.outer_iterations(), out.flagged())
    };
    let pe_tight = inner(SolverConfig { sigma: 0.1f64.sqrt(), ..base(Algorithm::Pesm2) });
    let pe_loose = inner(SolverConfig { sigma: 0.9f64.sqrt(), ..base(Algorithm::Pesm2) });
    let ip_loose = inner(SolverConfig {
        e_schedule: Schedule::SquaredPower { scale: 1.0, exponent: 1.1 },
        ..base(Algorithm::Ipgm)
    });
    let ip_tight = inner(SolverConfig {
        e_schedule: Schedule::SquaredPower { scale: 1.0, exponent: 1.9 },
        ..base(Algorithm::Ipgm)
    });
    let elapsed = start.elapsed().as_secs_f64();
    let pass = pe_tight.0 < 4 * pe_loose.0 && ip_tight.0 > 4 * ip_loose.0 && elapsed < 300.0;
    rep.emit(
        8,
        pass,
        format!(
            "N=32, tau={tau}; IntIt (ExtIt): pesm2 s2=0.1 {} ({}) vs s2=0.9 {} ({}) ratio {:.2}; ipgm1 q=1.9 {} ({}) vs q=1.1 {} ({}) ratio {:.2}; {elapsed:.1} s",
            pe_tight.0,
            pe_tight.1,
            pe_loose.0,
            pe_loose.1,
            pe_tight.0 as f64 / pe_loose.0 as f64,
            ip_tight.0,
            ip_tight.1,
            ip_loose.0,
            ip_loose.1,
            ip_tight.0 as f64 / ip_loose.0 as f64,
        ),
    );
}

fn criterion_9(rep: &mut Report) {
    let p = make_lasso(5, 9).unwrap();
    let base = SolverConfig {
        max_outer: 500,
        keep_vectors: true,
        ..SolverConfig::new(Algorithm::Pss, StepsizePolicy::Diminishing { alpha0: 1.0 / p.lipschitz.unwrap(), exponent: 1.0 })
    };
    let pss = solvers::run(&p, &base).unwrap();
    let mut worst = 0.0f64;
    for algo in [Algorithm::Pesm1, Algorithm::Pesm2] {
        let out = solvers::run(&p, &SolverConfig { algorithm: algo, ..base.clone() }).unwrap();
        assert_eq!(out.records.len(), pss.records.len());
        for (a, b) in out.records.iter().zip(&pss.records) {
            worst = worst.max(a.x_next.as_ref().unwrap().dist(b.x_next.as_ref().unwrap()));
        }
    }
    rep.emit(9, worst <= 1e-12, format!("lasso n=5, {} its; max iterate distance to PSS {worst:.1e}", pss.records.len()));
}

fn criterion_10(rep: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[(&str, &str)]] = &[
        &[("problem", "lasso"), ("n", "10"), ("algo", "pesm1"), ("seed", "3"), ("max-outer", "300")],
        &[("problem", "lasso"), ("n", "10"), ("algo", "pesm2"), ("sigma2", "0.5"), ("max-outer", "300")],
        &[("problem", "lasso"), ("n", "10"), ("algo", "pss"), ("stepsize", "polyak-exact:1"), ("max-outer", "300")],
        &[("problem", "lasso"), ("n", "10"), ("algo", "accel"), ("sigma2", "0.25"), ("max-outer", "300")],
        &[("problem", "lasso"), ("n", "10"), ("algo", "ipgm"), ("momentum", "standard"), ("max-outer", "300")],
        &[("problem", "toy1d"), ("algo", "pesm2"), ("stepsize", "polyak:1:1.0:0.5"), ("max-outer", "300")],
        &[("problem", "tv"), ("n", "16"), ("algo", "pesm2"), ("tau", "1e-3"), ("max-outer", "100")],
        &[("problem", "tv"), ("n", "16"), ("algo", "ipgm"), ("tau", "1e-3"), ("ek-schedule", "sqpow:auto:1.5"), ("max-outer", "100")],
    ];
    let strip = |csv: &str| -> String {
        csv.lines().map(|l| l.rsplit_once(',').unwrap().0).collect::<Vec<_>>().join("\n")
    };
    let mut identical = 0;
    for (i, pairs) in runs.iter().enumerate() {
        let mut s = Settings::default();
        for (k, v) in pairs.iter() {
            s.set(k, *v);
        }
        let mut csvs = Vec::new();
        for rep_i in 0..2 {
            let path = dir.path().join(format!("run{i}-{rep_i}.csv"));
            s.set("out", path.display().to_string());
            let cfg = ExperimentConfig::from_settings(&s).unwrap();
            harness::run_experiment(&cfg).unwrap();
            csvs.push(strip(&std::fs::read_to_string(&path).unwrap()));
        }
        if csvs[0] == csvs[1] && csvs[0].lines().count() > 1 {
            identical += 1;
        }
    }
    rep.emit(
        10,
        identical == runs.len(),
        format!("{identical}/{} run configs reproduce byte-identical CSV numeric columns", runs.len()),
    );
}

#[test]
fn acceptance_criteria() {
    let _ = std::io::stdout().lock().write_all(b"\n");
    let mut rep = Report { results: Vec::new() };
    criteria_1_2(&mut rep);
    criterion_3(&mut rep);
    criterion_4(&mut rep);
    criterion_5(&mut rep);
    criterion_6(&mut rep);
    criterion_7(&mut rep);
    criterion_8(&mut rep);
    criterion_9(&mut rep);
    criterion_10(&mut rep);
    let failed: Vec<u32> = rep.results.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
