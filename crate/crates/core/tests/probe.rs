//! Throwaway measurement harness; not part of the test suite proper.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use expheat::colehopf::{inverse_transform, perron_iterate, prepare, solve_auxiliary, supersolution_residual};
use expheat::evolution::{imex_solve, picard_solve, EvolutionContext};
use expheat::field::RadialField;
use expheat::nonlinearity::Nonlinearity;
use expheat::semigroup::DiskSemigroup;
use expheat::spaces;
use expheat::stationary::{distributional_residual, r_star, RadialBump, SingularProfile};

fn profile() -> &'static SingularProfile {
    static P: OnceLock<SingularProfile> = OnceLock::new();
    P.get_or_init(|| SingularProfile::compute().expect("profile"))
}

fn sg() -> &'static DiskSemigroup {
    static S: OnceLock<DiskSemigroup> = OnceLock::new();
    S.get_or_init(|| DiskSemigroup::new(profile().rho, 128).expect("semigroup"))
}

fn reference() -> &'static RadialField {
    static R: OnceLock<RadialField> = OnceLock::new();
    R.get_or_init(|| profile().as_field(sg().grid()))
}

fn gamma() -> f64 {
    static G: OnceLock<f64> = OnceLock::new();
    *G.get_or_init(|| profile().reaction_mass().expect("gamma"))
}

fn ctx(nl: &Nonlinearity) -> EvolutionContext<'_> {
    EvolutionContext {
        sg: sg(),
        nl,
        gamma: gamma(),
        reference: reference(),
    }
}

#[test]
fn probe_c2_orders() {
    let t0 = Instant::now();
    let r1 = SingularProfile::compute_with_step(8e-3).unwrap().rho;
    let r2 = SingularProfile::compute_with_step(4e-3).unwrap().rho;
    let r3 = SingularProfile::compute_with_step(2e-3).unwrap().rho;
    let d1 = (r1 - r2).abs();
    let d2 = (r2 - r3).abs();
    println!("[c2] rho(8e-3)={r1:.14} d1={d1:.3e} d2={d2:.3e} order={:.3}", (d1 / d2).log2());

    // energy monotonicity scan on the stored trajectory
    let p = profile();
    let lo = p.r_star * 1.0001;
    let hi = p.rho * 0.9999;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut prev = p.energy(lo);
    for i in 1..=2000 {
        let r = lo + (hi - lo) * i as f64 / 2000.0;
        let e = p.energy(r);
        worst_rise = worst_rise.max(e - prev);
        prev = e;
    }
    println!("[c2] worst energy rise over 2000 samples: {worst_rise:.3e}");

    // implicit midpoint cross-check
    let nl = Nonlinearity::new();
    let h = 2e-5;
    let mut r = r_star();
    let mut v = nl.beta;
    let mut p = -(1.25f64).exp() / nl.beta;
    let mut prev = (r, v, p);
    while v > 0.0 {
        prev = (r, v, p);
        let rm = r + h / 2.0;
        let (mut vm, mut pm) = (v, p);
        for _ in 0..6 {
            let fv = nl.f(vm.max(0.0)).unwrap_or(0.0);
            let nv = v + h / 2.0 * pm;
            let np = p + h / 2.0 * (-pm / rm - fv);
            vm = nv;
            pm = np;
        }
        let fv = nl.f(vm.max(0.0)).unwrap_or(0.0);
        v += h * pm;
        p += h * (-pm / rm - fv);
        r += h;
    }
    let (r0, v0, _) = prev;
    let rho_mid = r0 + h * v0 / (v0 - v);
    println!(
        "[c2] midpoint rho={rho_mid:.12} gap={:.3e} elapsed={:.2}s",
        (rho_mid - profile().rho).abs(),
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn probe_c3_inner_and_gamma() {
    let p = profile();
    let nl = Nonlinearity::new();
    for lo in [1e-2f64, 1e-3] {
        let hi = p.r_star * (1.0 - 1e-9);
        let mut worst = 0.0f64;
        for i in 0..100 {
            let r = lo * (hi / lo).powf(i as f64 / 99.0);
            worst = worst.max(p.ode_residual(r).abs());
        }
        println!("[c3] inner residual worst on [{lo:.0e}, r*): {worst:.3e}");
    }

    let seg = |t_hi: f64| -> f64 {
        expheat::quad::adaptive(
            &|t: f64| 0.5 * nl.f(t.sqrt()).unwrap() * (-t).exp(),
            2.5,
            t_hi,
            1e-14,
            1e-12,
        )
        .unwrap()
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let (j1, j2, j3) = (seg(100.0), seg(400.0), seg(625.0));
    let ia = two_pi * (2.0 * j2 - j1);
    let ib = two_pi * (5.0 * j3 - 4.0 * j2);
    let target = two_pi * 0.4f64.sqrt();
    println!(
        "[c3] inner mass: ia-target={:.3e} ib-target={:.3e} ia-ib={:.3e}",
        ia - target,
        ib - target,
        ia - ib
    );

    // composite Gauss quadrature of the weak-form functional, annular bumps
    let gl_nodes = [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526];
    let gl_weights = [0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538];
    for (c, w) in [(0.5, 0.35), (0.8, 0.5), (1.1, 0.35)] {
        let bump = RadialBump { center: c, width: w };
        let mut sup_lap = 0.0f64;
        for i in 0..=2000 {
            let r = (c - w) + 2.0 * w * i as f64 / 2000.0;
            if r > 0.0 {
                sup_lap = sup_lap.max(bump.laplacian(r).abs());
            }
        }
        let integrand = |r: f64| -> f64 {
            let u = p.eval(r);
            let fu = if u > 0.0 { nl.f(u).unwrap() } else { 0.0 };
            (u * (-bump.laplacian(r)) - fu * bump.eval(r)) * r
        };
        let (lo, hi) = ((c - w).max(1e-9), (c + w).min(p.rho));
        let composite = |n: usize| -> f64 {
            let h = (hi - lo) / n as f64;
            let mut total = 0.0;
            for k in 0..n {
                let (a, b) = (lo + k as f64 * h, lo + (k + 1) as f64 * h);
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                for (x, wt) in gl_nodes.iter().zip(gl_weights) {
                    total += wt * half * integrand(mid + half * x);
                }
            }
            two_pi * total
        };
        let (r64, r256, r1024) = (composite(64), composite(256), composite(1024));
        let lib = distributional_residual(p, &bump).unwrap();
        println!(
            "[c3] bump ({c},{w}): R64={r64:.3e} R256={r256:.3e} R1024={r1024:.3e} lib={lib:.3e} bound={:.3e}",
            1e-4 * (1.0 + sup_lap)
        );
    }
    for (c, w) in [(0.0, 0.8), (0.0, 1.5)] {
        let bump = RadialBump { center: c, width: w };
        let mut sup_lap = 0.0f64;
        for i in 1..=2000 {
            let r = w * i as f64 / 2000.0;
            sup_lap = sup_lap.max(bump.laplacian(r).abs());
        }
        let lib = distributional_residual(p, &bump).unwrap();
        println!("[c3] centered bump w={w}: lib={lib:.3e} bound={:.3e}", 1e-4 * (1.0 + sup_lap));
    }
}

#[test]
fn probe_c5_picard_septenary() {
    let nl = Nonlinearity::new();
    let c = ctx(&nl);
    for mu in [0.5f64, 0.9] {
        let u0 = profile().scaled_field(sg().grid(), mu);
        let t0 = Instant::now();
        match picard_solve(&c, &u0, 5e-3, 16, 40, 1e-9) {
            Ok(trace) => {
                let kappa = trace.iterates.iter().filter_map(|d| d.ratio).fold(0.0f64, f64::max);
                let mu1 = trace.reports.iter().map(|r| r.luxemburg).fold(0.0f64, f64::max);
                println!(
                    "[c5] mu={mu}: sweeps={} kappa={kappa:.4} mu1={mu1:.6} t={:.1}s",
                    trace.iterates.len(),
                    t0.elapsed().as_secs_f64()
                );
            }
            Err(e) => println!("[c5] mu={mu}: FAILED {e}"),
        }
    }
    // imex cross-check at both data
    for mu in [0.5f64, 0.9] {
        let u0 = profile().scaled_field(sg().grid(), mu);
        let t0 = Instant::now();
        let picard = picard_solve(&c, &u0, 1e-2, 24, 40, 1e-10).unwrap();
        let p_last = picard.states.last().unwrap();
        let mut gaps = Vec::new();
        for &(mesh, dt) in &[(200usize, 8e-6f64), (400usize, 2e-6)] {
            let fd = imex_solve(&c, &u0, 1e-2, dt, mesh).unwrap();
            gaps.push(p_last.node_distance(fd.states.last().unwrap()));
        }
        println!("[c5] mu={mu} imex gaps={gaps:?} t={:.1}s", t0.elapsed().as_secs_f64());
    }
}

#[test]
fn probe_c6_perron() {
    let nl = Nonlinearity::new();
    let c = ctx(&nl);
    let t0 = Instant::now();
    let prob = prepare(&nl, reference(), 1e-3, 3.0).unwrap();
    let aux = solve_auxiliary(sg(), &prob, 16, 40, 1e-9).unwrap();
    let ubar = inverse_transform(&nl, &prob, &aux).unwrap();
    println!("[c6] aux done halvings={} t={:.1}s", aux.budget.halvings, t0.elapsed().as_secs_f64());
    let trace = perron_iterate(&c, reference(), &ubar, aux.budget.t_final, 16, 25, 1e-8).unwrap();
    let mu2 = trace.reports.iter().map(|r| r.luxemburg).fold(0.0f64, f64::max);
    let last_gap = trace.iterates.last().unwrap().distance;
    println!(
        "[c6] perron sweeps={} mu2={mu2:.6} last_gauge_gap={last_gap:.3e} t={:.1}s",
        trace.iterates.len(),
        t0.elapsed().as_secs_f64()
    );
    let rep = supersolution_residual(sg(), &nl, &prob, &aux, 512).unwrap();
    println!(
        "[c6] residual worst={:.4} discounted={:.4} scale={:.2} total t={:.1}s",
        rep.worst,
        rep.worst_discounted,
        rep.scale,
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn probe_c8_dyadic() {
    let nl = Nonlinearity::new();
    let d = 2.0 * (1.25f64).exp() / 7.0f64.sqrt();
    let mut w_shift = Vec::new();
    let mut w_full = Vec::new();
    let t0 = Instant::now();
    for k in 0..=4 {
        let t_final = 1e-3 / (1u32 << k) as f64;
        let prob = prepare(&nl, reference(), t_final, 3.0).unwrap();
        let aux = solve_auxiliary(sg(), &prob, 8, 40, 1e-9).unwrap();
        assert_eq!(aux.budget.halvings, 0);
        let t_last = *aux.times.last().unwrap();
        let vbar = aux.states.last().unwrap();
        let full = RadialField {
            grid: Arc::clone(&vbar.grid),
            values: vbar.values.iter().map(|&v| v + d).collect(),
            inner: None,
        };
        let shift_norm = t_last.powf(0.3) * spaces::lebesgue_norm(vbar, 5.0, 1e-9).unwrap();
        let full_norm = t_last.powf(0.3) * spaces::lebesgue_norm(&full, 5.0, 1e-9).unwrap();
        w_shift.push(shift_norm);
        w_full.push(full_norm);
    }
    println!("[c8] w_shift={w_shift:?}");
    println!("[c8] w_full={w_full:?}");
    let aitken = |w: &[f64]| -> f64 {
        let n = w.len();
        let (a, b, c) = (w[n - 3], w[n - 2], w[n - 1]);
        c - (c - b) * (c - b) / (c - 2.0 * b + a)
    };
    println!(
        "[c8] aitken shift={:.3e} full={:.3e} ratios shift={:.3} {:.3} {:.3} {:.3} t={:.1}s",
        aitken(&w_shift),
        aitken(&w_full),
        w_shift[1] / w_shift[0],
        w_shift[2] / w_shift[1],
        w_shift[3] / w_shift[2],
        w_shift[4] / w_shift[3],
        t0.elapsed().as_secs_f64()
    );
    // Lorentz flags on the transformed datum
    let prob = prepare(&nl, reference(), 1e-3, 3.0).unwrap();
    for q in [2.0f64, 2.5, 3.0, 5.0] {
        let n = spaces::lorentz_norm(&prob.v0, 2.0, q, 1e-9).unwrap();
        println!("[c8] lorentz(2,{q}) of v0 = {n}");
    }
}

#[test]
fn probe_c8_deep_dyadic() {
    let nl = Nonlinearity::new();
    let d = 2.0 * (1.25f64).exp() / 7.0f64.sqrt();
    // projected datum norm: the discrete flow freezes at it as t -> 0
    let prob0 = prepare(&nl, reference(), 1e-3, 3.0).unwrap();
    let ones = RadialField::from_fn(sg().grid(), |_| 1.0);
    let c1 = sg().coefficients(&ones).unwrap();
    let cv = sg().coefficients(&prob0.v0).unwrap();
    let data: Vec<f64> = cv.iter().zip(&c1).map(|(a, b)| a - d * b).collect();
    let proj = sg().synthesize(&data);
    let proj5 = spaces::lebesgue_norm(&proj, 5.0, 1e-9).unwrap();
    let full0 = RadialField {
        grid: Arc::clone(&proj.grid),
        values: proj.values.iter().map(|&v| v + d).collect(),
        inner: None,
    };
    let projfull5 = spaces::lebesgue_norm(&full0, 5.0, 1e-9).unwrap();
    println!("[c8d] |P vbar0|_5 = {proj5:.4}  |P vbar0 + D|_5 = {projfull5:.4}");
    let t0 = Instant::now();
    let mut w_full = Vec::new();
    for k in 0..=10 {
        let t_final = 1e-5 / (1u64 << k) as f64;
        let prob = prepare(&nl, reference(), t_final, 3.0).unwrap();
        let aux = solve_auxiliary(sg(), &prob, 8, 40, 1e-9).unwrap();
        let t_last = *aux.times.last().unwrap();
        let vbar = aux.states.last().unwrap();
        let full = RadialField {
            grid: Arc::clone(&vbar.grid),
            values: vbar.values.iter().map(|&v| v + d).collect(),
            inner: None,
        };
        let w = t_last.powf(0.3) * spaces::lebesgue_norm(&full, 5.0, 1e-9).unwrap();
        println!(
            "[c8d] k={k}: T={t_final:.3e} halvings={} budget_w={:.4} w={w:.6}",
            aux.budget.halvings, aux.budget.weighted_sup
        );
        w_full.push(w);
    }
    let target = 2f64.powf(-0.3);
    for k in 1..w_full.len() {
        println!("[c8d] ratio {k}: {:.5} (pure grading {target:.5})", w_full[k] / w_full[k - 1]);
    }
    let n = w_full.len();
    for i in 2..n {
        let (a, b, c) = (w_full[i - 2], w_full[i - 1], w_full[i]);
        let limit = c - (c - b) * (c - b) / (c - 2.0 * b + a);
        println!("[c8d] aitken1 at k={i}: {limit:.3e}");
    }
    for i in 4..n {
        let (a, b, c) = (w_full[i - 4], w_full[i - 2], w_full[i]);
        let limit = c - (c - b) * (c - b) / (c - 2.0 * b + a);
        println!("[c8d] aitken2 at k={i}: {limit:.3e}");
    }
    let q = 2f64.powf(-0.3);
    for i in 1..n {
        let limit = (w_full[i] - q * w_full[i - 1]) / (1.0 - q);
        println!("[c8d] known-ratio at k={i}: {limit:.3e}");
    }
    println!("[c8d] t={:.1}s", t0.elapsed().as_secs_f64());
}

#[test]
fn probe_c4_corpus_timing() {
    use rand::{Rng, SeedableRng};
    let nl = Nonlinearity::new();
    let grid = sg().grid();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EED_CAFE);
    let mut fields: Vec<RadialField> = Vec::new();
    let rho = sg().rho();
    for i in 0..20 {
        let field = match i % 4 {
            0 => {
                let n_bumps = 1 + rng.gen_range(0..3usize);
                let mut parts = Vec::new();
                for _ in 0..n_bumps {
                    let center: f64 = rng.gen_range(0.0..0.6 * rho);
                    let width: f64 = rng.gen_range(0.1 * rho..0.35 * rho);
                    let amp: f64 = rng.gen_range(0.2..2.5);
                    parts.push((RadialBump { center, width }, amp));
                }
                RadialField::from_fn(grid, |r| {
                    parts.iter().map(|(b, a)| a * b.eval(r)).sum::<f64>()
                })
            }
            1 => {
                let amp: f64 = rng.gen_range(0.3..3.0);
                let k: i32 = rng.gen_range(1..4);
                RadialField::from_fn(grid, |r| {
                    let x = r / rho;
                    amp * (1.0 - x * x).powi(k)
                })
            }
            2 => {
                let coeffs: Vec<f64> = (0..10)
                    .map(|n| rng.gen_range(-1.0..1.0) / (1.0 + n as f64))
                    .collect();
                sg().synthesize(&coeffs)
            }
            _ => {
                let mu: f64 = rng.gen_range(0.3..1.1);
                profile().scaled_field(grid, mu)
            }
        };
        fields.push(field);
    }
    let times = [2e-4, 1e-3, 5e-3, 2e-2, 0.1];
    let t0 = Instant::now();
    let mut worst_jensen = f64::NEG_INFINITY;
    let mut worst_contraction = f64::NEG_INFINITY;
    let mut ratio_hi = 0.0f64;
    let mut lorentz_hi = 0.0f64;
    let square = |s: f64| s * s;
    for (i, u) in fields.iter().enumerate() {
        for &t in &times {
            if u.inner.is_none() {
                let gap = expheat::semigroup::check_jensen(sg(), u, &u.map(square), square, t).unwrap();
                let scale = u.map(square).node_sup_abs().max(1e-12);
                worst_jensen = worst_jensen.max(gap / scale);
            }
            let (lhs, rhs) =
                expheat::semigroup::check_orlicz_contraction(sg(), u, &nl, gamma(), t, 1e-8).unwrap();
            worst_contraction = worst_contraction.max(lhs - rhs);
            if u.inner.is_none() && i % 2 == 0 {
                let p = [1.0, 1.5, 2.0][i % 3];
                let ratio =
                    expheat::semigroup::smoothing_ratio_orlicz(sg(), u, &nl, gamma(), p, t, 1e-8);
                if let Ok(ratio) = ratio {
                    ratio_hi = ratio_hi.max(ratio);
                }
                let lr = expheat::semigroup::smoothing_ratio_lorentz(sg(), u, 2.0, 3.0, 4.0, t, 1e-8);
                if let Ok(lr) = lr {
                    lorentz_hi = lorentz_hi.max(lr);
                }
            }
        }
        if i % 5 == 0 {
            println!("[c4] field {i} done at {:.1}s", t0.elapsed().as_secs_f64());
        }
    }
    println!(
        "[c4] jensen_rel_max={worst_jensen:.3e} contraction_excess={worst_contraction:.3e} orlicz_ratio_hi={ratio_hi:.3} lorentz_ratio_hi={lorentz_hi:.3} t={:.1}s",
        t0.elapsed().as_secs_f64()
    );
}
