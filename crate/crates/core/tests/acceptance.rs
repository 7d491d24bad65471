//! End-to-end acceptance suite. Runs every criterion, prints one PASS/FAIL line
//! each, and exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use allee_core::certify;
use allee_core::maps::{self, MapSpec};
use allee_core::montecarlo::{self, HorizonPolicy};
use allee_core::numeric;
use allee_core::rds::{self, MapChoice, PerturbationSpec, RdsConfig, Trap};
use allee_core::{Theorem, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn near(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn ex1() -> (MapSpec, MapSpec) {
    (MapSpec::rational_unimodal(1.1, 2.0, 3.0).unwrap(), MapSpec::rational_unimodal(1.3, 1.0, 3.3).unwrap())
}

fn ex2() -> (MapSpec, MapSpec) {
    (MapSpec::rational_unimodal(1.1, 1.05, 2.8).unwrap(), MapSpec::rational_unimodal(1.3, 1.0, 2.9).unwrap())
}

fn sigmoid_pair() -> (MapSpec, MapSpec) {
    (
        MapSpec::sigmoid(2.5, 1.0).unwrap().with_bound(3.0).unwrap(),
        MapSpec::sigmoid(3.0, 1.5).unwrap().with_bound(3.0).unwrap(),
    )
}

fn on_common_bound(f: &MapSpec, g: &MapSpec) -> (MapSpec, MapSpec) {
    let b = f.bound().max(g.bound());
    (f.clone().with_bound(b).unwrap(), g.clone().with_bound(b).unwrap())
}

fn c1_fixed_points() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, (f, g), want) in
        [("ex1", ex1(), [2.553, 3.447, 2.752, 3.848]), ("ex2", ex2(), [2.476, 3.124, 2.352, 3.448])]
    {
        let ff = maps::find_fixed_points(&f).unwrap();
        let fg = maps::find_fixed_points(&g).unwrap();
        let got = [ff.threshold, ff.carrying, fg.threshold, fg.carrying];
        ok &= got.iter().zip(want).all(|(&x, w)| near(x, w, 5e-4));
        detail.push(format!("{name} (A_f,K_f,A_g,K_g)=({:.4},{:.4},{:.4},{:.4})", got[0], got[1], got[2], got[3]));
    }
    check(ok, detail.join("; "))
}

fn c2_witnesses() -> Outcome {
    let (f, g) = ex1();
    let w1 = certify::search_composition(&f, &g, certify::DEFAULT_M_MAX).unwrap().unwrap();
    let ex1_ok = w1.sequence == [MapChoice::G, MapChoice::F, MapChoice::G] && near(w1.value, 1.876, 5e-4);

    // the sequence (g,f,g) itself, replayed from K_f
    let (fb, gb) = on_common_bound(&f, &g);
    let kf = maps::find_fixed_points(&fb).unwrap().carrying;
    let replay = certify::compose(&fb, &gb, &[MapChoice::G, MapChoice::F, MapChoice::G], kf);

    let (f, g) = ex2();
    let w2 = certify::search_composition(&f, &g, certify::DEFAULT_M_MAX).unwrap().unwrap();
    let ex2_ok = w2.sequence == [MapChoice::F, MapChoice::G] && near(w2.value, 2.041, 5e-4);
    check(
        ex1_ok && ex2_ok,
        format!(
            "ex1 search -> ({}) = {:.4} [expected g,f,g ~1.876; g,f,g replay = {replay:.4}]; ex2 search -> ({}) = {:.4}",
            w1.label(),
            w1.value,
            w2.label(),
            w2.value
        ),
    )
}

fn c3_contraction() -> Outcome {
    let (f1, _) = ex1();
    let (f2, _) = ex2();
    let r1 = certify::check_contraction_band(&f1, certify::BAND_GRID).unwrap();
    let r2 = certify::check_contraction_band(&f2, certify::BAND_GRID).unwrap();
    check(
        r1.holds
            && r2.holds
            && near(r1.derivative_at_peak_value, -0.475, 5e-4)
            && near(r2.derivative_at_peak_value, -0.989, 5e-4),
        format!(
            "f'(M_f): ex1 {:.5} (holds {}), ex2 {:.5} (holds {})",
            r1.derivative_at_peak_value, r1.holds, r2.derivative_at_peak_value, r2.holds
        ),
    )
}

fn c4_t4_extra() -> Outcome {
    let (f, g) = ex2();
    let r = certify::check_t4_extra(&f, &g).unwrap();
    check(
        near(r.value, 2.986, 5e-4) && (r.value - r.threshold_f).abs() > maps::TOL_FP,
        format!("f(g(A_f)) = {:.5}, A_f = {:.5}", r.value, r.threshold_f),
    )
}

fn c5_trichotomy() -> Outcome {
    let (f, g) = sigmoid_pair();
    let cfg = RdsConfig::new(f, g, 0.5, None, None).unwrap();
    let (af, ag) = (cfg.features_f().threshold, cfg.features_g().threshold);
    let class = certify::classify_ordering(cfg.features_f(), cfg.features_g());
    let ordered = class.ordering == certify::OrderingKind::AfAgKfKg && class.ties.is_empty();
    let n = 10_000;
    let policy = HorizonPolicy::until_decided();
    let mut ok = ordered;
    let mut notes = Vec::new();
    for (j, x0) in [0.05, 0.25, af].into_iter().enumerate() {
        let e = montecarlo::estimate_absorption(&cfg, x0, n, policy, 100 + j as u64).unwrap();
        ok &= e.tally.extinct == n;
        notes.push(format!("x0={x0:.3}: extinct {}/{n}", e.tally.extinct));
    }
    for (j, x0) in [ag, 1.2, 2.2, 3.0].into_iter().enumerate() {
        let e = montecarlo::estimate_absorption(&cfg, x0, n, policy, 200 + j as u64).unwrap();
        ok &= e.tally.survived == n;
        notes.push(format!("x0={x0:.3}: survived {}/{n}", e.tally.survived));
    }
    let mid = 0.5 * (af + ag);
    let e = montecarlo::estimate_absorption(&cfg, mid, n, policy, 300).unwrap();
    let t = e.tally;
    ok &= t.extinct > 0 && t.survived > 0 && t.undecided == 0 && t.extinct + t.survived == n;
    notes.push(format!(
        "x0={mid:.3}: extinct {} survived {} undecided {} (horizon {})",
        t.extinct, t.survived, t.undecided, e.horizon
    ));
    check(ok, format!("ordering {}; {}", class.ordering, notes.join("; ")))
}

fn c6_trapping() -> Outcome {
    let (f, g) = sigmoid_pair();
    let delta = 0.05;
    let r = certify::theorem2_sets(&f, &g, delta, certify::SET_GRID).unwrap();
    let cert = certify::certify(Theorem::T2, &f, &g, Some(delta)).unwrap();
    let (w1, z2, w3) = (r.w1.unwrap(), r.z2.unwrap(), r.w3.unwrap());
    let cfg = RdsConfig::new(f, g, 0.5, Some(PerturbationSpec::uniform(delta).unwrap()), None).unwrap();
    let x0: Vec<f64> = numeric::linspace(0.0, cfg.bound(), 64).collect();
    let low = Trap { lo: 0.0, hi: w1, lo_closed: true, hi_closed: false };
    let high = Trap::open(z2, w3);
    let a = montecarlo::count_trap_escapes(&cfg, low, &x0, 10_000, 10_000, 61).unwrap();
    let b = montecarlo::count_trap_escapes(&cfg, high, &x0, 10_000, 10_000, 62).unwrap();
    check(
        cert.verdict == Verdict::AllHold && a.escapes == 0 && b.escapes == 0 && a.entered > 0 && b.entered > 0,
        format!(
            "delta={delta}, w1={w1:.4}, z2={z2:.4}, w3={w3:.4}; [0,w1): entered {} escapes {}; (z2,w3): entered {} escapes {}",
            a.entered, a.escapes, b.entered, b.escapes
        ),
    )
}

fn c7_extinction() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, (f, g)) in [("ex1", ex1()), ("ex2", ex2())] {
        let cfg = RdsConfig::new(f, g, 0.5, None, None).unwrap();
        let m = cfg.bound();
        let grid: Vec<f64> = (1..=20).map(|i| m * i as f64 / 20.0).collect();
        let rep = montecarlo::verify_extinction_theorem(&cfg, &grid, 1_000, HorizonPolicy::until_decided(), 7).unwrap();
        let undecided: u64 = rep.rows.iter().map(|r| r.undecided).sum();
        let worst = rep.rows.iter().map(|r| r.extinct.estimate).fold(1.0, f64::min);
        ok &= rep.all_extinct() && rep.rows.len() == 20;
        notes.push(format!(
            "{name} via {:?}: min extinct fraction {worst}, undecided {undecided}, max horizon {}",
            rep.theorem,
            rep.max_horizon()
        ));
    }
    check(ok, notes.join("; "))
}

fn c8_t_of_p() -> Outcome {
    let (f, g) = ex2();
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let (x0, cap) = (3.0, 500);
    let sweep = montecarlo::sweep_t_of_p(&f, &g, &grid, x0, 2_000, cap, 8).unwrap();
    let t = |p: f64| sweep.point(p).and_then(|v| v.estimate.as_ref()).map(|e| e.estimate).unwrap_or(f64::NAN);
    let (t1, t5, t9) = (t(0.1), t(0.5), t(0.9));
    let tails = montecarlo::sweep_t_of_p(&f, &g, &[0.5, 0.99], x0, 2_000, cap, 9).unwrap();
    let (c5, c99) = (tails.values[0].n_censored, tails.values[1].n_censored);
    let low_ok = t1 > 2.0 * t5;
    let high_ok = t9 > 2.0 * t5;
    let cens_ok = c99 > c5;
    check(
        low_ok && high_ok && cens_ok,
        format!(
            "T(0.1)={t1:.2} T(0.5)={t5:.2} T(0.9)={t9:.2}: T(0.1)>2T(0.5) {low_ok}, T(0.9)>2T(0.5) {high_ok}; censored p=0.5: {c5}, p=0.99: {c99} ({cens_ok})"
        ),
    )
}

fn c9_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        // sigmoid: rho > 2 sqrt(a)
        let a = rng.random_range(0.2..3.0);
        let rho = 2.0 * f64::sqrt(a) * rng.random_range(1.05..2.0);
        let s = MapSpec::sigmoid(rho, a).unwrap();
        let (ca, ck) = s.closed_form_fixed_points().unwrap();
        let fp = maps::find_fixed_points(&s).unwrap();
        worst = worst.max((ca - fp.threshold).abs()).max((ck - fp.carrying).abs());

        // rational: G > 1, T > sqrt(bp (G - 1))
        let gain = rng.random_range(1.05..2.0);
        let bp = rng.random_range(0.3..3.0);
        let center = f64::sqrt(bp * (gain - 1.0)) * rng.random_range(1.2..4.0) + 0.5;
        let r = MapSpec::rational_unimodal(gain, bp, center).unwrap();
        let (ca, ck) = r.closed_form_fixed_points().unwrap();
        let fp = maps::find_fixed_points(&r).unwrap();
        worst = worst.max((ca - fp.threshold).abs()).max((ck - fp.carrying).abs());

        // critical point: zero of the centered-difference slope on [0, b]
        let cb = r.closed_form_critical_point().unwrap();
        let h = 1e-6;
        let slope = |x: f64| r.apply(x + h) - r.apply(x - h);
        let roots = numeric::grid_roots(slope, h, r.bound() - h, 4096, 1e-13);
        let oracle = roots.first().copied().unwrap_or(f64::NAN);
        worst = worst.max((cb - oracle).abs());
        let cp = maps::find_critical_point(&r).unwrap().unwrap();
        worst = worst.max((cb - cp.location).abs());
    }
    check(worst <= 1e-9, format!("max |closed form - oracle| over 100 draws per family = {worst:.2e}"))
}

fn c10_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mismatches = 0;
    let pairs = [ex1(), ex2(), sigmoid_pair()];
    for i in 0..100 {
        let (f, g) = pairs[i % 3].clone();
        let p = rng.random_range(0.05..0.95);
        let pert =
            if i % 2 == 0 { None } else { Some(PerturbationSpec::uniform(rng.random_range(0.001..0.05)).unwrap()) };
        let cfg = RdsConfig::new(f, g, p, pert, None).unwrap();
        let seed: u64 = rng.random();
        let x0 = rng.random_range(0.0..cfg.bound());
        let run = || {
            let traj = rds::simulate(&cfg, x0, seed, 500).unwrap();
            let est = montecarlo::estimate_absorption(&cfg, x0, 50, HorizonPolicy::fixed(300), seed).unwrap();
            let hit = montecarlo::hitting_tally(
                &cfg,
                x0.max(cfg.critical_value() * 1.01),
                cfg.critical_value(),
                0..50,
                300,
                seed,
            )
            .unwrap();
            format!(
                "{}|{}|{}",
                traj.to_csv(),
                serde_json::to_string(&est).unwrap(),
                serde_json::to_string(&hit).unwrap()
            )
        };
        if run() != run() {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches} of 100 (config, seed) pairs differed between runs"))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 fixed-point regression", c1_fixed_points, Duration::from_secs(1)),
        ("2 composition witnesses", c2_witnesses, Duration::from_secs(1)),
        ("3 derivative bound", c3_contraction, Duration::from_secs(1)),
        ("4 T4 extra hypothesis", c4_t4_extra, Duration::from_secs(1)),
        ("5 T1 trichotomy", c5_trichotomy, Duration::from_secs(60)),
        ("6 T2 trapping", c6_trapping, Duration::from_secs(120)),
        ("7 almost-sure extinction", c7_extinction, Duration::from_secs(120)),
        ("8 T(p) shape", c8_t_of_p, Duration::from_secs(600)),
        ("9 oracle equivalence", c9_oracles, Duration::from_secs(10)),
        ("10 determinism", c10_determinism, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} [{:.2}s / {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
