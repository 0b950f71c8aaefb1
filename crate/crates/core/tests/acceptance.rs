//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};
use rand::Rng;

use cotangent_lab::flow::{action_along, integrate_lifted, linearized_monodromy, symplectic_defect};
use cotangent_lab::hamiltonians::{linear_combination, make_momentum_hamiltonian, sharpness_profile, trig_bump, SplineBuilder};
use cotangent_lab::hofer::{certify, compose_certificates, SamplingPlan, AUDIT_SLACK};
use cotangent_lab::homology::{
    capacity_hat, compute_sh_tables, direct_limit, inverse_limit, BidirectedSystem, BitMatrix, ClassKind, GF2Map, GF2Space,
    GeometryCase,
};
use cotangent_lab::orbits::{default_seeds, enumerate_profile_orbits, find_orbit, verify_theorem_b, NewtonSettings};
use cotangent_lab::phase::deck_transform;
use cotangent_lab::propagation::{
    build_damped_system, damped_grid, golden_fraction, propagation_speed, rotation_set_estimate, theorem_a_scan,
    verify_damped_bound, DampedSystem, FixedPointSearch, PerturbationSource, PerturbedSystem, SeedGrid, SkewProductSystem,
    FIXED_POINT_ACCEPT,
};
use cotangent_lab::rng::stream_rng;
use cotangent_lab::{HamiltonianField, HomotopyClass, IntegratorSettings, LiftedPoint, ProfileFunction, TimeOneMap};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn parabola(height: f64) -> ProfileFunction {
    ProfileFunction::cut_parabola(height, 0.9, 0.98).unwrap()
}

/// A random C² profile: a concave head, one free curvature knot, then a connector to 0.
fn random_profile(rng: &mut impl Rng) -> ProfileFunction {
    loop {
        let f0 = rng.gen_range(1.0..=3.0);
        let mut b = SplineBuilder::new(f0, -f0 * rng.gen_range(1.0..4.0));
        let r1 = rng.gen_range(0.2..0.6);
        b.push(r1, -f0 * rng.gen_range(0.0..4.0));
        let end = rng.gen_range((r1 + 0.2)..0.97);
        if b.connect_to(end, 0.0).is_err() {
            continue;
        }
        if let Ok(f) = b.finish() {
            return f;
        }
    }
}

fn criterion_1() -> Outcome {
    let mut rng = stream_rng(2024, 1);
    let settings = NewtonSettings::default();
    let mut checked = 0;
    let mut worst = (0.0f64, 0.0f64);
    for i in 0..20 {
        let f = random_profile(&mut rng);
        let n = 1 + i % 2;
        let classes: Vec<HomotopyClass> = if n == 1 {
            vec![HomotopyClass(vec![1]), HomotopyClass(vec![2])]
        } else {
            vec![HomotopyClass(vec![0, 1]), HomotopyClass(vec![-2, 0])]
        };
        let h = make_momentum_hamiltonian(n, f.clone()).map_err(|e| e.to_string())?;
        for e in classes {
            let ell = e.norm();
            for d in enumerate_profile_orbits(&f, ell).map_err(|e| e.to_string())? {
                // Independent oracle: the radius solves f'(r) = ±|e| and the action is f(r) − r f'(r).
                let slope = d.sign as f64 * ell;
                ensure((f.derivative(d.radius) - slope).abs() <= 1e-9, || format!("profile {i}: f'({}) ≠ {slope}", d.radius))?;
                let expected = f.value(d.radius) - d.radius * slope;
                let p: Vec<f64> = d.momentum_for(&e).iter().map(|v| v * (1.0 + 1e-4)).collect();
                let guess = LiftedPoint::new(vec![0.1; n], p).map_err(|e| e.to_string())?;
                let orbit = find_orbit(&h, &e, &guess, &settings).map_err(|err| format!("profile {i}, e = {:?}, r = {}: {err}", e.0, d.radius))?;
                let dr = (orbit.x0.momentum_norm() - d.radius).abs();
                let da = (orbit.action - expected).abs();
                worst = (worst.0.max(dr), worst.1.max(da));
                ensure(dr <= 1e-6 && da <= 1e-6, || format!("profile {i}, e = {:?}: radius error {dr:e}, action error {da:e}", e.0))?;
                checked += 1;
            }
        }
    }
    ensure(checked >= 20, || format!("only {checked} orbits enumerated"))?;
    Ok(format!("{checked} orbits, max radius error {:.1e}, max action error {:.1e}", worst.0, worst.1))
}

fn classes_within(n: usize, radius: f64) -> Vec<HomotopyClass> {
    let m = radius.floor() as i64;
    let mut out = Vec::new();
    let mut e = vec![-m; n];
    loop {
        let c = HomotopyClass(e.clone());
        if c.norm() <= radius {
            out.push(c);
        }
        let mut i = 0;
        while i < n && e[i] == m {
            e[i] = -m;
            i += 1;
        }
        if i == n {
            return out;
        }
        e[i] += 1;
    }
}

fn criterion_2() -> Outcome {
    let settings = NewtonSettings { integrator: IntegratorSettings::auto(), ..NewtonSettings::default() };
    let mut lowest = f64::INFINITY;
    let mut count = 0;
    for n in [1, 2] {
        let h = make_momentum_hamiltonian(n, parabola(2.0)).map_err(|e| e.to_string())?;
        for e in classes_within(n, 2.0) {
            let seeds = default_seeds(&h, &e, 0).map_err(|e| e.to_string())?;
            let r = verify_theorem_b(&h, &e, &seeds, &settings);
            let best = r.best.as_ref().map_or(f64::NEG_INFINITY, |o| o.action);
            ensure(best >= 2.0 - 1e-4, || format!("n = {n}, e = {:?}: best action {best}", e.0))?;
            lowest = lowest.min(best);
            count += 1;
        }
    }
    let sharp = make_momentum_hamiltonian(1, sharpness_profile(1.0, 0.1).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    for e in [HomotopyClass(vec![1]), HomotopyClass(vec![-1])] {
        let r = verify_theorem_b(&sharp, &e, &default_seeds(&sharp, &e, 0).map_err(|e| e.to_string())?, &settings);
        ensure(r.converged == 0, || format!("sharpness profile has {} orbits in class {:?}", r.converged, e.0))?;
    }
    Ok(format!("{count} classes, lowest best action {lowest:.6}; sharpness profile has no orbit for |e| = 1"))
}

fn damped_spec() -> Result<DampedSystem, String> {
    DampedSystem::with_shift(25.0).map_err(|e| e.to_string())
}

fn criterion_3() -> Outcome {
    let spec = damped_spec()?;
    let r = verify_damped_bound(&spec, &damped_grid(200), 500).map_err(|e| e.to_string())?;
    ensure(r.holds && r.momentum_nondecreasing, || format!("max displacement {} vs bound {}", r.max_displacement, r.bound))?;
    Ok(format!("N = {}, gamma = {:.6}, max displacement {:.4} <= {:.4}", spec.crossing_steps, spec.gamma, r.max_displacement, r.bound))
}

fn criterion_4() -> Outcome {
    let h = make_momentum_hamiltonian(1, parabola(1.0)).map_err(|e| e.to_string())?;
    ensure(h.value(0.0, &[0.0], &[0.0]) == 1.0, || "H(0) ≠ 1".into())?;
    let system = cotangent_lab::SequentialSystem::constant(h, IntegratorSettings::auto()).map_err(|e| e.to_string())?;
    let grid = SeedGrid::fundamental(1, 200, 0.99).map_err(|e| e.to_string())?;
    let speed = propagation_speed(&system, 50, &grid).map_err(|e| e.to_string())?.speed_estimate;
    ensure(speed >= 0.85, || format!("constant-system speed {speed}"))?;
    let damped = build_damped_system(&damped_spec()?).map_err(|e| e.to_string())?;
    let d = propagation_speed(&damped, 500, &grid).map_err(|e| e.to_string())?;
    let tail = d.radius_over_k[500];
    ensure(tail <= 0.05, || format!("damped radius_over_k at k = 500 is {tail}"))?;
    Ok(format!("constant speed {speed:.4}, damped radius/k {tail:.4}"))
}

fn criterion_5() -> Outcome {
    let base = make_momentum_hamiltonian(1, parabola(2.0)).map_err(|e| e.to_string())?;
    let source = PerturbationSource::Random { seed: 5, min_fraction: 0.6, max_fraction: 0.9 };
    let system = PerturbedSystem::new(base, 0.3, source, 10, IntegratorSettings::auto()).map_err(|e| e.to_string())?;
    ensure((system.level() - 2.0).abs() < 1e-9, || format!("level {}", system.level()))?;
    let mut total = 0;
    let mut worst = 0.0f64;
    for k in [5usize, 10] {
        let top = (k as f64 * 1.7).floor() as i64;
        let vs: Vec<HomotopyClass> = (-top..=top).map(|v| HomotopyClass(vec![v])).collect();
        let reports = theorem_a_scan(&system, k, &vs, &FixedPointSearch::default()).map_err(|e| e.to_string())?;
        for r in reports {
            ensure(r.found && r.residual <= FIXED_POINT_ACCEPT, || format!("k = {k}, v = {:?}: residual {:e}", r.displacement.0, r.residual))?;
            worst = worst.max(r.residual);
            total += 1;
        }
    }
    Ok(format!("{total} fixed points, worst residual {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let grid = [0.5, 1.0, 1.5, 2.0, 3.0];
    let ell = 1.0;
    let mut rows = 0;
    for (case, big_zero, big_class) in [(GeometryCase::Torus { n: 2 }, 4, 4), (GeometryCase::Negative { genus: 2 }, 6, 2)] {
        for (class, lower, big) in [(ClassKind::Zero, 0.0, big_zero), (ClassKind::Nonzero { ell }, ell, big_class)] {
            for a in grid {
                for c in grid {
                    let t = compute_sh_tables(case, class, a, c).map_err(|e| format!("{case:?} {class:?} a = {a} c = {c}: {e}"))?;
                    let expected = (if a >= lower { big } else { 0 }, if a <= c { big } else { 0 }, lower <= a && a <= c);
                    let got = (t.inverse_rank, t.direct_rank, t.t_is_iso);
                    ensure(got == expected, || format!("{case:?} {class:?} a = {a} c = {c}: got {got:?}, expected {expected:?}"))?;
                    rows += 1;
                }
                let cap = capacity_hat(case, class, a).map_err(|e| e.to_string())?;
                let expected = lower.max(a);
                ensure(cap == expected, || format!("capacity {case:?} {class:?} a = {a}: {cap} ≠ {expected}"))?;
            }
        }
    }
    let five = capacity_hat(GeometryCase::Torus { n: 2 }, ClassKind::Nonzero { ell: 5.0 }, 2.0).map_err(|e| e.to_string())?;
    ensure(five == 5.0, || format!("capacity for ell = 5, a = 2 is {five}"))?;
    Ok(format!("{rows} table rows and {} capacities match", 4 * grid.len() + 1))
}

fn run_property<S: Strategy>(name: &str, cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config.clone(), TestRng::deterministic_rng(config.rng_algorithm));
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn mixed_field() -> HamiltonianField {
    let a = make_momentum_hamiltonian(2, parabola(1.0)).unwrap();
    let b = trig_bump(2, vec![1, -1], 0.4, parabola(1.0), 0.3, 1, 0.1).unwrap();
    linear_combination(vec![(1.0, a), (1.0, b)]).unwrap()
}

fn bits(seed: &[bool], rows: usize, cols: usize, offset: usize) -> BitMatrix {
    BitMatrix::from_fn(rows, cols, |i, j| seed[(i * cols + j + offset) % seed.len()])
}

fn criterion_7() -> Outcome {
    let map = TimeOneMap::new(mixed_field(), IntegratorSettings::default()).map_err(|e| e.to_string())?;
    let momentum = (0.0f64..0.95, 0.0f64..std::f64::consts::TAU);
    run_property("symplecticity", 6, (-1.0f64..1.0, -1.0f64..1.0, momentum.clone()), |(q1, q2, (r, th))| {
        let x = LiftedPoint::new(vec![q1, q2], vec![r * th.cos(), r * th.sin()]).unwrap();
        let defect = symplectic_defect(&linearized_monodromy(&map, &x).unwrap());
        prop_assert!(defect <= 1e-6, "defect {}", defect);
        Ok(())
    })?;
    run_property("deck equivariance", 8, (-1.0f64..1.0, momentum, -3i64..=3, -3i64..=3), |(q, (r, th), e1, e2)| {
        let x = LiftedPoint::new(vec![q, 0.3], vec![r * th.cos(), r * th.sin()]).unwrap();
        let e = HomotopyClass(vec![e1, e2]);
        let lhs = map.apply(&deck_transform(&x, &e).unwrap()).unwrap();
        let rhs = deck_transform(&map.apply(&x).unwrap(), &e).unwrap();
        prop_assert!(lhs.distance(&rhs) <= 1e-10);
        Ok(())
    })?;
    let cosine = trig_bump(1, vec![1], 0.0, parabola(1.0), 1.0, 0, 0.0).unwrap();
    run_property("energy drift", 6, (-0.5f64..0.5, 0.05f64..0.6), |(q, p)| {
        let x0 = LiftedPoint::new(vec![q], vec![p]).unwrap();
        let e0 = cosine.value(0.0, &x0.q, &x0.p);
        let drift = |dt: f64| {
            let traj = integrate_lifted(&cosine, &x0, 0.0, 1.0, &IntegratorSettings::with_dt(dt)).unwrap();
            traj.points.iter().map(|x| (cosine.value(0.0, &x.q, &x.p) - e0).abs()).fold(0.0, f64::max)
        };
        let (d1, d2) = (drift(2e-2), drift(1e-2));
        prop_assume!(d1 > 1e-12);
        prop_assert!((3.0..5.0).contains(&(d1 / d2)), "drift ratio {}", d1 / d2);
        Ok(())
    })?;
    let field = {
        let h = make_momentum_hamiltonian(2, parabola(2.0)).unwrap();
        let bump = trig_bump(2, vec![0, 1], 0.2, parabola(1.0), 0.01, 0, 0.0).unwrap();
        linear_combination(vec![(1.0, h), (1.0, bump)]).unwrap()
    };
    let e = HomotopyClass(vec![1, 0]);
    let orbit = find_orbit(&field, &e, &LiftedPoint::new(vec![0.0, 0.0], vec![-0.25, 0.0]).unwrap(), &NewtonSettings::default())
        .map_err(|e| e.to_string())?;
    let steps = orbit.trajectory.points.len() - 1;
    run_property("action start point", 4, 1usize..steps, |i| {
        let start = orbit.trajectory.points[i].clone();
        let traj = integrate_lifted(&field, &start, 0.0, 1.0, &IntegratorSettings::default()).unwrap();
        let action = action_along(&field, &traj, &e).unwrap();
        prop_assert!((action - orbit.action).abs() <= 1e-6, "action {} vs {}", action, orbit.action);
        Ok(())
    })?;
    let dims = (1usize..8, 1usize..8, 1usize..8, 1usize..8);
    run_property("GF(2) laws", 64, (proptest::collection::vec(any::<bool>(), 1..64), dims), |(seed, (r, k, l, c))| {
        let (a, b, e) = (bits(&seed, r, k, 0), bits(&seed, k, l, 7), bits(&seed, l, c, 13));
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(ab.mul(&e).unwrap(), a.mul(&b.mul(&e).unwrap()).unwrap());
        prop_assert_eq!(BitMatrix::identity(r).mul(&a).unwrap(), a.clone());
        prop_assert!(ab.rank() <= a.rank().min(b.rank()));
        prop_assert_eq!(a.transpose().rank(), a.rank());
        Ok(())
    })?;
    run_property("exhausting tails", 64, (proptest::collection::vec(0usize..5, 1..6), 1usize..5, 1usize..5), |(middle, top, tail)| {
        let mut spaces = vec![GF2Space { dimension: middle[0] }; top];
        spaces.extend(middle.iter().map(|&d| GF2Space { dimension: d }));
        spaces.extend(vec![GF2Space { dimension: *middle.last().unwrap() }; tail]);
        let transitions = spaces
            .windows(2)
            .map(|w| Some(if w[0] == w[1] { GF2Map::identity(w[0]) } else { GF2Map::zero(w[0], w[1]) }))
            .collect();
        let m = spaces.len();
        let system = BidirectedSystem::new((0..m).map(|i| -(i as f64)).collect(), spaces.clone(), transitions).unwrap();
        let direct = direct_limit(&system, 0, m - 1).unwrap();
        prop_assert_eq!(direct.space, spaces[m - 1]);
        prop_assert!((system.upward_tail_start()..m).all(|k| direct.iota[k].is_iso()));
        let inverse = inverse_limit(&system, 0, m - 1).unwrap();
        prop_assert_eq!(inverse.space, spaces[0]);
        prop_assert!((0..=system.downward_tail_end()).all(|k| inverse.pi[k].is_iso()));
        Ok(())
    })?;
    let plan = SamplingPlan { points: 600, times: 8, zero_section_resolution: 9, refine: 3, seed: 1 };
    run_property("Hofer subadditivity", 4, (0.2f64..3.0, 0.2f64..3.0, -1.0f64..1.0), |(h1, h2, amp)| {
        let phi = make_momentum_hamiltonian(1, parabola(h1)).unwrap();
        let bump = trig_bump(1, vec![1], 0.1, parabola(1.0), amp, 0, 0.0).unwrap();
        let psi = linear_combination(vec![(1.0, make_momentum_hamiltonian(1, parabola(h2)).unwrap()), (1.0, bump)]).unwrap();
        let (a, b) = (certify(&phi, &plan).unwrap(), certify(&psi, &plan).unwrap());
        let ab = compose_certificates(&a, &b, IntegratorSettings::auto()).unwrap();
        prop_assert!(ab.osc_upper <= a.osc_upper + b.osc_upper + AUDIT_SLACK);
        Ok(())
    })?;
    Ok("7 property suites hold".into())
}

fn criterion_8() -> Outcome {
    let alpha = vec![golden_fraction()];
    let settings = IntegratorSettings::auto();
    for n in [1, 2] {
        let id = SkewProductSystem::constant(HamiltonianField::zero(n), alpha.clone(), vec![0.0], settings).map_err(|e| e.to_string())?;
        let k = rotation_set_estimate(&id, 40, 10).map_err(|e| e.to_string())?;
        ensure(k.extremal_points == vec![vec![0.0; n]], || format!("identity rotation set for n = {n}: {:?}", k.extremal_points))?;
    }
    let h = make_momentum_hamiltonian(1, parabola(1.0)).map_err(|e| e.to_string())?;
    let line = SkewProductSystem::constant(h, alpha, vec![0.0], settings).map_err(|e| e.to_string())?;
    let k1 = rotation_set_estimate(&line, 200, 100).map_err(|e| e.to_string())?;
    ensure(k1.contains(&[-0.85], 0.0) && k1.contains(&[0.85], 0.0), || format!("hull {:?}", k1.hull))?;
    let planar = SkewProductSystem::modulated(2, parabola(1.0), 0.3, vec![golden_fraction(), 2f64.sqrt() - 1.0], vec![0.0, 0.0], settings)
        .map_err(|e| e.to_string())?;
    let k2 = rotation_set_estimate(&planar, 300, 40).map_err(|e| e.to_string())?;
    ensure(k2.extremal_points.len() >= 3, || format!("{} extremal points", k2.extremal_points.len()))?;
    Ok(format!("n = 1 hull [{:.3}, {:.3}], planar hull has {} extremal points", k1.hull[0][0], k1.hull[1][0], k2.extremal_points.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 8] = [
        ("orbit oracle equivalence", criterion_1, 60),
        ("existence desk check", criterion_2, 120),
        ("damped counterexample bound", criterion_3, 60),
        ("propagation speed", criterion_4, 120),
        ("displaced fixed points", criterion_5, 600),
        ("homology tables and capacity", criterion_6, 30),
        ("property suites", criterion_7, 120),
        ("rotation sets", criterion_8, 120),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let label = format!("criterion {} ({name})", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed <= Duration::from_secs(*budget) {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:.1?}, budget {budget} s"))
            }
        });
        match outcome {
            Ok(msg) => println!("PASS {label}: {msg} [{elapsed:.1?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {label}: {msg} [{elapsed:.1?}]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
