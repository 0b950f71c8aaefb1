//! Experiment driver: runs one configured experiment and writes
//! `summary.json` plus plot-ready CSV files.
//!
//! CSV bodies depend only on the config. The summary carries a metadata block
//! with the wall-clock time, which is the only nondeterministic output.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use cotangent_lab::hofer::{certify, transfer_dc, SamplingPlan};
use cotangent_lab::homology::{capacity_hat, capacity_hat_scan, compute_sh_tables, sh_tables_csv, ClassKind, ShTable};
use cotangent_lab::orbits::{action_spectrum, default_seeds, enumerate_profile_orbits, find_orbit};
use cotangent_lab::propagation::{
    build_damped_system, damped_grid, golden_fraction, propagation_speed, rotation_set_estimate, theorem_a_scan,
    verify_damped_bound, PerturbedSystem, SeedGrid, SkewProductSystem,
};
use cotangent_lab::{HomotopyClass, LiftedPoint, SequentialSystem};

pub use config::{load_config, parse_config, to_toml, Experiment, ExperimentConfig, CATALOG, SPEC_VERSION};
use config::SystemSpec;

/// Whether the experiment confirmed what it was asked to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    /// A hypothesis was unmet or the object searched for was not found.
    NotFound,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Self::Success => 0,
            Self::NotFound => 2,
        }
    }

    fn from_ok(ok: bool) -> Self {
        if ok {
            Self::Success
        } else {
            Self::NotFound
        }
    }
}

/// Result of one run before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub status: Status,
    pub verdict: String,
    pub result: Value,
    /// File name and body of each CSV output.
    pub files: Vec<(String, String)>,
}

/// Runs the experiment without touching the filesystem.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    let settings = config.integrator;
    match &config.experiment {
        Experiment::Orbit(p) => {
            let field = p.field.build().context("params.field")?;
            let e = HomotopyClass(p.class.clone());
            let guess = match (&p.guess, p.field.radial_profile()?) {
                (Some(g), _) => LiftedPoint::new(g.q.clone(), g.p.clone()).context("params.guess")?,
                (None, Some(f)) if !e.is_zero() => {
                    let datum = enumerate_profile_orbits(&f, e.norm())?.into_iter().next();
                    match datum {
                        Some(d) => LiftedPoint::new(vec![0.0; p.field.n], d.momentum_for(&e).iter().map(|v| v * (1.0 + 1e-4)).collect())?,
                        None => LiftedPoint::origin(p.field.n),
                    }
                }
                _ => LiftedPoint::origin(p.field.n),
            };
            match find_orbit(&field, &e, &guess, &p.newton) {
                Ok(orbit) => {
                    let csv = orbit.trajectory.to_csv();
                    let verdict = format!("orbit found, action {:.6}, residual {:.1e}", orbit.action, orbit.residual);
                    let report = orbit.report(p.newton.integrator, None);
                    Ok(RunOutput { status: Status::Success, verdict, result: json!(report), files: vec![("trajectory.csv".into(), csv)] })
                }
                Err(err @ cotangent_lab::Error::NonConvergence { .. }) | Err(err @ cotangent_lab::Error::SingularJacobian { .. }) => Ok(RunOutput {
                    status: Status::NotFound,
                    verdict: format!("no orbit found: {err}"),
                    result: json!({ "found": false, "reason": err.to_string() }),
                    files: Vec::new(),
                }),
                Err(err) => Err(err.into()),
            }
        }
        Experiment::Spectrum(p) => {
            let field = p.field.build().context("params.field")?;
            let e = HomotopyClass(p.class.clone());
            let seeds = default_seeds(&field, &e, p.resolution)?;
            let spectrum = action_spectrum(&field, &e, &seeds, &p.newton);
            let mut csv = String::from("action,radius,residual,kernel_dim\n");
            for o in &spectrum.orbits {
                let _ = writeln!(csv, "{:.12e},{:.12e},{:.3e},{}", o.action, o.x0.momentum_norm(), o.residual, o.kernel_dim);
            }
            let oracle = match p.field.radial_profile()? {
                Some(f) if !e.is_zero() => Some(enumerate_profile_orbits(&f, e.norm())?),
                _ => None,
            };
            let best = spectrum.actions.last().copied();
            let ok = best.is_some() && p.require_action.map_or(true, |req| best.is_some_and(|b| b >= req));
            let verdict = match best {
                Some(b) => format!("{} distinct actions, best {b:.6}", spectrum.actions.len()),
                None => "no orbits found".into(),
            };
            Ok(RunOutput {
                status: Status::from_ok(ok),
                verdict,
                result: json!({
                    "class": p.class,
                    "actions": spectrum.actions,
                    "converged": spectrum.orbits.len(),
                    "failures": spectrum.failures,
                    "best_action": best,
                    "profile_oracle": oracle,
                }),
                files: vec![("spectrum.csv".into(), csv)],
            })
        }
        Experiment::Propagate(p) => {
            let (system, n) = match &p.system {
                SystemSpec::Constant { field } => (SequentialSystem::constant(field.build().context("params.system.field")?, settings)?, field.n),
                SystemSpec::Damped(d) => (build_damped_system(&d.build().context("params.system")?)?, 1),
            };
            let grid = SeedGrid::fundamental(n, p.resolution, p.momentum_cap)?;
            let report = propagation_speed(&system, p.k, &grid)?;
            let last = report.radius_over_k[p.k];
            let ok = p.min_speed.map_or(true, |m| report.speed_estimate >= m) && p.max_speed.map_or(true, |m| last <= m);
            let verdict = format!("speed estimate {:.4} at k = {}", report.speed_estimate, p.k);
            let csv = report.to_csv();
            Ok(RunOutput {
                status: Status::from_ok(ok),
                verdict,
                result: json!({
                    "horizon": report.horizon,
                    "grid_size": report.grid_size,
                    "dispersion": report.dispersion,
                    "speed_estimate": report.speed_estimate,
                    "final_radius": report.radius[p.k],
                }),
                files: vec![("propagation.csv".into(), csv)],
            })
        }
        Experiment::TheoremA(p) => {
            let field = p.field.build().context("params.field")?;
            let horizon = p.ks.iter().copied().max().context("params.ks must not be empty")?;
            let system = PerturbedSystem::new(field, p.a, p.perturbation.source(config.seed), horizon, settings)?;
            let n = p.field.n;
            let mut reports = Vec::new();
            for &k in &p.ks {
                let mut vs: Vec<HomotopyClass> = p.displacements.iter().map(|v| HomotopyClass(v.clone())).collect();
                if p.all_within_threshold {
                    let threshold = k as f64 * (system.level() - system.bound());
                    vs.extend(lattice_ball(n, threshold));
                }
                reports.extend(theorem_a_scan(&system, k, &vs, &p.search)?);
            }
            let mut csv = String::from("k,");
            for j in 1..=n {
                let _ = write!(csv, "v{j},");
            }
            csv.push_str("hypothesis_met,found,residual");
            for j in 1..=n {
                let _ = write!(csv, ",q{j}");
            }
            for j in 1..=n {
                let _ = write!(csv, ",p{j}");
            }
            csv.push('\n');
            for r in &reports {
                let _ = write!(csv, "{},", r.k);
                for v in &r.displacement.0 {
                    let _ = write!(csv, "{v},");
                }
                let _ = write!(csv, "{},{},{:.3e}", r.hypothesis_met, r.found, r.residual);
                match &r.point {
                    Some(x) => x.q.iter().chain(&x.p).for_each(|c| {
                        let _ = write!(csv, ",{c:.12e}");
                    }),
                    None => (0..2 * n).for_each(|_| csv.push(',')),
                }
                csv.push('\n');
            }
            let found = reports.iter().filter(|r| r.found).count();
            let ok = reports.iter().all(|r| r.found);
            let verdict = format!("{found} of {} displaced fixed points found", reports.len());
            Ok(RunOutput {
                status: Status::from_ok(ok),
                verdict,
                result: json!({
                    "level": system.level(),
                    "bound": system.bound(),
                    "max_oscillation": system.max_oscillation(),
                    "reports": reports,
                }),
                files: vec![("theorem_a.csv".into(), csv)],
            })
        }
        Experiment::RotationSet(p) => {
            let alpha = if p.alpha.is_empty() { default_alpha(p.n) } else { p.alpha.clone() };
            let y0 = if p.y0.is_empty() { vec![0.0; alpha.len()] } else { p.y0.clone() };
            let profile = p.profile.build().context("params.profile")?;
            let system = if p.amplitude == 0.0 {
                SkewProductSystem::constant(cotangent_lab::hamiltonians::make_momentum_hamiltonian(p.n, profile)?, alpha, y0, settings)?
            } else {
                SkewProductSystem::modulated(p.n, profile, p.amplitude, alpha, y0, settings)?
            };
            let estimate = rotation_set_estimate(&system, p.samples, p.k)?;
            let mut hull_csv = String::new();
            let header: Vec<String> = (1..=p.n).map(|j| format!("v{j}")).collect();
            let _ = writeln!(hull_csv, "{}", header.join(","));
            for v in &estimate.hull {
                let row: Vec<String> = v.iter().map(|c| format!("{c:.12e}")).collect();
                let _ = writeln!(hull_csv, "{}", row.join(","));
            }
            let contains = p.require_contains.iter().all(|v| estimate.contains(v, 0.0));
            let ok = contains && estimate.extremal_points.len() >= p.min_extremal_points;
            let verdict = format!("{} extremal points, inscribed radius {:.4}", estimate.extremal_points.len(), estimate.inscribed_radius);
            Ok(RunOutput {
                status: Status::from_ok(ok),
                verdict,
                result: json!({
                    "hull": estimate.hull,
                    "extremal_points": estimate.extremal_points,
                    "inscribed_radius": estimate.inscribed_radius,
                    "near_vertex_counts": estimate.near_vertex_counts,
                    "samples": estimate.samples.len(),
                }),
                files: vec![("rotation_samples.csv".into(), estimate.to_csv()), ("hull.csv".into(), hull_csv)],
            })
        }
        Experiment::Counterexample(p) => {
            let spec = p.damped().build().context("params")?;
            let grid = damped_grid(p.grid);
            let report = verify_damped_bound(&spec, &grid, p.iterations)?;
            let system = build_damped_system(&spec)?;
            let mut csv = String::from("p0,max_displacement,final_p\n");
            for x0 in &grid {
                let mut x = x0.clone();
                let mut worst = 0.0f64;
                for i in 1..=p.iterations {
                    x = system.apply(i, &x)?;
                    worst = worst.max((x.q[0] - x0.q[0]).abs());
                }
                let _ = writeln!(csv, "{:.12e},{:.12e},{:.12e}", x0.p[0], worst, x.p[0]);
            }
            let verdict = if report.holds { "bound holds" } else { "bound violated" };
            Ok(RunOutput {
                status: Status::from_ok(report.holds && report.momentum_nondecreasing),
                verdict: format!("{verdict}: max displacement {:.4} <= (N + 1) gamma = {:.4}", report.max_displacement, report.bound),
                result: json!({
                    "gamma": spec.gamma,
                    "shift": spec.shift,
                    "crossing_steps": spec.crossing_steps,
                    "report": report,
                }),
                files: vec![("damped_orbits.csv".into(), csv)],
            })
        }
        Experiment::Capacity(p) => {
            let value = capacity_hat(p.case, p.class, p.a)?;
            let scan = if p.scan_c.is_empty() { None } else { capacity_hat_scan(p.case, p.class, p.a, &p.scan_c, &p.scan_a)? };
            let ok = scan.map_or(true, |s| s == value);
            let csv = format!("case,class,a,capacity\n{},{},{},{}\n", p.case.label(), class_label(p.class), p.a, value);
            Ok(RunOutput {
                status: Status::from_ok(ok),
                verdict: format!("capacity {value}"),
                result: json!({ "capacity": value, "scan": scan }),
                files: vec![("capacity.csv".into(), csv)],
            })
        }
        Experiment::ShTable(p) => {
            let mut tables: Vec<ShTable> = Vec::new();
            for &class in &p.classes {
                for &a in &p.a_grid {
                    for &c in &p.c_grid {
                        tables.push(compute_sh_tables(p.case, class, a, c).with_context(|| format!("a = {a}, c = {c}"))?);
                    }
                }
            }
            let rows: Vec<Value> = tables
                .iter()
                .map(|t| json!({ "class": class_label(t.class), "a": t.a, "c": t.c, "inverse_rank": t.inverse_rank, "direct_rank": t.direct_rank, "t_rank": t.t_rank, "t_is_iso": t.t_is_iso }))
                .collect();
            Ok(RunOutput {
                status: Status::Success,
                verdict: format!("{} rows for case {}", tables.len(), p.case.label()),
                result: json!({ "case": p.case, "rows": rows }),
                files: vec![("sh_table.csv".into(), sh_tables_csv(&tables))],
            })
        }
        Experiment::HoferCertify(p) => {
            let field = p.field.build().context("params.field")?;
            let plan = p.plan.unwrap_or_else(|| SamplingPlan { seed: config.seed, ..SamplingPlan::for_field(&field) });
            let cert = certify(&field, &plan)?;
            let mut csv = format!(
                "quantity,value\nosc_upper,{:.12e}\nzero_section_lower,{:.12e}\nsampled_min,{:.12e}\nsampled_max,{:.12e}\n",
                cert.osc_upper, cert.zero_section_lower, cert.sampled_min, cert.sampled_max
            );
            let transfer = match &p.transfer {
                Some(t) => {
                    let pert_field = t.perturbation.build().context("params.transfer.perturbation")?;
                    let pert = certify(&pert_field, &SamplingPlan { seed: config.seed, ..SamplingPlan::for_field(&pert_field) })?;
                    let report = transfer_dc(&cert, &pert, t.c, t.a, settings)?;
                    let _ = writeln!(csv, "guaranteed_level,{:.12e}\nsharp_level,{:.12e}", report.guaranteed_level, report.sharp_level);
                    Some(report)
                }
                None => None,
            };
            let verdict = format!("oscillation <= {:.6}, zero-section infimum >= {:.6}", cert.osc_upper, cert.zero_section_lower);
            Ok(RunOutput { status: Status::Success, verdict, result: json!({ "certificate": cert, "transfer": transfer }), files: vec![("certificate.csv".into(), csv)] })
        }
    }
}

fn class_label(class: ClassKind) -> &'static str {
    match class {
        ClassKind::Zero => "zero",
        ClassKind::Nonzero { .. } => "nonzero",
    }
}

fn default_alpha(n: usize) -> Vec<f64> {
    let mut alpha = vec![golden_fraction()];
    if n >= 2 {
        alpha.push(2f64.sqrt() - 1.0);
    }
    alpha
}

/// Integer vectors with `|v| ≤ radius`, in lexicographic order.
pub fn lattice_ball(n: usize, radius: f64) -> Vec<HomotopyClass> {
    let m = radius.floor() as i64;
    let mut out = Vec::new();
    let mut v = vec![-m; n];
    if m < 0 {
        return out;
    }
    loop {
        let class = HomotopyClass(v.clone());
        if class.norm() <= radius {
            out.push(class);
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if v[i] < m {
                v[i] += 1;
                break;
            }
            v[i] = -m;
        }
    }
}

/// Runs the experiment and writes `summary.json` and its CSV files into `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let output = execute(config)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (name, body) in &output.files {
        fs::write(out.join(name), body).with_context(|| format!("writing {name}"))?;
    }
    let unix_time = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let summary = json!({
        "spec_version": config.spec_version,
        "kind": config.experiment.kind(),
        "seed": config.seed,
        "status": output.status,
        "exit_code": output.status.exit_code(),
        "verdict": output.verdict,
        "files": output.files.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "config": config,
        "result": output.result,
        "metadata": { "tool": "cotlab", "version": env!("CARGO_PKG_VERSION"), "unix_time": unix_time },
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n").context("writing summary.json")?;
    Ok(output)
}

/// `--out`, else the config's `output_dir`, else `out/<kind>`.
pub fn output_dir(config: &ExperimentConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(config.experiment.kind()))
}

/// Checks the config and builds every object it names, without running.
pub fn validate(config: &ExperimentConfig) -> Result<()> {
    match &config.experiment {
        Experiment::Orbit(p) => {
            p.field.build().context("params.field")?;
            if p.class.len() != p.field.n {
                bail!("params.class has length {}, expected n = {}", p.class.len(), p.field.n);
            }
        }
        Experiment::Spectrum(p) => {
            p.field.build().context("params.field")?;
            if p.class.len() != p.field.n {
                bail!("params.class has length {}, expected n = {}", p.class.len(), p.field.n);
            }
        }
        Experiment::Propagate(p) => {
            match &p.system {
                SystemSpec::Constant { field } => {
                    field.build().context("params.system.field")?;
                }
                SystemSpec::Damped(d) => {
                    d.build().context("params.system")?;
                }
            }
            if p.k == 0 {
                bail!("params.k must be positive");
            }
        }
        Experiment::TheoremA(p) => {
            p.field.build().context("params.field")?;
            if p.ks.is_empty() || p.ks.contains(&0) {
                bail!("params.ks must be nonempty and positive");
            }
            if !(p.a > 0.0) {
                bail!("params.a must be positive");
            }
        }
        Experiment::RotationSet(p) => {
            p.profile.build().context("params.profile")?;
            if p.samples == 0 || p.k == 0 {
                bail!("params.samples and params.k must be positive");
            }
        }
        Experiment::Counterexample(p) => {
            p.damped().build().context("params")?;
        }
        Experiment::Capacity(p) => {
            if p.a.is_nan() || p.a == f64::INFINITY {
                bail!("params.a must lie in [-inf, inf)");
            }
            let _ = p.case;
        }
        Experiment::ShTable(p) => {
            if p.classes.is_empty() || p.a_grid.is_empty() || p.c_grid.is_empty() {
                bail!("params.classes, params.a_grid and params.c_grid must be nonempty");
            }
        }
        Experiment::HoferCertify(p) => {
            p.field.build().context("params.field")?;
            if let Some(t) = &p.transfer {
                t.perturbation.build().context("params.transfer.perturbation")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_ball_counts() {
        assert_eq!(lattice_ball(1, 8.5).len(), 17);
        assert_eq!(lattice_ball(1, 17.0).len(), 35);
        assert_eq!(lattice_ball(2, 1.0).len(), 5);
        assert_eq!(lattice_ball(2, 2f64.sqrt()).len(), 9);
        assert!(lattice_ball(3, -1.0).is_empty());
    }

    #[test]
    fn status_codes() {
        assert_eq!(Status::Success.exit_code(), 0);
        assert_eq!(Status::NotFound.exit_code(), 2);
    }
}
