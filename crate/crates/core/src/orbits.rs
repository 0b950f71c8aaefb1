//! Periodic orbits in a prescribed homotopy class.
//!
//! Orbits are found by damped Newton shooting on `g(x) = f̃₁(x) − x − (e, 0)`.
//! Periodic orbits of profile Hamiltonians come in `n`-dimensional families,
//! so the shooting Jacobian is singular along the family; the Newton step is a
//! truncated pseudo-inverse and converges onto the family.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{action_along, integrate_lifted, linearized_monodromy, IntegratorSettings, TimeOneMap};
use crate::hamiltonians::{crossings, HamiltonianField, ProfileFunction};
use crate::phase::{deck_transform, norm, sample_fundamental_domain, HomotopyClass, LiftedPoint};

/// Singular values of `DΨ₁ − I` below this count towards the kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-4;
/// Slack on the action certificate of the existence check.
pub const CERTIFICATE_SLACK: f64 = 1e-4;
/// Points on the radial seed grid for momentum-only fields.
pub const RADIAL_SEEDS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonSettings {
    pub integrator: IntegratorSettings,
    pub max_iterations: usize,
    /// Residual at which an orbit is accepted.
    pub accept: f64,
    /// Residual at which polishing stops early.
    pub polish: f64,
    /// Relative cutoff `σ/σ_max` of the pseudo-inverse.
    pub truncation: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { integrator: IntegratorSettings::default(), max_iterations: 50, accept: 1e-8, polish: 1e-12, truncation: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub class: HomotopyClass,
    pub x0: LiftedPoint,
    pub trajectory: crate::flow::LiftedTrajectory,
    pub action: f64,
    pub residual: f64,
    pub kernel_dim: usize,
    pub iterations: usize,
}

/// JSON-facing summary of a [`PeriodicOrbit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub class: Vec<i64>,
    pub x0: LiftedPoint,
    pub action: f64,
    pub residual: f64,
    pub kernel_dim: usize,
    pub integrator: IntegratorSettings,
    pub trajectory_csv: Option<String>,
}

impl PeriodicOrbit {
    pub fn report(&self, integrator: IntegratorSettings, trajectory_csv: Option<String>) -> OrbitReport {
        OrbitReport {
            class: self.class.0.clone(),
            x0: self.x0.clone(),
            action: self.action,
            residual: self.residual,
            kernel_dim: self.kernel_dim,
            integrator,
            trajectory_csv,
        }
    }
}

fn residual_vector(map: &TimeOneMap, state: &[f64], e: &[f64]) -> Result<DVector<f64>> {
    let n = e.len();
    let image = map.apply_state(state)?;
    Ok(DVector::from_fn(2 * n, |i, _| {
        let shift = if i < n { e[i] } else { 0.0 };
        image[i] - state[i] - shift
    }))
}

fn shooting_jacobian(map: &TimeOneMap, state: &[f64]) -> Result<DMatrix<f64>> {
    let mut j = linearized_monodromy(map, &LiftedPoint::from_state(state))?;
    for i in 0..state.len() {
        j[(i, i)] -= 1.0;
    }
    Ok(j)
}

fn kernel_dimension(jac: &DMatrix<f64>) -> usize {
    jac.clone().svd(false, false).singular_values.iter().filter(|&&s| s < KERNEL_THRESHOLD).count()
}

/// Newton step `−J⁺ g` with singular values below `truncation · σ_max` dropped.
pub(crate) fn pseudo_inverse_step(jac: &DMatrix<f64>, g: &DVector<f64>, truncation: f64) -> Result<DVector<f64>> {
    let svd = jac.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Err(Error::SingularJacobian { condition: f64::INFINITY });
    }
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let mut step = DVector::zeros(g.len());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > truncation * smax {
            let coeff = u.column(k).dot(g) / s;
            step -= vt.row(k).transpose() * coeff;
        }
    }
    Ok(step)
}

pub(crate) fn in_bundle(state: &[f64]) -> bool {
    let n = state.len() / 2;
    state.iter().all(|v| v.is_finite()) && norm(&state[n..]) < 1.0
}

/// Damped Newton shooting for an orbit of `field` in class `e` starting near `guess`.
pub fn find_orbit(
    field: &HamiltonianField,
    e: &HomotopyClass,
    guess: &LiftedPoint,
    settings: &NewtonSettings,
) -> Result<PeriodicOrbit> {
    let n = field.dim();
    if e.dim() != n || guess.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: e.dim().min(guess.dim()) });
    }
    if guess.momentum_norm() >= 1.0 {
        return Err(Error::InvalidInput("guess lies outside the open bundle".into()));
    }
    let map = TimeOneMap::new(field.clone(), settings.integrator)?;
    let shift = e.as_f64();
    let mut state = guess.to_state();
    let mut g = residual_vector(&map, &state, &shift)?;
    let mut res = g.norm();
    let mut iterations = 0;
    while res > settings.polish && iterations < settings.max_iterations {
        iterations += 1;
        let jac = shooting_jacobian(&map, &state)?;
        let step = pseudo_inverse_step(&jac, &g, settings.truncation)?;
        let mut improved = None;
        let mut lambda = 1.0;
        for _ in 0..30 {
            let trial: Vec<f64> = state.iter().zip(step.iter()).map(|(s, d)| s + lambda * d).collect();
            if in_bundle(&trial) {
                if let Ok(tg) = residual_vector(&map, &trial, &shift) {
                    let tr = tg.norm();
                    if tr < res {
                        improved = Some((trial, tg, tr));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match improved {
            Some((s, tg, tr)) => {
                state = s;
                g = tg;
                res = tr;
            }
            None => break,
        }
    }
    if res > settings.accept {
        return Err(Error::NonConvergence { iterations, residual: res });
    }
    let x0 = LiftedPoint::from_state(&state);
    let trajectory = integrate_lifted(field, &x0, 0.0, 1.0, &settings.integrator)?;
    let action = action_along(field, &trajectory, e)?;
    let kernel_dim = kernel_dimension(&shooting_jacobian(&map, &state)?);
    Ok(PeriodicOrbit { class: e.clone(), x0, trajectory, action, residual: res, kernel_dim, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// An `n`-torus of orbits `{(q, p) : q ∈ Tⁿ}` at fixed `p`.
    TorusFamily,
}

/// A family of orbits of `H = f(|p|)` at radius `r` with `f'(r) = sign · ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOrbitDatum {
    pub radius: f64,
    /// `−1` when `f'(r) = −ℓ`, `+1` when `f'(r) = +ℓ`.
    pub sign: i8,
    pub action: f64,
    pub curvature: f64,
    pub nondegenerate: bool,
    pub family: FamilyKind,
}

impl ProfileOrbitDatum {
    /// Initial momentum of the orbit in class `e`: `sign · r e/|e|`.
    pub fn momentum_for(&self, e: &HomotopyClass) -> Vec<f64> {
        let len = e.norm();
        e.as_f64().iter().map(|v| self.sign as f64 * self.radius * v / len).collect()
    }
}

/// All radii with `f'(r) = ±ℓ`, with actions `f(r) − r f'(r)`.
pub fn enumerate_profile_orbits(f: &ProfileFunction, ell: f64) -> Result<Vec<ProfileOrbitDatum>> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::InvalidInput(format!("ell must be positive, got {ell}")));
    }
    let mut data = Vec::new();
    for (sign, target) in [(-1i8, -ell), (1, ell)] {
        for r in crossings(f, target) {
            let jet = f.jet(r);
            data.push(ProfileOrbitDatum {
                radius: r,
                sign,
                action: jet.value - r * jet.slope,
                curvature: jet.curvature,
                nondegenerate: jet.curvature != 0.0,
                family: FamilyKind::TorusFamily,
            });
        }
    }
    data.sort_by(|a, b| a.radius.total_cmp(&b.radius).then(a.sign.cmp(&b.sign)));
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorseBottReport {
    pub kernel_dim: usize,
    pub is_morse_bott: bool,
}

/// Compares `dim ker(DΨ₁ − I)` at the orbit start with `expected_dim`.
pub fn morse_bott_rank(
    field: &HamiltonianField,
    orbit: &PeriodicOrbit,
    expected_dim: usize,
    integrator: &IntegratorSettings,
) -> Result<MorseBottReport> {
    let map = TimeOneMap::new(field.clone(), *integrator)?;
    let kernel_dim = kernel_dimension(&shooting_jacobian(&map, &orbit.x0.to_state())?);
    Ok(MorseBottReport { kernel_dim, is_morse_bott: kernel_dim == expected_dim })
}

/// Seeds for shooting: the radial grid `p = ±r e/|e|` (and `p = 0`) for
/// momentum-only fields, the fundamental-domain grid otherwise.
pub fn default_seeds(field: &HamiltonianField, e: &HomotopyClass, resolution: usize) -> Result<Vec<LiftedPoint>> {
    let n = field.dim();
    if field.is_momentum_only() {
        let rho = field.support_radius().min(0.999);
        let dir: Vec<f64> = if e.is_zero() {
            let mut d = vec![0.0; n];
            d[0] = 1.0;
            d
        } else {
            e.as_f64().iter().map(|v| v / e.norm()).collect()
        };
        let mut seeds = vec![LiftedPoint::origin(n)];
        for j in 1..RADIAL_SEEDS {
            let r = rho * j as f64 / RADIAL_SEEDS as f64;
            for s in [-1.0, 1.0] {
                seeds.push(LiftedPoint::from_parts(vec![0.0; n], dir.iter().map(|d| s * r * d).collect()));
            }
        }
        Ok(seeds)
    } else {
        sample_fundamental_domain(n, resolution, 0.98)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub class: HomotopyClass,
    /// Distinct actions, ascending.
    pub actions: Vec<f64>,
    /// One representative per deduplicated orbit, ordered by action.
    pub orbits: Vec<PeriodicOrbit>,
    pub failures: usize,
}

/// Runs [`find_orbit`] from every seed and merges the results. Best effort:
/// orbits not reached from any seed are missing.
pub fn action_spectrum(
    field: &HamiltonianField,
    e: &HomotopyClass,
    seeds: &[LiftedPoint],
    settings: &NewtonSettings,
) -> SpectrumReport {
    let results: Vec<Option<PeriodicOrbit>> =
        seeds.par_iter().map(|s| find_orbit(field, e, s, settings).ok()).collect();
    let failures = results.iter().filter(|r| r.is_none()).count();
    let mut found: Vec<PeriodicOrbit> = results.into_iter().flatten().collect();
    let key = |o: &PeriodicOrbit| ((o.x0.momentum_norm() * 1e5).round() as i64, (o.action * 1e6).round() as i64);
    found.sort_by(|a, b| key(a).cmp(&key(b)).then(a.residual.total_cmp(&b.residual)));
    found.dedup_by(|a, b| key(a) == key(b));
    found.sort_by(|a, b| a.action.total_cmp(&b.action).then(key(a).cmp(&key(b))));
    let mut actions: Vec<f64> = Vec::new();
    for o in &found {
        if actions.last().map_or(true, |&a| (o.action - a).abs() > 1e-6) {
            actions.push(o.action);
        }
    }
    SpectrumReport { class: e.clone(), actions, orbits: found, failures }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremBReport {
    pub class: HomotopyClass,
    /// `c = inf_{[0,1] × Z} H`.
    pub level: f64,
    /// Whether `|e| ≤ c`.
    pub hypothesis_met: bool,
    /// Whether an orbit in class `e` with action `≥ c − slack` was found.
    pub found: bool,
    pub best: Option<PeriodicOrbit>,
    pub converged: usize,
    pub failures: usize,
}

/// Searches the seeds for an orbit in class `e` with action at least `c`.
pub fn verify_theorem_b(
    field: &HamiltonianField,
    e: &HomotopyClass,
    seeds: &[LiftedPoint],
    settings: &NewtonSettings,
) -> TheoremBReport {
    let level = field.zero_section_infimum();
    let spectrum = action_spectrum(field, e, seeds, settings);
    let best = spectrum.orbits.iter().max_by(|a, b| a.action.total_cmp(&b.action)).cloned();
    let found = best.as_ref().is_some_and(|o| o.action >= level - CERTIFICATE_SLACK);
    TheoremBReport {
        class: e.clone(),
        level,
        hypothesis_met: e.norm() <= level,
        found,
        best,
        converged: spectrum.orbits.len(),
        failures: spectrum.failures,
    }
}

/// Checks that re-integrating from `x0` closes up to `e` within `tol`.
pub fn reintegration_gap(field: &HamiltonianField, orbit: &PeriodicOrbit, integrator: &IntegratorSettings) -> Result<f64> {
    let traj = integrate_lifted(field, &orbit.x0, 0.0, 1.0, integrator)?;
    Ok(traj.end().distance(&deck_transform(&orbit.x0, &orbit.class)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{
        build_profile_family, make_momentum_hamiltonian, sharpness_profile, trig_bump, FamilyTag, SplineBuilder,
    };
    use approx::assert_abs_diff_eq;

    fn parabola() -> ProfileFunction {
        ProfileFunction::cut_parabola(2.0, 0.9, 0.98).unwrap()
    }

    #[test]
    fn constant_orbit_off_support() {
        let h = make_momentum_hamiltonian(1, parabola()).unwrap();
        let x = LiftedPoint::new(vec![0.3], vec![0.99]).unwrap();
        let o = find_orbit(&h, &HomotopyClass(vec![0]), &x, &NewtonSettings::default()).unwrap();
        assert_eq!(o.residual, 0.0);
        assert_eq!(o.action, 0.0);
        assert_eq!(o.x0, x);
    }

    #[test]
    fn finds_the_parabola_orbit() {
        let h = make_momentum_hamiltonian(1, parabola()).unwrap();
        let guess = LiftedPoint::new(vec![0.1], vec![-0.3]).unwrap();
        let o = find_orbit(&h, &HomotopyClass(vec![1]), &guess, &NewtonSettings::default()).unwrap();
        assert_abs_diff_eq!(o.x0.p[0], -0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(o.action, 2.125, epsilon = 1e-6);
        assert!(o.residual <= 1e-8);
        assert!(reintegration_gap(&h, &o, &IntegratorSettings::default()).unwrap() <= 1e-8);
        let again = action_along(&h, &o.trajectory, &o.class).unwrap();
        assert!((again - o.action).abs() <= 1e-8);
        assert_eq!(o.kernel_dim, 1);
    }

    #[test]
    fn zero_field_has_no_noncontractible_orbits() {
        let h = HamiltonianField::zero(2);
        let e = HomotopyClass(vec![1, 0]);
        let err = find_orbit(&h, &e, &LiftedPoint::origin(2), &NewtonSettings::default()).unwrap_err();
        assert!(matches!(err, Error::SingularJacobian { .. }));
        let seeds = default_seeds(&h, &e, 3).unwrap();
        assert!(action_spectrum(&h, &e, &seeds, &NewtonSettings::default()).actions.is_empty());
    }

    #[test]
    fn enumeration_examples() {
        assert!(enumerate_profile_orbits(&ProfileFunction::zero(), 1.0).unwrap().is_empty());
        let data = enumerate_profile_orbits(&parabola(), 1.0).unwrap();
        let main = &data[0];
        assert_abs_diff_eq!(main.radius, 0.25, epsilon = 1e-12);
        assert_eq!(main.sign, -1);
        assert_abs_diff_eq!(main.action, 2.125, epsilon = 1e-12);
        assert_abs_diff_eq!(main.curvature, -4.0, epsilon = 1e-9);
        // A compactly supported profile returns to f' = 0, so the cut adds a second crossing.
        assert_abs_diff_eq!(main.momentum_for(&HomotopyClass(vec![1]))[0], -0.25, epsilon = 1e-12);
        assert_eq!(data.len(), 2);
        assert!(data[1].radius > 0.9 && data[1].curvature > 0.0 && data[1].sign == -1);
        assert!(enumerate_profile_orbits(&parabola(), 0.0).is_err());
    }

    #[test]
    fn class_family_data_and_spectrum() {
        let m = build_profile_family(FamilyTag::ClassFamily, 2.0, 1.0, 1.0).unwrap();
        let data = enumerate_profile_orbits(&m.profile, 1.0).unwrap();
        assert_eq!(data.len(), 2);
        assert!(data[0].curvature < 0.0 && data[1].curvature > 0.0);
        let f0 = m.profile.value(0.0);
        assert!(data[0].action > f0);
        let h = make_momentum_hamiltonian(1, m.profile.clone()).unwrap();
        let e = HomotopyClass(vec![1]);
        let seeds = default_seeds(&h, &e, 0).unwrap();
        let spec = action_spectrum(&h, &e, &seeds, &NewtonSettings::default());
        assert_eq!(spec.actions.len(), 2, "{:?}", spec.actions);
        let mut expected: Vec<f64> = data.iter().map(|d| d.action).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in spec.actions.iter().zip(&expected) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
        }
    }

    #[test]
    fn morse_bott_at_the_zero_section() {
        let s = IntegratorSettings::default();
        let h = make_momentum_hamiltonian(2, parabola()).unwrap();
        let o = find_orbit(&h, &HomotopyClass(vec![0, 0]), &LiftedPoint::origin(2), &NewtonSettings::default()).unwrap();
        assert_eq!(morse_bott_rank(&h, &o, 2, &s).unwrap(), MorseBottReport { kernel_dim: 2, is_morse_bott: true });
        let mut b = SplineBuilder::new(1.0, 0.0);
        b.lobes(0.2, 0.8, -1.0);
        let flat = make_momentum_hamiltonian(2, b.finish().unwrap()).unwrap();
        let o = find_orbit(&flat, &HomotopyClass(vec![0, 0]), &LiftedPoint::origin(2), &NewtonSettings::default()).unwrap();
        assert_eq!(morse_bott_rank(&flat, &o, 2, &s).unwrap(), MorseBottReport { kernel_dim: 4, is_morse_bott: false });
    }

    #[test]
    fn torus_family_has_kernel_n() {
        let h = make_momentum_hamiltonian(2, parabola()).unwrap();
        let e = HomotopyClass(vec![1, 0]);
        let guess = LiftedPoint::new(vec![0.0, 0.0], vec![-0.3, 0.01]).unwrap();
        let o = find_orbit(&h, &e, &guess, &NewtonSettings::default()).unwrap();
        assert_abs_diff_eq!(o.x0.momentum_norm(), 0.25, epsilon = 1e-9);
        assert_eq!(o.kernel_dim, 2);
    }

    #[test]
    fn theorem_b_examples() {
        let ns = NewtonSettings::default();
        let h = make_momentum_hamiltonian(1, parabola()).unwrap();
        for e in [0, 1] {
            let e = HomotopyClass(vec![e]);
            let report = verify_theorem_b(&h, &e, &default_seeds(&h, &e, 0).unwrap(), &ns);
            assert!(report.hypothesis_met && report.found);
        }
        let sharp = make_momentum_hamiltonian(1, sharpness_profile(1.0, 0.1).unwrap()).unwrap();
        let e = HomotopyClass(vec![1]);
        let report = verify_theorem_b(&sharp, &e, &default_seeds(&sharp, &e, 0).unwrap(), &ns);
        assert!(!report.hypothesis_met);
        assert!(!report.found && report.converged == 0);
    }

    #[test]
    fn perturbed_orbit_is_found() {
        let h = make_momentum_hamiltonian(2, parabola()).unwrap();
        let bump = trig_bump(2, vec![0, 1], 0.2, parabola(), 0.01, 0, 0.0).unwrap();
        let field = crate::hamiltonians::linear_combination(vec![(1.0, h), (1.0, bump)]).unwrap();
        let e = HomotopyClass(vec![1, 0]);
        let guess = LiftedPoint::new(vec![0.0, 0.0], vec![-0.25, 0.0]).unwrap();
        let o = find_orbit(&field, &e, &guess, &NewtonSettings::default()).unwrap();
        assert!(o.residual <= 1e-8);
        assert!(reintegration_gap(&field, &o, &IntegratorSettings::default()).unwrap() <= 1e-8);
    }
}
