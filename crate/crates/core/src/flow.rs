//! Implicit-midpoint integration of lifted Hamiltonian flows, time-one maps,
//! sequential systems and action quadrature.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianField;
use crate::phase::{deck_transform, norm, HomotopyClass, LiftedPoint};

/// Default time step for experiments.
pub const DEFAULT_DT: f64 = 1e-3;
/// Closure tolerance for [`action_along`].
pub const CLOSURE_TOLERANCE: f64 = 1e-6;
/// Step of the central differences in [`linearized_monodromy`].
pub const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Implicit midpoint with fixed-point iteration.
    ImplicitMidpoint,
    /// Exact translation flow for momentum-only fields, implicit midpoint otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    pub dt: f64,
    pub scheme: Scheme,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, scheme: Scheme::ImplicitMidpoint, tolerance: 1e-12, max_iterations: 50 }
    }
}

impl IntegratorSettings {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn auto() -> Self {
        Self { scheme: Scheme::Auto, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidInput("fixed-point tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }
}

/// Step sizes covering `[t0, t1]`: uniform `dt`, last step shortened.
fn step_schedule(t0: f64, t1: f64, dt: f64) -> (usize, f64) {
    let span = (t1 - t0).abs();
    if span == 0.0 {
        return (0, 0.0);
    }
    let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    (steps, if t1 >= t0 { dt } else { -dt })
}

fn step_time(t0: f64, t1: f64, h: f64, steps: usize, i: usize) -> f64 {
    if i == steps {
        t1
    } else {
        t0 + i as f64 * h
    }
}

struct Stepper<'a> {
    field: &'a HamiltonianField,
    settings: &'a IntegratorSettings,
    closed_form: bool,
    n: usize,
    dq: Vec<f64>,
    dp: Vec<f64>,
    mid_q: Vec<f64>,
    mid_p: Vec<f64>,
    new_q: Vec<f64>,
    new_p: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(field: &'a HamiltonianField, settings: &'a IntegratorSettings) -> Self {
        let n = field.dim();
        let mut probe = vec![0.0; n];
        let closed_form = settings.scheme == Scheme::Auto
            && field.is_momentum_only()
            && field.model().momentum_velocity(&vec![0.0; n], &mut probe);
        Self {
            field,
            settings,
            closed_form,
            n,
            dq: vec![0.0; n],
            dp: vec![0.0; n],
            mid_q: vec![0.0; n],
            mid_p: vec![0.0; n],
            new_q: vec![0.0; n],
            new_p: vec![0.0; n],
        }
    }

    /// Advances `(q, p)` from `t` by `h`; the midpoint stage is left in `mid_q`, `mid_p`.
    fn step(&mut self, q: &mut [f64], p: &mut [f64], t: f64, h: f64, index: usize) -> Result<()> {
        let n = self.n;
        if self.closed_form {
            self.field.model().momentum_velocity(p, &mut self.dp);
            for i in 0..n {
                self.mid_q[i] = q[i] + 0.5 * h * self.dp[i];
                self.mid_p[i] = p[i];
                q[i] += h * self.dp[i];
            }
            return Ok(());
        }
        let tm = t + 0.5 * h;
        self.field.gradient(t, q, p, &mut self.dq, &mut self.dp);
        for i in 0..n {
            self.new_q[i] = q[i] + h * self.dp[i];
            self.new_p[i] = p[i] - h * self.dq[i];
        }
        let mut converged = false;
        for _ in 0..self.settings.max_iterations {
            for i in 0..n {
                self.mid_q[i] = 0.5 * (q[i] + self.new_q[i]);
                self.mid_p[i] = 0.5 * (p[i] + self.new_p[i]);
            }
            self.field.gradient(tm, &self.mid_q, &self.mid_p, &mut self.dq, &mut self.dp);
            let mut change: f64 = 0.0;
            let mut size: f64 = 1.0;
            for i in 0..n {
                let nq = q[i] + h * self.dp[i];
                let np = p[i] - h * self.dq[i];
                change = change.max((nq - self.new_q[i]).abs()).max((np - self.new_p[i]).abs());
                size = size.max(nq.abs());
                self.new_q[i] = nq;
                self.new_p[i] = np;
            }
            if !change.is_finite() {
                break;
            }
            if change <= self.settings.tolerance * size {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::FixedPointDivergence { step: index, time: t });
        }
        for i in 0..n {
            self.mid_q[i] = 0.5 * (q[i] + self.new_q[i]);
            self.mid_p[i] = 0.5 * (p[i] + self.new_p[i]);
        }
        q.copy_from_slice(&self.new_q);
        p.copy_from_slice(&self.new_p);
        let pn = norm(p);
        if pn >= 1.0 {
            return Err(Error::MomentumEscape { step: index, norm: pn });
        }
        Ok(())
    }
}

/// Integrates `(q, p)` in place from `t0` to `t1` (either direction).
pub fn flow_state(
    field: &HamiltonianField,
    q: &mut [f64],
    p: &mut [f64],
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<()> {
    if q.len() != field.dim() || p.len() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: q.len() });
    }
    let mut stepper = Stepper::new(field, settings);
    if stepper.closed_form {
        stepper.field.model().momentum_velocity(p, &mut stepper.dp);
        for (qi, v) in q.iter_mut().zip(&stepper.dp) {
            *qi += (t1 - t0) * v;
        }
        return Ok(());
    }
    let (steps, h) = step_schedule(t0, t1, settings.dt);
    for i in 0..steps {
        let t = step_time(t0, t1, h, steps, i);
        let next = step_time(t0, t1, h, steps, i + 1);
        stepper.step(q, p, t, next - t, i)?;
    }
    Ok(())
}

/// Samples of a lifted trajectory with the integrator's midpoint stages.
#[derive(Clone, Serialize, Deserialize)]
pub struct LiftedTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<LiftedPoint>,
    /// Midpoint stage of step `i`, between samples `i` and `i + 1`. Empty for discrete orbits.
    pub stages: Vec<LiftedPoint>,
    pub dt: f64,
    #[serde(skip)]
    pub field: Option<HamiltonianField>,
}

impl fmt::Debug for LiftedTrajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiftedTrajectory")
            .field("samples", &self.points.len())
            .field("t0", &self.times.first())
            .field("t1", &self.times.last())
            .field("dt", &self.dt)
            .finish()
    }
}

impl LiftedTrajectory {
    pub fn start(&self) -> &LiftedPoint {
        &self.points[0]
    }

    pub fn end(&self) -> &LiftedPoint {
        self.points.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with header `t,q1..qn,p1..pn` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.points.first().map_or(0, LiftedPoint::dim);
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",q{i}");
        }
        for i in 1..=n {
            let _ = write!(out, ",p{i}");
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.points) {
            let _ = write!(out, "{t:.16e}");
            for v in x.q.iter().chain(&x.p) {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Integrates from `t0` to `t1 ≥ t0`, recording every step.
pub fn integrate_lifted(
    field: &HamiltonianField,
    x0: &LiftedPoint,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<LiftedTrajectory> {
    settings.validate()?;
    if x0.dim() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: x0.dim() });
    }
    if !(t1 >= t0) {
        return Err(Error::InvalidInput(format!("need t1 >= t0, got [{t0}, {t1}]")));
    }
    let (steps, h) = step_schedule(t0, t1, settings.dt);
    let mut stepper = Stepper::new(field, settings);
    let (mut q, mut p) = (x0.q.clone(), x0.p.clone());
    let mut traj = LiftedTrajectory {
        times: Vec::with_capacity(steps + 1),
        points: Vec::with_capacity(steps + 1),
        stages: Vec::with_capacity(steps),
        dt: settings.dt,
        field: Some(field.clone()),
    };
    traj.times.push(t0);
    traj.points.push(x0.clone());
    for i in 0..steps {
        let t = step_time(t0, t1, h, steps, i);
        let next = step_time(t0, t1, h, steps, i + 1);
        stepper.step(&mut q, &mut p, t, next - t, i)?;
        traj.stages.push(LiftedPoint::from_parts(stepper.mid_q.clone(), stepper.mid_p.clone()));
        traj.times.push(next);
        traj.points.push(LiftedPoint::from_parts(q.clone(), p.clone()));
    }
    Ok(traj)
}

/// The lifted time-one map of a field.
#[derive(Debug, Clone)]
pub struct TimeOneMap {
    pub field: HamiltonianField,
    pub settings: IntegratorSettings,
}

impl TimeOneMap {
    pub fn new(field: HamiltonianField, settings: IntegratorSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self { field, settings })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn apply(&self, x: &LiftedPoint) -> Result<LiftedPoint> {
        let (mut q, mut p) = (x.q.clone(), x.p.clone());
        flow_state(&self.field, &mut q, &mut p, 0.0, 1.0, &self.settings)?;
        Ok(LiftedPoint::from_parts(q, p))
    }

    /// Applies the map to a state vector `(q, p)`.
    pub fn apply_state(&self, state: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let (mut q, mut p) = (state[..n].to_vec(), state[n..].to_vec());
        flow_state(&self.field, &mut q, &mut p, 0.0, 1.0, &self.settings)?;
        q.extend_from_slice(&p);
        Ok(q)
    }
}

pub fn apply_time_one(map: &TimeOneMap, x: &LiftedPoint) -> Result<LiftedPoint> {
    map.apply(x)
}

/// Action `∫ (H − p·q̇) dt` of a trajectory over `[0, 1]` closing up to `e`.
///
/// Uses the midpoint rule on the integrator stages when present, otherwise the
/// trapezoid rule on the samples; `q̇ = ∂H/∂p` in both cases.
pub fn action_along(field: &HamiltonianField, orbit: &LiftedTrajectory, e: &HomotopyClass) -> Result<f64> {
    if orbit.points.len() < 2 {
        return Err(Error::InvalidInput("orbit needs at least two samples".into()));
    }
    let (t0, t1) = (orbit.times[0], *orbit.times.last().unwrap());
    if t0.abs() > 1e-12 || (t1 - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("orbit spans [{t0}, {t1}], not [0, 1]")));
    }
    let target = deck_transform(orbit.start(), e)?;
    let gap = orbit.end().distance(&target);
    if !(gap <= CLOSURE_TOLERANCE) {
        return Err(Error::ClosureViolation { gap });
    }
    let n = field.dim();
    let (mut dq, mut dp) = (vec![0.0; n], vec![0.0; n]);
    let mut density = |t: f64, x: &LiftedPoint| {
        field.gradient(t, &x.q, &x.p, &mut dq, &mut dp);
        field.value(t, &x.q, &x.p) - x.p.iter().zip(&dp).map(|(a, b)| a * b).sum::<f64>()
    };
    let mut total = 0.0;
    if orbit.stages.len() + 1 == orbit.points.len() {
        for (i, stage) in orbit.stages.iter().enumerate() {
            let h = orbit.times[i + 1] - orbit.times[i];
            total += h * density(0.5 * (orbit.times[i] + orbit.times[i + 1]), stage);
        }
    } else {
        let mut prev = density(orbit.times[0], &orbit.points[0]);
        for i in 1..orbit.points.len() {
            let cur = density(orbit.times[i], &orbit.points[i]);
            total += 0.5 * (orbit.times[i] - orbit.times[i - 1]) * (prev + cur);
            prev = cur;
        }
    }
    Ok(total)
}

/// Central-difference Jacobian `DΨ₁` of the lifted time-one map at `x`.
pub fn linearized_monodromy(map: &TimeOneMap, x: &LiftedPoint) -> Result<DMatrix<f64>> {
    let state = x.to_state();
    let m = state.len();
    let mut jac = DMatrix::zeros(m, m);
    let mut probe = state.clone();
    for j in 0..m {
        probe[j] = state[j] + JACOBIAN_STEP;
        let up = map.apply_state(&probe)?;
        probe[j] = state[j] - JACOBIAN_STEP;
        let down = map.apply_state(&probe)?;
        probe[j] = state[j];
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * JACOBIAN_STEP);
        }
    }
    Ok(jac)
}

/// The standard symplectic matrix `[[0, I], [−I, 0]]`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        omega[(i, n + i)] = 1.0;
        omega[(n + i, i)] = -1.0;
    }
    omega
}

/// `‖JᵀΩJ − Ω‖_∞` (entrywise maximum).
pub fn symplectic_defect(jac: &DMatrix<f64>) -> f64 {
    let omega = symplectic_form(jac.nrows() / 2);
    (jac.transpose() * &omega * jac - omega).abs().max()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Constant,
    Perturbed,
    SkewProduct,
    Damped,
}

/// An index-addressable sequence of maps `f_1, f_2, …` on the universal cover.
pub trait SequentialMap: Send + Sync + fmt::Debug {
    fn kind(&self) -> SystemKind;
    fn dim(&self) -> usize;
    /// Applies `f_index` (indices start at 1).
    fn apply(&self, index: usize, x: &LiftedPoint) -> Result<LiftedPoint>;
}

#[derive(Debug, Clone)]
pub struct SequentialSystem(Arc<dyn SequentialMap>);

impl SequentialSystem {
    pub fn new<M: SequentialMap + 'static>(map: M) -> Self {
        Self(Arc::new(map))
    }

    /// The constant sequence `f_i = h` for the time-one map `h` of `field`.
    pub fn constant(field: HamiltonianField, settings: IntegratorSettings) -> Result<Self> {
        Ok(Self::new(ConstantSystem { map: TimeOneMap::new(field, settings)? }))
    }

    pub fn kind(&self) -> SystemKind {
        self.0.kind()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn apply(&self, index: usize, x: &LiftedPoint) -> Result<LiftedPoint> {
        self.0.apply(index, x)
    }

    /// `f^{(k)} = f_k ∘ … ∘ f_1` applied to `x`.
    pub fn compose(&self, k: usize, x: &LiftedPoint) -> Result<LiftedPoint> {
        let mut y = x.clone();
        for i in 1..=k {
            y = self.apply(i, &y)?;
        }
        Ok(y)
    }
}

#[derive(Debug, Clone)]
pub struct ConstantSystem {
    pub map: TimeOneMap,
}

impl SequentialMap for ConstantSystem {
    fn kind(&self) -> SystemKind {
        SystemKind::Constant
    }
    fn dim(&self) -> usize {
        self.map.dim()
    }
    fn apply(&self, _index: usize, x: &LiftedPoint) -> Result<LiftedPoint> {
        self.map.apply(x)
    }
}

/// The discrete orbit `x_j = f_j(x_{j−1})`, sampled at the integers `0..=k`.
pub fn evolve(system: &SequentialSystem, x0: &LiftedPoint, k: usize) -> Result<LiftedTrajectory> {
    if x0.dim() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: x0.dim() });
    }
    let mut points = Vec::with_capacity(k + 1);
    points.push(x0.clone());
    for j in 1..=k {
        let next = system.apply(j, &points[j - 1])?;
        points.push(next);
    }
    Ok(LiftedTrajectory { times: (0..=k).map(|j| j as f64).collect(), points, stages: Vec::new(), dt: 1.0, field: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{make_momentum_hamiltonian, trig_bump, ProfileFunction};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn parabola(height: f64) -> ProfileFunction {
        ProfileFunction::cut_parabola(height, 0.9, 0.98).unwrap()
    }

    fn cosine_field(n: usize) -> HamiltonianField {
        let mut wave = vec![0; n];
        wave[0] = 1;
        trig_bump(n, wave, 0.0, parabola(1.0), 1.0, 0, 0.0).unwrap()
    }

    /// Restarts a closed orbit at sample `k`, continuing through the deck copy of its start.
    fn cyclic_reindex(orbit: &LiftedTrajectory, k: usize, e: &HomotopyClass) -> LiftedTrajectory {
        let m = orbit.points.len() - 1;
        let mut points = orbit.points[k..].to_vec();
        let mut stages = orbit.stages[k..].to_vec();
        for i in 1..=k {
            points.push(deck_transform(&orbit.points[i], e).unwrap());
        }
        for st in &orbit.stages[..k] {
            stages.push(deck_transform(st, e).unwrap());
        }
        let times = (0..=m).map(|i| orbit.times[i]).collect();
        LiftedTrajectory { times, points, stages, dt: orbit.dt, field: None }
    }

    fn mixed_field() -> HamiltonianField {
        let a = make_momentum_hamiltonian(2, parabola(1.0)).unwrap();
        let b = trig_bump(2, vec![1, -1], 0.4, parabola(1.0), 0.3, 1, 0.1).unwrap();
        crate::hamiltonians::linear_combination(vec![(1.0, a), (1.0, b)]).unwrap()
    }

    #[test]
    fn zero_field_trajectory_is_constant() {
        let x0 = LiftedPoint::new(vec![0.3, -0.2], vec![0.1, 0.4]).unwrap();
        let traj = integrate_lifted(&HamiltonianField::zero(2), &x0, 0.0, 1.0, &IntegratorSettings::default()).unwrap();
        assert_eq!(traj.len(), 1001);
        assert!(traj.points.iter().all(|x| *x == x0));
    }

    #[test]
    fn momentum_flow_matches_translation() {
        let h = make_momentum_hamiltonian(1, parabola(2.0)).unwrap();
        for scheme in [Scheme::ImplicitMidpoint, Scheme::Auto] {
            let s = IntegratorSettings { scheme, ..Default::default() };
            let traj = integrate_lifted(&h, &LiftedPoint::new(vec![0.1], vec![0.25]).unwrap(), 0.0, 1.0, &s).unwrap();
            let end = traj.end();
            assert_abs_diff_eq!(end.q[0], 0.1 - 1.0, epsilon = 1e-12);
            assert_eq!(end.p[0], 0.25);
            assert_abs_diff_eq!(*traj.times.last().unwrap(), 1.0, epsilon = 0.0);
        }
    }

    #[test]
    fn last_step_is_shortened() {
        let h = cosine_field(1);
        let s = IntegratorSettings::with_dt(0.3);
        let traj = integrate_lifted(&h, &LiftedPoint::origin(1), 0.0, 1.0, &s).unwrap();
        assert_eq!(traj.times.len(), 5);
        assert_abs_diff_eq!(traj.times[3], 0.9, epsilon = 1e-15);
        assert_eq!(traj.times[4], 1.0);
    }

    #[test]
    fn second_order_convergence() {
        let h = cosine_field(1);
        let x0 = LiftedPoint::new(vec![0.1], vec![0.3]).unwrap();
        let end = |dt: f64| {
            integrate_lifted(&h, &x0, 0.0, 1.0, &IntegratorSettings::with_dt(dt)).unwrap().end().clone()
        };
        let reference = end(1e-5);
        let e1 = end(1e-2).distance(&reference);
        let e2 = end(5e-3).distance(&reference);
        let (c1, c2) = (e1 / 1e-4, e2 / 2.5e-5);
        assert!((c1 / c2 - 1.0).abs() < 0.1, "constants {c1} vs {c2}");
    }

    #[test]
    fn outside_support_is_fixed() {
        let map = TimeOneMap::new(cosine_field(2), IntegratorSettings::default()).unwrap();
        let x = LiftedPoint::new(vec![0.3, 0.1], vec![0.99, 0.0]).unwrap();
        assert_eq!(map.apply(&x).unwrap(), x);
    }

    #[test]
    fn action_examples() {
        let s = IntegratorSettings::default();
        let h = make_momentum_hamiltonian(1, parabola(2.0)).unwrap();
        let rest = integrate_lifted(&h, &LiftedPoint::origin(1), 0.0, 1.0, &s).unwrap();
        assert_abs_diff_eq!(action_along(&h, &rest, &HomotopyClass(vec![0])).unwrap(), 2.0, epsilon = 1e-12);
        let orbit = integrate_lifted(&h, &LiftedPoint::new(vec![0.0], vec![-0.25]).unwrap(), 0.0, 1.0, &s).unwrap();
        assert_abs_diff_eq!(action_along(&h, &orbit, &HomotopyClass(vec![1])).unwrap(), 2.125, epsilon = 1e-10);
        let far = integrate_lifted(&h, &LiftedPoint::new(vec![0.2], vec![0.99]).unwrap(), 0.0, 1.0, &s).unwrap();
        assert_eq!(action_along(&h, &far, &HomotopyClass(vec![0])).unwrap(), 0.0);
        assert!(matches!(action_along(&h, &orbit, &HomotopyClass(vec![0])), Err(Error::ClosureViolation { .. })));
    }

    #[test]
    fn monodromy_examples() {
        let s = IntegratorSettings::default();
        let zero = TimeOneMap::new(HamiltonianField::zero(2), s).unwrap();
        let j = linearized_monodromy(&zero, &LiftedPoint::origin(2)).unwrap();
        assert_eq!(j, DMatrix::identity(4, 4));
        let h = TimeOneMap::new(make_momentum_hamiltonian(1, parabola(2.0)).unwrap(), s).unwrap();
        let j = linearized_monodromy(&h, &LiftedPoint::new(vec![0.0], vec![0.3]).unwrap()).unwrap();
        assert_abs_diff_eq!(j[(0, 1)], -4.0, epsilon = 1e-6);
        assert_abs_diff_eq!(j[(0, 0)], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(j[(1, 0)], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(j[(1, 1)], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn energy_drift_is_second_order() {
        let h = cosine_field(1);
        let x0 = LiftedPoint::new(vec![0.1], vec![0.3]).unwrap();
        let e0 = h.value(0.0, &x0.q, &x0.p);
        let drift = |dt: f64| {
            let traj = integrate_lifted(&h, &x0, 0.0, 1.0, &IntegratorSettings::with_dt(dt)).unwrap();
            traj.points.iter().map(|x| (h.value(0.0, &x.q, &x.p) - e0).abs()).fold(0.0, f64::max)
        };
        let (d1, d2) = (drift(2e-2), drift(1e-2));
        assert!(d1 > 0.0 && d2 > 0.0);
        let ratio = d1 / d2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn csv_export_layout() {
        let traj = integrate_lifted(
            &HamiltonianField::zero(2),
            &LiftedPoint::origin(2),
            0.0,
            0.002,
            &IntegratorSettings::default(),
        )
        .unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,q1,q2,p1,p2"));
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn constant_system_evolution() {
        let h = make_momentum_hamiltonian(1, parabola(1.0)).unwrap();
        let sys = SequentialSystem::constant(h, IntegratorSettings::auto()).unwrap();
        let x0 = LiftedPoint::new(vec![0.0], vec![-0.3]).unwrap();
        let orbit = evolve(&sys, &x0, 10).unwrap();
        assert_eq!(orbit.times, (0..=10).map(f64::from).collect::<Vec<_>>());
        assert_abs_diff_eq!(orbit.end().q[0], 10.0 * 2.0 * 0.3, epsilon = 1e-12);
        let still = SequentialSystem::constant(HamiltonianField::zero(1), IntegratorSettings::default()).unwrap();
        assert!(evolve(&still, &x0, 5).unwrap().points.iter().all(|x| *x == x0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn time_one_map_is_symplectic(q1 in -1.0f64..1.0, q2 in -1.0f64..1.0, r in 0.0f64..0.95, a in 0.0f64..6.28) {
            let map = TimeOneMap::new(mixed_field(), IntegratorSettings::default()).unwrap();
            let x = LiftedPoint::new(vec![q1, q2], vec![r * a.cos(), r * a.sin()]).unwrap();
            let j = linearized_monodromy(&map, &x).unwrap();
            prop_assert!(symplectic_defect(&j) <= 1e-6);
        }

        #[test]
        fn time_one_map_commutes_with_deck(q in -1.0f64..1.0, r in 0.0f64..0.95, a in 0.0f64..6.28, e1 in -2i64..=2, e2 in -2i64..=2) {
            let map = TimeOneMap::new(mixed_field(), IntegratorSettings::default()).unwrap();
            let x = LiftedPoint::new(vec![q, 0.3], vec![r * a.cos(), r * a.sin()]).unwrap();
            let e = HomotopyClass(vec![e1, e2]);
            let lhs = map.apply(&deck_transform(&x, &e).unwrap()).unwrap();
            let rhs = deck_transform(&map.apply(&x).unwrap(), &e).unwrap();
            prop_assert!(lhs.distance(&rhs) <= 1e-10);
        }

        #[test]
        fn forward_then_backward_returns(q in -1.0f64..1.0, r in 0.0f64..0.95, a in 0.0f64..6.28) {
            let h = mixed_field();
            let s = IntegratorSettings::default();
            let (mut qq, mut pp) = (vec![q, -0.2], vec![r * a.cos(), r * a.sin()]);
            let start = (qq.clone(), pp.clone());
            flow_state(&h, &mut qq, &mut pp, 0.0, 1.0, &s).unwrap();
            flow_state(&h, &mut qq, &mut pp, 1.0, 0.0, &s).unwrap();
            let err = qq.iter().zip(&start.0).chain(pp.iter().zip(&start.1)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-9, "error {}", err);
        }

        #[test]
        fn action_is_invariant_under_cyclic_reindexing(shift in 1usize..1000) {
            let h = make_momentum_hamiltonian(1, parabola(2.0)).unwrap();
            let e = HomotopyClass(vec![1]);
            let s = IntegratorSettings::default();
            let orbit = integrate_lifted(&h, &LiftedPoint::new(vec![0.2], vec![-0.25]).unwrap(), 0.0, 1.0, &s).unwrap();
            let base = action_along(&h, &orbit, &e).unwrap();
            let shifted = cyclic_reindex(&orbit, shift, &e);
            prop_assert!((action_along(&h, &shifted, &e).unwrap() - base).abs() <= 1e-9);
        }
    }
}
