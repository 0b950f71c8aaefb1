//! Compactly supported time-dependent Hamiltonians on the unit codisc bundle.
//!
//! A [`HamiltonianField`] is an immutable, cheaply clonable handle to a
//! [`FieldModel`]. Fields built from numerically integrated flows are marked
//! derived; their partials are finite differences of the evaluator.

mod constructions;
mod families;
mod profile;

use std::fmt;
use std::sync::{Arc, OnceLock};

pub use constructions::{
    compose_product, iterate_hamiltonian, linear_combination, make_periodic, trig_bump, SmoothRamp, TrigBump,
};
pub use families::{
    build_profile_family, crossings, family_head_value, sharpness_profile, FamilyTag, ProfileFamilyMember,
    CHECK_POINTS,
};
pub use profile::{Jet, Knot, ProfileFunction, SplineBuilder, TABLE_HEADER};

use crate::error::{Error, Result};
use crate::phase::norm;

/// Finite-difference step used for the partials of derived fields.
pub const DERIVED_FD_STEP: f64 = 1e-5;

/// A concrete Hamiltonian `H(t, q, p)`, periodic in `q` with period 1.
pub trait FieldModel: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, t: f64, q: &[f64], p: &[f64]) -> f64;
    /// Writes `∂H/∂q` into `dq` and `∂H/∂p` into `dp`.
    fn gradient(&self, t: f64, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]);
    /// `H` vanishes whenever `|p| ≥ support_radius`.
    fn support_radius(&self) -> f64;
    fn is_autonomous(&self) -> bool;
    fn is_time_periodic(&self) -> bool;
    fn is_derived(&self) -> bool {
        false
    }
    /// `Some((f, scale))` when `H = scale · f(|p|)`.
    fn radial_profile(&self) -> Option<(&ProfileFunction, f64)> {
        None
    }
    /// `H` depends on `p` only and not on `t`.
    fn is_momentum_only(&self) -> bool {
        self.radial_profile().is_some()
    }
    /// `∇_p H` for a momentum-only field.
    fn momentum_velocity(&self, _p: &[f64], _out: &mut [f64]) -> bool {
        false
    }
    /// Closed form of `inf_{[0,1] × Z} H`, when known.
    fn exact_zero_section_infimum(&self) -> Option<f64> {
        None
    }
}

/// Central finite differences of `model.value` in every phase-space direction.
pub fn fd_gradient<M: FieldModel + ?Sized>(
    model: &M,
    t: f64,
    q: &[f64],
    p: &[f64],
    step: f64,
    dq: &mut [f64],
    dp: &mut [f64],
) {
    let mut qq = q.to_vec();
    let mut pp = p.to_vec();
    for i in 0..q.len() {
        qq[i] = q[i] + step;
        let up = model.value(t, &qq, p);
        qq[i] = q[i] - step;
        let down = model.value(t, &qq, p);
        qq[i] = q[i];
        dq[i] = (up - down) / (2.0 * step);
    }
    for i in 0..p.len() {
        pp[i] = p[i] + step;
        let up = model.value(t, q, &pp);
        pp[i] = p[i] - step;
        let down = model.value(t, q, &pp);
        pp[i] = p[i];
        dp[i] = (up - down) / (2.0 * step);
    }
}

#[derive(Clone)]
pub struct HamiltonianField {
    model: Arc<dyn FieldModel>,
    zero_section_inf: Arc<OnceLock<f64>>,
}

impl fmt::Debug for HamiltonianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("HamiltonianField").field(&self.model).finish()
    }
}

impl HamiltonianField {
    pub fn from_model<M: FieldModel + 'static>(model: M) -> Self {
        Self { model: Arc::new(model), zero_section_inf: Arc::new(OnceLock::new()) }
    }

    /// The field `H ≡ 0` in dimension `n`.
    pub fn zero(n: usize) -> Self {
        Self::from_model(ZeroField { n })
    }

    pub fn model(&self) -> &dyn FieldModel {
        self.model.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn value(&self, t: f64, q: &[f64], p: &[f64]) -> f64 {
        self.model.value(t, q, p)
    }

    pub fn gradient(&self, t: f64, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        self.model.gradient(t, q, p, dq, dp)
    }

    /// `(∂H/∂q, ∂H/∂p)` as owned vectors.
    pub fn partials(&self, t: f64, q: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let (mut dq, mut dp) = (vec![0.0; n], vec![0.0; n]);
        self.gradient(t, q, p, &mut dq, &mut dp);
        (dq, dp)
    }

    pub fn support_radius(&self) -> f64 {
        self.model.support_radius()
    }

    pub fn is_autonomous(&self) -> bool {
        self.model.is_autonomous()
    }

    pub fn is_time_periodic(&self) -> bool {
        self.model.is_time_periodic()
    }

    pub fn is_derived(&self) -> bool {
        self.model.is_derived()
    }

    pub fn is_momentum_only(&self) -> bool {
        self.model.is_momentum_only()
    }

    pub fn radial_profile(&self) -> Option<(&ProfileFunction, f64)> {
        self.model.radial_profile()
    }

    /// `inf_{[0,1] × Z} H`: the closed form when available, otherwise the
    /// minimum over a fixed time × position grid on `p = 0`. Cached.
    pub fn zero_section_infimum(&self) -> f64 {
        *self.zero_section_inf.get_or_init(|| {
            self.model.exact_zero_section_infimum().unwrap_or_else(|| sampled_zero_section_infimum(self))
        })
    }
}

fn sampled_zero_section_infimum(h: &HamiltonianField) -> f64 {
    use rayon::prelude::*;
    let n = h.dim();
    let resolution: usize = match n {
        1 => 65,
        2 => 25,
        _ => 9,
    };
    let times: Vec<f64> = if h.is_autonomous() { vec![0.0] } else { (0..=32).map(|j| j as f64 / 32.0).collect() };
    let total = resolution.pow(n as u32);
    let p = vec![0.0; n];
    (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut q = vec![0.0; n];
            let mut rest = idx;
            for qi in q.iter_mut() {
                *qi = -0.5 + (rest % resolution) as f64 / (resolution - 1) as f64;
                rest /= resolution;
            }
            times.iter().map(|&t| h.value(t, &q, &p)).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

#[derive(Debug, Clone)]
struct ZeroField {
    n: usize,
}

impl FieldModel for ZeroField {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, _t: f64, _q: &[f64], _p: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _t: f64, _q: &[f64], _p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        dq.fill(0.0);
        dp.fill(0.0);
    }
    fn support_radius(&self) -> f64 {
        0.0
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn is_time_periodic(&self) -> bool {
        true
    }
    fn radial_profile(&self) -> Option<(&ProfileFunction, f64)> {
        None
    }
    fn is_momentum_only(&self) -> bool {
        true
    }
    fn momentum_velocity(&self, _p: &[f64], out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }
    fn exact_zero_section_infimum(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `H(q, p) = scale · f(|p|)`.
#[derive(Debug, Clone)]
pub struct MomentumField {
    n: usize,
    profile: ProfileFunction,
    scale: f64,
}

impl MomentumField {
    pub fn profile(&self) -> &ProfileFunction {
        &self.profile
    }
}

impl FieldModel for MomentumField {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, _t: f64, _q: &[f64], p: &[f64]) -> f64 {
        self.scale * self.profile.value(norm(p))
    }
    fn gradient(&self, _t: f64, _q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        dq.fill(0.0);
        self.momentum_velocity(p, dp);
    }
    fn support_radius(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.profile.support_end()
        }
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn is_time_periodic(&self) -> bool {
        true
    }
    fn radial_profile(&self) -> Option<(&ProfileFunction, f64)> {
        Some((&self.profile, self.scale))
    }
    fn momentum_velocity(&self, p: &[f64], out: &mut [f64]) -> bool {
        let r = norm(p);
        if r == 0.0 {
            out.fill(0.0);
        } else {
            let k = self.scale * self.profile.derivative(r) / r;
            for (o, pi) in out.iter_mut().zip(p) {
                *o = k * pi;
            }
        }
        true
    }
    fn exact_zero_section_infimum(&self) -> Option<f64> {
        Some(self.scale * self.profile.value(0.0))
    }
}

/// `H(q, p) = f(|p|)` in dimension `n`.
pub fn make_momentum_hamiltonian(n: usize, f: ProfileFunction) -> Result<HamiltonianField> {
    scaled_momentum_hamiltonian(n, f, 1.0)
}

/// `H(q, p) = scale · f(|p|)` in dimension `n`.
pub fn scaled_momentum_hamiltonian(n: usize, f: ProfileFunction, scale: f64) -> Result<HamiltonianField> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if !scale.is_finite() {
        return Err(Error::InvalidInput(format!("scale must be finite, got {scale}")));
    }
    Ok(HamiltonianField::from_model(MomentumField { n, profile: f, scale }))
}

/// Spot checks of the field invariants on a seeded random sample. Returns the
/// worst relative disagreement between analytic and finite-difference partials
/// (0 for derived fields, whose partials are finite differences by definition).
pub fn audit_field(h: &HamiltonianField, samples: usize, seed: u64) -> Result<f64> {
    use rand::Rng;
    let n = h.dim();
    let mut rng = crate::rng::stream_rng(seed, 0);
    let rho = h.support_radius();
    let mut worst: f64 = 0.0;
    let (mut dq, mut dp) = (vec![0.0; n], vec![0.0; n]);
    let (mut fq, mut fp) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..samples {
        let t: f64 = rng.gen();
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = random_momentum(&mut rng, n, 0.999);
        let v = h.value(t, &q, &p);
        if norm(&p) >= rho && v != 0.0 {
            return Err(Error::Audit(format!("H = {v} outside the support at |p| = {}", norm(&p))));
        }
        if h.is_time_periodic() {
            let (a, b) = (h.value(0.0, &q, &p), h.value(1.0, &q, &p));
            if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                return Err(Error::Audit(format!("H(0) = {a} but H(1) = {b}")));
            }
        }
        if !h.is_derived() {
            h.gradient(t, &q, &p, &mut dq, &mut dp);
            fd_gradient(h.model(), t, &q, &p, DERIVED_FD_STEP, &mut fq, &mut fp);
            for (a, b) in dq.iter().chain(&dp).zip(fq.iter().chain(&fp)) {
                let scale = 1.0 + v.abs().max(a.abs());
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// A uniformly random point of the open ball of radius `cap`.
pub(crate) fn random_momentum<R: rand::Rng>(rng: &mut R, n: usize, cap: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-cap..cap)).collect();
        if norm(&p) < cap {
            return p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn parabola() -> ProfileFunction {
        ProfileFunction::cut_parabola(2.0, 0.9, 0.98).unwrap()
    }

    #[test]
    fn zero_field_is_zero() {
        let h = HamiltonianField::zero(2);
        assert_eq!(h.value(0.3, &[0.1, 0.2], &[0.3, 0.1]), 0.0);
        assert_eq!(h.partials(0.3, &[0.1, 0.2], &[0.3, 0.1]), (vec![0.0, 0.0], vec![0.0, 0.0]));
        assert_eq!(h.zero_section_infimum(), 0.0);
    }

    #[test]
    fn momentum_field_examples() {
        let h2 = make_momentum_hamiltonian(2, parabola()).unwrap();
        assert_abs_diff_eq!(h2.value(0.0, &[0.3, -0.1], &[0.5, 0.0]), 1.5, epsilon = 1e-14);
        let h1 = make_momentum_hamiltonian(1, parabola()).unwrap();
        let (dq, dp) = h1.partials(0.0, &[0.0], &[0.25]);
        assert_eq!(dq, vec![0.0]);
        assert_abs_diff_eq!(dp[0], -1.0, epsilon = 1e-14);
        assert_eq!(h1.partials(0.0, &[0.0], &[0.0]).1, vec![0.0]);
        assert_eq!(h1.zero_section_infimum(), 2.0);
        assert_eq!(h1.support_radius(), 0.98);
    }

    #[test]
    fn momentum_field_passes_audit() {
        let h = make_momentum_hamiltonian(2, parabola()).unwrap();
        let worst = audit_field(&h, 100, 7).unwrap();
        assert!(worst < 1e-6, "worst = {worst}");
    }

    #[test]
    fn sampled_infimum_matches_closed_form() {
        let bump = trig_bump(1, vec![1], 0.0, parabola(), 1.0, 0, 0.0).unwrap();
        assert_abs_diff_eq!(bump.zero_section_infimum(), -2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_dimension_zero() {
        assert!(make_momentum_hamiltonian(0, parabola()).is_err());
    }
}
