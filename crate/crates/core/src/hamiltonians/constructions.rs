//! Fields assembled from other fields: trigonometric bumps, linear
//! combinations, iterates, products of isotopies and periodic reparametrisation.

use std::f64::consts::TAU;

use super::{fd_gradient, FieldModel, HamiltonianField, ProfileFunction, DERIVED_FD_STEP};
use crate::error::{Error, Result};
use crate::flow::{flow_state, IntegratorSettings, Scheme};
use crate::phase::norm;

/// `A · cos(2π k·q + φ) · χ(|p|) · T(t)` with `T ≡ 1` when `m = 0` and
/// `T(t) = cos(2π m t + ψ)` otherwise.
#[derive(Debug, Clone)]
pub struct TrigBump {
    wave: Vec<f64>,
    phase: f64,
    envelope: ProfileFunction,
    amplitude: f64,
    time_frequency: u32,
    time_phase: f64,
}

impl TrigBump {
    fn angle(&self, q: &[f64]) -> f64 {
        TAU * self.wave.iter().zip(q).map(|(k, x)| k * x).sum::<f64>() + self.phase
    }

    fn time_factor(&self, t: f64) -> f64 {
        if self.time_frequency == 0 {
            1.0
        } else {
            (TAU * self.time_frequency as f64 * t + self.time_phase).cos()
        }
    }
}

impl FieldModel for TrigBump {
    fn dim(&self) -> usize {
        self.wave.len()
    }
    fn value(&self, t: f64, q: &[f64], p: &[f64]) -> f64 {
        let chi = self.envelope.value(norm(p));
        if chi == 0.0 {
            return 0.0;
        }
        self.amplitude * self.angle(q).cos() * chi * self.time_factor(t)
    }
    fn gradient(&self, t: f64, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        let r = norm(p);
        let jet = self.envelope.jet(r);
        let theta = self.angle(q);
        let a = self.amplitude * self.time_factor(t);
        let sq = -a * theta.sin() * jet.value * TAU;
        for (d, k) in dq.iter_mut().zip(&self.wave) {
            *d = sq * k;
        }
        if r == 0.0 {
            dp.fill(0.0);
        } else {
            let sp = a * theta.cos() * jet.slope / r;
            for (d, pi) in dp.iter_mut().zip(p) {
                *d = sp * pi;
            }
        }
    }
    fn support_radius(&self) -> f64 {
        self.envelope.support_end()
    }
    fn is_autonomous(&self) -> bool {
        self.time_frequency == 0
    }
    fn is_time_periodic(&self) -> bool {
        true
    }
    fn is_momentum_only(&self) -> bool {
        false
    }
    fn exact_zero_section_infimum(&self) -> Option<f64> {
        let peak = self.amplitude * self.envelope.value(0.0);
        let constant_angle = self.wave.iter().all(|&k| k == 0.0);
        Some(match (constant_angle, self.time_frequency) {
            (false, _) => -peak.abs(),
            (true, 0) => peak * self.phase.cos(),
            (true, _) => -(peak * self.phase.cos()).abs(),
        })
    }
}

/// Builds a [`TrigBump`] field with integer wave vector `wave`.
pub fn trig_bump(
    n: usize,
    wave: Vec<i64>,
    phase: f64,
    envelope: ProfileFunction,
    amplitude: f64,
    time_frequency: u32,
    time_phase: f64,
) -> Result<HamiltonianField> {
    if n == 0 || wave.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: wave.len() });
    }
    if !(amplitude.is_finite() && phase.is_finite() && time_phase.is_finite()) {
        return Err(Error::InvalidInput("trig bump parameters must be finite".into()));
    }
    Ok(HamiltonianField::from_model(TrigBump {
        wave: wave.into_iter().map(|k| k as f64).collect(),
        phase,
        envelope,
        amplitude,
        time_frequency,
        time_phase,
    }))
}

#[derive(Debug, Clone)]
struct LinearCombination {
    terms: Vec<(f64, HamiltonianField)>,
}

impl FieldModel for LinearCombination {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn value(&self, t: f64, q: &[f64], p: &[f64]) -> f64 {
        self.terms.iter().map(|(w, h)| w * h.value(t, q, p)).sum()
    }
    fn gradient(&self, t: f64, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        let n = q.len();
        let (mut tq, mut tp) = (vec![0.0; n], vec![0.0; n]);
        dq.fill(0.0);
        dp.fill(0.0);
        for (w, h) in &self.terms {
            h.gradient(t, q, p, &mut tq, &mut tp);
            for i in 0..n {
                dq[i] += w * tq[i];
                dp[i] += w * tp[i];
            }
        }
    }
    fn support_radius(&self) -> f64 {
        self.terms.iter().filter(|(w, _)| *w != 0.0).map(|(_, h)| h.support_radius()).fold(0.0, f64::max)
    }
    fn is_autonomous(&self) -> bool {
        self.terms.iter().all(|(_, h)| h.is_autonomous())
    }
    fn is_time_periodic(&self) -> bool {
        self.terms.iter().all(|(_, h)| h.is_time_periodic())
    }
    fn is_derived(&self) -> bool {
        self.terms.iter().any(|(_, h)| h.is_derived())
    }
    fn is_momentum_only(&self) -> bool {
        self.terms.iter().all(|(_, h)| h.is_momentum_only())
    }
    fn momentum_velocity(&self, p: &[f64], out: &mut [f64]) -> bool {
        let mut tmp = vec![0.0; p.len()];
        out.fill(0.0);
        for (w, h) in &self.terms {
            if !h.model().momentum_velocity(p, &mut tmp) {
                return false;
            }
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o += w * v;
            }
        }
        true
    }
    fn exact_zero_section_infimum(&self) -> Option<f64> {
        if self.is_momentum_only() {
            let zero = vec![0.0; self.dim()];
            Some(self.value(0.0, &zero, &zero))
        } else {
            None
        }
    }
}

/// `Σ wᵢ Hᵢ` over fields of a common dimension.
pub fn linear_combination(terms: Vec<(f64, HamiltonianField)>) -> Result<HamiltonianField> {
    let n = terms.first().ok_or_else(|| Error::InvalidInput("empty linear combination".into()))?.1.dim();
    if let Some((_, h)) = terms.iter().find(|(_, h)| h.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: h.dim() });
    }
    Ok(HamiltonianField::from_model(LinearCombination { terms }))
}

#[derive(Debug, Clone)]
struct Iterated {
    inner: HamiltonianField,
    k: u32,
}

impl FieldModel for Iterated {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, t: f64, q: &[f64], p: &[f64]) -> f64 {
        let k = self.k as f64;
        k * self.inner.value(k * t, q, p)
    }
    fn gradient(&self, t: f64, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        let k = self.k as f64;
        self.inner.gradient(k * t, q, p, dq, dp);
        dq.iter_mut().chain(dp.iter_mut()).for_each(|d| *d *= k);
    }
    fn support_radius(&self) -> f64 {
        self.inner.support_radius()
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
    fn is_time_periodic(&self) -> bool {
        true
    }
    fn is_derived(&self) -> bool {
        self.inner.is_derived()
    }
    fn radial_profile(&self) -> Option<(&ProfileFunction, f64)> {
        self.inner.radial_profile().map(|(f, s)| (f, s * self.k as f64))
    }
    fn is_momentum_only(&self) -> bool {
        self.inner.is_momentum_only()
    }
    fn momentum_velocity(&self, p: &[f64], out: &mut [f64]) -> bool {
        let ok = self.inner.model().momentum_velocity(p, out);
        out.iter_mut().for_each(|o| *o *= self.k as f64);
        ok
    }
    fn exact_zero_section_infimum(&self) -> Option<f64> {
        Some(self.k as f64 * self.inner.zero_section_infimum())
    }
}

/// The field `k · H(k t, x)` generating the `k`-th iterate of the time-1 map.
pub fn iterate_hamiltonian(h: &HamiltonianField, k: i64) -> Result<HamiltonianField> {
    if k <= 0 {
        return Err(Error::InvalidInput(format!("iterate count must be positive, got {k}")));
    }
    if !h.is_time_periodic() {
        return Err(Error::Precondition("iterating requires a time-periodic field".into()));
    }
    if k == 1 {
        return Ok(h.clone());
    }
    let k = u32::try_from(k).map_err(|_| Error::InvalidInput(format!("iterate count {k} too large")))?;
    Ok(HamiltonianField::from_model(Iterated { inner: h.clone(), k }))
}

/// Generator `Φ_t + Ψ_t ∘ φ_t⁻¹` of the product isotopy `φ_t ∘ ψ_t`.
#[derive(Debug, Clone)]
struct Product {
    phi: HamiltonianField,
    psi: HamiltonianField,
    settings: IntegratorSettings,
}

impl FieldModel for Product {
    fn dim(&self) -> usize {
        self.phi.dim()
    }
    fn value(&self, t: f64, q: &[f64], p: &[f64]) -> f64 {
        let first = self.phi.value(t, q, p);
        let (mut qq, mut pp) = (q.to_vec(), p.to_vec());
        if flow_state(&self.phi, &mut qq, &mut pp, t, 0.0, &self.settings).is_err() {
            return f64::NAN;
        }
        first + self.psi.value(t, &qq, &pp)
    }
    fn gradient(&self, t: f64, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        fd_gradient(self, t, q, p, DERIVED_FD_STEP, dq, dp)
    }
    fn support_radius(&self) -> f64 {
        self.phi.support_radius().max(self.psi.support_radius())
    }
    fn is_autonomous(&self) -> bool {
        false
    }
    fn is_time_periodic(&self) -> bool {
        false
    }
    fn is_derived(&self) -> bool {
        true
    }
}

/// Field generating `φ_t ∘ ψ_t`, where `φ`, `ψ` are the isotopies of `Φ`, `Ψ`.
pub fn compose_product(
    phi: &HamiltonianField,
    psi: &HamiltonianField,
    settings: IntegratorSettings,
) -> Result<HamiltonianField> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: psi.dim() });
    }
    settings.validate()?;
    Ok(HamiltonianField::from_model(Product { phi: phi.clone(), psi: psi.clone(), settings }))
}

/// C∞ nondecreasing ramp, `≡ 0` on `[0, start]` and `≡ 1` on `[end, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothRamp {
    pub start: f64,
    pub end: f64,
}

impl Default for SmoothRamp {
    fn default() -> Self {
        Self { start: 0.1, end: 0.9 }
    }
}

fn bump_tail(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

impl SmoothRamp {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(0.0 < start && start < end && end < 1.0) {
            return Err(Error::InvalidInput(format!("ramp needs 0 < start < end < 1, got {start}, {end}")));
        }
        Ok(Self { start, end })
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = (t - self.start) / (self.end - self.start);
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let (g, h) = (bump_tail(x), bump_tail(1.0 - x));
        g / (g + h)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let x = (t - self.start) / (self.end - self.start);
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let (g, h) = (bump_tail(x), bump_tail(1.0 - x));
        let num = g * h * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x)));
        num / ((g + h) * (g + h)) / (self.end - self.start)
    }
}

/// `F + τ'(t) · (H_{τ(t)} − F) ∘ f_{τ(t) − t}` with `f` the flow of `F`.
#[derive(Debug, Clone)]
struct Periodized {
    h: HamiltonianField,
    f: HamiltonianField,
    ramp: SmoothRamp,
    settings: IntegratorSettings,
}

impl FieldModel for Periodized {
    fn dim(&self) -> usize {
        self.h.dim()
    }
    fn value(&self, t: f64, q: &[f64], p: &[f64]) -> f64 {
        let base = self.f.value(0.0, q, p);
        let speed = self.ramp.derivative(t);
        if speed == 0.0 {
            return base;
        }
        let tau = self.ramp.value(t);
        let (mut qq, mut pp) = (q.to_vec(), p.to_vec());
        if flow_state(&self.f, &mut qq, &mut pp, 0.0, tau - t, &self.settings).is_err() {
            return f64::NAN;
        }
        base + speed * (self.h.value(tau, &qq, &pp) - base)
    }
    fn gradient(&self, t: f64, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        fd_gradient(self, t, q, p, DERIVED_FD_STEP, dq, dp)
    }
    fn support_radius(&self) -> f64 {
        self.h.support_radius().max(self.f.support_radius())
    }
    fn is_autonomous(&self) -> bool {
        false
    }
    fn is_time_periodic(&self) -> bool {
        true
    }
    fn is_derived(&self) -> bool {
        true
    }
}

/// Time-periodic field with the same time-1 map as `h`, reparametrised by
/// `ramp` and conjugated by the flow of the autonomous field `f`.
pub fn make_periodic(
    h: &HamiltonianField,
    f: &HamiltonianField,
    ramp: SmoothRamp,
    settings: IntegratorSettings,
) -> Result<HamiltonianField> {
    if h.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: f.dim() });
    }
    if !f.is_autonomous() {
        return Err(Error::Precondition("the conjugating field must be autonomous".into()));
    }
    SmoothRamp::new(ramp.start, ramp.end)?;
    settings.validate()?;
    let settings = IntegratorSettings { scheme: Scheme::Auto, ..settings };
    Ok(HamiltonianField::from_model(Periodized { h: h.clone(), f: f.clone(), ramp, settings }))
}
