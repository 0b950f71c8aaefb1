//! Sampled upper-bound certificates for the oscillation of generating
//! Hamiltonians, and their bookkeeping under products, iterates and
//! perturbations.
//!
//! Oscillation is taken globally: `sup_{[0,1] × M} G − inf_{[0,1] × M} G`.
//! Bounds are sampled extrema refined by a local pattern search and padded by
//! [`PAD`]; they are witnesses, not proofs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::IntegratorSettings;
use crate::hamiltonians::{compose_product, iterate_hamiltonian, HamiltonianField};
use crate::phase::norm;
use crate::rng::halton;

/// Padding applied to every sampled bound.
pub const PAD: f64 = 1e-6;
/// Slack of the subadditivity audit.
pub const AUDIT_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingPlan {
    /// Quasi-random phase-space points inside the support.
    pub points: usize,
    /// Equally spaced times in `[0, 1]` (one time for autonomous fields).
    pub times: usize,
    /// Grid points per axis of the zero-section sample.
    pub zero_section_resolution: usize,
    /// Extreme samples refined by pattern search.
    pub refine: usize,
    /// Offset into the quasi-random sequence.
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self { points: 10_000, times: 64, zero_section_resolution: 33, refine: 8, seed: 0 }
    }
}

impl SamplingPlan {
    /// A smaller plan for fields whose evaluation integrates a flow.
    pub fn derived() -> Self {
        Self { points: 400, times: 16, zero_section_resolution: 9, refine: 2, seed: 0 }
    }

    /// The default plan for plain fields, [`SamplingPlan::derived`] for derived ones.
    pub fn for_field(field: &HamiltonianField) -> Self {
        if field.is_derived() {
            Self::derived()
        } else {
            Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorCertificate {
    pub dim: usize,
    /// Upper bound for `sup G − inf G`.
    pub osc_upper: f64,
    /// Lower bound for `inf G` on `[0, 1] × {p = 0}`.
    pub zero_section_lower: f64,
    pub sampled_min: f64,
    pub sampled_max: f64,
    pub samples: usize,
    pub plan: SamplingPlan,
    /// How the certificate was obtained, oldest step first.
    pub provenance: Vec<String>,
    #[serde(skip)]
    pub field: Option<HamiltonianField>,
}

impl GeneratorCertificate {
    pub fn field(&self) -> Result<&HamiltonianField> {
        self.field.as_ref().ok_or_else(|| Error::Precondition("certificate carries no field".into()))
    }
}

struct Extremes {
    min: (f64, Vec<f64>),
    max: (f64, Vec<f64>),
    count: usize,
}

fn times_for(field: &HamiltonianField, count: usize) -> Vec<f64> {
    if field.is_autonomous() || count <= 1 {
        vec![0.0]
    } else {
        (0..count).map(|j| j as f64 / (count - 1) as f64).collect()
    }
}

/// Evaluates at `z = (t, q, p)` with `t` clamped to `[0, 1]`; `p` outside the
/// open bundle counts as 0.
fn eval(field: &HamiltonianField, z: &[f64]) -> f64 {
    let n = field.dim();
    let (q, p) = (&z[1..=n], &z[n + 1..]);
    if norm(p) >= 1.0 {
        return 0.0;
    }
    let v = field.value(z[0].clamp(0.0, 1.0), q, p);
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Coordinate pattern search from `z` towards larger `sign · G`.
fn refine(field: &HamiltonianField, mut z: Vec<f64>, sign: f64, vary_time: bool) -> (f64, Vec<f64>) {
    let mut best = sign * eval(field, &z);
    let mut step = 0.05;
    let start = if vary_time { 0 } else { 1 };
    while step > 1e-7 {
        let mut improved = false;
        for i in start..z.len() {
            for dir in [-1.0, 1.0] {
                let mut trial = z.clone();
                trial[i] += dir * step;
                let v = sign * eval(field, &trial);
                if v > best {
                    best = v;
                    z = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (sign * best, z)
}

fn sample_extremes(field: &HamiltonianField, zs: Vec<Vec<f64>>, refine_count: usize) -> Extremes {
    let values: Vec<(f64, Vec<f64>)> = zs.into_par_iter().map(|z| (eval(field, &z), z)).collect();
    let count = values.len();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| values[a].0.total_cmp(&values[b].0).then(a.cmp(&b)));
    let vary_time = !field.is_autonomous();
    let lows: Vec<Vec<f64>> = order.iter().take(refine_count).map(|&i| values[i].1.clone()).collect();
    let highs: Vec<Vec<f64>> = order.iter().rev().take(refine_count).map(|&i| values[i].1.clone()).collect();
    let pick = |a: (f64, Vec<f64>), b: (f64, Vec<f64>), better: fn(f64, f64) -> bool| if better(b.0, a.0) { b } else { a };
    let zero = vec![0.0; 2 * field.dim() + 1];
    let mut min = (0.0, zero.clone());
    let mut max = (0.0, zero);
    for (v, z) in values {
        min = pick(min, (v, z.clone()), |x, y| x < y);
        max = pick(max, (v, z), |x, y| x > y);
    }
    for z in lows {
        min = pick(min, refine(field, z, -1.0, vary_time), |x, y| x < y);
    }
    for z in highs {
        max = pick(max, refine(field, z, 1.0, vary_time), |x, y| x > y);
    }
    Extremes { min, max, count }
}

fn phase_space_samples(field: &HamiltonianField, plan: &SamplingPlan) -> Vec<Vec<f64>> {
    let n = field.dim();
    let rho = field.support_radius().min(1.0);
    let times = times_for(field, plan.times);
    let mut points = Vec::with_capacity(plan.points);
    let mut index = plan.seed;
    while points.len() < plan.points && rho > 0.0 {
        let h = halton(index, 2 * n);
        index += 1;
        let p: Vec<f64> = h[n..].iter().map(|x| rho * (2.0 * x - 1.0)).collect();
        if norm(&p) < rho {
            let mut z = Vec::with_capacity(2 * n);
            z.extend(h[..n].iter().map(|x| x - 0.5));
            z.extend(p);
            points.push(z);
        }
    }
    let mut zs = Vec::with_capacity(points.len() * times.len());
    for t in &times {
        for x in &points {
            let mut z = vec![*t];
            z.extend_from_slice(x);
            zs.push(z);
        }
    }
    zs
}

fn zero_section_samples(field: &HamiltonianField, plan: &SamplingPlan) -> Vec<Vec<f64>> {
    let n = field.dim();
    let res = plan.zero_section_resolution.max(1);
    let times = times_for(field, plan.times);
    let total = res.pow(n as u32);
    let mut zs = Vec::with_capacity(total * times.len());
    for t in &times {
        for idx in 0..total {
            let mut z = vec![*t];
            let mut rest = idx;
            for _ in 0..n {
                z.push(if res == 1 { 0.0 } else { -0.5 + (rest % res) as f64 / (res - 1) as f64 });
                rest /= res;
            }
            z.extend(std::iter::repeat(0.0).take(n));
            zs.push(z);
        }
    }
    zs
}

/// Lower bound of `G` on the zero section by sampling and refinement in `(t, q)`.
fn zero_section_minimum(field: &HamiltonianField, plan: &SamplingPlan) -> (f64, usize) {
    let n = field.dim();
    let zs = zero_section_samples(field, plan);
    let count = zs.len();
    let mut values: Vec<(f64, Vec<f64>)> = zs.into_par_iter().map(|z| (eval(field, &z), z)).collect();
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = values.first().map_or(f64::INFINITY, |v| v.0);
    for (_, z) in values.into_iter().take(plan.refine) {
        let mut z = z;
        let mut step = 0.05;
        let mut cur = eval(field, &z);
        let last_coordinate = if field.is_autonomous() { 0 } else { 1 };
        while step > 1e-7 {
            let mut improved = false;
            for i in (1 - last_coordinate)..=n {
                for dir in [-1.0, 1.0] {
                    let mut trial = z.clone();
                    trial[i] += dir * step;
                    let v = eval(field, &trial);
                    if v < cur {
                        cur = v;
                        z = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.min(cur);
    }
    (best, count)
}

/// Samples `G` and returns padded bounds on its oscillation and zero-section infimum.
pub fn certify(field: &HamiltonianField, plan: &SamplingPlan) -> Result<GeneratorCertificate> {
    if plan.points == 0 || plan.times == 0 {
        return Err(Error::InvalidInput("sampling plan needs points and times".into()));
    }
    let ext = sample_extremes(field, phase_space_samples(field, plan), plan.refine);
    let (zmin, zcount) = zero_section_minimum(field, plan);
    let (lo, hi) = (ext.min.0.min(zmin), ext.max.0.max(zero_section_max(field, plan)));
    if !(lo <= 0.0 && hi >= 0.0) {
        return Err(Error::Audit(format!("compact support violated: sampled range [{lo}, {hi}]")));
    }
    let osc_upper = hi - lo + PAD;
    let cert = GeneratorCertificate {
        dim: field.dim(),
        osc_upper,
        zero_section_lower: zmin - PAD,
        sampled_min: lo,
        sampled_max: hi,
        samples: ext.count + zcount,
        plan: *plan,
        provenance: vec![format!("sampled {} points", ext.count + zcount)],
        field: Some(field.clone()),
    };
    if cert.sampled_min < -cert.osc_upper {
        return Err(Error::Audit("infimum below minus the oscillation".into()));
    }
    Ok(cert)
}

fn zero_section_max(field: &HamiltonianField, plan: &SamplingPlan) -> f64 {
    zero_section_samples(field, plan).into_par_iter().map(|z| eval(field, &z)).reduce(|| 0.0, f64::max)
}

/// Certificate for the product `φ ∘ ψ`, generated by `Φ_t + Ψ_t ∘ φ_t⁻¹`,
/// audited against `osc(Φ) + osc(Ψ)`.
pub fn compose_certificates(
    a: &GeneratorCertificate,
    b: &GeneratorCertificate,
    settings: IntegratorSettings,
) -> Result<GeneratorCertificate> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, found: b.dim });
    }
    let field = compose_product(a.field()?, b.field()?, settings)?;
    let mut cert = certify(&field, &SamplingPlan::for_field(&field))?;
    let bound = a.osc_upper + b.osc_upper;
    if cert.osc_upper > bound + AUDIT_SLACK {
        return Err(Error::Audit(format!("product oscillation {} exceeds {} + {}", cert.osc_upper, a.osc_upper, b.osc_upper)));
    }
    cert.provenance = a.provenance.iter().chain(&b.provenance).cloned().collect();
    cert.provenance.push(format!("product, audited against {bound:.9}"));
    Ok(cert)
}

/// Certificate of the `k`-th iterate, generated by `k H(k t, x)`.
pub fn iterate_certificate(base: &GeneratorCertificate, k: i64) -> Result<GeneratorCertificate> {
    let field = iterate_hamiltonian(base.field()?, k)?;
    let kf = k as f64;
    let mut cert = base.clone();
    cert.field = Some(field);
    cert.osc_upper = kf * (base.sampled_max - base.sampled_min) + PAD;
    cert.zero_section_lower = kf * (base.zero_section_lower + PAD) - PAD;
    cert.sampled_min *= kf;
    cert.sampled_max *= kf;
    cert.provenance.push(format!("iterate k = {k}"));
    Ok(cert)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferReport {
    pub certificate: GeneratorCertificate,
    /// `c − a`, the level guaranteed for the perturbed map.
    pub guaranteed_level: f64,
    /// `c + inf(perturbation)`, the sharper bound from the samples.
    pub sharp_level: f64,
    /// Sampled infimum of the product field on the zero section.
    pub audit_minimum: f64,
}

/// For `f ∈ D_c` and `ρ(id, φ) < a`, certifies `f ∘ φ ∈ D_{c − a}`.
pub fn transfer_dc(
    base: &GeneratorCertificate,
    perturbation: &GeneratorCertificate,
    c: f64,
    a: f64,
    settings: IntegratorSettings,
) -> Result<TransferReport> {
    if base.zero_section_lower < c - PAD {
        return Err(Error::Precondition(format!("base zero-section bound {} is below c = {c}", base.zero_section_lower)));
    }
    if !(perturbation.osc_upper < a) {
        return Err(Error::Precondition(format!("perturbation oscillation {} is not below a = {a}", perturbation.osc_upper)));
    }
    let field = compose_product(base.field()?, perturbation.field()?, settings)?;
    let plan = SamplingPlan::for_field(&field);
    let (audit_minimum, count) = zero_section_minimum(&field, &plan);
    let perturbation_inf = perturbation.sampled_min.max(-perturbation.osc_upper);
    let sharp_level = c + perturbation_inf - PAD;
    let guaranteed_level = c - a;
    if audit_minimum < guaranteed_level - 1e-3 {
        return Err(Error::Audit(format!("zero-section sample {audit_minimum} below {guaranteed_level}")));
    }
    let mut provenance: Vec<String> = base.provenance.iter().chain(&perturbation.provenance).cloned().collect();
    provenance.push(format!("transfer c = {c}, a = {a}"));
    let certificate = GeneratorCertificate {
        dim: base.dim,
        osc_upper: base.osc_upper + perturbation.osc_upper,
        zero_section_lower: sharp_level.max(guaranteed_level),
        sampled_min: f64::NAN,
        sampled_max: f64::NAN,
        samples: count,
        plan,
        provenance,
        field: Some(field),
    };
    Ok(TransferReport { certificate, guaranteed_level, sharp_level, audit_minimum })
}
