//! Sequential systems on the lifted bundle: propagation speed, perturbed
//! systems and their displaced fixed points, skew products over a rotation
//! of the base torus, and a dissipative map without propagation.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{IntegratorSettings, SequentialMap, SequentialSystem, SystemKind, TimeOneMap, JACOBIAN_STEP};
use crate::hamiltonians::{linear_combination, scaled_momentum_hamiltonian, trig_bump, HamiltonianField, ProfileFunction};
use crate::hofer::{certify, GeneratorCertificate, SamplingPlan, PAD};
use crate::orbits::{in_bundle, pseudo_inverse_step};
use crate::phase::{deck_transform, norm, sample_fundamental_domain, FundamentalDomain, HomotopyClass, LiftedPoint};
use crate::rng::{halton, stream_rng};

/// Number of directions probed by the coverage fan (`n ≥ 2`).
pub const FAN_DIRECTIONS: usize = 64;
/// Relative slack of the coverage test at radius `r`: `0.05 r + dispersion`.
pub const COVERAGE_SLACK: f64 = 0.05;
/// Residual at which a displaced fixed point counts as found.
pub const FIXED_POINT_ACCEPT: f64 = 1e-7;
/// Hull membership tolerance.
pub const HULL_TOLERANCE: f64 = 1e-12;
/// Distance at which a rotation sample is attributed to a hull vertex.
pub const VERTEX_PROXIMITY: f64 = 1e-2;

/// Seeds of a propagation experiment and the dispersion of their `q`-grid.
#[derive(Debug, Clone)]
pub struct SeedGrid {
    pub points: Vec<LiftedPoint>,
    pub dispersion: f64,
}

impl SeedGrid {
    pub fn new(points: Vec<LiftedPoint>, dispersion: f64) -> Result<Self> {
        let n = points.first().map(LiftedPoint::dim).ok_or_else(|| Error::InvalidInput("seed grid is empty".into()))?;
        if let Some(bad) = points.iter().find(|x| x.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
        }
        if !(dispersion >= 0.0 && dispersion.is_finite()) {
            return Err(Error::InvalidInput(format!("dispersion {dispersion} must be finite and nonnegative")));
        }
        Ok(Self { points, dispersion })
    }

    /// The tensor grid of [`sample_fundamental_domain`].
    pub fn fundamental(dim: usize, resolution: usize, momentum_cap: f64) -> Result<Self> {
        let points = sample_fundamental_domain(dim, resolution, momentum_cap)?;
        Self::new(points, FundamentalDomain::new(dim).grid_dispersion(resolution))
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }
}

fn fan(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..FAN_DIRECTIONS)
            .map(|j| {
                let a = std::f64::consts::TAU * j as f64 / FAN_DIRECTIONS as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(FAN_DIRECTIONS);
            let mut index = 0;
            while out.len() < FAN_DIRECTIONS {
                let v: Vec<f64> = halton(index, n).iter().map(|x| 2.0 * x - 1.0).collect();
                index += 1;
                let r = norm(&v);
                if r > 0.1 && r <= 1.0 {
                    out.push(v.iter().map(|x| x / r).collect());
                }
            }
            out
        }
    }
}

/// Nested uniform buckets answering "is some point within `τ` of `z`".
/// One-dimensional clouds are kept sorted instead.
struct CloudIndex {
    points: Vec<Vec<f64>>,
    sorted: Option<Vec<f64>>,
    base_cell: f64,
    levels: Vec<HashMap<Vec<i64>, Vec<u32>>>,
    extent: f64,
}

impl CloudIndex {
    fn new(points: Vec<Vec<f64>>, base_cell: f64) -> Self {
        let extent = points.iter().map(|q| norm(q)).fold(0.0, f64::max);
        if points.first().is_some_and(|q| q.len() == 1) {
            let mut line: Vec<f64> = points.iter().map(|q| q[0]).collect();
            line.sort_by(f64::total_cmp);
            return Self { points, sorted: Some(line), base_cell, levels: Vec::new(), extent };
        }
        let mut levels = Vec::new();
        let mut cell = base_cell;
        loop {
            let mut buckets: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
            for (i, q) in points.iter().enumerate() {
                buckets.entry(Self::key(q, cell)).or_default().push(i as u32);
            }
            levels.push(buckets);
            if cell > 2.0 * extent + 1.0 || levels.len() >= 48 {
                break;
            }
            cell *= 2.0;
        }
        Self { points, sorted: None, base_cell, levels, extent }
    }

    fn key(q: &[f64], cell: f64) -> Vec<i64> {
        q.iter().map(|x| (x / cell).floor() as i64).collect()
    }

    fn any_within(&self, z: &[f64], tau: f64) -> bool {
        if let Some(line) = &self.sorted {
            let i = line.partition_point(|&x| x < z[0] - tau);
            return line.get(i).is_some_and(|&x| x <= z[0] + tau);
        }
        let mut level = 0;
        while level + 1 < self.levels.len() && self.base_cell * 2f64.powi(level as i32 + 1) <= tau {
            level += 1;
        }
        let cell = self.base_cell * 2f64.powi(level as i32);
        let rings = (tau / cell).ceil().max(1.0) as i64;
        let center = Self::key(z, cell);
        let n = z.len();
        let width = 2 * rings + 1;
        let total = (width as u64).pow(n as u32);
        let mut key = center.clone();
        for combo in 0..total {
            let mut rest = combo;
            for i in 0..n {
                key[i] = center[i] + (rest % width as u64) as i64 - rings;
                rest /= width as u64;
            }
            if let Some(ids) = self.levels[level].get(&key) {
                let hit = ids.iter().any(|&id| {
                    let d2: f64 = self.points[id as usize].iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                    d2.sqrt() <= tau
                });
                if hit {
                    return true;
                }
            }
        }
        false
    }

    /// Largest `r` such that every fan direction is covered on `[0, r]`.
    fn coverage(&self, directions: &[Vec<f64>], dispersion: f64) -> f64 {
        let floor = 0.5 * self.base_cell;
        let mut radius = f64::INFINITY;
        for d in directions {
            let mut covered = 0.0;
            let mut r = 0.0;
            loop {
                let tol = COVERAGE_SLACK * r + dispersion;
                let target: Vec<f64> = d.iter().map(|x| r * x).collect();
                if !self.any_within(&target, tol) {
                    break;
                }
                covered = r;
                if r > self.extent + tol {
                    break;
                }
                r += (0.5 * tol).max(floor);
            }
            radius = radius.min(covered);
        }
        radius
    }
}

/// Fan-coverage radii of the clouds `{q(f^{(j)}(x)) : x ∈ grid}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagationReport {
    pub horizon: usize,
    pub grid_size: usize,
    pub dispersion: f64,
    /// Raw coverage radius of cloud `j`.
    pub coverage: Vec<f64>,
    /// Coverage gained over the initial cloud, `max(0, coverage_j − coverage_0)`.
    pub radius: Vec<f64>,
    /// `radius_j / j`, with entry 0 set to 0.
    pub radius_over_k: Vec<f64>,
    pub speed_estimate: f64,
}

impl PropagationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,radius,radius_over_k\n");
        for j in 0..=self.horizon {
            let _ = writeln!(out, "{j},{:.16e},{:.16e}", self.radius[j], self.radius_over_k[j]);
        }
        out
    }
}

pub fn propagation_speed(system: &SequentialSystem, k: usize, grid: &SeedGrid) -> Result<PropagationReport> {
    if k == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if grid.dim() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: grid.dim() });
    }
    let paths: Vec<Vec<Vec<f64>>> = grid
        .points
        .par_iter()
        .map(|x0| {
            let mut x = x0.clone();
            let mut qs = Vec::with_capacity(k + 1);
            qs.push(x.q.clone());
            for j in 1..=k {
                x = system.apply(j, &x)?;
                qs.push(x.q.clone());
            }
            Ok(qs)
        })
        .collect::<Result<_>>()?;
    let directions = fan(system.dim());
    let base_cell = grid.dispersion.max(1e-3);
    let coverage: Vec<f64> = (0..=k)
        .into_par_iter()
        .map(|j| {
            let cloud = paths.iter().map(|qs| qs[j].clone()).collect();
            CloudIndex::new(cloud, base_cell).coverage(&directions, grid.dispersion)
        })
        .collect();
    let radius: Vec<f64> = coverage.iter().map(|c| (c - coverage[0]).max(0.0)).collect();
    let radius_over_k: Vec<f64> = radius.iter().enumerate().map(|(j, r)| if j == 0 { 0.0 } else { r / j as f64 }).collect();
    Ok(PropagationReport {
        horizon: k,
        grid_size: grid.points.len(),
        dispersion: grid.dispersion,
        speed_estimate: radius_over_k[k],
        coverage,
        radius,
        radius_over_k,
    })
}

/// Where the perturbing generators `G_i` come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationSource {
    /// `G_i ≡ 0`.
    Zero,
    /// Seeded random combinations of a fixed bump dictionary, scaled so that
    /// the certified oscillation is a fraction in `[min_fraction, max_fraction]` of `a`.
    Random { seed: u64, min_fraction: f64, max_fraction: f64 },
}

#[derive(Debug, Clone)]
pub struct Perturbation {
    pub index: usize,
    pub certificate: GeneratorCertificate,
    map: TimeOneMap,
}

/// `f_i = h ∘ ψ_i` with `h` the time-one map of the base field and `ψ_i`
/// generated by `G_i`, `osc(G_i) < a`.
#[derive(Debug, Clone)]
pub struct PerturbedSystem {
    base: TimeOneMap,
    c: f64,
    a: f64,
    source: PerturbationSource,
    perturbations: Vec<Perturbation>,
}

/// The modes `(wave, time frequency)` perturbations are drawn from.
fn dictionary(n: usize) -> Vec<(Vec<i64>, u32)> {
    let unit = |j: usize, m: i64| {
        let mut w = vec![0; n];
        w[j] = m;
        w
    };
    let mut out = vec![(vec![0; n], 0), (vec![0; n], 1)];
    for j in 0..n {
        out.push((unit(j, 1), 0));
        out.push((unit(j, 1), 1));
        out.push((unit(j, 2), 0));
    }
    if n >= 2 {
        let mut w = unit(0, 1);
        w[1] = 1;
        out.push((w.clone(), 0));
        w[1] = -1;
        out.push((w, 0));
    }
    out
}

fn perturbation_plan(index: usize) -> SamplingPlan {
    SamplingPlan { points: 1500, times: 16, zero_section_resolution: 17, refine: 4, seed: index as u64 * 7919 }
}

fn random_generator(n: usize, a: f64, seed: u64, lo: f64, hi: f64, index: usize) -> Result<GeneratorCertificate> {
    let mut rng = stream_rng(seed, index as u64);
    let envelope = ProfileFunction::cut_parabola(1.0, 0.8, 0.95)?;
    let tau = std::f64::consts::TAU;
    let terms = dictionary(n)
        .into_iter()
        .map(|(wave, freq)| {
            let weight = rng.gen_range(-1.0..1.0);
            let field = trig_bump(n, wave, rng.gen_range(0.0..tau), envelope.clone(), 1.0, freq, rng.gen_range(0.0..tau))?;
            Ok((weight, field))
        })
        .collect::<Result<Vec<_>>>()?;
    let raw = linear_combination(terms)?;
    let fraction = if hi > lo { rng.gen_range(lo..hi) } else { lo };
    let cert = certify(&raw, &perturbation_plan(index))?;
    let spread = cert.sampled_max - cert.sampled_min;
    if !(spread > 0.0) {
        return Err(Error::Construction { clause: format!("perturbation {index} has no sampled oscillation") });
    }
    let scale = (fraction * a - PAD) / spread;
    let field = linear_combination(vec![(scale, raw)])?;
    let scaled = GeneratorCertificate {
        osc_upper: scale * spread + PAD,
        zero_section_lower: scale * (cert.zero_section_lower + PAD) - PAD,
        sampled_min: scale * cert.sampled_min,
        sampled_max: scale * cert.sampled_max,
        provenance: vec![format!("perturbation {index}, seed {seed}, scaled to {fraction:.4} a")],
        field: Some(field),
        ..cert
    };
    if !(scaled.osc_upper < a) {
        return Err(Error::Construction { clause: format!("perturbation {index} oscillation {} is not below {a}", scaled.osc_upper) });
    }
    Ok(scaled)
}

impl PerturbedSystem {
    /// Builds `f_1, …, f_horizon`; random sources beyond the horizon are rejected.
    pub fn new(
        base: HamiltonianField,
        a: f64,
        source: PerturbationSource,
        horizon: usize,
        settings: IntegratorSettings,
    ) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("bound a = {a} must be positive")));
        }
        let n = base.dim();
        let c = base.zero_section_infimum();
        let perturbations = match source {
            PerturbationSource::Zero => Vec::new(),
            PerturbationSource::Random { seed, min_fraction, max_fraction } => {
                if !(0.0 < min_fraction && min_fraction <= max_fraction && max_fraction < 1.0) {
                    return Err(Error::InvalidInput("need 0 < min_fraction ≤ max_fraction < 1".into()));
                }
                (1..=horizon)
                    .into_par_iter()
                    .map(|i| {
                        let certificate = random_generator(n, a, seed, min_fraction, max_fraction, i)?;
                        let map = TimeOneMap::new(certificate.field()?.clone(), settings)?;
                        Ok(Perturbation { index: i, certificate, map })
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok(Self { base: TimeOneMap::new(base, settings)?, c, a, source, perturbations })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `c`, the zero-section infimum of the base field.
    pub fn level(&self) -> f64 {
        self.c
    }

    pub fn bound(&self) -> f64 {
        self.a
    }

    pub fn source(&self) -> PerturbationSource {
        self.source
    }

    pub fn perturbations(&self) -> &[Perturbation] {
        &self.perturbations
    }

    /// Largest certified oscillation among the generated perturbations.
    pub fn max_oscillation(&self) -> f64 {
        self.perturbations.iter().map(|p| p.certificate.osc_upper).fold(0.0, f64::max)
    }

    pub fn to_sequential(&self) -> SequentialSystem {
        SequentialSystem::new(self.clone())
    }
}

impl SequentialMap for PerturbedSystem {
    fn kind(&self) -> SystemKind {
        SystemKind::Perturbed
    }
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn apply(&self, index: usize, x: &LiftedPoint) -> Result<LiftedPoint> {
        if index == 0 {
            return Err(Error::InvalidInput("sequential indices start at 1".into()));
        }
        match self.source {
            PerturbationSource::Zero => self.base.apply(x),
            PerturbationSource::Random { .. } => {
                let psi = self.perturbations.get(index - 1).ok_or_else(|| {
                    Error::Precondition(format!("perturbation {index} lies beyond the horizon {}", self.perturbations.len()))
                })?;
                self.base.apply(&psi.map.apply(x)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointSearch {
    /// Grid points per axis of the seed sample.
    pub resolution: usize,
    pub momentum_cap: f64,
    /// Seeds with the smallest initial residual that are refined by Newton.
    pub candidates: usize,
    pub accept: f64,
    pub polish: f64,
    pub max_iterations: usize,
    pub truncation: f64,
    /// Also search displacements beyond the threshold `k (c − a)`.
    pub beyond_hypothesis: bool,
}

impl Default for FixedPointSearch {
    fn default() -> Self {
        Self {
            resolution: 25,
            momentum_cap: 0.98,
            candidates: 40,
            accept: FIXED_POINT_ACCEPT,
            polish: 1e-13,
            max_iterations: 40,
            truncation: 1e-8,
            beyond_hypothesis: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremAReport {
    pub k: usize,
    pub displacement: HomotopyClass,
    pub level: f64,
    pub bound: f64,
    /// `k (c − a)`.
    pub threshold: f64,
    /// `|v| < k (c − a)`.
    pub hypothesis_met: bool,
    pub found: bool,
    /// A solution of `f^{(k)}(x) = x + (v, 0)` inside the fundamental domain.
    pub point: Option<LiftedPoint>,
    pub image: Option<LiftedPoint>,
    pub residual: f64,
    pub seeds: usize,
    pub newton_runs: usize,
}

fn displaced_residual(system: &SequentialSystem, k: usize, state: &[f64], shift: &[f64]) -> Result<DVector<f64>> {
    let n = shift.len();
    let image = system.compose(k, &LiftedPoint::from_state(state))?.to_state();
    Ok(DVector::from_fn(2 * n, |i, _| image[i] - state[i] - if i < n { shift[i] } else { 0.0 }))
}

fn displaced_jacobian(system: &SequentialSystem, k: usize, state: &[f64], shift: &[f64]) -> Result<DMatrix<f64>> {
    let m = state.len();
    let mut jac = DMatrix::zeros(m, m);
    for j in 0..m {
        let (mut plus, mut minus) = (state.to_vec(), state.to_vec());
        plus[j] += JACOBIAN_STEP;
        minus[j] -= JACOBIAN_STEP;
        let (fp, fm) = (displaced_residual(system, k, &plus, shift)?, displaced_residual(system, k, &minus, shift)?);
        jac.set_column(j, &((fp - fm) / (2.0 * JACOBIAN_STEP)));
    }
    Ok(jac)
}

/// Damped Newton iteration on `f^{(k)}(x) − x − (v, 0)`.
fn displaced_newton(
    system: &SequentialSystem,
    k: usize,
    start: &LiftedPoint,
    shift: &[f64],
    search: &FixedPointSearch,
) -> Result<(Vec<f64>, f64)> {
    let mut state = start.to_state();
    let mut g = displaced_residual(system, k, &state, shift)?;
    let mut res = g.norm();
    for _ in 0..search.max_iterations {
        if res <= search.polish {
            break;
        }
        let step = pseudo_inverse_step(&displaced_jacobian(system, k, &state, shift)?, &g, search.truncation)?;
        let mut lambda = 1.0;
        let mut improved = None;
        for _ in 0..30 {
            let trial: Vec<f64> = state.iter().zip(step.iter()).map(|(s, d)| s + lambda * d).collect();
            if in_bundle(&trial) {
                if let Ok(tg) = displaced_residual(system, k, &trial, shift) {
                    if tg.norm() < res {
                        improved = Some((trial, tg));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match improved {
            Some((s, tg)) => {
                res = tg.norm();
                state = s;
                g = tg;
            }
            None => break,
        }
    }
    Ok((state, res))
}

/// Residual of the chain `x_{i+1} = f_{i+1}(x_i)`, closed by `f_k(x_{k−1}) = x_0 + (v, 0)`.
fn chain_residual(system: &SequentialSystem, chain: &[Vec<f64>], shift: &[f64]) -> Result<DVector<f64>> {
    let (k, m, n) = (chain.len(), chain[0].len(), shift.len());
    let mut out = DVector::zeros(k * m);
    for (i, x) in chain.iter().enumerate() {
        let image = system.apply(i + 1, &LiftedPoint::from_state(x))?.to_state();
        for j in 0..m {
            let next = if i + 1 < k { chain[i + 1][j] } else { chain[0][j] + if j < n { shift[j] } else { 0.0 } };
            out[i * m + j] = image[j] - next;
        }
    }
    Ok(out)
}

fn chain_jacobian(system: &SequentialSystem, chain: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let (k, m) = (chain.len(), chain[0].len());
    let blocks: Vec<DMatrix<f64>> = chain
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut block = DMatrix::zeros(m, m);
            for j in 0..m {
                let (mut plus, mut minus) = (x.clone(), x.clone());
                plus[j] += JACOBIAN_STEP;
                minus[j] -= JACOBIAN_STEP;
                let fp = system.apply(i + 1, &LiftedPoint::from_state(&plus))?.to_state();
                let fm = system.apply(i + 1, &LiftedPoint::from_state(&minus))?.to_state();
                for r in 0..m {
                    block[(r, j)] = (fp[r] - fm[r]) / (2.0 * JACOBIAN_STEP);
                }
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;
    let mut jac = DMatrix::zeros(k * m, k * m);
    for (i, block) in blocks.iter().enumerate() {
        jac.view_mut((i * m, i * m), (m, m)).copy_from(block);
        let next = (i + 1) % k;
        for r in 0..m {
            jac[(i * m + r, next * m + r)] -= 1.0;
        }
    }
    Ok(jac)
}

/// Multiple-shooting Newton on the whole chain, which spreads the closing
/// error over all `k` steps instead of one badly conditioned composite.
fn chain_newton(
    system: &SequentialSystem,
    mut chain: Vec<Vec<f64>>,
    shift: &[f64],
    search: &FixedPointSearch,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let m = chain[0].len();
    let mut g = chain_residual(system, &chain, shift)?;
    let mut res = g.norm();
    for _ in 0..search.max_iterations {
        if res <= search.polish {
            break;
        }
        let step = pseudo_inverse_step(&chain_jacobian(system, &chain)?, &g, search.truncation)?;
        let mut lambda = 1.0;
        let mut improved = None;
        for _ in 0..30 {
            let trial: Vec<Vec<f64>> = chain
                .iter()
                .enumerate()
                .map(|(i, x)| x.iter().enumerate().map(|(j, v)| v + lambda * step[i * m + j]).collect())
                .collect();
            if trial.iter().all(|x: &Vec<f64>| in_bundle(x)) {
                if let Ok(tg) = chain_residual(system, &trial, shift) {
                    if tg.norm() < res {
                        improved = Some((trial, tg));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match improved {
            Some((c, tg)) => {
                res = tg.norm();
                chain = c;
                g = tg;
            }
            None => break,
        }
    }
    Ok((chain, res))
}

/// Searches for `x ∈ Q` with `f^{(k)}(x) = x + (v, 0)` for each `v`, sharing
/// the orbits of the seed grid. Candidates are refined by multiple shooting
/// and then polished on the composite map.
pub fn theorem_a_scan(
    system: &PerturbedSystem,
    k: usize,
    displacements: &[HomotopyClass],
    search: &FixedPointSearch,
) -> Result<Vec<TheoremAReport>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let n = system.dim();
    if let Some(v) = displacements.iter().find(|v| v.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: v.dim() });
    }
    if search.resolution == 0 || search.candidates == 0 {
        return Err(Error::InvalidInput("search needs a nonempty seed grid and at least one candidate".into()));
    }
    let threshold = k as f64 * (system.c - system.a);
    let sequential = system.to_sequential();
    let searched = |v: &HomotopyClass| search.beyond_hypothesis || v.norm() < threshold;
    let seeds = if displacements.iter().any(searched) { sample_fundamental_domain(n, search.resolution, search.momentum_cap)? } else { Vec::new() };
    let paths: Vec<Option<Vec<Vec<f64>>>> = seeds
        .par_iter()
        .map(|x| {
            let mut path = vec![x.to_state()];
            let mut y = x.clone();
            for i in 1..=k {
                y = sequential.apply(i, &y).ok()?;
                path.push(y.to_state());
            }
            Some(path)
        })
        .collect();
    let mut reports = Vec::with_capacity(displacements.len());
    for v in displacements {
        let mut report = TheoremAReport {
            k,
            displacement: v.clone(),
            level: system.c,
            bound: system.a,
            threshold,
            hypothesis_met: v.norm() < threshold,
            found: false,
            point: None,
            image: None,
            residual: f64::INFINITY,
            seeds: seeds.len(),
            newton_runs: 0,
        };
        if !searched(v) {
            reports.push(report);
            continue;
        }
        let shift = v.as_f64();
        let mut ranked: Vec<(f64, usize)> = paths
            .iter()
            .enumerate()
            .filter_map(|(i, path)| {
                let path = path.as_ref()?;
                let (x, img) = (&path[0], &path[k]);
                let r: f64 = (0..2 * n).map(|j| img[j] - x[j] - if j < n { shift[j] } else { 0.0 }).map(|d| d * d).sum();
                Some((r.sqrt(), i))
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, i) in ranked.iter().take(search.candidates) {
            report.newton_runs += 1;
            let chain = paths[i].as_ref().expect("ranked seeds have orbits")[..k].to_vec();
            let Ok((chain, _)) = chain_newton(&sequential, chain, &shift, search) else { continue };
            let Ok((state, res)) = displaced_newton(&sequential, k, &LiftedPoint::from_state(&chain[0]), &shift, search) else { continue };
            if res < report.residual {
                report.residual = res;
            }
            if res <= search.accept {
                let x = LiftedPoint::from_state(&state);
                let back = HomotopyClass(x.q.iter().map(|q| -(q.round() as i64)).collect());
                let x = deck_transform(&x, &back)?;
                report.image = Some(sequential.compose(k, &x)?);
                report.point = Some(x);
                report.found = true;
                break;
            }
        }
        reports.push(report);
    }
    Ok(reports)
}
pub fn theorem_a_fixed_point_check(
    system: &PerturbedSystem,
    k: usize,
    v: &HomotopyClass,
    search: &FixedPointSearch,
) -> Result<TheoremAReport> {
    Ok(theorem_a_scan(system, k, std::slice::from_ref(v), search)?.remove(0))
}

/// Base point `y ↦` Hamiltonian generating the fibre map over `y`.
pub type FieldFamily = Arc<dyn Fn(&[f64]) -> Result<HamiltonianField> + Send + Sync>;

/// `S(x, y) = (g(y)(x), y + α)` on the lifted bundle times the base torus `T^d`.
#[derive(Clone)]
pub struct SkewProductSystem {
    dim: usize,
    alpha: Vec<f64>,
    y0: Vec<f64>,
    family: FieldFamily,
    settings: IntegratorSettings,
}

impl fmt::Debug for SkewProductSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkewProductSystem").field("dim", &self.dim).field("alpha", &self.alpha).field("y0", &self.y0).finish()
    }
}

/// `(√5 − 1)/2`, the fractional part of the golden ratio.
pub fn golden_fraction() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

impl SkewProductSystem {
    pub fn new(dim: usize, alpha: Vec<f64>, y0: Vec<f64>, family: FieldFamily, settings: IntegratorSettings) -> Result<Self> {
        if dim == 0 || alpha.is_empty() {
            return Err(Error::InvalidInput("fibre and base dimensions must be positive".into()));
        }
        if alpha.len() != y0.len() {
            return Err(Error::DimensionMismatch { expected: alpha.len(), found: y0.len() });
        }
        if !alpha.iter().chain(&y0).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("rotation vector and base point must be finite".into()));
        }
        settings.validate()?;
        let y0 = y0.iter().map(|y| y.rem_euclid(1.0)).collect();
        Ok(Self { dim, alpha, y0, family, settings })
    }

    /// `g(y) = field` for every `y`.
    pub fn constant(field: HamiltonianField, alpha: Vec<f64>, y0: Vec<f64>, settings: IntegratorSettings) -> Result<Self> {
        let n = field.dim();
        Self::new(n, alpha, y0, Arc::new(move |_| Ok(field.clone())), settings)
    }

    /// `g(y) = (1 + ε · mean_j cos 2π y_j) · f(|p|)` with `|ε| < 1`.
    pub fn modulated(
        n: usize,
        profile: ProfileFunction,
        amplitude: f64,
        alpha: Vec<f64>,
        y0: Vec<f64>,
        settings: IntegratorSettings,
    ) -> Result<Self> {
        if !(amplitude.abs() < 1.0) {
            return Err(Error::InvalidInput(format!("modulation amplitude {amplitude} must be below 1")));
        }
        let family: FieldFamily = Arc::new(move |y: &[f64]| {
            let mean = y.iter().map(|v| (std::f64::consts::TAU * v).cos()).sum::<f64>() / y.len() as f64;
            scaled_momentum_hamiltonian(n, profile.clone(), 1.0 + amplitude * mean)
        });
        Self::new(n, alpha, y0, family, settings)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base_dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn initial_base_point(&self) -> &[f64] {
        &self.y0
    }

    pub fn field_at(&self, y: &[f64]) -> Result<HamiltonianField> {
        let field = (self.family)(y)?;
        if field.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: field.dim() });
        }
        Ok(field)
    }

    pub fn rotate(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.alpha).map(|(y, a)| (y + a).rem_euclid(1.0)).collect()
    }

    /// One step of `S` and its `q`-displacement; momentum-only fibres use the
    /// closed form, so their displacement is the velocity itself.
    pub fn step(&self, x: &LiftedPoint, y: &[f64]) -> Result<(LiftedPoint, Vec<f64>, Vec<f64>)> {
        if x.dim() != self.dim || y.len() != self.base_dim() {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        let field = self.field_at(y)?;
        let mut v = vec![0.0; self.dim];
        let (next, displacement) = if field.is_momentum_only() && field.model().momentum_velocity(&x.p, &mut v) {
            let q = x.q.iter().zip(&v).map(|(q, v)| q + v).collect();
            (LiftedPoint::from_parts(q, x.p.clone()), v)
        } else {
            let next = TimeOneMap::new(field, self.settings)?.apply(x)?;
            let d = next.q.iter().zip(&x.q).map(|(a, b)| a - b).collect();
            (next, d)
        };
        Ok((next, self.rotate(y), displacement))
    }

    /// The sequence `f_i = g(y0 + (i − 1) α)`.
    pub fn to_sequential(&self) -> SequentialSystem {
        SequentialSystem::new(self.clone())
    }
}

impl SequentialMap for SkewProductSystem {
    fn kind(&self) -> SystemKind {
        SystemKind::SkewProduct
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, index: usize, x: &LiftedPoint) -> Result<LiftedPoint> {
        if index == 0 {
            return Err(Error::InvalidInput("sequential indices start at 1".into()));
        }
        let y: Vec<f64> =
            self.y0.iter().zip(&self.alpha).map(|(y, a)| (y + (index - 1) as f64 * a).rem_euclid(1.0)).collect();
        Ok(self.step(x, &y)?.0)
    }
}

/// Running mean `m_{i+1} = m_i + (w_i − m_i)/(i + 1)`; constant inputs are
/// reproduced exactly.
struct RunningMean {
    mean: Vec<f64>,
    count: usize,
}

impl RunningMean {
    fn new(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], count: 0 }
    }

    fn push(&mut self, w: &[f64]) {
        self.count += 1;
        let inv = self.count as f64;
        for (m, v) in self.mean.iter_mut().zip(w) {
            *m += (v - *m) / inv;
        }
    }
}

/// `(1/N) Σ_{i<N} u(S^i(z0))` for the `q`-displacement `u` of one step.
pub fn birkhoff_average(system: &SkewProductSystem, x0: &LiftedPoint, y0: &[f64], steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidInput("need at least one step".into()));
    }
    let mut mean = RunningMean::new(system.dim());
    let (mut x, mut y) = (x0.clone(), y0.to_vec());
    for _ in 0..steps {
        let (nx, ny, u) = system.step(&x, &y)?;
        mean.push(&u);
        x = nx;
        y = ny;
    }
    Ok(mean.mean)
}

/// Birkhoff average of an arbitrary observable `w(x, y)` along `S`.
pub fn birkhoff_average_with<F>(
    system: &SkewProductSystem,
    x0: &LiftedPoint,
    y0: &[f64],
    steps: usize,
    observable: F,
) -> Result<Vec<f64>>
where
    F: Fn(&LiftedPoint, &[f64]) -> Vec<f64>,
{
    if steps == 0 {
        return Err(Error::InvalidInput("need at least one step".into()));
    }
    let (mut x, mut y) = (x0.clone(), y0.to_vec());
    let first = observable(&x, &y);
    let mut mean = RunningMean::new(first.len());
    mean.push(&first);
    for _ in 1..steps {
        let (nx, ny, _) = system.step(&x, &y)?;
        x = nx;
        y = ny;
        mean.push(&observable(&x, &y));
    }
    Ok(mean.mean)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotationSample {
    pub seed: LiftedPoint,
    pub base: Vec<f64>,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotationSetEstimate {
    pub dim: usize,
    pub horizon: usize,
    pub samples: Vec<RotationSample>,
    /// Hull vertices, counter-clockwise for `n = 2`, `[min, max]` for `n = 1`.
    pub hull: Vec<Vec<f64>>,
    pub inscribed_radius: f64,
    pub extremal_points: Vec<Vec<f64>>,
    /// Samples within [`VERTEX_PROXIMITY`] of each extremal point.
    pub near_vertex_counts: Vec<usize>,
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain hull, counter-clockwise, collinear points dropped.
fn planar_hull(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Vec<f64>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Vec<f64>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn hull_of(dim: usize, vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if dim == 1 {
        let lo = vectors.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = vectors.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            vec![vec![lo]]
        } else {
            vec![vec![lo], vec![hi]]
        }
    } else {
        planar_hull(vectors)
    }
}

fn edge_distance(a: &[f64], b: &[f64], z: &[f64]) -> f64 {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    cross(a, b, z) / len
}

impl RotationSetEstimate {
    /// Whether `v` lies in the hull up to `tolerance`.
    pub fn contains(&self, v: &[f64], tolerance: f64) -> bool {
        match (self.dim, self.hull.len()) {
            (1, _) => {
                let (lo, hi) = (self.hull[0][0], self.hull[self.hull.len() - 1][0]);
                v[0] >= lo - tolerance && v[0] <= hi + tolerance
            }
            (_, 1) => norm(&[v[0] - self.hull[0][0], v[1] - self.hull[0][1]]) <= tolerance,
            (_, 2) => {
                let (a, b) = (&self.hull[0], &self.hull[1]);
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let t = (((v[0] - a[0]) * dx + (v[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
                norm(&[v[0] - a[0] - t * dx, v[1] - a[1] - t * dy]) <= tolerance
            }
            (_, m) => (0..m).all(|i| edge_distance(&self.hull[i], &self.hull[(i + 1) % m], v) >= -tolerance),
        }
    }

    pub fn to_csv(&self) -> String {
        let n = self.dim;
        let d = self.samples.first().map_or(0, |s| s.base.len());
        let mut cols: Vec<String> = (1..=n).map(|i| format!("seed_q{i}")).collect();
        cols.extend((1..=n).map(|i| format!("seed_p{i}")));
        cols.extend((1..=d).map(|i| format!("base_y{i}")));
        cols.extend((1..=n).map(|i| format!("v{i}")));
        let mut out = cols.join(",");
        out.push('\n');
        for s in &self.samples {
            let row: Vec<String> = s.seed.q.iter().chain(&s.seed.p).chain(&s.base).chain(&s.vector).map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Rotation vectors `(q_k − q_0)/k` from `sample_count` quasi-random seeds in
/// `Q × T^d`, with their hull for `n ≤ 2`.
pub fn rotation_set_estimate(system: &SkewProductSystem, sample_count: usize, k: usize) -> Result<RotationSetEstimate> {
    let (n, d) = (system.dim(), system.base_dim());
    if n > 2 {
        return Err(Error::Precondition(format!("rotation-set hulls are limited to n ≤ 2, got n = {n}")));
    }
    if sample_count == 0 || k == 0 {
        return Err(Error::InvalidInput("need at least one sample and one step".into()));
    }
    let cap = 0.98;
    let mut seeds = Vec::with_capacity(sample_count);
    let mut index = 0;
    while seeds.len() < sample_count {
        let h = halton(index, 2 * n + d);
        index += 1;
        let p: Vec<f64> = h[n..2 * n].iter().map(|x| cap * (2.0 * x - 1.0)).collect();
        if norm(&p) <= cap {
            let q = h[..n].iter().map(|x| x - 0.5).collect();
            seeds.push((LiftedPoint::from_parts(q, p), h[2 * n..].to_vec()));
        }
    }
    let samples: Vec<RotationSample> = seeds
        .into_par_iter()
        .map(|(seed, base)| {
            let (mut x, mut y) = (seed.clone(), base.clone());
            for _ in 0..k {
                let (nx, ny, _) = system.step(&x, &y)?;
                x = nx;
                y = ny;
            }
            let vector = x.q.iter().zip(&seed.q).map(|(a, b)| (a - b) / k as f64).collect();
            Ok(RotationSample { seed, base, vector })
        })
        .collect::<Result<_>>()?;
    let vectors: Vec<Vec<f64>> = samples.iter().map(|s| s.vector.clone()).collect();
    let hull = hull_of(n, &vectors);
    let origin = vec![0.0; n];
    let inscribed_radius = match (n, hull.len()) {
        (1, 2) => hull[1][0].min(-hull[0][0]).max(0.0),
        (2, m) if m >= 3 => (0..m).map(|i| edge_distance(&hull[i], &hull[(i + 1) % m], &origin)).fold(f64::INFINITY, f64::min).max(0.0),
        _ => 0.0,
    };
    let near_vertex_counts = hull
        .iter()
        .map(|v| vectors.iter().filter(|w| norm(&w.iter().zip(v).map(|(a, b)| a - b).collect::<Vec<_>>()) <= VERTEX_PROXIMITY).count())
        .collect();
    let estimate = RotationSetEstimate {
        dim: n,
        horizon: k,
        samples,
        extremal_points: hull.clone(),
        hull,
        inscribed_radius,
        near_vertex_counts,
    };
    if let Some(bad) = vectors.iter().find(|v| !estimate.contains(v, HULL_TOLERANCE * (1.0 + norm(v)))) {
        return Err(Error::Audit(format!("hull misses rotation vector {bad:?}")));
    }
    Ok(estimate)
}

/// `u` moves every `|s| < 3/4` strictly upwards; the gap is only
/// representable in floating point away from the ends.
const STRICT_WINDOW: f64 = 0.7;
const CROSSING_CAP: usize = 1_000_000;
const DAMPED_EDGE: f64 = 0.75;

/// `s ↦ sinh(tan(2πs/3))`, an increasing bijection `(−3/4, 3/4) → ℝ`.
fn damped_chart(s: f64) -> f64 {
    (std::f64::consts::TAU * s / 3.0).tan().sinh()
}

fn damped_chart_inverse(z: f64) -> f64 {
    3.0 / std::f64::consts::TAU * z.asinh().atan()
}

/// `f = φ ∘ h` on `T × (−1, 1)`: `h` is the time-one map of
/// `H(p) = cos²(πp)` on `|p| < 1/2`, and `φ(q, p) = (q, u(p))` with `u` the
/// chart translation `z ↦ z + δ`, extended by the identity for `|p| ≥ 3/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampedSystem {
    /// `max |H'|`, measured on a dense grid.
    pub gamma: f64,
    /// Translation `δ` in the chart.
    pub shift: f64,
    /// `N = min {k : u^k(−2/3) > 2/3}`.
    pub crossing_steps: usize,
}

impl DampedSystem {
    /// Chooses `δ` so that `u` needs exactly `steps` iterates to cross from `−2/3` past `2/3`.
    pub fn with_crossing_steps(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidInput("crossing steps must be positive".into()));
        }
        Self::with_shift(2.0 * damped_chart(2.0 / 3.0) / (steps as f64 - 0.5))
    }

    pub fn with_shift(shift: f64) -> Result<Self> {
        if !(shift > 0.0 && shift.is_finite()) {
            return Err(Error::Construction { clause: format!("shift {shift} must be positive") });
        }
        let gamma = (0..=100_000).map(|j| Self::slope(-0.5 + j as f64 * 1e-5).abs()).fold(0.0, f64::max);
        let mut spec = Self { gamma, shift, crossing_steps: 0 };
        let mut s = -2.0 / 3.0;
        let mut steps = 0;
        while s <= 2.0 / 3.0 {
            if steps >= CROSSING_CAP {
                return Err(Error::Construction { clause: format!("u does not cross within {CROSSING_CAP} steps") });
            }
            s = spec.momentum_map(s);
            steps += 1;
        }
        spec.crossing_steps = steps;
        spec.validate()?;
        Ok(spec)
    }

    /// `H(p) = cos²(πp)` on `|p| < 1/2`, else 0.
    pub fn hamiltonian(p: f64) -> f64 {
        if p.abs() < 0.5 {
            (std::f64::consts::PI * p).cos().powi(2)
        } else {
            0.0
        }
    }

    /// `H'(p) = −π sin(2πp)` on `|p| < 1/2`, else 0.
    pub fn slope(p: f64) -> f64 {
        if p.abs() < 0.5 {
            -std::f64::consts::PI * (std::f64::consts::TAU * p).sin()
        } else {
            0.0
        }
    }

    /// The momentum diffeomorphism `u`.
    pub fn momentum_map(&self, s: f64) -> f64 {
        if s.abs() >= DAMPED_EDGE {
            return s;
        }
        damped_chart_inverse(damped_chart(s) + self.shift).clamp(-DAMPED_EDGE, DAMPED_EDGE).max(s)
    }

    /// `(N + 1) γ`.
    pub fn bound(&self) -> f64 {
        (self.crossing_steps as f64 + 1.0) * self.gamma
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.shift > 0.0) || self.crossing_steps == 0 {
            return Err(Error::Construction { clause: "damped system parameters must be positive".into() });
        }
        if self.momentum_map(DAMPED_EDGE) != DAMPED_EDGE || self.momentum_map(-DAMPED_EDGE) != -DAMPED_EDGE {
            return Err(Error::Construction { clause: "u must fix ±3/4".into() });
        }
        let grid: Vec<f64> = (0..=4000).map(|j| -1.0 + j as f64 / 2000.0).collect();
        let mut previous = f64::NEG_INFINITY;
        for &s in &grid {
            let u = self.momentum_map(s);
            if u < previous {
                return Err(Error::Construction { clause: format!("u decreases at {s}") });
            }
            if u < s || (s.abs() <= STRICT_WINDOW && u <= s) {
                return Err(Error::Construction { clause: format!("u fails to move {s} upwards") });
            }
            if s.abs() >= DAMPED_EDGE && u != s {
                return Err(Error::Construction { clause: format!("u is not the identity at {s}") });
            }
            previous = u;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct DampedMap {
    spec: DampedSystem,
}

impl SequentialMap for DampedMap {
    fn kind(&self) -> SystemKind {
        SystemKind::Damped
    }
    fn dim(&self) -> usize {
        1
    }
    fn apply(&self, _index: usize, x: &LiftedPoint) -> Result<LiftedPoint> {
        if x.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: x.dim() });
        }
        let p = x.p[0];
        Ok(LiftedPoint::from_parts(vec![x.q[0] + DampedSystem::slope(p)], vec![self.spec.momentum_map(p)]))
    }
}

pub fn build_damped_system(spec: &DampedSystem) -> Result<SequentialSystem> {
    spec.validate()?;
    Ok(SequentialSystem::new(DampedMap { spec: *spec }))
}

/// `count` points at `q = 0` with momenta evenly spread over `(−1, 1)`.
pub fn damped_grid(count: usize) -> Vec<LiftedPoint> {
    (0..count)
        .map(|j| LiftedPoint::from_parts(vec![0.0], vec![-1.0 + (2 * j + 1) as f64 / count as f64]))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DampedBoundReport {
    pub max_displacement: f64,
    pub bound: f64,
    pub holds: bool,
    pub momentum_nondecreasing: bool,
    pub worst_start: Option<LiftedPoint>,
}

/// `max_{x ∈ grid, i ≤ k} |q_i − q_0|` against `(N + 1) γ`.
pub fn verify_damped_bound(spec: &DampedSystem, grid: &[LiftedPoint], k: usize) -> Result<DampedBoundReport> {
    let system = build_damped_system(spec)?;
    let mut report = DampedBoundReport {
        max_displacement: 0.0,
        bound: spec.bound(),
        holds: true,
        momentum_nondecreasing: true,
        worst_start: None,
    };
    for x0 in grid {
        let mut x = x0.clone();
        for i in 1..=k {
            let next = system.apply(i, &x)?;
            report.momentum_nondecreasing &= next.p[0] >= x.p[0];
            x = next;
            let d = (x.q[0] - x0.q[0]).abs();
            if d > report.max_displacement {
                report.max_displacement = d;
                report.worst_start = Some(x0.clone());
            }
        }
    }
    report.holds = report.max_displacement <= report.bound + 1e-9;
    Ok(report)
}
