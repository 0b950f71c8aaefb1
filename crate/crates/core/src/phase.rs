//! Phase space of the unit cotangent bundle `Tⁿ × Dⁿ` and its universal
//! cover `ℝⁿ × Dⁿ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(q, p)` on the universal cover `ℝⁿ × Dⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedPoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// A point on `Tⁿ × Dⁿ` with every `q` component reduced into `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// Homotopy class of a loop in `Tⁿ`, identified with an integer vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomotopyClass(pub Vec<i64>);

/// The fundamental domain `Q = {max |q_i| ≤ 1/2, |p| < 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FundamentalDomain {
    pub dim: usize,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl LiftedPoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), found: p.len() });
        }
        if !(q.iter().chain(p.iter()).all(|x| x.is_finite())) {
            return Err(Error::InvalidInput("coordinates must be finite".into()));
        }
        let pn = norm(&p);
        if pn >= 1.0 {
            return Err(Error::InvalidInput(format!("|p| = {pn} is not below 1")));
        }
        Ok(Self { q, p })
    }

    /// Builds a point without validation; callers guarantee the invariants.
    pub(crate) fn from_parts(q: Vec<f64>, p: Vec<f64>) -> Self {
        Self { q, p }
    }

    pub fn origin(dim: usize) -> Self {
        Self { q: vec![0.0; dim], p: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn momentum_norm(&self) -> f64 {
        norm(&self.p)
    }

    /// State vector `(q, p)` of length `2n`.
    pub fn to_state(&self) -> Vec<f64> {
        let mut s = self.q.clone();
        s.extend_from_slice(&self.p);
        s
    }

    pub fn from_state(state: &[f64]) -> Self {
        let n = state.len() / 2;
        Self { q: state[..n].to_vec(), p: state[n..].to_vec() }
    }

    /// Max-norm distance between two lifted points.
    pub fn distance(&self, other: &LiftedPoint) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl HomotopyClass {
    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Euclidean length, with the sum of squares formed exactly in integers.
    pub fn norm(&self) -> f64 {
        let sq: i128 = self.0.iter().map(|&e| (e as i128) * (e as i128)).sum();
        (sq as f64).sqrt()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&e| e as f64).collect()
    }
}

/// Reduces `x` into `[0, 1)`, sending exact integers to zero.
fn reduce_mod_one(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Covering projection `ℝⁿ × Dⁿ → Tⁿ × Dⁿ`.
pub fn project(x: &LiftedPoint) -> BasePoint {
    BasePoint { q: x.q.iter().map(|&v| reduce_mod_one(v)).collect(), p: x.p.clone() }
}

/// Deck transformation `(q, p) ↦ (q + e, p)`.
pub fn deck_transform(x: &LiftedPoint, e: &HomotopyClass) -> Result<LiftedPoint> {
    if e.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: e.dim() });
    }
    let q = x.q.iter().zip(&e.0).map(|(q, &k)| q + k as f64).collect();
    Ok(LiftedPoint::from_parts(q, x.p.clone()))
}

impl FundamentalDomain {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn contains(&self, x: &LiftedPoint) -> bool {
        x.dim() == self.dim
            && x.q.iter().all(|q| q.abs() <= 0.5)
            && x.momentum_norm() < 1.0
    }

    /// Max distance from a point of `[-1/2, 1/2]ⁿ` to the nearest node of
    /// the tensor grid with `resolution` nodes per axis.
    pub fn grid_dispersion(&self, resolution: usize) -> f64 {
        let half_cell = if resolution <= 1 { 0.5 } else { 0.5 / (resolution - 1) as f64 };
        half_cell * (self.dim as f64).sqrt()
    }
}

fn axis_nodes(resolution: usize, half_width: f64) -> Vec<f64> {
    if resolution == 1 {
        return vec![0.0];
    }
    (0..resolution)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (resolution - 1) as f64)
        .collect()
}

fn tensor_grid(axis: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

/// Deterministic rectangular grid over `[-1/2, 1/2]ⁿ × [-cap, cap]ⁿ`,
/// keeping only momenta with `|p| ≤ cap`.
pub fn sample_fundamental_domain(
    dim: usize,
    resolution: usize,
    momentum_cap: f64,
) -> Result<Vec<LiftedPoint>> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if resolution == 0 {
        return Err(Error::InvalidInput("resolution must be at least 1".into()));
    }
    if !(momentum_cap > 0.0 && momentum_cap < 1.0) {
        return Err(Error::InvalidInput(format!("momentum cap {momentum_cap} must lie in (0, 1)")));
    }
    let qs = tensor_grid(&axis_nodes(resolution, 0.5), dim);
    let ps: Vec<Vec<f64>> = tensor_grid(&axis_nodes(resolution, momentum_cap), dim)
        .into_iter()
        .filter(|p| norm(p) <= momentum_cap)
        .collect();
    let mut out = Vec::with_capacity(qs.len() * ps.len());
    for q in &qs {
        for p in &ps {
            out.push(LiftedPoint::from_parts(q.clone(), p.clone()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(q: &[f64], p: &[f64]) -> LiftedPoint {
        LiftedPoint::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project(&pt(&[0.0], &[0.3])).q, vec![0.0]);
        assert_eq!(project(&pt(&[1.75], &[0.3])).q, vec![0.75]);
        let b = project(&pt(&[-0.25, 2.5], &[0.1, 0.2]));
        assert_eq!(b.q, vec![0.75, 0.5]);
        assert_eq!(b.p, vec![0.1, 0.2]);
        assert_eq!(project(&pt(&[-3.0], &[0.0])).q, vec![0.0]);
    }

    #[test]
    fn deck_examples() {
        let x = pt(&[0.1], &[0.2]);
        assert_eq!(deck_transform(&x, &HomotopyClass(vec![0])).unwrap(), x);
        assert_eq!(deck_transform(&x, &HomotopyClass(vec![3])).unwrap().q, vec![3.1]);
        let y = deck_transform(&pt(&[0.5, -0.5], &[0.0, 0.0]), &HomotopyClass(vec![1, -2])).unwrap();
        assert_eq!(y.q, vec![1.5, -2.5]);
        assert!(deck_transform(&x, &HomotopyClass(vec![1, 1])).is_err());
    }

    #[test]
    fn rejects_points_outside_the_bundle() {
        assert!(LiftedPoint::new(vec![0.0, 0.0], vec![0.8, 0.6]).is_err());
        assert!(LiftedPoint::new(vec![0.0], vec![0.0, 0.0]).is_err());
        assert!(LiftedPoint::new(vec![], vec![]).is_err());
    }

    #[test]
    fn class_norm_is_exact() {
        assert_eq!(HomotopyClass(vec![3, 4]).norm(), 5.0);
        assert_eq!(HomotopyClass(vec![0, 0]).norm(), 0.0);
    }

    #[test]
    fn fundamental_domain_samples() {
        let one = sample_fundamental_domain(1, 1, 0.5).unwrap();
        assert_eq!(one, vec![LiftedPoint::origin(1)]);

        let nine = sample_fundamental_domain(1, 3, 0.6).unwrap();
        assert_eq!(nine.len(), 9);
        let qs: Vec<f64> = nine.iter().map(|x| x.q[0]).collect();
        assert!(qs.contains(&-0.5) && qs.contains(&0.0) && qs.contains(&0.5));

        // Oracle: enumerate the 2x2 momentum grid {-0.5, 0.5}^2 and filter by
        // |p| <= 0.5; every corner has norm 0.5*sqrt(2) > 0.5, so nothing survives.
        let mut kept = 0;
        for a in [-0.5f64, 0.5] {
            for b in [-0.5f64, 0.5] {
                if (a * a + b * b).sqrt() <= 0.5 {
                    kept += 4;
                }
            }
        }
        assert_eq!(sample_fundamental_domain(2, 2, 0.5).unwrap().len(), kept);
        assert_eq!(kept, 0);

        let dom = FundamentalDomain::new(2);
        assert!(sample_fundamental_domain(2, 5, 0.7).unwrap().iter().all(|x| dom.contains(x)));
        assert!(sample_fundamental_domain(1, 3, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_deck_invariant(
            q in prop::collection::vec(-5.0f64..5.0, 2),
            p in prop::collection::vec(-0.5f64..0.5, 2),
            e in prop::collection::vec(-3i64..=3, 2),
        ) {
            let x = LiftedPoint::new(q, p).unwrap();
            let moved = deck_transform(&x, &HomotopyClass(e)).unwrap();
            let (a, b) = (project(&x), project(&moved));
            for (u, v) in a.q.iter().zip(&b.q) {
                // mod-1 of values that differ by an integer; compare on the circle
                let d = (u - v).abs();
                prop_assert!(d < 1e-12 || (1.0 - d) < 1e-12);
                prop_assert!(*u >= 0.0 && *u < 1.0);
            }
            prop_assert_eq!(a.p, b.p);
        }

        #[test]
        fn deck_transforms_compose(
            q in prop::collection::vec(-5.0f64..5.0, 3),
            e1 in prop::collection::vec(-3i64..=3, 3),
            e2 in prop::collection::vec(-3i64..=3, 3),
        ) {
            let x = LiftedPoint::new(q, vec![0.1, 0.0, -0.2]).unwrap();
            let sum: Vec<i64> = e1.iter().zip(&e2).map(|(a, b)| a + b).collect();
            let twice = deck_transform(&deck_transform(&x, &HomotopyClass(e1)).unwrap(), &HomotopyClass(e2)).unwrap();
            let once = deck_transform(&x, &HomotopyClass(sum)).unwrap();
            prop_assert!(twice.distance(&once) < 1e-12);
        }
    }
}
