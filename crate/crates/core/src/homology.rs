//! Filtered symplectic homology tables over GF(2), assembled from the two
//! profile families.
//!
//! Filtered Floer homology of a window containing exactly one connected
//! Morse–Bott manifold of orbits is taken to be the homology of that manifold.
//! Windows with two or more manifolds are indeterminate, with one exception: a
//! window `[a, ∞)` containing every orbit of a nontrivial class computes the
//! unfiltered homology, which vanishes in a nontrivial class. Nothing else is
//! inferred; in particular no Floer differential is ever guessed.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{build_profile_family, crossings, FamilyTag, ProfileFamilyMember};

/// A matrix over GF(2), one bit-packed word vector per row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64);
        Self { rows, cols, words, data: vec![0; rows * words] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) outside {}×{}", self.rows, self.cols);
        self.data[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) outside {}×{}", self.rows, self.cols);
        let w = &mut self.data[i * self.words + j / 64];
        if value {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words..(i + 1) * self.words]
    }

    /// The product `self · other`.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) {
                    let src = other.row(k).to_vec();
                    for (d, s) in out.data[i * out.words..(i + 1) * out.words].iter_mut().zip(src) {
                        *d ^= s;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> BitMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(pivot) = (rank..m.rows).find(|&r| m.get(r, col)) else { continue };
            if pivot != rank {
                for w in 0..m.words {
                    m.data.swap(pivot * m.words + w, rank * m.words + w);
                }
            }
            for r in 0..m.rows {
                if r != rank && m.get(r, col) {
                    for w in 0..m.words {
                        let v = m.data[rank * m.words + w];
                        m.data[r * m.words + w] ^= v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GF2Space {
    pub dimension: usize,
}

/// A linear map `source → target`, stored as a `target × source` matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GF2Map {
    pub source: GF2Space,
    pub target: GF2Space,
    matrix: BitMatrix,
}

impl GF2Map {
    pub fn new(source: GF2Space, target: GF2Space, matrix: BitMatrix) -> Result<Self> {
        if matrix.rows() != target.dimension || matrix.cols() != source.dimension {
            return Err(Error::DimensionMismatch { expected: target.dimension * source.dimension, found: matrix.rows() * matrix.cols() });
        }
        Ok(Self { source, target, matrix })
    }

    pub fn identity(space: GF2Space) -> Self {
        Self { source: space, target: space, matrix: BitMatrix::identity(space.dimension) }
    }

    pub fn zero(source: GF2Space, target: GF2Space) -> Self {
        Self { source, target, matrix: BitMatrix::zeros(target.dimension, source.dimension) }
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &GF2Map) -> Result<GF2Map> {
        if inner.target != self.source {
            return Err(Error::DimensionMismatch { expected: self.source.dimension, found: inner.target.dimension });
        }
        Ok(GF2Map { source: inner.source, target: self.target, matrix: self.matrix.mul(&inner.matrix)? })
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    pub fn is_iso(&self) -> bool {
        self.source.dimension == self.target.dimension && self.rank() == self.source.dimension
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.is_zero()
    }
}

/// The two geometries of the base manifold `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryCase {
    /// The flat torus `Tⁿ`.
    Torus { n: usize },
    /// A closed surface of negative curvature with the given genus (≥ 2).
    Negative { genus: usize },
}

impl GeometryCase {
    pub fn label(&self) -> String {
        match self {
            Self::Torus { n } => format!("T({n})"),
            Self::Negative { .. } => "N".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Torus { n } if n == 0 || n > 16 => Err(Error::InvalidInput(format!("torus dimension {n} outside 1..=16"))),
            Self::Negative { genus } if genus < 2 => Err(Error::InvalidInput(format!("negative curvature needs genus ≥ 2, got {genus}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassKind {
    Zero,
    /// A nontrivial class whose closed geodesics have length `ell`.
    Nonzero { ell: f64 },
}

impl ClassKind {
    fn label(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Nonzero { .. } => "nonzero",
        }
    }

    fn ell(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Nonzero { ell } => ell,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Nonzero { ell } if !(ell > 0.0 && ell.is_finite()) => Err(Error::InvalidInput(format!("geodesic length {ell} must be positive"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    TorusFamily { n: usize },
    Circle,
    ZeroSection { n: usize },
    Surface { genus: usize },
}

impl ManifoldKind {
    /// Total Betti number over GF(2).
    pub fn betti_total(&self) -> usize {
        match *self {
            Self::TorusFamily { n } | Self::ZeroSection { n } => 1 << n,
            Self::Circle => 2,
            Self::Surface { genus } => 2 + 2 * genus,
        }
    }
}

/// Which family of orbits a critical manifold belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitLabel {
    /// Constant orbits on the zero section.
    ZeroSection,
    /// `f'(r) = −ℓ`, the `k`-th such radius from the origin.
    Descending(usize),
    /// `f'(r) = +ℓ`, the `k`-th such radius from the origin.
    Ascending(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalManifold {
    pub kind: ManifoldKind,
    pub label: OrbitLabel,
    pub radius: f64,
    pub action: f64,
    pub betti_total: usize,
}

impl CriticalManifold {
    fn new(kind: ManifoldKind, label: OrbitLabel, radius: f64, action: f64) -> Self {
        Self { kind, label, radius, action, betti_total: kind.betti_total() }
    }
}

/// Every orbit family of the member, including ascending ones of negative action.
fn all_critical_manifolds(member: &ProfileFamilyMember, class: ClassKind, case: GeometryCase) -> Vec<CriticalManifold> {
    let f = &member.profile;
    match class {
        ClassKind::Zero => {
            let kind = match case {
                GeometryCase::Torus { n } => ManifoldKind::ZeroSection { n },
                GeometryCase::Negative { genus } => ManifoldKind::Surface { genus },
            };
            vec![CriticalManifold::new(kind, OrbitLabel::ZeroSection, 0.0, f.value(0.0))]
        }
        ClassKind::Nonzero { ell } => {
            let kind = match case {
                GeometryCase::Torus { n } => ManifoldKind::TorusFamily { n },
                GeometryCase::Negative { .. } => ManifoldKind::Circle,
            };
            let down = crossings(f, -ell).into_iter().enumerate().map(|(k, r)| CriticalManifold::new(kind, OrbitLabel::Descending(k), r, f.value(r) + r * ell));
            let up = crossings(f, ell).into_iter().enumerate().map(|(k, r)| CriticalManifold::new(kind, OrbitLabel::Ascending(k), r, f.value(r) - r * ell));
            down.chain(up).collect()
        }
    }
}

/// Critical manifolds of `H = f_s(|p|)` in the given class: the zero section
/// for the trivial class, else the orbit families at `f' = ∓ℓ`, dropping
/// ascending ones of negative action.
pub fn critical_data(member: &ProfileFamilyMember, class: ClassKind, case: GeometryCase) -> Result<Vec<CriticalManifold>> {
    class.validate()?;
    case.validate()?;
    let expected = match class {
        ClassKind::Zero => FamilyTag::ZeroSectionFamily,
        ClassKind::Nonzero { .. } => FamilyTag::ClassFamily,
    };
    if member.tag != expected {
        return Err(Error::Precondition(format!("a {:?} member cannot serve the {} class", member.tag, class.label())));
    }
    if member.tag == FamilyTag::ClassFamily && member.ell != class.ell() {
        return Err(Error::Precondition(format!("member built for ell = {}, asked for ell = {}", member.ell, class.ell())));
    }
    let rebuilt = build_profile_family(member.tag, member.s, member.c, member.ell)?;
    if rebuilt.profile != member.profile {
        return Err(Error::Precondition("member profile differs from the family at its parameters".into()));
    }
    Ok(all_critical_manifolds(member, class, case)
        .into_iter()
        .filter(|m| !matches!(m.label, OrbitLabel::Ascending(_)) || m.action >= 0.0)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteredRank {
    pub rank: usize,
    pub determinate: bool,
}

/// Rank of filtered homology on `[a, ∞)`, determinate only when the window
/// holds at most one manifold.
pub fn filtered_rank(manifolds: &[CriticalManifold], a: f64) -> FilteredRank {
    let inside: Vec<&CriticalManifold> = manifolds.iter().filter(|m| m.action >= a).collect();
    match inside.as_slice() {
        [] => FilteredRank { rank: 0, determinate: true },
        [m] => FilteredRank { rank: m.betti_total, determinate: true },
        _ => FilteredRank { rank: 0, determinate: false },
    }
}

/// A chain `V_0 → V_1 → … → V_m` of GF(2) spaces, indexed in the direction
/// of decreasing Hamiltonians. Unknown transitions are `None`.
#[derive(Debug, Clone)]
pub struct BidirectedSystem {
    pub parameters: Vec<f64>,
    pub spaces: Vec<GF2Space>,
    pub transitions: Vec<Option<GF2Map>>,
}

#[derive(Debug, Clone)]
pub struct DirectLimit {
    pub space: GF2Space,
    /// `ι_k : V_k → lim`, for each `k` of the subchain.
    pub iota: Vec<GF2Map>,
}

#[derive(Debug, Clone)]
pub struct InverseLimit {
    pub space: GF2Space,
    /// `π_k : lim → V_k`, for each `k` of the subchain.
    pub pi: Vec<GF2Map>,
}

impl BidirectedSystem {
    pub fn new(parameters: Vec<f64>, spaces: Vec<GF2Space>, transitions: Vec<Option<GF2Map>>) -> Result<Self> {
        if spaces.is_empty() || parameters.len() != spaces.len() || transitions.len() + 1 != spaces.len() {
            return Err(Error::InvalidInput("need one parameter per space and one transition per adjacent pair".into()));
        }
        for (i, t) in transitions.iter().enumerate() {
            if let Some(t) = t {
                if t.source != spaces[i] || t.target != spaces[i + 1] {
                    return Err(Error::DimensionMismatch { expected: spaces[i].dimension, found: t.source.dimension });
                }
            }
        }
        Ok(Self { parameters, spaces, transitions })
    }

    /// A chain of identities on one space.
    pub fn constant(parameters: Vec<f64>, space: GF2Space) -> Result<Self> {
        let m = parameters.len();
        Self::new(parameters, vec![space; m], (1..m).map(|_| Some(GF2Map::identity(space))).collect())
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    /// The composite `V_from → V_to` for `from ≤ to`.
    pub fn transition(&self, from: usize, to: usize) -> Result<GF2Map> {
        if from > to || to >= self.len() {
            return Err(Error::InvalidInput(format!("no transition from {from} to {to}")));
        }
        let mut map = GF2Map::identity(self.spaces[from]);
        for i in from..to {
            let t = self.transitions[i].as_ref().ok_or_else(|| Error::Indeterminate(format!("transition {i} → {} is unknown", i + 1)))?;
            map = t.compose(&map)?;
        }
        Ok(map)
    }

    /// Checks that `(t_{k+1} ∘ t_k) ∘ M = t_{k+1} ∘ (t_k ∘ M)` along known stretches.
    pub fn audit_path_independence(&self) -> Result<()> {
        for k in 0..self.transitions.len().saturating_sub(1) {
            if let (Some(a), Some(b)) = (&self.transitions[k], &self.transitions[k + 1]) {
                let into = GF2Map::identity(self.spaces[k]);
                let left = b.compose(a)?.compose(&into)?;
                let right = b.compose(&a.compose(&into)?)?;
                if left != right {
                    return Err(Error::Audit(format!("composition around index {k} is not associative")));
                }
            }
        }
        Ok(())
    }

    /// Largest `k` such that `t_0, …, t_{k−1}` are known isomorphisms.
    pub fn downward_tail_end(&self) -> usize {
        self.transitions.iter().take_while(|t| t.as_ref().is_some_and(GF2Map::is_iso)).count()
    }

    /// Smallest `k` such that `t_k, …, t_{m−1}` are known isomorphisms.
    pub fn upward_tail_start(&self) -> usize {
        self.len() - 1 - self.transitions.iter().rev().take_while(|t| t.as_ref().is_some_and(GF2Map::is_iso)).count()
    }
}

fn check_range(system: &BidirectedSystem, from: usize, to: usize) -> Result<()> {
    if from > to || to >= system.len() {
        return Err(Error::InvalidInput(format!("subchain {from}..={to} is empty or outside the system")));
    }
    Ok(())
}

/// Colimit of the subchain `from..=to`: its last space, with `ι_k` the composites into it.
pub fn direct_limit(system: &BidirectedSystem, from: usize, to: usize) -> Result<DirectLimit> {
    check_range(system, from, to)?;
    let iota = (from..=to).map(|k| system.transition(k, to)).collect::<Result<_>>()?;
    Ok(DirectLimit { space: system.spaces[to], iota })
}

/// Limit of the subchain `from..=to`: its first space, with `π_k` the composites out of it.
pub fn inverse_limit(system: &BidirectedSystem, from: usize, to: usize) -> Result<InverseLimit> {
    check_range(system, from, to)?;
    let pi = (from..=to).map(|k| system.transition(from, k)).collect::<Result<_>>()?;
    Ok(InverseLimit { space: system.spaces[from], pi })
}

/// Parameters `s` of the cofinal family, largest first: `H_s` decreases along the list.
pub const S_GRID: [f64; 27] = [
    64.0, 48.0, 32.0, 24.0, 16.0, 12.0, 8.0, 6.0, 4.0, 3.0, 2.0, 1.5, 1.0, 0.5, 0.0, -0.5, -1.0, -1.5, -2.0, -3.0, -4.0, -6.0,
    -8.0, -12.0, -16.0, -20.0, -24.0,
];
/// The zero-section family loses its exact vanishing to round-off beyond `s = 24`.
const ZERO_CLASS_TOP: usize = 3;
/// Minimal number of stages of an exhausting tail.
pub const MIN_TAIL: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage {
    pub s: f64,
    pub head: f64,
    pub manifolds: Vec<CriticalManifold>,
    pub rank: usize,
    pub determinate: bool,
    /// Rank obtained from the full-window rule rather than a single manifold.
    pub full_window: bool,
}

fn stage(member: &ProfileFamilyMember, class: ClassKind, case: GeometryCase, a: f64) -> Stage {
    let all = all_critical_manifolds(member, class, case);
    let kept: Vec<CriticalManifold> =
        all.iter().copied().filter(|m| !matches!(m.label, OrbitLabel::Ascending(_)) || m.action >= 0.0).collect();
    let mut fr = filtered_rank(&kept, a);
    let mut full_window = false;
    if matches!(class, ClassKind::Nonzero { .. }) && !fr.determinate && all.iter().all(|m| m.action >= a) {
        fr = FilteredRank { rank: 0, determinate: true };
        full_window = true;
    }
    Stage {
        s: member.s,
        head: member.profile.value(0.0),
        manifolds: kept,
        rank: fr.rank,
        determinate: fr.determinate,
        full_window,
    }
}

/// Which manifolds sit in the window: equal signatures on both ends of a
/// monotone homotopy mean no action crossed `a`.
fn signature(stage: &Stage, a: f64) -> (Vec<(OrbitLabel, bool)>, bool) {
    let mut sig: Vec<(OrbitLabel, bool)> = stage.manifolds.iter().map(|m| (m.label, m.action >= a)).collect();
    sig.sort();
    (sig, stage.full_window)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShTable {
    pub case: GeometryCase,
    pub class: ClassKind,
    pub a: f64,
    pub c: f64,
    pub inverse_rank: usize,
    pub direct_rank: usize,
    pub t_rank: usize,
    pub t_is_iso: bool,
    /// Stages of the downward tail that computes the inverse limit.
    pub inverse_tail: usize,
    /// Stages of the upward tail that computes the direct limit.
    pub direct_tail: usize,
    pub stages: Vec<Stage>,
}

impl ShTable {
    pub const CSV_HEADER: &'static str = "case,class,a,c,ell,inverse_rank,direct_rank,T_iso";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.case.label(),
            self.class.label(),
            self.a,
            self.c,
            self.class.ell(),
            self.inverse_rank,
            self.direct_rank,
            self.t_is_iso
        )
    }
}

pub fn sh_tables_csv(tables: &[ShTable]) -> String {
    let mut out = String::from(ShTable::CSV_HEADER);
    out.push('\n');
    for t in tables {
        let _ = writeln!(out, "{}", t.csv_row());
    }
    out
}

/// Builds the chain of filtered groups of `H_s` over [`S_GRID`] and reads off
/// both limits from exhausting tails and the comparison map `T = ι_s ∘ π_s`.
pub fn compute_sh_tables(case: GeometryCase, class: ClassKind, a: f64, c: f64) -> Result<ShTable> {
    case.validate()?;
    class.validate()?;
    if !(c > 0.0 && c.is_finite()) || !a.is_finite() {
        return Err(Error::InvalidInput(format!("need finite a and c > 0, got a = {a}, c = {c}")));
    }
    if class == ClassKind::Zero && !(a > 0.0) {
        return Err(Error::Precondition(format!("the trivial class is filtered by a > 0, got {a}")));
    }
    let tag = match class {
        ClassKind::Zero => FamilyTag::ZeroSectionFamily,
        ClassKind::Nonzero { .. } => FamilyTag::ClassFamily,
    };
    let grid = match class {
        ClassKind::Zero => &S_GRID[ZERO_CLASS_TOP..],
        ClassKind::Nonzero { .. } => &S_GRID[..],
    };
    let stages: Vec<Stage> = grid
        .iter()
        .map(|&s| Ok(stage(&build_profile_family(tag, s, c, class.ell())?, class, case, a)))
        .collect::<Result<_>>()?;
    let spaces: Vec<GF2Space> = stages.iter().map(|st| GF2Space { dimension: st.rank }).collect();
    let transitions = stages
        .windows(2)
        .map(|w| {
            let iso = w[0].determinate && w[1].determinate && w[0].rank == w[1].rank && signature(&w[0], a) == signature(&w[1], a);
            iso.then(|| GF2Map::identity(GF2Space { dimension: w[0].rank }))
        })
        .collect();
    let system = BidirectedSystem::new(grid.to_vec(), spaces, transitions)?;
    system.audit_path_independence()?;
    let last = system.len() - 1;
    let top = system.downward_tail_end();
    let bottom = system.upward_tail_start();
    if top + 1 < MIN_TAIL || !stages[0].determinate {
        return Err(Error::Indeterminate(format!("no downward exhausting tail at s = {} (a = {a}, c = {c})", grid[0])));
    }
    if last - bottom + 1 < MIN_TAIL || !stages[last].determinate {
        return Err(Error::Indeterminate(format!("no upward exhausting tail at s = {} (a = {a}, c = {c})", grid[last])));
    }
    if !(stages[0].head > a) {
        return Err(Error::Indeterminate(format!("grid top s = {} has f_s(0) = {} ≤ a", grid[0], stages[0].head)));
    }
    let low_regime = match class {
        ClassKind::Zero => stages[last].head - c <= 1e-10 * c.max(1.0),
        ClassKind::Nonzero { .. } => stages[last].manifolds.iter().filter(|m| matches!(m.label, OrbitLabel::Descending(k) if k > 0)).all(|m| m.action < a),
    };
    if !low_regime {
        return Err(Error::Indeterminate(format!("grid bottom s = {} has not reached its limiting regime", grid[last])));
    }
    let inverse = inverse_limit(&system, 0, top)?;
    let direct = direct_limit(&system, bottom, last)?;
    let t = if bottom <= top {
        let k = bottom;
        direct.iota[k - bottom].compose(&inverse.pi[k])?
    } else if inverse.space.dimension == 0 || direct.space.dimension == 0 {
        GF2Map::zero(inverse.space, direct.space)
    } else {
        return Err(Error::Indeterminate(format!("T cannot be factored through one stage (a = {a}, c = {c})")));
    };
    Ok(ShTable {
        case,
        class,
        a,
        c,
        inverse_rank: inverse.space.dimension,
        direct_rank: direct.space.dimension,
        t_rank: t.rank(),
        t_is_iso: t.is_iso(),
        inverse_tail: top + 1,
        direct_tail: last - bottom + 1,
        stages,
    })
}

/// `Ĉ(α, a) = inf {c > 0 : sup Â_c > a}` with `Â_c = {a : T^{[a,∞);c} ≠ 0}`.
///
/// `Â_c` is an interval ending at `c` whose lower end `L` (0 or ℓ) does not
/// depend on `c`; `L` is confirmed on the tables before `max(L, a)` is
/// returned. `a = −∞` gives `L`.
pub fn capacity_hat(case: GeometryCase, class: ClassKind, a: f64) -> Result<f64> {
    if a.is_nan() || a == f64::INFINITY {
        return Err(Error::InvalidInput(format!("a = {a} must lie in [−∞, ∞)")));
    }
    let t_nonzero = |a: f64, c: f64| compute_sh_tables(case, class, a, c).map(|t| t.t_rank > 0);
    let lower = match class {
        ClassKind::Zero => {
            for c in [1e-3, 1.0] {
                if !t_nonzero(c, c)? || t_nonzero(c * 1.01, c)? {
                    return Err(Error::Audit(format!("sup Â_c ≠ c at c = {c}")));
                }
            }
            0.0
        }
        ClassKind::Nonzero { ell } => {
            // The outer orbit's action reaches ℓ only as s → ∞; the grid top resolves 1%.
            let probe = ell * (1.0 - 1e-2);
            if !t_nonzero(ell, ell)? || t_nonzero(probe, 2.0 * ell)? || !t_nonzero(2.0 * ell, 2.0 * ell)? {
                return Err(Error::Audit(format!("Â_c does not start at ℓ = {ell}")));
            }
            if t_nonzero(probe, probe)? {
                return Err(Error::Audit(format!("Â_c is nonempty below ℓ = {ell}")));
            }
            ell
        }
    };
    Ok(lower.max(a))
}

/// Brute-force `min {c ∈ c_grid : T^{[a',∞);c} ≠ 0 for some a' ≥ a in a_grid ∪ {c}}`.
pub fn capacity_hat_scan(case: GeometryCase, class: ClassKind, a: f64, c_grid: &[f64], a_grid: &[f64]) -> Result<Option<f64>> {
    let mut cs = c_grid.to_vec();
    cs.sort_by(f64::total_cmp);
    for c in cs {
        for &probe in a_grid.iter().chain(std::iter::once(&c)) {
            if probe >= a && (class != ClassKind::Zero || probe > 0.0) && compute_sh_tables(case, class, probe, c)?.t_rank > 0 {
                return Ok(Some(c));
            }
        }
    }
    Ok(None)
}
