//! Parametrised profile families and the sharpness profile.
//!
//! Both families share the head value `F(s)`, which is increasing in `s`,
//! tends to `c` as `s → −∞` and to `∞` as `s → ∞`. Every member is checked
//! clause by clause on a grid of [`CHECK_POINTS`] radii before it is returned.

use serde::{Deserialize, Serialize};

use super::profile::{ProfileFunction, SplineBuilder};
use crate::error::{Error, Result};

/// Number of radii in `[0, 1]` used by construction-time checks.
pub const CHECK_POINTS: usize = 1024;

/// Step in `s` used to check monotonicity of a member against its neighbour.
const MONOTONE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    ZeroSectionFamily,
    ClassFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFamilyMember {
    pub tag: FamilyTag,
    pub s: f64,
    pub c: f64,
    pub ell: f64,
    pub profile: ProfileFunction,
}

/// `F(s) = c + e^s` for `s ≤ 0` and its C² continuation `c + 1 + s + s²/2`.
pub fn family_head_value(s: f64, c: f64) -> f64 {
    if s <= 0.0 {
        c + s.exp()
    } else {
        c + 1.0 + s + 0.5 * s * s
    }
}

/// Breakpoints of one member: head end, descent end, plateau, and the optional rise.
struct Layout {
    head_end: f64,
    descent_end: f64,
    plateau: f64,
    rise: Option<(f64, f64)>,
}

fn zero_layout(s: f64) -> Layout {
    if s >= 1.0 {
        Layout { head_end: 1.0 - 1.0 / (4.0 * s), descent_end: 1.0 - 1.0 / (8.0 * s), plateau: 0.0, rise: None }
    } else if s >= 0.0 {
        Layout { head_end: 0.125 + 0.625 * s, descent_end: 0.25 + 0.625 * s, plateau: 0.0, rise: None }
    } else if s >= -1.0 {
        Layout { head_end: 0.125, descent_end: 0.25, plateau: s, rise: Some((0.75, 0.875)) }
    } else {
        let a = s.abs();
        Layout {
            head_end: 1.0 / (8.0 * a),
            descent_end: 1.0 / (4.0 * a),
            plateau: s,
            rise: Some((1.0 - 1.0 / (4.0 * a), 1.0 - 1.0 / (8.0 * a))),
        }
    }
}

fn class_layout(s: f64) -> Layout {
    if s >= 1.0 {
        Layout { head_end: 1.0 - 3.0 / (8.0 * s), descent_end: 1.0 - 1.0 / (8.0 * s), plateau: 0.0, rise: None }
    } else if s >= 0.0 {
        Layout { head_end: 0.125 + 0.5 * s, descent_end: 0.375 + 0.5 * s, plateau: 0.0, rise: None }
    } else if s >= -1.0 {
        Layout { head_end: 0.125, descent_end: 0.375, plateau: s, rise: Some((0.625, 0.875)) }
    } else {
        let a = s.abs();
        Layout {
            head_end: 1.0 / (8.0 * a),
            descent_end: 3.0 / (8.0 * a),
            plateau: s,
            rise: Some((1.0 - 3.0 / (8.0 * a), 1.0 - 1.0 / (8.0 * a))),
        }
    }
}

fn raw_member(tag: FamilyTag, s: f64, c: f64) -> Result<ProfileFunction> {
    let head = family_head_value(s, c);
    let b = match tag {
        FamilyTag::ZeroSectionFamily => {
            let l = zero_layout(s);
            let mut b = SplineBuilder::new(head, -2.0 * head);
            b.push(l.head_end, -2.0 * head);
            b.connect_to(l.descent_end, l.plateau)?;
            if let Some((start, end)) = l.rise {
                b.lobes(start, end, -l.plateau);
            }
            b
        }
        FamilyTag::ClassFamily => {
            let l = class_layout(s);
            let mut b = SplineBuilder::new(head, 0.0);
            b.lobes(l.head_end, l.descent_end, l.plateau - head);
            if let Some((start, end)) = l.rise {
                b.lobes(start, end, -l.plateau);
            }
            b
        }
    };
    b.finish()
}

fn grid() -> impl Iterator<Item = f64> {
    (0..CHECK_POINTS).map(|j| j as f64 / (CHECK_POINTS - 1) as f64)
}

fn fail(clause: &str, r: f64, detail: impl std::fmt::Display) -> Error {
    Error::construction(format!("{clause} at r = {r:.6}: {detail}"))
}

/// Interior test `a < r < b` kept away from the endpoints by a relative margin.
fn strictly_inside(r: f64, a: f64, b: f64) -> bool {
    let margin = 1e-9 * (b - a);
    r > a + margin && r < b - margin
}

/// Builds a member and verifies every clause of its family's property list.
pub fn build_profile_family(tag: FamilyTag, s: f64, c: f64, ell: f64) -> Result<ProfileFamilyMember> {
    if !s.is_finite() || !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!("need finite s and c > 0, got s = {s}, c = {c}")));
    }
    match tag {
        FamilyTag::ClassFamily if !(ell > 0.0 && ell.is_finite()) => {
            return Err(Error::InvalidInput(format!("class family needs ell > 0, got {ell}")))
        }
        FamilyTag::ZeroSectionFamily if !(ell >= 0.0) => {
            return Err(Error::InvalidInput(format!("ell must be nonnegative, got {ell}")))
        }
        _ => {}
    }
    let profile = raw_member(tag, s, c)?;
    let head = family_head_value(s, c);
    let tol = 1e-9 * head.max(1.0);
    if !(profile.value(0.0) > c) {
        return Err(fail("(ii) f(0) > c", 0.0, profile.value(0.0)));
    }
    let neighbour = raw_member(tag, s - MONOTONE_STEP, c)?;
    for r in grid() {
        let (lo, hi) = (neighbour.value(r), profile.value(r));
        if lo > hi + tol {
            return Err(fail("(iii) monotone in s", r, format!("f(s-h) = {lo}, f(s) = {hi}")));
        }
    }
    match tag {
        FamilyTag::ZeroSectionFamily => check_zero_family(&profile, s, head, tol)?,
        FamilyTag::ClassFamily => check_class_family(&profile, s, head, ell, tol)?,
    }
    Ok(ProfileFamilyMember { tag, s, c, ell, profile })
}

/// Round-off allowance for sign tests on `f'`, relative to its largest knot value.
fn slope_tolerance(f: &ProfileFunction) -> f64 {
    1e-12 * f.knots().iter().map(|k| k.slope.abs()).fold(1.0, f64::max)
}

fn check_signs(f: &ProfileFunction, s: f64) -> Result<()> {
    let tol = slope_tolerance(f);
    for r in grid() {
        let d = f.derivative(r);
        if (s >= 0.0 || r <= 0.5) && d > tol {
            return Err(fail("f' <= 0", r, d));
        }
        if s < 0.0 && r >= 0.5 && d < -tol {
            return Err(fail("f' >= 0 beyond r = 1/2", r, d));
        }
    }
    Ok(())
}

fn check_zero_family(f: &ProfileFunction, s: f64, head: f64, tol: f64) -> Result<()> {
    if !(f.second_derivative(0.0) < 0.0) {
        return Err(fail("(ii) f''(0) < 0", 0.0, f.second_derivative(0.0)));
    }
    check_signs(f, s)?;
    let l = zero_layout(s);
    for r in grid() {
        let j = f.jet(r);
        if (s >= 1.0 || s <= -1.0) && r <= l.head_end && (j.value - head * (1.0 - r * r)).abs() > tol {
            return Err(fail("head f(0)(1 - r^2)", r, j.value));
        }
        if s <= -1.0 && r >= l.descent_end && r <= l.rise.unwrap().0 && (j.value - s).abs() > tol {
            return Err(fail("plateau f = s", r, j.value));
        }
        let outer = if s >= 1.0 { Some(l.descent_end) } else { l.rise.map(|x| x.1) };
        if s.abs() >= 1.0 && outer.is_some_and(|o| r >= o) && j.value != 0.0 {
            return Err(fail("f = 0 near r = 1", r, j.value));
        }
        if r > 0.0 && j.value > 1e-9 && j.slope > -1e-12 {
            return Err(fail("(vi) no positive critical value away from 0", r, j.slope));
        }
    }
    Ok(())
}

fn check_class_family(f: &ProfileFunction, s: f64, head: f64, ell: f64, tol: f64) -> Result<()> {
    check_signs(f, s)?;
    let l = class_layout(s);
    let inflection = 0.5 * (l.head_end + l.descent_end);
    for r in grid() {
        let j = f.jet(r);
        if s.abs() >= 1.0 && r <= l.head_end && (j.value - head).abs() > tol {
            return Err(fail("head f = f(0)", r, j.value));
        }
        if s <= -1.0 && r >= l.descent_end && r <= l.rise.unwrap().0 && (j.value - s).abs() > tol {
            return Err(fail("plateau f = s", r, j.value));
        }
        let outer = if s >= 1.0 { Some(l.descent_end) } else { l.rise.map(|x| x.1) };
        if s.abs() >= 1.0 && outer.is_some_and(|o| r >= o) && j.value != 0.0 {
            return Err(fail("f = 0 near r = 1", r, j.value));
        }
        if s.abs() >= 1.0 {
            if strictly_inside(r, l.head_end, inflection) && !(j.curvature < 0.0) {
                return Err(fail("f'' < 0 on the concave part of the descent", r, j.curvature));
            }
            if strictly_inside(r, inflection, l.descent_end) && !(j.curvature > 0.0) {
                return Err(fail("f'' > 0 on the convex part of the descent", r, j.curvature));
            }
        }
    }
    let down = crossings(f, -ell);
    if head > ell {
        if down.len() != 2 {
            return Err(Error::construction(format!("(vi) expected two radii with f' = -ell, found {}", down.len())));
        }
        if !(f.second_derivative(down[0]) < 0.0 && f.second_derivative(down[1]) > 0.0) {
            return Err(Error::construction("(vi) wrong curvature signs at the radii with f' = -ell"));
        }
    }
    for r in crossings(f, ell) {
        if !(f.value(r) < 0.0) {
            return Err(fail("(vii) f < 0 where f' = ell", r, f.value(r)));
        }
    }
    Ok(())
}

/// Radii in `(0, support_end)` where `f' = target`, by sign scan and bisection.
pub fn crossings(f: &ProfileFunction, target: f64) -> Vec<f64> {
    const SCAN: usize = 4096;
    let end = f.support_end();
    let g = |r: f64| f.derivative(r) - target;
    let mut roots = Vec::new();
    let mut a = 0.0;
    let mut ga = g(a);
    for i in 1..=SCAN {
        let b = end * i as f64 / SCAN as f64;
        let gb = g(b);
        if ga == 0.0 && a > 0.0 {
            roots.push(a);
        } else if ga * gb < 0.0 {
            let (mut lo, mut hi, mut glo) = (a, b, ga);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm == 0.0 || hi - lo < 1e-15 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (gm < 0.0) == (glo < 0.0) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        ga = gb;
    }
    roots
}

/// Profile with `f ≡ m − δ` near 0, `f ≡ 0` near 1, `f(r) < (1 − r)m`
/// and `−m < f' ≤ 0`.
pub fn sharpness_profile(m: f64, delta: f64) -> Result<ProfileFunction> {
    if !(m > 0.0 && m.is_finite() && delta > 0.0 && delta < m) {
        return Err(Error::InvalidInput(format!("need 0 < delta < m, got m = {m}, delta = {delta}")));
    }
    let eps = delta / m;
    let w = eps / 8.0;
    let (r1, end) = (w, 1.0 - w);
    let slope = (m - delta) / (end - r1 - w);
    let peak = 2.0 * slope / w;
    let mut b = SplineBuilder::new(m - delta, 0.0);
    b.push(r1, 0.0);
    b.push(r1 + w / 2.0, -peak);
    b.push(r1 + w, 0.0);
    b.push(end - w, 0.0);
    b.push(end - w / 2.0, peak);
    b.push(end, 0.0);
    let f = b.finish()?;
    for r in grid().filter(|&r| r < 1.0) {
        let j = f.jet(r);
        if !((1.0 - r) * m - j.value > 0.0) {
            return Err(fail("f(r) < (1 - r)m", r, j.value));
        }
        if !(j.slope + m > 0.0) {
            return Err(fail("f' > -m", r, j.slope));
        }
        if j.slope > 1e-12 {
            return Err(fail("f' <= 0", r, j.slope));
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn head_value_is_c2_and_increasing() {
        let c = 1.0;
        assert_abs_diff_eq!(family_head_value(0.0, c), 2.0);
        assert_abs_diff_eq!(family_head_value(1e-8, c), 2.0 + 1e-8, epsilon = 1e-14);
        assert!(family_head_value(-40.0, c) - c < 1e-15);
        assert!(family_head_value(2.0, c) < family_head_value(2.1, c));
    }

    #[test]
    fn zero_family_large_s() {
        let m = build_profile_family(FamilyTag::ZeroSectionFamily, 2.0, 1.0, 0.0).unwrap();
        let f = &m.profile;
        let f0 = f.value(0.0);
        assert!(f0 > 1.0);
        for r in [0.1, 0.5, 0.8, 0.875] {
            assert_abs_diff_eq!(f.value(r), f0 * (1.0 - r * r), epsilon = 1e-12);
        }
        for r in [0.9375, 0.95, 0.999] {
            assert_eq!(f.value(r), 0.0);
        }
    }

    #[test]
    fn zero_family_negative_s_plateau() {
        let m = build_profile_family(FamilyTag::ZeroSectionFamily, -2.0, 1.0, 0.0).unwrap();
        for i in 0..=100 {
            let r = 0.125 + 0.75 * i as f64 / 100.0;
            assert_abs_diff_eq!(m.profile.value(r), -2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn class_family_has_two_descent_radii() {
        let m = build_profile_family(FamilyTag::ClassFamily, 2.0, 1.0, 1.0).unwrap();
        let roots = crossings(&m.profile, -1.0);
        assert_eq!(roots.len(), 2);
        assert!(roots[0] < roots[1]);
        assert!(m.profile.second_derivative(roots[0]) < 0.0);
        assert!(m.profile.second_derivative(roots[1]) > 0.0);
        for r in &roots {
            assert_abs_diff_eq!(m.profile.derivative(*r), -1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn class_family_rejects_nonpositive_ell() {
        assert!(build_profile_family(FamilyTag::ClassFamily, 0.0, 1.0, 0.0).is_err());
        assert!(build_profile_family(FamilyTag::ZeroSectionFamily, 0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn members_build_across_regimes() {
        for tag in [FamilyTag::ZeroSectionFamily, FamilyTag::ClassFamily] {
            for s in [-8.0, -1.5, -1.0, -0.5, -1e-3, 0.0, 0.3, 1.0, 3.0, 8.0] {
                build_profile_family(tag, s, 0.5, 0.7).unwrap_or_else(|e| panic!("{tag:?} s = {s}: {e}"));
            }
        }
    }

    #[test]
    fn sharpness_profile_example() {
        let f = sharpness_profile(1.0, 0.1).unwrap();
        assert_abs_diff_eq!(f.value(0.0), 0.9, epsilon = 1e-15);
        assert!(crossings(&f, -1.0).is_empty());
        let g = sharpness_profile(1.0, 0.999).unwrap();
        assert!(g.value(0.0) < 0.01);
        assert!(sharpness_profile(1.0, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn families_are_monotone_in_s(s0 in -6.0f64..6.0, gap in 0.0f64..3.0, c in 0.1f64..3.0, zero in any::<bool>()) {
            let tag = if zero { FamilyTag::ZeroSectionFamily } else { FamilyTag::ClassFamily };
            let a = build_profile_family(tag, s0, c, 0.5).unwrap();
            let b = build_profile_family(tag, s0 + gap, c, 0.5).unwrap();
            for r in grid() {
                prop_assert!(a.profile.value(r) <= b.profile.value(r) + 1e-9);
            }
        }

        #[test]
        fn sharpness_inequalities_hold(m in 0.05f64..10.0, frac in 0.01f64..0.99) {
            let f = sharpness_profile(m, frac * m).unwrap();
            for j in 0..4000 {
                let r = j as f64 / 4000.0;
                prop_assert!((1.0 - r) * m - f.value(r) > 0.0);
                prop_assert!(f.derivative(r) + m > 0.0);
            }
        }
    }
}
