//! Even, compactly supported C² cubic splines `f(r)` on `[0, 1)`.
//!
//! A spline is stored as its knot table `(r, f, f', f'')`. Between knots the
//! second derivative is linear, so the knot values of `f` and `f'` are the
//! exact integrals of the piecewise-linear curvature.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TABLE_HEADER: &str = "# cotangent-lab profile-spline v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub r: f64,
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFunction {
    knots: Vec<Knot>,
}

/// Value, first and second derivative at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

fn advance(k: &Knot, r: f64, curvature: f64) -> Knot {
    let h = r - k.r;
    Knot {
        r,
        value: k.value + h * k.slope + h * h * (2.0 * k.curvature + curvature) / 6.0,
        slope: k.slope + h * (k.curvature + curvature) / 2.0,
        curvature,
    }
}

impl ProfileFunction {
    /// The profile `f ≡ 0`.
    pub fn zero() -> Self {
        Self { knots: vec![Knot { r: 0.0, value: 0.0, slope: 0.0, curvature: 0.0 }] }
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    /// Radius of the last knot; `f` vanishes identically beyond it.
    pub fn support_end(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.r)
    }

    pub fn is_zero(&self) -> bool {
        self.knots.iter().all(|k| k.value == 0.0 && k.slope == 0.0 && k.curvature == 0.0)
    }

    /// Evaluates `f`, `f'`, `f''` at `r ≥ 0`. Negative radii use evenness.
    pub fn jet(&self, r: f64) -> Jet {
        let (ra, sign) = if r < 0.0 { (-r, -1.0) } else { (r, 1.0) };
        let last = self.knots.len() - 1;
        if ra >= self.knots[last].r {
            return Jet { value: 0.0, slope: 0.0, curvature: 0.0 };
        }
        let i = self.knots.partition_point(|k| k.r <= ra) - 1;
        let (a, b) = (&self.knots[i], &self.knots[i + 1]);
        let h = b.r - a.r;
        let x = ra - a.r;
        let dm = (b.curvature - a.curvature) / h;
        Jet {
            value: a.value + x * (a.slope + x * (a.curvature / 2.0 + x * dm / 6.0)),
            slope: sign * (a.slope + x * (a.curvature + x * dm / 2.0)),
            curvature: a.curvature + x * dm,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).value
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.jet(r).slope
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        self.jet(r).curvature
    }

    /// Multiplies the profile by a constant.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            knots: self
                .knots
                .iter()
                .map(|k| Knot {
                    r: k.r,
                    value: k.value * factor,
                    slope: k.slope * factor,
                    curvature: k.curvature * factor,
                })
                .collect(),
        }
    }

    /// Plain-text knot table: header line, then `r f f' f''` per knot.
    pub fn to_table(&self) -> String {
        let mut out = String::from(TABLE_HEADER);
        out.push('\n');
        for k in &self.knots {
            let _ = writeln!(out, "{:.17e} {:.17e} {:.17e} {:.17e}", k.r, k.value, k.slope, k.curvature);
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some(h) if h == TABLE_HEADER => {}
            other => {
                return Err(Error::Parse(format!("expected header {TABLE_HEADER:?}, found {other:?}")))
            }
        }
        let mut knots = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("knot line {}: {e}", lineno + 1)))?;
            if fields.len() != 4 {
                return Err(Error::Parse(format!("knot line {} has {} fields", lineno + 1, fields.len())));
            }
            knots.push(Knot { r: fields[0], value: fields[1], slope: fields[2], curvature: fields[3] });
        }
        Self::from_knots(knots)
    }

    /// Validates a knot table: starts at `r = 0` with zero slope, strictly
    /// increasing radii below 1, consistent integrals, and vanishing at the end.
    pub fn from_knots(knots: Vec<Knot>) -> Result<Self> {
        let first = knots.first().ok_or_else(|| Error::Parse("empty knot table".into()))?;
        if first.r != 0.0 || first.slope != 0.0 {
            return Err(Error::Parse("first knot must sit at r = 0 with zero slope".into()));
        }
        let scale = knots.iter().map(|k| k.value.abs().max(k.slope.abs())).fold(1.0, f64::max);
        for w in knots.windows(2) {
            if !(w[1].r > w[0].r) {
                return Err(Error::Parse(format!("knots not increasing at r = {}", w[1].r)));
            }
            let predicted = advance(&w[0], w[1].r, w[1].curvature);
            if (predicted.value - w[1].value).abs() > 1e-9 * scale
                || (predicted.slope - w[1].slope).abs() > 1e-9 * scale
            {
                return Err(Error::Parse(format!("knot at r = {} is inconsistent with its predecessor", w[1].r)));
            }
        }
        let last = knots.last().unwrap();
        if last.r >= 1.0 {
            return Err(Error::Parse("support must end below r = 1".into()));
        }
        if last.value.abs() > 1e-9 * scale || last.slope.abs() > 1e-9 * scale || last.curvature != 0.0 {
            return Err(Error::Parse("profile does not vanish at its last knot".into()));
        }
        Ok(Self { knots })
    }

    /// `f(r) = height·(1 − r²)` on `[0, cut_start]`, connected in C² to zero
    /// at `support_end`.
    pub fn cut_parabola(height: f64, cut_start: f64, support_end: f64) -> Result<Self> {
        if !(0.0 < cut_start && cut_start < support_end && support_end < 1.0) {
            return Err(Error::InvalidInput(format!(
                "need 0 < cut_start < support_end < 1, got {cut_start}, {support_end}"
            )));
        }
        let mut b = SplineBuilder::new(height, -2.0 * height);
        b.push(cut_start, -2.0 * height);
        b.connect_to(support_end, 0.0)?;
        b.finish()
    }
}

/// Incremental construction of a profile from its piecewise-linear curvature.
#[derive(Debug, Clone)]
pub struct SplineBuilder {
    knots: Vec<Knot>,
}

impl SplineBuilder {
    /// Starts at `r = 0` with `f(0) = value`, `f'(0) = 0`, `f''(0) = curvature`.
    pub fn new(value: f64, curvature: f64) -> Self {
        Self { knots: vec![Knot { r: 0.0, value, slope: 0.0, curvature }] }
    }

    pub fn current(&self) -> Knot {
        *self.knots.last().unwrap()
    }

    /// Appends a knot at `r` where the curvature equals `curvature`.
    pub fn push(&mut self, r: f64, curvature: f64) {
        let last = self.current();
        if r <= last.r {
            return;
        }
        self.knots.push(advance(&last, r, curvature));
    }

    /// Two mirror-image triangular curvature lobes on `[start, end]` that
    /// change the value by `delta`, starting and ending with zero slope and
    /// curvature. A negative `delta` has the concave lobe first.
    pub fn lobes(&mut self, start: f64, end: f64, delta: f64) {
        self.push(start, 0.0);
        let half = (end - start) / 2.0;
        let peak = 2.0 * delta.abs() / (half * half);
        let sign = if delta < 0.0 { -1.0 } else { 1.0 };
        self.push(start + half / 2.0, sign * peak);
        self.push(start + half, 0.0);
        self.push(start + 1.5 * half, -sign * peak);
        self.push(end, 0.0);
    }

    /// Joins the current state to `value` at `end` with zero slope and
    /// curvature there, using two interior knots at one and two thirds.
    pub fn connect_to(&mut self, end: f64, value: f64) -> Result<()> {
        let start = self.current();
        if end <= start.r {
            return Err(Error::construction(format!("connector end {end} not after {}", start.r)));
        }
        let k1 = start.r + (end - start.r) / 3.0;
        let k2 = start.r + 2.0 * (end - start.r) / 3.0;
        let endpoint = |m1: f64, m2: f64| {
            let a = advance(&start, k1, m1);
            let b = advance(&a, k2, m2);
            let c = advance(&b, end, 0.0);
            (c.value, c.slope)
        };
        let (v0, s0) = endpoint(0.0, 0.0);
        let (v1, s1) = endpoint(1.0, 0.0);
        let (v2, s2) = endpoint(0.0, 1.0);
        let (a11, a12, a21, a22) = (v1 - v0, v2 - v0, s1 - s0, s2 - s0);
        let det = a11 * a22 - a12 * a21;
        if det.abs() < 1e-300 {
            return Err(Error::construction("degenerate connector system"));
        }
        let (r1, r2) = (value - v0, -s0);
        let m1 = (r1 * a22 - a12 * r2) / det;
        let m2 = (a11 * r2 - a21 * r1) / det;
        self.push(k1, m1);
        self.push(k2, m2);
        self.push(end, 0.0);
        Ok(())
    }

    /// Closes the spline; the current state must already be `f = f' = f'' = 0`.
    pub fn finish(mut self) -> Result<ProfileFunction> {
        let scale = self.knots.iter().map(|k| k.value.abs().max(k.slope.abs())).fold(1.0, f64::max);
        let last = self.knots.last_mut().unwrap();
        if last.r >= 1.0 {
            return Err(Error::construction(format!("support end {} is not below 1", last.r)));
        }
        if last.value.abs() > 1e-10 * scale || last.slope.abs() > 1e-10 * scale || last.curvature != 0.0 {
            return Err(Error::construction(format!(
                "spline does not vanish at r = {} (f = {:e}, f' = {:e})",
                last.r, last.value, last.slope
            )));
        }
        last.value = 0.0;
        last.slope = 0.0;
        Ok(ProfileFunction { knots: self.knots })
    }
}
