//! C¹ monotone interval maps `f: I → f(I) ⊂ I` on `I = [0,1]`.
//!
//! Three families are supported: affine maps, monotone piecewise-cubic
//! Hermite maps through prescribed anchors, and post-composition with the
//! reflection `R(x) = 1 − x`. Every family has a closed-form derivative and a
//! cancellation-free increment `f(x + w) − f(x)`, which lets interval lengths
//! be tracked far below the spacing of neighbouring doubles.

use std::fmt;

use crate::error::{Error, Result};

/// Default grid size for distortion estimates.
pub const DEFAULT_DISTORTION_GRID: usize = 4097;

/// Direction of monotonicity of a fiber map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Preserving,
    Reversing,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::Preserving => Orientation::Reversing,
            Orientation::Reversing => Orientation::Preserving,
        }
    }

    /// Orientation of `g ∘ f` given those of `f` and `g`.
    pub fn then(self, other: Orientation) -> Self {
        if self == other {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Orientation::Preserving => 1.0,
            Orientation::Reversing => -1.0,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Preserving => "preserving",
            Orientation::Reversing => "reversing",
        })
    }
}

/// A closed subinterval `[lo, hi]` of `[0,1]`.
///
/// The length is carried alongside the endpoints. Pushing an interval
/// through a fiber map updates it from the map's increment, so it stays
/// accurate after the endpoints have collapsed onto the same double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
    len: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::Precondition(format!("[{lo}, {hi}] is not a subinterval of [0,1]")));
        }
        Ok(Self { lo, hi, len: hi - lo })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0, len: 1.0 }
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::new(x, x)
    }

    /// `[lo, hi] ∩ [0,1]`, or `None` when empty.
    pub fn clipped(lo: f64, hi: f64) -> Option<Self> {
        let lo = lo.max(0.0);
        let hi = hi.min(1.0);
        (lo <= hi).then_some(Self { lo, hi, len: hi - lo })
    }

    fn tracked(lo: f64, hi: f64, len: f64) -> Self {
        let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
        Self { lo, hi: hi.max(lo), len: len.max(0.0) }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.len
    }

    pub fn is_degenerate(&self) -> bool {
        self.len == 0.0
    }

    pub fn mid(&self) -> f64 {
        self.lo + 0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `self ⊆ other` up to `slack` at each endpoint.
    pub fn within(&self, other: &Interval, slack: f64) -> bool {
        self.lo >= other.lo - slack && self.hi <= other.hi + slack
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        if self.within(other, 0.0) {
            return Some(*self);
        }
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi, len: hi - lo })
    }

    /// `R([lo, hi]) = [1 − hi, 1 − lo]`.
    pub fn reflect(&self) -> Interval {
        Interval { lo: 1.0 - self.hi, hi: 1.0 - self.lo, len: self.len }
    }

    /// Grow by `eps` on both sides, clipped to `[0,1]`.
    pub fn widen(&self, eps: f64) -> Interval {
        Interval::clipped(self.lo - eps, self.hi + eps).expect("widening a nonempty interval")
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Piecewise-cubic Hermite interpolant through monotone anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Signed slopes after clamping.
    slopes: Vec<f64>,
    /// Power-form coefficients per segment in `s = x − xs[k]`.
    coeffs: Vec<[f64; 4]>,
    orientation: Orientation,
    clamped: bool,
}

impl AnchoredMap {
    /// Build from anchors `xs` (must start at 0 and end at 1), strictly
    /// monotone values `ys` and positive slope magnitudes.
    ///
    /// Slopes outside the Fritsch–Carlson monotone region are scaled back
    /// into it; construction fails if the resulting derivative touches zero.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, slope_magnitudes: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n || slope_magnitudes.len() != n {
            return Err(Error::InvalidMap(
                "anchored map needs at least two anchors with one value and slope each".into(),
            ));
        }
        if xs[0] != 0.0 || xs[n - 1] != 1.0 {
            return Err(Error::InvalidMap("anchor abscissae must start at 0 and end at 1".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidMap("anchor abscissae must be strictly increasing".into()));
        }
        if ys.iter().any(|y| !(0.0..=1.0).contains(y)) {
            return Err(Error::InvalidMap("anchor values must lie in [0,1]".into()));
        }
        let orientation = if ys[1] > ys[0] { Orientation::Preserving } else { Orientation::Reversing };
        let sign = orientation.sign();
        if ys.windows(2).any(|w| !(sign * (w[1] - w[0]) > 0.0)) {
            return Err(Error::InvalidMap("anchor values must be strictly monotone".into()));
        }
        if slope_magnitudes.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidMap("slope magnitudes must be positive and finite".into()));
        }
        let mut slopes: Vec<f64> = slope_magnitudes.iter().map(|m| sign * m).collect();
        let mut clamped = false;
        for k in 0..n - 1 {
            let secant = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
            let alpha = slopes[k] / secant;
            let beta = slopes[k + 1] / secant;
            let r2 = alpha * alpha + beta * beta;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                slopes[k] = tau * alpha * secant;
                slopes[k + 1] = tau * beta * secant;
                clamped = true;
            }
        }
        Self::from_parts(xs, ys, slopes, orientation, clamped)
    }

    fn from_parts(
        xs: Vec<f64>,
        ys: Vec<f64>,
        slopes: Vec<f64>,
        orientation: Orientation,
        clamped: bool,
    ) -> Result<Self> {
        let sign = orientation.sign();
        let mut coeffs = Vec::with_capacity(xs.len() - 1);
        for k in 0..xs.len() - 1 {
            let h = xs[k + 1] - xs[k];
            let secant = (ys[k + 1] - ys[k]) / h;
            let (d0, d1) = (slopes[k], slopes[k + 1]);
            let c = [ys[k], d0, (3.0 * secant - 2.0 * d0 - d1) / h, (d0 + d1 - 2.0 * secant) / (h * h)];
            // p'(s) = c1 + 2 c2 s + 3 c3 s², minimised over [0, h]
            let dp = |s: f64| c[1] + s * (2.0 * c[2] + 3.0 * c[3] * s);
            let mut lowest = (sign * d0).min(sign * d1);
            if c[3] != 0.0 {
                let vertex = -c[2] / (3.0 * c[3]);
                if vertex > 0.0 && vertex < h {
                    lowest = lowest.min(sign * dp(vertex));
                }
            }
            if !(lowest > 0.0) {
                return Err(Error::InvalidMap(format!(
                    "derivative vanishes on segment [{}, {}] after monotone clamping",
                    xs[k],
                    xs[k + 1]
                )));
            }
            coeffs.push(c);
        }
        Ok(Self { xs, ys, slopes, coeffs, orientation, clamped })
    }

    pub fn anchors_x(&self) -> &[f64] {
        &self.xs
    }

    pub fn anchors_y(&self) -> &[f64] {
        &self.ys
    }

    /// Signed slopes actually used at the anchors.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Whether any prescribed slope was scaled into the monotone region.
    pub fn was_clamped(&self) -> bool {
        self.clamped
    }

    fn segment(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|&v| v <= x);
        k.saturating_sub(1).min(self.coeffs.len() - 1)
    }

    fn value(&self, x: f64) -> f64 {
        let k = self.segment(x);
        if x == self.xs[k] {
            return self.ys[k];
        }
        if x == self.xs[k + 1] {
            return self.ys[k + 1];
        }
        let c = &self.coeffs[k];
        let s = x - self.xs[k];
        let v = c[0] + s * (c[1] + s * (c[2] + s * c[3]));
        let (a, b) = (self.ys[k], self.ys[k + 1]);
        v.clamp(a.min(b), a.max(b))
    }

    fn slope(&self, x: f64) -> f64 {
        let k = self.segment(x);
        if x == self.xs[k] {
            return self.slopes[k];
        }
        if x == self.xs[k + 1] {
            return self.slopes[k + 1];
        }
        let c = &self.coeffs[k];
        let s = x - self.xs[k];
        c[1] + s * (2.0 * c[2] + 3.0 * c[3] * s)
    }

    fn increment(&self, x: f64, w: f64) -> f64 {
        let mut pos = x;
        let mut remaining = w.min(1.0 - x);
        let mut total = 0.0;
        while remaining > 0.0 {
            let k = self.segment(pos);
            let end = self.xs[k + 1];
            let step = remaining.min(end - pos);
            if step <= 0.0 {
                break;
            }
            let c = &self.coeffs[k];
            let s = pos - self.xs[k];
            total += step * (c[1] + c[2] * (2.0 * s + step) + c[3] * (3.0 * s * s + 3.0 * s * step + step * step));
            remaining -= step;
            pos = if step == end - pos { end } else { pos + step };
        }
        total
    }

    fn inverse(&self, y: f64) -> f64 {
        let sign = self.orientation.sign();
        let k = self.ys.partition_point(|&v| sign * v <= sign * y).saturating_sub(1).min(self.coeffs.len() - 1);
        if y == self.ys[k] {
            return self.xs[k];
        }
        if y == self.ys[k + 1] {
            return self.xs[k + 1];
        }
        let c = &self.coeffs[k];
        let h = self.xs[k + 1] - self.xs[k];
        let q = |s: f64| c[0] + s * (c[1] + s * (c[2] + s * c[3])) - y;
        let dq = |s: f64| c[1] + s * (2.0 * c[2] + 3.0 * c[3] * s);
        let (mut lo, mut hi) = (0.0, h);
        let mut s = ((y - self.ys[k]) / (self.ys[k + 1] - self.ys[k]) * h).clamp(0.0, h);
        for _ in 0..200 {
            let v = q(s);
            if v == 0.0 {
                break;
            }
            if sign * v < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            if hi - lo <= 1e-14 {
                s = 0.5 * (lo + hi);
                break;
            }
            let mut next = s - v / dq(s);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-17 {
                s = next;
                break;
            }
            s = next;
        }
        (self.xs[k] + s).clamp(self.xs[k], self.xs[k + 1])
    }

    /// `R ∘ f`: values reflected, abscissae unchanged.
    fn post_reflect(&self) -> Self {
        let ys = self.ys.iter().map(|y| 1.0 - y).collect();
        let slopes = self.slopes.iter().map(|d| -d).collect();
        Self::from_parts(self.xs.clone(), ys, slopes, self.orientation.flip(), self.clamped)
            .expect("reflection preserves strict monotonicity")
    }

    /// `f ∘ R`: abscissae mirrored, values unchanged.
    fn pre_reflect(&self) -> Self {
        let xs = self.xs.iter().rev().map(|x| 1.0 - x).collect();
        let ys = self.ys.iter().rev().copied().collect();
        let slopes = self.slopes.iter().rev().map(|d| -d).collect();
        Self::from_parts(xs, ys, slopes, self.orientation.flip(), self.clamped)
            .expect("reflection preserves strict monotonicity")
    }
}

/// A C¹ injective map of `[0,1]` into itself with non-vanishing derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberMap {
    Affine {
        slope: f64,
        intercept: f64,
    },
    Anchored(AnchoredMap),
    /// `R ∘ inner`.
    Reflected(Box<FiberMap>),
}

impl FiberMap {
    pub fn affine(slope: f64, intercept: f64) -> Result<Self> {
        if !(slope.is_finite() && intercept.is_finite()) || slope == 0.0 {
            return Err(Error::InvalidMap(format!("affine map needs a finite nonzero slope, got {slope}")));
        }
        let end = slope + intercept;
        if !(0.0..=1.0).contains(&intercept) || !(0.0..=1.0).contains(&end) {
            return Err(Error::InvalidMap(format!(
                "affine map {slope}x + {intercept} does not send [0,1] into itself"
            )));
        }
        Ok(FiberMap::Affine { slope, intercept })
    }

    pub fn anchored(xs: Vec<f64>, ys: Vec<f64>, slope_magnitudes: Vec<f64>) -> Result<Self> {
        AnchoredMap::new(xs, ys, slope_magnitudes).map(FiberMap::Anchored)
    }

    pub fn reflected(inner: FiberMap) -> Self {
        FiberMap::Reflected(Box::new(inner))
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            FiberMap::Affine { slope, .. } => {
                if *slope > 0.0 {
                    Orientation::Preserving
                } else {
                    Orientation::Reversing
                }
            }
            FiberMap::Anchored(m) => m.orientation,
            FiberMap::Reflected(inner) => inner.orientation().flip(),
        }
    }

    /// Evaluation without the domain check; `x` is clamped into `[0,1]`.
    pub fn value(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            FiberMap::Affine { slope, intercept } => (slope * x + intercept).clamp(0.0, 1.0),
            FiberMap::Anchored(m) => m.value(x),
            FiberMap::Reflected(inner) => 1.0 - inner.value(x),
        }
    }

    /// Derivative without the domain check.
    pub fn slope_at(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            FiberMap::Affine { slope, .. } => *slope,
            FiberMap::Anchored(m) => m.slope(x),
            FiberMap::Reflected(inner) => -inner.slope_at(x),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.value(x))
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.slope_at(x))
    }

    /// `f(x + w) − f(x)` for `w ≥ 0`, computed without cancellation.
    pub fn increment(&self, x: f64, w: f64) -> f64 {
        match self {
            FiberMap::Affine { slope, .. } => slope * w,
            FiberMap::Anchored(m) => m.increment(x, w),
            FiberMap::Reflected(inner) => -inner.increment(x, w),
        }
    }

    /// `f([0,1])`.
    pub fn image(&self) -> Interval {
        self.image_interval(&Interval::unit())
    }

    /// `f^{-1}(y)`; out-of-image points signal that the inverse is undefined.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let img = self.image();
        if !(img.contains(y)) {
            return Err(Error::OutOfImage { y, lo: img.lo, hi: img.hi });
        }
        Ok(self.inverse_unchecked(y))
    }

    fn inverse_unchecked(&self, y: f64) -> f64 {
        match self {
            FiberMap::Affine { slope, intercept } => ((y - intercept) / slope).clamp(0.0, 1.0),
            FiberMap::Anchored(m) => m.inverse(y),
            FiberMap::Reflected(inner) => inner.inverse_unchecked(1.0 - y),
        }
    }

    /// Exact image of an interval (endpoint evaluation, tracked length).
    pub fn image_interval(&self, j: &Interval) -> Interval {
        let a = self.value(j.lo);
        let b = self.value(j.hi);
        let len = self.increment(j.lo, j.len).abs();
        if a <= b {
            Interval::tracked(a, b, len)
        } else {
            Interval::tracked(b, a, len)
        }
    }

    /// `f^{-1}(J)` for `J ⊆ f([0,1])`.
    pub fn preimage_interval(&self, j: &Interval) -> Result<Interval> {
        let img = self.image();
        if !j.within(&img, 0.0) {
            return Err(Error::OutOfImage { y: if j.lo < img.lo { j.lo } else { j.hi }, lo: img.lo, hi: img.hi });
        }
        let a = self.inverse_unchecked(j.lo);
        let b = self.inverse_unchecked(j.hi);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let len = self.preimage_len(lo, j.len, hi - lo);
        Ok(Interval::tracked(lo, hi, len))
    }

    /// Solve `|f(lo + w) − f(lo)| = target` for `w`, starting from `guess`.
    fn preimage_len(&self, lo: f64, target: f64, guess: f64) -> f64 {
        if target == 0.0 {
            return 0.0;
        }
        match self {
            FiberMap::Affine { slope, .. } => target / slope.abs(),
            _ => {
                let mut w = target / self.slope_at(lo).abs();
                if !(w.is_finite()) || w <= 0.0 || w > 1.0 {
                    w = guess.max(f64::MIN_POSITIVE);
                }
                for _ in 0..60 {
                    let r = self.increment(lo, w).abs() - target;
                    let d = self.slope_at(lo + w).abs();
                    let next = w - r / d;
                    if !(next > 0.0) || !next.is_finite() {
                        return guess;
                    }
                    if (next - w).abs() <= 1e-15 * w {
                        return next;
                    }
                    w = next;
                }
                w
            }
        }
    }

    /// `R ∘ f` in normal form (no nested reflections).
    pub fn post_reflect(&self) -> FiberMap {
        match self {
            FiberMap::Affine { slope, intercept } => FiberMap::Affine { slope: -slope, intercept: 1.0 - intercept },
            FiberMap::Anchored(m) => FiberMap::Anchored(m.post_reflect()),
            FiberMap::Reflected(inner) => (**inner).clone(),
        }
    }

    /// `f ∘ R` in normal form.
    pub fn pre_reflect(&self) -> FiberMap {
        match self {
            FiberMap::Affine { slope, intercept } => FiberMap::Affine { slope: -slope, intercept: slope + intercept },
            FiberMap::Anchored(m) => FiberMap::Anchored(m.pre_reflect()),
            FiberMap::Reflected(inner) => FiberMap::reflected(inner.pre_reflect()),
        }
    }

    /// `R ∘ f ∘ R`.
    pub fn conjugate_reflect(&self) -> FiberMap {
        self.pre_reflect().post_reflect()
    }

    /// Shift every value by `delta` (affine intercept or anchor values).
    pub fn shifted(&self, delta: f64) -> Result<FiberMap> {
        match self {
            FiberMap::Affine { slope, intercept } => FiberMap::affine(*slope, intercept + delta),
            FiberMap::Anchored(m) => {
                let ys = m.ys.iter().map(|y| y + delta).collect();
                let mags = m.slopes.iter().map(|d| d.abs()).collect();
                FiberMap::anchored(m.xs.clone(), ys, mags)
            }
            FiberMap::Reflected(inner) => Ok(FiberMap::reflected(inner.shifted(-delta)?)),
        }
    }
}

impl fmt::Display for FiberMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiberMap::Affine { slope, intercept } => write!(f, "affine slope={slope} intercept={intercept}"),
            FiberMap::Anchored(m) => write!(f, "anchored x={:?} y={:?} slopes={:?}", m.xs, m.ys, m.slopes),
            FiberMap::Reflected(inner) => write!(f, "reflected({inner})"),
        }
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutsideUnitInterval(x))
    }
}

/// Result of evaluating a composition along a word.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub value: f64,
    pub log_abs_deriv_sum: f64,
    /// `x_0 = x, x_{k+1} = f_{w_k}(x_k)`; one more point than symbols.
    pub trajectory: Vec<f64>,
}

/// `f_{w_1 … w_n}(x) = f_{w_n} ∘ … ∘ f_{w_1}(x)`: the leftmost symbol acts first.
pub fn compose_eval(maps: &[FiberMap], word: &[usize], x: f64) -> Result<Composition> {
    check_unit(x)?;
    let mut trajectory = Vec::with_capacity(word.len() + 1);
    trajectory.push(x);
    let mut cur = x;
    let mut log_sum = 0.0;
    for &s in word {
        let f = maps.get(s.wrapping_sub(1)).ok_or(Error::SymbolOutOfRange { symbol: s, alphabet: maps.len() })?;
        log_sum += f.slope_at(cur).abs().ln();
        cur = f.value(cur);
        trajectory.push(cur);
    }
    Ok(Composition { value: cur, log_abs_deriv_sum: log_sum, trajectory })
}

/// Orientation of `f_{w}`: reversing iff an odd number of reversing symbols.
pub fn word_orientation(maps: &[FiberMap], word: &[usize]) -> Orientation {
    word.iter().fold(Orientation::Preserving, |acc, &s| acc.then(maps[s - 1].orientation()))
}

/// `max |f'| / min |f'|` over a uniform grid of `grid_n` points on `J`.
///
/// This under-approximates the supremum ratio.
pub fn distortion(f: &FiberMap, j: &Interval, grid_n: usize) -> f64 {
    if j.hi <= j.lo || grid_n < 2 {
        return 1.0;
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..grid_n {
        let x = j.lo + (j.hi - j.lo) * k as f64 / (grid_n - 1) as f64;
        let d = f.slope_at(x).abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    hi / lo
}

/// `D(ϑ)`: the largest distortion of any map or its inverse on windows
/// `[x − ϑ/2, x + ϑ/2] ∩ I` centred at the points of a `grid_n` grid.
///
/// Each window is evaluated on the same global grid, so the estimate is
/// nondecreasing in `ϑ`.
pub fn distortion_global(maps: &[FiberMap], theta: f64, grid_n: usize) -> f64 {
    assert!(grid_n >= 2, "distortion grid needs at least two points");
    let spacing = 1.0 / (grid_n - 1) as f64;
    let radius = if theta >= 2.0 { grid_n } else { ((0.5 * theta) / spacing * (1.0 + 1e-12)).floor() as usize };
    let grid: Vec<f64> = (0..grid_n).map(|k| k as f64 * spacing).collect();
    let mut worst = 1.0f64;
    for f in maps {
        let forward: Vec<Option<f64>> = grid.iter().map(|&x| Some(f.slope_at(x).abs())).collect();
        let img = f.image();
        let backward: Vec<Option<f64>> =
            grid.iter().map(|&y| img.contains(y).then(|| 1.0 / f.slope_at(f.inverse_unchecked(y)).abs())).collect();
        for values in [&forward, &backward] {
            for (lo, hi) in sliding_extrema(values, radius).into_iter().flatten() {
                worst = worst.max(hi / lo);
            }
        }
    }
    worst
}

/// For each centre `i`, the (min, max) of the defined values in
/// `values[i − r ..= i + r]`.
fn sliding_extrema(values: &[Option<f64>], r: usize) -> Vec<Option<(f64, f64)>> {
    use std::collections::VecDeque;
    let n = values.len();
    let mut mins: VecDeque<usize> = VecDeque::new();
    let mut maxs: VecDeque<usize> = VecDeque::new();
    let mut out = Vec::with_capacity(n);
    let mut next = 0usize;
    for i in 0..n {
        let right = (i + r).min(n - 1);
        while next <= right {
            if let Some(v) = values[next] {
                while mins.back().is_some_and(|&b| values[b].unwrap() >= v) {
                    mins.pop_back();
                }
                mins.push_back(next);
                while maxs.back().is_some_and(|&b| values[b].unwrap() <= v) {
                    maxs.pop_back();
                }
                maxs.push_back(next);
            }
            next += 1;
        }
        let left = i.saturating_sub(r);
        while mins.front().is_some_and(|&f| f < left) {
            mins.pop_front();
        }
        while maxs.front().is_some_and(|&f| f < left) {
            maxs.pop_front();
        }
        out.push(match (mins.front(), maxs.front()) {
            (Some(&a), Some(&b)) => Some((values[a].unwrap(), values[b].unwrap())),
            _ => None,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skew::SkewProduct;
    use crate::systems;

    fn a() -> FiberMap {
        FiberMap::affine(0.5, 0.1).unwrap()
    }

    #[test]
    fn affine_and_reflected_evaluation() {
        assert!((a().eval(0.4).unwrap() - 0.3).abs() < 1e-15);
        let r = FiberMap::reflected(a());
        assert!((r.eval(0.4).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(a().deriv(0.9).unwrap(), 0.5);
        assert_eq!(r.deriv(0.4).unwrap(), -0.5);
        assert!(matches!(a().eval(1.5), Err(Error::OutsideUnitInterval(_))));
        assert!(a().deriv(-0.1).is_err());
    }

    #[test]
    fn affine_inverse_and_images() {
        assert!((a().inverse(0.3).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(a().inverse(0.05), Err(Error::OutOfImage { .. })));
        let img = a().image();
        assert_eq!((img.lo(), img.hi()), (0.1, 0.6));
        let f2 = FiberMap::affine(-0.5, 0.9).unwrap();
        let img = f2.image();
        assert!((img.lo() - 0.4).abs() < 1e-15 && (img.hi() - 0.9).abs() < 1e-15);
        let p = a().image_interval(&Interval::point(0.3).unwrap());
        assert_eq!(p.lo(), p.hi());
        assert_eq!(p.len(), 0.0);
    }

    #[test]
    fn anchored_map_honours_anchors() {
        let sys = systems::sys_bg();
        let f1 = sys.map(1);
        assert_eq!(f1.eval(0.25).unwrap(), 0.25);
        assert_eq!(f1.deriv(0.25).unwrap(), 0.5);
        assert_eq!(f1.eval(0.5).unwrap(), 0.5);
        assert_eq!(f1.deriv(0.5).unwrap(), 2.0);
        let f2 = sys.map(2);
        assert_eq!(f2.orientation(), Orientation::Reversing);
        assert_eq!(f2.inverse(0.75).unwrap(), 0.25);
        assert!((f2.inverse(0.6).map(|x| f2.value(x)).unwrap() - 0.6).abs() <= 1e-13);
    }

    #[test]
    fn anchored_construction_failures() {
        assert!(FiberMap::anchored(vec![0.0, 0.5], vec![0.1, 0.9], vec![1.0, 1.0]).is_err());
        assert!(FiberMap::anchored(vec![0.0, 0.6, 0.5, 1.0], vec![0.1, 0.2, 0.3, 0.4], vec![1.0; 4]).is_err());
        assert!(FiberMap::anchored(vec![0.0, 0.5, 1.0], vec![0.1, 0.1, 0.4], vec![1.0; 3]).is_err());
        assert!(FiberMap::anchored(vec![0.0, 1.0], vec![0.1, 0.4], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn steep_slopes_are_clamped_into_the_monotone_region() {
        let m = AnchoredMap::new(vec![0.0, 0.5, 1.0], vec![0.1, 0.5, 0.9], vec![0.8, 5.0, 0.8]).unwrap();
        assert!(m.was_clamped());
        let f = FiberMap::Anchored(m);
        for k in 0..=1000 {
            assert!(f.slope_at(k as f64 / 1000.0) > 0.0);
        }
    }

    #[test]
    fn compose_examples() {
        let sys = systems::sys_m();
        let c = compose_eval(sys.maps(), &[1, 2], 0.0).unwrap();
        assert!((c.value - 0.85).abs() < 1e-15);
        assert!((c.log_abs_deriv_sum - 0.25f64.ln()).abs() < 1e-15);
        assert_eq!(c.trajectory.len(), 3);
        let id = compose_eval(sys.maps(), &[], 0.3).unwrap();
        assert_eq!((id.value, id.log_abs_deriv_sum, id.trajectory), (0.3, 0.0, vec![0.3]));
        let c = compose_eval(&[a()], &[1, 1, 1, 1], 0.2).unwrap();
        assert!((c.value - 0.2).abs() < 1e-15);
        assert!((c.log_abs_deriv_sum - 4.0 * 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn distortion_examples() {
        assert_eq!(distortion(&a(), &Interval::unit(), 101), 1.0);
        let sys = systems::sys_bg();
        let f1 = sys.map(1);
        let wide = distortion(f1, &Interval::new(0.2, 0.3).unwrap(), 1001);
        let narrow = distortion(f1, &Interval::new(0.24, 0.26).unwrap(), 1001);
        assert!(wide >= 1.0 && narrow >= 1.0 && narrow < wide);
        assert_eq!(distortion(f1, &Interval::point(0.3).unwrap(), 1001), 1.0);
        let affine = systems::sys_m();
        for theta in [1e-3, 0.1, 1.0, 3.0] {
            assert_eq!(distortion_global(affine.maps(), theta, 513), 1.0);
        }
    }

    #[test]
    fn global_distortion_tends_to_one() {
        let sys = systems::sys_bg();
        let small = distortion_global(sys.maps(), 1e-3, DEFAULT_DISTORTION_GRID);
        let big = distortion_global(sys.maps(), 1e-1, DEFAULT_DISTORTION_GRID);
        let whole = distortion_global(sys.maps(), 2.0, DEFAULT_DISTORTION_GRID);
        let huge = distortion_global(sys.maps(), 5.0, DEFAULT_DISTORTION_GRID);
        assert!(small < big && big <= whole, "{small} {big} {whole}");
        assert!(small < 1.05, "{small}");
        assert_eq!(whole, huge);
    }

    #[test]
    fn reflections_compose_correctly() {
        let sys = systems::sys_bg();
        for f in sys.maps() {
            let rf = f.post_reflect();
            let fr = f.pre_reflect();
            let rfr = f.conjugate_reflect();
            assert_eq!(rfr.orientation(), f.orientation());
            for k in 0..=50 {
                let x = k as f64 / 50.0;
                assert!((rf.value(x) - (1.0 - f.value(x))).abs() < 1e-14);
                assert!((fr.value(x) - f.value(1.0 - x)).abs() < 1e-14);
                assert!((rfr.value(x) - (1.0 - f.value(1.0 - x))).abs() < 1e-14);
                assert!((fr.slope_at(x) + f.slope_at(1.0 - x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tracked_lengths_survive_deep_contraction() {
        let mut j = Interval::unit();
        for _ in 0..60 {
            j = a().image_interval(&j);
        }
        assert!((j.len() - 0.5f64.powi(60)).abs() < 1e-30);
        assert!((j.lo() - 0.2).abs() < 1e-15);
        let back = a().preimage_interval(&j).unwrap();
        assert!((back.len() - 0.5f64.powi(59)).abs() < 1e-30);
    }

    #[test]
    fn anchored_preimage_length_matches_increment() {
        let sys = systems::sys_bg();
        let f1 = sys.map(1);
        let j = Interval::new(0.3, 0.3 + 1e-9).unwrap();
        let img = f1.image_interval(&j);
        let back = f1.preimage_interval(&img).unwrap();
        assert!((back.len() - j.len()).abs() < 1e-22, "{} {}", back.len(), j.len());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn catalogue() -> Vec<FiberMap> {
            let mut maps = Vec::new();
            for sys in [systems::sys_m(), systems::sys_p(), systems::sys_bg(), systems::sys_bg_shifted()] {
                maps.extend(sys.maps().iter().cloned());
            }
            maps.push(FiberMap::reflected(systems::sys_bg().map(1).clone()));
            maps
        }

        proptest! {
            #[test]
            fn inverse_round_trip(idx in 0usize..7, x in 0.0f64..=1.0) {
                let f = &catalogue()[idx];
                let y = f.eval(x).unwrap();
                prop_assert!((f.inverse(y).unwrap() - x).abs() <= 1e-10);
                prop_assert!((f.value(f.inverse(y).unwrap()) - y).abs() <= 1e-13);
            }

            #[test]
            fn chain_rule_matches_finite_differences(
                word in proptest::collection::vec(1usize..=2, 1..=10),
                x in 0.05f64..0.95,
            ) {
                let sys = systems::sys_bg();
                let c = compose_eval(sys.maps(), &word, x).unwrap();
                let h = 1e-6;
                let plus = compose_eval(sys.maps(), &word, x + h).unwrap().value;
                let minus = compose_eval(sys.maps(), &word, x - h).unwrap().value;
                let fd = ((plus - minus) / (2.0 * h)).abs().ln();
                prop_assert!((fd - c.log_abs_deriv_sum).abs() <= 1e-4 * c.log_abs_deriv_sum.abs().max(1.0));
            }

            #[test]
            fn orientation_algebra(word in proptest::collection::vec(1usize..=2, 0..12)) {
                let sys = systems::sys_bg();
                let reversing = word.iter().filter(|&&s| s == 2).count();
                let expected = if reversing % 2 == 0 { Orientation::Preserving } else { Orientation::Reversing };
                prop_assert_eq!(word_orientation(sys.maps(), &word), expected);
                for f in sys.maps() {
                    prop_assert_eq!(FiberMap::reflected(f.clone()).orientation(), f.orientation().flip());
                }
            }

            #[test]
            fn anchored_interpolant_is_strictly_monotone(idx in 4usize..7, a in 0.0f64..1.0, b in 0.0f64..1.0) {
                prop_assume!(a != b);
                let f = &catalogue()[idx];
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let s = f.orientation().sign();
                prop_assert!(s * (f.value(hi) - f.value(lo)) > 0.0 || hi - lo < 1e-12);
                prop_assert!(s * f.slope_at(lo) > 0.0);
            }
        }
    }
}
