//! Fiber Lyapunov exponents along orbits, hyperbolic (Pliss) times, the
//! backward-contraction bound at hyperbolic times and cardinality of
//! sampled invariant fibers.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fiber::{distortion_global, Interval, DEFAULT_DISTORTION_GRID};
use crate::skew::{PointState, SkewProduct};
use crate::strips::{FiberContent, FiberSampleSet};
use crate::symbolic::Word;

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;
/// Safety factor applied to the sampled distortion before comparing with `e^ε`.
pub const DISTORTION_SAFETY: f64 = 1.0 + 1e-6;

/// Which way the orbit runs. Backward orbits use the inverse maps, so fiber
/// expansion is studied with the same machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDirection {
    Forward,
    Backward,
}

/// `values[k] = log|h_k'(p_k)|` along `p_{k+1} = h_k(p_k)`, where `h_k` is
/// `f_{ξ_k}` forward and `f_{ξ_{−k−1}}⁻¹` backward.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDerivSequence {
    pub direction: TimeDirection,
    pub values: Vec<f64>,
    /// `p_0 .. p_n`.
    pub points: Vec<f64>,
    /// The symbol whose map (or its inverse) is applied at each step.
    pub symbols: Vec<usize>,
}

pub fn orbit_log_derivs<S: SkewProduct + ?Sized>(
    system: &S,
    state: &PointState,
    n: usize,
    direction: TimeDirection,
) -> Result<LogDerivSequence> {
    let symbols: Vec<usize> = match direction {
        TimeDirection::Forward => state.word.future(n)?.to_vec(),
        TimeDirection::Backward => state.word.past(n)?.iter().rev().copied().collect(),
    };
    if let Some(&bad) = symbols.iter().find(|&&s| s == 0 || s > system.alphabet()) {
        return Err(Error::SymbolOutOfRange { symbol: bad, alphabet: system.alphabet() });
    }
    let mut points = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n);
    let mut p = state.fiber;
    points.push(p);
    for &s in &symbols {
        let f = system.map(s);
        match direction {
            TimeDirection::Forward => {
                values.push(f.slope_at(p).abs().ln());
                p = f.value(p);
            }
            TimeDirection::Backward => {
                p = f.inverse(p)?;
                values.push(-f.slope_at(p).abs().ln());
            }
        }
        points.push(p);
    }
    Ok(LogDerivSequence { direction, values, points, symbols })
}

/// Running averages `χ_n = (1/n) Σ_{k<n} values[k]`, `n = 1..=len`.
pub fn lyapunov_orbit(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Precondition("empty log-derivative sequence".into()));
    }
    let mut sum = 0.0;
    Ok(values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            sum += v;
            sum / (k + 1) as f64
        })
        .collect())
}

/// Indices `n` (0-based, so `n + 1` maps are composed) such that
/// `Σ_{k=m}^{n} values[k] ≥ (n − m + 1)·rho` for every `m ≤ n`.
///
/// The smallest suffix slack `M_n = min_m Σ_{k=m}^{n} (values[k] − rho)`
/// obeys `M_n = y_n + min(0, M_{n−1})`, so one pass suffices.
pub fn pliss_times(values: &[f64], rho: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut slack = 0.0f64;
    for (n, v) in values.iter().enumerate() {
        slack = (v - rho) + slack.min(0.0);
        if slack >= 0.0 {
            out.push(n);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlissDensity {
    pub density: f64,
    /// `(χ̂ − ρ)/(L − ρ)` when `χ̂ > ρ` and `L > ρ`.
    pub lower_bound: Option<f64>,
}

impl PlissDensity {
    pub fn consistent(&self) -> bool {
        self.lower_bound.is_none_or(|b| self.density >= b - 1e-9)
    }
}

pub fn pliss_density(values: &[f64], rho: f64) -> Result<PlissDensity> {
    if values.is_empty() {
        return Err(Error::Precondition("empty log-derivative sequence".into()));
    }
    let density = pliss_times(values, rho).len() as f64 / values.len() as f64;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower_bound = (mean > rho && top > rho).then(|| (mean - rho) / (top - rho));
    Ok(PlissDensity { density, lower_bound })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionRow {
    pub k: usize,
    pub j_len: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub n: usize,
    pub theta: f64,
    pub distortion: f64,
    pub rows: Vec<ContractionRow>,
}

impl ContractionReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok).count()
    }

    /// `k,J_len,bound,ok`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,J_len,bound,ok\n");
        for r in &self.rows {
            writeln!(out, "{},{:e},{:e},{}", r.k, r.j_len, r.bound, r.ok).expect("writing to a string");
        }
        out
    }
}

/// Pull `J_{n+1} = [p_{n+1} − ϑ/2, p_{n+1} + ϑ/2] ∩ I` back along the orbit
/// and compare `|J_k|` with `ϑ e^{−(n+1−k)(χ−2ε)}`.
///
/// Forward orbits pull back through `f⁻¹`, first cutting `J_{k+1}` down to
/// the map's image; backward orbits pull back through `f` itself.
pub fn contraction_bound_check<S: SkewProduct + ?Sized>(
    system: &S,
    state: &PointState,
    direction: TimeDirection,
    n: usize,
    theta: f64,
    eps: f64,
    chi: f64,
) -> Result<ContractionReport> {
    if !(eps > 0.0) || !(theta > 0.0) {
        return Err(Error::Precondition(format!("need eps > 0 and theta > 0, got eps={eps}, theta={theta}")));
    }
    if !(chi - 2.0 * eps > 0.0) {
        return Err(Error::Precondition(format!("need chi − 2 eps > 0, got chi={chi}, eps={eps}")));
    }
    let distortion = distortion_global(system.maps(), theta, DEFAULT_DISTORTION_GRID);
    if !(distortion * DISTORTION_SAFETY < eps.exp()) {
        return Err(Error::Precondition(format!(
            "D(theta) = {distortion} is not below e^eps = {} for theta = {theta}",
            eps.exp()
        )));
    }
    let seq = orbit_log_derivs(system, state, n + 1, direction)?;
    if !pliss_times(&seq.values, chi - eps).contains(&n) {
        return Err(Error::Precondition(format!("{n} is not a hyperbolic time with exponent {}", chi - eps)));
    }
    let end = seq.points[n + 1];
    let mut j = Interval::clipped(end - 0.5 * theta, end + 0.5 * theta).expect("window around a fiber point");
    let mut lens = vec![0.0; n + 2];
    lens[n + 1] = j.len();
    for k in (0..=n).rev() {
        let f = system.map(seq.symbols[k]);
        j = match direction {
            TimeDirection::Forward => {
                let inside = j.intersect(&f.image()).ok_or_else(|| {
                    Error::Invariant(format!("pullback at step {k} left the image of map {}", seq.symbols[k]))
                })?;
                f.preimage_interval(&inside)?
            }
            TimeDirection::Backward => f.image_interval(&j),
        };
        lens[k] = j.len();
    }
    let rate = chi - 2.0 * eps;
    let rows = lens
        .into_iter()
        .enumerate()
        .map(|(k, j_len)| {
            let bound = theta * (-((n + 1 - k) as f64) * rate).exp();
            ContractionRow { k, j_len, bound, ok: j_len <= bound * (1.0 + 1e-12) }
        })
        .collect();
    Ok(ContractionReport { n, theta, distortion, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CardinalityReport {
    pub counts: Vec<(Word, usize)>,
    pub max: usize,
}

impl CardinalityReport {
    /// `past,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("past,count\n");
        for (w, c) in &self.counts {
            writeln!(out, "{w},{c}").expect("writing to a string");
        }
        out
    }
}

/// Number of `cluster_tol`-separated points in each sampled fiber.
pub fn fiber_cardinality(samples: &FiberSampleSet, cluster_tol: f64) -> Result<CardinalityReport> {
    let mut counts = Vec::with_capacity(samples.records.len());
    for (w, content) in &samples.records {
        let count = match content {
            FiberContent::Interval(j) if j.len() <= cluster_tol => 1,
            FiberContent::Interval(j) => {
                return Err(Error::Precondition(format!("fiber over {w} has length {:e} above cluster_tol", j.len())))
            }
            FiberContent::Points(xs) => {
                let mut xs = xs.clone();
                xs.sort_by(f64::total_cmp);
                xs.windows(2).filter(|p| p[1] - p[0] > cluster_tol).count() + usize::from(!xs.is_empty())
            }
            FiberContent::Empty => 0,
        };
        counts.push((w.clone(), count));
    }
    let max = counts.iter().map(|c| c.1).max().unwrap_or(0);
    Ok(CardinalityReport { counts, max })
}
