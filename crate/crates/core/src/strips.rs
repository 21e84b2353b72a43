//! Cylinder-constant strips `⨆ [0;i] × J_i`, their certification as
//! attracting or repelling, maximal-attractor fibers and the multi-graph
//! envelopes of sampled fibers.

use std::fmt;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fiber::Interval;
use crate::genericity::{fixed_points, Stability, DEFAULT_STABILITY_TAU};
use crate::measures::{FiberMeasureVector, MASS_FLOOR};
use crate::skew::{ExtendedSystem, SkewProduct};
use crate::symbolic::{MarkovChain, Word, WordSampler};

pub const DEFAULT_MARGIN_FLOOR: f64 = 1e-9;
/// Bin widths added on each side by [`strip_from_measure`] by default.
pub const DEFAULT_EPS_BINS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripKind {
    Attracting,
    Repelling,
    Unknown,
}

impl fmt::Display for StripKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StripKind::Attracting => "attracting",
            StripKind::Repelling => "repelling",
            StripKind::Unknown => "unknown",
        })
    }
}

/// One fiber interval per symbol; `None` marks a symbol the strip omits.
#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    fibers: Vec<Option<Interval>>,
    kind: StripKind,
}

impl Strip {
    pub fn new(fibers: Vec<Option<Interval>>) -> Result<Self> {
        if fibers.is_empty() {
            return Err(Error::ShapeMismatch("a strip needs at least one symbol".into()));
        }
        if fibers.iter().flatten().any(|j| j.hi() <= j.lo()) {
            return Err(Error::Precondition("strip fibers must be nondegenerate".into()));
        }
        Ok(Self { fibers, kind: StripKind::Unknown })
    }

    /// The same interval over every symbol.
    pub fn uniform(alphabet: usize, j: Interval) -> Result<Self> {
        Self::new(vec![Some(j); alphabet])
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::new(bounds.iter().map(|&(lo, hi)| Interval::new(lo, hi).map(Some)).collect::<Result<_>>()?)
    }

    pub fn alphabet(&self) -> usize {
        self.fibers.len()
    }

    pub fn kind(&self) -> StripKind {
        self.kind
    }

    pub fn fibers(&self) -> &[Option<Interval>] {
        &self.fibers
    }

    /// `J_symbol` (1-based).
    pub fn fiber(&self, symbol: usize) -> Option<Interval> {
        self.fibers.get(symbol.wrapping_sub(1)).copied().flatten()
    }

    /// The strip with `kind` set from a successful certification.
    pub fn certified(mut self, cert: &Certification) -> Self {
        if cert.ok {
            self.kind = cert.kind;
        }
        self
    }

    /// `(i, J_i) ↦ (i ± N, R J_i)`.
    pub fn mirror(&self) -> Result<Self> {
        let k = self.alphabet();
        if !k.is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!("mirroring needs an even alphabet, got {k}")));
        }
        let n = k / 2;
        let fibers = (0..k).map(|i| self.fibers[(i + n) % k].map(|j| j.reflect())).collect();
        Ok(Self { fibers, kind: self.kind })
    }
}

impl fmt::Display for Strip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, j) in self.fibers.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match j {
                Some(j) => write!(f, "{}:{}", i + 1, j)?,
                None => write!(f, "{}:-", i + 1)?,
            }
        }
        write!(f, " ({})", self.kind)
    }
}

/// Two strips over the base alphabet.
#[derive(Debug, Clone)]
pub struct BiStrip {
    pub components: [Strip; 2],
}

impl BiStrip {
    /// Equal as an unordered pair of strips, endpoint-exact.
    pub fn same_as(&self, other: &BiStrip) -> bool {
        let [a, b] = &self.components;
        let [c, d] = &other.components;
        (a.fibers == c.fibers && b.fibers == d.fibers) || (a.fibers == d.fibers && b.fibers == c.fibers)
    }

    /// Both components coincide, so the bi-strip is a plain strip.
    pub fn is_simple(&self) -> bool {
        self.components[0].fibers == self.components[1].fibers
    }
}

/// `J_i = [min supp μ_i − eps, max supp μ_i + eps] ∩ [0,1]`, with warnings.
///
/// `eps` defaults to two bin widths. A symbol without mass is omitted when
/// `p` gives it probability zero (or `p` is absent) and is an error
/// otherwise.
pub fn strip_from_measure(
    mu: &FiberMeasureVector,
    eps: Option<f64>,
    p: Option<&[f64]>,
) -> Result<(Strip, Vec<String>)> {
    let eps = eps.unwrap_or(DEFAULT_EPS_BINS * mu.bin_width());
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Precondition(format!("eps must be a nonnegative number, got {eps}")));
    }
    if let Some(p) = p {
        if p.len() != mu.n_symbols() {
            return Err(Error::ShapeMismatch(format!("{} weights for {} symbols", p.len(), mu.n_symbols())));
        }
    }
    let mut warnings = Vec::new();
    if eps == 0.0 {
        warnings.push("eps = 0: strip fibers are bare support hulls and may be degenerate".to_string());
    }
    let mut fibers = Vec::with_capacity(mu.n_symbols());
    for s in 1..=mu.n_symbols() {
        match mu.support(s, MASS_FLOOR) {
            Some((lo, hi)) => fibers.push(Interval::clipped(lo - eps, hi + eps)),
            None => {
                let weight = p.map_or(0.0, |p| p[s - 1]);
                if weight > 0.0 {
                    return Err(Error::Precondition(format!(
                        "symbol {s} has probability {weight} but its fiber measure carries no mass"
                    )));
                }
                warnings.push(format!("symbol {s} carries no mass and is omitted"));
                fibers.push(None);
            }
        }
    }
    Ok((Strip::new(fibers)?, warnings))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub kind: StripKind,
    pub ok: bool,
    pub min_margin: f64,
    /// Per symbol: the worst margin among the transitions checked at it.
    pub margins: Vec<Option<f64>>,
    /// Symbols whose fiber misses the image of every map leading into it.
    pub outside_images: Vec<usize>,
}

impl Certification {
    /// `symbol,lo,hi,kind,margin`.
    pub fn to_csv(&self, strip: &Strip) -> String {
        let mut out = String::from("symbol,lo,hi,kind,margin\n");
        let kind = if self.ok { self.kind } else { StripKind::Unknown };
        for (i, j) in strip.fibers().iter().enumerate() {
            let Some(j) = j else { continue };
            let margin = self.margins[i].map_or(String::new(), |m| m.to_string());
            writeln!(out, "{},{},{},{},{}", i + 1, j.lo(), j.hi(), kind, margin).expect("writing to a string");
        }
        out
    }
}

fn check_alphabet<S: SkewProduct + ?Sized>(system: &S, strip: &Strip) -> Result<()> {
    if strip.alphabet() != system.alphabet() {
        return Err(Error::ShapeMismatch(format!(
            "strip over {} symbols, system over {}",
            strip.alphabet(),
            system.alphabet()
        )));
    }
    Ok(())
}

fn record(margins: &mut [Option<f64>], idx: usize, m: f64) {
    margins[idx] = Some(margins[idx].map_or(m, |old: f64| old.min(m)));
}

/// `g_i(J_i) ⊂ int J_j` for every allowed `i → j`.
pub fn certify_attracting<S: SkewProduct + ?Sized>(
    system: &S,
    strip: &Strip,
    margin_floor: f64,
) -> Result<Certification> {
    certify_attracting_within(system, strip, strip, margin_floor)
}

/// `g_i(J_i) ⊂ int K_j` for every allowed `i → j`, with `K` the outer strip.
pub fn certify_attracting_within<S: SkewProduct + ?Sized>(
    system: &S,
    strip: &Strip,
    outer: &Strip,
    margin_floor: f64,
) -> Result<Certification> {
    check_alphabet(system, strip)?;
    check_alphabet(system, outer)?;
    let k = system.alphabet();
    let mut margins = vec![None; k];
    let mut min_margin = f64::INFINITY;
    for i in 1..=k {
        let Some(ji) = strip.fiber(i) else { continue };
        let img = system.map(i).image_interval(&ji);
        for j in (1..=k).filter(|&j| system.transitions().allows(i, j)) {
            let Some(kj) = outer.fiber(j) else { continue };
            let m = (img.lo() - kj.lo()).min(kj.hi() - img.hi());
            min_margin = min_margin.min(m);
            record(&mut margins, j - 1, m);
        }
    }
    Ok(Certification {
        kind: StripKind::Attracting,
        ok: min_margin.is_finite() && min_margin > margin_floor,
        min_margin,
        margins,
        outside_images: Vec::new(),
    })
}

/// `g_i⁻¹(J_j) ⊂ int J_i` for every allowed `i → j`.
///
/// A transition whose target fiber is not inside `g_i(I)` contributes the
/// (negative) overhang as its margin.
pub fn certify_repelling<S: SkewProduct + ?Sized>(
    system: &S,
    strip: &Strip,
    margin_floor: f64,
) -> Result<Certification> {
    check_alphabet(system, strip)?;
    let k = system.alphabet();
    let mut margins = vec![None; k];
    let mut min_margin = f64::INFINITY;
    let mut outside_images = Vec::new();
    for j in 1..=k {
        let Some(jj) = strip.fiber(j) else { continue };
        let mut touched = false;
        for i in (1..=k).filter(|&i| system.transitions().allows(i, j)) {
            let Some(ji) = strip.fiber(i) else { continue };
            let map = system.map(i);
            let img = map.image();
            if jj.hi() >= img.lo() && jj.lo() <= img.hi() {
                touched = true;
            }
            let m = if jj.within(&img, 0.0) {
                let pre = map.preimage_interval(&jj)?;
                (pre.lo() - ji.lo()).min(ji.hi() - pre.hi())
            } else {
                (jj.lo() - img.lo()).min(img.hi() - jj.hi())
            };
            min_margin = min_margin.min(m);
            record(&mut margins, i - 1, m);
        }
        if !touched {
            outside_images.push(j);
        }
    }
    Ok(Certification {
        kind: StripKind::Repelling,
        ok: outside_images.is_empty() && min_margin.is_finite() && min_margin > margin_floor,
        min_margin,
        margins,
        outside_images,
    })
}

/// One forward step: `J'_j` is the hull of `g_i(J_i)` over allowed `i → j`.
pub fn push_strip<S: SkewProduct + ?Sized>(system: &S, strip: &Strip) -> Result<Strip> {
    check_alphabet(system, strip)?;
    let k = system.alphabet();
    let mut fibers: Vec<Option<Interval>> = vec![None; k];
    for i in 1..=k {
        let Some(ji) = strip.fiber(i) else { continue };
        let img = system.map(i).image_interval(&ji);
        for j in (1..=k).filter(|&j| system.transitions().allows(i, j)) {
            fibers[j - 1] = Some(match fibers[j - 1] {
                None => img,
                Some(old) => Interval::new(old.lo().min(img.lo()), old.hi().max(img.hi()))?,
            });
        }
    }
    Ok(Strip { fibers, kind: strip.kind })
}

/// What a sampled fiber looks like.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberContent {
    Interval(Interval),
    Points(Vec<f64>),
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberSampleSet {
    pub depth: usize,
    pub records: Vec<(Word, FiberContent)>,
}

impl FiberSampleSet {
    /// `past,depth,lo,hi`; point clusters give one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("past,depth,lo,hi\n");
        for (past, content) in &self.records {
            match content {
                FiberContent::Interval(j) => {
                    writeln!(out, "{past},{},{},{}", self.depth, j.lo(), j.hi())
                }
                FiberContent::Points(xs) => xs.iter().try_for_each(|x| writeln!(out, "{past},{},{x},{x}", self.depth)),
                FiberContent::Empty => writeln!(out, "{past},{},,", self.depth),
            }
            .expect("writing to a string");
        }
        out
    }
}

/// Push `J_{ξ_{−depth}}` through `ξ_{−depth} .. ξ_{−1}`, intersecting with
/// the strip fiber of each symbol reached (ending with `J_{ξ_0}`).
pub fn maximal_attractor_fibers<S: SkewProduct + ?Sized>(
    system: &S,
    strip: &Strip,
    pasts: &[Word],
    depth: usize,
) -> Result<FiberSampleSet> {
    check_alphabet(system, strip)?;
    let records =
        pasts.iter().map(|w| Ok((w.clone(), attractor_fiber(system, strip, w, depth)?))).collect::<Result<_>>()?;
    Ok(FiberSampleSet { depth, records })
}

fn attractor_fiber<S: SkewProduct + ?Sized>(
    system: &S,
    strip: &Strip,
    word: &Word,
    depth: usize,
) -> Result<FiberContent> {
    let symbols = word.past(depth)?;
    let first = symbols.first().copied().unwrap_or_else(|| word.current());
    let Some(mut j) = strip.fiber(first) else { return Ok(FiberContent::Empty) };
    for (k, &s) in symbols.iter().enumerate() {
        j = system.map(s).image_interval(&j);
        let next = symbols.get(k + 1).copied().unwrap_or_else(|| word.current());
        let Some(target) = strip.fiber(next) else { return Ok(FiberContent::Empty) };
        match j.intersect(&target) {
            Some(x) => j = x,
            None => return Ok(FiberContent::Empty),
        }
    }
    Ok(FiberContent::Interval(j))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StripOrder {
    /// Strip indices from bottom to top.
    Ordered(Vec<usize>),
    /// The first pair (by index) that overlaps on some shared symbol.
    Incomparable(usize, usize),
}

/// `a < b` when every shared fiber of `a` lies strictly below that of `b`.
pub fn strip_below(a: &Strip, b: &Strip) -> bool {
    a.fibers.iter().zip(&b.fibers).all(|pair| match pair {
        (Some(x), Some(y)) => x.hi() < y.lo(),
        _ => true,
    })
}

pub fn order_strips(strips: &[Strip]) -> Result<StripOrder> {
    if let Some(s) = strips.iter().find(|s| s.alphabet() != strips[0].alphabet()) {
        return Err(Error::ShapeMismatch(format!("strips over {} and {} symbols", strips[0].alphabet(), s.alphabet())));
    }
    for i in 0..strips.len() {
        for j in i + 1..strips.len() {
            if !strip_below(&strips[i], &strips[j]) && !strip_below(&strips[j], &strips[i]) {
                return Ok(StripOrder::Incomparable(i, j));
            }
        }
    }
    let mut idx: Vec<usize> = (0..strips.len()).collect();
    idx.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if strip_below(&strips[a], &strips[b]) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    Ok(StripOrder::Ordered(idx))
}

/// `Π(S)`: component 1 is `J_i`, component 2 is `R J_{i+N}`.
pub fn project_strip(ext: &ExtendedSystem, strip: &Strip) -> Result<BiStrip> {
    check_alphabet(ext, strip)?;
    let n = ext.n();
    let first = Strip { fibers: strip.fibers[..n].to_vec(), kind: strip.kind };
    let second = Strip { fibers: strip.fibers[n..].iter().map(|j| j.map(|j| j.reflect())).collect(), kind: strip.kind };
    Ok(BiStrip { components: [first, second] })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BonyReport {
    pub fat_fraction: f64,
    pub bones: Vec<(Word, f64)>,
}

/// Fraction of sampled pasts whose attractor fiber is longer than `delta`.
pub fn bony_diagnostic<S: SkewProduct + ?Sized>(
    system: &S,
    chain: &MarkovChain,
    strip: &Strip,
    n_pasts: usize,
    depth: usize,
    delta: f64,
    seed: u64,
) -> Result<BonyReport> {
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!("delta must be positive, got {delta}")));
    }
    if chain.alphabet() != system.alphabet() {
        return Err(Error::ShapeMismatch(format!(
            "chain over {} symbols, system over {}",
            chain.alphabet(),
            system.alphabet()
        )));
    }
    let sampler = WordSampler::new(chain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pasts: Vec<Word> = (0..n_pasts).map(|_| sampler.sample(depth, 0, &mut rng)).collect();
    let set = maximal_attractor_fibers(system, strip, &pasts, depth)?;
    let bones: Vec<(Word, f64)> = set
        .records
        .into_iter()
        .filter_map(|(w, c)| match c {
            FiberContent::Interval(j) if j.len() > delta => Some((w, j.len())),
            _ => None,
        })
        .collect();
    let fat_fraction = if n_pasts == 0 { 0.0 } else { bones.len() as f64 / n_pasts as f64 };
    Ok(BonyReport { fat_fraction, bones })
}

/// Attracting periodic orbits of the block's cyclic composition, as the
/// fibers over the `block.len()` rotations of the periodic word.
pub fn periodic_orbit_fibers<S: SkewProduct + ?Sized>(system: &S, block: &[usize]) -> Result<FiberSampleSet> {
    let p = block.len();
    if p == 0 {
        return Err(Error::InvalidWord("empty periodic block".into()));
    }
    let mut cyclic = block.to_vec();
    cyclic.push(block[0]);
    if !system.transitions().admits(&cyclic) {
        return Err(Error::InvalidWord("block is not cyclically admissible".into()));
    }
    let starts: Vec<f64> = fixed_points(system.maps(), block, DEFAULT_STABILITY_TAU)?
        .into_iter()
        .filter(|r| r.stability == Stability::Attracting)
        .map(|r| r.x)
        .collect();
    let mut phases: Vec<Vec<f64>> = vec![Vec::new(); p];
    for &x in &starts {
        let mut y = x;
        for (k, &s) in block.iter().enumerate() {
            phases[k].push(y);
            y = system.map(s).value(y);
        }
    }
    let records = phases
        .into_iter()
        .enumerate()
        .map(|(k, mut xs)| {
            xs.sort_by(f64::total_cmp);
            let rotated: Vec<usize> = block[k..].iter().chain(&block[..k]).copied().collect();
            let word = Word::periodic(&rotated, p, 0, system.alphabet())?;
            Ok((word, if xs.is_empty() { FiberContent::Empty } else { FiberContent::Points(xs) }))
        })
        .collect::<Result<_>>()?;
    Ok(FiberSampleSet { depth: p, records })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    /// `(past, φ⁻, φ⁺)` for each usable record.
    pub rows: Vec<(Word, f64, f64)>,
    pub fat_excluded: usize,
    pub empty_excluded: usize,
    pub non_simple_fraction: f64,
    pub simple: bool,
}

/// `φ⁻ = min` and `φ⁺ = max` of each fiber; non-simple when
/// `φ⁺ − φ⁻ > 10·cluster_tol` on at least half of the pasts.
pub fn envelope_graphs(samples: &FiberSampleSet, cluster_tol: f64) -> Result<EnvelopeReport> {
    if samples.records.is_empty() {
        return Err(Error::Precondition("empty sample set".into()));
    }
    let mut rows = Vec::new();
    let (mut fat_excluded, mut empty_excluded) = (0, 0);
    for (w, c) in &samples.records {
        match c {
            FiberContent::Interval(j) if j.len() <= cluster_tol => rows.push((w.clone(), j.lo(), j.hi())),
            FiberContent::Interval(_) => fat_excluded += 1,
            FiberContent::Points(xs) if !xs.is_empty() => {
                let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                rows.push((w.clone(), lo, hi));
            }
            _ => empty_excluded += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::Precondition("every sampled fiber is fat or empty".into()));
    }
    let spread = rows.iter().filter(|(_, lo, hi)| hi - lo > 10.0 * cluster_tol).count();
    let non_simple_fraction = spread as f64 / rows.len() as f64;
    Ok(EnvelopeReport { rows, fat_excluded, empty_excluded, non_simple_fraction, simple: non_simple_fraction < 0.5 })
}
