//! Step skew-products `F(ξ, p) = (σξ, f_{ξ0}(p))`, the orientation-doubled
//! extension `G` over the 2N-symbol shift `Σ_A`, and the projection `Π`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fiber::{FiberMap, Interval, Orientation};
use crate::symbolic::{reduce_symbol, MarkovChain, TransitionMatrix, Word, WordSampler};

/// Largest number of windows `two_to_one_census` will enumerate.
pub const CENSUS_LIMIT: u128 = 10_000_000;

/// Common view of `F` and `G`: an alphabet, one fiber map per symbol and
/// the allowed transitions.
pub trait SkewProduct {
    fn alphabet(&self) -> usize;

    /// All fiber maps; `maps()[s - 1]` acts over symbol `s`.
    fn maps(&self) -> &[FiberMap];

    fn transitions(&self) -> &TransitionMatrix;

    fn map(&self, symbol: usize) -> &FiberMap {
        &self.maps()[symbol - 1]
    }
}

/// `F` over the full shift on `N` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSkewSystem {
    maps: Vec<FiberMap>,
    absorbing: bool,
    full: TransitionMatrix,
}

impl StepSkewSystem {
    pub fn new(maps: Vec<FiberMap>, absorbing: bool) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidMap("a skew-product needs at least one fiber map".into()));
        }
        if absorbing {
            for (k, f) in maps.iter().enumerate() {
                let img = f.image();
                if !(img.lo() > 0.0 && img.hi() < 1.0) {
                    return Err(Error::InvalidMap(format!(
                        "map {} is not absorbing: image {img} touches the boundary",
                        k + 1
                    )));
                }
            }
        }
        let full = TransitionMatrix::full(maps.len());
        Ok(Self { maps, absorbing, full })
    }

    pub fn n(&self) -> usize {
        self.maps.len()
    }

    pub fn absorbing(&self) -> bool {
        self.absorbing
    }

    /// Symbols of orientation-preserving maps (`I_P`).
    pub fn preserving_symbols(&self) -> Vec<usize> {
        self.symbols_with(Orientation::Preserving)
    }

    /// Symbols of orientation-reversing maps (`I_R`).
    pub fn reversing_symbols(&self) -> Vec<usize> {
        self.symbols_with(Orientation::Reversing)
    }

    fn symbols_with(&self, o: Orientation) -> Vec<usize> {
        (1..=self.n()).filter(|&i| self.maps[i - 1].orientation() == o).collect()
    }

    /// Same system with map `symbol` replaced.
    pub fn with_map(&self, symbol: usize, map: FiberMap) -> Result<Self> {
        if symbol == 0 || symbol > self.n() {
            return Err(Error::SymbolOutOfRange { symbol, alphabet: self.n() });
        }
        let mut maps = self.maps.clone();
        maps[symbol - 1] = map;
        Self::new(maps, self.absorbing)
    }
}

impl SkewProduct for StepSkewSystem {
    fn alphabet(&self) -> usize {
        self.maps.len()
    }

    fn maps(&self) -> &[FiberMap] {
        &self.maps
    }

    fn transitions(&self) -> &TransitionMatrix {
        &self.full
    }
}

/// `G`: maps `g_1 .. g_{2N}` over `Σ_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedSystem {
    base: StepSkewSystem,
    a: TransitionMatrix,
    gmaps: Vec<FiberMap>,
}

impl ExtendedSystem {
    pub fn base(&self) -> &StepSkewSystem {
        &self.base
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// Replace one g-map, e.g. to build a negative control.
    pub fn with_gmap(&self, symbol: usize, map: FiberMap) -> Result<Self> {
        if symbol == 0 || symbol > self.gmaps.len() {
            return Err(Error::SymbolOutOfRange { symbol, alphabet: self.gmaps.len() });
        }
        if map.orientation() != Orientation::Preserving {
            return Err(Error::InvalidMap("g-maps must preserve orientation".into()));
        }
        let mut out = self.clone();
        out.gmaps[symbol - 1] = map;
        Ok(out)
    }
}

impl SkewProduct for ExtendedSystem {
    fn alphabet(&self) -> usize {
        self.gmaps.len()
    }

    fn maps(&self) -> &[FiberMap] {
        &self.gmaps
    }

    fn transitions(&self) -> &TransitionMatrix {
        &self.a
    }
}

/// Build `A` and the orientation-preserving maps `g_i`.
pub fn build_extension(system: &StepSkewSystem) -> ExtendedSystem {
    let n = system.n();
    let preserving: Vec<bool> = system.maps.iter().map(|f| f.orientation() == Orientation::Preserving).collect();
    let mut rows = vec![vec![0u8; 2 * n]; 2 * n];
    for (i, row) in rows.iter_mut().enumerate() {
        let (sheet_one, base) = if i < n { (true, i) } else { (false, i - n) };
        for (j, entry) in row.iter_mut().enumerate() {
            let to_first = j < n;
            *entry = u8::from(if sheet_one == preserving[base] { to_first } else { !to_first });
        }
    }
    let a = TransitionMatrix::new(rows).expect("every row of A has N allowed successors");
    let mut gmaps = Vec::with_capacity(2 * n);
    let mut second = Vec::with_capacity(n);
    for (f, &p) in system.maps.iter().zip(&preserving) {
        if p {
            gmaps.push(f.clone());
            second.push(f.conjugate_reflect());
        } else {
            gmaps.push(f.post_reflect());
            second.push(f.pre_reflect());
        }
    }
    gmaps.extend(second);
    debug_assert!(gmaps.iter().all(|g| g.orientation() == Orientation::Preserving));
    ExtendedSystem { base: system.clone(), a, gmaps }
}

/// A point `(ξ, p)` with `ξ` known on a finite window.
#[derive(Debug, Clone, PartialEq)]
pub struct PointState {
    pub word: Word,
    pub fiber: f64,
}

impl PointState {
    pub fn new(word: Word, fiber: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fiber) {
            return Err(Error::OutsideUnitInterval(fiber));
        }
        Ok(Self { word, fiber })
    }
}

fn check_symbol<S: SkewProduct + ?Sized>(system: &S, s: usize) -> Result<()> {
    if s == 0 || s > system.alphabet() {
        Err(Error::SymbolOutOfRange { symbol: s, alphabet: system.alphabet() })
    } else {
        Ok(())
    }
}

/// `(ξ, p) ↦ (σξ, f_{ξ0}(p))`.
pub fn step_forward<S: SkewProduct + ?Sized>(system: &S, state: &PointState) -> Result<PointState> {
    if state.word.future_len() == 0 {
        return Err(Error::WindowExhausted("no future symbol left to shift onto".into()));
    }
    let s = state.word.current();
    check_symbol(system, s)?;
    Ok(PointState { word: state.word.shifted(1)?, fiber: system.map(s).value(state.fiber) })
}

/// `F⁻¹`, defined only when `p` lies in the image of `f_{ξ_{−1}}`.
pub fn step_backward<S: SkewProduct + ?Sized>(system: &S, state: &PointState) -> Result<PointState> {
    let s = state.word.at(-1).ok_or_else(|| Error::WindowExhausted("no past symbol before the origin".into()))?;
    check_symbol(system, s)?;
    let fiber = system.map(s).inverse(state.fiber)?;
    Ok(PointState { word: state.word.shifted(-1)?, fiber })
}

/// `f_{ξ_{−1}} ∘ … ∘ f_{ξ_{−depth}}([0,1])`.
pub fn fiber_interval<S: SkewProduct + ?Sized>(system: &S, past: &Word, depth: usize) -> Result<Interval> {
    push_through(system, past.past(depth)?, Interval::unit())
}

/// Push `start` through the maps of `symbols`, leftmost first.
pub fn push_through<S: SkewProduct + ?Sized>(system: &S, symbols: &[usize], start: Interval) -> Result<Interval> {
    let mut j = start;
    for &s in symbols {
        check_symbol(system, s)?;
        j = system.map(s).image_interval(&j);
    }
    Ok(j)
}

/// Which of the two lifts of a base sequence to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SheetClass {
    /// `ω_0 = ξ_0`.
    First,
    /// `ω_0 = ξ_0 + N`.
    Second,
}

/// The unique A-admissible `ω` with `ω̄ = ξ` and prescribed `ω_0`.
pub fn lift_sequence(ext: &ExtendedSystem, xi: &Word, class: SheetClass) -> Result<Word> {
    let n = ext.n();
    let syms = xi.symbols();
    if let Some(&bad) = syms.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::SymbolOutOfRange { symbol: bad, alphabet: n });
    }
    let o = xi.origin();
    let mut omega = vec![0usize; syms.len()];
    omega[o] = match class {
        SheetClass::First => syms[o],
        SheetClass::Second => syms[o] + n,
    };
    for k in o + 1..syms.len() {
        let prev = omega[k - 1];
        omega[k] = if ext.a.allows(prev, syms[k]) { syms[k] } else { syms[k] + n };
    }
    for k in (0..o).rev() {
        let next = omega[k + 1];
        omega[k] = if ext.a.allows(syms[k], next) { syms[k] } else { syms[k] + n };
    }
    debug_assert!(ext.a.admits(&omega));
    Word::new(omega, o, 2 * n)
}

/// `Π(ω, x) = (ω̄, x)` on the first sheet and `(ω̄, 1 − x)` on the second.
pub fn project_point(ext: &ExtendedSystem, state: &PointState) -> Result<PointState> {
    let n = ext.n();
    let word = state.word.reduce_mod(n)?;
    let fiber = if state.word.current() <= n { state.fiber } else { 1.0 - state.fiber };
    Ok(PointState { word, fiber })
}

/// Outcome of comparing `Π∘G` with `F∘Π` on random states.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiconjugacyReport {
    pub samples: usize,
    pub max_discrepancy: f64,
    pub base_mismatches: usize,
}

impl SemiconjugacyReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.base_mismatches == 0 && self.max_discrepancy <= tol
    }
}

/// Sample `ω` by lifting base-chain words on a fair-coin sheet and `x`
/// uniformly, then measure `|Π(G(ω,x)) − F(Π(ω,x))|` in the fiber.
pub fn verify_semiconjugacy(
    system: &StepSkewSystem,
    ext: &ExtendedSystem,
    chain: &MarkovChain,
    n_samples: usize,
    seed: u64,
) -> Result<SemiconjugacyReport> {
    if n_samples == 0 {
        return Err(Error::Precondition("n_samples must be at least 1".into()));
    }
    if chain.alphabet() != system.n() {
        return Err(Error::ShapeMismatch(format!(
            "chain over {} symbols, system over {}",
            chain.alphabet(),
            system.n()
        )));
    }
    let sampler = WordSampler::new(chain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for _ in 0..n_samples {
        let xi = sampler.sample(2, 2, &mut rng);
        let class = if rng.random::<bool>() { SheetClass::First } else { SheetClass::Second };
        let x: f64 = rng.random();
        let omega = PointState { word: lift_sequence(ext, &xi, class)?, fiber: x };
        let left = project_point(ext, &step_forward(ext, &omega)?)?;
        let right = step_forward(system, &project_point(ext, &omega)?)?;
        if left.word != right.word {
            mismatches += 1;
        }
        worst = worst.max((left.fiber - right.fiber).abs());
    }
    Ok(SemiconjugacyReport { samples: n_samples, max_discrepancy: worst, base_mismatches: mismatches })
}

/// Counts of A-admissible lifts over every base window of radius `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub radius: usize,
    pub windows: u64,
    /// Windows whose lift count differs from two, with that count (first 16).
    pub exceptions: Vec<(Vec<usize>, u64)>,
    pub exception_count: u64,
}

impl CensusReport {
    pub fn all_two(&self) -> bool {
        self.exception_count == 0
    }
}

/// Enumerate all `N^{2k+1}` base windows and count their lifts.
pub fn two_to_one_census(ext: &ExtendedSystem, k: usize) -> Result<CensusReport> {
    if k == 0 {
        return Err(Error::Precondition("census radius must be at least 1".into()));
    }
    let n = ext.n();
    let len = 2 * k + 1;
    let count = (n as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    if count > CENSUS_LIMIT {
        return Err(Error::EnumerationTooLarge { count, limit: CENSUS_LIMIT });
    }
    let mut window = vec![1usize; len];
    let mut exceptions = Vec::new();
    let mut exception_count = 0;
    for _ in 0..count {
        let lifts = count_lifts(ext, &window);
        if lifts != 2 {
            exception_count += 1;
            if exceptions.len() < 16 {
                exceptions.push((window.clone(), lifts));
            }
        }
        for slot in window.iter_mut().rev() {
            if *slot < n {
                *slot += 1;
                break;
            }
            *slot = 1;
        }
    }
    Ok(CensusReport { radius: k, windows: count as u64, exceptions, exception_count })
}

fn count_lifts(ext: &ExtendedSystem, window: &[usize]) -> u64 {
    let n = ext.n();
    let mut ways = [1u64, 1u64];
    for pair in window.windows(2) {
        let mut next = [0u64; 2];
        for (to_sheet, slot) in next.iter_mut().enumerate() {
            let to = pair[1] + to_sheet * n;
            for (from_sheet, &w) in ways.iter().enumerate() {
                if ext.a.allows(pair[0] + from_sheet * n, to) {
                    *slot += w;
                }
            }
        }
        ways = next;
    }
    ways[0] + ways[1]
}

/// `ω̄`: reduce a symbol of the extension to the base alphabet.
pub fn base_symbol(ext: &ExtendedSystem, symbol: usize) -> usize {
    reduce_symbol(symbol, ext.n())
}
