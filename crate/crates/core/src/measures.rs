//! Markov measures on `Σ_A`, binned fiber measures, the Ulam transfer
//! operator and its stationary measures, mirroring, Birkhoff sampling and
//! fiber Lyapunov exponents of measures.
//!
//! Two indexings of a fiber measure appear here. A stationary measure in
//! the sense of `μ_i(E) = Σ_j P_ji μ_j(g_i⁻¹E)` is indexed by the symbol of
//! the map that produced the fiber point. Birkhoff histograms, `Π` and the
//! strip cylinders `[0; i]` are indexed by the current symbol `ω_0`, whose
//! map is about to act. [`current_symbol_marginal`] converts the former into
//! the latter.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::skew::{ExtendedSystem, SkewProduct};
use crate::symbolic::{reduce_symbol, MarkovChain, MarkovChainSpec, WordSampler};

pub const DEFAULT_BINS: usize = 2048;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Bins with at most this mass are ignored when locating supports.
pub const MASS_FLOOR: f64 = 1e-12;
pub const MIN_BINS: usize = 16;

/// Per-symbol histograms over a uniform partition of `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberMeasureVector {
    n_bins: usize,
    masses: Vec<Vec<f64>>,
}

impl FiberMeasureVector {
    pub fn new(masses: Vec<Vec<f64>>) -> Result<Self> {
        let n_bins = masses.first().map_or(0, Vec::len);
        if masses.is_empty() || n_bins == 0 {
            return Err(Error::ShapeMismatch("a fiber measure needs at least one symbol and one bin".into()));
        }
        if masses.iter().any(|row| row.len() != n_bins) {
            return Err(Error::ShapeMismatch("every symbol needs the same number of bins".into()));
        }
        if masses.iter().flatten().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::ShapeMismatch("bin masses must be finite and nonnegative".into()));
        }
        Ok(Self { n_bins, masses })
    }

    pub fn zeros(n_symbols: usize, n_bins: usize) -> Self {
        Self { n_bins, masses: vec![vec![0.0; n_bins]; n_symbols] }
    }

    /// Lebesgue measure on each fiber, scaled by `weights`.
    pub fn uniform(weights: &[f64], n_bins: usize) -> Self {
        let masses = weights.iter().map(|w| vec![w / n_bins as f64; n_bins]).collect();
        Self { n_bins, masses }
    }

    /// A point mass at `x` on each fiber, scaled by `weights`.
    pub fn dirac(weights: &[f64], n_bins: usize, x: f64) -> Self {
        let mut mu = Self::zeros(weights.len(), n_bins);
        let b = mu.bin_of(x);
        for (row, w) in mu.masses.iter_mut().zip(weights) {
            row[b] = *w;
        }
        mu
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_symbols(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[Vec<f64>] {
        &self.masses
    }

    /// Bins of symbol `s` (1-based).
    pub fn symbol(&self, s: usize) -> &[f64] {
        &self.masses[s - 1]
    }

    pub fn add(&mut self, symbol: usize, bin: usize, mass: f64) {
        self.masses[symbol - 1][bin] += mass;
    }

    pub fn symbol_masses(&self) -> Vec<f64> {
        self.masses.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.symbol_masses().iter().sum()
    }

    pub fn bin_of(&self, x: f64) -> usize {
        ((x * self.n_bins as f64).floor().max(0.0) as usize).min(self.n_bins - 1)
    }

    pub fn bin_bounds(&self, b: usize) -> (f64, f64) {
        (b as f64 / self.n_bins as f64, (b + 1) as f64 / self.n_bins as f64)
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.n_bins as f64
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        (b as f64 + 0.5) / self.n_bins as f64
    }

    /// `[lo of first bin, hi of last bin]` carrying more than `floor`.
    pub fn support(&self, symbol: usize, floor: f64) -> Option<(f64, f64)> {
        let row = self.symbol(symbol);
        let first = row.iter().position(|&m| m > floor)?;
        let last = row.iter().rposition(|&m| m > floor)?;
        Some((self.bin_bounds(first).0, self.bin_bounds(last).1))
    }

    /// Hull of the supports of all symbols.
    pub fn overall_support(&self, floor: f64) -> Option<(f64, f64)> {
        (1..=self.n_symbols()).filter_map(|s| self.support(s, floor)).reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.masses.iter().flatten().zip(other.masses.iter().flatten()).map(|(a, b)| (a - b).abs()).sum()
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n_bins != other.n_bins || self.n_symbols() != other.n_symbols() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} measure against {}x{}",
                self.n_symbols(),
                self.n_bins,
                other.n_symbols(),
                other.n_bins
            )));
        }
        Ok(())
    }

    /// CSV with header `symbol,bin_lo,bin_hi,mass`, sorted by symbol then bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("symbol,bin_lo,bin_hi,mass\n");
        for (s, row) in self.masses.iter().enumerate() {
            for (b, m) in row.iter().enumerate() {
                let (lo, hi) = self.bin_bounds(b);
                writeln!(out, "{},{lo},{hi},{m}", s + 1).expect("writing to a string");
            }
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("symbol,bin_lo,bin_hi,mass") => {}
            other => return Err(Error::Parse(format!("unexpected measure CSV header {other:?}"))),
        }
        let mut rows: Vec<Vec<(f64, f64, f64)>> = Vec::new();
        for (k, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!("row {}: expected 4 fields", k + 1)));
            }
            let symbol: usize = fields[0].parse().map_err(|_| Error::Parse(format!("row {}: bad symbol", k + 1)))?;
            let num = |t: &str| -> Result<f64> {
                t.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {t:?}", k + 1)))
            };
            let (lo, hi, mass) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
            if symbol == rows.len() + 1 {
                rows.push(Vec::new());
            } else if symbol != rows.len() || symbol == 0 {
                return Err(Error::Parse(format!("row {}: symbols must appear in order 1, 2, …", k + 1)));
            }
            rows[symbol - 1].push((lo, hi, mass));
        }
        let n_bins = rows.first().map_or(0, Vec::len);
        if n_bins == 0 || rows.iter().any(|r| r.len() != n_bins) {
            return Err(Error::Parse("every symbol needs the same positive number of bins".into()));
        }
        let width = 1.0 / n_bins as f64;
        for r in &rows {
            for (b, &(lo, hi, _)) in r.iter().enumerate() {
                if (lo - b as f64 * width).abs() > 1e-12 || (hi - (b + 1) as f64 * width).abs() > 1e-12 {
                    return Err(Error::Parse(format!("bin {b} edges [{lo}, {hi}] do not match a uniform grid")));
                }
            }
        }
        let masses = rows.into_iter().map(|r| r.into_iter().map(|t| t.2).collect()).collect();
        Self::new(masses).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A Markov measure on `Σ_A` invariant under the sheet swap `i ↔ i + N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMarkov {
    chain: MarkovChain,
    n: usize,
}

impl SymmetricMarkov {
    /// Check the symmetry identities exactly.
    pub fn new(chain: MarkovChain, ext: &ExtendedSystem) -> Result<Self> {
        let n = ext.n();
        if chain.alphabet() != 2 * n {
            return Err(Error::ShapeMismatch(format!("chain over {} symbols, need {}", chain.alphabet(), 2 * n)));
        }
        let p = chain.p();
        for i in 1..=2 * n {
            for j in 1..=2 * n {
                if chain.prob(i, j) > 0.0 && !ext.matrix().allows(i, j) {
                    return Err(Error::InvalidMarkov(format!("support violation: P_{i},{j} > 0 but a_{i},{j} = 0")));
                }
            }
        }
        for i in 1..=n {
            if p[i - 1] != p[i + n - 1] {
                return Err(Error::InvalidMarkov(format!("not symmetric: p_{i} != p_{}", i + n)));
            }
            for j in 1..=n {
                if chain.prob(i, j) != chain.prob(i + n, j + n) || chain.prob(i, j + n) != chain.prob(i + n, j) {
                    return Err(Error::InvalidMarkov(format!("not symmetric at transition {i} -> {j}")));
                }
            }
        }
        Ok(Self { chain, n })
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn base_alphabet(&self) -> usize {
        self.n
    }
}

/// The unique symmetric Markov measure on `Σ_A` projecting to `λ_0`.
pub fn symmetric_extension(lambda0: &MarkovChain, ext: &ExtendedSystem) -> Result<SymmetricMarkov> {
    let n = ext.n();
    if lambda0.alphabet() != n {
        return Err(Error::ShapeMismatch(format!("chain over {} symbols, system over {n}", lambda0.alphabet())));
    }
    if let Some(i) = lambda0.p().iter().position(|&v| v <= 0.0) {
        return Err(Error::InvalidMarkov(format!("degenerate measure: p_{} = 0", i + 1)));
    }
    let p: Vec<f64> = (1..=2 * n).map(|i| lambda0.p()[reduce_symbol(i, n) - 1] / 2.0).collect();
    let transition = (1..=2 * n)
        .map(|i| {
            (1..=2 * n)
                .map(|j| {
                    if ext.matrix().allows(i, j) {
                        lambda0.prob(reduce_symbol(i, n), reduce_symbol(j, n))
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let spec = MarkovChainSpec { p, transition, support: Some(ext.matrix().clone()) };
    SymmetricMarkov::new(MarkovChain::new(spec)?, ext)
}

/// `π_* λ`.
pub fn project_markov(lambda: &SymmetricMarkov) -> MarkovChainSpec {
    let n = lambda.n;
    let c = &lambda.chain;
    let p = (1..=n).map(|i| c.p()[i - 1] + c.p()[i + n - 1]).collect();
    let transition = (1..=n).map(|i| (1..=n).map(|j| c.prob(i, j) + c.prob(i, j + n)).collect()).collect();
    MarkovChainSpec { p, transition, support: None }
}

/// Ulam discretisation of `μ ↦ g_*μ` on a fixed bin grid.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    n_bins: usize,
    /// For each destination symbol `i`, the pairs `(j, P_ji)` with `P_ji > 0`.
    preds: Vec<Vec<(usize, f64)>>,
    /// For each map, CSR rows `offsets[b] .. offsets[b + 1]` into `targets`.
    offsets: Vec<Vec<usize>>,
    targets: Vec<Vec<(usize, f64)>>,
}

impl TransferOperator {
    pub fn new<S: SkewProduct + ?Sized>(system: &S, chain: &MarkovChain, n_bins: usize) -> Result<Self> {
        let k = system.alphabet();
        if chain.alphabet() != k {
            return Err(Error::ShapeMismatch(format!("chain over {} symbols, system over {k}", chain.alphabet())));
        }
        if n_bins < MIN_BINS {
            return Err(Error::Precondition(format!("need at least {MIN_BINS} bins, got {n_bins}")));
        }
        let mut preds = vec![Vec::new(); k];
        for j in 1..=k {
            for i in 1..=k {
                let pji = chain.prob(j, i);
                if pji > 0.0 {
                    if !system.transitions().allows(j, i) {
                        return Err(Error::InvalidMarkov(format!("chain uses forbidden transition {j} -> {i}")));
                    }
                    preds[i - 1].push((j - 1, pji));
                }
            }
        }
        let grid = FiberMeasureVector::zeros(1, n_bins);
        let mut offsets = Vec::with_capacity(k);
        let mut targets = Vec::with_capacity(k);
        for g in system.maps() {
            let mut off = Vec::with_capacity(n_bins + 1);
            let mut tg = Vec::with_capacity(3 * n_bins);
            off.push(0);
            for b in 0..n_bins {
                let (lo, hi) = grid.bin_bounds(b);
                let (a, c) = (g.value(lo), g.value(hi));
                let (lo, hi) = if a <= c { (a, c) } else { (c, a) };
                let start = tg.len();
                if hi > lo {
                    for d in grid.bin_of(lo)..=grid.bin_of(hi) {
                        let (dlo, dhi) = grid.bin_bounds(d);
                        let overlap = hi.min(dhi) - lo.max(dlo);
                        if overlap > 0.0 {
                            tg.push((d, overlap));
                        }
                    }
                }
                if tg.len() == start {
                    tg.push((grid.bin_of(lo), 1.0));
                }
                let sum: f64 = tg[start..].iter().map(|t| t.1).sum();
                for t in &mut tg[start..] {
                    t.1 /= sum;
                }
                off.push(tg.len());
            }
            offsets.push(off);
            targets.push(tg);
        }
        Ok(Self { n_bins, preds, offsets, targets })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_symbols(&self) -> usize {
        self.preds.len()
    }

    fn check(&self, mu: &FiberMeasureVector) -> Result<()> {
        if mu.n_bins != self.n_bins || mu.n_symbols() != self.n_symbols() {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, measure is {}x{}",
                self.n_symbols(),
                self.n_bins,
                mu.n_symbols(),
                mu.n_bins
            )));
        }
        Ok(())
    }

    /// `(g_*μ)_i = Σ_j P_ji (g_i)_* μ_j`.
    pub fn apply(&self, mu: &FiberMeasureVector) -> Result<FiberMeasureVector> {
        self.check(mu)?;
        Ok(self.apply_unchecked(mu))
    }

    fn apply_unchecked(&self, mu: &FiberMeasureVector) -> FiberMeasureVector {
        let n = self.n_bins;
        let mut out = FiberMeasureVector::zeros(self.n_symbols(), n);
        let mut w = vec![0.0; n];
        for (i, preds) in self.preds.iter().enumerate() {
            w.iter_mut().for_each(|v| *v = 0.0);
            for &(j, pji) in preds {
                for (acc, m) in w.iter_mut().zip(&mu.masses[j]) {
                    *acc += pji * m;
                }
            }
            let (off, tg) = (&self.offsets[i], &self.targets[i]);
            let row = &mut out.masses[i];
            for b in 0..n {
                let m = w[b];
                if m == 0.0 {
                    continue;
                }
                for &(d, frac) in &tg[off[b]..off[b + 1]] {
                    row[d] += m * frac;
                }
            }
        }
        out
    }

    /// `‖μ − g_*μ‖_{L1}`.
    pub fn residual(&self, mu: &FiberMeasureVector) -> Result<f64> {
        Ok(mu.l1_distance(&self.apply(mu)?))
    }
}

/// One application of the transfer operator, built on the fly.
pub fn transfer_step<S: SkewProduct + ?Sized>(
    system: &S,
    chain: &MarkovChain,
    mu: &FiberMeasureVector,
) -> Result<FiberMeasureVector> {
    TransferOperator::new(system, chain, mu.n_bins())?.apply(mu)
}

/// Result of iterating the transfer operator.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub measure: FiberMeasureVector,
    /// `‖μ − g_*μ‖_{L1}` of the returned measure.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(iteration, residual)` at every tenth iterate.
    pub residual_log: Vec<(usize, f64)>,
}

impl StationaryResult {
    pub fn support(&self, symbol: usize) -> Option<(f64, f64)> {
        self.measure.support(symbol, MASS_FLOOR)
    }
}

/// Iterate from `seed` until successive iterates differ by at most `tol`
/// in L1. On exhaustion the last iterate is returned with `converged` unset.
pub fn stationary_measure(
    op: &TransferOperator,
    seed: &FiberMeasureVector,
    tol: f64,
    max_iter: usize,
) -> Result<StationaryResult> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tol must be positive, got {tol}")));
    }
    op.check(seed)?;
    let mut cur = seed.clone();
    let mut log = Vec::new();
    for it in 0..max_iter {
        let next = op.apply_unchecked(&cur);
        let d = cur.l1_distance(&next);
        if it % 10 == 0 {
            log.push((it, d));
        }
        if d <= tol {
            return Ok(StationaryResult {
                measure: cur,
                residual: d,
                iterations: it,
                converged: true,
                residual_log: log,
            });
        }
        cur = next;
    }
    let residual = op.residual(&cur)?;
    Ok(StationaryResult { measure: cur, residual, iterations: max_iter, converged: false, residual_log: log })
}

/// Limits reached from the uniform seed and from point masses at 0.1, 0.5
/// and 0.9, each weighted by the chain's stationary vector. Limits within
/// `100·tol` of an earlier one are merged; a limit whose support strictly
/// contains another's is treated as a mixture and dropped.
pub fn ergodic_candidates(
    op: &TransferOperator,
    weights: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<StationaryResult>> {
    let n = op.n_bins();
    let seeds = [
        FiberMeasureVector::uniform(weights, n),
        FiberMeasureVector::dirac(weights, n, 0.1),
        FiberMeasureVector::dirac(weights, n, 0.5),
        FiberMeasureVector::dirac(weights, n, 0.9),
    ];
    let mut found: Vec<StationaryResult> = Vec::new();
    for seed in &seeds {
        let r = stationary_measure(op, seed, tol, max_iter)?;
        if found.iter().all(|f| f.measure.l1_distance(&r.measure) > 100.0 * tol) {
            found.push(r);
        }
    }
    let supports: Vec<Vec<Vec<bool>>> = found
        .iter()
        .map(|r| r.measure.masses.iter().map(|row| row.iter().map(|&m| m > MASS_FLOOR).collect()).collect())
        .collect();
    let strictly_inside = |a: &Vec<Vec<bool>>, b: &Vec<Vec<bool>>| {
        a != b && a.iter().flatten().zip(b.iter().flatten()).all(|(&x, &y)| !x || y)
    };
    let keep: Vec<bool> = (0..found.len())
        .map(|k| !(0..found.len()).any(|other| other != k && strictly_inside(&supports[other], &supports[k])))
        .collect();
    Ok(found.into_iter().zip(keep).filter_map(|(r, k)| k.then_some(r)).collect())
}

/// `μ'(D × E) = μ(s(D) × R(E))`.
pub fn mirror_measure(mu: &FiberMeasureVector) -> Result<FiberMeasureVector> {
    let k = mu.n_symbols();
    if !k.is_multiple_of(2) {
        return Err(Error::ShapeMismatch(format!("mirroring needs an even number of symbols, got {k}")));
    }
    let n = k / 2;
    let masses = (0..k)
        .map(|i| {
            let src = if i < n { i + n } else { i - n };
            mu.masses[src].iter().rev().copied().collect()
        })
        .collect();
    Ok(FiberMeasureVector { n_bins: mu.n_bins, masses })
}

/// `Π_*μ`: sheet one as is, sheet two reflected, onto `{1..N}`.
pub fn project_measure(ext: &ExtendedSystem, mu: &FiberMeasureVector) -> Result<FiberMeasureVector> {
    let n = ext.n();
    if mu.n_symbols() != 2 * n {
        return Err(Error::ShapeMismatch(format!("expected {} symbols, got {}", 2 * n, mu.n_symbols())));
    }
    let mut out = FiberMeasureVector::zeros(n, mu.n_bins);
    for i in 0..n {
        let (first, second) = (&mu.masses[i], &mu.masses[i + n]);
        for (b, slot) in out.masses[i].iter_mut().enumerate() {
            *slot = first[b] + second[mu.n_bins - 1 - b];
        }
    }
    Ok(out)
}

/// `ν_i = Σ_j P_ji μ_j`: the fiber law jointly with the current symbol,
/// given a measure indexed by the previous one.
pub fn current_symbol_marginal(chain: &MarkovChain, mu: &FiberMeasureVector) -> Result<FiberMeasureVector> {
    let k = chain.alphabet();
    if mu.n_symbols() != k {
        return Err(Error::ShapeMismatch(format!("chain over {k} symbols, measure over {}", mu.n_symbols())));
    }
    let mut out = FiberMeasureVector::zeros(k, mu.n_bins);
    for i in 1..=k {
        for j in 1..=k {
            let pji = chain.prob(j, i);
            if pji > 0.0 {
                for (acc, m) in out.masses[i - 1].iter_mut().zip(&mu.masses[j - 1]) {
                    *acc += pji * m;
                }
            }
        }
    }
    Ok(out)
}

/// Birkhoff sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BirkhoffParams {
    pub n_orbits: usize,
    pub n_steps: usize,
    pub burn_in: usize,
    pub n_bins: usize,
    pub seed: u64,
    pub workers: usize,
}

/// Empirical joint law of `(ξ_0, p)` along orbits of `F`.
///
/// Orbit `k` draws from its own ChaCha stream, so the result does not depend
/// on the worker count. Counts are merged as integers before normalising.
pub fn birkhoff_fiber_distribution<S: SkewProduct + Sync + ?Sized>(
    system: &S,
    chain: &MarkovChain,
    params: BirkhoffParams,
) -> Result<FiberMeasureVector> {
    if params.n_steps <= params.burn_in {
        return Err(Error::Precondition(format!(
            "n_steps ({}) must exceed burn_in ({})",
            params.n_steps, params.burn_in
        )));
    }
    if params.n_orbits == 0 || params.n_bins == 0 {
        return Err(Error::Precondition("need at least one orbit and one bin".into()));
    }
    let k = system.alphabet();
    if chain.alphabet() != k {
        return Err(Error::ShapeMismatch(format!("chain over {} symbols, system over {k}", chain.alphabet())));
    }
    let sampler = WordSampler::new(chain);
    let workers = params.workers.clamp(1, params.n_orbits);
    let grid = FiberMeasureVector::zeros(1, params.n_bins);
    let run = |range: std::ops::Range<usize>| {
        let mut counts = vec![vec![0u64; params.n_bins]; k];
        for orbit in range {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(orbit as u64);
            let mut s = sampler.initial_symbol(&mut rng);
            let mut x: f64 = rng.random();
            for t in 0..params.n_steps {
                if t >= params.burn_in {
                    counts[s - 1][grid.bin_of(x)] += 1;
                }
                x = system.map(s).value(x);
                s = sampler.next_symbol(s, &mut rng);
            }
        }
        counts
    };
    let chunk = params.n_orbits.div_ceil(workers);
    let partials: Vec<Vec<Vec<u64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let range = (w * chunk).min(params.n_orbits)..((w + 1) * chunk).min(params.n_orbits);
                scope.spawn(move || run(range))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampling worker panicked")).collect()
    });
    let mut counts = vec![vec![0u64; params.n_bins]; k];
    for part in partials {
        for (row, prow) in counts.iter_mut().zip(part) {
            for (c, p) in row.iter_mut().zip(prow) {
                *c += p;
            }
        }
    }
    let total = (params.n_orbits * (params.n_steps - params.burn_in)) as f64;
    let masses = counts.into_iter().map(|row| row.into_iter().map(|c| c as f64 / total).collect()).collect();
    Ok(FiberMeasureVector { n_bins: params.n_bins, masses })
}

/// L1 distance and per-symbol Kolmogorov distances.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDistance {
    pub l1: f64,
    /// `None` where both measures give the symbol zero mass.
    pub kolmogorov: Vec<Option<f64>>,
}

impl MeasureDistance {
    pub fn max_kolmogorov(&self) -> f64 {
        self.kolmogorov.iter().flatten().copied().fold(0.0, f64::max)
    }
}

pub fn measure_distance(mu: &FiberMeasureVector, nu: &FiberMeasureVector) -> Result<MeasureDistance> {
    mu.check_same_shape(nu)?;
    let kolmogorov = mu
        .masses
        .iter()
        .zip(&nu.masses)
        .map(|(a, b)| {
            let (ta, tb): (f64, f64) = (a.iter().sum(), b.iter().sum());
            match (ta > 0.0, tb > 0.0) {
                (false, false) => None,
                (true, true) => {
                    let (mut ca, mut cb, mut worst) = (0.0, 0.0, 0.0f64);
                    for (x, y) in a.iter().zip(b) {
                        ca += x / ta;
                        cb += y / tb;
                        worst = worst.max((ca - cb).abs());
                    }
                    Some(worst)
                }
                _ => Some(1.0),
            }
        })
        .collect();
    Ok(MeasureDistance { l1: mu.l1_distance(nu), kolmogorov })
}

/// `∫ log|f'_{ξ0}(p)| dμ` by midpoint quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub value: f64,
    /// Mass-weighted oscillation of the integrand across each bin.
    pub quadrature_bound: f64,
}

/// `μ` is read with the current-symbol indexing (the map of symbol `i`
/// acts on the fiber points of symbol `i`).
pub fn lyapunov_of_measure<S: SkewProduct + ?Sized>(system: &S, mu: &FiberMeasureVector) -> Result<LyapunovEstimate> {
    if mu.n_symbols() != system.alphabet() {
        return Err(Error::ShapeMismatch(format!(
            "measure over {} symbols, system over {}",
            mu.n_symbols(),
            system.alphabet()
        )));
    }
    let total = mu.total();
    if !(total > 0.0) {
        return Err(Error::Precondition("measure has no mass".into()));
    }
    let log_slope = |s: usize, x: f64| -> Result<f64> {
        let d = system.map(s).slope_at(x).abs();
        if d < 1e-300 {
            return Err(Error::Invariant(format!("|f'_{s}({x})| = {d} is not a diffeomorphism derivative")));
        }
        Ok(d.ln())
    };
    let reference = log_slope(1, 0.5)?;
    let (mut dev, mut bound) = (0.0, 0.0);
    for s in 1..=mu.n_symbols() {
        for (b, &m) in mu.symbol(s).iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            let (lo, hi) = mu.bin_bounds(b);
            let c = log_slope(s, mu.bin_center(b))?;
            let (l, h) = (log_slope(s, lo)?, log_slope(s, hi)?);
            dev += m * (c - reference);
            bound += m * (l.max(h).max(c) - l.min(h).min(c));
        }
    }
    Ok(LyapunovEstimate { value: reference + dev / total, quadrature_bound: bound / total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skew::build_extension;
    use crate::symbolic::{cylinder_mass, CylinderSpec};
    use crate::systems;

    fn bernoulli() -> MarkovChain {
        MarkovChain::bernoulli(vec![0.5, 0.5]).unwrap()
    }

    fn skewed() -> MarkovChain {
        MarkovChain::new(MarkovChainSpec {
            p: vec![2.0 / 3.0, 1.0 / 3.0],
            transition: vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            support: None,
        })
        .unwrap()
    }

    #[test]
    fn symmetric_extension_of_bernoulli() {
        let ext = build_extension(&systems::sys_m());
        let sym = symmetric_extension(&bernoulli(), &ext).unwrap();
        assert_eq!(sym.chain().p(), &[0.25; 4]);
        for i in 1..=4 {
            for j in 1..=4 {
                let expected = if ext.matrix().allows(i, j) { 0.5 } else { 0.0 };
                assert_eq!(sym.chain().prob(i, j), expected);
            }
        }
        let back = project_markov(&sym);
        assert_eq!(&back, bernoulli().spec());
    }

    #[test]
    fn symmetric_extension_pushes_forward_exactly() {
        for sys in [systems::sys_m(), systems::sys_p(), systems::sys_bg()] {
            let ext = build_extension(&sys);
            for lambda0 in [bernoulli(), skewed()] {
                let sym = symmetric_extension(&lambda0, &ext).unwrap();
                for len in 1..=3 {
                    for w in crate::symbolic::admissible_words(&crate::TransitionMatrix::full(2), len, false) {
                        let direct = cylinder_mass(&lambda0, &CylinderSpec::new(0, w.clone()).unwrap()).unwrap();
                        let lifted: f64 = (0..1usize << len)
                            .map(|mask| {
                                let omega: Vec<usize> =
                                    w.iter().enumerate().map(|(k, &s)| s + 2 * ((mask >> k) & 1)).collect();
                                cylinder_mass(sym.chain(), &CylinderSpec::new(0, omega).unwrap()).unwrap()
                            })
                            .sum();
                        assert!((direct - lifted).abs() <= 1e-12, "{w:?}: {direct} vs {lifted}");
                    }
                }
                let back = project_markov(&sym);
                assert_eq!(&back, lambda0.spec());
            }
        }
    }

    #[test]
    fn degenerate_and_asymmetric_inputs_fail() {
        let ext = build_extension(&systems::sys_m());
        let degenerate = MarkovChain::bernoulli(vec![1.0, 0.0]).unwrap();
        assert!(symmetric_extension(&degenerate, &ext).is_err());
        let lopsided = MarkovChain::new(MarkovChainSpec {
            p: vec![0.4, 0.1, 0.1, 0.4],
            transition: vec![
                vec![0.5, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 0.5, 0.5],
                vec![0.0, 0.0, 0.5, 0.5],
                vec![0.5, 0.5, 0.0, 0.0],
            ],
            support: None,
        });
        // this chain is not even stationary, so it fails earlier
        assert!(lopsided.is_err());
        let uniform = MarkovChain::new(MarkovChainSpec {
            p: vec![0.25; 4],
            transition: vec![
                vec![0.7, 0.3, 0.0, 0.0],
                vec![0.0, 0.0, 0.5, 0.5],
                vec![0.0, 0.0, 0.5, 0.5],
                vec![0.3, 0.7, 0.0, 0.0],
            ],
            support: None,
        })
        .unwrap();
        assert!(SymmetricMarkov::new(uniform, &ext).is_err());
    }

    #[test]
    fn single_bin_push() {
        let ext = build_extension(&systems::sys_m());
        let sym = symmetric_extension(&bernoulli(), &ext).unwrap();
        let mut mu = FiberMeasureVector::zeros(4, 64);
        let b = mu.bin_of(0.2);
        mu.add(1, b, 1.0);
        let out = transfer_step(&ext, sym.chain(), &mu).unwrap();
        assert_eq!(out.symbol_masses(), vec![0.5, 0.5, 0.0, 0.0]);
        // bin [0.1875, 0.203125] goes to [0.19375, 0.2015625] under 0.5x + 0.1
        let row = out.symbol(1);
        let (lo, hi): (f64, f64) = (0.19375, 0.2015625);
        for (d, &m) in row.iter().enumerate() {
            let (dlo, dhi) = out.bin_bounds(d);
            let overlap = (hi.min(dhi) - lo.max(dlo)).max(0.0);
            assert!((m - 0.5 * overlap / (hi - lo)).abs() < 1e-15);
        }
        assert_eq!(out.symbol(1), out.symbol(2));
    }

    #[test]
    fn uniform_push_under_affine_maps() {
        let sys = systems::sys_p();
        let mu = FiberMeasureVector::uniform(&[0.5, 0.5], 64);
        let out = transfer_step(&sys, &bernoulli(), &mu).unwrap();
        // symbol 1: mass 1/2 spread uniformly on [0.1, 0.6]
        for (d, &m) in out.symbol(1).iter().enumerate() {
            let (lo, hi) = out.bin_bounds(d);
            let overlap = (0.6f64.min(hi) - 0.1f64.max(lo)).max(0.0);
            assert!((m - 0.5 * overlap / 0.5).abs() < 1e-14);
        }
        assert!((out.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_sys_p() {
        let sys = systems::sys_p();
        let op = TransferOperator::new(&sys, &bernoulli(), 2048).unwrap();
        let seed = FiberMeasureVector::uniform(&[0.5, 0.5], 2048);
        let r = stationary_measure(&op, &seed, 1e-9, 10_000).unwrap();
        assert!(r.converged && r.residual <= 1e-9);
        let (lo, hi) = r.measure.overall_support(MASS_FLOOR).unwrap();
        let h = r.measure.bin_width();
        assert!((lo - 0.2).abs() <= h && (hi - 0.8).abs() <= h, "{lo} {hi}");
        for w in r.residual_log.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
        let nu = current_symbol_marginal(&bernoulli(), &r.measure).unwrap();
        for s in 1..=2 {
            let (lo, hi) = nu.support(s, MASS_FLOOR).unwrap();
            assert!((lo - 0.2).abs() <= h && (hi - 0.8).abs() <= h);
        }
    }

    #[test]
    fn zero_iterations_return_the_seed() {
        let sys = systems::sys_p();
        let op = TransferOperator::new(&sys, &bernoulli(), 64).unwrap();
        let seed = FiberMeasureVector::uniform(&[0.5, 0.5], 64);
        let r = stationary_measure(&op, &seed, 1e-9, 0).unwrap();
        assert!(!r.converged);
        assert_eq!(r.measure, seed);
        assert!((r.residual - op.residual(&seed).unwrap()).abs() == 0.0);
        assert!(stationary_measure(&op, &seed, 0.0, 10).is_err());
        assert!(TransferOperator::new(&sys, &bernoulli(), 8).is_err());
    }

    #[test]
    fn mirror_examples() {
        let mut mu = FiberMeasureVector::zeros(4, 10);
        mu.add(1, 3, 1.0);
        let m = mirror_measure(&mu).unwrap();
        assert_eq!(m.symbol(3)[6], 1.0);
        assert_eq!(m.total(), 1.0);
        assert_eq!(mirror_measure(&m).unwrap(), mu);
        assert!(mirror_measure(&FiberMeasureVector::zeros(3, 10)).is_err());
    }

    #[test]
    fn projection_examples() {
        let ext = build_extension(&systems::sys_m());
        let mut mu = FiberMeasureVector::zeros(4, 10);
        mu.add(3, 3, 0.25);
        mu.add(1, 1, 0.75);
        let p = project_measure(&ext, &mu).unwrap();
        assert_eq!(p.symbol(1)[6], 0.25);
        assert_eq!(p.symbol(1)[1], 0.75);
        assert_eq!(p.total(), mu.total());
        assert!(project_measure(&ext, &FiberMeasureVector::zeros(2, 10)).is_err());
    }

    #[test]
    fn distance_examples() {
        let a = FiberMeasureVector::dirac(&[0.5], 100, 0.25);
        let b = FiberMeasureVector::dirac(&[0.5], 100, 0.75);
        let d = measure_distance(&a, &a).unwrap();
        assert_eq!((d.l1, d.kolmogorov.clone()), (0.0, vec![Some(0.0)]));
        let d = measure_distance(&a, &b).unwrap();
        assert_eq!(d.l1, 1.0);
        assert_eq!(d.kolmogorov, vec![Some(1.0)]);
        let z = FiberMeasureVector::zeros(1, 100);
        assert_eq!(measure_distance(&z, &z).unwrap().kolmogorov, vec![None]);
        assert!(measure_distance(&a, &FiberMeasureVector::zeros(1, 50)).is_err());
    }

    #[test]
    fn birkhoff_examples() {
        let sys = systems::sys_m();
        let params = BirkhoffParams { n_orbits: 200, n_steps: 600, burn_in: 100, n_bins: 256, seed: 5, workers: 3 };
        let mu = birkhoff_fiber_distribution(&sys, &bernoulli(), params).unwrap();
        let m = mu.symbol_masses();
        assert!((m[0] - 0.5).abs() < 0.01 && (m[1] - 0.5).abs() < 0.01, "{m:?}");
        let again = birkhoff_fiber_distribution(&sys, &bernoulli(), BirkhoffParams { workers: 1, ..params }).unwrap();
        assert_eq!(mu, again);
        let p = birkhoff_fiber_distribution(&systems::sys_p(), &bernoulli(), params).unwrap();
        let (lo, hi) = p.overall_support(0.0).unwrap();
        let h = p.bin_width();
        assert!(lo >= 0.2 - h && hi <= 0.8 + h, "{lo} {hi}");
        let bad = BirkhoffParams { n_orbits: 1, n_steps: 10, burn_in: 10, ..params };
        assert!(birkhoff_fiber_distribution(&sys, &bernoulli(), bad).is_err());
    }

    #[test]
    fn lyapunov_of_constant_slopes_is_exact() {
        let sys = systems::sys_m();
        let mu = FiberMeasureVector::uniform(&[0.3, 0.7], 128);
        let est = lyapunov_of_measure(&sys, &mu).unwrap();
        assert_eq!(est.value, 0.5f64.ln());
        assert_eq!(est.quadrature_bound, 0.0);
        let dirac = FiberMeasureVector::dirac(&[1.0], 128, 0.2);
        let one = crate::StepSkewSystem::new(vec![crate::FiberMap::affine(0.5, 0.1).unwrap()], true).unwrap();
        assert_eq!(lyapunov_of_measure(&one, &dirac).unwrap().value, 0.5f64.ln());
    }

    #[test]
    fn csv_round_trip() {
        let mu = FiberMeasureVector::uniform(&[0.25, 0.75], 16);
        let text = mu.to_csv();
        assert!(text.starts_with("symbol,bin_lo,bin_hi,mass\n1,0,0.0625,"));
        assert_eq!(FiberMeasureVector::from_csv(&text).unwrap(), mu);
        assert!(FiberMeasureVector::from_csv("symbol,mass\n").is_err());
        assert!(FiberMeasureVector::from_csv("symbol,bin_lo,bin_hi,mass\n2,0,1,1\n").is_err());
        assert!(FiberMeasureVector::from_csv("symbol,bin_lo,bin_hi,mass\n1,0,0.5,1\n1,0.5,1,-1\n").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_measure(k: usize, n: usize) -> impl Strategy<Value = FiberMeasureVector> {
            proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, n), k).prop_map(|rows| {
                let total: f64 = rows.iter().flatten().sum::<f64>().max(1e-9);
                FiberMeasureVector::new(rows.into_iter().map(|r| r.into_iter().map(|m| m / total).collect()).collect())
                    .unwrap()
            })
        }

        proptest! {
            #[test]
            fn transfer_conserves_mass(mu in arb_measure(4, 32), idx in 0usize..3) {
                let sys = [systems::sys_m(), systems::sys_bg(), systems::sys_p()][idx].clone();
                let ext = build_extension(&sys);
                let sym = symmetric_extension(&bernoulli(), &ext).unwrap();
                let out = transfer_step(&ext, sym.chain(), &mu).unwrap();
                prop_assert!((out.total() - mu.total()).abs() <= 1e-12);
                let expected: Vec<f64> = (1..=4)
                    .map(|i| (1..=4).map(|j| sym.chain().prob(j, i) * mu.symbol_masses()[j - 1]).sum())
                    .collect();
                for (a, b) in out.symbol_masses().iter().zip(&expected) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }

            #[test]
            fn stationary_symbol_masses_are_fixed(idx in 0usize..3) {
                let sys = [systems::sys_m(), systems::sys_bg(), systems::sys_p()][idx].clone();
                let ext = build_extension(&sys);
                let sym = symmetric_extension(&skewed(), &ext).unwrap();
                let mu = FiberMeasureVector::uniform(sym.chain().p(), 32);
                let out = transfer_step(&ext, sym.chain(), &mu).unwrap();
                for (a, b) in out.symbol_masses().iter().zip(sym.chain().p()) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }

            #[test]
            fn mirror_is_an_involution(mu in arb_measure(4, 20)) {
                prop_assert_eq!(mirror_measure(&mirror_measure(&mu).unwrap()).unwrap(), mu);
            }

            #[test]
            fn constant_slope_lyapunov(mu in arb_measure(2, 20)) {
                prop_assert_eq!(lyapunov_of_measure(&systems::sys_m(), &mu).unwrap().value, 0.5f64.ln());
            }

            #[test]
            fn csv_round_trips(mu in arb_measure(3, 17)) {
                prop_assert_eq!(FiberMeasureVector::from_csv(&mu.to_csv()).unwrap(), mu);
            }
        }
    }
}
