//! Fixed points of compositions and the three genericity conditions:
//! hyperbolic short periodic orbits, no short heteroclinic connections and
//! no two-point reflection cycle.

use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fiber::{compose_eval, word_orientation, FiberMap, Orientation};
use crate::skew::{build_extension, SkewProduct, StepSkewSystem};
use crate::symbolic::{admissible_words, TransitionMatrix};

/// Grid cells used by the sign scan.
pub const SCAN_CELLS: usize = 4096;
/// Bracket width at which bisection stops.
pub const ROOT_TOL: f64 = 1e-12;
/// Accepted `|g(x) − x|` below which a refined local minimum counts as a
/// tangency.
pub const TANGENCY_PROBE: f64 = 1e-9;
/// Largest accepted `|g(x) − x|` for a fixed point record.
pub const FIXED_POINT_RESIDUAL: f64 = 1e-11;
pub const DEFAULT_STABILITY_TAU: f64 = 1e-6;
pub const DEFAULT_CYCLE_TAU: f64 = 1e-9;
/// Largest base alphabet enumerated without an explicit override.
pub const DEFAULT_MAX_ALPHABET: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Attracting,
    Repelling,
    Indifferent,
}

impl Stability {
    pub fn classify(deriv: f64, tau: f64) -> Self {
        let d = deriv.abs();
        if d < 1.0 - tau {
            Stability::Attracting
        } else if d > 1.0 + tau {
            Stability::Repelling
        } else {
            Stability::Indifferent
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Attracting => "attracting",
            Stability::Repelling => "repelling",
            Stability::Indifferent => "indifferent",
        })
    }
}

/// A fixed point `x` of `f_word` with `(f_word)'(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointRecord {
    pub word: Vec<usize>,
    pub x: f64,
    pub deriv: f64,
    pub stability: Stability,
}

fn word_label(word: &[usize]) -> String {
    if word.iter().all(|&s| s < 10) {
        word.iter().map(|s| s.to_string()).collect()
    } else {
        word.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// Fixed points of `f_word` on `[0,1]`, sorted by `x`.
///
/// Preserving compositions are scanned for sign changes of `g(x) − x` on a
/// uniform grid; discrete local minima of `|g(x) − x|` without a sign change
/// are refined by ternary search to catch tangencies. Reversing
/// compositions have exactly one fixed point, found by bisection.
pub fn fixed_points(maps: &[FiberMap], word: &[usize], tau: f64) -> Result<Vec<FixedPointRecord>> {
    if word.is_empty() {
        return Err(Error::Precondition("fixed points need a nonempty word".into()));
    }
    if let Some(&bad) = word.iter().find(|&&s| s == 0 || s > maps.len()) {
        return Err(Error::SymbolOutOfRange { symbol: bad, alphabet: maps.len() });
    }
    let g = |x: f64| word.iter().fold(x, |acc, &s| maps[s - 1].value(acc));
    let h = |x: f64| g(x) - x;
    let mut roots: Vec<f64> = Vec::new();
    if word_orientation(maps, word) == Orientation::Reversing {
        roots.push(bisect(&h, 0.0, 1.0));
    } else {
        let grid: Vec<f64> = (0..=SCAN_CELLS).map(|k| k as f64 / SCAN_CELLS as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&x| h(x)).collect();
        for k in 0..=SCAN_CELLS {
            if values[k] == 0.0 {
                roots.push(grid[k]);
            } else if k < SCAN_CELLS && values[k] * values[k + 1] < 0.0 {
                roots.push(bisect(&h, grid[k], grid[k + 1]));
            }
        }
        for k in 1..SCAN_CELLS {
            let a = values[k].abs();
            let local_min = a <= values[k - 1].abs() && a <= values[k + 1].abs();
            let no_crossing = values[k - 1] * values[k] > 0.0 && values[k] * values[k + 1] > 0.0;
            if local_min && no_crossing && a < TANGENCY_PROBE.max(1e-3) {
                let lo = grid[k.saturating_sub(1)];
                let hi = grid[(k + 1).min(SCAN_CELLS)];
                let x = ternary_min(|x| h(x).abs(), lo, hi);
                if h(x).abs() <= FIXED_POINT_RESIDUAL.min(TANGENCY_PROBE) && roots.iter().all(|r| (r - x).abs() > 1e-9)
                {
                    roots.push(x);
                }
            }
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    }
    roots
        .into_iter()
        .map(|x| {
            let residual = h(x).abs();
            if residual > FIXED_POINT_RESIDUAL {
                return Err(Error::Invariant(format!(
                    "fixed point of {} at {x} has residual {residual:e}",
                    word_label(word)
                )));
            }
            let c = compose_eval(maps, word, x)?;
            let deriv = word_orientation(maps, word).sign() * c.log_abs_deriv_sum.exp();
            Ok(FixedPointRecord { word: word.to_vec(), x, deriv, stability: Stability::classify(deriv, tau) })
        })
        .collect()
}

fn bisect(h: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let h_lo = h(lo);
    if h_lo == 0.0 {
        return lo;
    }
    if h(hi) == 0.0 {
        return hi;
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let v = h(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == (h_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    [lo, mid, hi].into_iter().min_by(|a, b| h(*a).abs().total_cmp(&h(*b).abs())).expect("three candidates")
}

fn ternary_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= ROOT_TOL {
            break;
        }
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

/// Which enumeration found a witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    /// Words over `{1..N}` applied to the `f_i`.
    Base,
    /// Cyclically A-admissible words over `{1..2N}` applied to the `g_i`.
    Extended,
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            View::Base => "base",
            View::Extended => "extended",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Vacuous,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Vacuous => "vacuous",
        })
    }
}

/// A point configuration that violates (or nearly violates) a condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub view: View,
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub condition: &'static str,
    pub status: Status,
    pub tau: f64,
    /// Smallest gap (ii), residual (iii) or `||deriv| − 1|` (i) seen.
    pub closest: f64,
    pub witnesses: Vec<Witness>,
    pub note: String,
}

impl ConditionReport {
    /// `condition,view,label,a,b,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,view,label,a,b,value\n");
        for w in &self.witnesses {
            writeln!(out, "{},{},{},{},{},{}", self.condition, w.view, w.label, w.a, w.b, w.value)
                .expect("writing to a string");
        }
        out
    }
}

/// Options shared by the condition checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericityOptions {
    pub stability_tau: f64,
    pub heteroclinic_tau: f64,
    pub cycle_tau: f64,
    pub max_alphabet: usize,
}

impl Default for GenericityOptions {
    fn default() -> Self {
        Self {
            stability_tau: DEFAULT_STABILITY_TAU,
            heteroclinic_tau: DEFAULT_CYCLE_TAU,
            cycle_tau: DEFAULT_CYCLE_TAU,
            max_alphabet: DEFAULT_MAX_ALPHABET,
        }
    }
}

fn check_size(system: &StepSkewSystem, max_alphabet: usize) -> Result<()> {
    if system.n() > max_alphabet {
        let words = (1..=2 * system.n()).map(|k| (system.n() as u128).pow(k as u32)).sum();
        return Err(Error::EnumerationTooLarge { count: words, limit: max_alphabet as u128 });
    }
    Ok(())
}

/// Words of length `1..=max_len` in both views.
fn periodic_words(system: &StepSkewSystem) -> Vec<(View, Vec<FiberMap>, Vec<Vec<usize>>)> {
    let n = system.n();
    let full = TransitionMatrix::full(n);
    let base: Vec<Vec<usize>> = (1..=2 * n).flat_map(|k| admissible_words(&full, k, false)).collect();
    let ext = build_extension(system);
    let extended: Vec<Vec<usize>> = (1..=2 * n).flat_map(|k| admissible_words(ext.matrix(), k, true)).collect();
    vec![(View::Base, system.maps().to_vec(), base), (View::Extended, ext.maps().to_vec(), extended)]
}

fn connectors(system: &StepSkewSystem, view: View) -> Vec<Vec<usize>> {
    let n = system.n();
    let matrix = match view {
        View::Base => TransitionMatrix::full(n),
        View::Extended => build_extension(system).matrix().clone(),
    };
    (1..2 * n).flat_map(|k| admissible_words(&matrix, k, false)).collect()
}

/// Condition i): no fixed point of a short composition is indifferent.
pub fn check_condition_i(system: &StepSkewSystem, opts: &GenericityOptions) -> Result<ConditionReport> {
    check_size(system, opts.max_alphabet)?;
    let mut witnesses = Vec::new();
    let mut closest = f64::INFINITY;
    for (view, maps, words) in periodic_words(system) {
        for w in &words {
            for r in fixed_points(&maps, w, opts.stability_tau)? {
                closest = closest.min((r.deriv.abs() - 1.0).abs());
                if r.stability == Stability::Indifferent {
                    witnesses.push(Witness {
                        view,
                        label: format!("word={}", word_label(w)),
                        a: r.x,
                        b: r.x,
                        value: r.deriv,
                    });
                }
            }
        }
    }
    Ok(ConditionReport {
        condition: "i",
        status: if witnesses.is_empty() { Status::Pass } else { Status::Fail },
        tau: opts.stability_tau,
        closest,
        witnesses,
        note: "grid scan with local-minimum tangency probe".into(),
    })
}

/// Condition ii): no connector maps an attracting fixed point onto a
/// repelling one or a repelling one onto an attracting one.
pub fn check_condition_ii(system: &StepSkewSystem, opts: &GenericityOptions) -> Result<ConditionReport> {
    check_size(system, opts.max_alphabet)?;
    let mut witnesses = Vec::new();
    let mut closest = f64::INFINITY;
    for (view, maps, words) in periodic_words(system) {
        let mut attracting = Vec::new();
        let mut repelling = Vec::new();
        for w in &words {
            for r in fixed_points(&maps, w, opts.stability_tau)? {
                match r.stability {
                    Stability::Attracting => attracting.push(r),
                    Stability::Repelling => repelling.push(r),
                    Stability::Indifferent => {}
                }
            }
        }
        let links = connectors(system, view);
        for (from, to) in [(&attracting, &repelling), (&repelling, &attracting)] {
            if to.is_empty() {
                continue;
            }
            for p in from.iter() {
                for rho in &links {
                    let image = rho.iter().fold(p.x, |acc, &s| maps[s - 1].value(acc));
                    for q in to.iter() {
                        let gap = (image - q.x).abs();
                        closest = closest.min(gap);
                        if gap <= opts.heteroclinic_tau {
                            witnesses.push(Witness {
                                view,
                                label: format!(
                                    "{} word={} rho={} {} word={}",
                                    p.stability,
                                    word_label(&p.word),
                                    word_label(rho),
                                    q.stability,
                                    word_label(&q.word)
                                ),
                                a: p.x,
                                b: q.x,
                                value: gap,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(ConditionReport {
        condition: "ii",
        status: if witnesses.is_empty() { Status::Pass } else { Status::Fail },
        tau: opts.heteroclinic_tau,
        closest,
        witnesses,
        note: String::new(),
    })
}

/// Condition iii): no `(a, b)` with `f_i(a) = a`, `R f_i R(b) = b` for the
/// preserving maps and `R f_i(a) = b`, `f_i(R b) = a` for the reversing ones.
pub fn check_condition_iii(system: &StepSkewSystem, opts: &GenericityOptions) -> Result<ConditionReport> {
    let tau = opts.cycle_tau;
    let preserving = system.preserving_symbols();
    let reversing = system.reversing_symbols();
    if reversing.is_empty() {
        return Ok(ConditionReport {
            condition: "iii",
            status: Status::Vacuous,
            tau,
            closest: f64::INFINITY,
            witnesses: Vec::new(),
            note: "no orientation-reversing maps".into(),
        });
    }
    let maps = system.maps();
    let f = |i: usize, x: f64| maps[i - 1].value(x);
    let r0 = reversing[0];
    let candidates: Vec<f64> = match preserving.first() {
        Some(&p0) => fixed_points(maps, &[p0], opts.stability_tau)?
            .into_iter()
            .map(|r| r.x)
            .filter(|&a| preserving.iter().all(|&i| (f(i, a) - a).abs() <= tau))
            .collect(),
        None => fixed_points(maps, &[r0, r0], opts.stability_tau)?.into_iter().map(|r| r.x).collect(),
    };
    let mut witnesses = Vec::new();
    let mut closest = f64::INFINITY;
    for &a in &candidates {
        let b = 1.0 - f(r0, a);
        let mut residual = 0.0f64;
        for &i in &preserving {
            residual = residual.max((f(i, a) - a).abs()).max((1.0 - f(i, 1.0 - b) - b).abs());
        }
        for &i in &reversing {
            residual = residual.max((1.0 - f(i, a) - b).abs()).max((f(i, 1.0 - b) - a).abs());
        }
        closest = closest.min(residual);
        if residual <= tau {
            witnesses.push(Witness { view: View::Base, label: "cycle".into(), a, b, value: residual });
        }
    }
    let note =
        if candidates.is_empty() { "no common fixed point of the preserving maps".into() } else { String::new() };
    Ok(ConditionReport {
        condition: "iii",
        status: if witnesses.is_empty() { Status::Pass } else { Status::Fail },
        tau,
        closest,
        witnesses,
        note,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenericityReport {
    pub conditions: [ConditionReport; 3],
}

impl GenericityReport {
    pub fn generic_candidate(&self) -> bool {
        self.conditions.iter().all(|c| c.status == Status::Pass)
    }

    /// 0 generic candidate, 1 some condition fails, 2 only iii) vacuous.
    pub fn exit_code(&self) -> i32 {
        if self.conditions.iter().any(|c| c.status == Status::Fail) {
            1
        } else if self.conditions[2].status == Status::Vacuous {
            2
        } else {
            0
        }
    }

    /// One line per condition, then per-witness lines and the verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.conditions {
            writeln!(out, "condition {}: {} (tau={:e}, closest={:e})", c.condition, c.status, c.tau, c.closest)
                .expect("writing to a string");
            for w in &c.witnesses {
                writeln!(out, "  witness [{}] {} a={} b={} value={:e}", w.view, w.label, w.a, w.b, w.value)
                    .expect("writing to a string");
            }
            if !c.note.is_empty() {
                writeln!(out, "  note: {}", c.note).expect("writing to a string");
            }
        }
        let verdict = match self.exit_code() {
            0 => "generic candidate",
            1 => "not generic",
            _ => "condition iii vacuous",
        };
        writeln!(out, "verdict: {verdict}").expect("writing to a string");
        out
    }
}

pub fn genericity_report(system: &StepSkewSystem, opts: &GenericityOptions) -> Result<GenericityReport> {
    Ok(GenericityReport {
        conditions: [
            check_condition_i(system, opts)?,
            check_condition_ii(system, opts)?,
            check_condition_iii(system, opts)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;

    fn opts() -> GenericityOptions {
        GenericityOptions::default()
    }

    #[test]
    fn fixed_point_examples() {
        let f = [FiberMap::affine(0.5, 0.1).unwrap()];
        let r = fixed_points(&f, &[1], 1e-6).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].x - 0.2).abs() < 1e-12);
        assert!((r[0].deriv - 0.5).abs() < 1e-15);
        assert_eq!(r[0].stability, Stability::Attracting);

        let m = systems::sys_m();
        let r = fixed_points(m.maps(), &[2], 1e-6).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].x - 0.6).abs() < 1e-12);
        assert!((r[0].deriv + 0.5).abs() < 1e-12);

        let bg = systems::sys_bg();
        let r = fixed_points(bg.maps(), &[1], 1e-6).unwrap();
        let xs: Vec<f64> = r.iter().map(|r| r.x).collect();
        assert_eq!(xs, vec![0.25, 0.5, 0.75]);
        let kinds: Vec<Stability> = r.iter().map(|r| r.stability).collect();
        assert_eq!(kinds, vec![Stability::Attracting, Stability::Repelling, Stability::Attracting]);
        assert!(fixed_points(bg.maps(), &[], 1e-6).is_err());
    }

    #[test]
    fn tangency_is_found() {
        // anchor at 0.3 on the diagonal with unit slope
        let f = FiberMap::anchored(vec![0.0, 0.3, 1.0], vec![0.05, 0.3, 0.9], vec![0.9, 1.0, 0.5]).unwrap();
        let r = fixed_points(&[f], &[1], 1e-6).unwrap();
        assert!(r.iter().any(|r| (r.x - 0.3).abs() < 1e-9 && r.stability == Stability::Indifferent), "{r:?}");
    }

    #[test]
    fn condition_i_examples() {
        assert_eq!(check_condition_i(&systems::sys_m(), &opts()).unwrap().status, Status::Pass);
        assert_eq!(check_condition_i(&systems::sys_bg(), &opts()).unwrap().status, Status::Pass);
        let planted = FiberMap::anchored(vec![0.0, 0.5, 1.0], vec![0.1, 0.5, 0.9], vec![0.7, 1.0, 0.7]).unwrap();
        let sys = StepSkewSystem::new(vec![planted, FiberMap::affine(0.5, 0.1).unwrap()], true).unwrap();
        let r = check_condition_i(&sys, &opts()).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(r.witnesses.iter().any(|w| w.a == 0.5 && w.view == View::Base));
    }

    #[test]
    fn condition_ii_examples() {
        let r = check_condition_ii(&systems::sys_m(), &opts()).unwrap();
        assert_eq!(r.status, Status::Pass);
        let planted =
            StepSkewSystem::new(vec![systems::bigraph_f1(), FiberMap::affine(0.5, 0.375).unwrap()], true).unwrap();
        let r = check_condition_ii(&planted, &opts()).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(r.witnesses.iter().any(|w| w.a == 0.25 && w.b == 0.5 && w.label.contains("rho=2 ")));
        let zero = GenericityOptions { heteroclinic_tau: 0.0, ..opts() };
        assert_eq!(check_condition_ii(&systems::sys_m(), &zero).unwrap().status, Status::Pass);
    }

    #[test]
    fn condition_iii_examples() {
        let r = check_condition_iii(&systems::sys_bg(), &opts()).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert_eq!((r.witnesses[0].a, r.witnesses[0].b), (0.25, 0.25));
        assert!(r.witnesses[0].value < 1e-9);
        let shifted = GenericityOptions { cycle_tau: 1e-6, ..opts() };
        assert_eq!(check_condition_iii(&systems::sys_bg_shifted(), &shifted).unwrap().status, Status::Pass);
        assert_eq!(check_condition_iii(&systems::sys_m(), &opts()).unwrap().status, Status::Pass);
        assert_eq!(check_condition_iii(&systems::sys_p(), &opts()).unwrap().status, Status::Vacuous);
        let disjoint = StepSkewSystem::new(
            vec![
                FiberMap::affine(0.5, 0.1).unwrap(),
                FiberMap::affine(0.5, 0.4).unwrap(),
                FiberMap::affine(-0.5, 0.9).unwrap(),
            ],
            true,
        )
        .unwrap();
        let r = check_condition_iii(&disjoint, &opts()).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert!(r.note.contains("no common fixed point"));
    }

    #[test]
    fn condition_iii_without_preserving_maps() {
        let r = check_condition_iii(&systems::single_reversing(), &opts()).unwrap();
        // R f(a) = b and f(R b) = a force a = f(f(a)), here a = 0.5, b = 0.5
        assert_eq!(r.status, Status::Fail);
        assert!((r.witnesses[0].a - 0.5).abs() < 1e-12);
    }

    #[test]
    fn condition_iii_is_invariant_under_relabelling() {
        let f1 = systems::bigraph_f1();
        let f2 = systems::bigraph_f2(0.0);
        let a = StepSkewSystem::new(vec![f1.clone(), f1.clone(), f2.clone(), f2.clone()], true).unwrap();
        let b = StepSkewSystem::new(vec![f2.clone(), f1.clone(), f2, f1], true).unwrap();
        let ra = check_condition_iii(&a, &opts()).unwrap();
        let rb = check_condition_iii(&b, &opts()).unwrap();
        assert_eq!(ra.status, rb.status);
        assert_eq!(ra.witnesses, rb.witnesses);
    }

    #[test]
    fn reports_and_exit_codes() {
        let m = genericity_report(&systems::sys_m(), &opts()).unwrap();
        assert_eq!(m.exit_code(), 0);
        assert!(m.generic_candidate());
        let bg = genericity_report(&systems::sys_bg(), &opts()).unwrap();
        assert_eq!(bg.exit_code(), 1);
        assert!(bg.summary().contains("a=0.25 b=0.25"));
        let p = genericity_report(&systems::sys_p(), &opts()).unwrap();
        assert_eq!(p.exit_code(), 2);
        assert_eq!(bg.summary(), genericity_report(&systems::sys_bg(), &opts()).unwrap().summary());
        let big = StepSkewSystem::new(vec![FiberMap::affine(0.5, 0.1).unwrap(); 5], true).unwrap();
        assert!(matches!(check_condition_i(&big, &opts()), Err(Error::EnumerationTooLarge { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reversing_compositions_have_one_fixed_point(word in proptest::collection::vec(1usize..=2, 1..6)) {
                let sys = systems::sys_bg();
                prop_assume!(word_orientation(sys.maps(), &word) == Orientation::Reversing);
                let r = fixed_points(sys.maps(), &word, 1e-6).unwrap();
                prop_assert_eq!(r.len(), 1);
            }

            #[test]
            fn records_satisfy_the_residual_bound(word in proptest::collection::vec(1usize..=2, 1..5), idx in 0usize..3) {
                let sys = [systems::sys_bg(), systems::sys_m(), systems::sys_bg_shifted()][idx].clone();
                for r in fixed_points(sys.maps(), &word, 1e-6).unwrap() {
                    let g = word.iter().fold(r.x, |acc, &s| sys.map(s).value(acc));
                    prop_assert!((g - r.x).abs() <= FIXED_POINT_RESIDUAL);
                }
            }
        }
    }
}
