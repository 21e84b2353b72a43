//! Decoder round-trips and replay of the checked-in fuzz seeds.

use std::path::{Path, PathBuf};

use proptest::prelude::*;
use skewlab::measures::{
    current_symbol_marginal, project_measure, stationary_measure, symmetric_extension, FiberMeasureVector,
    TransferOperator,
};
use skewlab::skew::build_extension;
use skewlab::strips::{certify_attracting, strip_from_measure, DEFAULT_MARGIN_FLOOR};
use skewlab::{systems, MarkovChain, TransitionMatrix, Word};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = std::fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn word_seeds_round_trip() {
    let mut parsed = 0;
    for (path, bytes) in seeds("word_parse") {
        let (&alphabet, rest) = bytes.split_first().unwrap();
        let text = std::str::from_utf8(rest).unwrap();
        if let Ok(w) = Word::parse(text, alphabet as usize) {
            parsed += 1;
            assert_eq!(Word::parse(&w.to_string(), alphabet as usize).unwrap(), w, "{}", path.display());
        }
    }
    assert!(parsed >= 3);
}

#[test]
fn measure_seeds_round_trip() {
    let mut parsed = 0;
    for (path, bytes) in seeds("measure_csv") {
        if let Ok(mu) = FiberMeasureVector::from_csv(std::str::from_utf8(&bytes).unwrap()) {
            parsed += 1;
            assert_eq!(FiberMeasureVector::from_csv(&mu.to_csv()).unwrap(), mu, "{}", path.display());
        }
    }
    assert_eq!(parsed, 1);
}

#[test]
fn matrix_seeds_parse_or_reject() {
    let results: Vec<bool> = seeds("transition_matrix")
        .iter()
        .map(|(_, b)| std::str::from_utf8(b).unwrap().parse::<TransitionMatrix>().is_ok())
        .collect();
    assert!(results.contains(&true) && results.contains(&false));
    let m: TransitionMatrix = "1 1 0 0; 0 0 1 1; 0 0 1 1; 1 1 0 0".parse().unwrap();
    assert_eq!(&m, build_extension(&systems::sys_m()).matrix());
}

#[test]
fn stationary_measure_survives_csv_and_still_certifies() {
    let ext = build_extension(&systems::sys_m());
    let lambda = symmetric_extension(&MarkovChain::bernoulli(vec![0.5, 0.5]).unwrap(), &ext).unwrap();
    let op = TransferOperator::new(&ext, lambda.chain(), 256).unwrap();
    let res = stationary_measure(&op, &FiberMeasureVector::uniform(lambda.chain().p(), 256), 1e-10, 10_000).unwrap();
    let back = FiberMeasureVector::from_csv(&res.measure.to_csv()).unwrap();
    assert_eq!(back, res.measure);
    let nu = current_symbol_marginal(lambda.chain(), &back).unwrap();
    let (strip, warnings) = strip_from_measure(&nu, None, Some(lambda.chain().p())).unwrap();
    assert!(warnings.is_empty());
    assert!(certify_attracting(&ext, &strip, DEFAULT_MARGIN_FLOOR).unwrap().ok);
    let base = project_measure(&ext, &nu).unwrap();
    assert!((base.total() - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn parse_inverts_display(alphabet in 1usize..15, raw in prop::collection::vec(0usize..1000, 1..30), origin in 0usize..30) {
        let symbols: Vec<usize> = raw.iter().map(|s| s % alphabet + 1).collect();
        let origin = origin % symbols.len();
        let w = Word::new(symbols, origin, alphabet).unwrap();
        prop_assert_eq!(Word::parse(&w.to_string(), alphabet).unwrap(), w);
    }

    #[test]
    fn measure_csv_is_lossless(masses in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 8), 1..5)) {
        let total: f64 = masses.iter().flatten().sum();
        prop_assume!(total > 0.0);
        let scaled: Vec<Vec<f64>> = masses.iter().map(|r| r.iter().map(|m| m / total).collect()).collect();
        let Ok(mu) = FiberMeasureVector::new(scaled) else { return Ok(()) };
        prop_assert_eq!(FiberMeasureVector::from_csv(&mu.to_csv()).unwrap(), mu);
    }
}
