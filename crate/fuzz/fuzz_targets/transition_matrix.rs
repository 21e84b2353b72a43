#![no_main]
use libfuzzer_sys::fuzz_target;
use skewlab::TransitionMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(m) = s.parse::<TransitionMatrix>() {
            let _ = skewlab::symbolic::admissible_words(&m, 2, true);
        }
    }
});
