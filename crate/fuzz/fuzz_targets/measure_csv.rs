#![no_main]
use libfuzzer_sys::fuzz_target;
use skewlab::measures::FiberMeasureVector;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(mu) = FiberMeasureVector::from_csv(s) {
            let again = FiberMeasureVector::from_csv(&mu.to_csv()).expect("to_csv re-parses");
            assert_eq!(again, mu);
        }
    }
});
