#![no_main]
use libfuzzer_sys::fuzz_target;
use skewlab::Word;

fuzz_target!(|data: &[u8]| {
    let Some((&alphabet, rest)) = data.split_first() else { return };
    if let Ok(s) = std::str::from_utf8(rest) {
        if let Ok(w) = Word::parse(s, alphabet as usize) {
            let again = Word::parse(&w.to_string(), alphabet as usize).expect("display re-parses");
            assert_eq!(again, w);
        }
    }
});
