#![no_main]
use libfuzzer_sys::fuzz_target;
use skewlab_cli::SystemConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = SystemConfig::from_toml_str(s) {
            let _ = cfg.build();
        }
    }
});
