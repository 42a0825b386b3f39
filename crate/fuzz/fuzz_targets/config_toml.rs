#![no_main]

use libfuzzer_sys::fuzz_target;
use wpaircomp::channels::SystemConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = SystemConfig::from_toml_str(text) {
        // Accepted configs are valid and keep their mode.
        cfg.validate().unwrap();
        let _ = cfg.mode();
    }
});
