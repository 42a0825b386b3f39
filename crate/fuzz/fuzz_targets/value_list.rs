#![no_main]

use libfuzzer_sys::fuzz_target;
use wpaircomp::harness::{parse_value_list, SweepParam};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(values) = parse_value_list(text) {
        assert!(!values.is_empty());
        assert!(values.iter().all(|v| v.is_finite()));
        assert!(values.windows(2).all(|w| w[0] < w[1]));
    }
    let _ = text.parse::<SweepParam>();
});
