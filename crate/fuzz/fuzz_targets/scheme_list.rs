#![no_main]

use libfuzzer_sys::fuzz_target;
use wpaircomp::baselines::{parse_scheme_list, SchemeId};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(list) = parse_scheme_list(text) {
        assert!(!list.is_empty());
        let names: Vec<&str> = list.iter().map(|s| s.name()).collect();
        assert_eq!(parse_scheme_list(&names.join(",")).unwrap(), list);
    }
    let _ = text.parse::<SchemeId>();
});
