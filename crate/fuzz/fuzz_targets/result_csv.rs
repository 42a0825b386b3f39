#![no_main]

use libfuzzer_sys::fuzz_target;
use wpaircomp::harness::{read_results_csv, write_results_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = read_results_csv(text) {
        // Anything accepted can be written and read back to the same rows.
        let mut out = Vec::new();
        write_results_csv(&mut out, &rows).unwrap();
        let again = read_results_csv(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(again.len(), rows.len());
        for (a, b) in rows.iter().zip(&again) {
            assert_eq!((&a.param, a.scheme, a.trials, a.failed), (&b.param, b.scheme, b.trials, b.failed));
        }
    }
});
