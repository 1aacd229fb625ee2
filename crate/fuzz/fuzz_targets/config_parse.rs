#![no_main]

use libfuzzer_sys::fuzz_target;
use rdq_core::workload::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = parse_config(text) {
        // Accepted configs render back to an equivalent config.
        let again = parse_config(&spec.to_config_string()).expect("rendered config parses");
        assert_eq!(again, spec);
    }
});
