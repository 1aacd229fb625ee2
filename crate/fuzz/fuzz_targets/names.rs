#![no_main]

use libfuzzer_sys::fuzz_target;
use rdq_core::experiment::Suite;
use rdq_core::policy::PolicyKind;
use rdq_core::workload::Study;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(k) = s.parse::<PolicyKind>() {
        assert_eq!(k.name(), s);
    }
    if let Ok(k) = s.parse::<Suite>() {
        assert_eq!(k.name(), s);
    }
    if let Ok(k) = s.parse::<Study>() {
        assert_eq!(k.as_str(), s);
    }
});
