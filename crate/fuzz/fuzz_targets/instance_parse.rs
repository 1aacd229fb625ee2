#![no_main]

use libfuzzer_sys::fuzz_target;
use rdq_core::oracle::{parse_instance, write_instance};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(jobs) = parse_instance(text) {
        let mut buf = Vec::new();
        write_instance(&jobs, &mut buf).expect("writing to memory");
        let back = parse_instance(std::str::from_utf8(&buf).unwrap()).expect("written instance parses");
        assert_eq!(back, jobs);
    }
});
