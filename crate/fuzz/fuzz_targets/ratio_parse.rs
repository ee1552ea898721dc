//! Fuzz the exact-rational string parser: accepted inputs must survive a
//! print/parse round trip as a fixed point in canonical form.

#![no_main]

use libfuzzer_sys::fuzz_target;
use soe_core::ExactRatio;

fuzz_target!(|data: &[u8]| {
    if data.len() > 4096 {
        return;
    }
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(v) = s.parse::<ExactRatio>() {
            let printed = v.to_string();
            let again: ExactRatio = printed.parse().expect("canonical form must re-parse");
            assert_eq!(v, again);
            assert_eq!(again.to_string(), printed);
        }
    }
});
