//! Fuzz the checkpoint manifest parser (resume path reads this from disk).

#![no_main]

use libfuzzer_sys::fuzz_target;
use soe_core::collision::parse_checkpoint_manifest;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(manifest) = parse_checkpoint_manifest(s) {
            let text = manifest.to_text();
            let again = parse_checkpoint_manifest(&text).expect("round trip");
            assert_eq!(manifest, again);
        }
    }
});
