//! Fuzz the sorted-run binary decoder (merge phase reads these from disk).

#![no_main]

use libfuzzer_sys::fuzz_target;
use soe_core::collision::parse_run_bytes;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_run_bytes(data) {
        // Accepted files decode to exactly the declared record count and
        // every record carries a positive denominator.
        assert_eq!(16 + 40 * records.len(), data.len());
        assert!(records.iter().all(|r| r.key_den > 0));
    }
});
