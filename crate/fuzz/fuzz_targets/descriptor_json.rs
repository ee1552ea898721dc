//! Fuzz the group-descriptor JSON parser: anything accepted must be a
//! valid descriptor that survives serialize → parse unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;
use soe_core::GroupDescriptor;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    if let Ok(g) = GroupDescriptor::from_json_slice(data) {
        let text = serde_json::to_vec(&g.to_json()).expect("descriptor serializes");
        let again = GroupDescriptor::from_json_slice(&text)
            .expect("serialized descriptor must re-parse");
        assert_eq!(g, again);
    }
});
