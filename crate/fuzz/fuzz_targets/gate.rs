#![no_main]

use libfuzzer_sys::fuzz_target;
use skillgroup::GateAnnotations;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ann) = GateAnnotations::from_json(text) {
        let _ = ann.item_count();
    }
});
