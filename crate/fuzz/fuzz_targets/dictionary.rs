#![no_main]

use libfuzzer_sys::fuzz_target;
use skillgroup::{extract_schema, Dictionary};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(dict) = Dictionary::from_json(text) {
        let _ = extract_schema("parse pdf invoices offline with python", &dict, &Default::default());
    }
});
