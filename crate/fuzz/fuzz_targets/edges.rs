#![no_main]

use libfuzzer_sys::fuzz_target;
use skillgroup::{Dictionary, Engine, Library, PoolParams};

const SKILLS: &str = r#"[
  {"id": "a", "name": "a", "description": "read pdf files", "payload": "x"},
  {"id": "b", "name": "b", "description": "write xlsx sheets", "payload": "y"},
  {"id": "c", "name": "c", "description": "python helper", "payload": "z"}
]"#;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let dict = Dictionary::default();
    if let Ok(lib) = Library::from_json(SKILLS, text, &dict) {
        let params = PoolParams { parallel: false, ..PoolParams::default() };
        let _ = Engine::build(lib, dict, params).to_pool_json();
    }
});
