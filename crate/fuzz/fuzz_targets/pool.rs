#![no_main]

use libfuzzer_sys::fuzz_target;
use skillgroup::{retrieve, Config, Engine};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(engine) = Engine::from_pool_json(text) {
        let _ = retrieve(&engine, "convert pdf to xlsx in python", &Config::default());
    }
});
