#![no_main]

use libfuzzer_sys::fuzz_target;
use skillgroup::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = Config::from_json(text) {
        assert_eq!(Config::from_json(&cfg.to_json()).unwrap(), cfg);
    }
});
