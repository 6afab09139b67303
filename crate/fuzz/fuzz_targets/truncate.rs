#![no_main]

use libfuzzer_sys::fuzz_target;
use skillgroup::truncate_payload;

fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let cap = u16::from_le_bytes([data[0], data[1]]) as usize;
    let Ok(text) = std::str::from_utf8(&data[2..]) else { return };
    let out = truncate_payload(text, cap);
    if text.chars().count() <= cap {
        assert_eq!(out, text);
    }
});
