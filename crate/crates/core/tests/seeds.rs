use std::fs;
use std::path::{Path, PathBuf};

use skillgroup::{retrieve, truncate_payload, Config, Dictionary, Engine, GateAnnotations, Library};

fn seeds(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<PathBuf> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

fn text(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn json_seeds_parse() {
    let dict = Dictionary::default();
    for p in seeds("skills") {
        Library::from_json(&text(&p), "[]", &dict).unwrap();
    }
    let invoice = text(&seeds("skills").into_iter().find(|p| p.ends_with("invoice.json")).unwrap());
    for p in seeds("edges") {
        Library::from_json(&invoice, &text(&p), &dict).unwrap();
    }
    for p in seeds("pool") {
        let e = Engine::from_pool_json(&text(&p)).unwrap();
        assert!(!retrieve(&e, "pdf", &Config::default()).skills.is_empty());
    }
    for p in seeds("config") {
        let cfg = Config::from_json(&text(&p)).unwrap();
        assert_eq!(Config::from_json(&cfg.to_json()).unwrap(), cfg);
    }
    for p in seeds("dictionary") {
        Dictionary::from_json(&text(&p)).unwrap();
    }
    for p in seeds("gate") {
        assert!(GateAnnotations::from_json(&text(&p)).unwrap().item_count() > 0);
    }
}

#[test]
fn byte_seeds_decode() {
    for p in seeds("query") {
        text(&p);
    }
    for p in seeds("truncate") {
        let data = fs::read(&p).unwrap();
        let cap = u16::from_le_bytes([data[0], data[1]]) as usize;
        let body = std::str::from_utf8(&data[2..]).unwrap();
        assert!(truncate_payload(body, cap).ends_with(skillgroup::contract::TRUNCATION_MARKER));
    }
}
