#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use skillgroup::{extract_schema, high_confidence_facets, retrieve, Config, Dictionary, Engine, Library, Mode, PoolParams};

const SKILLS: &str = r#"[
  {"id": "pdf-reading", "name": "pdf-reading", "description": "extract text and tables from pdf files", "payload": "read pdf"},
  {"id": "xlsx", "name": "xlsx", "description": "read and write xlsx spreadsheets", "payload": "open xlsx"},
  {"id": "fuzzy-match", "name": "fuzzy-match", "description": "fuzzy matching of names in python", "payload": "match"}
]"#;
const EDGES: &str = r#"[
  ["pdf-reading", "fuzzy-match", "workflow", 0.8],
  ["xlsx", "fuzzy-match", "artifact", 0.7]
]"#;

fn engine() -> &'static Engine {
    static E: OnceLock<Engine> = OnceLock::new();
    E.get_or_init(|| {
        let dict = Dictionary::default();
        let lib = Library::from_json(SKILLS, EDGES, &dict).unwrap();
        Engine::build(lib, dict, PoolParams { parallel: false, ..PoolParams::default() })
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(query) = std::str::from_utf8(data) else { return };
    let e = engine();
    let schema = extract_schema(query, &e.dict, e.vocabulary());
    let _ = high_confidence_facets(&schema, Mode::CriticalOverride);
    let r = retrieve(e, query, &Config::default());
    assert!(r.skill_ids().len() <= 4);
});
