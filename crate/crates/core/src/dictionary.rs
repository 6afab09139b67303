//! Facet vocabulary: token normalization, alias maps, category dictionaries and the
//! phrase recognizer shared by skill-facet extraction and query-schema extraction.
//!
//! The default dictionary ships in `data/dictionary.json` and is embedded at compile
//! time. Pools record the dictionary they were built with, so a pool file is
//! self-contained.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DICTIONARY_JSON: &str = include_str!("../data/dictionary.json");

/// Facet category. Declaration order is the precedence order used when a token
/// qualifies for several categories (first wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Check,
    Constraint,
    Artifact,
    Tech,
    Failure,
    Op,
    Core,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Check,
        Category::Constraint,
        Category::Artifact,
        Category::Tech,
        Category::Failure,
        Category::Op,
        Category::Core,
    ];

    /// Returns whichever of the two categories has higher precedence.
    pub fn stronger(self, other: Category) -> Category {
        self.min(other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Check => "check",
            Category::Constraint => "constraint",
            Category::Artifact => "artifact",
            Category::Tech => "tech",
            Category::Failure => "failure",
            Category::Op => "op",
            Category::Core => "core",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// On-disk form of the dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryFile {
    pub version: String,
    #[serde(default)]
    pub stopwords: BTreeSet<String>,
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
    #[serde(default)]
    pub retrieval_aliases: BTreeMap<String, String>,
    #[serde(default)]
    pub categories: BTreeMap<Category, BTreeSet<String>>,
    #[serde(default)]
    pub generic_markers: BTreeSet<String>,
    #[serde(default)]
    pub exclusive: Vec<(String, String)>,
}

/// A recognized token together with whether it was matched literally (after
/// spelling normalization) or only through a retrieval alias.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recognized {
    pub token: String,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DictionaryFile", into = "DictionaryFile")]
pub struct Dictionary {
    file: DictionaryFile,
    stopwords: HashSet<String>,
    aliases: HashMap<String, String>,
    retrieval_aliases: HashMap<String, String>,
    token_category: HashMap<String, Category>,
    generic_markers: HashSet<String>,
    exclusive: HashSet<(String, String)>,
}

impl TryFrom<DictionaryFile> for Dictionary {
    type Error = Error;

    fn try_from(file: DictionaryFile) -> Result<Self> {
        let norm = |s: &str| normalize_base(s);
        let mut token_category = HashMap::new();
        for (&category, tokens) in &file.categories {
            for t in tokens {
                let Some(t) = norm(t) else { continue };
                token_category
                    .entry(t)
                    .and_modify(|c: &mut Category| *c = c.stronger(category))
                    .or_insert(category);
            }
        }
        let alias_map = |m: &BTreeMap<String, String>| -> Result<HashMap<String, String>> {
            let mut out = HashMap::new();
            for (k, v) in m {
                match (norm(k), norm(v)) {
                    (Some(k), Some(v)) => {
                        out.insert(k, v);
                    }
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "dictionary alias `{k}` -> `{v}` normalizes to an empty token"
                        )))
                    }
                }
            }
            Ok(out)
        };
        let aliases = alias_map(&file.aliases)?;
        let retrieval_aliases = alias_map(&file.retrieval_aliases)?;
        let stopwords = file.stopwords.iter().filter_map(|s| norm(s)).collect();
        let generic_markers = file.generic_markers.iter().filter_map(|s| norm(s)).collect();
        let mut exclusive = HashSet::new();
        for (a, b) in &file.exclusive {
            if let (Some(a), Some(b)) = (norm(a), norm(b)) {
                exclusive.insert((a.clone(), b.clone()));
                exclusive.insert((b, a));
            }
        }
        Ok(Dictionary {
            file,
            stopwords,
            aliases,
            retrieval_aliases,
            token_category,
            generic_markers,
            exclusive,
        })
    }
}

impl From<Dictionary> for DictionaryFile {
    fn from(d: Dictionary) -> Self {
        d.file
    }
}

impl Default for Dictionary {
    fn default() -> Self {
        Dictionary::from_json(DEFAULT_DICTIONARY_JSON).expect("embedded dictionary is valid")
    }
}

impl Dictionary {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: DictionaryFile =
            serde_json::from_str(text).map_err(|e| Error::json("dictionary", e))?;
        Dictionary::try_from(file)
    }

    pub fn version(&self) -> &str {
        &self.file.version
    }

    pub fn file(&self) -> &DictionaryFile {
        &self.file
    }

    pub fn category_of(&self, token: &str) -> Option<Category> {
        self.token_category.get(token).copied()
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn is_generic_marker(&self, token: &str) -> bool {
        self.generic_markers.contains(token)
    }

    pub fn are_exclusive(&self, a: &str, b: &str) -> bool {
        self.exclusive.contains(&(a.to_string(), b.to_string()))
    }

    /// Full normalization of a single facet value: spelling normalization followed
    /// by the (exact) alias map. Retrieval aliases are never applied here.
    pub fn normalize(&self, raw: &str) -> Option<String> {
        let base = normalize_base(raw)?;
        Some(self.aliases.get(&base).cloned().unwrap_or(base))
    }

    fn resolve(&self, cand: &str, known: &dyn Fn(&str) -> bool) -> Option<Recognized> {
        if let Some(t) = self.aliases.get(cand) {
            if known(t) {
                return Some(Recognized { token: t.clone(), exact: true });
            }
        }
        if let Some(t) = self.retrieval_aliases.get(cand) {
            if known(t) {
                return Some(Recognized { token: t.clone(), exact: false });
            }
        }
        if known(cand) {
            return Some(Recognized { token: cand.to_string(), exact: true });
        }
        // plural fallback: "reports" -> "report" when only the stem is known
        if let Some(stem) = cand.strip_suffix('s') {
            if stem.chars().count() >= 3 && !stem.ends_with('s') && known(stem) {
                return Some(Recognized { token: stem.to_string(), exact: true });
            }
        }
        None
    }

    /// Greedy left-to-right longest-match recognition over 3-, 2- and 1-word
    /// phrases. Phrases are joined with `-` before lookup, so "output format"
    /// matches the facet `output-format`.
    ///
    /// `keep_unknown_words` keeps single non-stopword words that `known` rejects;
    /// skill text uses it, queries do not.
    pub fn recognize(
        &self,
        text: &str,
        known: &dyn Fn(&str) -> bool,
        keep_unknown_words: bool,
    ) -> Vec<Recognized> {
        let words = tokenize(text);
        let mut out = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let mut step = 1;
            let mut hit = None;
            for n in (1..=3usize).rev() {
                if i + n > words.len() {
                    continue;
                }
                let span = &words[i..i + n];
                if n > 1 && (self.is_stopword(&span[0]) || self.is_stopword(&span[n - 1])) {
                    continue;
                }
                let Some(cand) = normalize_base(&span.join("-")) else {
                    continue;
                };
                if n == 1 && self.is_stopword(&cand) {
                    break;
                }
                if let Some(r) = self.resolve(&cand, known) {
                    hit = Some(r);
                    step = n;
                    break;
                }
                // file names: "report.pdf" -> "pdf"
                if n == 1 {
                    if let Some(r) = cand
                        .rsplit_once('.')
                        .and_then(|(_, ext)| self.resolve(ext, known))
                    {
                        hit = Some(r);
                        break;
                    }
                }
                if n == 1 && keep_unknown_words {
                    let token = self.aliases.get(&cand).cloned().unwrap_or(cand);
                    hit = Some(Recognized { token, exact: true });
                }
            }
            if let Some(r) = hit {
                out.push(r);
            }
            i += step;
        }
        out
    }
}

/// Spelling normalization: lowercase, trim, strip leading/trailing dots (so ".xlsx"
/// becomes "xlsx"), unify `_` and whitespace into `-`, collapse repeated hyphens.
pub fn normalize_base(raw: &str) -> Option<String> {
    let lowered = raw.trim().to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    let mut last_hyphen = false;
    for ch in lowered.chars() {
        let ch = if ch == '_' || ch.is_whitespace() { '-' } else { ch };
        if ch == '-' {
            if last_hyphen {
                continue;
            }
            last_hyphen = true;
        } else {
            last_hyphen = false;
        }
        out.push(ch);
    }
    let trimmed = out.trim_matches(|c| c == '.' || c == '-');
    if trimmed.is_empty() || !trimmed.chars().any(char::is_alphanumeric) {
        None
    } else {
        Some(trimmed.to_string())
    }
}

/// Splits free text into lowercase words. Dots, hyphens, underscores and `+` stay
/// inside words so that `.xlsx`, `three.js` and `c++` survive as single tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || matches!(c, '.' | '-' | '_' | '+')))
        .filter_map(|w| {
            let w = w.trim_end_matches(['.', '-', '_']).trim_start_matches(['-', '_']);
            if w.chars().any(char::is_alphanumeric) {
                Some(w.to_lowercase())
            } else {
                None
            }
        })
        .collect()
}
