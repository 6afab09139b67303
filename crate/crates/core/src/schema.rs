//! Query schema: the query's recognized facets filed under seven categories, plus
//! the exact high-confidence subset used for coverage accounting.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::Mode;
use crate::dictionary::{Category, Dictionary};
use crate::library::FacetSet;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySchema {
    pub core: BTreeSet<String>,
    pub tech: BTreeSet<String>,
    pub op: BTreeSet<String>,
    pub artifact: BTreeSet<String>,
    pub constraint: BTreeSet<String>,
    pub failure: BTreeSet<String>,
    pub check: BTreeSet<String>,
    /// Tokens reached only through a retrieval alias ("excel" -> xlsx). They help
    /// retrieval but never count as stated requirements.
    #[serde(default)]
    pub alias_only: BTreeSet<String>,
}

impl QuerySchema {
    pub fn field(&self, c: Category) -> &BTreeSet<String> {
        match c {
            Category::Core => &self.core,
            Category::Tech => &self.tech,
            Category::Op => &self.op,
            Category::Artifact => &self.artifact,
            Category::Constraint => &self.constraint,
            Category::Failure => &self.failure,
            Category::Check => &self.check,
        }
    }

    fn field_mut(&mut self, c: Category) -> &mut BTreeSet<String> {
        match c {
            Category::Core => &mut self.core,
            Category::Tech => &mut self.tech,
            Category::Op => &mut self.op,
            Category::Artifact => &mut self.artifact,
            Category::Constraint => &mut self.constraint,
            Category::Failure => &mut self.failure,
            Category::Check => &mut self.check,
        }
    }

    /// Every schema token with its category.
    pub fn facets(&self) -> FacetSet {
        let mut out = FacetSet::new();
        for c in Category::ALL {
            for t in self.field(c) {
                out.insert(t.clone(), c);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        Category::ALL.iter().map(|&c| self.field(c).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, token: &str) -> bool {
        Category::ALL.iter().any(|&c| self.field(c).contains(token))
    }

    pub fn is_exact(&self, token: &str) -> bool {
        self.contains(token) && !self.alias_only.contains(token)
    }

    /// Technology and artifact anchors, exact or alias-derived.
    pub fn anchors(&self) -> impl Iterator<Item = &str> {
        self.tech.iter().chain(self.artifact.iter()).map(String::as_str)
    }

    pub fn has_anchors(&self) -> bool {
        !self.tech.is_empty() || !self.artifact.is_empty()
    }

    /// Visible-requirement cues: checks, artifacts and constraints.
    pub fn requirement_cues(&self) -> impl Iterator<Item = &str> {
        self.check
            .iter()
            .chain(self.artifact.iter())
            .chain(self.constraint.iter())
            .map(String::as_str)
    }
}

/// Recognizes dictionary and library-vocabulary terms in the query. Each token is
/// filed under one category: the dictionary's if it has one, else the category
/// the library vocabulary uses, else core.
pub fn extract_schema(query: &str, dict: &Dictionary, vocabulary: &FacetSet) -> QuerySchema {
    let known = |t: &str| dict.category_of(t).is_some() || vocabulary.contains(t);
    let mut schema = QuerySchema::default();
    let mut exact = BTreeSet::new();
    for r in dict.recognize(query, &known, false) {
        let c = dict
            .category_of(&r.token)
            .or_else(|| vocabulary.category(&r.token))
            .unwrap_or(Category::Core);
        if r.exact {
            exact.insert(r.token.clone());
        }
        schema.field_mut(c).insert(r.token);
    }
    let alias_only: BTreeSet<String> = schema
        .facets()
        .tokens()
        .filter(|t| !exact.contains(*t))
        .map(str::to_string)
        .collect();
    schema.alias_only = alias_only;
    schema
}

/// Exact query facets in the requirement categories. Check cues are included only
/// in critical-override mode.
pub fn high_confidence_facets(schema: &QuerySchema, mode: Mode) -> FacetSet {
    let mut cats = vec![Category::Tech, Category::Artifact, Category::Constraint];
    if mode == Mode::CriticalOverride {
        cats.push(Category::Check);
    }
    let mut out = FacetSet::new();
    for c in cats {
        for t in schema.field(c) {
            if !schema.alias_only.contains(t) {
                out.insert(t.clone(), c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> FacetSet {
        let mut v = FacetSet::new();
        v.insert("fuzzy-match", Category::Op);
        v.insert("fraud", Category::Core);
        v.insert("invoice", Category::Core);
        v.insert("matching", Category::Core);
        v
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn invoice_query() {
        let d = Dictionary::default();
        let s = extract_schema("detect fraudulent invoices in pdf and xlsx", &d, &vocab());
        assert_eq!(s.artifact, set(&["pdf", "xlsx"]));
        assert_eq!(s.op, set(&["detect"]));
        assert_eq!(s.core, set(&["fraud", "invoice"]));
        assert!(s.tech.is_empty() && s.check.is_empty() && s.alias_only.is_empty());
    }

    #[test]
    fn empty_query() {
        let s = extract_schema("", &Dictionary::default(), &vocab());
        assert!(s.is_empty());
        assert_eq!(s, QuerySchema::default());
    }

    #[test]
    fn output_format_json() {
        let s = extract_schema("output format must be json", &Dictionary::default(), &FacetSet::new());
        assert_eq!(s.check, set(&["output-format"]));
        assert_eq!(s.constraint, set(&["json"]));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn unknown_words_ignored() {
        let s = extract_schema("please frobnicate the widgets", &Dictionary::default(), &FacetSet::new());
        assert!(s.is_empty());
    }

    #[test]
    fn retrieval_alias_is_not_a_requirement() {
        let s = extract_schema("summarize the excel workbook", &Dictionary::default(), &FacetSet::new());
        assert_eq!(s.artifact, set(&["xlsx"]));
        assert!(s.alias_only.contains("xlsx"));
        assert!(high_confidence_facets(&s, Mode::CriticalOverride).is_empty());
        let s = extract_schema("read the excel file and write xlsx", &Dictionary::default(), &FacetSet::new());
        assert!(!s.alias_only.contains("xlsx"));
    }

    #[test]
    fn high_confidence_examples() {
        let d = Dictionary::default();
        let s = extract_schema("detect fraudulent invoices in pdf and xlsx", &d, &vocab());
        let h = high_confidence_facets(&s, Mode::CriticalOverride);
        assert_eq!(h.tokens().collect::<Vec<_>>(), vec!["pdf", "xlsx"]);

        let core_only = QuerySchema { core: set(&["fraud"]), ..QuerySchema::default() };
        assert!(high_confidence_facets(&core_only, Mode::CriticalOverride).is_empty());

        let s = extract_schema("deterministic output required", &d, &FacetSet::new());
        let h = high_confidence_facets(&s, Mode::InstructionAuto);
        assert!(h.contains("deterministic-output"));
    }

    #[test]
    fn modes_differ_on_checks() {
        let s = extract_schema("python script with unit tests", &Dictionary::default(), &FacetSet::new());
        assert!(high_confidence_facets(&s, Mode::CriticalOverride).contains("unit-tests"));
        assert!(!high_confidence_facets(&s, Mode::InstructionAuto).contains("unit-tests"));
        assert!(high_confidence_facets(&s, Mode::InstructionAuto).contains("python"));
    }
}
