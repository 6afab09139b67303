//! Skill library: skills with normalized facets and the typed skill graph.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dictionary::{Category, Dictionary};
use crate::error::{Error, Result};

/// Normalized facet tokens, each tagged with one category.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FacetSet(BTreeMap<String, Category>);

impl FacetSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a token; when it is already present the higher-precedence category wins.
    pub fn insert(&mut self, token: impl Into<String>, category: Category) {
        self.0
            .entry(token.into())
            .and_modify(|c| *c = c.stronger(category))
            .or_insert(category);
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains_key(token)
    }

    pub fn category(&self, token: &str) -> Option<Category> {
        self.0.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Category)> {
        self.0.iter().map(|(t, c)| (t.as_str(), *c))
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn of_category(&self, category: Category) -> impl Iterator<Item = &str> {
        self.0
            .iter()
            .filter(move |(_, c)| **c == category)
            .map(|(t, _)| t.as_str())
    }

    pub fn extend(&mut self, other: &FacetSet) {
        for (t, c) in other.iter() {
            self.insert(t, c);
        }
    }

    pub fn intersects(&self, other: &FacetSet) -> bool {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.tokens().any(|t| large.contains(t))
    }

    pub fn remove(&mut self, token: &str) -> Option<Category> {
        self.0.remove(token)
    }
}

impl FromIterator<(String, Category)> for FacetSet {
    fn from_iter<I: IntoIterator<Item = (String, Category)>>(iter: I) -> Self {
        let mut set = FacetSet::new();
        for (t, c) in iter {
            set.insert(t, c);
        }
        set
    }
}

/// One library entry. The first eight fields are the on-disk record; facets are
/// derived on load and never serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skill {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub description: String,
    pub payload: String,
    #[serde(default)]
    pub artifacts: Vec<String>,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub negatives: Vec<String>,
    #[serde(skip)]
    pub facets: FacetSet,
    #[serde(skip)]
    pub negative_facets: FacetSet,
}

impl Skill {
    /// Display name; falls back to the id when the name is empty.
    pub fn label(&self) -> &str {
        if self.name.trim().is_empty() {
            &self.id
        } else {
            &self.name
        }
    }
}

/// Positive and negative facets of one skill.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkillFacets {
    pub positive: FacetSet,
    pub negative: FacetSet,
}

/// Normalizes name, tags, description headers, artifacts and check cues into the
/// positive facet set; negative cues go into a separate set.
///
/// Field defaults when the dictionary has no category for a token: name -> op,
/// tags and headers -> core, artifacts -> artifact, checks -> check. Artifacts and
/// checks always keep their field category.
pub fn extract_skill_facets(skill: &Skill, dict: &Dictionary) -> SkillFacets {
    let mut positive = FacetSet::new();
    let dict_or = |t: &str, fallback: Category| dict.category_of(t).unwrap_or(fallback);

    if let Some(t) = dict.normalize(&skill.name) {
        let c = dict_or(&t, Category::Op);
        positive.insert(t, c);
    }
    for tag in &skill.tags {
        if let Some(t) = dict.normalize(tag) {
            let c = dict_or(&t, Category::Core);
            positive.insert(t, c);
        }
    }
    let known = |t: &str| dict.category_of(t).is_some();
    for header in description_headers(&skill.description) {
        for r in dict.recognize(header, &known, true) {
            let c = dict_or(&r.token, Category::Core);
            positive.insert(r.token, c);
        }
    }
    for a in &skill.artifacts {
        if let Some(t) = dict.normalize(a) {
            positive.insert(t, Category::Artifact);
        }
    }
    for cue in &skill.checks {
        if let Some(t) = dict.normalize(cue) {
            positive.insert(t, Category::Check);
        }
    }

    let mut negative = FacetSet::new();
    for cue in &skill.negatives {
        for t in negative_cue_tokens(cue, dict) {
            let c = dict_or(&t, Category::Failure);
            negative.insert(t, c);
        }
    }
    SkillFacets { positive, negative }
}

/// A single-token cue is kept verbatim; longer cues contribute only the
/// dictionary-recognized tokens they mention ("not for binary files" -> binary).
pub fn negative_cue_tokens(cue: &str, dict: &Dictionary) -> Vec<String> {
    let Some(whole) = dict.normalize(cue) else {
        return Vec::new();
    };
    if !whole.contains('-') || dict.category_of(&whole).is_some() {
        return vec![whole];
    }
    let known = |t: &str| dict.category_of(t).is_some();
    dict.recognize(cue, &known, false)
        .into_iter()
        .filter(|r| r.exact)
        .map(|r| r.token)
        .collect()
}

fn description_headers(description: &str) -> impl Iterator<Item = &str> {
    description.lines().filter_map(|line| {
        let line = line.trim_start();
        line.starts_with('#').then(|| line.trim_start_matches('#'))
    })
}

/// Relation type of a skill-graph edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeType {
    Dependency,
    Workflow,
    Artifact,
    VisibleCheck,
    Fallback,
    Alternative,
    Semantic,
}

impl EdgeType {
    /// Tie-break priority among equally weighted edges (lower is stronger).
    pub const PRIORITY: [EdgeType; 6] = [
        EdgeType::Dependency,
        EdgeType::Workflow,
        EdgeType::Artifact,
        EdgeType::VisibleCheck,
        EdgeType::Fallback,
        EdgeType::Alternative,
    ];

    pub fn priority(self) -> u8 {
        self as u8
    }

    /// Semantic edges only feed connectivity; they never define roles or neighborhoods.
    pub fn is_structural(self) -> bool {
        self != EdgeType::Semantic
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::Dependency => "dependency",
            EdgeType::Workflow => "workflow",
            EdgeType::Artifact => "artifact",
            EdgeType::VisibleCheck => "visible-check",
            EdgeType::Fallback => "fallback",
            EdgeType::Alternative => "alternative",
            EdgeType::Semantic => "semantic",
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Ok(match s {
            "dependency" => EdgeType::Dependency,
            "workflow" => EdgeType::Workflow,
            "artifact" => EdgeType::Artifact,
            "visible-check" => EdgeType::VisibleCheck,
            "fallback" => EdgeType::Fallback,
            "alternative" => EdgeType::Alternative,
            "semantic" => EdgeType::Semantic,
            _ => return Err(()),
        })
    }
}

/// `edges.json` row: `[src, dst, type, weight]`.
pub type RawEdge = (String, String, String, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawEdge", try_from = "RawEdge")]
pub struct SkillEdge {
    pub src: String,
    pub dst: String,
    pub kind: EdgeType,
    pub weight: f64,
}

impl From<SkillEdge> for RawEdge {
    fn from(e: SkillEdge) -> Self {
        (e.src, e.dst, e.kind.as_str().to_string(), e.weight)
    }
}

impl TryFrom<RawEdge> for SkillEdge {
    type Error = Error;

    fn try_from((src, dst, kind, weight): RawEdge) -> Result<Self> {
        let Ok(kind) = kind.parse() else {
            return Err(Error::UnknownEdgeType { src, dst, kind });
        };
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::WeightOutOfRange { src, dst, weight });
        }
        if src == dst {
            return Err(Error::SelfLoop(src));
        }
        Ok(SkillEdge { src, dst, kind, weight })
    }
}

/// Typed, weighted skill graph with an incidence list per skill.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypedSkillGraph {
    edges: Vec<SkillEdge>,
    incident: HashMap<String, Vec<usize>>,
}

impl TypedSkillGraph {
    pub fn edges(&self) -> &[SkillEdge] {
        &self.edges
    }

    /// Edges touching `skill` in either direction, in file order.
    pub fn incident(&self, skill: &str) -> impl Iterator<Item = &SkillEdge> {
        self.incident
            .get(skill)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    /// Edges between `a` and `b`, either direction.
    pub fn between(&self, a: &str, b: &str) -> std::vec::IntoIter<&SkillEdge> {
        self.incident(a)
            .filter(|e| (e.src == a && e.dst == b) || (e.src == b && e.dst == a))
            .collect::<Vec<_>>()
            .into_iter()
    }

    /// Strongest edge between two skills: highest weight, then type priority.
    pub fn strongest_between(&self, a: &str, b: &str) -> Option<&SkillEdge> {
        self.between(a, b).min_by(|x, y| edge_rank(x, y))
    }
}

/// Ordering used everywhere an edge must be chosen: weight descending, then type
/// priority, then endpoints.
pub fn edge_rank(x: &SkillEdge, y: &SkillEdge) -> std::cmp::Ordering {
    y.weight
        .total_cmp(&x.weight)
        .then(x.kind.priority().cmp(&y.kind.priority()))
        .then_with(|| (&x.src, &x.dst).cmp(&(&y.src, &y.dst)))
}

/// A validated skill library.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Library {
    skills: Vec<Skill>,
    by_id: HashMap<String, usize>,
    graph: TypedSkillGraph,
}

impl Library {
    /// Validates skills and edges and attaches normalized facets.
    pub fn new(skills: Vec<Skill>, edges: Vec<SkillEdge>, dict: &Dictionary) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(skills.len());
        let mut out = Vec::with_capacity(skills.len());
        for (pos, mut skill) in skills.into_iter().enumerate() {
            if skill.id.trim().is_empty() {
                return Err(Error::EmptySkillId(pos));
            }
            if skill.payload.trim().is_empty() {
                return Err(Error::EmptyPayload(skill.id));
            }
            if by_id.insert(skill.id.clone(), pos).is_some() {
                return Err(Error::DuplicateSkill(skill.id));
            }
            let facets = extract_skill_facets(&skill, dict);
            skill.facets = facets.positive;
            skill.negative_facets = facets.negative;
            out.push(skill);
        }
        let mut incident: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            for end in [&e.src, &e.dst] {
                if !by_id.contains_key(end) {
                    return Err(Error::UnknownEndpoint {
                        src: e.src.clone(),
                        dst: e.dst.clone(),
                        missing: end.clone(),
                    });
                }
            }
            incident.entry(e.src.clone()).or_default().push(i);
            incident.entry(e.dst.clone()).or_default().push(i);
        }
        Ok(Library {
            skills: out,
            by_id,
            graph: TypedSkillGraph { edges, incident },
        })
    }

    /// Parses `skills.json` and `edges.json` contents.
    pub fn from_json(skills_json: &str, edges_json: &str, dict: &Dictionary) -> Result<Self> {
        let skills: Vec<Skill> =
            serde_json::from_str(skills_json).map_err(|e| Error::json("skills.json", e))?;
        let raw: Vec<RawEdge> =
            serde_json::from_str(edges_json).map_err(|e| Error::json("edges.json", e))?;
        let edges = raw
            .into_iter()
            .map(SkillEdge::try_from)
            .collect::<Result<Vec<_>>>()?;
        Library::new(skills, edges, dict)
    }

    pub fn skills(&self) -> &[Skill] {
        &self.skills
    }

    pub fn graph(&self) -> &TypedSkillGraph {
        &self.graph
    }

    pub fn get(&self, id: &str) -> Option<&Skill> {
        self.by_id.get(id).map(|&i| &self.skills[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn skills_json(&self) -> String {
        serde_json::to_string_pretty(&self.skills).expect("skills serialize")
    }

    pub fn edges_json(&self) -> String {
        serde_json::to_string_pretty(&self.graph.edges).expect("edges serialize")
    }

    /// True when the skill carries a generic marker facet.
    pub fn is_generic(&self, id: &str, dict: &Dictionary) -> bool {
        self.get(id)
            .map(|s| s.facets.tokens().any(|t| dict.is_generic_marker(t)))
            .unwrap_or(false)
    }

    /// Self-contradictory metadata: a skill whose negative cues name its own facets.
    pub fn is_malformed(&self, id: &str) -> bool {
        self.get(id)
            .map(|s| s.negative_facets.intersects(&s.facets))
            .unwrap_or(true)
    }

    /// All positive facet tokens across the library with their strongest category.
    pub fn vocabulary(&self) -> FacetSet {
        let mut v = FacetSet::new();
        for s in &self.skills {
            v.extend(&s.facets);
        }
        v
    }
}

pub fn load_library(dir: impl AsRef<Path>) -> Result<Library> {
    load_library_with(dir, &Dictionary::default())
}

/// Loads `skills.json` and `edges.json` from `dir`.
pub fn load_library_with(dir: impl AsRef<Path>, dict: &Dictionary) -> Result<Library> {
    let dir = dir.as_ref();
    let read = |name: &str| -> Result<String> {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        fs::read_to_string(&path).map_err(|source| Error::Io { path, source })
    };
    let skills = read("skills.json")?;
    let edges = read("edges.json")?;
    Library::from_json(&skills, &edges, dict)
}
