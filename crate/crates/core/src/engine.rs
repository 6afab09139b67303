//! Query-time substrate: the library, the built pool and the lookup tables derived
//! from them, plus the self-contained `pool.json` format.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, DictionaryFile};
use crate::error::{Error, Result};
use crate::library::{EdgeType, FacetSet, Library, Skill, SkillEdge};
use crate::pool::{build_pool, GroupEdge, GroupGraph, GroupPool, InvertedIndex, PoolParams, SkillGroup};

pub const POOL_FORMAT: &str = "skill-group-pool/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolVersion {
    pub format: String,
    pub dictionary: String,
    pub edge_priority: Vec<EdgeType>,
    pub max_group_size: usize,
    pub affinity_threshold: f64,
}

/// On-disk pool. Carries the library and dictionary so retrieval needs no other
/// input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolFile {
    pub version: PoolVersion,
    pub dictionary: DictionaryFile,
    pub skills: Vec<Skill>,
    pub skill_edges: Vec<SkillEdge>,
    pub groups: Vec<SkillGroup>,
    pub group_edges: Vec<GroupEdge>,
    pub index: InvertedIndex,
}

#[derive(Debug, Clone)]
pub struct Engine {
    pub dict: Dictionary,
    pub lib: Library,
    pub pool: GroupPool,
    pub params: PoolParams,
    vocabulary: FacetSet,
    group_pos: HashMap<String, usize>,
    positive: Vec<Vec<(usize, f64)>>,
    incompat: HashSet<(usize, usize)>,
    skill_df: HashMap<String, usize>,
    skills_by_facet: HashMap<String, Vec<usize>>,
}

impl Engine {
    /// Builds the pool for `lib` and wraps it.
    pub fn build(lib: Library, dict: Dictionary, params: PoolParams) -> Engine {
        let pool = build_pool(&lib, &dict, params);
        Engine::assemble(dict, lib, pool, params)
    }

    fn assemble(dict: Dictionary, lib: Library, pool: GroupPool, params: PoolParams) -> Engine {
        let group_pos: HashMap<String, usize> =
            pool.groups.iter().enumerate().map(|(i, g)| (g.id.clone(), i)).collect();
        let mut positive = vec![Vec::new(); pool.groups.len()];
        let mut incompat = HashSet::new();
        for e in &pool.graph.edges {
            let (a, b) = (group_pos[&e.src], group_pos[&e.dst]);
            if e.label.is_positive() {
                if e.weight > 0.0 {
                    positive[a].push((b, e.weight));
                    positive[b].push((a, e.weight));
                }
            } else {
                incompat.insert((a.min(b), a.max(b)));
            }
        }
        for adj in &mut positive {
            adj.sort_by_key(|&(i, _)| i);
        }
        let mut skills_by_facet: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, s) in lib.skills().iter().enumerate() {
            for t in s.facets.tokens() {
                skills_by_facet.entry(t.to_string()).or_default().push(i);
            }
        }
        let skill_df = skills_by_facet.iter().map(|(k, v)| (k.clone(), v.len())).collect();
        Engine {
            vocabulary: lib.vocabulary(),
            dict,
            lib,
            pool,
            params,
            group_pos,
            positive,
            incompat,
            skill_df,
            skills_by_facet,
        }
    }

    pub fn vocabulary(&self) -> &FacetSet {
        &self.vocabulary
    }

    pub fn groups(&self) -> &[SkillGroup] {
        &self.pool.groups
    }

    pub fn group(&self, i: usize) -> &SkillGroup {
        &self.pool.groups[i]
    }

    pub fn group_index(&self, id: &str) -> Option<usize> {
        self.group_pos.get(id).copied()
    }

    pub fn group_by_id(&self, id: &str) -> Option<&SkillGroup> {
        self.group_index(id).map(|i| &self.pool.groups[i])
    }

    /// Groups joined to `g` by a positive edge, with the edge weight, by index.
    pub fn positive_neighbors(&self, g: usize) -> &[(usize, f64)] {
        &self.positive[g]
    }

    pub fn positive_weight(&self, a: usize, b: usize) -> f64 {
        self.positive[a]
            .iter()
            .find(|&&(j, _)| j == b)
            .map(|&(_, w)| w)
            .unwrap_or(0.0)
    }

    pub fn incompatible(&self, a: usize, b: usize) -> bool {
        self.incompat.contains(&(a.min(b), a.max(b)))
    }

    /// Indices of groups holding `skill`.
    pub fn groups_with_skill(&self, skill: &str) -> impl Iterator<Item = usize> + '_ {
        self.pool
            .index
            .by_skill
            .get(skill)
            .into_iter()
            .flatten()
            .map(|id| self.group_pos[id])
    }

    /// Indices of groups whose required or optional facets hold `token`.
    pub fn groups_with_facet(&self, token: &str) -> impl Iterator<Item = usize> + '_ {
        self.pool
            .index
            .by_facet
            .get(token)
            .into_iter()
            .flatten()
            .map(|id| self.group_pos[id])
    }

    /// Number of skills carrying `token` as a positive facet.
    pub fn skill_df(&self, token: &str) -> usize {
        self.skill_df.get(token).copied().unwrap_or(0)
    }

    /// Library positions of skills carrying `token`.
    pub fn skills_with_facet(&self, token: &str) -> &[usize] {
        self.skills_by_facet.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn version(&self) -> PoolVersion {
        PoolVersion {
            format: POOL_FORMAT.to_string(),
            dictionary: self.dict.version().to_string(),
            edge_priority: EdgeType::PRIORITY.to_vec(),
            max_group_size: self.params.k_max,
            affinity_threshold: self.params.affinity_threshold,
        }
    }

    pub fn to_pool_file(&self) -> PoolFile {
        PoolFile {
            version: self.version(),
            dictionary: self.dict.file().clone(),
            skills: self.lib.skills().to_vec(),
            skill_edges: self.lib.graph().edges().to_vec(),
            groups: self.pool.groups.clone(),
            group_edges: self.pool.graph.edges.clone(),
            index: self.pool.index.clone(),
        }
    }

    pub fn to_pool_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_pool_file()).expect("pool serializes");
        text.push('\n');
        text
    }

    /// Parses and validates a pool file. Facets are re-derived from the embedded
    /// dictionary; group and edge references must resolve.
    pub fn from_pool_json(text: &str) -> Result<Engine> {
        let file: PoolFile = serde_json::from_str(text).map_err(|e| Error::json("pool.json", e))?;
        Engine::from_pool_file(file)
    }

    pub fn from_pool_file(file: PoolFile) -> Result<Engine> {
        let invalid = |msg: String| Err(Error::InvalidPool(msg));
        if file.version.format != POOL_FORMAT {
            return invalid(format!("unsupported format `{}`", file.version.format));
        }
        let dict = Dictionary::try_from(file.dictionary)?;
        if dict.version() != file.version.dictionary {
            return invalid("dictionary version does not match header".to_string());
        }
        let lib = Library::new(file.skills, file.skill_edges, &dict)?;
        let mut seen = BTreeSet::new();
        for g in &file.groups {
            if !seen.insert(g.id.as_str()) {
                return invalid(format!("duplicate group id `{}`", g.id));
            }
            if let Some(s) = g.skills().find(|s| !lib.contains(s)) {
                return invalid(format!("group `{}` references unknown skill `{s}`", g.id));
            }
            if g.members.len() + 1 > file.version.max_group_size.max(1) {
                return invalid(format!("group `{}` exceeds the group size cap", g.id));
            }
        }
        for e in &file.group_edges {
            for end in [&e.src, &e.dst] {
                if !seen.contains(end.as_str()) {
                    return invalid(format!("group edge references unknown group `{end}`"));
                }
            }
        }
        let expected = InvertedIndex::build(&file.groups);
        if expected != file.index {
            return invalid("inverted index does not match groups".to_string());
        }
        let params = PoolParams {
            k_max: file.version.max_group_size,
            affinity_threshold: file.version.affinity_threshold,
            parallel: true,
        };
        let pool = GroupPool {
            groups: file.groups,
            graph: GroupGraph { edges: file.group_edges },
            index: file.index,
        };
        Ok(Engine::assemble(dict, lib, pool, params))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Engine> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Engine::from_pool_json(&text)
    }
}
