//! Offline construction of the skill-group pool, the typed group graph and the
//! inverted index.
//!
//! Every skill is tried as a lead. Its typed one-hop neighborhood (capped at the
//! group size) seeds singleton, pair and triple candidates; each candidate gets
//! roles, facets and a prior, and survives only if it is compatible and adds
//! evidence beyond its lead. Retained groups are then connected by affinity edges.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Category, Dictionary};
use crate::error::{Error, Result};
use crate::library::{edge_rank, EdgeType, FacetSet, Library, Skill, SkillEdge};

/// Maximum group size (lead plus two members).
pub const MAX_GROUP_SIZE: usize = 3;
/// Minimum affinity for a positive group-graph edge.
pub const AFFINITY_THRESHOLD: f64 = 0.35;
const AFFINITY_EDGE_WEIGHT: f64 = 0.6;
const AFFINITY_FACET_WEIGHT: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Anchor,
    Prerequisite,
    Preprocessor,
    Setup,
    Formatter,
    Parser,
    Checker,
    Fallback,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Anchor => "anchor",
            Role::Prerequisite => "prerequisite",
            Role::Preprocessor => "preprocessor",
            Role::Setup => "setup",
            Role::Formatter => "formatter",
            Role::Parser => "parser",
            Role::Checker => "checker",
            Role::Fallback => "fallback",
        }
    }

    /// Roles whose contribution is structural rather than facet-bearing; a member
    /// holding one of them counts as evidence even when it adds no new facet.
    fn is_structural(self) -> bool {
        matches!(self, Role::Prerequisite | Role::Checker | Role::Fallback)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Role a member takes given its strongest edge to the lead.
///
/// `member_is_src` is true when the edge points from the member to the lead.
pub fn role_for_edge(kind: EdgeType, member_is_src: bool) -> Option<Role> {
    Some(match kind {
        EdgeType::Dependency => Role::Prerequisite,
        EdgeType::Workflow if member_is_src => Role::Preprocessor,
        EdgeType::Workflow => Role::Setup,
        EdgeType::Artifact if member_is_src => Role::Parser,
        EdgeType::Artifact => Role::Formatter,
        EdgeType::VisibleCheck => Role::Checker,
        EdgeType::Fallback | EdgeType::Alternative => Role::Fallback,
        EdgeType::Semantic => return None,
    })
}

/// One entry of a lead's typed neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub skill: String,
    pub kind: EdgeType,
    pub weight: f64,
    /// True when the edge points from the neighbor to the lead.
    pub incoming: bool,
}

impl Neighbor {
    pub fn role(&self) -> Role {
        role_for_edge(self.kind, self.incoming).unwrap_or(Role::Preprocessor)
    }
}

/// Incoming and outgoing one-hop neighbors over structural edges, each represented
/// by its strongest edge, ordered by descending weight, then edge-type priority,
/// then id, and truncated to `cap`.
pub fn typed_neighborhood(lead: &str, lib: &Library, cap: usize) -> Result<Vec<Neighbor>> {
    if !lib.contains(lead) {
        return Err(Error::UnknownSkill(lead.to_string()));
    }
    let mut best: BTreeMap<&str, &SkillEdge> = BTreeMap::new();
    for e in lib.graph().incident(lead).filter(|e| e.kind.is_structural()) {
        let other = if e.src == lead { e.dst.as_str() } else { e.src.as_str() };
        best.entry(other)
            .and_modify(|cur| {
                if edge_rank(e, cur).is_lt() {
                    *cur = e;
                }
            })
            .or_insert(e);
    }
    let mut out: Vec<Neighbor> = best
        .into_iter()
        .map(|(skill, e)| Neighbor {
            skill: skill.to_string(),
            kind: e.kind,
            weight: e.weight,
            incoming: e.dst == lead,
        })
        .collect();
    out.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then(a.kind.priority().cmp(&b.kind.priority()))
            .then_with(|| a.skill.cmp(&b.skill))
    });
    out.truncate(cap);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillGroup {
    pub id: String,
    pub lead: String,
    /// Support members, sorted by id.
    pub members: Vec<String>,
    pub roles: BTreeMap<String, Role>,
    pub required_facets: FacetSet,
    pub optional_facets: FacetSet,
    pub negative_facets: FacetSet,
    pub negative_cues: Vec<String>,
    pub artifacts: BTreeSet<String>,
    pub checks: BTreeSet<String>,
    pub topology: Vec<SkillEdge>,
    pub prior: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SkillGroup {
    /// Bare candidate: lead plus members in enumeration order, nothing derived yet.
    pub fn candidate(lead: &str, members: &[&str]) -> SkillGroup {
        SkillGroup {
            id: group_id(lead, members),
            lead: lead.to_string(),
            members: members.iter().map(|m| m.to_string()).collect(),
            roles: BTreeMap::new(),
            required_facets: FacetSet::new(),
            optional_facets: FacetSet::new(),
            negative_facets: FacetSet::new(),
            negative_cues: Vec::new(),
            artifacts: BTreeSet::new(),
            checks: BTreeSet::new(),
            topology: Vec::new(),
            prior: 0.0,
            warnings: Vec::new(),
        }
    }

    /// Lead first, then members.
    pub fn skills(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.lead.as_str()).chain(self.members.iter().map(String::as_str))
    }

    pub fn size(&self) -> usize {
        1 + self.members.len()
    }

    pub fn contains(&self, skill: &str) -> bool {
        self.lead == skill || self.members.iter().any(|m| m == skill)
    }

    /// Required plus optional facets.
    pub fn positive_facets(&self) -> FacetSet {
        let mut all = self.required_facets.clone();
        all.extend(&self.optional_facets);
        all
    }

    pub fn has_positive_facet(&self, token: &str) -> bool {
        self.required_facets.contains(token) || self.optional_facets.contains(token)
    }

    fn canonical_key(&self) -> (String, Vec<String>) {
        let mut m = self.members.clone();
        m.sort();
        (self.lead.clone(), m)
    }
}

/// Stable, collision-free group id: `lead+member+member` with `+` and `\` escaped
/// inside skill ids; members in sorted order.
pub fn group_id(lead: &str, members: &[&str]) -> String {
    fn esc(s: &str) -> String {
        s.replace('\\', "\\\\").replace('+', "\\+")
    }
    let mut sorted: Vec<&str> = members.to_vec();
    sorted.sort();
    let mut id = esc(lead);
    for m in sorted {
        id.push('+');
        id.push_str(&esc(m));
    }
    id
}

/// True when two skills cannot share a group: one's negative cues name the other's
/// facets, or they carry mutually exclusive formats or technologies.
pub fn skills_conflict(a: &Skill, b: &Skill, dict: &Dictionary) -> bool {
    if a.negative_facets.intersects(&b.facets) || b.negative_facets.intersects(&a.facets) {
        return true;
    }
    fn anchors(s: &Skill) -> Vec<&str> {
        s.facets
            .iter()
            .filter(|(_, c)| matches!(c, Category::Tech | Category::Artifact | Category::Constraint))
            .map(|(t, _)| t)
            .collect()
    }
    let (xa, xb) = (anchors(a), anchors(b));
    xa.iter().any(|x| xb.iter().any(|y| dict.are_exclusive(x, y)))
}

/// Candidate groups for one lead: the singleton, every lead-neighbor pair, and
/// lead-plus-two triples whose members do not conflict and whose second member
/// adds a distinct role or a distinct artifact/check facet beyond the pair.
pub fn enumerate_groups(
    lead: &str,
    neighborhood: &[Neighbor],
    k_max: usize,
    lib: &Library,
    dict: &Dictionary,
) -> Vec<SkillGroup> {
    let mut out = vec![SkillGroup::candidate(lead, &[])];
    if k_max < 2 {
        return out;
    }
    for n in neighborhood {
        out.push(SkillGroup::candidate(lead, &[&n.skill]));
    }
    if k_max < 3 {
        return out;
    }
    let Some(lead_skill) = lib.get(lead) else {
        return out;
    };
    for (i, first) in neighborhood.iter().enumerate() {
        for second in &neighborhood[i + 1..] {
            let (Some(a), Some(b)) = (lib.get(&first.skill), lib.get(&second.skill)) else {
                continue;
            };
            if skills_conflict(a, b, dict) {
                continue;
            }
            let distinct_role = first.role() != second.role();
            let distinct_cue = b.facets.iter().any(|(t, c)| {
                matches!(c, Category::Artifact | Category::Check)
                    && !lead_skill.facets.contains(t)
                    && !a.facets.contains(t)
            });
            if distinct_role || distinct_cue {
                out.push(SkillGroup::candidate(lead, &[&first.skill, &second.skill]));
            }
        }
    }
    out
}

/// Sets the lead to anchor and maps each member's strongest structural edge to the
/// lead onto a role. A member without such an edge becomes a preprocessor and the
/// group records a warning. Also records the intra-group topology.
pub fn assign_roles(mut group: SkillGroup, lib: &Library) -> SkillGroup {
    group.roles.clear();
    group.roles.insert(group.lead.clone(), Role::Anchor);
    for m in &group.members {
        let edge = lib
            .graph()
            .between(&group.lead, m)
            .filter(|e| e.kind.is_structural())
            .min_by(|x, y| edge_rank(x, y));
        let role = match edge.and_then(|e| role_for_edge(e.kind, e.src == *m)) {
            Some(r) => r,
            None => {
                group.warnings.push(format!(
                    "member `{m}` has no typed edge to lead `{}`; assigned preprocessor",
                    group.lead
                ));
                Role::Preprocessor
            }
        };
        group.roles.insert(m.clone(), role);
    }
    let skills: Vec<&str> = group.skills().collect();
    let mut topology: Vec<SkillEdge> = Vec::new();
    for (i, a) in skills.iter().enumerate() {
        for b in &skills[i + 1..] {
            topology.extend(lib.graph().between(a, b).cloned());
        }
    }
    topology.sort_by(|x, y| {
        (&x.src, &x.dst, x.kind).cmp(&(&y.src, &y.dst, y.kind))
    });
    group.topology = topology;
    group
}

/// Required = lead facets, optional = member facets not already required, negative
/// = union of every group skill's negative facets. Also computes the prior.
pub fn extract_group_facets(mut group: SkillGroup, lib: &Library) -> SkillGroup {
    let mut required = FacetSet::new();
    let mut optional = FacetSet::new();
    let mut negative = FacetSet::new();
    let mut cues = BTreeSet::new();
    let mut artifacts = BTreeSet::new();
    let mut checks = BTreeSet::new();
    for (i, id) in group.skills().enumerate() {
        let Some(s) = lib.get(id) else { continue };
        if i == 0 {
            required.extend(&s.facets);
        } else {
            for (t, c) in s.facets.iter() {
                if !required.contains(t) {
                    optional.insert(t, c);
                }
            }
        }
        negative.extend(&s.negative_facets);
        cues.extend(s.negatives.iter().map(|c| c.trim().to_string()).filter(|c| !c.is_empty()));
        artifacts.extend(s.facets.of_category(Category::Artifact).map(str::to_string));
        checks.extend(s.facets.of_category(Category::Check).map(str::to_string));
    }
    group.required_facets = required;
    group.optional_facets = optional;
    group.negative_facets = negative;
    group.negative_cues = cues.into_iter().collect();
    group.artifacts = artifacts;
    group.checks = checks;
    group.prior = group_prior(&group, lib);
    group
}

/// Singletons: half the lead's facet richness (saturating at 8 facets). Larger
/// groups: equal mix of role diversity (out of 3) and mean intra-group edge weight.
pub fn group_prior(group: &SkillGroup, lib: &Library) -> f64 {
    let prior = if group.members.is_empty() {
        let n = lib.get(&group.lead).map(|s| s.facets.len()).unwrap_or(0);
        0.5 * (n as f64 / 8.0).min(1.0)
    } else {
        let roles: BTreeSet<Role> = group.roles.values().copied().collect();
        let diversity = roles.len() as f64 / MAX_GROUP_SIZE as f64;
        let mean_w = if group.topology.is_empty() {
            0.0
        } else {
            group.topology.iter().map(|e| e.weight).sum::<f64>() / group.topology.len() as f64
        };
        0.5 * diversity + 0.5 * mean_w
    };
    prior.clamp(0.0, 1.0)
}

/// Singletons pass unless the lead's metadata contradicts itself; larger groups
/// fail on any pairwise conflict between their skills.
pub fn is_compatible(group: &SkillGroup, lib: &Library, dict: &Dictionary) -> bool {
    let skills: Vec<&Skill> = group.skills().filter_map(|id| lib.get(id)).collect();
    if skills.len() != group.size() {
        return false;
    }
    if skills.iter().any(|s| lib.is_malformed(&s.id)) {
        return false;
    }
    for (i, a) in skills.iter().enumerate() {
        for b in &skills[i + 1..] {
            if skills_conflict(a, b, dict) {
                return false;
            }
        }
    }
    true
}

/// Retained groups keyed by canonical form (lead, sorted members).
pub type RetainedGroups = BTreeMap<(String, Vec<String>), SkillGroup>;

/// False when a canonical duplicate with an equal or higher prior is already
/// retained, or when no member adds a new facet or a structural role beyond the lead.
pub fn is_non_redundant(group: &SkillGroup, retained: &RetainedGroups, lib: &Library) -> bool {
    if let Some(existing) = retained.get(&group.canonical_key()) {
        if existing.prior >= group.prior {
            return false;
        }
    }
    if group.members.is_empty() {
        return true;
    }
    let Some(lead) = lib.get(&group.lead) else {
        return false;
    };
    group.members.iter().any(|m| {
        let role_evidence = group.roles.get(m).is_some_and(|r| r.is_structural());
        let facet_evidence = lib
            .get(m)
            .is_some_and(|s| s.facets.tokens().any(|t| !lead.facets.contains(t)));
        role_evidence || facet_evidence
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupEdgeLabel {
    Support,
    Artifact,
    VisibleCheck,
    Fallback,
    Incompat,
}

impl GroupEdgeLabel {
    fn from_edge_type(kind: EdgeType) -> GroupEdgeLabel {
        match kind {
            EdgeType::Dependency | EdgeType::Workflow | EdgeType::Semantic => GroupEdgeLabel::Support,
            EdgeType::Artifact => GroupEdgeLabel::Artifact,
            EdgeType::VisibleCheck => GroupEdgeLabel::VisibleCheck,
            EdgeType::Fallback | EdgeType::Alternative => GroupEdgeLabel::Fallback,
        }
    }

    pub fn is_positive(self) -> bool {
        self != GroupEdgeLabel::Incompat
    }
}

/// Undirected group-graph edge; `src` precedes `dst` in pool order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEdge {
    pub src: String,
    pub dst: String,
    pub label: GroupEdgeLabel,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupGraph {
    pub edges: Vec<GroupEdge>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub by_skill: BTreeMap<String, Vec<String>>,
    pub by_facet: BTreeMap<String, Vec<String>>,
}

impl InvertedIndex {
    pub fn build(groups: &[SkillGroup]) -> InvertedIndex {
        let mut index = InvertedIndex::default();
        for g in groups {
            for s in g.skills() {
                index.by_skill.entry(s.to_string()).or_default().push(g.id.clone());
            }
            for t in g.required_facets.tokens().chain(g.optional_facets.tokens()) {
                index.by_facet.entry(t.to_string()).or_default().push(g.id.clone());
            }
        }
        index
    }
}

/// Cross-group typed-edge evidence: strongest edge between a skill of `a` and a
/// distinct skill of `b`.
fn strongest_cross_edge<'a>(a: &SkillGroup, b: &SkillGroup, lib: &'a Library) -> Option<&'a SkillEdge> {
    let mut best: Option<&SkillEdge> = None;
    for u in a.skills() {
        for v in b.skills() {
            if u == v {
                continue;
            }
            if let Some(e) = lib.graph().strongest_between(u, v) {
                if best.is_none_or(|cur| edge_rank(e, cur).is_lt()) {
                    best = Some(e);
                }
            }
        }
    }
    best
}

fn jaccard(a: &FacetSet, b: &FacetSet) -> f64 {
    let inter = a.tokens().filter(|t| b.contains(t)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Affinity of a group pair: 0.6 x strongest cross-group typed edge + 0.4 x facet
/// Jaccard. Returns the label implied by the evidence.
pub fn group_affinity(a: &SkillGroup, b: &SkillGroup, lib: &Library) -> (f64, GroupEdgeLabel) {
    let edge = strongest_cross_edge(a, b, lib);
    let j = jaccard(&a.positive_facets(), &b.positive_facets());
    affinity_from(a, b, edge, j)
}

fn affinity_from(a: &SkillGroup, b: &SkillGroup, edge: Option<&SkillEdge>, j: f64) -> (f64, GroupEdgeLabel) {
    let w = edge.map(|e| e.weight).unwrap_or(0.0);
    let label = match edge {
        Some(e) => GroupEdgeLabel::from_edge_type(e.kind),
        None if !a.artifacts.is_disjoint(&b.artifacts) => GroupEdgeLabel::Artifact,
        None if !a.checks.is_disjoint(&b.checks) => GroupEdgeLabel::VisibleCheck,
        None => GroupEdgeLabel::Support,
    };
    (AFFINITY_EDGE_WEIGHT * w + AFFINITY_FACET_WEIGHT * j, label)
}

/// Negative cues of one group name positive facets of the other.
pub fn groups_clash(a: &SkillGroup, b: &SkillGroup) -> bool {
    a.negative_facets.tokens().any(|t| b.has_positive_facet(t))
        || b.negative_facets.tokens().any(|t| a.has_positive_facet(t))
}

/// Connects retained groups. Incompatibility edges are always kept (weight 1);
/// positive edges only when affinity reaches `threshold`.
///
/// Candidate pairs come from three exact sources: skills joined by a typed edge,
/// negative facets hitting the facet index, and a prefix-filtered Jaccard join for
/// pairs whose facet overlap alone can reach the threshold.
pub fn build_group_graph(groups: &[SkillGroup], lib: &Library, threshold: f64) -> GroupGraph {
    let pos: HashMap<&str, usize> = groups.iter().enumerate().map(|(i, g)| (g.id.as_str(), i)).collect();
    let index = InvertedIndex::build(groups);
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut add = |a: usize, b: usize| {
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    };

    for (i, g) in groups.iter().enumerate() {
        for u in g.skills() {
            for e in lib.graph().incident(u) {
                let v = if e.src == u { &e.dst } else { &e.src };
                for h in index.by_skill.get(v).into_iter().flatten() {
                    add(i, pos[h.as_str()]);
                }
            }
        }
        for t in g.negative_facets.tokens() {
            for h in index.by_facet.get(t).into_iter().flatten() {
                add(i, pos[h.as_str()]);
            }
        }
    }

    let facet_only = threshold / AFFINITY_FACET_WEIGHT;
    if facet_only <= 1.0 {
        let t = (facet_only - 1e-9).max(0.0);
        let df: HashMap<&str, usize> = index.by_facet.iter().map(|(k, v)| (k.as_str(), v.len())).collect();
        let mut prefix_index: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, g) in groups.iter().enumerate() {
            let facets = g.positive_facets();
            let mut toks: Vec<&str> = facets.tokens().map(|t| index.by_facet.get_key_value(t).unwrap().0.as_str()).collect();
            if toks.is_empty() {
                continue;
            }
            toks.sort_by(|a, b| df[a].cmp(&df[b]).then(a.cmp(b)));
            let n = toks.len();
            let prefix = n - ((t * n as f64).ceil() as usize).min(n) + 1;
            for tok in toks.into_iter().take(prefix) {
                let bucket = prefix_index.entry(tok).or_default();
                for &j in bucket.iter() {
                    add(j, i);
                }
                bucket.push(i);
            }
        }
    }

    let facets: Vec<FacetSet> = groups.iter().map(SkillGroup::positive_facets).collect();
    let mut strongest: HashMap<(&str, &str), &SkillEdge> = HashMap::new();
    for e in lib.graph().edges() {
        let key = if e.src <= e.dst { (e.src.as_str(), e.dst.as_str()) } else { (e.dst.as_str(), e.src.as_str()) };
        strongest
            .entry(key)
            .and_modify(|cur| {
                if edge_rank(e, cur).is_lt() {
                    *cur = e;
                }
            })
            .or_insert(e);
    }
    let cross = |a: &SkillGroup, b: &SkillGroup| -> Option<&SkillEdge> {
        let mut best: Option<&SkillEdge> = None;
        for u in a.skills() {
            for v in b.skills() {
                let key = if u <= v { (u, v) } else { (v, u) };
                if let Some(&e) = strongest.get(&key).filter(|_| u != v) {
                    if best.is_none_or(|cur| edge_rank(e, cur).is_lt()) {
                        best = Some(e);
                    }
                }
            }
        }
        best
    };

    let mut edges = Vec::new();
    for (i, j) in pairs {
        let (a, b) = (&groups[i], &groups[j]);
        if groups_clash(a, b) {
            edges.push(GroupEdge {
                src: a.id.clone(),
                dst: b.id.clone(),
                label: GroupEdgeLabel::Incompat,
                weight: 1.0,
            });
            continue;
        }
        let (affinity, label) = affinity_from(a, b, cross(a, b), jaccard(&facets[i], &facets[j]));
        if affinity > 0.0 && affinity >= threshold {
            edges.push(GroupEdge {
                src: a.id.clone(),
                dst: b.id.clone(),
                label,
                weight: affinity.min(1.0),
            });
        }
    }
    GroupGraph { edges }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolParams {
    pub k_max: usize,
    pub affinity_threshold: f64,
    pub parallel: bool,
}

impl Default for PoolParams {
    fn default() -> Self {
        PoolParams {
            k_max: MAX_GROUP_SIZE,
            affinity_threshold: AFFINITY_THRESHOLD,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupPool {
    pub groups: Vec<SkillGroup>,
    pub graph: GroupGraph,
    pub index: InvertedIndex,
}

fn groups_for_lead(lead: &str, lib: &Library, dict: &Dictionary, k_max: usize) -> Vec<SkillGroup> {
    let Ok(neighborhood) = typed_neighborhood(lead, lib, k_max) else {
        return Vec::new();
    };
    let mut retained = RetainedGroups::new();
    for candidate in enumerate_groups(lead, &neighborhood, k_max, lib, dict) {
        let mut g = assign_roles(candidate, lib);
        g.members.sort();
        let g = extract_group_facets(g, lib);
        if is_compatible(&g, lib, dict) && is_non_redundant(&g, &retained, lib) {
            retained.insert(g.canonical_key(), g);
        }
    }
    retained.into_values().collect()
}

/// Builds the pool, group graph and index. Output order is by lead id, then
/// sorted member ids, regardless of `params.parallel`.
pub fn build_pool(lib: &Library, dict: &Dictionary, params: PoolParams) -> GroupPool {
    let leads: Vec<&str> = lib.skills().iter().map(|s| s.id.as_str()).collect();
    let per_lead: Vec<Vec<SkillGroup>> = if params.parallel {
        leads
            .par_iter()
            .map(|lead| groups_for_lead(lead, lib, dict, params.k_max))
            .collect()
    } else {
        leads
            .iter()
            .map(|lead| groups_for_lead(lead, lib, dict, params.k_max))
            .collect()
    };
    let mut groups: Vec<SkillGroup> = per_lead.into_iter().flatten().collect();
    groups.sort_by(|a, b| (&a.lead, &a.members).cmp(&(&b.lead, &b.members)));
    let graph = build_group_graph(&groups, lib, params.affinity_threshold);
    let index = InvertedIndex::build(&groups);
    GroupPool { groups, graph, index }
}
