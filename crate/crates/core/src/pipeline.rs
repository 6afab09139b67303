//! Online retrieval: seed ranking, candidate activation, anchor selection, greedy
//! support expansion, lead-first bottlenecking, coverage debt, backfill, anchor
//! pruning and contract rendering.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::contract::{format_contract, truncate_payload, ContractInput, ExecutionContract};
use crate::engine::Engine;
use crate::library::{FacetSet, Skill};
use crate::pool::SkillGroup;
use crate::schema::{extract_schema, high_confidence_facets, QuerySchema};
use crate::scoring::{
    anchor_bonus, anchor_value, clip01, difficulty, floor_survivors, score_floor, shortlist_size, u_bot,
    u_grp, u_sup, FeatureVector,
};

/// Lexical seed ranking: each skill scores the sum of `ln(1 + N / df)` over query
/// tokens among its facets, summed in token order. Scores are divided by the best
/// score; only positive scores are returned, ordered by score then id.
pub fn seed_ranking(engine: &Engine, schema: &QuerySchema) -> Vec<(String, f64)> {
    let n = engine.lib.len() as f64;
    let mut raw: HashMap<usize, f64> = HashMap::new();
    for t in schema.facets().tokens() {
        let df = engine.skill_df(t);
        if df == 0 {
            continue;
        }
        let idf = (1.0 + n / df as f64).ln();
        for &i in engine.skills_with_facet(t) {
            *raw.entry(i).or_insert(0.0) += idf;
        }
    }
    normalize_ranking(
        raw.into_iter()
            .map(|(i, s)| (engine.lib.skills()[i].id.clone(), s))
            .collect(),
    )
}

/// Divides by the maximum, drops non-positive scores, sorts by score then id.
pub fn normalize_ranking(mut scores: Vec<(String, f64)>) -> Vec<(String, f64)> {
    scores.retain(|(_, s)| *s > 0.0);
    let max = scores.iter().map(|(_, s)| *s).fold(0.0, f64::max);
    for (_, s) in &mut scores {
        *s /= max;
    }
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scores
}

/// Top `k` of the seed ranking.
pub fn seed_retrieve(engine: &Engine, schema: &QuerySchema, k: usize) -> Vec<(String, f64)> {
    let mut r = seed_ranking(engine, schema);
    r.truncate(k);
    r
}

/// Per-query state shared by every feature computation.
pub struct QueryContext<'e> {
    pub engine: &'e Engine,
    pub cfg: &'e Config,
    pub query: String,
    pub schema: QuerySchema,
    pub tokens: FacetSet,
    pub cues: BTreeSet<String>,
    pub high: FacetSet,
    pub ranking: Vec<(String, f64)>,
    seed_score: HashMap<String, f64>,
    seed_rank: HashMap<String, usize>,
}

impl<'e> QueryContext<'e> {
    pub fn new(engine: &'e Engine, cfg: &'e Config, query: &str) -> Self {
        let schema = extract_schema(query, &engine.dict, engine.vocabulary());
        let tokens = schema.facets();
        let cues = schema.requirement_cues().map(str::to_string).collect();
        let high = high_confidence_facets(&schema, cfg.mode);
        let ranking = seed_ranking(engine, &schema);
        let seed_score = ranking.iter().cloned().collect();
        let seed_rank = ranking.iter().enumerate().map(|(i, (s, _))| (s.clone(), i)).collect();
        QueryContext {
            engine,
            cfg,
            query: query.to_string(),
            schema,
            tokens,
            cues,
            high,
            ranking,
            seed_score,
            seed_rank,
        }
    }

    pub fn seeds(&self) -> &[(String, f64)] {
        &self.ranking[..self.ranking.len().min(self.cfg.budgets.seed_k)]
    }

    pub fn seed_score(&self, skill: &str) -> f64 {
        self.seed_score.get(skill).copied().unwrap_or(0.0)
    }

    /// Position in the full seed ranking; unranked skills sort last.
    pub fn seed_rank(&self, skill: &str) -> usize {
        self.seed_rank.get(skill).copied().unwrap_or(usize::MAX)
    }

    fn skill(&self, id: &str) -> &'e Skill {
        self.engine.lib.get(id).expect("pool skills exist in the library")
    }

    pub fn is_generic(&self, skill: &str) -> bool {
        self.engine.lib.is_generic(skill, &self.engine.dict)
    }

    /// Truncated payload size relative to the payload cap.
    pub fn skill_cost(&self, skill: &str) -> f64 {
        let cap = self.cfg.budgets.payload_cap;
        let chars = truncate_payload(&self.skill(skill).payload, cap).chars().count();
        clip01(chars as f64 / cap as f64)
    }

    /// 1 when the skill's name or facets hit an exact query anchor (the name may
    /// match any exact query token), 0.5 for alias-only hits, 0 otherwise and for
    /// generic skills.
    pub fn anchor_match(&self, skill: &str) -> f64 {
        if self.is_generic(skill) {
            return 0.0;
        }
        let s = self.skill(skill);
        let name = self.engine.dict.normalize(s.label());
        let alias = |t: &str| self.schema.alias_only.contains(t);
        let mut exact_hit = name.as_deref().is_some_and(|n| self.schema.is_exact(n));
        let mut alias_hit = name.as_deref().is_some_and(&alias);
        for a in self.schema.anchors() {
            if s.facets.contains(a) {
                if alias(a) {
                    alias_hit = true;
                } else {
                    exact_hit = true;
                }
            }
        }
        if exact_hit {
            1.0
        } else if alias_hit {
            0.5
        } else {
            0.0
        }
    }

    /// Raw anchor correction of a group, in [-1, 1].
    pub fn anchor_value(&self, g: &SkillGroup) -> f64 {
        let lead = self.skill(&g.lead);
        let bad = self.is_generic(&g.lead) || lead.negative_facets.tokens().any(|t| self.tokens.contains(t));
        anchor_value(self.schema.has_anchors(), bad, self.anchor_match(&g.lead))
    }

    fn fraction<'a>(&self, of: impl Iterator<Item = &'a str>, total: usize, hit: impl Fn(&str) -> bool) -> f64 {
        if total == 0 {
            return 0.0;
        }
        of.filter(|t| hit(t)).count() as f64 / total as f64
    }

    fn negative_hits(&self, negatives: &FacetSet) -> f64 {
        if negatives.tokens().any(|t| self.tokens.contains(t)) {
            1.0
        } else {
            0.0
        }
    }

    /// Group-stage features.
    pub fn group_features(&self, g: &SkillGroup) -> FeatureVector {
        let lib = &self.engine.lib;
        let relevance = g.skills().map(|s| self.seed_score(s)).fold(0.0, f64::max);
        let facet_coverage = self.fraction(self.tokens.tokens(), self.tokens.len(), |t| g.has_positive_facet(t));
        let check_support = self.fraction(self.cues.iter().map(String::as_str), self.cues.len(), |t| {
            g.has_positive_facet(t)
        });
        let links: f64 = g
            .members
            .iter()
            .filter_map(|m| lib.graph().strongest_between(&g.lead, m))
            .map(|e| e.weight)
            .sum();
        let span = self.cfg.budgets.max_group_size.saturating_sub(1).max(1) as f64;
        let cost = g.skills().map(|s| self.skill_cost(s)).sum::<f64>() / g.size() as f64;
        FeatureVector {
            relevance,
            facet_coverage,
            anchor_match: self.anchor_match(&g.lead),
            check_support,
            connectivity: clip01(links / span),
            redundancy: 0.0,
            negative: self.negative_hits(&g.negative_facets),
            cost,
        }
        .clipped()
    }

    /// Support-stage features of group `g` given the plan (group indices).
    pub fn support_features(&self, g: usize, plan: &[usize]) -> FeatureVector {
        let e = self.engine;
        let grp = e.group(g);
        let plan_skills: BTreeSet<&str> = plan.iter().flat_map(|&p| e.group(p).skills()).collect();
        let mut plan_facets = FacetSet::new();
        for &p in plan {
            plan_facets.extend(&e.group(p).positive_facets());
        }
        let fresh: Vec<&str> = grp.skills().filter(|s| !plan_skills.contains(s)).collect();
        let relevance = fresh.iter().map(|s| self.seed_score(s)).fold(0.0, f64::max);
        let new_fact = |t: &str| grp.has_positive_facet(t) && !plan_facets.contains(t);
        let facet_coverage = self.fraction(self.tokens.tokens(), self.tokens.len(), new_fact);
        let check_support = self.fraction(self.cues.iter().map(String::as_str), self.cues.len(), new_fact);
        let connectivity = if self.cfg.ablations.no_group_graph {
            0.0
        } else {
            plan.iter().map(|&p| e.positive_weight(g, p)).fold(0.0, f64::max)
        };
        let skill_overlap = (grp.size() - fresh.len()) as f64 / grp.size() as f64;
        let facets = grp.positive_facets();
        let facet_overlap = if facets.is_empty() {
            0.0
        } else {
            facets.tokens().filter(|t| plan_facets.contains(t)).count() as f64 / facets.len() as f64
        };
        let cost = if fresh.is_empty() {
            0.0
        } else {
            fresh.iter().map(|s| self.skill_cost(s)).sum::<f64>() / fresh.len() as f64
        };
        FeatureVector {
            relevance,
            facet_coverage,
            anchor_match: self.anchor_match(&grp.lead),
            check_support,
            connectivity,
            redundancy: skill_overlap.max(facet_overlap),
            negative: self.negative_hits(&grp.negative_facets),
            cost,
        }
        .clipped()
    }

    /// Bottleneck-stage features of skill `s` given the presented set.
    pub fn skill_features(&self, s: &str, presented: &[String]) -> FeatureVector {
        let lib = &self.engine.lib;
        let skill = self.skill(s);
        let mut covered = FacetSet::new();
        for b in presented {
            covered.extend(&self.skill(b).facets);
        }
        let new_fact = |t: &str| skill.facets.contains(t) && !covered.contains(t);
        let facet_coverage = self.fraction(self.tokens.tokens(), self.tokens.len(), new_fact);
        let check_support = self.fraction(self.cues.iter().map(String::as_str), self.cues.len(), new_fact);
        let connectivity = presented
            .iter()
            .filter_map(|b| lib.graph().strongest_between(s, b))
            .map(|e| e.weight)
            .fold(0.0, f64::max);
        let redundancy = if skill.facets.is_empty() {
            0.0
        } else {
            skill.facets.tokens().filter(|t| covered.contains(t)).count() as f64 / skill.facets.len() as f64
        };
        FeatureVector {
            relevance: self.seed_score(s),
            facet_coverage,
            anchor_match: self.anchor_match(s),
            check_support,
            connectivity,
            redundancy,
            negative: self.negative_hits(&skill.negative_facets),
            cost: self.skill_cost(s),
        }
        .clipped()
    }

    /// Group negatives name a high-confidence query facet.
    pub fn conflicts_high(&self, g: &SkillGroup) -> bool {
        g.negative_facets.intersects(&self.high)
    }

    /// Skill negatives name any query facet.
    pub fn skill_conflicts(&self, s: &str) -> bool {
        self.skill(s).negative_facets.tokens().any(|t| self.tokens.contains(t))
    }

    /// High-confidence facets not covered by the presented skills.
    pub fn debt(&self, presented: &[String]) -> FacetSet {
        let mut debt = self.high.clone();
        for b in presented {
            for t in self.skill(b).facets.tokens() {
                debt.remove(t);
            }
        }
        debt
    }
}

/// Marginal facet, check, or connectivity evidence after redundancy.
pub fn has_bottleneck_evidence(h: &FeatureVector) -> bool {
    h.facet_coverage > 0.0 || h.check_support > 0.0 || (h.connectivity > 0.0 && h.redundancy < 1.0)
}

/// A scored candidate group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGroup {
    #[serde(skip)]
    pub index: usize,
    pub group: String,
    pub u_grp: f64,
    pub anchor: f64,
    pub corrected: f64,
    #[serde(skip)]
    pub lead_rank: usize,
    #[serde(skip)]
    pub size: usize,
    #[serde(skip)]
    pub generic: bool,
}

/// Shortlist order: utility descending, lead seed rank, smaller size, id.
pub fn shortlist_order(a: &ScoredGroup, b: &ScoredGroup) -> Ordering {
    b.u_grp
        .total_cmp(&a.u_grp)
        .then(a.lead_rank.cmp(&b.lead_rank))
        .then(a.size.cmp(&b.size))
        .then_with(|| a.group.cmp(&b.group))
}

pub fn score_group(ctx: &QueryContext, index: usize) -> ScoredGroup {
    let g = ctx.engine.group(index);
    let u = u_grp(&ctx.group_features(g), g.prior, &ctx.cfg.weights);
    let a = ctx.anchor_value(g);
    ScoredGroup {
        index,
        group: g.id.clone(),
        u_grp: u,
        anchor: a,
        corrected: u + anchor_bonus(a, &ctx.cfg.weights),
        lead_rank: ctx.seed_rank(&g.lead),
        size: g.size(),
        generic: ctx.is_generic(&g.lead),
    }
}

/// Position of the anchor in a non-empty shortlist. The corrected argmax wins
/// (earlier entries win ties); a generic winner yields to the best anchored,
/// non-generic entry whose corrected score reaches `group_min`.
pub fn select_anchor(shortlist: &[ScoredGroup], group_min: f64, use_anchor: bool) -> usize {
    if !use_anchor || shortlist.is_empty() {
        return 0;
    }
    let argmax = |keep: &dyn Fn(&ScoredGroup) -> bool| -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, s) in shortlist.iter().enumerate() {
            if keep(s) && best.is_none_or(|b| s.corrected > shortlist[b].corrected) {
                best = Some(i);
            }
        }
        best
    };
    let winner = argmax(&|_| true).unwrap_or(0);
    if shortlist[winner].generic {
        if let Some(p) = argmax(&|s| s.anchor > 0.0 && !s.generic && s.corrected >= group_min) {
            return p;
        }
    }
    winner
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPlan {
    pub anchor: String,
    pub supports: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Lead,
    Bottleneck,
    Backfill,
    Seed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentedSkill {
    pub id: String,
    pub source: Source,
    pub payload_chars: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum TraceEvent {
    Schema {
        tokens: Vec<String>,
        high_confidence: Vec<String>,
    },
    Seeds {
        seeds: Vec<(String, f64)>,
    },
    Candidates {
        groups: usize,
        activated_skills: usize,
    },
    Shortlist {
        difficulty: f64,
        size_cap: usize,
        floor: f64,
        kept: Vec<ScoredGroup>,
    },
    Anchor {
        group: String,
        corrected: f64,
    },
    Support {
        group: String,
        u_sup: f64,
    },
    Present {
        skill: String,
        source: Source,
        score: Option<f64>,
    },
    Debt {
        uncovered: Vec<String>,
    },
    Prune {
        promoted: Option<String>,
        dropped: Vec<String>,
    },
    Stop {
        stage: String,
        reason: String,
    },
}

fn stop(stage: &str, reason: impl Into<String>) -> TraceEvent {
    TraceEvent::Stop {
        stage: stage.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: String,
    pub plan: Option<GroupPlan>,
    pub skills: Vec<PresentedSkill>,
    pub debt: Vec<String>,
    pub contract: ExecutionContract,
    pub contract_text: String,
    pub trace: Vec<TraceEvent>,
}

impl RetrievalResult {
    pub fn skill_ids(&self) -> Vec<&str> {
        self.skills.iter().map(|s| s.id.as_str()).collect()
    }

    pub fn backfill_count(&self) -> usize {
        self.skills.iter().filter(|s| s.source == Source::Backfill).count()
    }

    pub fn group_count(&self) -> usize {
        self.plan.as_ref().map(|p| 1 + p.supports.len()).unwrap_or(0)
    }
}

/// Mutable selection state for one query.
struct Selection<'c, 'e> {
    ctx: &'c QueryContext<'e>,
    plan: Vec<usize>,
    presented: Vec<String>,
    sources: Vec<Source>,
    backfilled: BTreeSet<String>,
    trace: Vec<TraceEvent>,
}

impl<'c, 'e> Selection<'c, 'e> {
    fn new(ctx: &'c QueryContext<'e>) -> Self {
        Selection {
            ctx,
            plan: Vec::new(),
            presented: Vec::new(),
            sources: Vec::new(),
            backfilled: BTreeSet::new(),
            trace: Vec::new(),
        }
    }

    fn contract(&self, plan: &[usize], presented: &[String]) -> ExecutionContract {
        let e = self.ctx.engine;
        let groups: Vec<&SkillGroup> = plan.iter().map(|&i| e.group(i)).collect();
        let debt = self.ctx.debt(presented);
        format_contract(&ContractInput {
            lib: &e.lib,
            schema: &self.ctx.schema,
            high: &self.ctx.high,
            plan: &groups,
            presented,
            backfilled: &self.backfilled,
            debt: &debt,
            payload_cap: self.ctx.cfg.budgets.payload_cap,
        })
    }

    fn fits_with(&self, plan: &[usize], presented: &[String]) -> bool {
        self.contract(plan, presented).rendered_chars() <= self.ctx.cfg.budgets.context_cap
    }

    /// Whether presenting `extra` on top of the current set stays within budget.
    fn fits(&self, extra: &str) -> bool {
        let mut b = self.presented.clone();
        b.push(extra.to_string());
        self.fits_with(&self.plan, &b)
    }

    fn present(&mut self, skill: &str, source: Source, score: Option<f64>) {
        self.presented.push(skill.to_string());
        self.sources.push(source);
        if source == Source::Backfill {
            self.backfilled.insert(skill.to_string());
        }
        self.trace.push(TraceEvent::Present {
            skill: skill.to_string(),
            source,
            score,
        });
    }

    fn finish(mut self) -> RetrievalResult {
        let cap = self.ctx.cfg.budgets.context_cap;
        while !self.presented.is_empty() && !self.fits_with(&self.plan, &self.presented) {
            let dropped = self.presented.pop().unwrap();
            self.sources.pop();
            self.backfilled.remove(&dropped);
            self.trace.push(stop("guard", format!("dropped {dropped} to stay within {cap} chars")));
        }
        let debt = self.ctx.debt(&self.presented);
        self.trace.push(TraceEvent::Debt {
            uncovered: debt.tokens().map(str::to_string).collect(),
        });
        let contract = self.contract(&self.plan, &self.presented);
        let contract_text = contract.render();
        let e = self.ctx.engine;
        let plan = self.plan.split_first().map(|(a, rest)| GroupPlan {
            anchor: e.group(*a).id.clone(),
            supports: rest.iter().map(|&i| e.group(i).id.clone()).collect(),
        });
        let skills = self
            .presented
            .iter()
            .zip(&self.sources)
            .zip(&contract.skills)
            .map(|((id, &source), p)| PresentedSkill {
                id: id.clone(),
                source,
                payload_chars: p.payload.chars().count(),
                truncated: p.truncated,
            })
            .collect();
        RetrievalResult {
            query: self.ctx.query.clone(),
            plan,
            skills,
            debt: debt.tokens().map(str::to_string).collect(),
            contract,
            contract_text,
            trace: self.trace,
        }
    }
}

/// Candidate groups: facet-index hits for schema tokens plus groups holding a
/// seed, minus groups whose negatives name a high-confidence facet. Sorted by
/// pool position.
pub fn candidate_groups(ctx: &QueryContext) -> Vec<usize> {
    let e = ctx.engine;
    let mut out = BTreeSet::new();
    for t in ctx.tokens.tokens() {
        out.extend(e.groups_with_facet(t));
    }
    for (s, _) in ctx.seeds() {
        out.extend(e.groups_with_skill(s));
    }
    out.into_iter().filter(|&g| !ctx.conflicts_high(e.group(g))).collect()
}

/// Ranked, floored and capped shortlist, with the difficulty, cap and floor used.
pub fn top_groups(ctx: &QueryContext, candidates: &[usize]) -> (Vec<ScoredGroup>, f64, usize, f64) {
    let mut scored: Vec<ScoredGroup> = candidates.iter().map(|&g| score_group(ctx, g)).collect();
    scored.sort_by(shortlist_order);
    let scores: Vec<f64> = scored.iter().map(|s| s.u_grp).collect();
    let sel = &ctx.cfg.selection;
    let d = difficulty(ctx.tokens.len(), &scores, sel);
    let cap = shortlist_size(d, ctx.cfg.budgets.top_n, sel);
    let floor = score_floor(d, sel);
    let keep = floor_survivors(&scores, floor, sel).min(cap);
    scored.truncate(keep);
    (scored, d, cap, floor)
}

pub fn retrieve(engine: &Engine, query: &str, cfg: &Config) -> RetrievalResult {
    let ctx = QueryContext::new(engine, cfg, query);
    let mut sel = Selection::new(&ctx);
    sel.trace.push(TraceEvent::Schema {
        tokens: ctx.tokens.tokens().map(str::to_string).collect(),
        high_confidence: ctx.high.tokens().map(str::to_string).collect(),
    });
    sel.trace.push(TraceEvent::Seeds {
        seeds: ctx.seeds().to_vec(),
    });
    let budgets = &cfg.budgets;

    if cfg.ablations.retrieved_skills_only {
        for (s, score) in ctx.seeds().iter().take(budgets.top_n) {
            if ctx.skill_conflicts(s) || !sel.fits(s) {
                continue;
            }
            sel.present(s, Source::Seed, Some(*score));
        }
        sel.trace.push(stop("groups", "bypassed"));
        return sel.finish();
    }

    let candidates = candidate_groups(&ctx);
    let mut activated: BTreeSet<String> = ctx.seeds().iter().map(|(s, _)| s.clone()).collect();
    for &g in &candidates {
        activated.extend(engine.group(g).skills().map(str::to_string));
    }
    sel.trace.push(TraceEvent::Candidates {
        groups: candidates.len(),
        activated_skills: activated.len(),
    });

    let (shortlist, d, cap, floor) = top_groups(&ctx, &candidates);
    sel.trace.push(TraceEvent::Shortlist {
        difficulty: d,
        size_cap: cap,
        floor,
        kept: shortlist.clone(),
    });
    if shortlist.is_empty() {
        sel.trace.push(stop("anchor", "empty shortlist"));
        return sel.finish();
    }

    let a = select_anchor(&shortlist, cfg.thresholds.group_min, !cfg.ablations.no_anchor_selection);
    sel.plan.push(shortlist[a].index);
    sel.trace.push(TraceEvent::Anchor {
        group: shortlist[a].group.clone(),
        corrected: shortlist[a].corrected,
    });
    let mut plan_scores = vec![f64::INFINITY];

    let max_groups = if cfg.ablations.no_group_expansion { 1 } else { budgets.max_groups };
    let shortlisted: BTreeSet<usize> = shortlist.iter().map(|s| s.index).collect();
    loop {
        if sel.plan.len() >= max_groups {
            sel.trace.push(stop("support", "group cap"));
            break;
        }
        let mut pool = shortlisted.clone();
        if !cfg.ablations.no_group_graph {
            for &p in &sel.plan {
                for &(n, _) in engine.positive_neighbors(p) {
                    if !ctx.conflicts_high(engine.group(n)) {
                        pool.insert(n);
                    }
                }
            }
        }
        let best = pool
            .into_iter()
            .filter(|g| !sel.plan.contains(g))
            .filter(|&g| sel.plan.iter().all(|&p| !engine.incompatible(g, p)))
            .map(|g| (g, u_sup(&ctx.support_features(g, &sel.plan), &cfg.weights)))
            .min_by(|x, y| {
                y.1.total_cmp(&x.1)
                    .then_with(|| engine.group(x.0).id.cmp(&engine.group(y.0).id))
            });
        let Some((g, u)) = best else {
            sel.trace.push(stop("support", "no eligible group"));
            break;
        };
        if u < cfg.thresholds.support_min {
            sel.trace.push(stop(
                "support",
                format!("best {} scored {u:.4} below {}", engine.group(g).id, cfg.thresholds.support_min),
            ));
            break;
        }
        let mut next = sel.plan.clone();
        next.push(g);
        let mut leads: Vec<String> = Vec::new();
        for &p in &next {
            let l = &engine.group(p).lead;
            if !leads.contains(l) && leads.len() < budgets.top_n {
                leads.push(l.clone());
            }
        }
        if !sel.fits_with(&next, &leads) {
            sel.trace.push(stop("support", format!("context guard rejects {}", engine.group(g).id)));
            break;
        }
        sel.plan.push(g);
        plan_scores.push(u);
        activated.extend(engine.group(g).skills().map(str::to_string));
        sel.trace.push(TraceEvent::Support {
            group: engine.group(g).id.clone(),
            u_sup: u,
        });
    }

    // leads: anchor first, then supports by descending support score
    let mut order: Vec<usize> = (0..sel.plan.len()).collect();
    order.sort_by(|&x, &y| plan_scores[y].total_cmp(&plan_scores[x]).then(x.cmp(&y)));
    for i in order {
        let lead = engine.group(sel.plan[i]).lead.clone();
        if sel.presented.contains(&lead) {
            continue;
        }
        if sel.presented.len() >= budgets.top_n {
            sel.trace.push(stop("leads", "presented-skill budget"));
            break;
        }
        if !sel.fits(&lead) {
            sel.trace.push(stop("leads", format!("context guard rejects {lead}")));
            continue;
        }
        sel.present(&lead, Source::Lead, None);
    }

    let plan_skills: BTreeSet<String> = sel
        .plan
        .iter()
        .flat_map(|&p| engine.group(p).skills().map(str::to_string))
        .collect();
    loop {
        if sel.presented.len() >= budgets.top_n {
            sel.trace.push(stop("bottleneck", "presented-skill budget"));
            break;
        }
        let best = plan_skills
            .iter()
            .filter(|s| activated.contains(*s) && !sel.presented.contains(s))
            .filter_map(|s| {
                let h = ctx.skill_features(s, &sel.presented);
                (has_bottleneck_evidence(&h) && sel.fits(s)).then(|| (s, u_bot(&h, &cfg.weights)))
            })
            .min_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(y.0)));
        let Some((s, u)) = best else {
            sel.trace.push(stop("bottleneck", "no member with marginal evidence"));
            break;
        };
        if u < cfg.thresholds.skill_min {
            sel.trace.push(stop("bottleneck", format!("best {s} scored {u:.4} below {}", cfg.thresholds.skill_min)));
            break;
        }
        let s = s.clone();
        sel.present(&s, Source::Bottleneck, Some(u));
    }

    let mut debt = ctx.debt(&sel.presented);
    if cfg.ablations.no_backfill {
        sel.trace.push(stop("backfill", "disabled"));
    } else {
        let mut added = 0;
        while !debt.is_empty() && sel.presented.len() < budgets.top_n && added < budgets.backfill_cap {
            let best = activated
                .iter()
                .filter(|s| !sel.presented.contains(s))
                .filter_map(|s| {
                    let covers = engine.lib.get(s)?.facets.tokens().filter(|t| debt.contains(t)).count();
                    (covers > 0 && !ctx.skill_conflicts(s) && sel.fits(s)).then(|| {
                        let u = u_bot(&ctx.skill_features(s, &sel.presented), &cfg.weights);
                        (s, covers, u)
                    })
                })
                .min_by(|x, y| {
                    y.1.cmp(&x.1)
                        .then(y.2.total_cmp(&x.2))
                        .then_with(|| x.0.cmp(y.0))
                });
            let Some((s, _, u)) = best else {
                sel.trace.push(stop("backfill", "no eligible skill covers the debt"));
                break;
            };
            let s = s.clone();
            sel.present(&s, Source::Backfill, Some(u));
            added += 1;
            debt = ctx.debt(&sel.presented);
        }
    }

    anchor_prune(&ctx, &mut sel);
    sel.finish()
}

/// Promotes an anchored support over a generic anchor, then drops supports that
/// contribute neither a presented skill nor an AVOID cue.
fn anchor_prune(ctx: &QueryContext, sel: &mut Selection) {
    let e = ctx.engine;
    let cfg = ctx.cfg;
    let mut promoted = None;
    if !cfg.ablations.no_anchor_selection && sel.plan.len() > 1 && ctx.is_generic(&e.group(sel.plan[0]).lead) {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &g) in sel.plan.iter().enumerate().skip(1) {
            let grp = e.group(g);
            if !sel.presented.contains(&grp.lead) || ctx.is_generic(&grp.lead) {
                continue;
            }
            let s = score_group(ctx, g);
            if s.anchor > 0.0 && s.corrected >= cfg.thresholds.group_min && best.is_none_or(|(_, c)| s.corrected > c) {
                best = Some((pos, s.corrected));
            }
        }
        if let Some((pos, _)) = best {
            let g = sel.plan.remove(pos);
            sel.plan.insert(0, g);
            promoted = Some(e.group(g).id.clone());
        }
    }
    let mut dropped = Vec::new();
    let anchor = sel.plan[0];
    let presented = sel.presented.clone();
    sel.plan.retain(|&g| {
        let grp = e.group(g);
        let keep = g == anchor || grp.skills().any(|s| presented.iter().any(|p| p == s)) || !grp.negative_cues.is_empty();
        if !keep {
            dropped.push(grp.id.clone());
        }
        keep
    });
    if promoted.is_some() || !dropped.is_empty() {
        sel.trace.push(TraceEvent::Prune { promoted, dropped });
    }
}
