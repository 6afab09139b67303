#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skillgroup::contract::{format_contract, ContractInput};
use skillgroup::library::RawEdge;
use skillgroup::pipeline::{has_bottleneck_evidence, score_group, QueryContext, ScoredGroup};
use skillgroup::pool::SkillGroup;
use skillgroup::scoring::{difficulty, floor_survivors, score_floor, shortlist_size, u_bot, u_sup};
use skillgroup::{Config, Dictionary, Engine, FacetSet, Library, PoolParams, Skill, SkillEdge};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_engine(name: &str) -> Engine {
    let lib = skillgroup::load_library(fixture(name)).unwrap();
    Engine::build(lib, Dictionary::default(), PoolParams::default())
}

pub const INVOICE_QUERY: &str = "detect fraudulent invoices across pdf and xlsx with fuzzy matching";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ARTIFACTS: &[&str] = &["pdf", "xlsx", "csv", "md", "docx", "png", "html", "json", "parquet", "binary", "wav"];
const TECH: &[&str] = &["python", "pandas", "rust", "lean4", "threejs", "pytorch", "tensorflow", "sql", "regex", "ffmpeg"];
const CONSTRAINTS: &[&str] = &["deterministic", "offline", "utf-8", "sorted", "yaml", "idempotent"];
const CHECKS: &[&str] = &["output format", "unit tests", "checksum", "row count", "exit code"];
const OPS: &[&str] = &["detect", "extract", "parse", "convert", "merge", "plot", "train", "render", "match", "clean"];
const CORE: &[&str] = &["invoice", "ledger", "shader", "proof", "audio", "scene", "fraud", "model", "report", "schema"];
const NOISE: &[&str] = &["please", "quickly", "the", "and", "files", "for", "with", "our", "data"];

fn pick<'a>(rng: &mut impl Rng, from: &[&'a str], max: usize) -> Vec<&'a str> {
    let n = rng.gen_range(0..=max);
    from.choose_multiple(rng, n).copied().collect()
}

fn payload(rng: &mut impl Rng) -> String {
    let lines = match rng.gen_range(0..10) {
        0 => rng.gen_range(60..140),
        1 => 1,
        _ => rng.gen_range(2..12),
    };
    (0..lines)
        .map(|i| {
            let w = rng.gen_range(3..14);
            let line: Vec<String> = (0..w).map(|j| format!("w{}", (i * 31 + j * 7) % 97)).collect();
            line.join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Random skills and typed edges over a shared facet vocabulary.
pub fn synthetic_parts(rng: &mut impl Rng, n: usize) -> (Vec<Skill>, Vec<SkillEdge>) {
    let mut skills = Vec::with_capacity(n);
    for i in 0..n {
        let mut tags: Vec<String> = Vec::new();
        tags.extend(pick(rng, TECH, 2).into_iter().map(str::to_string));
        tags.extend(pick(rng, CORE, 2).into_iter().map(str::to_string));
        tags.extend(pick(rng, CONSTRAINTS, 1).into_iter().map(str::to_string));
        if rng.gen_bool(0.08) {
            tags.push("generic".to_string());
        }
        let op = OPS.choose(rng).unwrap();
        let negatives = if rng.gen_bool(0.2) {
            vec![format!("not for {} files", ARTIFACTS.choose(rng).unwrap())]
        } else {
            Vec::new()
        };
        skills.push(Skill {
            id: format!("s{i:03}"),
            name: format!("{op}-{i}"),
            tags,
            description: format!("# {} {}\nbody", op, CORE.choose(rng).unwrap()),
            payload: payload(rng),
            artifacts: pick(rng, ARTIFACTS, 2).into_iter().map(|a| format!(".{a}")).collect(),
            checks: pick(rng, CHECKS, 1).into_iter().map(str::to_string).collect(),
            negatives,
            facets: FacetSet::new(),
            negative_facets: FacetSet::new(),
        });
    }
    let kinds = ["dependency", "workflow", "artifact", "visible-check", "fallback", "alternative", "semantic"];
    let mut edges = Vec::new();
    if n > 1 {
        let m = rng.gen_range(0..=n * 2);
        for _ in 0..m {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            let w = (rng.gen_range(1..=20) as f64) / 20.0;
            let raw: RawEdge = (format!("s{a:03}"), format!("s{b:03}"), kinds.choose(rng).unwrap().to_string(), w);
            edges.push(SkillEdge::try_from(raw).unwrap());
        }
    }
    (skills, edges)
}

pub fn synthetic_library(rng: &mut impl Rng, n: usize) -> Library {
    let (skills, edges) = synthetic_parts(rng, n);
    Library::new(skills, edges, &Dictionary::default()).unwrap()
}

pub fn synthetic_engine(seed: u64, n: usize) -> Engine {
    let mut r = rng(seed);
    Engine::build(synthetic_library(&mut r, n), Dictionary::default(), PoolParams::default())
}

/// A query mixing vocabulary terms, aliases and noise.
pub fn random_query(rng: &mut impl Rng) -> String {
    let mut words: Vec<&str> = Vec::new();
    words.extend(pick(rng, OPS, 2));
    words.extend(pick(rng, CORE, 2));
    words.extend(pick(rng, ARTIFACTS, 2));
    words.extend(pick(rng, TECH, 2));
    words.extend(pick(rng, CONSTRAINTS, 1));
    words.extend(pick(rng, CHECKS, 1));
    words.extend(pick(rng, &["excel", "spreadsheet", "torch", "fuzzy matching"], 1));
    words.extend(pick(rng, NOISE, 3));
    words.shuffle(rng);
    words.join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    pub plan: Option<(String, Vec<String>)>,
    pub presented: Vec<String>,
    pub debt: Vec<String>,
}

/// Seed ranking by a full scan of every skill's facets.
pub fn oracle_seed_ranking(lib: &Library, tokens: &FacetSet) -> Vec<(String, f64)> {
    let n = lib.len() as f64;
    let mut scores: Vec<(String, f64)> = Vec::new();
    for s in lib.skills() {
        let mut total = 0.0;
        for t in tokens.tokens() {
            if !s.facets.contains(t) {
                continue;
            }
            let df = lib.skills().iter().filter(|o| o.facets.contains(t)).count() as f64;
            total += (1.0 + n / df).ln();
        }
        if total > 0.0 {
            scores.push((s.id.clone(), total));
        }
    }
    let max = scores.iter().map(|x| x.1).fold(0.0, f64::max);
    let mut out: Vec<(String, f64)> = scores.into_iter().map(|(s, v)| (s, v / max)).collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

struct State<'a> {
    ctx: &'a QueryContext<'a>,
    groups: &'a [SkillGroup],
    plan: Vec<usize>,
    presented: Vec<String>,
    backfilled: BTreeSet<String>,
}

impl State<'_> {
    fn debt_of(&self, presented: &[String]) -> FacetSet {
        let lib = &self.ctx.engine.lib;
        self.ctx
            .high
            .iter()
            .filter(|(t, _)| !presented.iter().any(|p| lib.get(p).unwrap().facets.contains(t)))
            .map(|(t, c)| (t.to_string(), c))
            .collect()
    }

    fn chars(&self, plan: &[usize], presented: &[String]) -> usize {
        let groups: Vec<&SkillGroup> = plan.iter().map(|&i| &self.groups[i]).collect();
        let debt = self.debt_of(presented);
        format_contract(&ContractInput {
            lib: &self.ctx.engine.lib,
            schema: &self.ctx.schema,
            high: &self.ctx.high,
            plan: &groups,
            presented,
            backfilled: &self.backfilled,
            debt: &debt,
            payload_cap: self.ctx.cfg.budgets.payload_cap,
        })
        .render()
        .chars()
        .count()
    }

    fn fits_plus(&self, s: &str) -> bool {
        let mut b = self.presented.clone();
        b.push(s.to_string());
        self.chars(&self.plan, &b) <= self.ctx.cfg.budgets.context_cap
    }
}

fn positive_edge(groups: &[SkillGroup], engine: &Engine, a: usize, b: usize) -> f64 {
    let (x, y) = (&groups[a].id, &groups[b].id);
    engine
        .pool
        .graph
        .edges
        .iter()
        .filter(|e| e.label.is_positive() && e.weight > 0.0)
        .filter(|e| (&e.src == x && &e.dst == y) || (&e.src == y && &e.dst == x))
        .map(|e| e.weight)
        .fold(0.0, f64::max)
}

fn clash(groups: &[SkillGroup], engine: &Engine, a: usize, b: usize) -> bool {
    let (x, y) = (&groups[a].id, &groups[b].id);
    engine
        .pool
        .graph
        .edges
        .iter()
        .any(|e| !e.label.is_positive() && ((&e.src == x && &e.dst == y) || (&e.src == y && &e.dst == x)))
}

/// Exhaustive re-implementation of selection with the default ablations: every
/// step scans all groups or skills and sorts the full candidate list.
pub fn oracle_retrieve(engine: &Engine, query: &str, cfg: &Config) -> OracleOutput {
    let ctx = QueryContext::new(engine, cfg, query);
    let groups = engine.groups();
    let lib = &engine.lib;
    let b = &cfg.budgets;

    let ranking = oracle_seed_ranking(lib, &ctx.tokens);
    let seeds: Vec<String> = ranking.iter().take(b.seed_k).map(|x| x.0.clone()).collect();
    let mut st = State { ctx: &ctx, groups, plan: Vec::new(), presented: Vec::new(), backfilled: BTreeSet::new() };

    let conflicts = |g: &SkillGroup| g.negative_facets.tokens().any(|t| ctx.high.contains(t));
    let candidates: Vec<usize> = (0..groups.len())
        .filter(|&i| {
            let g = &groups[i];
            let hit = ctx.tokens.tokens().any(|t| g.positive_facets().contains(t))
                || g.skills().any(|s| seeds.iter().any(|x| x == s));
            hit && !conflicts(g)
        })
        .collect();
    let mut activated: BTreeSet<String> = seeds.iter().cloned().collect();
    for &g in &candidates {
        activated.extend(groups[g].skills().map(str::to_string));
    }

    let mut scored: Vec<ScoredGroup> = candidates.iter().map(|&g| score_group(&ctx, g)).collect();
    scored.sort_by(|a, b| {
        b.u_grp
            .partial_cmp(&a.u_grp)
            .unwrap()
            .then(a.lead_rank.cmp(&b.lead_rank))
            .then(a.size.cmp(&b.size))
            .then(a.group.cmp(&b.group))
    });
    let us: Vec<f64> = scored.iter().map(|s| s.u_grp).collect();
    let d = difficulty(ctx.tokens.len(), &us, &cfg.selection);
    let cap = shortlist_size(d, b.top_n, &cfg.selection);
    let keep = floor_survivors(&us, score_floor(d, &cfg.selection), &cfg.selection).min(cap);
    scored.truncate(keep);

    let finish = |mut st: State| -> OracleOutput {
        while !st.presented.is_empty() && st.chars(&st.plan, &st.presented) > b.context_cap {
            let s = st.presented.pop().unwrap();
            st.backfilled.remove(&s);
        }
        let debt = st.debt_of(&st.presented).tokens().map(str::to_string).collect();
        let plan = st.plan.split_first().map(|(a, rest)| {
            (groups[*a].id.clone(), rest.iter().map(|&i| groups[i].id.clone()).collect())
        });
        OracleOutput { plan, presented: st.presented, debt }
    };
    if scored.is_empty() {
        return finish(st);
    }

    let mut anchor = 0;
    for i in 0..scored.len() {
        if scored[i].corrected > scored[anchor].corrected {
            anchor = i;
        }
    }
    if scored[anchor].generic {
        let mut alt: Option<usize> = None;
        for i in 0..scored.len() {
            let s = &scored[i];
            if s.anchor > 0.0 && !s.generic && s.corrected >= cfg.thresholds.group_min
                && (alt.is_none() || s.corrected > scored[alt.unwrap()].corrected) {
                    alt = Some(i);
                }
        }
        anchor = alt.unwrap_or(anchor);
    }
    st.plan.push(scored[anchor].index);
    let mut plan_u = vec![f64::MAX];

    let shortlisted: Vec<usize> = scored.iter().map(|s| s.index).collect();
    while st.plan.len() < b.max_groups {
        let mut options: Vec<(usize, f64)> = Vec::new();
        for g in 0..groups.len() {
            if st.plan.contains(&g) {
                continue;
            }
            let linked = st.plan.iter().any(|&p| positive_edge(groups, engine, g, p) > 0.0) && !conflicts(&groups[g]);
            if !shortlisted.contains(&g) && !linked {
                continue;
            }
            if st.plan.iter().any(|&p| clash(groups, engine, g, p)) {
                continue;
            }
            options.push((g, u_sup(&ctx.support_features(g, &st.plan), &cfg.weights)));
        }
        options.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(groups[x.0].id.cmp(&groups[y.0].id)));
        let Some(&(g, u)) = options.first() else { break };
        if u < cfg.thresholds.support_min {
            break;
        }
        let mut next = st.plan.clone();
        next.push(g);
        let mut leads: Vec<String> = Vec::new();
        for &p in &next {
            if !leads.contains(&groups[p].lead) && leads.len() < b.top_n {
                leads.push(groups[p].lead.clone());
            }
        }
        if st.chars(&next, &leads) > b.context_cap {
            break;
        }
        st.plan.push(g);
        plan_u.push(u);
        activated.extend(groups[g].skills().map(str::to_string));
    }

    let mut order: Vec<usize> = (0..st.plan.len()).collect();
    order.sort_by(|&x, &y| plan_u[y].partial_cmp(&plan_u[x]).unwrap().then(x.cmp(&y)));
    for i in order {
        let lead = groups[st.plan[i]].lead.clone();
        if st.presented.contains(&lead) {
            continue;
        }
        if st.presented.len() >= b.top_n {
            break;
        }
        if st.fits_plus(&lead) {
            st.presented.push(lead);
        }
    }

    let plan_skills: BTreeSet<String> = st.plan.iter().flat_map(|&p| groups[p].skills().map(str::to_string)).collect();
    while st.presented.len() < b.top_n {
        let mut options: Vec<(String, f64)> = Vec::new();
        for s in &plan_skills {
            if !activated.contains(s) || st.presented.contains(s) {
                continue;
            }
            let h = ctx.skill_features(s, &st.presented);
            if has_bottleneck_evidence(&h) && st.fits_plus(s) {
                options.push((s.clone(), u_bot(&h, &cfg.weights)));
            }
        }
        options.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
        match options.first() {
            Some((s, u)) if *u >= cfg.thresholds.skill_min => st.presented.push(s.clone()),
            _ => break,
        }
    }

    if !cfg.ablations.no_backfill {
        let mut added = 0;
        loop {
            let debt = st.debt_of(&st.presented);
            if debt.is_empty() || st.presented.len() >= b.top_n || added >= b.backfill_cap {
                break;
            }
            let mut options: Vec<(String, usize, f64)> = Vec::new();
            for s in &activated {
                if st.presented.contains(s) {
                    continue;
                }
                let skill = lib.get(s).unwrap();
                let covers = debt.tokens().filter(|t| skill.facets.contains(t)).count();
                let conflicting = skill.negative_facets.tokens().any(|t| ctx.tokens.contains(t));
                if covers > 0 && !conflicting && st.fits_plus(s) {
                    options.push((s.clone(), covers, u_bot(&ctx.skill_features(s, &st.presented), &cfg.weights)));
                }
            }
            options.sort_by(|x, y| y.1.cmp(&x.1).then(y.2.partial_cmp(&x.2).unwrap()).then(x.0.cmp(&y.0)));
            let Some((s, _, _)) = options.first().cloned() else { break };
            st.backfilled.insert(s.clone());
            st.presented.push(s);
            added += 1;
        }
    }

    // generic anchor yields to the best anchored, presented, non-generic support
    if st.plan.len() > 1 && ctx.is_generic(&groups[st.plan[0]].lead) {
        let mut best: Option<(usize, f64)> = None;
        for pos in 1..st.plan.len() {
            let g = &groups[st.plan[pos]];
            if !st.presented.contains(&g.lead) || ctx.is_generic(&g.lead) {
                continue;
            }
            let s = score_group(&ctx, st.plan[pos]);
            if s.anchor > 0.0 && s.corrected >= cfg.thresholds.group_min
                && best.is_none_or(|(_, c)| s.corrected > c) {
                    best = Some((pos, s.corrected));
                }
        }
        if let Some((pos, _)) = best {
            let g = st.plan.remove(pos);
            st.plan.insert(0, g);
        }
    }
    let head = st.plan[0];
    let presented = st.presented.clone();
    st.plan.retain(|&g| {
        g == head || groups[g].skills().any(|s| presented.contains(&s.to_string())) || !groups[g].negative_cues.is_empty()
    });
    finish(st)
}

/// Independent debt: exact high-confidence facets no presented skill carries.
pub fn recompute_debt(engine: &Engine, query: &str, cfg: &Config, presented: &[&str]) -> Vec<String> {
    let schema = skillgroup::extract_schema(query, &engine.dict, engine.vocabulary());
    let high = skillgroup::high_confidence_facets(&schema, cfg.mode);
    let covered: BTreeMap<&str, ()> = presented
        .iter()
        .flat_map(|p| engine.lib.get(p).unwrap().facets.tokens())
        .map(|t| (t, ()))
        .collect();
    high.tokens().filter(|t| !covered.contains_key(t)).map(str::to_string).collect()
}

/// A fixed 24-skill cluster over the shared vocabulary plus `n - 24` filler skills
/// with private facets, chained by typed edges. Queries over the shared vocabulary
/// activate the same neighborhood at every size.
pub fn scaled_library(n: usize, seed: u64) -> Library {
    let cluster = 24.min(n);
    let (mut skills, mut edges) = synthetic_parts(&mut rng(seed), cluster);
    let mut r = rng(seed ^ 0x5eed);
    let kinds = ["dependency", "workflow", "artifact", "visible-check", "fallback"];
    for i in cluster..n {
        skills.push(Skill {
            id: format!("f{i:05}"),
            name: format!("filler-{i}"),
            tags: vec![format!("zone{}", i / 4), format!("part{i}")],
            description: format!("# filler unit {i}"),
            payload: payload(&mut r),
            artifacts: Vec::new(),
            checks: Vec::new(),
            negatives: Vec::new(),
            facets: FacetSet::new(),
            negative_facets: FacetSet::new(),
        });
        if i > cluster {
            let raw: RawEdge = (format!("f{:05}", i - 1), format!("f{i:05}"), kinds[i % kinds.len()].to_string(), 0.5);
            edges.push(SkillEdge::try_from(raw).unwrap());
        }
    }
    Library::new(skills, edges, &Dictionary::default()).unwrap()
}
