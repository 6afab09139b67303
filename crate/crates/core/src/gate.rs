//! Retrieval-gate evaluation: run a retriever over annotated tasks and score each
//! visible requirement as pass, partial or miss against the presented skills.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{Config, Mode};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::library::Library;
use crate::pipeline::{retrieve, seed_ranking};
use crate::schema::extract_schema;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateItem {
    pub requirement: String,
    pub must_have: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<BTreeSet<String>>,
}

impl GateItem {
    /// The required set followed by every alternative set.
    pub fn acceptable(&self) -> impl Iterator<Item = &BTreeSet<String>> {
        std::iter::once(&self.must_have).chain(self.alternatives.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateTask {
    pub id: String,
    pub query: String,
    pub items: Vec<GateItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateAnnotations {
    pub tasks: Vec<GateTask>,
}

impl GateAnnotations {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("gate annotations", e))
    }

    pub fn item_count(&self) -> usize {
        self.tasks.iter().map(|t| t.items.len()).sum()
    }

    /// Every referenced skill must exist; all offending items are reported.
    pub fn validate(&self, lib: &Library) -> Result<()> {
        let mut errors = Vec::new();
        for t in &self.tasks {
            for (i, item) in t.items.iter().enumerate() {
                let unknown: BTreeSet<&str> = item
                    .acceptable()
                    .flatten()
                    .map(String::as_str)
                    .filter(|s| !lib.contains(s))
                    .collect();
                for s in unknown {
                    errors.push(format!("task {} item {i}: unknown skill `{s}`", t.id));
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Annotation(errors))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Partial,
    Miss,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Partial => "partial",
            Outcome::Miss => "miss",
        }
    }
}

/// Pass when some acceptable set is fully presented, partial when some set is
/// partly presented, miss otherwise.
pub fn evaluate_item(item: &GateItem, presented: &BTreeSet<String>) -> Outcome {
    if item.acceptable().any(|set| set.is_subset(presented)) {
        Outcome::Pass
    } else if item.acceptable().any(|set| !set.is_disjoint(presented)) {
        Outcome::Partial
    } else {
        Outcome::Miss
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Retriever {
    Grouped,
    FlatTopk,
    FullLibrary,
    NoSkills,
}

impl Retriever {
    pub const ALL: [Retriever; 4] = [
        Retriever::Grouped,
        Retriever::FlatTopk,
        Retriever::FullLibrary,
        Retriever::NoSkills,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Retriever::Grouped => "grouped",
            Retriever::FlatTopk => "flat-topk",
            Retriever::FullLibrary => "full-library",
            Retriever::NoSkills => "no-skills",
        }
    }
}

impl fmt::Display for Retriever {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Retriever {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        if key == "goskills" {
            return Ok(Retriever::Grouped);
        }
        Retriever::ALL
            .into_iter()
            .find(|r| r.as_str() == key)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// Top `k` of the lexical seed ranking, padded with unranked skills in id order.
pub fn baseline_flat_topk(engine: &Engine, query: &str, k: usize) -> Vec<String> {
    let schema = extract_schema(query, &engine.dict, engine.vocabulary());
    let mut out: Vec<String> = seed_ranking(engine, &schema).into_iter().map(|(s, _)| s).take(k).collect();
    if out.len() < k {
        let mut rest: Vec<&str> = engine
            .lib
            .skills()
            .iter()
            .map(|s| s.id.as_str())
            .filter(|id| !out.iter().any(|o| o == id))
            .collect();
        rest.sort();
        out.extend(rest.into_iter().take(k - out.len()).map(str::to_string));
    }
    out
}

/// Presented skills for one query. Only the final presented set is returned.
pub fn run_retriever(engine: &Engine, retriever: Retriever, query: &str, cfg: &Config) -> Vec<String> {
    match retriever {
        Retriever::Grouped => retrieve(engine, query, cfg).skills.into_iter().map(|s| s.id).collect(),
        Retriever::FlatTopk => baseline_flat_topk(engine, query, cfg.budgets.top_n),
        Retriever::FullLibrary => engine.lib.skills().iter().map(|s| s.id.clone()).collect(),
        Retriever::NoSkills => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRow {
    pub mode: Mode,
    pub task: String,
    pub item: usize,
    pub requirement: String,
    pub outcome: Outcome,
    pub must_hit: bool,
    pub skills: usize,
    pub presented: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: Mode,
    pub items: usize,
    pub pass: usize,
    pub partial: usize,
    pub miss: usize,
    pub must_hit: f64,
    pub mean_skills: f64,
}

impl ModeReport {
    /// Aggregates rows of one mode. `must_hit` is over items; `mean_skills` is over
    /// tasks.
    pub fn from_rows(mode: Mode, rows: &[GateRow]) -> ModeReport {
        let rows: Vec<&GateRow> = rows.iter().filter(|r| r.mode == mode).collect();
        let count = |o: Outcome| rows.iter().filter(|r| r.outcome == o).count();
        let items = rows.len();
        let mut tasks: Vec<(&str, usize)> = rows.iter().map(|r| (r.task.as_str(), r.skills)).collect();
        tasks.dedup();
        let mean = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        ModeReport {
            mode,
            items,
            pass: count(Outcome::Pass),
            partial: count(Outcome::Partial),
            miss: count(Outcome::Miss),
            must_hit: mean(rows.iter().filter(|r| r.must_hit).count(), items),
            mean_skills: mean(tasks.iter().map(|t| t.1).sum(), tasks.len()),
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "mode={} pass={} partial={} miss={} mean_skills={:.3} must_hit={:.3}",
            self.mode, self.pass, self.partial, self.miss, self.mean_skills, self.must_hit
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub retriever: Retriever,
    pub ablations: Vec<String>,
    pub modes: Vec<ModeReport>,
    pub rows: Vec<GateRow>,
}

impl GateReport {
    pub fn mode(&self, mode: Mode) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Runs every task under both gate modes.
pub fn run_gate(annotations: &GateAnnotations, engine: &Engine, retriever: Retriever, cfg: &Config) -> Result<GateReport> {
    annotations.validate(&engine.lib)?;
    let mut rows = Vec::new();
    for mode in Mode::ALL {
        let cfg = Config { mode, ..cfg.clone() };
        for task in &annotations.tasks {
            let presented = run_retriever(engine, retriever, &task.query, &cfg);
            let set: BTreeSet<String> = presented.iter().cloned().collect();
            for (i, item) in task.items.iter().enumerate() {
                rows.push(GateRow {
                    mode,
                    task: task.id.clone(),
                    item: i,
                    requirement: item.requirement.clone(),
                    outcome: evaluate_item(item, &set),
                    must_hit: item.must_have.is_subset(&set),
                    skills: presented.len(),
                    presented: presented.join(" "),
                });
            }
        }
    }
    let modes = Mode::ALL.into_iter().map(|m| ModeReport::from_rows(m, &rows)).collect();
    Ok(GateReport {
        retriever,
        ablations: cfg.active_ablations().into_iter().map(str::to_string).collect(),
        modes,
        rows,
    })
}
