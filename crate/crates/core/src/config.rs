//! Effective configuration: budgets, scoring coefficients, selection constants and
//! ablation switches. Every field has a default; a `weights.json` file may
//! override any subset.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WEIGHTS_JSON: &str = include_str!("../data/weights.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub top_n: usize,
    pub seed_k: usize,
    pub payload_cap: usize,
    pub context_cap: usize,
    pub max_groups: usize,
    pub max_group_size: usize,
    pub backfill_cap: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            top_n: 4,
            seed_k: 4,
            payload_cap: 1800,
            context_cap: 9000,
            max_groups: 3,
            max_group_size: 3,
            backfill_cap: 2,
        }
    }
}

/// Coefficients of one linear utility, in feature order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageWeights {
    pub relevance: f64,
    pub facet_coverage: f64,
    pub anchor_match: f64,
    pub check_support: f64,
    pub connectivity: f64,
    pub redundancy: f64,
    pub negative: f64,
    pub cost: f64,
}

impl StageWeights {
    pub const fn from_array(w: [f64; 8]) -> Self {
        StageWeights {
            relevance: w[0],
            facet_coverage: w[1],
            anchor_match: w[2],
            check_support: w[3],
            connectivity: w[4],
            redundancy: w[5],
            negative: w[6],
            cost: w[7],
        }
    }

    pub fn to_array(self) -> [f64; 8] {
        [
            self.relevance,
            self.facet_coverage,
            self.anchor_match,
            self.check_support,
            self.connectivity,
            self.redundancy,
            self.negative,
            self.cost,
        ]
    }
}

pub const GRP_WEIGHTS: [f64; 8] = [0.28, 0.22, 0.18, 0.12, 0.10, -0.05, -0.25, -0.04];
pub const SUP_WEIGHTS: [f64; 8] = [0.12, 0.28, 0.06, 0.16, 0.16, -0.18, -0.25, -0.04];
pub const BOT_WEIGHTS: [f64; 8] = [0.18, 0.24, 0.12, 0.20, 0.08, -0.12, -0.30, -0.08];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub grp: StageWeights,
    pub sup: StageWeights,
    pub bot: StageWeights,
    pub lambda_prior: f64,
    pub lambda_anchor: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            grp: StageWeights::from_array(GRP_WEIGHTS),
            sup: StageWeights::from_array(SUP_WEIGHTS),
            bot: StageWeights::from_array(BOT_WEIGHTS),
            lambda_prior: 0.05,
            lambda_anchor: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub group_min: f64,
    pub support_min: f64,
    pub skill_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            group_min: 0.14,
            support_min: 0.10,
            skill_min: 0.10,
        }
    }
}

/// Constants of the adaptive shortlist and score floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Selection {
    pub complexity_weight: f64,
    pub ambiguity_weight: f64,
    pub gap_weight: f64,
    pub spread_weight: f64,
    pub complexity_scale: f64,
    pub spread_scale: f64,
    pub spread_window: usize,
    pub base_pool_min: usize,
    pub top_n_multiplier: usize,
    pub extra_base: f64,
    pub difficulty_multiplier: f64,
    pub pool_cap: usize,
    pub floor_center: f64,
    pub floor_slope: f64,
    pub floor_min: f64,
    pub floor_keep_min: usize,
    pub floor_keep_ceiling: usize,
    pub affinity_threshold: f64,
}

impl Default for Selection {
    fn default() -> Self {
        Selection {
            complexity_weight: 0.60,
            ambiguity_weight: 0.40,
            gap_weight: 0.55,
            spread_weight: 0.45,
            complexity_scale: 12.0,
            spread_scale: 0.25,
            spread_window: 6,
            base_pool_min: 6,
            top_n_multiplier: 2,
            extra_base: 1.0,
            difficulty_multiplier: 2.0,
            pool_cap: 32,
            floor_center: 0.55,
            floor_slope: 0.30,
            floor_min: 0.10,
            floor_keep_min: 3,
            floor_keep_ceiling: 6,
            affinity_threshold: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablations {
    pub no_backfill: bool,
    pub no_group_graph: bool,
    pub no_anchor_selection: bool,
    pub no_group_expansion: bool,
    pub retrieved_skills_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    NoBackfill,
    NoGroupGraph,
    NoAnchorSelection,
    NoGroupExpansion,
    RetrievedSkillsOnly,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::NoBackfill,
        Ablation::NoGroupGraph,
        Ablation::NoAnchorSelection,
        Ablation::NoGroupExpansion,
        Ablation::RetrievedSkillsOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::NoBackfill => "no_backfill",
            Ablation::NoGroupGraph => "no_group_graph",
            Ablation::NoAnchorSelection => "no_anchor_selection",
            Ablation::NoGroupExpansion => "no_group_expansion",
            Ablation::RetrievedSkillsOnly => "retrieved_skills_only",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_");
        Ablation::ALL
            .into_iter()
            .find(|a| a.as_str() == key)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// Which query facets count as high-confidence requirements.
///
/// `critical-override` force-includes check cues (tests, output formats, proof
/// obligations); `instruction-auto` keeps only frameworks, artifacts and stated
/// constraints.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    InstructionAuto,
    #[default]
    CriticalOverride,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::InstructionAuto, Mode::CriticalOverride];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::InstructionAuto => "instruction-auto",
            Mode::CriticalOverride => "critical-override",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('_', "-");
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub budgets: Budgets,
    pub weights: Weights,
    pub thresholds: Thresholds,
    pub selection: Selection,
    pub ablations: Ablations,
    pub mode: Mode,
}

impl Config {
    /// Parses a (possibly partial) override file on top of the defaults.
    pub fn from_json(text: &str) -> Result<Config> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::json("config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Config::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        let b = &self.budgets;
        if b.top_n == 0 || b.seed_k == 0 {
            return bad("top_n and seed_k must be at least 1");
        }
        if b.max_groups == 0 {
            return bad("max_groups must be at least 1");
        }
        if !(1..=3).contains(&b.max_group_size) {
            return bad("max_group_size must be 1, 2 or 3");
        }
        if b.payload_cap < crate::contract::TRUNCATION_MARKER.len() + 1 {
            return bad("payload_cap is smaller than the truncation marker");
        }
        let w = &self.weights;
        let all = w
            .grp
            .to_array()
            .into_iter()
            .chain(w.sup.to_array())
            .chain(w.bot.to_array())
            .chain([w.lambda_prior, w.lambda_anchor]);
        let t = &self.thresholds;
        let s = &self.selection;
        let reals = [
            t.group_min,
            t.support_min,
            t.skill_min,
            s.complexity_weight,
            s.ambiguity_weight,
            s.gap_weight,
            s.spread_weight,
            s.extra_base,
            s.difficulty_multiplier,
            s.floor_center,
            s.floor_slope,
            s.floor_min,
            s.affinity_threshold,
        ];
        if all.chain(reals).any(|x| !x.is_finite()) {
            return bad("all coefficients and thresholds must be finite");
        }
        if s.complexity_scale <= 0.0 || s.spread_scale <= 0.0 {
            return bad("complexity_scale and spread_scale must be positive");
        }
        if s.pool_cap == 0 {
            return bad("pool_cap must be at least 1");
        }
        if s.floor_keep_min > s.floor_keep_ceiling {
            return bad("floor_keep_min exceeds floor_keep_ceiling");
        }
        Ok(())
    }

    /// Copy of this config with one mechanism disabled.
    pub fn ablate(&self, variant: Ablation) -> Config {
        let mut cfg = self.clone();
        let a = &mut cfg.ablations;
        match variant {
            Ablation::NoBackfill => a.no_backfill = true,
            Ablation::NoGroupGraph => a.no_group_graph = true,
            Ablation::NoAnchorSelection => a.no_anchor_selection = true,
            Ablation::NoGroupExpansion => a.no_group_expansion = true,
            Ablation::RetrievedSkillsOnly => a.retrieved_skills_only = true,
        }
        cfg
    }

    /// Names of enabled ablations, in declaration order.
    pub fn active_ablations(&self) -> Vec<&'static str> {
        let a = &self.ablations;
        Ablation::ALL
            .into_iter()
            .filter(|v| match v {
                Ablation::NoBackfill => a.no_backfill,
                Ablation::NoGroupGraph => a.no_group_graph,
                Ablation::NoAnchorSelection => a.no_anchor_selection,
                Ablation::NoGroupExpansion => a.no_group_expansion,
                Ablation::RetrievedSkillsOnly => a.retrieved_skills_only,
            })
            .map(Ablation::as_str)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_file_equals_defaults() {
        assert_eq!(Config::from_json(DEFAULT_WEIGHTS_JSON).unwrap(), Config::default());
    }

    #[test]
    fn partial_override() {
        let cfg = Config::from_json(r#"{"weights":{"lambda_anchor":0.3},"budgets":{"top_n":3}}"#).unwrap();
        assert_eq!(cfg.weights.lambda_anchor, 0.3);
        assert_eq!(cfg.weights.lambda_prior, 0.05);
        assert_eq!(cfg.budgets.top_n, 3);
        assert_eq!(cfg.budgets.seed_k, 4);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(Config::from_json(r#"{"weight":{}}"#).is_err());
        assert!(Config::from_json(r#"{"budgets":{"top_n":0}}"#).is_err());
        assert!(Config::from_json(r#"{"budgets":{"max_group_size":4}}"#).is_err());
        assert!(Config::from_json("{").is_err());
        // a stage vector must be given in full
        assert!(Config::from_json(r#"{"weights":{"grp":{"relevance":1.0}}}"#).is_err());
    }

    #[test]
    fn ablation_names() {
        for a in Ablation::ALL {
            assert_eq!(a.as_str().parse::<Ablation>().unwrap(), a);
        }
        assert_eq!("no-backfill".parse::<Ablation>().unwrap(), Ablation::NoBackfill);
        assert!(matches!("no_magic".parse::<Ablation>(), Err(Error::UnknownVariant(_))));
        let cfg = Config::default().ablate(Ablation::NoGroupGraph);
        assert_eq!(cfg.active_ablations(), vec!["no_group_graph"]);
        assert!(Config::default().active_ablations().is_empty());
    }

    #[test]
    fn modes_parse() {
        assert_eq!("instruction_auto".parse::<Mode>().unwrap(), Mode::InstructionAuto);
        assert_eq!("critical-override".parse::<Mode>().unwrap(), Mode::CriticalOverride);
        assert!("other".parse::<Mode>().is_err());
    }
}
