//! The three linear utilities, the anchor correction, and the adaptive shortlist
//! size and score floor.

use serde::{Deserialize, Serialize};

use crate::config::{Selection, StageWeights, Weights};

/// Eight clipped feature values in fixed order. Features a stage does not use
/// stay at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub relevance: f64,
    pub facet_coverage: f64,
    pub anchor_match: f64,
    pub check_support: f64,
    pub connectivity: f64,
    pub redundancy: f64,
    pub negative: f64,
    pub cost: f64,
}

pub fn clip01(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

impl FeatureVector {
    pub fn from_array(v: [f64; 8]) -> Self {
        FeatureVector {
            relevance: v[0],
            facet_coverage: v[1],
            anchor_match: v[2],
            check_support: v[3],
            connectivity: v[4],
            redundancy: v[5],
            negative: v[6],
            cost: v[7],
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

    pub fn clipped(self) -> Self {
        FeatureVector::from_array(self.to_array().map(clip01))
    }
}

/// Weighted sum in feature order; features are clipped first.
pub fn linear(weights: &StageWeights, features: &FeatureVector) -> f64 {
    weights
        .to_array()
        .iter()
        .zip(features.clipped().to_array())
        .map(|(w, x)| w * x)
        .sum()
}

pub fn u_grp(features: &FeatureVector, prior: f64, weights: &Weights) -> f64 {
    linear(&weights.grp, features) + weights.lambda_prior * clip01(prior)
}

pub fn u_sup(features: &FeatureVector, weights: &Weights) -> f64 {
    linear(&weights.sup, features)
}

pub fn u_bot(features: &FeatureVector, weights: &Weights) -> f64 {
    linear(&weights.bot, features)
}

/// Raw anchor value in [-1, 1]: zero when the query names no technology or
/// artifact anchor, -1 for generic or negatively conflicting leads, otherwise the
/// lead's anchor match (1 exact, 0.5 alias-only, 0 none).
pub fn anchor_value(query_has_anchors: bool, lead_generic_or_conflicting: bool, anchor_match: f64) -> f64 {
    if !query_has_anchors {
        0.0
    } else if lead_generic_or_conflicting {
        -1.0
    } else {
        clip01(anchor_match)
    }
}

/// Anchor correction added to `u_grp` during anchor selection.
pub fn anchor_bonus(anchor_value: f64, weights: &Weights) -> f64 {
    weights.lambda_anchor * anchor_value
}

/// Query difficulty from the number of schema facets and the top of the
/// ranked candidate scores.
pub fn difficulty(facet_count: usize, ranked_scores: &[f64], sel: &Selection) -> f64 {
    let complexity = clip01(facet_count as f64 / sel.complexity_scale);
    sel.complexity_weight * complexity + sel.ambiguity_weight * ambiguity(ranked_scores, sel)
}

/// Zero with fewer than two scores; otherwise a mix of a small top gap and a wide
/// spread among the leading scores.
pub fn ambiguity(ranked_scores: &[f64], sel: &Selection) -> f64 {
    if ranked_scores.len() < 2 {
        return 0.0;
    }
    let gap = clip01(ranked_scores[0] - ranked_scores[1]);
    let top = &ranked_scores[..ranked_scores.len().min(sel.spread_window.max(1))];
    let mean = top.iter().sum::<f64>() / top.len() as f64;
    let var = top.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / top.len() as f64;
    let spread = clip01(var.sqrt() / sel.spread_scale);
    clip01(sel.gap_weight * (1.0 - gap) + sel.spread_weight * spread)
}

/// Base shortlist size `max(6, 2 * top_n)`.
pub fn base_pool(top_n: usize, sel: &Selection) -> usize {
    sel.base_pool_min.max(sel.top_n_multiplier * top_n)
}

/// `min(pool_cap, round(base * (extra_base + difficulty_multiplier * d)))`, never
/// below `base` unless the cap is smaller.
pub fn shortlist_size(difficulty: f64, top_n: usize, sel: &Selection) -> usize {
    let base = base_pool(top_n, sel);
    let d = clip01(difficulty);
    let scaled = (base as f64 * (sel.extra_base + sel.difficulty_multiplier * d)).round();
    let scaled = if scaled.is_finite() && scaled > 0.0 { scaled as usize } else { 0 };
    scaled.max(base).min(sel.pool_cap)
}

pub fn score_floor(difficulty: f64, sel: &Selection) -> f64 {
    sel.floor_min.max(sel.floor_center - sel.floor_slope * clip01(difficulty))
}

/// Number of leading entries of a descending score list that survive the floor:
/// every score at or above it, topped up to `floor_keep_min` (never more than
/// `floor_keep_ceiling` below-floor entries, never more than available).
pub fn floor_survivors(ranked_scores: &[f64], floor: f64, sel: &Selection) -> usize {
    let above = ranked_scores.iter().take_while(|&&s| s >= floor).count();
    let forced = sel
        .floor_keep_min
        .saturating_sub(above)
        .min(sel.floor_keep_ceiling)
        .min(ranked_scores.len() - above);
    above + forced
}
