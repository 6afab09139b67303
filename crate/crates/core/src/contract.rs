//! Fixed-skeleton execution contract: START, SUPPORT, CHECK, AVOID, SKILLS, DEBT.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dictionary::Category;
use crate::library::{edge_rank, FacetSet, Library};
use crate::pool::{role_for_edge, SkillGroup};
use crate::schema::QuerySchema;

pub const TRUNCATION_MARKER: &str = "[truncated]";
/// Longest rendered line in the list fields; longer lines are cut with "...".
pub const MAX_LINE_CHARS: usize = 160;
/// Items shown per list field before collapsing into "... and N more".
pub const MAX_LIST_ITEMS: usize = 8;
const MAX_REASON_FACETS: usize = 6;

const START_HEADER: &str = "START";
const SUPPORT_HEADER: &str = "SUPPORT\nUse the following support skills only for their stated roles:";
const CHECK_HEADER: &str = "CHECK\nBefore finalizing, verify the following visible requirements:";
const AVOID_HEADER: &str = "AVOID\nDo not follow these incompatible interpretations:";
const SKILLS_HEADER: &str = "SKILLS";
const DEBT_HEADER: &str = "DEBT";
const NONE: &str = "None";

/// Payloads within `cap` characters are returned unchanged. Longer payloads are cut
/// at the last line break that leaves room for the marker line, or hard-cut when
/// the first line alone is too long, and end with the marker.
pub fn truncate_payload(payload: &str, cap: usize) -> String {
    if payload.chars().count() <= cap {
        return payload.to_string();
    }
    let room = cap.saturating_sub(TRUNCATION_MARKER.len() + 1);
    let end = payload.char_indices().nth(room).map(|(i, _)| i).unwrap_or(payload.len());
    let head = &payload[..end];
    let head = match head.rfind('\n') {
        Some(i) if i > 0 => &head[..i],
        _ => head,
    };
    format!("{head}\n{TRUNCATION_MARKER}")
}

fn clip_line(line: String) -> String {
    if line.chars().count() <= MAX_LINE_CHARS {
        return line;
    }
    let mut out: String = line.chars().take(MAX_LINE_CHARS - 3).collect();
    out.push_str("...");
    out
}

fn list_lines(items: &[String]) -> Vec<String> {
    if items.is_empty() {
        return vec![NONE.to_string()];
    }
    let mut out: Vec<String> = items
        .iter()
        .take(MAX_LIST_ITEMS)
        .map(|i| clip_line(format!("- {i}")))
        .collect();
    if items.len() > MAX_LIST_ITEMS {
        out.push(format!("- ... and {} more", items.len() - MAX_LIST_ITEMS));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartEntry {
    pub skill: String,
    pub reason: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub skill: String,
    pub role: String,
    pub covers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillPayload {
    pub skill: String,
    pub payload: String,
    pub truncated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionContract {
    pub start: Option<StartEntry>,
    pub support: Vec<SupportEntry>,
    pub check: Vec<String>,
    pub avoid: Vec<String>,
    pub skills: Vec<SkillPayload>,
    pub debt: Vec<String>,
}

impl ExecutionContract {
    pub fn render(&self) -> String {
        let mut sections: Vec<String> = Vec::with_capacity(6);

        let mut start = vec![START_HEADER.to_string()];
        match &self.start {
            Some(s) => {
                let because = if s.reason.is_empty() {
                    "it is the best-matching entry point".to_string()
                } else {
                    format!("the task requires {}", s.reason.join(", "))
                };
                start.push(clip_line(format!("Use {} first because {because}.", s.skill)));
                start.push("Inspect its source path before writing new code.".to_string());
            }
            None => start.push(NONE.to_string()),
        }
        sections.push(start.join("\n"));

        let mut support = vec![SUPPORT_HEADER.to_string()];
        if self.support.is_empty() {
            support.push(NONE.to_string());
        }
        for s in &self.support {
            let reason = if s.covers.is_empty() {
                "complements the anchor".to_string()
            } else {
                format!("covers {}", s.covers.join(", "))
            };
            support.push(clip_line(format!("{}: {} -- {reason}", s.skill, s.role)));
        }
        sections.push(support.join("\n"));

        let mut check = vec![CHECK_HEADER.to_string()];
        check.extend(list_lines(&self.check));
        sections.push(check.join("\n"));

        let mut avoid = vec![AVOID_HEADER.to_string()];
        avoid.extend(list_lines(&self.avoid));
        sections.push(avoid.join("\n"));

        let mut skills = vec![SKILLS_HEADER.to_string()];
        if self.skills.is_empty() {
            skills.push(NONE.to_string());
        }
        for s in &self.skills {
            skills.push(clip_line(format!("### {}", s.skill)));
            skills.push(s.payload.clone());
        }
        sections.push(skills.join("\n"));

        let mut debt = vec![DEBT_HEADER.to_string()];
        debt.extend(list_lines(&self.debt));
        sections.push(debt.join("\n"));

        let mut text = sections.join("\n\n");
        text.push('\n');
        text
    }

    pub fn rendered_chars(&self) -> usize {
        self.render().chars().count()
    }
}

/// Everything the renderer reads. Only `presented` skills are ever named.
#[derive(Debug, Clone, Copy)]
pub struct ContractInput<'a> {
    pub lib: &'a Library,
    pub schema: &'a QuerySchema,
    pub high: &'a FacetSet,
    /// Anchor first, then supports; empty for the group-free path.
    pub plan: &'a [&'a SkillGroup],
    pub presented: &'a [String],
    pub backfilled: &'a BTreeSet<String>,
    pub debt: &'a FacetSet,
    pub payload_cap: usize,
}

fn covered_tokens(schema: &QuerySchema, facets: &FacetSet) -> Vec<String> {
    let mut out: Vec<String> = schema
        .facets()
        .tokens()
        .filter(|t| facets.contains(t))
        .map(str::to_string)
        .collect();
    out.truncate(MAX_REASON_FACETS);
    out
}

/// Role label of a presented non-anchor skill: its role inside the first plan
/// group that holds it as a member, else the edge role toward the anchor lead,
/// else "backfill" or "support".
pub fn support_role(skill: &str, plan: &[&SkillGroup], lib: &Library, backfilled: bool) -> String {
    for g in plan {
        if g.lead != skill {
            if let Some(r) = g.roles.get(skill) {
                return r.to_string();
            }
        }
    }
    if let Some(anchor) = plan.first() {
        let edge = lib
            .graph()
            .between(&anchor.lead, skill)
            .filter(|e| e.kind.is_structural())
            .min_by(|x, y| edge_rank(x, y));
        if let Some(r) = edge.and_then(|e| role_for_edge(e.kind, e.src == skill)) {
            return r.to_string();
        }
    }
    if backfilled { "backfill" } else { "support" }.to_string()
}

/// Builds the structured contract. Payloads are truncated to `payload_cap`.
pub fn format_contract(input: &ContractInput) -> ExecutionContract {
    let lib = input.lib;
    let anchor_lead = input.plan.first().map(|g| g.lead.as_str());
    let start = anchor_lead
        .filter(|lead| input.presented.iter().any(|p| p == lead))
        .and_then(|lead| lib.get(lead))
        .map(|s| StartEntry {
            skill: s.id.clone(),
            reason: covered_tokens(input.schema, &s.facets),
        });

    let support = input
        .presented
        .iter()
        .filter(|s| Some(s.as_str()) != start.as_ref().map(|st| st.skill.as_str()))
        .filter_map(|s| lib.get(s))
        .map(|s| SupportEntry {
            skill: s.id.clone(),
            role: support_role(&s.id, input.plan, lib, input.backfilled.contains(&s.id)),
            covers: covered_tokens(input.schema, &s.facets),
        })
        .collect();

    let mut check: Vec<(Category, String)> = input.high.iter().map(|(t, c)| (c, t.to_string())).collect();
    for t in &input.schema.check {
        if !input.high.contains(t) && !input.schema.alias_only.contains(t) {
            check.push((Category::Check, t.clone()));
        }
    }
    check.sort();
    let check = check.into_iter().map(|(c, t)| format!("{c}: {t}")).collect();

    let mut cues: BTreeSet<String> = BTreeSet::new();
    if input.plan.is_empty() {
        for s in input.presented.iter().filter_map(|s| lib.get(s)) {
            cues.extend(s.negatives.iter().map(|c| c.trim().to_string()).filter(|c| !c.is_empty()));
        }
    } else {
        for g in input.plan {
            cues.extend(g.negative_cues.iter().cloned());
        }
    }
    let mut avoid: Vec<String> = cues.into_iter().collect();
    for c in &input.schema.constraint {
        if !input.schema.alias_only.contains(c) {
            avoid.push(format!("violating the stated constraint: {c}"));
        }
    }

    let skills = input
        .presented
        .iter()
        .filter_map(|s| lib.get(s))
        .map(|s| {
            let payload = truncate_payload(&s.payload, input.payload_cap);
            SkillPayload {
                skill: s.id.clone(),
                truncated: payload != s.payload,
                payload,
            }
        })
        .collect();

    ExecutionContract {
        start,
        support,
        check,
        avoid,
        skills,
        debt: input.debt.tokens().map(str::to_string).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_payload_unchanged() {
        let p = "x".repeat(100);
        assert_eq!(truncate_payload(&p, 1800), p);
        let exact = "y".repeat(1800);
        assert_eq!(truncate_payload(&exact, 1800), exact);
    }

    #[test]
    fn long_payload_cut_at_line() {
        let p = "line of text\n".repeat(400);
        let t = truncate_payload(&p, 1800);
        assert!(t.chars().count() <= 1800);
        assert!(t.ends_with(TRUNCATION_MARKER));
        let body = t.strip_suffix(TRUNCATION_MARKER).unwrap();
        assert!(body.lines().all(|l| l == "line of text"));
    }

    #[test]
    fn single_long_line_hard_cut() {
        let p = "z".repeat(5000);
        let t = truncate_payload(&p, 1800);
        assert_eq!(t.chars().count(), 1800);
        assert!(t.ends_with(TRUNCATION_MARKER));
    }

    #[test]
    fn multibyte_payloads_count_chars() {
        let p = "é".repeat(2000);
        let t = truncate_payload(&p, 1800);
        assert!(t.chars().count() <= 1800);
    }

    #[test]
    fn empty_contract_has_every_section() {
        let text = ExecutionContract::default().render();
        let heads: Vec<&str> = text
            .lines()
            .filter(|l| ["START", "SUPPORT", "CHECK", "AVOID", "SKILLS", "DEBT"].contains(l))
            .collect();
        assert_eq!(heads, vec!["START", "SUPPORT", "CHECK", "AVOID", "SKILLS", "DEBT"]);
        assert!(text.ends_with("DEBT\nNone\n"));
    }

    #[test]
    fn long_lists_collapse() {
        let c = ExecutionContract {
            debt: (0..20).map(|i| format!("facet-{i}")).collect(),
            ..ExecutionContract::default()
        };
        let text = c.render();
        assert!(text.contains("- ... and 12 more"));
        assert!(text.lines().all(|l| l.chars().count() <= MAX_LINE_CHARS || !l.starts_with('-')));
    }
}
