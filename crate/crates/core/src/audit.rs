//! Model-size census and its comparison with the published case-study sizes.

use std::fmt::Write as _;

use serde::Serialize;

use crate::formulation::{build_model, BuildOptions, EqTag, Family, ModelStats};
use crate::instance::Instance;

/// Sizes reported for the published case study.
pub const PUBLISHED_CONTINUOUS: usize = 1292;
pub const PUBLISHED_BINARY: usize = 1010;
pub const PUBLISHED_INTEGER: usize = 1344;
pub const PUBLISHED_LINEAR: usize = 5564;
pub const PUBLISHED_NONLINEAR: usize = 2;

/// A known, explained difference between our count and the published one.
#[derive(Debug, Clone, Serialize)]
pub struct KnownDivergence {
    pub quantity: &'static str,
    pub published: usize,
    /// Our count for the bundled case study.
    pub expected: usize,
    pub reason: &'static str,
}

pub const KNOWN_DIVERGENCES: [KnownDivergence; 3] = [
    KnownDivergence {
        quantity: "continuous",
        published: PUBLISHED_CONTINUOUS,
        expected: 1302,
        reason: "families x, inv, w, y, p, o_pw, o_wk, bigP, slack, loss as declared below; \
                 the published total has no per-family breakdown, so the +10 cannot be \
                 attributed to a single family",
    },
    KnownDivergence {
        quantity: "linear rows",
        published: PUBLISHED_LINEAR,
        expected: 5137,
        reason: "v >= 0 is a variable bound rather than a row (3 McCormick rows per link-mode, \
                 not 4); windows of eqs 3-6 are truncated at the horizon end; two-sided \
                 eqs 3, 6, 10 and 15 are two rows each; the published total has no \
                 per-equation breakdown",
    },
    KnownDivergence {
        quantity: "nonlinear rows",
        published: PUBLISHED_NONLINEAR,
        expected: 1,
        reason: "the variance is substituted into the cap directly; the published model \
                 defines it through an extra equality",
    },
];

#[derive(Debug, Clone, Serialize)]
pub struct TagCount {
    pub tag: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub quantity: &'static str,
    pub published: usize,
    pub ours: usize,
    /// `None` when the counts agree.
    pub reason: Option<&'static str>,
    pub documented: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusAudit {
    pub stats: ModelStats,
    pub rows_by_tag: Vec<TagCount>,
    pub vars_by_family: Vec<(String, usize)>,
    pub comparisons: Vec<Comparison>,
}

impl CensusAudit {
    /// True when every divergence from the published sizes is a known one.
    pub fn pass(&self) -> bool {
        self.comparisons.iter().all(|c| c.documented)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("[census]\n");
        let s = &self.stats;
        let _ = writeln!(
            out,
            "variables: {} continuous, {} binary, {} integer",
            s.continuous, s.binary, s.integer
        );
        let _ = writeln!(out, "rows: {} linear, {} quadratic", s.linear_rows, s.quadratic_rows);
        out.push_str("rows by equation:\n");
        for t in &self.rows_by_tag {
            let _ = writeln!(out, "  {:<4} {}", t.tag, t.rows);
        }
        out.push_str("variables by family:\n");
        for (f, n) in &self.vars_by_family {
            let _ = writeln!(out, "  {f:<12} {n}");
        }
        out.push_str("published sizes:\n");
        for c in &self.comparisons {
            let status = match (c.reason, c.documented) {
                (None, _) => "match".to_string(),
                (Some(_), true) => format!("documented divergence ({:+})", c.ours as i64 - c.published as i64),
                (Some(_), false) => format!("UNDOCUMENTED divergence ({:+})", c.ours as i64 - c.published as i64),
            };
            let _ = writeln!(out, "  {:<15} published {:>5}  ours {:>5}  {status}", c.quantity, c.published, c.ours);
            if let Some(r) = c.reason {
                let _ = writeln!(out, "      {r}");
            }
        }
        let _ = writeln!(out, "audit: {}", if self.pass() { "pass" } else { "fail" });
        out
    }
}

fn compare(quantity: &'static str, published: usize, ours: usize) -> Comparison {
    if ours == published {
        return Comparison {
            quantity,
            published,
            ours,
            reason: None,
            documented: true,
        };
    }
    let known = KNOWN_DIVERGENCES
        .iter()
        .find(|d| d.quantity == quantity && d.published == published && d.expected == ours);
    Comparison {
        quantity,
        published,
        ours,
        reason: Some(known.map_or("no documented explanation", |d| d.reason)),
        documented: known.is_some(),
    }
}

/// Census of the full quadratic model of `inst`, compared with the
/// published case-study sizes.
pub fn census_audit(inst: &Instance) -> CensusAudit {
    let ir = build_model(inst, BuildOptions::default());
    let stats = ir.stats();
    let rows_by_tag = stats
        .rows_by_tag
        .iter()
        .map(|(t, n)| TagCount {
            tag: match t {
                EqTag::Eq(n) => format!("{n}"),
                other => other.label(),
            },
            rows: *n,
        })
        .collect();
    let vars_by_family = Family::ALL
        .iter()
        .filter_map(|f| stats.vars_by_family.get(f).map(|n| (f.as_str().to_string(), *n)))
        .collect();
    let comparisons = vec![
        compare("continuous", PUBLISHED_CONTINUOUS, stats.continuous),
        compare("binary", PUBLISHED_BINARY, stats.binary),
        compare("integer", PUBLISHED_INTEGER, stats.integer),
        compare("linear rows", PUBLISHED_LINEAR, stats.linear_rows),
        compare("nonlinear rows", PUBLISHED_NONLINEAR, stats.quadratic_rows),
    ];
    CensusAudit {
        stats,
        rows_by_tag,
        vars_by_family,
        comparisons,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_study_audit_documents_every_divergence() {
        let audit = census_audit(&Instance::case_study());
        assert!(audit.pass(), "{}", audit.to_text());
        assert!(audit.comparisons.iter().any(|c| c.quantity == "binary" && c.reason.is_none()));
    }

    #[test]
    fn changed_model_is_flagged() {
        let mut inst = Instance::case_study();
        inst.sets.days = 21;
        inst.sets.weeks = 3;
        for sc in &mut inst.scenarios {
            for row in &mut sc.demand {
                row.push(100.0);
            }
        }
        inst.risk.loss_cost.push(50.0);
        let audit = census_audit(&inst);
        assert!(!audit.pass());
        assert!(audit.to_text().contains("UNDOCUMENTED"));
    }
}
