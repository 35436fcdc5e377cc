//! Solver-agnostic model representation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Variable families of the supply-chain model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Alpha,
    AlphaStart,
    AlphaClean,
    Beta,
    Delta,
    LambdaPw,
    LambdaWk,
    UPw,
    UWk,
    X,
    Inv,
    W,
    Y,
    P,
    OPw,
    OWk,
    VPw,
    VWk,
    BigP,
    Slack,
    Loss,
}

impl Family {
    pub const ALL: [Family; 21] = [
        Family::Alpha,
        Family::AlphaStart,
        Family::AlphaClean,
        Family::Beta,
        Family::Delta,
        Family::LambdaPw,
        Family::LambdaWk,
        Family::UPw,
        Family::UWk,
        Family::X,
        Family::Inv,
        Family::W,
        Family::Y,
        Family::P,
        Family::OPw,
        Family::OWk,
        Family::VPw,
        Family::VWk,
        Family::BigP,
        Family::Slack,
        Family::Loss,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Alpha => "alpha",
            Family::AlphaStart => "alpha_start",
            Family::AlphaClean => "alpha_clean",
            Family::Beta => "beta",
            Family::Delta => "delta",
            Family::LambdaPw => "lambda_pw",
            Family::LambdaWk => "lambda_wk",
            Family::UPw => "u_pw",
            Family::UWk => "u_wk",
            Family::X => "x",
            Family::Inv => "inv",
            Family::W => "w",
            Family::Y => "y",
            Family::P => "p",
            Family::OPw => "o_pw",
            Family::OWk => "o_wk",
            Family::VPw => "v_pw",
            Family::VWk => "v_wk",
            Family::BigP => "bigP",
            Family::Slack => "slack",
            Family::Loss => "loss",
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.as_str() == name)
    }

    /// Number of indices carried by keys of this family.
    pub fn arity(self) -> usize {
        match self {
            Family::Delta => 1,
            Family::Loss => 2,
            Family::Alpha
            | Family::AlphaStart
            | Family::AlphaClean
            | Family::Beta
            | Family::X
            | Family::Inv
            | Family::W
            | Family::Slack => 3,
            Family::Y | Family::P | Family::BigP => 4,
            Family::LambdaPw
            | Family::LambdaWk
            | Family::UPw
            | Family::UWk
            | Family::OPw
            | Family::OWk
            | Family::VPw
            | Family::VWk => 5,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Structured variable name: a family plus zero-based indices in the
/// family's natural order (e.g. plant, warehouse, mode, day, scenario).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarKey {
    pub family: Family,
    idx: [u32; 5],
}

impl VarKey {
    pub fn new(family: Family, indices: &[usize]) -> Self {
        assert_eq!(
            indices.len(),
            family.arity(),
            "{family} expects {} indices",
            family.arity()
        );
        let mut idx = [0u32; 5];
        for (slot, &i) in idx.iter_mut().zip(indices) {
            *slot = i as u32;
        }
        VarKey { family, idx }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.idx[..self.family.arity()].iter().map(|&i| i as usize)
    }

    pub fn index(&self, pos: usize) -> usize {
        assert!(pos < self.family.arity());
        self.idx[pos] as usize
    }

    /// Parses the `family(i,j,...)` form produced by `Display`.
    pub fn parse(name: &str) -> Option<VarKey> {
        let open = name.find('(')?;
        let inner = name[open + 1..].strip_suffix(')')?;
        let family = Family::parse(&name[..open])?;
        let mut indices = Vec::with_capacity(5);
        for part in inner.split(',') {
            let one_based: usize = part.trim().parse().ok()?;
            indices.push(one_based.checked_sub(1)?);
        }
        if indices.len() != family.arity() {
            return None;
        }
        Some(VarKey::new(family, &indices))
    }
}

/// Renders the 1-based `family(i,j,m,t,s)` name used in exported files.
impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family)?;
        for (n, i) in self.indices().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }

    /// Amount by which `lhs sense rhs` is violated (0 when satisfied).
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Sense::Le => (lhs - rhs).max(0.0),
            Sense::Ge => (rhs - lhs).max(0.0),
            Sense::Eq => (lhs - rhs).abs(),
        }
    }
}

/// Which model equation a row implements. Serialized as its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EqTag {
    /// Numbered model equation (2..=25).
    Eq(u8),
    /// Nonanticipativity link.
    Nonanticipativity,
    /// McCormick product linearization.
    McCormick,
}

impl EqTag {
    pub fn label(self) -> String {
        match self {
            EqTag::Eq(n) => n.to_string(),
            EqTag::Nonanticipativity => "NA".into(),
            EqTag::McCormick => "MC".into(),
        }
    }

    pub fn parse(label: &str) -> Option<EqTag> {
        match label {
            "NA" => Some(EqTag::Nonanticipativity),
            "MC" => Some(EqTag::McCormick),
            n => n.parse().ok().filter(|n| (2..=25).contains(n)).map(EqTag::Eq),
        }
    }

    /// Short lowercase prefix for row names in exported files.
    pub(crate) fn row_prefix(self) -> String {
        match self {
            EqTag::Eq(n) => format!("e{n}"),
            EqTag::Nonanticipativity => "na".into(),
            EqTag::McCormick => "mc".into(),
        }
    }
}

impl Serialize for EqTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for EqTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let label = String::deserialize(d)?;
        EqTag::parse(&label).ok_or_else(|| serde::de::Error::custom(format!("unknown equation tag `{label}`")))
    }
}

impl fmt::Display for EqTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub type VarId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub key: VarKey,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub tag: EqTag,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearRow {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }

    pub fn violation(&self, values: &[f64]) -> f64 {
        self.sense.violation(self.activity(values), self.rhs)
    }
}

/// `Σ q·x_i·x_j + Σ a·x_i ≤ rhs`. Each `(i, j, q)` entry contributes
/// `q·x_i·x_j` once; `i ≤ j` by convention.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticRow {
    pub tag: EqTag,
    pub quad: Vec<(VarId, VarId, f64)>,
    pub linear: Vec<(VarId, f64)>,
    pub rhs: f64,
}

impl QuadraticRow {
    pub fn activity(&self, values: &[f64]) -> f64 {
        let q: f64 = self.quad.iter().map(|&(i, j, c)| c * values[i] * values[j]).sum();
        let a: f64 = self.linear.iter().map(|&(i, c)| c * values[i]).sum();
        q + a
    }
}

/// Variable and row census.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub continuous: usize,
    pub binary: usize,
    pub integer: usize,
    pub linear_rows: usize,
    pub quadratic_rows: usize,
    pub rows_by_tag: BTreeMap<EqTag, usize>,
    pub vars_by_family: BTreeMap<Family, usize>,
}

/// Linear objective (minimize), linear rows and at most one quadratic row.
#[derive(Debug, Clone, Default)]
pub struct ModelIR {
    vars: Vec<Variable>,
    index: HashMap<VarKey, VarId>,
    pub rows: Vec<LinearRow>,
    pub quadratic: Option<QuadraticRow>,
    pub objective: Vec<(VarId, f64)>,
    pub objective_constant: f64,
}

impl ModelIR {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable. Binary kinds are clamped to `[0, 1]`.
    pub fn add_var(&mut self, key: VarKey, kind: VarKind, lower: f64, upper: f64) -> VarId {
        assert!(!self.index.contains_key(&key), "duplicate variable {key}");
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        let id = self.vars.len();
        self.vars.push(Variable {
            key,
            kind,
            lower,
            upper,
        });
        self.index.insert(key, id);
        id
    }

    pub fn var(&self, key: &VarKey) -> Option<VarId> {
        self.index.get(key).copied()
    }

    /// Id of `family(indices)`; panics if undeclared.
    pub fn id(&self, family: Family, indices: &[usize]) -> VarId {
        let key = VarKey::new(family, indices);
        self.var(&key)
            .unwrap_or_else(|| panic!("undeclared variable {key}"))
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) {
        self.vars[id].lower = lower;
        self.vars[id].upper = upper;
    }

    pub fn add_row(&mut self, tag: EqTag, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) {
        debug_assert!(terms.iter().all(|&(v, _)| v < self.vars.len()));
        self.rows.push(LinearRow {
            tag,
            terms,
            sense,
            rhs,
        });
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.kind != VarKind::Continuous)
    }

    /// Copy with every integrality requirement dropped.
    pub fn relaxed(&self) -> ModelIR {
        let mut ir = self.clone();
        for v in &mut ir.vars {
            v.kind = VarKind::Continuous;
        }
        ir
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(v, c)| c * values[v]).sum::<f64>()
    }

    pub fn stats(&self) -> ModelStats {
        let mut stats = ModelStats::default();
        for v in &self.vars {
            match v.kind {
                VarKind::Continuous => stats.continuous += 1,
                VarKind::Binary => stats.binary += 1,
                VarKind::Integer => stats.integer += 1,
            }
            *stats.vars_by_family.entry(v.key.family).or_default() += 1;
        }
        stats.linear_rows = self.rows.len();
        for r in &self.rows {
            *stats.rows_by_tag.entry(r.tag).or_default() += 1;
        }
        if let Some(q) = &self.quadratic {
            stats.quadratic_rows = 1;
            *stats.rows_by_tag.entry(q.tag).or_default() += 1;
        }
        stats
    }

    /// Assembles a full value vector from `(key, value)` pairs.
    pub fn values_from_keys<'a>(
        &self,
        pairs: impl IntoIterator<Item = (&'a VarKey, f64)>,
    ) -> Vec<f64> {
        let mut values = vec![0.0; self.vars.len()];
        for (key, val) in pairs {
            if let Some(id) = self.var(key) {
                values[id] = val;
            }
        }
        values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_serialize_to_json_with_label_keys() {
        let mut st = ModelStats::default();
        st.rows_by_tag.insert(EqTag::Eq(9), 4);
        st.rows_by_tag.insert(EqTag::McCormick, 3);
        st.vars_by_family.insert(Family::Loss, 2);
        let text = serde_json::to_string(&st).unwrap();
        assert!(text.contains("\"9\":4") && text.contains("\"MC\":3"), "{text}");
        assert_eq!(serde_json::from_str::<ModelStats>(&text).unwrap(), st);
    }

    #[test]
    fn key_names_round_trip() {
        let key = VarKey::new(Family::OPw, &[0, 1, 1, 13, 2]);
        assert_eq!(key.to_string(), "o_pw(1,2,2,14,3)");
        assert_eq!(VarKey::parse("o_pw(1,2,2,14,3)"), Some(key));
        assert_eq!(VarKey::new(Family::Delta, &[1]).to_string(), "delta(2)");
        assert_eq!(VarKey::parse("delta(0)"), None);
        assert_eq!(VarKey::parse("loss(1)"), None);
        assert_eq!(VarKey::parse("nope(1)"), None);
    }

    #[test]
    fn tags_parse() {
        for tag in [EqTag::Eq(3), EqTag::Eq(25), EqTag::McCormick, EqTag::Nonanticipativity] {
            assert_eq!(EqTag::parse(&tag.label()), Some(tag));
        }
        assert_eq!(EqTag::parse("1"), None);
        assert_eq!(EqTag::parse("26"), None);
    }

    #[test]
    fn binary_bounds_are_clamped() {
        let mut ir = ModelIR::new();
        let id = ir.add_var(VarKey::new(Family::Delta, &[0]), VarKind::Binary, -3.0, 7.0);
        assert_eq!((ir.vars()[id].lower, ir.vars()[id].upper), (0.0, 1.0));
    }
}
