//! LP and MPS writers, plus readers that recover the coefficient table.
//!
//! Variables are named `family(i,j,m,t,s)` with 1-based indices and rows
//! `<tag>_<n>` (e.g. `e9_4`, `mc_12`, `na_3`). Coefficients are printed
//! in shortest round-trip form, so reading a file back yields bit-identical
//! values.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::formulation::{ModelIR, Sense, VarKind};

/// Values at or beyond this magnitude are written and read as infinite.
const FILE_INFINITY: f64 = 1e30;
const TERMS_PER_LINE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Lp,
    Mps,
}

impl std::str::FromStr for FileFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lp" => Ok(FileFormat::Lp),
            "mps" => Ok(FileFormat::Mps),
            other => Err(format!("unknown model format `{other}` (expected lp or mps)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileRow {
    pub terms: BTreeMap<String, f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileQuadRow {
    /// Keys are name pairs ordered lexicographically.
    pub quad: BTreeMap<(String, String), f64>,
    pub linear: BTreeMap<String, f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileColumn {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// Name-keyed coefficient table of a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelFile {
    pub objective: BTreeMap<String, f64>,
    pub rows: BTreeMap<String, FileRow>,
    pub quadratic: BTreeMap<String, FileQuadRow>,
    pub columns: BTreeMap<String, FileColumn>,
}

fn clean_inf(x: f64) -> f64 {
    if x >= FILE_INFINITY {
        f64::INFINITY
    } else if x <= -FILE_INFINITY {
        f64::NEG_INFINITY
    } else {
        x
    }
}

fn add_term(map: &mut BTreeMap<String, f64>, name: &str, c: f64) {
    *map.entry(name.to_string()).or_insert(0.0) += c;
}

fn drop_zeros(map: &mut BTreeMap<String, f64>) {
    map.retain(|_, c| *c != 0.0);
}

fn quad_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

fn row_names(ir: &ModelIR) -> Vec<String> {
    let mut counters: HashMap<String, usize> = HashMap::new();
    ir.rows
        .iter()
        .map(|r| {
            let prefix = r.tag.row_prefix();
            let n = counters.entry(prefix.clone()).or_insert(0);
            *n += 1;
            format!("{prefix}_{n}")
        })
        .collect()
}

fn quad_row_name(ir: &ModelIR) -> Option<String> {
    ir.quadratic.as_ref().map(|q| format!("{}_1", q.tag.row_prefix()))
}

impl ModelFile {
    /// The table a faithful reader should recover from an exported `ir`.
    pub fn from_ir(ir: &ModelIR) -> ModelFile {
        let names: Vec<String> = ir.vars().iter().map(|v| v.key.to_string()).collect();
        let mut file = ModelFile::default();
        for &(v, c) in &ir.objective {
            add_term(&mut file.objective, &names[v], c);
        }
        drop_zeros(&mut file.objective);
        for (row, name) in ir.rows.iter().zip(row_names(ir)) {
            let mut terms = BTreeMap::new();
            for &(v, c) in &row.terms {
                add_term(&mut terms, &names[v], c);
            }
            drop_zeros(&mut terms);
            file.rows.insert(
                name,
                FileRow {
                    terms,
                    sense: row.sense,
                    rhs: row.rhs,
                },
            );
        }
        if let (Some(q), Some(name)) = (&ir.quadratic, quad_row_name(ir)) {
            let mut quad = BTreeMap::new();
            for &(i, j, c) in &q.quad {
                *quad.entry(quad_key(&names[i], &names[j])).or_insert(0.0) += c;
            }
            quad.retain(|_, c: &mut f64| *c != 0.0);
            let mut linear = BTreeMap::new();
            for &(v, c) in &q.linear {
                add_term(&mut linear, &names[v], c);
            }
            drop_zeros(&mut linear);
            file.quadratic.insert(
                name,
                FileQuadRow {
                    quad,
                    linear,
                    rhs: clean_inf(q.rhs),
                },
            );
        }
        for (v, name) in ir.vars().iter().zip(&names) {
            file.columns.insert(
                name.clone(),
                FileColumn {
                    kind: v.kind,
                    lower: v.lower,
                    upper: v.upper,
                },
            );
        }
        file
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len() + self.quadratic.len()
    }
}

fn fmt_num(x: f64) -> String {
    if x >= FILE_INFINITY || x == f64::INFINITY {
        "1e30".into()
    } else if x <= -FILE_INFINITY || x == f64::NEG_INFINITY {
        "-1e30".into()
    } else {
        format!("{x:?}")
    }
}

fn write_linear(out: &mut String, terms: &[(String, f64)], first_on_line: bool) {
    if terms.is_empty() {
        return;
    }
    for (n, (name, c)) in terms.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        if n == 0 && first_on_line {
            let _ = write!(out, " {} {}", fmt_num(*c), name);
        } else if *c < 0.0 {
            let _ = write!(out, " - {} {}", fmt_num(-c), name);
        } else {
            let _ = write!(out, " + {} {}", fmt_num(*c), name);
        }
    }
}

fn named_terms(names: &[String], terms: &[(usize, f64)]) -> Vec<(String, f64)> {
    terms
        .iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|&(v, c)| (names[v].clone(), c))
        .collect()
}

/// CPLEX-style LP text; the variance row goes in a `[ ... ]` block.
pub fn write_lp(ir: &ModelIR) -> String {
    let names: Vec<String> = ir.vars().iter().map(|v| v.key.to_string()).collect();
    let mut out = String::new();
    out.push_str("\\ agrochemical supply chain model\nMinimize\n obj:");
    let obj = named_terms(&names, &ir.objective);
    if obj.is_empty() {
        let _ = write!(out, " 0 {}", names.first().map(String::as_str).unwrap_or("dummy"));
    }
    write_linear(&mut out, &obj, true);
    out.push_str("\nSubject To\n");
    for (row, name) in ir.rows.iter().zip(row_names(ir)) {
        let _ = write!(out, " {name}:");
        let terms = named_terms(&names, &row.terms);
        if terms.is_empty() {
            let _ = write!(out, " 0 {}", names[0]);
        }
        write_linear(&mut out, &terms, true);
        let _ = writeln!(out, " {} {}", row.sense.symbol(), fmt_num(row.rhs));
    }
    if let (Some(q), Some(name)) = (&ir.quadratic, quad_row_name(ir)) {
        let _ = write!(out, " {name}:");
        let linear = named_terms(&names, &q.linear);
        write_linear(&mut out, &linear, true);
        out.push_str(if linear.is_empty() { " [" } else { " + [" });
        for (n, &(i, j, c)) in q.quad.iter().filter(|t| t.2 != 0.0).enumerate() {
            if n > 0 && n % TERMS_PER_LINE == 0 {
                out.push_str("\n  ");
            }
            let sign = if n == 0 {
                if c < 0.0 { " -" } else { "" }
            } else if c < 0.0 {
                " -"
            } else {
                " +"
            };
            let term = if i == j {
                format!("{} ^2", names[i])
            } else {
                format!("{} * {}", names[i], names[j])
            };
            let _ = write!(out, "{sign} {} {term}", fmt_num(c.abs()));
        }
        let _ = writeln!(out, " ] <= {}", fmt_num(q.rhs));
    }
    out.push_str("Bounds\n");
    for (v, name) in ir.vars().iter().zip(&names) {
        let default = match v.kind {
            VarKind::Binary => (0.0, 1.0),
            _ => (0.0, f64::INFINITY),
        };
        if (v.lower, v.upper) == default {
            continue;
        }
        if v.lower == v.upper {
            let _ = writeln!(out, " {name} = {}", fmt_num(v.lower));
        } else if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else {
            let lo = if v.lower == f64::NEG_INFINITY { "-inf".into() } else { fmt_num(v.lower) };
            let hi = if v.upper == f64::INFINITY { "+inf".into() } else { fmt_num(v.upper) };
            let _ = writeln!(out, " {lo} <= {name} <= {hi}");
        }
    }
    for (header, kind) in [("General", VarKind::Integer), ("Binary", VarKind::Binary)] {
        let list: Vec<&String> = ir
            .vars()
            .iter()
            .zip(&names)
            .filter(|(v, _)| v.kind == kind)
            .map(|(_, n)| n)
            .collect();
        if list.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{header}");
        for chunk in list.chunks(TERMS_PER_LINE) {
            let line: Vec<&str> = chunk.iter().map(|s| s.as_str()).collect();
            let _ = writeln!(out, " {}", line.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

fn mps_sense(sense: Sense) -> &'static str {
    match sense {
        Sense::Le => "L",
        Sense::Ge => "G",
        Sense::Eq => "E",
    }
}

/// Free-format MPS with a `QCMATRIX` section for the variance row.
pub fn write_mps(ir: &ModelIR) -> String {
    let names: Vec<String> = ir.vars().iter().map(|v| v.key.to_string()).collect();
    let rnames = row_names(ir);
    let qname = quad_row_name(ir);
    let mut out = String::new();
    out.push_str("NAME agrochem_supply_chain\nOBJSENSE\n    MIN\nROWS\n N  obj\n");
    for (row, name) in ir.rows.iter().zip(&rnames) {
        let _ = writeln!(out, " {}  {name}", mps_sense(row.sense));
    }
    if let Some(name) = &qname {
        let _ = writeln!(out, " L  {name}");
    }

    let mut cols: Vec<Vec<(&str, f64)>> = vec![Vec::new(); ir.num_vars()];
    for &(v, c) in &ir.objective {
        if c != 0.0 {
            cols[v].push(("obj", c));
        }
    }
    for (row, name) in ir.rows.iter().zip(&rnames) {
        for &(v, c) in &row.terms {
            if c != 0.0 {
                cols[v].push((name.as_str(), c));
            }
        }
    }
    if let (Some(q), Some(name)) = (&ir.quadratic, &qname) {
        for &(v, c) in &q.linear {
            if c != 0.0 {
                cols[v].push((name.as_str(), c));
            }
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    for (v, var) in ir.vars().iter().enumerate() {
        let is_int = var.kind != VarKind::Continuous;
        if is_int != in_int {
            let marker = if is_int { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    MARKER  'MARKER'  '{marker}'");
            in_int = is_int;
        }
        if cols[v].is_empty() {
            let _ = writeln!(out, "    {}  obj  0", names[v]);
        }
        for (row, c) in &cols[v] {
            let _ = writeln!(out, "    {}  {row}  {}", names[v], fmt_num(*c));
        }
    }
    if in_int {
        out.push_str("    MARKER  'MARKER'  'INTEND'\n");
    }

    out.push_str("RHS\n");
    for (row, name) in ir.rows.iter().zip(&rnames) {
        if row.rhs != 0.0 {
            let _ = writeln!(out, "    RHS  {name}  {}", fmt_num(row.rhs));
        }
    }
    if let (Some(q), Some(name)) = (&ir.quadratic, &qname) {
        if q.rhs != 0.0 {
            let _ = writeln!(out, "    RHS  {name}  {}", fmt_num(q.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for (v, name) in ir.vars().iter().zip(&names) {
        if v.kind == VarKind::Binary {
            let _ = writeln!(out, " BV BND  {name}");
            if (v.lower, v.upper) != (0.0, 1.0) {
                write_mps_bounds(&mut out, name, v.lower, v.upper);
            }
            continue;
        }
        if (v.lower, v.upper) != (0.0, f64::INFINITY) || v.kind == VarKind::Integer {
            write_mps_bounds(&mut out, name, v.lower, v.upper);
        }
    }

    if let (Some(q), Some(name)) = (&ir.quadratic, &qname) {
        let _ = writeln!(out, "QCMATRIX  {name}");
        // full symmetric matrix; off-diagonal coefficients split in halves
        for &(i, j, c) in &q.quad {
            if c == 0.0 {
                continue;
            }
            if i == j {
                let _ = writeln!(out, "    {}  {}  {}", names[i], names[j], fmt_num(c));
            } else {
                let half = fmt_num(c / 2.0);
                let _ = writeln!(out, "    {}  {}  {half}", names[i], names[j]);
                let _ = writeln!(out, "    {}  {}  {half}", names[j], names[i]);
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

fn write_mps_bounds(out: &mut String, name: &str, lower: f64, upper: f64) {
    if lower == upper {
        let _ = writeln!(out, " FX BND  {name}  {}", fmt_num(lower));
        return;
    }
    if lower == f64::NEG_INFINITY {
        let _ = writeln!(out, " MI BND  {name}");
    } else {
        let _ = writeln!(out, " LO BND  {name}  {}", fmt_num(lower));
    }
    if upper == f64::INFINITY {
        let _ = writeln!(out, " PL BND  {name}");
    } else {
        let _ = writeln!(out, " UP BND  {name}  {}", fmt_num(upper));
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFile(msg.into())
}

fn parse_num(tok: &str) -> Result<f64> {
    let lower = tok.to_ascii_lowercase();
    let v = match lower.trim_start_matches('+') {
        "inf" | "infinity" => f64::INFINITY,
        "-inf" | "-infinity" => f64::NEG_INFINITY,
        _ => tok.parse::<f64>().map_err(|_| bad(format!("expected a number, got `{tok}`")))?,
    };
    Ok(clean_inf(v))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(&'static str),
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || "_!\"#$%&/,.;?@'`{}|~()".contains(c)
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        if two == "<=" || two == ">=" || two == "=<" || two == "=>" {
            toks.push(Tok::Op(if two.contains('<') { "<=" } else { ">=" }));
            i += 2;
            continue;
        }
        let op = match c {
            '+' => Some("+"),
            '-' => Some("-"),
            '*' => Some("*"),
            '^' => Some("^"),
            '[' => Some("["),
            ']' => Some("]"),
            ':' => Some(":"),
            '=' => Some("="),
            '<' => Some("<="),
            '>' => Some(">="),
            _ => None,
        };
        if let Some(op) = op {
            toks.push(Tok::Op(op));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
            let start = i;
            while i < chars.len() {
                let d = chars[i];
                let exponent_sign = i > start && (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E');
                if !(d.is_ascii_digit() || matches!(d, '.' | 'e' | 'E') || exponent_sign) {
                    break;
                }
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            toks.push(Tok::Num(parse_num(&s)?));
            continue;
        }
        if is_name_start(c) {
            let start = i;
            while i < chars.len()
                && !chars[i].is_whitespace()
                && !"+-*^[]:<>=".contains(chars[i])
            {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => toks.push(Tok::Num(f64::INFINITY)),
                _ => toks.push(Tok::Name(s)),
            }
            continue;
        }
        return Err(bad(format!("unexpected character `{c}`")));
    }
    Ok(toks)
}

#[derive(Clone, Copy, PartialEq)]
enum LpSection {
    None,
    Objective,
    Constraints,
    Bounds,
    General,
    Binary,
}

fn lp_section(line: &str) -> Option<LpSection> {
    let l = line.trim().to_ascii_lowercase();
    match l.as_str() {
        "minimize" | "minimum" | "min" => Some(LpSection::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(LpSection::Constraints),
        "bounds" | "bound" => Some(LpSection::Bounds),
        "general" | "generals" | "gen" => Some(LpSection::General),
        "binary" | "binaries" | "bin" => Some(LpSection::Binary),
        "end" => Some(LpSection::None),
        _ => None,
    }
}

struct Expr {
    linear: BTreeMap<String, f64>,
    quad: BTreeMap<(String, String), f64>,
}

/// Parses `[sign] [coef] name ... [ quad ]` up to a relational operator.
fn parse_expr(toks: &[Tok], pos: &mut usize) -> Result<Expr> {
    let mut expr = Expr {
        linear: BTreeMap::new(),
        quad: BTreeMap::new(),
    };
    let mut in_bracket = false;
    loop {
        match toks.get(*pos) {
            None => break,
            Some(Tok::Op(op)) if ["<=", ">=", "="].contains(op) => break,
            Some(Tok::Op("[")) => {
                in_bracket = true;
                *pos += 1;
                continue;
            }
            Some(Tok::Op("]")) => {
                in_bracket = false;
                *pos += 1;
                continue;
            }
            _ => {}
        }
        let mut sign = 1.0;
        while let Some(Tok::Op(op @ ("+" | "-"))) = toks.get(*pos) {
            if *op == "-" {
                sign = -sign;
            }
            *pos += 1;
        }
        if let Some(Tok::Op("[")) = toks.get(*pos) {
            continue;
        }
        let mut coef = 1.0;
        if let Some(Tok::Num(v)) = toks.get(*pos) {
            coef = *v;
            *pos += 1;
        }
        let name = match toks.get(*pos) {
            Some(Tok::Name(n)) => n.clone(),
            other => return Err(bad(format!("expected a variable name, got {other:?}"))),
        };
        *pos += 1;
        if in_bracket {
            match toks.get(*pos) {
                Some(Tok::Op("^")) => {
                    *pos += 1;
                    match toks.get(*pos) {
                        Some(Tok::Num(p)) if *p == 2.0 => *pos += 1,
                        other => return Err(bad(format!("expected exponent 2, got {other:?}"))),
                    }
                    *expr.quad.entry(quad_key(&name, &name)).or_insert(0.0) += sign * coef;
                }
                Some(Tok::Op("*")) => {
                    *pos += 1;
                    let other = match toks.get(*pos) {
                        Some(Tok::Name(n)) => n.clone(),
                        t => return Err(bad(format!("expected a variable after `*`, got {t:?}"))),
                    };
                    *pos += 1;
                    *expr.quad.entry(quad_key(&name, &other)).or_insert(0.0) += sign * coef;
                }
                other => return Err(bad(format!("expected `^` or `*` in quadratic term, got {other:?}"))),
            }
        } else {
            add_term(&mut expr.linear, &name, sign * coef);
        }
    }
    drop_zeros(&mut expr.linear);
    expr.quad.retain(|_, c| *c != 0.0);
    Ok(expr)
}

fn parse_signed_num(toks: &[Tok], pos: &mut usize) -> Result<f64> {
    let mut sign = 1.0;
    while let Some(Tok::Op(op @ ("+" | "-"))) = toks.get(*pos) {
        if *op == "-" {
            sign = -sign;
        }
        *pos += 1;
    }
    match toks.get(*pos) {
        Some(Tok::Num(v)) => {
            *pos += 1;
            Ok(sign * v)
        }
        other => Err(bad(format!("expected a number, got {other:?}"))),
    }
}

fn sense_of(op: &str) -> Sense {
    match op {
        "<=" => Sense::Le,
        ">=" => Sense::Ge,
        _ => Sense::Eq,
    }
}

/// Reads an LP file written by [`write_lp`] (or a compatible subset).
pub fn read_lp(text: &str) -> Result<ModelFile> {
    let mut file = ModelFile::default();
    let mut section = LpSection::None;
    let mut buffers: Vec<(LpSection, String)> = Vec::new();
    for raw in text.lines() {
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(s) = lp_section(line) {
            section = s;
            buffers.push((s, String::new()));
            continue;
        }
        match buffers.last_mut() {
            Some((s, buf)) if *s == section => {
                buf.push_str(line);
                buf.push('\n');
            }
            _ => return Err(bad(format!("content outside any section: `{}`", line.trim()))),
        }
    }

    let mut bounds: BTreeMap<String, (Option<f64>, Option<f64>)> = BTreeMap::new();
    let mut kinds: BTreeMap<String, VarKind> = BTreeMap::new();
    let mut seen: Vec<String> = Vec::new();

    for (section, buf) in &buffers {
        match section {
            LpSection::Objective => {
                let toks = tokenize(buf)?;
                let mut pos = 0;
                if let (Some(Tok::Name(_)), Some(Tok::Op(":"))) = (toks.first(), toks.get(1)) {
                    pos = 2;
                }
                let expr = parse_expr(&toks, &mut pos)?;
                seen.extend(expr.linear.keys().cloned());
                file.objective = expr.linear;
            }
            LpSection::Constraints => {
                let toks = tokenize(buf)?;
                let mut pos = 0;
                let mut unnamed = 0;
                while pos < toks.len() {
                    let name = match (toks.get(pos), toks.get(pos + 1)) {
                        (Some(Tok::Name(n)), Some(Tok::Op(":"))) => {
                            pos += 2;
                            n.clone()
                        }
                        _ => {
                            unnamed += 1;
                            format!("r_{unnamed}")
                        }
                    };
                    let expr = parse_expr(&toks, &mut pos)?;
                    let sense = match toks.get(pos) {
                        Some(Tok::Op(op)) => sense_of(op),
                        other => return Err(bad(format!("row {name}: expected a relation, got {other:?}"))),
                    };
                    pos += 1;
                    let rhs = parse_signed_num(&toks, &mut pos)?;
                    seen.extend(expr.linear.keys().cloned());
                    seen.extend(expr.quad.keys().flat_map(|(a, b)| [a.clone(), b.clone()]));
                    if expr.quad.is_empty() {
                        file.rows.insert(
                            name,
                            FileRow {
                                terms: expr.linear,
                                sense,
                                rhs,
                            },
                        );
                    } else {
                        if sense != Sense::Le {
                            return Err(bad(format!("quadratic row {name} must be `<=`")));
                        }
                        file.quadratic.insert(
                            name,
                            FileQuadRow {
                                quad: expr.quad,
                                linear: expr.linear,
                                rhs,
                            },
                        );
                    }
                }
            }
            LpSection::Bounds => {
                for line in buf.lines() {
                    let toks = tokenize(line)?;
                    parse_lp_bound(&toks, &mut bounds)
                        .map_err(|e| bad(format!("bound `{}`: {e}", line.trim())))?;
                }
            }
            LpSection::General | LpSection::Binary => {
                let kind = if *section == LpSection::Binary { VarKind::Binary } else { VarKind::Integer };
                for name in buf.split_whitespace() {
                    kinds.insert(name.to_string(), kind);
                }
            }
            LpSection::None => {}
        }
    }

    for name in seen.iter().chain(bounds.keys()).chain(kinds.keys()) {
        if file.columns.contains_key(name) {
            continue;
        }
        let kind = kinds.get(name).copied().unwrap_or(VarKind::Continuous);
        let default = if kind == VarKind::Binary { (0.0, 1.0) } else { (0.0, f64::INFINITY) };
        let (lo, hi) = bounds.get(name).copied().unwrap_or((None, None));
        file.columns.insert(
            name.clone(),
            FileColumn {
                kind,
                lower: lo.unwrap_or(default.0),
                upper: hi.unwrap_or(default.1),
            },
        );
    }
    Ok(file)
}

type BoundMap = BTreeMap<String, (Option<f64>, Option<f64>)>;

fn parse_lp_bound(toks: &[Tok], bounds: &mut BoundMap) -> Result<()> {
    let mut pos = 0;
    // `lo <= x <= hi`, `lo <= x`
    if !matches!(toks.first(), Some(Tok::Name(_))) {
        let lo = parse_signed_num(toks, &mut pos)?;
        if toks.get(pos) != Some(&Tok::Op("<=")) {
            return Err(bad("expected `<=` after lower bound"));
        }
        pos += 1;
        let Some(Tok::Name(name)) = toks.get(pos) else {
            return Err(bad("expected a variable"));
        };
        pos += 1;
        let entry = bounds.entry(name.clone()).or_default();
        entry.0 = Some(lo);
        if toks.get(pos) == Some(&Tok::Op("<=")) {
            pos += 1;
            entry.1 = Some(parse_signed_num(toks, &mut pos)?);
        }
        return Ok(());
    }
    let Some(Tok::Name(name)) = toks.first() else { unreachable!() };
    pos += 1;
    let entry = bounds.entry(name.clone()).or_default();
    match toks.get(pos) {
        Some(Tok::Name(w)) if w.eq_ignore_ascii_case("free") => {
            *entry = (Some(f64::NEG_INFINITY), Some(f64::INFINITY));
        }
        Some(Tok::Op(op)) => {
            let op = *op;
            pos += 1;
            let v = parse_signed_num(toks, &mut pos)?;
            match op {
                "=" => *entry = (Some(v), Some(v)),
                "<=" => entry.1 = Some(v),
                ">=" => entry.0 = Some(v),
                _ => return Err(bad("unexpected operator")),
            }
        }
        other => return Err(bad(format!("unexpected token {other:?}"))),
    }
    Ok(())
}

/// Reads a free-format MPS file written by [`write_mps`].
pub fn read_mps(text: &str) -> Result<ModelFile> {
    let mut file = ModelFile::default();
    let mut section = String::new();
    let mut row_sense: BTreeMap<String, Option<Sense>> = BTreeMap::new();
    let mut col_entries: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    let mut col_order: Vec<String> = Vec::new();
    let mut kinds: HashMap<String, VarKind> = HashMap::new();
    let mut bounds: BoundMap = BTreeMap::new();
    let mut rhs: BTreeMap<String, f64> = BTreeMap::new();
    let mut qc_row: Option<String> = None;
    let mut qc: BTreeMap<String, BTreeMap<(String, String), f64>> = BTreeMap::new();
    let mut in_int = false;

    for raw in text.lines() {
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = fields[0].to_ascii_uppercase();
            if section == "QCMATRIX" {
                let name = fields.get(1).ok_or_else(|| bad("QCMATRIX without row name"))?;
                qc_row = Some(name.to_string());
                qc.entry(name.to_string()).or_default();
            }
            continue;
        }
        match section.as_str() {
            "OBJSENSE" => {
                if !fields[0].eq_ignore_ascii_case("MIN") {
                    return Err(bad("only minimization is supported"));
                }
            }
            "ROWS" => {
                let sense = match fields[0] {
                    "N" => None,
                    "L" => Some(Sense::Le),
                    "G" => Some(Sense::Ge),
                    "E" => Some(Sense::Eq),
                    other => return Err(bad(format!("unknown row type {other}"))),
                };
                row_sense.insert(fields[1].to_string(), sense);
            }
            "COLUMNS" => {
                if fields.get(1) == Some(&"'MARKER'") {
                    in_int = fields.get(2) == Some(&"'INTORG'");
                    continue;
                }
                let col = fields[0].to_string();
                if !col_entries.contains_key(&col) {
                    col_order.push(col.clone());
                    kinds.insert(
                        col.clone(),
                        if in_int { VarKind::Integer } else { VarKind::Continuous },
                    );
                }
                let entries = col_entries.entry(col).or_default();
                for pair in fields[1..].chunks(2) {
                    if pair.len() != 2 {
                        return Err(bad(format!("odd COLUMNS line `{}`", raw.trim())));
                    }
                    entries.push((pair[0].to_string(), parse_num(pair[1])?));
                }
            }
            "RHS" => {
                for pair in fields[1..].chunks(2) {
                    if pair.len() != 2 {
                        return Err(bad(format!("odd RHS line `{}`", raw.trim())));
                    }
                    rhs.insert(pair[0].to_string(), parse_num(pair[1])?);
                }
            }
            "BOUNDS" => {
                let kind = fields[0];
                let col = fields
                    .get(2)
                    .ok_or_else(|| bad(format!("short BOUNDS line `{}`", raw.trim())))?
                    .to_string();
                let value = fields.get(3).map(|v| parse_num(v)).transpose()?;
                let entry = bounds.entry(col.clone()).or_default();
                match kind {
                    "UP" => entry.1 = value,
                    "LO" => entry.0 = value,
                    "FX" => *entry = (value, value),
                    "MI" => entry.0 = Some(f64::NEG_INFINITY),
                    "PL" => entry.1 = Some(f64::INFINITY),
                    "FR" => *entry = (Some(f64::NEG_INFINITY), Some(f64::INFINITY)),
                    "BV" => {
                        kinds.insert(col, VarKind::Binary);
                        *entry = (Some(0.0), Some(1.0));
                    }
                    other => return Err(bad(format!("unsupported bound type {other}"))),
                }
            }
            "QCMATRIX" => {
                let row = qc_row.clone().expect("set with section");
                if fields.len() != 3 {
                    return Err(bad(format!("bad QCMATRIX line `{}`", raw.trim())));
                }
                *qc.get_mut(&row)
                    .expect("row present")
                    .entry(quad_key(fields[0], fields[1]))
                    .or_insert(0.0) += parse_num(fields[2])?;
            }
            "NAME" | "ENDATA" => {}
            other => return Err(bad(format!("unsupported section {other}"))),
        }
    }

    let mut linear: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for col in &col_order {
        for (row, c) in &col_entries[col] {
            match row_sense.get(row) {
                Some(None) => add_term(&mut file.objective, col, *c),
                Some(Some(_)) => add_term(linear.entry(row.clone()).or_default(), col, *c),
                None => return Err(bad(format!("column {col} references unknown row {row}"))),
            }
        }
        let kind = kinds[col];
        let default = if kind == VarKind::Binary { (0.0, 1.0) } else { (0.0, f64::INFINITY) };
        let (lo, hi) = bounds.get(col).copied().unwrap_or((None, None));
        file.columns.insert(
            col.clone(),
            FileColumn {
                kind,
                lower: lo.unwrap_or(default.0),
                upper: hi.unwrap_or(default.1),
            },
        );
    }
    drop_zeros(&mut file.objective);
    for (row, sense) in &row_sense {
        let Some(sense) = sense else { continue };
        let mut terms = linear.remove(row).unwrap_or_default();
        drop_zeros(&mut terms);
        let r = rhs.get(row).copied().unwrap_or(0.0);
        if let Some(mut quad) = qc.remove(row) {
            quad.retain(|_, c| *c != 0.0);
            file.quadratic.insert(
                row.clone(),
                FileQuadRow {
                    quad,
                    linear: terms,
                    rhs: r,
                },
            );
        } else {
            file.rows.insert(
                row.clone(),
                FileRow {
                    terms,
                    sense: *sense,
                    rhs: r,
                },
            );
        }
    }
    Ok(file)
}
