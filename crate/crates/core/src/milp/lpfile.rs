//! LP interchange text: writer for [`ModelInstance`] and a reader for the
//! same dialect (sections `Minimize`, `Subject To`, `Bounds`, `Binaries`,
//! `End`; `\` starts a comment).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{ModelInstance, ModelVariant, VarKind};

const TERMS_PER_LINE: usize = 6;

#[derive(Debug, Error)]
pub enum LpFormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

fn syntax(line: usize, message: impl Into<String>) -> LpFormatError {
    LpFormatError::Syntax {
        line,
        message: message.into(),
    }
}

/// 17 significant digits in exponent form with redundant mantissa zeros removed.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "+inf" } else { "-inf" }.to_string();
    }
    let s = format!("{v:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    if exp == "0" {
        mantissa.to_string()
    } else {
        format!("{mantissa}e{exp}")
    }
}

fn push_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    for (k, (c, name)) in terms.enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        if k == 0 {
            if c < 0.0 {
                let _ = write!(out, " - {} {name}", format_number(-c));
            } else {
                let _ = write!(out, " {} {name}", format_number(c));
            }
        } else if c < 0.0 {
            let _ = write!(out, " - {} {name}", format_number(-c));
        } else {
            let _ = write!(out, " + {} {name}", format_number(c));
        }
    }
}

/// Serializes `m`. Rows are written in model order, which is `(receiver, network)`.
pub fn write_lp(m: &ModelInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ model: {}", m.variant);
    out.push_str("Minimize\n obj:");
    if m.objective.is_empty() {
        if let Some(v) = m.variables.first() {
            let _ = write!(out, " 0 {}", v.name);
        }
    } else {
        push_terms(
            &mut out,
            m.objective.iter().map(|&(j, c)| (c, m.variables[j].name.clone())),
        );
    }
    out.push_str("\nSubject To\n");
    for row in &m.rows {
        let terms: Vec<(f64, String)> = row
            .terms
            .iter()
            .map(|&(j, c)| (c, m.variables[j].name.clone()))
            .chain(row.shortfall.map(|j| (row.shortfall_coef, m.variables[j].name.clone())))
            .collect();
        if terms.is_empty() {
            let _ = writeln!(out, "\\ constant {}: 0 >= {}", row.name, format_number(row.rhs));
            continue;
        }
        let _ = write!(out, " {}:", row.name);
        push_terms(&mut out, terms.into_iter());
        let _ = writeln!(out, " >= {}", format_number(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in m.variables.iter().filter(|v| v.kind == VarKind::Continuous) {
        if v.upper.is_infinite() {
            let _ = writeln!(out, " {} >= {}", v.name, format_number(v.lower));
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", format_number(v.lower), v.name, format_number(v.upper));
        }
    }
    if matches!(m.variant, ModelVariant::Milp(_)) {
        out.push_str("Binaries\n");
        for v in m.variables.iter().filter(|v| v.kind == VarKind::Binary) {
            let _ = writeln!(out, " {}", v.name);
        }
    }
    out.push_str("End\n");
    out
}

pub fn export_model(m: &ModelInstance, path: impl AsRef<Path>) -> Result<(), LpFormatError> {
    let path = path.as_ref();
    fs::write(path, write_lp(m)).map_err(|source| LpFormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Parsed LP file. Variables absent from `bounds` default to `[0, +∞)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpFile {
    pub objective: Vec<(String, f64)>,
    pub rows: Vec<LpRow>,
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub binaries: Vec<String>,
}

impl LpFile {
    pub fn bounds_of(&self, name: &str) -> (f64, f64) {
        if self.binaries.iter().any(|b| b == name) {
            return (0.0, 1.0);
        }
        self.bounds.get(name).copied().unwrap_or((0.0, f64::INFINITY))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_header(line: &str) -> Option<Section> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    match l.as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

fn parse_sense(tok: &str) -> Option<Sense> {
    match tok {
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "<=" | "=<" | "<" => Some(Sense::Le),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// Linear expression `[±] [coef] name ...` starting at `toks[i]`; stops at a sense token or the end.
fn parse_expr(toks: &[(usize, String)], mut i: usize) -> Result<(Vec<(String, f64)>, usize), LpFormatError> {
    let mut terms = Vec::new();
    while i < toks.len() && parse_sense(&toks[i].1).is_none() {
        let line = toks[i].0;
        let mut sign = 1.0;
        while i < toks.len() && (toks[i].1 == "+" || toks[i].1 == "-") {
            if toks[i].1 == "-" {
                sign = -sign;
            }
            i += 1;
        }
        let tok = toks.get(i).ok_or_else(|| syntax(line, "dangling sign"))?;
        let coef = match parse_number(&tok.1) {
            Some(c) => {
                i += 1;
                c
            }
            None => 1.0,
        };
        let name = toks.get(i).ok_or_else(|| syntax(line, "coefficient without variable"))?;
        if parse_sense(&name.1).is_some() || parse_number(&name.1).is_some() {
            return Err(syntax(name.0, format!("expected variable name, found '{}'", name.1)));
        }
        terms.push((name.1.clone(), sign * coef));
        i += 1;
    }
    Ok((terms, i))
}

fn tokens(lines: &[(usize, String)]) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (n, l) in lines {
        for t in l.split_whitespace() {
            // split "name:" and "name:term" forms
            if let Some((head, tail)) = t.split_once(':') {
                out.push((*n, format!("{head}:")));
                if !tail.is_empty() {
                    out.push((*n, tail.to_string()));
                }
            } else if t.len() > 1 && (t.starts_with('-') || t.starts_with('+')) && parse_number(t).is_none() {
                // "-x" is a sign followed by a variable
                out.push((*n, t[..1].to_string()));
                out.push((*n, t[1..].to_string()));
            } else {
                out.push((*n, t.to_string()));
            }
        }
    }
    out
}

fn parse_objective(lines: &[(usize, String)]) -> Result<Vec<(String, f64)>, LpFormatError> {
    let toks = tokens(lines);
    let start = usize::from(toks.first().is_some_and(|t| t.1.ends_with(':')));
    let (terms, end) = parse_expr(&toks, start)?;
    if let Some(t) = toks.get(end) {
        return Err(syntax(t.0, "unexpected relation in objective"));
    }
    Ok(terms.into_iter().filter(|(_, c)| *c != 0.0).collect())
}

fn parse_constraints(lines: &[(usize, String)]) -> Result<Vec<LpRow>, LpFormatError> {
    let toks = tokens(lines);
    let mut rows = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let name = if toks[i].1.ends_with(':') {
            let n = toks[i].1.trim_end_matches(':').to_string();
            i += 1;
            n
        } else {
            format!("R{}", rows.len() + 1)
        };
        let (terms, next) = parse_expr(&toks, i)?;
        i = next;
        let (line, sense_tok) = toks
            .get(i)
            .ok_or_else(|| syntax(toks.last().map_or(0, |t| t.0), format!("row {name}: missing relation")))?;
        let sense = parse_sense(sense_tok).expect("parse_expr stops at a relation");
        i += 1;
        let mut sign = 1.0;
        if toks.get(i).is_some_and(|t| t.1 == "-" || t.1 == "+") {
            if toks[i].1 == "-" {
                sign = -1.0;
            }
            i += 1;
        }
        let rhs = toks
            .get(i)
            .and_then(|t| parse_number(&t.1))
            .ok_or_else(|| syntax(*line, format!("row {name}: missing right-hand side")))?;
        i += 1;
        rows.push(LpRow {
            name,
            terms,
            sense,
            rhs: sign * rhs,
        });
    }
    Ok(rows)
}

fn parse_bound_line(
    line: usize,
    text: &str,
    bounds: &mut BTreeMap<String, (f64, f64)>,
) -> Result<(), LpFormatError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let entry = |bounds: &mut BTreeMap<String, (f64, f64)>, name: &str| {
        *bounds.entry(name.to_string()).or_insert((0.0, f64::INFINITY))
    };
    let bad = || syntax(line, format!("unrecognized bound '{text}'"));
    match toks.as_slice() {
        [name, free] if free.eq_ignore_ascii_case("free") => {
            bounds.insert(name.to_string(), (f64::NEG_INFINITY, f64::INFINITY));
        }
        [lo, s1, name, s2, hi] => {
            let (lo, hi) = (parse_number(lo).ok_or_else(bad)?, parse_number(hi).ok_or_else(bad)?);
            match (parse_sense(s1), parse_sense(s2)) {
                (Some(Sense::Le), Some(Sense::Le)) => bounds.insert(name.to_string(), (lo, hi)),
                (Some(Sense::Ge), Some(Sense::Ge)) => bounds.insert(name.to_string(), (hi, lo)),
                _ => return Err(bad()),
            };
        }
        [a, s, b] => {
            let sense = parse_sense(s).ok_or_else(bad)?;
            // either "name op value" or "value op name"
            let (name, value, sense) = match (parse_number(a), parse_number(b)) {
                (None, Some(v)) => (*a, v, sense),
                (Some(v), None) => (
                    *b,
                    v,
                    match sense {
                        Sense::Ge => Sense::Le,
                        Sense::Le => Sense::Ge,
                        Sense::Eq => Sense::Eq,
                    },
                ),
                _ => return Err(bad()),
            };
            let (lo, hi) = entry(bounds, name);
            let b = match sense {
                Sense::Ge => (value, hi),
                Sense::Le => (lo, value),
                Sense::Eq => (value, value),
            };
            bounds.insert(name.to_string(), b);
        }
        _ => return Err(bad()),
    }
    Ok(())
}

pub fn read_lp(text: &str) -> Result<LpFile, LpFormatError> {
    let mut section = Section::Preamble;
    let mut buckets: BTreeMap<u8, Vec<(usize, String)>> = BTreeMap::new();
    let mut file = LpFile::default();
    for (n, raw) in text.lines().enumerate() {
        let n = n + 1;
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_header(line) {
            section = s;
            continue;
        }
        match section {
            Section::Preamble => return Err(syntax(n, "content before the objective section")),
            Section::End => return Err(syntax(n, "content after End")),
            Section::Objective => buckets.entry(0).or_default().push((n, line.to_string())),
            Section::Constraints => buckets.entry(1).or_default().push((n, line.to_string())),
            Section::Bounds => parse_bound_line(n, line, &mut file.bounds)?,
            Section::Binaries => file.binaries.extend(line.split_whitespace().map(str::to_string)),
        }
    }
    if section != Section::End {
        return Err(syntax(text.lines().count(), "missing End"));
    }
    file.objective = parse_objective(buckets.get(&0).map_or(&[][..], Vec::as_slice))?;
    file.rows = parse_constraints(buckets.get(&1).map_or(&[][..], Vec::as_slice))?;
    Ok(file)
}
