//! CPLEX LP text format.
//!
//! The writer lists every variable in the `Bounds` section in index order so
//! that reading a file back restores the original variable numbering.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::model::{Cmp, LinearModel, Sense, Var, VarKind};

const TERMS_PER_LINE: usize = 8;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LpFormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing objective section")]
    MissingObjective,
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn write_terms(out: &mut String, model: &LinearModel, terms: &[(Var, f64)]) {
    if terms.is_empty() {
        // The format has no empty linear expression; a zero term stands in.
        if !model.vars.is_empty() {
            let _ = write!(out, " 0 {}", model.vars[0].name);
        }
        return;
    }
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let name = &model.vars[v.0].name;
        let sign = if c.is_sign_negative() { '-' } else { '+' };
        if k == 0 && sign == '+' {
            let _ = write!(out, " {} {}", num(c.abs()), name);
        } else {
            let _ = write!(out, " {} {} {}", sign, num(c.abs()), name);
        }
    }
}

/// Serialises `model` in CPLEX LP format.
pub fn write_lp(model: &LinearModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem name: {}", model.name);
    if let Some(e) = model.epigraph {
        let _ = writeln!(out, "\\ Epigraph: {}", model.vars[e.0].name);
    }
    out.push_str(match model.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    write_terms(&mut out, model, &model.objective);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        write_terms(&mut out, model, &c.terms);
        let _ = writeln!(out, " {} {}", c.cmp, num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.vars {
        let _ = writeln!(out, " {} <= {} <= {}", num(v.lb), v.name, num(v.ub));
    }
    let bins: Vec<&str> = model
        .vars
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    let gens: Vec<&str> = model
        .vars
        .iter()
        .filter(|v| v.kind == VarKind::Integer)
        .map(|v| v.name.as_str())
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for b in bins {
            let _ = writeln!(out, " {b}");
        }
    }
    if !gens.is_empty() {
        out.push_str("Generals\n");
        for g in gens {
            let _ = writeln!(out, " {g}");
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "maximize" | "maximise" | "max" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "generals" | "general" | "gen" => Some(Section::Generals),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn parse_num(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "+inf" | "inf" | "+infinity" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        t if t.starts_with(|c: char| c.is_ascii_digit() || c == '.' || c == '-' || c == '+') => {
            tok.parse().ok()
        }
        _ => None,
    }
}

fn parse_cmp(tok: &str) -> Option<Cmp> {
    match tok {
        "<=" | "=<" | "<" => Some(Cmp::Le),
        ">=" | "=>" | ">" => Some(Cmp::Ge),
        "=" => Some(Cmp::Eq),
        _ => None,
    }
}

struct Pending {
    name: String,
    terms: Vec<(String, f64)>,
    cmp: Cmp,
    rhs: f64,
}

/// Parses linear terms `[+|-] [coef] name ...` from tokens.
fn parse_terms(toks: &[&str], line: usize) -> Result<Vec<(String, f64)>, LpFormatError> {
    let mut terms = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let mut sign = 1.0;
        if toks[i] == "+" || toks[i] == "-" {
            if toks[i] == "-" {
                sign = -1.0;
            }
            i += 1;
        }
        let Some(&t) = toks.get(i) else {
            return Err(LpFormatError::Parse {
                line,
                msg: "dangling sign".into(),
            });
        };
        let (coef, name) = match parse_num(t) {
            Some(c) => {
                let Some(&n) = toks.get(i + 1) else {
                    return Err(LpFormatError::Parse {
                        line,
                        msg: format!("coefficient `{t}` without variable"),
                    });
                };
                i += 2;
                (c, n)
            }
            None => {
                i += 1;
                (1.0, t)
            }
        };
        terms.push((name.to_string(), sign * coef));
    }
    Ok(terms)
}

/// Parses CPLEX LP text produced by [`write_lp`] or written by hand in the
/// same subset of the format.
pub fn read_lp(text: &str) -> Result<LinearModel, LpFormatError> {
    let mut name = String::from("model");
    let mut epigraph_name: Option<String> = None;
    let mut sense = None;
    let mut section = Section::Preamble;
    let mut objective_toks: Vec<String> = Vec::new();
    let mut constraint_toks: Vec<(usize, String)> = Vec::new();
    let mut bounds: Vec<(usize, String)> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    let mut generals: Vec<String> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix('\\') {
            let rest = rest.trim();
            if let Some(n) = rest.strip_prefix("Problem name:") {
                name = n.trim().to_string();
            } else if let Some(n) = rest.strip_prefix("Epigraph:") {
                epigraph_name = Some(n.trim().to_string());
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        if let Some(s) = section_of(trimmed) {
            if s == Section::Objective {
                sense = Some(if trimmed.to_ascii_lowercase().starts_with("max") {
                    Sense::Maximize
                } else {
                    Sense::Minimize
                });
            }
            section = s;
            continue;
        }
        match section {
            Section::Preamble | Section::End => {
                return Err(LpFormatError::Parse {
                    line: line_no,
                    msg: format!("unexpected text `{trimmed}`"),
                })
            }
            Section::Objective => objective_toks.extend(trimmed.split_whitespace().map(String::from)),
            Section::Constraints => {
                for t in trimmed.split_whitespace() {
                    constraint_toks.push((line_no, t.to_string()));
                }
            }
            Section::Bounds => bounds.push((line_no, trimmed.to_string())),
            Section::Binaries => binaries.extend(trimmed.split_whitespace().map(String::from)),
            Section::Generals => generals.extend(trimmed.split_whitespace().map(String::from)),
        }
    }
    let sense = sense.ok_or(LpFormatError::MissingObjective)?;

    // Objective.
    let mut otoks: Vec<&str> = objective_toks.iter().map(String::as_str).collect();
    if otoks.first().is_some_and(|t| t.ends_with(':')) {
        otoks.remove(0);
    }
    let objective = parse_terms(&otoks, 0)?;

    // Constraints: `name:` terms cmp rhs.
    let mut pending = Vec::new();
    let mut i = 0;
    let mut auto = 0usize;
    while i < constraint_toks.len() {
        let (line, ref first) = constraint_toks[i];
        let cname = if let Some(n) = first.strip_suffix(':') {
            i += 1;
            n.to_string()
        } else {
            auto += 1;
            format!("R{auto}")
        };
        let start = i;
        while i < constraint_toks.len() && parse_cmp(&constraint_toks[i].1).is_none() {
            i += 1;
        }
        let Some((_, op)) = constraint_toks.get(i) else {
            return Err(LpFormatError::Parse {
                line,
                msg: format!("constraint `{cname}` has no comparison"),
            });
        };
        let cmp = parse_cmp(op).unwrap_or(Cmp::Eq);
        let toks: Vec<&str> = constraint_toks[start..i].iter().map(|(_, t)| t.as_str()).collect();
        let terms = parse_terms(&toks, line)?;
        let rhs_tok = constraint_toks.get(i + 1).map(|(_, t)| t.as_str()).unwrap_or("");
        let rhs = parse_num(rhs_tok).ok_or_else(|| LpFormatError::Parse {
            line,
            msg: format!("bad right-hand side `{rhs_tok}`"),
        })?;
        i += 2;
        pending.push(Pending {
            name: cname,
            terms,
            cmp,
            rhs,
        });
    }

    // Variable order: Bounds first, then first appearance elsewhere.
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut bound_of: HashMap<String, (Option<f64>, Option<f64>)> = HashMap::new();
    let mut intern = |n: &str, order: &mut Vec<String>| {
        if !index.contains_key(n) {
            index.insert(n.to_string(), order.len());
            order.push(n.to_string());
        }
        index[n]
    };
    for (line, b) in &bounds {
        let toks: Vec<&str> = b.split_whitespace().collect();
        let err = || LpFormatError::Parse {
            line: *line,
            msg: format!("bad bound `{b}`"),
        };
        let (var, lo, hi) = match toks.as_slice() {
            [l, "<=", v, "<=", u] => (*v, Some(parse_num(l).ok_or_else(err)?), Some(parse_num(u).ok_or_else(err)?)),
            [v, f] if f.eq_ignore_ascii_case("free") => (*v, Some(f64::NEG_INFINITY), Some(f64::INFINITY)),
            [v, "=", x] => {
                let x = parse_num(x).ok_or_else(err)?;
                (*v, Some(x), Some(x))
            }
            [v, op, x] if parse_num(v).is_none() => {
                let x = parse_num(x).ok_or_else(err)?;
                match parse_cmp(op) {
                    Some(Cmp::Le) => (*v, None, Some(x)),
                    Some(Cmp::Ge) => (*v, Some(x), None),
                    _ => return Err(err()),
                }
            }
            [x, op, v] => {
                let x = parse_num(x).ok_or_else(err)?;
                match parse_cmp(op) {
                    Some(Cmp::Le) => (*v, Some(x), None),
                    Some(Cmp::Ge) => (*v, None, Some(x)),
                    _ => return Err(err()),
                }
            }
            _ => return Err(err()),
        };
        intern(var, &mut order);
        let e = bound_of.entry(var.to_string()).or_insert((None, None));
        if lo.is_some() {
            e.0 = lo;
        }
        if hi.is_some() {
            e.1 = hi;
        }
    }
    for (n, _) in &objective {
        intern(n, &mut order);
    }
    for p in &pending {
        for (n, _) in &p.terms {
            intern(n, &mut order);
        }
    }
    for n in binaries.iter().chain(&generals) {
        intern(n, &mut order);
    }

    let mut model = LinearModel::new(name, sense);
    for n in &order {
        let kind = if binaries.contains(n) {
            VarKind::Binary
        } else if generals.contains(n) {
            VarKind::Integer
        } else {
            VarKind::Continuous
        };
        let (dl, du) = match kind {
            VarKind::Binary => (0.0, 1.0),
            _ => (0.0, f64::INFINITY),
        };
        let (lo, hi) = bound_of.get(n).copied().unwrap_or((None, None));
        let v = model.add_var(n.clone(), VarKind::Continuous, lo.unwrap_or(dl), hi.unwrap_or(du));
        model.vars[v.0].kind = kind;
    }
    let lookup: HashMap<&str, Var> = order.iter().enumerate().map(|(k, n)| (n.as_str(), Var(k))).collect();
    model.set_objective(objective.iter().map(|(n, c)| (lookup[n.as_str()], *c)).collect());
    for p in pending {
        let terms = p.terms.iter().map(|(n, c)| (lookup[n.as_str()], *c)).collect();
        model.add_constraint(p.name, terms, p.cmp, p.rhs);
    }
    if let Some(e) = epigraph_name {
        model.epigraph = lookup.get(e.as_str()).copied();
    }
    Ok(model)
}
