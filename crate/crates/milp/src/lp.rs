//! CPLEX-LP writer and reader.
//!
//! The writer is deterministic and lists every variable in the `Bounds`
//! section in registration order, which lets [`parse_lp`] rebuild the exact
//! column order and makes export → parse → export byte-identical.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::expr::{LinExpr, VarId};
use crate::model::{ConstraintSense, Domain, Model, ModelError};
use crate::ParseError;

const TERMS_PER_LINE: usize = 8;

/// Shortest round-trip decimal; exponent form for very large or small
/// magnitudes.
pub(crate) fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn write_expr(out: &mut String, model: &Model, expr: &LinExpr, include_constant: bool) {
    let mut n = 0;
    for &(v, c) in expr.terms() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let name = &model.var(v).name;
        if n == 0 {
            if c < 0.0 {
                let _ = write!(out, " - {} {}", fmt_num(-c), name);
            } else {
                let _ = write!(out, " {} {}", fmt_num(c), name);
            }
        } else if c < 0.0 {
            let _ = write!(out, " - {} {}", fmt_num(-c), name);
        } else {
            let _ = write!(out, " + {} {}", fmt_num(c), name);
        }
        n += 1;
    }
    let k = expr.constant();
    if include_constant && (k != 0.0 || n == 0) {
        if n == 0 {
            let _ = write!(out, " {}", fmt_num(k));
        } else if k < 0.0 {
            let _ = write!(out, " - {}", fmt_num(-k));
        } else {
            let _ = write!(out, " + {}", fmt_num(k));
        }
    } else if n == 0 {
        // Rows need at least one term; an empty row is written against the
        // first column with a zero coefficient.
        match model.variables().first() {
            Some(v) => {
                let _ = write!(out, " 0 {}", v.name);
            }
            None => out.push_str(" 0"),
        }
    }
}

/// Serializes the model as CPLEX-LP text.
pub fn write_lp(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\Problem name: {}", model.name());
    out.push_str("Minimize\n obj:");
    write_expr(&mut out, model, model.objective(), true);
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}:", c.name);
        write_expr(&mut out, model, &c.expr, false);
        let _ = writeln!(out, " {} {}", c.sense, fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.variables() {
        if v.upper.is_infinite() {
            let _ = writeln!(out, " {} >= {}", v.name, fmt_num(v.lower));
        } else {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                fmt_num(v.lower),
                v.name,
                fmt_num(v.upper)
            );
        }
    }
    let binaries: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| v.domain == Domain::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn section_header(line: &str) -> Option<Section> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.trim_end_matches(':');
    match l {
        "minimize" | "minimise" | "minimum" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." | "st." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binary" | "binaries" | "bin" => Some(Section::Binaries),
        "general" | "generals" | "gen" | "integer" | "integers" => Some(Section::Generals),
        "end" => Some(Section::End),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Plus,
    Minus,
    Colon,
    Sense(ConstraintSense),
}

fn parse_number(s: &str) -> Option<f64> {
    let lower = s.to_ascii_lowercase();
    match lower.as_str() {
        "inf" | "infinity" | "+inf" | "+infinity" => return Some(f64::INFINITY),
        "-inf" | "-infinity" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    let first = s.chars().next()?;
    if !(first.is_ascii_digit() || first == '.') {
        return None;
    }
    s.parse::<f64>().ok()
}

fn tokenize(text: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut toks = Vec::new();
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '+' => {
                toks.push((Tok::Plus, line_no));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, line_no));
                i += 1;
            }
            ':' => {
                toks.push((Tok::Colon, line_no));
                i += 1;
            }
            '<' | '>' | '=' => {
                let mut op = String::from(c);
                if i + 1 < bytes.len() && matches!(bytes[i + 1], '<' | '>' | '=') {
                    op.push(bytes[i + 1]);
                    i += 1;
                }
                i += 1;
                let sense = match op.as_str() {
                    "<" | "<=" | "=<" => ConstraintSense::Le,
                    ">" | ">=" | "=>" => ConstraintSense::Ge,
                    "=" | "==" => ConstraintSense::Eq,
                    _ => {
                        return Err(ParseError::at(line_no, format!("bad operator `{op}`")))
                    }
                };
                toks.push((Tok::Sense(sense), line_no));
            }
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_whitespace()
                    && !matches!(bytes[i], '+' | '-' | ':' | '<' | '>' | '=')
                {
                    i += 1;
                }
                // exponent sign belongs to the number, e.g. 1e-5
                while i < bytes.len()
                    && matches!(bytes[i], '+' | '-')
                    && matches!(bytes[i - 1], 'e' | 'E')
                    && bytes[start].is_ascii_digit()
                {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let word: String = bytes[start..i].iter().collect();
                match parse_number(&word) {
                    Some(x) => toks.push((Tok::Num(x), line_no)),
                    None => {
                        let lw = word.to_ascii_lowercase();
                        if lw == "inf" || lw == "infinity" {
                            toks.push((Tok::Num(f64::INFINITY), line_no));
                        } else if word.starts_with(|ch: char| ch.is_ascii_digit() || ch == '.') {
                            // coefficient glued to a name, e.g. `3y`
                            let split = (1..word.len())
                                .rev()
                                .find(|&k| word[..k].parse::<f64>().is_ok())
                                .ok_or_else(|| {
                                    ParseError::at(line_no, format!("bad token `{word}`"))
                                })?;
                            toks.push((Tok::Num(word[..split].parse().unwrap()), line_no));
                            toks.push((Tok::Name(word[split..].to_string()), line_no));
                        } else {
                            toks.push((Tok::Name(word), line_no));
                        }
                    }
                }
            }
        }
    }
    Ok(toks)
}

/// Linear expression with names not yet resolved to handles.
#[derive(Debug, Default)]
struct RawExpr {
    terms: Vec<(String, f64)>,
    constant: f64,
}

/// Parses terms from `toks[pos..]` until a sense operator or the end.
fn parse_terms(toks: &[(Tok, usize)], pos: &mut usize) -> Result<RawExpr, ParseError> {
    let mut expr = RawExpr::default();
    while *pos < toks.len() {
        if matches!(toks[*pos].0, Tok::Sense(_)) {
            break;
        }
        let line = toks[*pos].1;
        let mut sign = 1.0;
        let mut saw_sign = false;
        while *pos < toks.len() {
            match toks[*pos].0 {
                Tok::Plus => {
                    saw_sign = true;
                    *pos += 1;
                }
                Tok::Minus => {
                    saw_sign = true;
                    sign = -sign;
                    *pos += 1;
                }
                _ => break,
            }
        }
        let mut coef = None;
        if let Some((Tok::Num(x), _)) = toks.get(*pos) {
            coef = Some(*x);
            *pos += 1;
        }
        match toks.get(*pos) {
            Some((Tok::Name(n), _)) => {
                expr.terms.push((n.clone(), sign * coef.unwrap_or(1.0)));
                *pos += 1;
            }
            _ => match coef {
                Some(x) => expr.constant += sign * x,
                None if saw_sign => {
                    return Err(ParseError::at(line, "dangling sign in expression"))
                }
                None => return Err(ParseError::at(line, "unexpected token in expression")),
            },
        }
    }
    Ok(expr)
}

struct RawRow {
    name: Option<String>,
    expr: RawExpr,
    sense: ConstraintSense,
    rhs: f64,
}

fn split_label(toks: &[(Tok, usize)], pos: &mut usize) -> Option<String> {
    if let (Some((Tok::Name(n), _)), Some((Tok::Colon, _))) = (toks.get(*pos), toks.get(*pos + 1))
    {
        *pos += 2;
        return Some(n.clone());
    }
    None
}

fn parse_rows(toks: &[(Tok, usize)]) -> Result<Vec<RawRow>, ParseError> {
    let mut rows = Vec::new();
    let mut pos = 0;
    while pos < toks.len() {
        let name = split_label(toks, &mut pos);
        let expr = parse_terms(toks, &mut pos)?;
        let line = toks.get(pos).map(|t| t.1).unwrap_or(0);
        let sense = match toks.get(pos) {
            Some((Tok::Sense(s), _)) => *s,
            _ => return Err(ParseError::at(line, "constraint without sense operator")),
        };
        pos += 1;
        let mut sign = 1.0;
        while let Some((Tok::Plus | Tok::Minus, _)) = toks.get(pos) {
            if toks[pos].0 == Tok::Minus {
                sign = -sign;
            }
            pos += 1;
        }
        let rhs = match toks.get(pos) {
            Some((Tok::Num(x), _)) => sign * x,
            _ => return Err(ParseError::at(line, "constraint without numeric right-hand side")),
        };
        pos += 1;
        rows.push(RawRow {
            name,
            expr,
            sense,
            rhs,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
struct RawBound {
    lower: f64,
    upper: f64,
}

fn signed_num(toks: &[(Tok, usize)], pos: &mut usize) -> Option<f64> {
    let mut sign = 1.0;
    while let Some((Tok::Plus | Tok::Minus, _)) = toks.get(*pos) {
        if toks[*pos].0 == Tok::Minus {
            sign = -sign;
        }
        *pos += 1;
    }
    match toks.get(*pos) {
        Some((Tok::Num(x), _)) => {
            *pos += 1;
            Some(sign * x)
        }
        _ => None,
    }
}

fn apply_bound(b: &mut RawBound, sense: ConstraintSense, value: f64, var_on_left: bool) {
    let sense = if var_on_left {
        sense
    } else {
        match sense {
            ConstraintSense::Le => ConstraintSense::Ge,
            ConstraintSense::Ge => ConstraintSense::Le,
            ConstraintSense::Eq => ConstraintSense::Eq,
        }
    };
    match sense {
        ConstraintSense::Le => b.upper = value,
        ConstraintSense::Ge => b.lower = value,
        ConstraintSense::Eq => {
            b.lower = value;
            b.upper = value;
        }
    }
}

/// Parses one bound line: `x >= a`, `x <= b`, `a <= x <= b`, `x = v`, `a <= x`.
fn parse_bound_line(
    toks: &[(Tok, usize)],
    line: usize,
    bounds: &mut HashMap<String, RawBound>,
    order: &mut Vec<String>,
) -> Result<(), ParseError> {
    let mut pos = 0;
    let lead = signed_num(toks, &mut pos);
    let mut pending = None;
    if let Some(v) = lead {
        match toks.get(pos) {
            Some((Tok::Sense(s), _)) => {
                pending = Some((*s, v));
                pos += 1;
            }
            _ => return Err(ParseError::at(line, "malformed bound")),
        }
    }
    let name = match toks.get(pos) {
        Some((Tok::Name(n), _)) => n.clone(),
        _ => return Err(ParseError::at(line, "bound without variable")),
    };
    pos += 1;
    if let Some((Tok::Name(w), _)) = toks.get(pos) {
        if w.eq_ignore_ascii_case("free") {
            return Err(ParseError::at(
                line,
                format!("free variable `{name}` is not supported (variables are non-negative)"),
            ));
        }
    }
    if !bounds.contains_key(&name) {
        order.push(name.clone());
    }
    let b = bounds.entry(name.clone()).or_insert(RawBound {
        lower: 0.0,
        upper: f64::INFINITY,
    });
    if let Some((s, v)) = pending {
        apply_bound(b, s, v, false);
    }
    if let Some((Tok::Sense(s), _)) = toks.get(pos) {
        let s = *s;
        pos += 1;
        let v = signed_num(toks, &mut pos)
            .ok_or_else(|| ParseError::at(line, "bound without value"))?;
        apply_bound(b, s, v, true);
    }
    if pos != toks.len() {
        return Err(ParseError::at(line, "trailing tokens in bound"));
    }
    Ok(())
}

/// Parses CPLEX-LP text into a model.
///
/// Column order follows first appearance in `Bounds`, then first appearance
/// anywhere else. Only minimization, non-negative continuous and binary
/// columns are accepted.
pub fn parse_lp(text: &str) -> Result<Model, ParseError> {
    let mut name = String::from("model");
    let mut section = Section::Preamble;
    let mut obj_toks = Vec::new();
    let mut row_toks = Vec::new();
    let mut bounds: HashMap<String, RawBound> = HashMap::new();
    let mut bound_order: Vec<String> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if let Some(rest) = raw.trim_start().strip_prefix('\\') {
            if let Some(n) = rest.trim().strip_prefix("Problem name:") {
                name = n.trim().to_string();
            }
            continue;
        }
        let line = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let lower = line.trim().to_ascii_lowercase();
        if lower.starts_with("maximize") || lower.starts_with("maximise") || lower == "max" {
            return Err(ParseError::at(line_no, "maximization is not supported"));
        }
        if let Some(s) = section_header(line) {
            section = s;
            continue;
        }
        match section {
            Section::Preamble => {
                return Err(ParseError::at(line_no, "content before objective section"))
            }
            Section::Objective => obj_toks.extend(tokenize(line, line_no)?),
            Section::Constraints => row_toks.extend(tokenize(line, line_no)?),
            Section::Bounds => {
                let toks = tokenize(line, line_no)?;
                parse_bound_line(&toks, line_no, &mut bounds, &mut bound_order)?;
            }
            Section::Binaries => {
                binaries.extend(line.split_whitespace().map(str::to_string));
            }
            Section::Generals => {
                return Err(ParseError::at(
                    line_no,
                    "general integer variables are not supported",
                ))
            }
            Section::End => {}
        }
    }

    let mut pos = 0;
    let _obj_label = split_label(&obj_toks, &mut pos);
    let obj = parse_terms(&obj_toks, &mut pos)?;
    if pos != obj_toks.len() {
        return Err(ParseError::at(obj_toks[pos].1, "unexpected token in objective"));
    }
    let rows = parse_rows(&row_toks)?;

    let mut order: Vec<String> = bound_order.clone();
    let mut seen: std::collections::HashSet<String> = order.iter().cloned().collect();
    let mut note = |n: &String, order: &mut Vec<String>| {
        if seen.insert(n.clone()) {
            order.push(n.clone());
        }
    };
    for (n, _) in &obj.terms {
        note(n, &mut order);
    }
    for r in &rows {
        for (n, _) in &r.expr.terms {
            note(n, &mut order);
        }
    }
    for n in &binaries {
        note(n, &mut order);
    }

    let binset: std::collections::HashSet<&String> = binaries.iter().collect();
    let mut model = Model::new(name);
    let mut ids: HashMap<String, VarId> = HashMap::new();
    for n in &order {
        let b = bounds.get(n).copied().unwrap_or(RawBound {
            lower: 0.0,
            upper: if binset.contains(n) { 1.0 } else { f64::INFINITY },
        });
        let domain = if binset.contains(n) {
            Domain::Binary
        } else {
            Domain::ContinuousNonneg
        };
        let id = model
            .add_var(n.clone(), domain, b.lower, b.upper)
            .map_err(ParseError::Model)?;
        ids.insert(n.clone(), id);
    }
    let resolve = |raw: &RawExpr| -> LinExpr {
        let mut e = LinExpr::with_capacity(raw.terms.len());
        for (n, c) in &raw.terms {
            e.add_term(ids[n], *c);
        }
        e.add_constant(raw.constant);
        e
    };
    model.set_objective(resolve(&obj)).map_err(ParseError::Model)?;
    for (i, r) in rows.iter().enumerate() {
        let rname = r.name.clone().unwrap_or_else(|| format!("R{}", i + 1));
        model
            .add_constraint(resolve(&r.expr), r.sense, r.rhs, rname)
            .map_err(|e: ModelError| ParseError::Model(e))?;
    }
    Ok(model)
}
