//! MPS writer and reader.
//!
//! Output follows the fixed-MPS column layout (fields starting at columns
//! 2, 5, 15, 25, 40). Names longer than eight characters and full-precision
//! numbers overflow their fields but stay whitespace separated, so any
//! free-format MPS reader accepts the file.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::expr::LinExpr;
use crate::lp::fmt_num;
use crate::model::{ConstraintSense, Domain, Model};
use crate::ParseError;

const OBJ_ROW: &str = "obj";

pub fn write_mps(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", model.name());
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for c in model.constraints() {
        let t = match c.sense {
            ConstraintSense::Le => "L",
            ConstraintSense::Eq => "E",
            ConstraintSense::Ge => "G",
        };
        let _ = writeln!(out, " {t:<2} {}", c.name);
    }

    // Column-major view of the constraint matrix.
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (r, c) in model.constraints().iter().enumerate() {
        for &(v, a) in c.expr.terms() {
            cols[v.index()].push((r, a));
        }
    }
    let costs = model.objective_coefficients();

    out.push_str("COLUMNS\n");
    for (j, var) in model.variables().iter().enumerate() {
        let mut wrote = false;
        if costs[j] != 0.0 || cols[j].is_empty() {
            let _ = writeln!(
                out,
                "    {:<8}  {:<8}  {:>12}",
                var.name,
                OBJ_ROW,
                fmt_num(costs[j])
            );
            wrote = true;
        }
        for &(r, a) in &cols[j] {
            let _ = writeln!(
                out,
                "    {:<8}  {:<8}  {:>12}",
                var.name,
                model.constraints()[r].name,
                fmt_num(a)
            );
            wrote = true;
        }
        debug_assert!(wrote);
    }

    out.push_str("RHS\n");
    let k = model.objective().constant();
    if k != 0.0 {
        let _ = writeln!(out, "    {:<8}  {:<8}  {:>12}", "RHS", OBJ_ROW, fmt_num(-k));
    }
    for c in model.constraints() {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    {:<8}  {:<8}  {:>12}", "RHS", c.name, fmt_num(c.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for v in model.variables() {
        if v.domain == Domain::Binary && v.lower == 0.0 && v.upper == 1.0 {
            let _ = writeln!(out, " BV BND       {}", v.name);
            continue;
        }
        if v.domain == Domain::Binary {
            let _ = writeln!(out, " BV BND       {}", v.name);
        }
        if v.lower == v.upper {
            let _ = writeln!(out, " FX BND       {:<8}  {:>12}", v.name, fmt_num(v.lower));
            continue;
        }
        if v.lower != 0.0 {
            let _ = writeln!(out, " LO BND       {:<8}  {:>12}", v.name, fmt_num(v.lower));
        }
        if v.upper.is_finite() {
            let _ = writeln!(out, " UP BND       {:<8}  {:>12}", v.name, fmt_num(v.upper));
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

fn num(tok: &str, line: usize) -> Result<f64, ParseError> {
    tok.parse::<f64>()
        .map_err(|_| ParseError::at(line, format!("expected a number, got `{tok}`")))
}

/// Parses free- or fixed-format MPS text (whitespace separated fields).
pub fn parse_mps(text: &str) -> Result<Model, ParseError> {
    let mut name = String::from("model");
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<(String, ConstraintSense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_order: Vec<String> = Vec::new();
    let mut col_entries: HashMap<String, Vec<(Option<usize>, f64)>> = HashMap::new();
    let mut integer_cols: HashMap<String, bool> = HashMap::new();
    let mut in_int_block = false;
    let mut rhs: Vec<f64> = Vec::new();
    let mut obj_constant = 0.0;
    let mut lower: HashMap<String, f64> = HashMap::new();
    let mut upper: HashMap<String, f64> = HashMap::new();
    let mut binary: HashMap<String, bool> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            match f[0] {
                "NAME" => {
                    if let Some(n) = f.get(1) {
                        name = n.to_string();
                    }
                }
                "ROWS" => section = Section::Rows,
                "COLUMNS" => section = Section::Columns,
                "RHS" => section = Section::Rhs,
                "BOUNDS" => section = Section::Bounds,
                "RANGES" => return Err(ParseError::at(ln, "RANGES are not supported")),
                "ENDATA" => break,
                other => return Err(ParseError::at(ln, format!("unknown section `{other}`"))),
            }
            continue;
        }
        match section {
            Section::None => return Err(ParseError::at(ln, "data before ROWS")),
            Section::Rows => {
                if f.len() != 2 {
                    return Err(ParseError::at(ln, "malformed ROWS entry"));
                }
                let sense = match f[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(f[1].to_string());
                        }
                        continue;
                    }
                    "L" => ConstraintSense::Le,
                    "G" => ConstraintSense::Ge,
                    "E" => ConstraintSense::Eq,
                    t => return Err(ParseError::at(ln, format!("unknown row type `{t}`"))),
                };
                row_index.insert(f[1].to_string(), rows.len());
                rows.push((f[1].to_string(), sense));
                rhs.push(0.0);
            }
            Section::Columns => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    in_int_block = f[2] == "'INTORG'";
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(ParseError::at(ln, "malformed COLUMNS entry"));
                }
                let col = f[0].to_string();
                if !col_entries.contains_key(&col) {
                    col_order.push(col.clone());
                    col_entries.insert(col.clone(), Vec::new());
                }
                if in_int_block {
                    integer_cols.insert(col.clone(), true);
                }
                for pair in f[1..].chunks(2) {
                    let value = num(pair[1], ln)?;
                    let target = if Some(pair[0]) == obj_row.as_deref() {
                        None
                    } else {
                        Some(*row_index.get(pair[0]).ok_or_else(|| {
                            ParseError::at(ln, format!("unknown row `{}`", pair[0]))
                        })?)
                    };
                    col_entries.get_mut(&col).unwrap().push((target, value));
                }
            }
            Section::Rhs => {
                let pairs = if f.len() % 2 == 1 { &f[1..] } else { &f[..] };
                for pair in pairs.chunks(2) {
                    if pair.len() != 2 {
                        return Err(ParseError::at(ln, "malformed RHS entry"));
                    }
                    let value = num(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        obj_constant = -value;
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| {
                            ParseError::at(ln, format!("unknown row `{}`", pair[0]))
                        })?;
                        rhs[r] = value;
                    }
                }
            }
            Section::Bounds => {
                let kind = f[0];
                let (col, value) = match (kind, f.len()) {
                    ("BV" | "FR" | "MI" | "PL", 3) => (f[2], None),
                    ("BV" | "FR" | "MI" | "PL", 2) => (f[1], None),
                    (_, 4) => (f[2], Some(num(f[3], ln)?)),
                    (_, 3) => (f[1], Some(num(f[2], ln)?)),
                    _ => return Err(ParseError::at(ln, "malformed BOUNDS entry")),
                };
                let col = col.to_string();
                if !col_entries.contains_key(&col) {
                    return Err(ParseError::at(ln, format!("bound on unknown column `{col}`")));
                }
                match (kind, value) {
                    ("UP", Some(v)) => {
                        upper.insert(col, v);
                    }
                    ("LO", Some(v)) => {
                        lower.insert(col, v);
                    }
                    ("FX", Some(v)) => {
                        lower.insert(col.clone(), v);
                        upper.insert(col, v);
                    }
                    ("BV", _) => {
                        binary.insert(col, true);
                    }
                    ("PL", _) => {
                        upper.insert(col, f64::INFINITY);
                    }
                    (k, _) => {
                        return Err(ParseError::at(ln, format!("unsupported bound type `{k}`")))
                    }
                }
            }
        }
    }

    let mut model = Model::new(name);
    let mut exprs: Vec<LinExpr> = vec![LinExpr::new(); rows.len()];
    let mut objective = LinExpr::from_constant(obj_constant);
    for col in &col_order {
        let is_bin = binary.contains_key(col);
        let is_int = integer_cols.contains_key(col);
        let lo = lower.get(col).copied().unwrap_or(0.0);
        let default_up = if is_bin { 1.0 } else { f64::INFINITY };
        let up = upper.get(col).copied().unwrap_or(default_up);
        let domain = if is_bin || (is_int && lo >= 0.0 && up <= 1.0) {
            Domain::Binary
        } else if is_int {
            return Err(ParseError::Unsupported(format!(
                "general integer column `{col}`"
            )));
        } else {
            Domain::ContinuousNonneg
        };
        let id = model
            .add_var(col.clone(), domain, lo, up)
            .map_err(ParseError::Model)?;
        for &(row, value) in &col_entries[col] {
            match row {
                None => {
                    objective.add_term(id, value);
                }
                Some(r) => {
                    exprs[r].add_term(id, value);
                }
            }
        }
    }
    model.set_objective(objective).map_err(ParseError::Model)?;
    for (r, ((rname, sense), expr)) in rows.into_iter().zip(exprs).enumerate() {
        model
            .add_constraint(expr, sense, rhs[r], rname)
            .map_err(ParseError::Model)?;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::write_lp;

    #[test]
    fn mps_round_trip_preserves_model() {
        let mut m = Model::new("mix");
        let x = m.add_continuous("x", Some(4.0)).unwrap();
        let y = m.add_binary("chi_y").unwrap();
        let z = m
            .add_var("z_long_variable_name", Domain::ContinuousNonneg, 1.5, 1.5)
            .unwrap();
        let _unused = m.add_continuous("w", None).unwrap();
        m.add_constraint(x + 2.0 * y, ConstraintSense::Le, 5.0, "c1")
            .unwrap();
        m.add_constraint(x - z, ConstraintSense::Ge, -1.0, "c2")
            .unwrap();
        m.set_objective(3.0 * x - y + 7.0).unwrap();
        let back = parse_mps(&write_mps(&m)).unwrap();
        assert_eq!(write_lp(&back), write_lp(&m));
        assert_eq!(write_mps(&back), write_mps(&m));
    }

    #[test]
    fn fixed_layout_columns() {
        let mut m = Model::new("f");
        let x = m.add_continuous("x", None).unwrap();
        m.add_constraint(x, ConstraintSense::Ge, 1.0, "c1").unwrap();
        m.set_objective(x).unwrap();
        let text = write_mps(&m);
        let line = text.lines().find(|l| l.contains("c1") && l.contains('x')).unwrap();
        assert_eq!(&line[4..5], "x");
        assert_eq!(&line[14..16], "c1");
    }
}
