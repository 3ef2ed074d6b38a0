//! Solution tables exchanged with external solvers.
//!
//! The native format is a whitespace table of `name value` lines, preceded by
//! optional `# status <s>` and `# objective <v>` comment lines. The HiGHS
//! `write_solution_to_file` layout (`Model status` / `# Columns N`) is also
//! accepted so that a stock `highs` binary can be plugged in.

use std::fmt::Write as _;

use crate::backend::SolveStatus;
use crate::lp::fmt_num;
use crate::model::Model;
use crate::ParseError;

/// Values read from a solution file, indexed like the model's columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTable {
    pub status: Option<SolveStatus>,
    pub objective: Option<f64>,
    pub values: Vec<f64>,
}

pub fn write_solution(
    model: &Model,
    status: SolveStatus,
    objective: Option<f64>,
    values: &[f64],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# status {status}");
    if let Some(obj) = objective {
        let _ = writeln!(out, "# objective {}", fmt_num(obj));
    }
    for (v, x) in model.variables().iter().zip(values) {
        let _ = writeln!(out, "{} {}", v.name, fmt_num(*x));
    }
    out
}

fn parse_status(word: &str) -> Option<SolveStatus> {
    match word.to_ascii_lowercase().as_str() {
        "optimal" => Some(SolveStatus::Optimal),
        "infeasible" => Some(SolveStatus::Infeasible),
        "unbounded" => Some(SolveStatus::Unbounded),
        "limit" | "time limit reached" | "time_limit" => Some(SolveStatus::Limit),
        _ => None,
    }
}

fn parse_value(tok: &str, line: usize) -> Result<f64, ParseError> {
    match tok {
        "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
        "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
        _ => tok
            .parse::<f64>()
            .map_err(|_| ParseError::at(line, format!("bad value `{tok}`"))),
    }
}

/// Parses a solution table against `model`. Columns absent from the file are
/// reported as zero, which is how most solvers abbreviate their output.
pub fn parse_solution(model: &Model, text: &str) -> Result<SolutionTable, ParseError> {
    if text.trim_start().starts_with("Model status") {
        return parse_highs_native(model, text);
    }
    let mut table = SolutionTable {
        status: None,
        objective: None,
        values: vec![0.0; model.num_vars()],
    };
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(s) = rest.strip_prefix("status") {
                let s = s.trim();
                table.status = Some(
                    parse_status(s)
                        .ok_or_else(|| ParseError::at(ln, format!("unknown status `{s}`")))?,
                );
            } else if let Some(v) = rest.strip_prefix("objective") {
                table.objective = Some(parse_value(v.trim(), ln)?);
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(name), Some(value), None) = (it.next(), it.next(), it.next()) else {
            return Err(ParseError::at(ln, "expected `name value`"));
        };
        let var = model
            .var_by_name(name)
            .ok_or_else(|| ParseError::at(ln, format!("unknown variable `{name}`")))?;
        table.values[var.index()] = parse_value(value, ln)?;
    }
    Ok(table)
}

fn parse_highs_native(model: &Model, text: &str) -> Result<SolutionTable, ParseError> {
    let mut table = SolutionTable {
        status: None,
        objective: None,
        values: vec![0.0; model.num_vars()],
    };
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    let mut have_primal = false;
    while i < lines.len() {
        let line = lines[i].trim();
        if line == "Model status" {
            if let Some(next) = lines.get(i + 1) {
                table.status = parse_status(next.trim());
                i += 1;
            }
        } else if let Some(v) = line.strip_prefix("Objective ") {
            table.objective = parse_value(v.trim(), i + 1).ok();
        } else if line.starts_with("# Primal solution values") {
            have_primal = true;
        } else if line.starts_with("# Dual solution values") {
            break;
        } else if let Some(n) = line.strip_prefix("# Columns ") {
            if !have_primal {
                i += 1;
                continue;
            }
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| ParseError::at(i + 1, "bad column count"))?;
            for k in 0..n {
                let ln = i + 2 + k;
                let row = lines
                    .get(ln - 1)
                    .ok_or_else(|| ParseError::at(ln, "truncated column block"))?;
                let mut it = row.split_whitespace();
                let (Some(name), Some(value)) = (it.next(), it.next()) else {
                    return Err(ParseError::at(ln, "expected `name value`"));
                };
                let var = model
                    .var_by_name(name)
                    .ok_or_else(|| ParseError::at(ln, format!("unknown variable `{name}`")))?;
                table.values[var.index()] = parse_value(value, ln)?;
            }
            i += n;
        }
        i += 1;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    fn model() -> Model {
        let mut m = Model::new("s");
        m.add_continuous("x", None).unwrap();
        m.add_var("y", Domain::Binary, 0.0, 1.0).unwrap();
        m
    }

    #[test]
    fn native_round_trip() {
        let m = model();
        let text = write_solution(&m, SolveStatus::Optimal, Some(2.5), &[1.5, 1.0]);
        let t = parse_solution(&m, &text).unwrap();
        assert_eq!(t.status, Some(SolveStatus::Optimal));
        assert_eq!(t.objective, Some(2.5));
        assert_eq!(t.values, vec![1.5, 1.0]);
    }

    #[test]
    fn missing_columns_default_to_zero() {
        let m = model();
        let t = parse_solution(&m, "y 1\n").unwrap();
        assert_eq!(t.values, vec![0.0, 1.0]);
        assert_eq!(t.status, None);
    }

    #[test]
    fn unknown_name_is_rejected() {
        let m = model();
        assert!(parse_solution(&m, "z 1\n").is_err());
    }

    #[test]
    fn highs_layout_is_understood() {
        let m = model();
        let text = "Model status\nOptimal\n\n# Primal solution values\nFeasible\nObjective 3\n# Columns 2\nx 3\ny 0\n# Rows 1\nc1 3\n\n# Dual solution values\nNone\n";
        let t = parse_solution(&m, text).unwrap();
        assert_eq!(t.status, Some(SolveStatus::Optimal));
        assert_eq!(t.objective, Some(3.0));
        assert_eq!(t.values, vec![3.0, 0.0]);
    }
}
