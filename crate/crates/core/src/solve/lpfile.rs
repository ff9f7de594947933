//! Textual LP file export and `name value` solution import.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{LpSolution, LpStatus, SolveError};
use crate::ilp::{IlpModel, VarId};

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministic names: `t_<rel>_<hash>`, `w_<view>_<idx>`, `v_<view>_<idx>`.
pub fn variable_names(model: &IlpModel) -> Vec<String> {
    let mut names: Vec<String> = model
        .variables
        .iter()
        .map(|v| match v.id {
            VarId::Tuple(t) => {
                let r = &model.tuple_refs[t.index()];
                let key: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
                format!("t_{}_{:016x}", r.relation, fnv1a(key.join(",").as_bytes()))
            }
            VarId::Witness { view, index } => format!("w_{view}_{index}"),
            VarId::View { view, index } => format!("v_{view}_{index}"),
        })
        .collect();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for n in &mut names {
        let count = seen.entry(n.clone()).or_insert(0);
        if *count > 0 {
            n.push_str(&format!("_{count}"));
        }
        *count += 1;
    }
    names
}

fn term(out: &mut String, first: bool, coef: i64, name: &str) {
    if coef < 0 {
        out.push_str(" - ");
    } else if first {
        out.push(' ');
    } else {
        out.push_str(" + ");
    }
    let mag = coef.unsigned_abs();
    if mag != 1 {
        let _ = write!(out, "{mag} ");
    }
    out.push_str(name);
}

/// Renders `model` in LP format. Integer columns go to `Binaries`.
pub fn to_lp_string(model: &IlpModel) -> String {
    let names = variable_names(model);
    let mut out = String::new();
    let _ = writeln!(out, "\\ mode {}", model.mode);
    out.push_str("Minimize\n obj:");
    if model.objective.is_empty() {
        let _ = write!(out, " {}", model.offset);
    } else {
        for (k, &(j, c)) in model.objective.iter().enumerate() {
            term(&mut out, k == 0, c, &names[j]);
        }
        if model.offset != 0 {
            let _ = write!(out, " {} {}", if model.offset < 0 { "-" } else { "+" }, model.offset.unsigned_abs());
        }
    }
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = write!(out, " c{i}_{}:", c.tag.as_str());
        if c.terms.is_empty() {
            // constant row: keep it, anchored on a zero-weight column
            match names.first() {
                Some(n) => {
                    let _ = write!(out, " 0 {n}");
                }
                None => continue,
            }
        }
        for (k, &(j, a)) in c.terms.iter().enumerate() {
            term(&mut out, k == 0, a, &names[j]);
        }
        let _ = writeln!(out, " {} {}", c.sense.as_str(), c.rhs);
    }
    out.push_str("Bounds\n");
    for n in &names {
        let _ = writeln!(out, " 0 <= {n} <= 1");
    }
    let ints: Vec<&String> = names.iter().zip(&model.variables).filter(|(_, v)| v.integer).map(|(n, _)| n).collect();
    if !ints.is_empty() {
        out.push_str("Binaries\n");
        for n in ints {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}

pub fn export_lp_file(model: &IlpModel, path: &Path) -> Result<(), SolveError> {
    fs::write(path, to_lp_string(model)).map_err(|source| SolveError::Io { path: path.display().to_string(), source })
}

/// Reads `name value` lines (`#` comments and blank lines ignored). Returns
/// the solution and how many model variables the file did not mention
/// (those default to 0).
pub fn import_solution(model: &IlpModel, path: &Path) -> Result<(LpSolution, usize), SolveError> {
    let text =
        fs::read_to_string(path).map_err(|source| SolveError::Io { path: path.display().to_string(), source })?;
    parse_solution(model, &text, &path.display().to_string())
}

pub fn parse_solution(model: &IlpModel, text: &str, origin: &str) -> Result<(LpSolution, usize), SolveError> {
    let names = variable_names(model);
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut x = vec![0.0; model.num_vars()];
    let mut seen = vec![false; model.num_vars()];
    for (ln, line) in text.lines().enumerate() {
        let err = |message: String| SolveError::SolutionFile { path: origin.to_string(), line: ln + 1, message };
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(format!("expected `name value`, found `{line}`")));
        };
        let &j = index.get(name).ok_or_else(|| err(format!("unknown variable `{name}`")))?;
        x[j] = value.parse::<f64>().map_err(|_| err(format!("invalid value `{value}`")))?;
        seen[j] = true;
    }
    let missing = seen.iter().filter(|s| !**s).count();
    let objective = model.objective_value(&x);
    Ok((LpSolution { status: LpStatus::Optimal, objective, x, iterations: 0 }, missing))
}

/// `name value` lines for every variable, in model order.
pub fn format_solution(model: &IlpModel, x: &[f64]) -> String {
    let mut out = String::new();
    for (n, v) in variable_names(model).iter().zip(x) {
        let _ = writeln!(out, "{n} {v}");
    }
    out
}
