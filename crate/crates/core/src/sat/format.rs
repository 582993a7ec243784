//! DIMACS CNF and the line-oriented E13 text format.
//!
//! E13 layout: `p e13 <n> <m>` followed by one clause per line, 1 to 3
//! ascending positive integers terminated by `0`. Lines starting with `c`
//! are comments.

use std::fmt::Write as _;

use super::{Cnf3Instance, E13Instance, Literal};
use crate::error::{Error, Result};

fn is_comment(line: &str) -> bool {
    line.is_empty() || line.starts_with('c') || line.starts_with('%')
}

fn parse_header(line: &str, lineno: usize, kind: &str) -> Result<(usize, usize)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "p" || fields[1] != kind {
        return Err(Error::parse(
            lineno,
            format!("expected `p {kind} <vars> <clauses>`"),
        ));
    }
    let n = fields[2]
        .parse()
        .map_err(|_| Error::parse(lineno, "variable count is not an integer"))?;
    let m = fields[3]
        .parse()
        .map_err(|_| Error::parse(lineno, "clause count is not an integer"))?;
    Ok((n, m))
}

pub fn parse_dimacs(text: &str) -> Result<Cnf3Instance> {
    let mut header = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = raw.trim();
        if is_comment(line) {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::parse(lineno, "duplicate header"));
            }
            header = Some(parse_header(line, lineno, "cnf")?);
            continue;
        }
        let Some((n, m)) = header else {
            return Err(Error::parse(lineno, "clause before `p cnf` header"));
        };
        for tok in line.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad literal `{tok}`")))?;
            if v == 0 {
                if clauses.len() == m {
                    return Err(Error::parse(
                        lineno,
                        format!("more clauses than the {m} declared"),
                    ));
                }
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            let var = v.unsigned_abs() as usize;
            if var > n {
                return Err(Error::parse(
                    lineno,
                    format!("variable {var} outside 1..={n}"),
                ));
            }
            current.push(Literal {
                var,
                positive: v > 0,
            });
        }
    }
    let Some((n, m)) = header else {
        return Err(Error::parse(last_line.max(1), "missing `p cnf` header"));
    };
    if !current.is_empty() {
        return Err(Error::parse(
            last_line,
            "last clause is not terminated by 0",
        ));
    }
    if clauses.len() != m {
        return Err(Error::parse(
            last_line,
            format!("header declares {m} clauses, found {}", clauses.len()),
        ));
    }
    Cnf3Instance::new(n, clauses).map_err(|e| Error::parse(last_line, e.to_string()))
}

pub fn write_dimacs(inst: &Cnf3Instance) -> String {
    let mut out = format!("p cnf {} {}\n", inst.num_vars(), inst.num_clauses());
    for clause in inst.clauses() {
        for lit in clause {
            write!(out, "{} ", lit.to_dimacs()).unwrap();
        }
        out.push_str("0\n");
    }
    out
}

pub fn parse_e13(text: &str) -> Result<E13Instance> {
    let mut header = None;
    let mut clauses = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = raw.trim();
        if is_comment(line) {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::parse(lineno, "duplicate header"));
            }
            header = Some(parse_header(line, lineno, "e13")?);
            continue;
        }
        let Some((n, m)) = header else {
            return Err(Error::parse(lineno, "clause before `p e13` header"));
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.last() != Some(&"0") {
            return Err(Error::parse(lineno, "clause line must end with 0"));
        }
        let vars = toks[..toks.len() - 1]
            .iter()
            .map(|t| {
                t.parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| Error::parse(lineno, format!("bad variable `{t}`")))
            })
            .collect::<Result<Vec<usize>>>()?;
        if vars.is_empty() || vars.len() > 3 {
            return Err(Error::parse(lineno, "clause must have 1 to 3 variables"));
        }
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parse(
                lineno,
                "clause variables must be strictly ascending",
            ));
        }
        if let Some(v) = vars.iter().find(|&&v| v > n) {
            return Err(Error::parse(
                lineno,
                format!("variable {v} outside 1..={n}"),
            ));
        }
        if clauses.len() == m {
            return Err(Error::parse(
                lineno,
                format!("more clauses than the {m} declared"),
            ));
        }
        clauses.push(vars);
    }
    let Some((n, m)) = header else {
        return Err(Error::parse(last_line.max(1), "missing `p e13` header"));
    };
    if clauses.len() != m {
        return Err(Error::parse(
            last_line,
            format!("header declares {m} clauses, found {}", clauses.len()),
        ));
    }
    E13Instance::new(n, clauses).map_err(|e| Error::parse(last_line, e.to_string()))
}

pub fn write_e13(inst: &E13Instance) -> String {
    let mut out = format!("p e13 {} {}\n", inst.num_vars(), inst.num_clauses());
    for clause in inst.clauses() {
        for v in clause {
            write!(out, "{v} ").unwrap();
        }
        out.push_str("0\n");
    }
    out
}
