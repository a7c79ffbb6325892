//! DIMACS WCNF reading and writing.
//!
//! Output is always the classic format: a `p wcnf <vars> <clauses> <top>`
//! header, then one clause per line with its weight first (hard clauses carry
//! the top weight) and a terminating `0`. Hard clauses come before soft ones,
//! each group in formula order, so identical formulas give identical bytes.
//!
//! The reader also accepts the header-less 2022 format with `h` marking hard
//! clauses.

use std::io::{self, Write};

use thiserror::Error;

use crate::encoder::WcnfFormula;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WcnfError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("header announces {expected} clauses, found {found}")]
    ClauseCount { expected: usize, found: usize },
}

pub fn write_wcnf<W: Write>(formula: &WcnfFormula, mut sink: W) -> io::Result<()> {
    let top = formula.top_weight();
    writeln!(
        sink,
        "p wcnf {} {} {}",
        formula.variable_count,
        formula.clause_count(),
        top
    )?;
    let mut line = String::new();
    let mut emit = |sink: &mut W, weight: u64, clause: &[i32]| -> io::Result<()> {
        use std::fmt::Write as _;
        line.clear();
        let _ = write!(line, "{weight}");
        for lit in clause {
            let _ = write!(line, " {lit}");
        }
        line.push_str(" 0\n");
        sink.write_all(line.as_bytes())
    };
    for clause in &formula.hard {
        emit(&mut sink, top, clause)?;
    }
    for (clause, weight) in &formula.soft {
        emit(&mut sink, *weight, clause)?;
    }
    Ok(())
}

pub fn to_wcnf_string(formula: &WcnfFormula) -> String {
    let mut out = Vec::new();
    write_wcnf(formula, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("ascii output")
}

pub fn parse_wcnf(text: &str) -> Result<WcnfFormula, WcnfError> {
    let mut header: Option<(u32, usize, u64)> = None;
    let mut formula = WcnfFormula::default();
    let mut max_var = 0u32;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| WcnfError::Syntax { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "wcnf" {
                return Err(err(format!("bad header `{line}`")));
            }
            let parse = |s: &str| s.parse::<u64>().map_err(|_| err(format!("bad number `{s}`")));
            header = Some((parse(fields[1])? as u32, parse(fields[2])? as usize, parse(fields[3])?));
            continue;
        }
        let mut tokens = line.split_whitespace();
        let first = tokens.next().unwrap_or_default();
        let weight = if first == "h" {
            None
        } else {
            let w = first
                .parse::<u64>()
                .map_err(|_| err(format!("bad weight `{first}`")))?;
            match header {
                Some((_, _, top)) if w >= top => None,
                _ => Some(w),
            }
        };
        let mut clause = Vec::new();
        let mut terminated = false;
        for tok in tokens {
            let lit = tok
                .parse::<i32>()
                .map_err(|_| err(format!("bad literal `{tok}`")))?;
            if lit == 0 {
                terminated = true;
                break;
            }
            max_var = max_var.max(lit.unsigned_abs());
            clause.push(lit);
        }
        if !terminated {
            return Err(err("clause without terminating 0".to_string()));
        }
        match weight {
            None => formula.hard.push(clause),
            Some(w) => formula.soft.push((clause, w)),
        }
    }

    match header {
        Some((vars, clauses, _)) => {
            if clauses != formula.clause_count() {
                return Err(WcnfError::ClauseCount {
                    expected: clauses,
                    found: formula.clause_count(),
                });
            }
            formula.variable_count = vars.max(max_var);
        }
        None => formula.variable_count = max_var,
    }
    Ok(formula)
}
