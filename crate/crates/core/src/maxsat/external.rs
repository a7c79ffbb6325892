use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use super::{wcnf, MaxSatSolver, OptResult, Solution, SolveError, SolveStatus};
use crate::encoder::{cnf::lit_value, WcnfFormula};

/// A MaxSAT binary run as a child process. The WCNF file path is appended
/// as the last argument; the exit status is ignored and only the `s`, `o`
/// and `v` lines of standard output count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub program: String,
    pub args: Vec<String>,
    pub time_limit: Option<Duration>,
}

/// Environment variable that overrides the external solver command line.
pub const SOLVER_ENV: &str = "DLSAT_SOLVER";

impl ExternalSolver {
    /// Splits a command line on whitespace: program first, then arguments.
    pub fn from_command_line(command: &str) -> Option<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(ExternalSolver {
            program,
            args: parts.collect(),
            time_limit: None,
        })
    }

    /// The command named by `DLSAT_SOLVER`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var(SOLVER_ENV)
            .ok()
            .and_then(|c| Self::from_command_line(&c))
    }

    pub fn with_time_limit(mut self, limit: Option<Duration>) -> Self {
        self.time_limit = limit;
        self
    }

    fn scratch_path() -> PathBuf {
        static COUNTER: AtomicU64 = AtomicU64::new(0);
        let n = COUNTER.fetch_add(1, Ordering::Relaxed);
        std::env::temp_dir().join(format!("dlsat-{}-{n}.wcnf", std::process::id()))
    }

    fn run(&self, path: &PathBuf) -> Result<Option<(String, String, String)>, SolveError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(path)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| SolveError::Spawn {
                program: self.program.clone(),
                source,
            })?;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_reader = std::thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        let err_reader = std::thread::spawn(move || {
            let mut s = String::new();
            stderr.read_to_string(&mut s).map(|_| s)
        });
        let deadline = self.time_limit.map(|t| Instant::now() + t);
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(None);
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        let out = out_reader.join().expect("stdout reader")?;
        let err = err_reader.join().expect("stderr reader")?;
        Ok(Some((out, err, status.to_string())))
    }
}

impl MaxSatSolver for ExternalSolver {
    fn solve(&self, formula: &WcnfFormula) -> Result<OptResult, SolveError> {
        let path = Self::scratch_path();
        std::fs::write(&path, wcnf::to_wcnf_string(formula))?;
        let outcome = self.run(&path);
        let _ = std::fs::remove_file(&path);
        match outcome? {
            None => Ok(OptResult {
                status: SolveStatus::Timeout,
                solution: None,
            }),
            Some((stdout, stderr, status)) => interpret_output(formula, &stdout)
                .map_err(|e| match e {
                    SolveError::Unparsable(msg) if msg == NO_STATUS => {
                        SolveError::Crashed { status, stderr }
                    }
                    other => other,
                }),
        }
    }
}

const NO_STATUS: &str = "no status line";

/// Parses MaxSAT-evaluation output and checks the model against `formula`.
///
/// Both `v` dialects are understood: the 2022 single 0/1 string and the
/// legacy signed-literal list. `o` lines may repeat; the last one wins.
pub fn interpret_output(formula: &WcnfFormula, output: &str) -> Result<OptResult, SolveError> {
    let mut status = None;
    let mut reported: Option<u64> = None;
    let mut values: Vec<&str> = Vec::new();
    for line in output.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = Some(match rest.trim() {
                "OPTIMUM FOUND" => SolveStatus::Optimum,
                "UNSATISFIABLE" => SolveStatus::Unsatisfiable,
                "SATISFIABLE" | "UNKNOWN" => SolveStatus::Timeout,
                other => return Err(SolveError::Unparsable(format!("status `{other}`"))),
            });
        } else if let Some(rest) = line.strip_prefix("o ") {
            reported = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| SolveError::Unparsable(format!("cost line `{line}`")))?,
            );
        } else if let Some(rest) = line.strip_prefix('v') {
            values.extend(rest.split_whitespace());
        }
    }
    let status = status.ok_or_else(|| SolveError::Unparsable(NO_STATUS.to_string()))?;
    if status == SolveStatus::Unsatisfiable {
        return Ok(OptResult {
            status,
            solution: None,
        });
    }
    if values.is_empty() {
        if status == SolveStatus::Timeout {
            return Ok(OptResult {
                status,
                solution: None,
            });
        }
        return Err(SolveError::Unparsable("optimum without a `v` line".to_string()));
    }

    let vars = formula.variable_count as usize;
    let mut assignment = vec![false; vars + 1];
    let binary = values.len() == 1
        && values[0].bytes().all(|b| b == b'0' || b == b'1')
        && (values[0].len() == vars || values[0].len() > 1);
    if binary {
        for (i, b) in values[0].bytes().enumerate().take(vars) {
            assignment[i + 1] = b == b'1';
        }
    } else {
        for tok in values {
            let lit: i64 = tok
                .parse()
                .map_err(|_| SolveError::Unparsable(format!("value token `{tok}`")))?;
            let var = lit.unsigned_abs() as usize;
            if var == 0 {
                continue;
            }
            if var <= vars {
                assignment[var] = lit > 0;
            }
        }
    }

    if let Some(clause) = formula
        .hard
        .iter()
        .position(|c| !c.iter().any(|&l| lit_value(&assignment, l)))
    {
        return Err(SolveError::HardViolated { clause });
    }
    let actual = formula.cost(&assignment);
    if let Some(reported) = reported {
        if reported != actual {
            return Err(SolveError::CostMismatch { reported, actual });
        }
    }
    Ok(OptResult {
        status,
        solution: Some(Solution {
            cost: actual,
            assignment,
        }),
    })
}

/// Output in the format [`interpret_output`] reads, with a binary `v` line.
pub fn format_output(result: &OptResult) -> String {
    let mut out = String::new();
    match result.status {
        SolveStatus::Optimum => out.push_str("s OPTIMUM FOUND\n"),
        SolveStatus::Unsatisfiable => out.push_str("s UNSATISFIABLE\n"),
        SolveStatus::Timeout if result.solution.is_some() => out.push_str("s SATISFIABLE\n"),
        SolveStatus::Timeout => out.push_str("s UNKNOWN\n"),
    }
    if let Some(sol) = &result.solution {
        out.push_str(&format!("o {}\nv ", sol.cost));
        out.extend(sol.assignment[1..].iter().map(|&b| if b { '1' } else { '0' }));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f() -> WcnfFormula {
        WcnfFormula {
            variable_count: 2,
            hard: vec![vec![1, -2]],
            soft: vec![(vec![-1], 2), (vec![2], 3)],
        }
    }

    #[test]
    fn both_value_dialects() {
        let a = interpret_output(&f(), "c hi\ns OPTIMUM FOUND\no 2\nv 1 2\n").unwrap();
        assert_eq!(a.cost(), Some(2));
        let b = interpret_output(&f(), "s OPTIMUM FOUND\no 2\nv 11\n").unwrap();
        assert_eq!(a, b);
        let c = interpret_output(&f(), "s OPTIMUM FOUND\no 9\no 2\nv 1 2 0\n").unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(matches!(
            interpret_output(&f(), "s OPTIMUM FOUND\no 0\nv -1 2\n"),
            Err(SolveError::HardViolated { clause: 0 })
        ));
        assert!(matches!(
            interpret_output(&f(), "s OPTIMUM FOUND\no 1\nv 11\n"),
            Err(SolveError::CostMismatch { reported: 1, actual: 2 })
        ));
        assert!(matches!(interpret_output(&f(), "garbage\n"), Err(SolveError::Unparsable(_))));
    }

    #[test]
    fn status_mapping() {
        let r = interpret_output(&f(), "s UNSATISFIABLE\n").unwrap();
        assert_eq!(r.status, SolveStatus::Unsatisfiable);
        let text = format_output(&super::super::solve_builtin(&f(), None));
        let back = interpret_output(&f(), &text).unwrap();
        assert_eq!(back.status, SolveStatus::Optimum);
        assert_eq!(back.cost(), Some(2));
    }

    #[test]
    fn command_line_split() {
        let s = ExternalSolver::from_command_line("rc2.py -vv").unwrap();
        assert_eq!(s.program, "rc2.py");
        assert_eq!(s.args, vec!["-vv"]);
        assert!(ExternalSolver::from_command_line("  ").is_none());
    }
}
