//! Hand a model to an outside MIP solver through LP/solution files.
//!
//! The command template substitutes `{lp}` and `{sol}` and runs through
//! `sh -c`. The solver must write `name value` lines to `{sol}`.

use std::path::Path;
use std::process::Command;

use super::lpfile::{export_lp_file, import_solution};
use super::{LpSolution, SolveError};
use crate::ilp::IlpModel;

pub const SOLVER_ENV: &str = "GDP_SOLVER_CMD";

/// Template from `GDP_SOLVER_CMD`, if set and non-empty.
pub fn command_from_env() -> Option<String> {
    std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty())
}

pub fn render_command(template: &str, lp: &Path, sol: &Path) -> String {
    template.replace("{lp}", &shell_quote(lp)).replace("{sol}", &shell_quote(sol))
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

/// Writes the model into `workdir`, runs the solver, reads its answer back.
/// Returns the solution and the count of variables the solver omitted.
pub fn solve_external(model: &IlpModel, template: &str, workdir: &Path) -> Result<(LpSolution, usize), SolveError> {
    let lp = workdir.join("model.lp");
    let sol = workdir.join("model.sol");
    export_lp_file(model, &lp)?;
    let cmd = render_command(template, &lp, &sol);
    let out = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .output()
        .map_err(|e| SolveError::External(format!("cannot run `{cmd}`: {e}")))?;
    if !out.status.success() {
        return Err(SolveError::External(format!(
            "`{cmd}` exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    import_solution(model, &sol)
}
