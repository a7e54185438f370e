use std::io::Write;
use std::path::Path;

use hivesim::dsl::parse_program;

use crate::exit;

/// Parses and validates a program. Exit 0 when clean, 1 with one located
/// message per issue, 2 when the file cannot be read.
pub fn cmd_check(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let src = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: I/O error reading {}: {e}", path.display());
            return exit::IO;
        }
    };
    let name = path.display().to_string();
    match parse_program(&src) {
        Ok(g) => {
            let _ = writeln!(
                out,
                "{name}: ok, {} tasks, {} edges, {} directives",
                g.tasks.len(),
                g.edges().len(),
                g.directive_count()
            );
            exit::OK
        }
        Err(e) => {
            let _ = writeln!(out, "{}", e.located(&name));
            exit::FAILURE
        }
    }
}
