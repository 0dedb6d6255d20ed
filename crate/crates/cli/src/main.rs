mod config;
mod execute;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sqglab::verification::CHECK_NAMES;

use config::{parse_config, BUILTIN};
use execute::{combined_exit, execute, summarize, EXIT_USAGE};

/// Run transport-equation scenarios and check them against a priori estimates.
///
/// Exit status: 0 all applicable checks hold, 1 a check failed,
/// 2 usage/config/IO error, 3 numerical blow-up.
#[derive(Debug, Parser)]
#[command(name = "sqglab", version)]
struct Args {
    /// Scenario file (TOML, one table per scenario).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only this scenario; without --config, one of the built-ins
    /// `a1`, `zero`, `blowup`.
    #[arg(long)]
    scenario: Option<String>,
    /// Output prefix for `<prefix>_series.csv` and `<prefix>_verdicts.txt`.
    #[arg(long, default_value = "sqglab")]
    out: String,
    /// Re-evaluate verdicts from existing series files instead of running.
    #[arg(long)]
    check_only: bool,
    /// Override every random seed in the scenarios.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the available check names and exit.
    #[arg(long)]
    list_checks: bool,
}

const CHECK_HELP: [(&str, &str); 8] = [
    ("min_max", "minimum/maximum principle (sup norm nonincreasing for model B)"),
    ("energy", "H^{1/2} energy inequality with running dissipation"),
    ("mass_identity", "discrete L1 mass identity, absolute tolerance 1e-6"),
    ("wiener_monotone", "A^1 norm nonincreasing under the small-data threshold"),
    ("wiener_decay", "A^1 integral decay inequality"),
    ("weighted_growth", "slope stability of the weighted norm"),
    ("critical_coupling", "velocity gradient dominated by the dissipation norm"),
    ("half_norm_small_data", "unweighted H^{1/2} bound for 0 <= theta_0 < 1/2"),
];

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_checks {
        debug_assert!(CHECK_HELP.iter().map(|c| c.0).eq(CHECK_NAMES));
        for (name, help) in CHECK_HELP {
            println!("{name:<22} {help}");
        }
        return ExitCode::SUCCESS;
    }

    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        },
        None if args.scenario.is_some() => BUILTIN.to_string(),
        None => return fail("nothing to run: pass --config <path> or --scenario <name>"),
    };
    let mut scenarios = match parse_config(&text, args.seed) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if let Some(name) = &args.scenario {
        // a sweep scenario selects all of its expanded runs
        let prefix = format!("{name}_");
        scenarios.retain(|s| &s.name == name || s.name.starts_with(&prefix));
        if scenarios.is_empty() {
            return fail(format!("no scenario named `{name}`"));
        }
    }

    let results = execute(&scenarios, &args.out, args.check_only);
    let mut reports = Vec::new();
    let mut io_failed = false;
    let mut stdout = std::io::stdout().lock();
    for r in results {
        match r {
            Ok(report) => {
                let _ = summarize(&mut stdout, &report);
                reports.push(report);
            }
            Err(e) => {
                eprintln!("error: {e}");
                io_failed = true;
            }
        }
    }
    let code = combined_exit(&reports);
    if io_failed && code != execute::EXIT_BLOW_UP {
        return ExitCode::from(EXIT_USAGE as u8);
    }
    ExitCode::from(code as u8)
}
