//! Front end of the `ssep` binary: configuration, commands and the
//! acceptance runner behind `ssep verify`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use std::path::PathBuf;

use config::{Cli, Resolved, Run};
use error::{CliError, CliResult};

fn install_threads(run: &Run) -> CliResult<()> {
    if let Some(k) = run.threads {
        // A pool installed earlier in the same process wins; results do not
        // depend on the thread count anyway.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(())
}

/// Resolves the configuration and runs the command; returns the files written.
pub fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let (resolved, run) = config::resolve(cli)?;
    install_threads(&run)?;
    match &resolved {
        Resolved::Spectrum(c) => commands::spectrum(c, &resolved, &run),
        Resolved::Simulate(c) => commands::simulate(c, &resolved, &run),
        Resolved::Profile(c) => commands::profile(c, &resolved, &run),
        Resolved::Correlations(c) => commands::correlations(c, &resolved, &run),
        Resolved::Covariance(c) => commands::covariance(c, &resolved, &run),
        Resolved::Verify(c) => {
            let plan = verify::Plan { suite: c.suite, budget: c.budget, trajectories: c.trajectories, seed: c.seed };
            let criteria = verify::run(&plan, |c| println!("{}", c.line()));
            let path = verify::write_csv(&criteria, &output::header_lines(&resolved, &run), &run.out)?;
            let failed: Vec<String> = criteria.iter().filter(|c| !c.passed()).map(|c| c.id.to_string()).collect();
            if failed.is_empty() {
                Ok(vec![path])
            } else {
                Err(CliError::Verification(format!("criteria {} failed; see {}", failed.join(", "), path.display())))
            }
        }
    }
}
