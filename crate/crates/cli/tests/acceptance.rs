//! Acceptance criteria 1 to 11, one line each.
//!
//! The Monte Carlo heavy criteria run with reduced trajectory counts unless
//! `SSEP_ACCEPTANCE_FULL=1` is set; `SSEP_ACCEPTANCE_TRAJECTORIES=<m>` fixes
//! the count explicitly. The line of each reduced criterion says so.

use std::process::ExitCode;

use ssep_cli::config::{Budget, Suite};
use ssep_cli::verify::{self, Plan, DEFAULT_SEED};

fn main() -> ExitCode {
    let full = std::env::var("SSEP_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    let trajectories = std::env::var("SSEP_ACCEPTANCE_TRAJECTORIES").ok().and_then(|v| v.parse().ok());
    let plan = Plan {
        suite: Suite::All,
        budget: if full { Budget::Full } else { Budget::Fast },
        trajectories,
        seed: DEFAULT_SEED,
    };
    println!("acceptance: budget {:?}", plan.budget);
    let criteria = verify::run(&plan, |c| println!("{}", c.line()));
    let passed = criteria.iter().filter(|c| c.passed()).count();
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
