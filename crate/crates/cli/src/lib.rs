//! Command-line front end for `evolalg`: the algebra file format, JSON
//! reports and the acceptance suite.

pub mod acceptance;
pub mod app;
pub mod format;
pub mod report;
pub mod source;

pub use acceptance::{run_acceptance_suite, AcceptanceSummary, Suite};
pub use app::run;
