pub mod error;
pub mod generate;
pub mod plot;
pub mod run;
pub mod scenario;
pub mod verify;

pub use error::CliError;
