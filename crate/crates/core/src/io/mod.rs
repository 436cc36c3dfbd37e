//! Instance files and CSV reports.

pub mod csv;
pub mod instance_file;

pub use self::csv::{write_report, ReportRow};
pub use instance_file::{parse_instance, serialize_instance};
