//! Tables, plots, long-format records and markdown reports built from saved evals.

pub mod format;
pub mod plot;
pub mod records;
pub mod scaffold;
pub mod svg;
pub mod table;
pub mod writeup;

pub use format::format_number;
pub use plot::{plot_eval, plot_eval_by, plot_evals, EvalByKind, EvalByOptions, Plot};
pub use records::{evals_to_records, write_records_csv, EvalRecord};
pub use scaffold::create_scaffold;
pub use table::{tabulate_eval, TableFormat, TableSpec};
pub use writeup::{generate_report, record_provenance, write_report, Report};
