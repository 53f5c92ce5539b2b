//! Cycle work, its stage decomposition, Shannon information and the search
//! for work-maximising feedback protocols.

mod optimize;
mod protocol;
mod work;

pub use optimize::{
    best_on_grid, optimize_branch, optimize_protocol, BranchOptimum, OptimizerGrids, ProbabilityGrid, ProtocolOptimum,
};
pub use protocol::{Mode, Protocol, Setting};
pub use work::{
    cycle_work, work_terms, work_from_probabilities, n23_curve, shannon_information, step_decomposition, work_csv_header,
    write_work_csv, StepWorks, WorkReport,
};
