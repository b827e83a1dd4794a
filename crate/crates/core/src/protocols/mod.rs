//! Transfer, measurement and state-preparation experiments.

pub mod coherent;
pub mod measure;
pub mod search;
pub mod sweep;
pub mod transfer;

pub use coherent::{driven_jc_ground_state, prepare_coherent, prepare_coherent_reverse, CoherentReport, JcGroundReport};
pub use measure::{outcome_distribution, projective_measure, Subsystem};
pub use search::{find_peak, fit_power_law, golden_section_max, spearman, Peak, PowerLawFit};
pub use sweep::{effective_vs_full_sweep, SweepKind, SweepOptions, ValidationReport};
pub use transfer::{
    degenerate_transfer, fock_input, nondegenerate_transfer, FidelityPeak, ProjectionSummary,
    Protocol, SeriesPoint, TransferOptions, TransferReport,
};
