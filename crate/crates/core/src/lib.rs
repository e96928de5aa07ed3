//! Compilation and runtime estimation for Pauli-based computation on surface
//! code patch grids.
//!
//! The pipeline: an input circuit (Clifford+T plus arbitrary Z rotations) is
//! synthesized into Clifford+T, transpiled into one of two instruction sets
//! (sequential Pauli-based computation, or the locality-aware variant that
//! keeps gate supports), mapped onto a 2D patch layout, scheduled greedily
//! with BFS routing and in-place magic state distillation, and finally
//! executed under a stochastic distillation-retry model to estimate cycle
//! counts.

pub mod ir;
pub mod layout;
pub mod oracle;
pub mod pauli;
pub mod report;
pub mod runtime;
pub mod schedule;
pub mod synth;
pub mod transpile;

pub use ir::{gen_ising, gen_rcs, parse_ir, Circuit, IrInstruction};
pub use layout::{
    default_mapping, gen_sparse, gen_standard, parse_mapping, spc_patch_count, Cell, CellRole,
    Layout, Mapping,
};
pub use pauli::{
    clifford_as_quarters, commutes, multiply, push_right, PauliAxis, PauliMeasurement, Phase,
    Rotation, RotationKind, Sign, SignedAxis, SignedPauli,
};
pub use report::{
    emit_report, run_compare, sweep_p_success, BenchmarkKind, ComparisonRow, LayoutKind,
    RunConfig,
};
pub use runtime::{
    run_trials, sample_distill_rounds, simulate, summarize, RuntimeParams, RuntimeResult,
    SummaryStats,
};
pub use schedule::{
    allocate_distillation, duration, route_surgery, schedule, Microinstruction, MicroKind,
    Occupancy, Phase as SchedulePhase, Schedule, ScheduleParams, ScheduledInstruction,
};
pub use synth::{synthesize, SynthesisParams};
pub use transpile::{
    lapbc_transpile, parse_isa, spc_cost, spc_transpile, IsaFlavor, IsaInstruction, IsaProgram,
};
