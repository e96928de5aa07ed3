use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ir::{gen_ising, gen_rcs, Circuit};
use crate::layout::{default_mapping, gen_sparse, gen_standard, parse_mapping, spc_patch_count, Layout, Mapping};
use crate::runtime::{run_trials, summarize, RuntimeParams};
use crate::schedule::{schedule, Schedule, ScheduleParams};
use crate::synth::{synthesize, SynthesisParams};
use crate::transpile::{lapbc_transpile, spc_cost, spc_transpile};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("generate: {0}")]
    Generate(String),
    #[error("synth: {0}")]
    Synth(#[from] crate::synth::SynthError),
    #[error("transpile: {0}")]
    Transpile(#[from] crate::transpile::TranspileError),
    #[error("layout: {0}")]
    Layout(#[from] crate::layout::LayoutError),
    #[error("schedule: {0}")]
    Schedule(#[from] crate::schedule::ScheduleError),
    #[error("simulate: {0}")]
    Simulate(#[from] crate::runtime::RuntimeError),
    #[error("report: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Eq, PartialEq)]
pub enum LayoutKind {
    Standard,
    Sparse,
}

impl LayoutKind {
    pub fn generate(&self, a: u32, b: u32) -> Layout {
        match self {
            LayoutKind::Standard => gen_standard(a, b),
            LayoutKind::Sparse => gen_sparse(a, b),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BenchmarkKind {
    Rcs { layers: u32 },
    Ising { steps: u32, j: f64, g: f64, t: f64 },
}

impl BenchmarkKind {
    fn label(&self, rows: u32, cols: u32) -> String {
        match self {
            BenchmarkKind::Rcs { layers } => format!("rcs-{}x{}-{}", rows, cols, layers),
            BenchmarkKind::Ising { steps, .. } => format!("ising-{}x{}-{}", rows, cols, steps),
        }
    }
}

/// One end-to-end experiment configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub code_distance: u32,
    pub distill_cost: u32,
    pub p_success: f64,
    pub distill_patches: u32,
    pub rho: f64,
    pub length_stddev: f64,
    pub seed: u64,
    pub trials: u32,
    pub layout_kind: LayoutKind,
    /// Data-qubit grid dimensions (rows x cols); also the benchmark grid.
    pub data_rows: u32,
    pub data_cols: u32,
    pub mapping_path: Option<PathBuf>,
    pub benchmark: BenchmarkKind,
    pub hold_distill: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            code_distance: 15,
            distill_cost: 27,
            p_success: 0.25,
            distill_patches: 4,
            rho: 1e-7,
            length_stddev: 2.0,
            seed: 1,
            trials: 10,
            layout_kind: LayoutKind::Standard,
            data_rows: 6,
            data_cols: 6,
            mapping_path: None,
            benchmark: BenchmarkKind::Rcs { layers: 500 },
            hold_distill: false,
        }
    }
}

impl RunConfig {
    pub fn generate_circuit(&self) -> Circuit {
        match &self.benchmark {
            BenchmarkKind::Rcs { layers } => {
                gen_rcs(self.data_cols, self.data_rows, *layers, self.seed)
            }
            BenchmarkKind::Ising { steps, j, g, t } => {
                gen_ising(self.data_cols, self.data_rows, *steps, *j, *g, *t)
            }
        }
    }

    pub fn schedule_params(&self) -> Result<ScheduleParams, PipelineError> {
        Ok(ScheduleParams::new(self.code_distance, self.distill_cost, self.distill_patches)?
            .with_hold_distill(self.hold_distill))
    }

    pub fn synthesis_params(&self) -> Result<SynthesisParams, PipelineError> {
        Ok(SynthesisParams::new(self.rho, self.length_stddev, self.seed)?)
    }

    pub fn layout(&self) -> Layout {
        self.layout_kind.generate(self.data_rows, self.data_cols)
    }

    pub fn mapping(&self, layout: &Layout, qubit_count: u32) -> Result<Mapping, PipelineError> {
        match &self.mapping_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(parse_mapping(&text, layout)?)
            }
            None => Ok(default_mapping(layout, qubit_count)?),
        }
    }
}

/// One comparison between the sequential scheme and the locality-aware one.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub benchmark: String,
    pub n: u32,
    pub spc_cycles: u64,
    pub lapbc_mean_cycles: f64,
    pub lapbc_stddev: f64,
    pub parallelism: f64,
    pub reduction_percent: f64,
    pub patches_spc: u64,
    pub patches_lapbc: u64,
}

fn comparison_row(
    config: &RunConfig,
    benchmark: String,
    n: u32,
    spc_cycles: u64,
    lapbc_schedule: &Schedule,
    p_success: f64,
) -> Result<ComparisonRow, PipelineError> {
    let rt = RuntimeParams::new(p_success, config.seed, config.trials)?;
    let results = run_trials(lapbc_schedule, &rt);
    let stats = summarize(&results)?;
    Ok(ComparisonRow {
        benchmark,
        n,
        spc_cycles,
        lapbc_mean_cycles: stats.mean,
        lapbc_stddev: stats.stddev,
        parallelism: spc_cycles as f64 / stats.mean,
        reduction_percent: 100.0 * (1.0 - stats.mean / spc_cycles as f64),
        patches_spc: spc_patch_count(n),
        patches_lapbc: lapbc_schedule.layout.total_cells() as u64,
    })
}

/// Builds the LAPBC schedule for a config: generate, synthesize, transpile,
/// map, schedule, validate.
pub fn build_schedule(config: &RunConfig) -> Result<Schedule, PipelineError> {
    let circuit = config.generate_circuit();
    let synthesized = synthesize(&circuit, &config.synthesis_params()?);
    let program = lapbc_transpile(&synthesized)?;
    let layout = config.layout();
    let mapping = config.mapping(&layout, program.qubit_count)?;
    let lapbc_schedule = schedule(&program, &layout, &mapping, &config.schedule_params()?)?;
    lapbc_schedule.validate()?;
    Ok(lapbc_schedule)
}

/// Analytic SPC cycle count for a config.
pub fn spc_cycles(config: &RunConfig) -> Result<u64, PipelineError> {
    let circuit = config.generate_circuit();
    let synthesized = synthesize(&circuit, &config.synthesis_params()?);
    let program = spc_transpile(&synthesized)?;
    Ok(spc_cost(&program, config.code_distance)?)
}

/// Full pipeline comparison: analytic SPC cost (no stochastic delays) against
/// the simulated LAPBC execution over `trials` runs.
pub fn run_compare(config: &RunConfig) -> Result<ComparisonRow, PipelineError> {
    let n = config.data_rows * config.data_cols;
    let spc = spc_cycles(config)?;
    let lapbc_schedule = build_schedule(config)?;
    comparison_row(
        config,
        config.benchmark.label(config.data_rows, config.data_cols),
        n,
        spc,
        &lapbc_schedule,
        config.p_success,
    )
}

/// Re-simulates one schedule across several acceptance probabilities; the
/// schedule is built once and reused.
pub fn sweep_p_success(
    config: &RunConfig,
    p_values: &[f64],
) -> Result<Vec<ComparisonRow>, PipelineError> {
    let n = config.data_rows * config.data_cols;
    let spc = spc_cycles(config)?;
    let lapbc_schedule = build_schedule(config)?;
    let base = config.benchmark.label(config.data_rows, config.data_cols);
    p_values
        .iter()
        .map(|&p| {
            comparison_row(
                config,
                format!("{}-p{}", base, p),
                n,
                spc,
                &lapbc_schedule,
                p,
            )
        })
        .collect()
}

pub fn report_csv(rows: &[ComparisonRow]) -> String {
    let mut sorted: Vec<&ComparisonRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.n);
    let mut out = String::from(
        "benchmark,n,spc_cycles,lapbc_mean_cycles,lapbc_stddev,parallelism,reduction_percent,patches_spc,patches_lapbc\n",
    );
    for row in sorted {
        writeln!(
            out,
            "{},{},{},{:.2},{:.2},{:.4},{:.2},{},{}",
            row.benchmark,
            row.n,
            row.spc_cycles,
            row.lapbc_mean_cycles,
            row.lapbc_stddev,
            row.parallelism,
            row.reduction_percent,
            row.patches_spc,
            row.patches_lapbc
        )
        .unwrap();
    }
    out
}

/// Writes the comparison CSV, rows sorted by data-qubit count.
pub fn emit_report(rows: &[ComparisonRow], path: &Path) -> Result<(), PipelineError> {
    std::fs::write(path, report_csv(rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> RunConfig {
        RunConfig {
            data_rows: 2,
            data_cols: 2,
            trials: 3,
            benchmark: BenchmarkKind::Rcs { layers: 10 },
            ..RunConfig::default()
        }
    }

    #[test]
    fn test_run_compare_smoke() {
        let row = run_compare(&small_config()).unwrap();
        assert_eq!(row.n, 4);
        assert!(row.spc_cycles > 0);
        assert!(row.lapbc_mean_cycles > 0.0);
        assert_eq!(row.patches_spc, spc_patch_count(4));
        assert_eq!(row.patches_lapbc, 9);
        assert!((row.parallelism - row.spc_cycles as f64 / row.lapbc_mean_cycles).abs() < 1e-12);
    }

    #[test]
    fn test_run_compare_deterministic() {
        let a = run_compare(&small_config()).unwrap();
        let b = run_compare(&small_config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn test_sweep_p_one_equals_makespan() {
        let config = small_config();
        let expected_makespan = build_schedule(&config).unwrap().makespan;
        let rows = sweep_p_success(&config, &[1.0]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].lapbc_mean_cycles, expected_makespan as f64);
        assert_eq!(rows[0].lapbc_stddev, 0.0);
    }

    #[test]
    fn test_sweep_repeat_identical() {
        let config = small_config();
        let a = sweep_p_success(&config, &[0.25, 0.25]).unwrap();
        assert_eq!(a[0].lapbc_mean_cycles, a[1].lapbc_mean_cycles);
    }

    #[test]
    fn test_report_csv_format() {
        let rows = vec![
            ComparisonRow {
                benchmark: "rcs-3x3-10".into(),
                n: 9,
                spc_cycles: 1000,
                lapbc_mean_cycles: 600.0,
                lapbc_stddev: 10.0,
                parallelism: 1.6667,
                reduction_percent: 40.0,
                patches_spc: 28,
                patches_lapbc: 36,
            },
            ComparisonRow {
                benchmark: "rcs-2x2-10".into(),
                n: 4,
                spc_cycles: 500,
                lapbc_mean_cycles: 400.0,
                lapbc_stddev: 5.0,
                parallelism: 1.25,
                reduction_percent: 20.0,
                patches_spc: 15,
                patches_lapbc: 9,
            },
        ];
        let csv = report_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        // Sorted by n ascending, reduction with two decimals.
        assert!(lines[1].starts_with("rcs-2x2-10,4,"));
        assert!(lines[1].contains(",20.00,"));
        assert!(lines[2].starts_with("rcs-3x3-10,9,"));
    }

    #[test]
    fn test_ising_compare_smoke() {
        let config = RunConfig {
            data_rows: 2,
            data_cols: 2,
            trials: 2,
            rho: 1e-3,
            benchmark: BenchmarkKind::Ising {
                steps: 1,
                j: 1.0,
                g: 1.0,
                t: 1.0,
            },
            ..RunConfig::default()
        };
        let row = run_compare(&config).unwrap();
        assert!(row.spc_cycles > 0);
        assert!(row.lapbc_mean_cycles > 0.0);
    }
}
