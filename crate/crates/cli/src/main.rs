use std::collections::HashMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lapbc_core::ir::{gen_ising, gen_rcs, parse_ir};
use lapbc_core::layout::{default_mapping, parse_mapping};
use lapbc_core::report::{
    emit_report, run_compare, sweep_p_success, BenchmarkKind, LayoutKind, RunConfig,
};
use lapbc_core::runtime::{results_csv, run_trials, RuntimeParams};
use lapbc_core::schedule::schedule;
use lapbc_core::synth::{synthesize, SynthesisParams};
use lapbc_core::transpile::{lapbc_transpile, parse_isa, spc_cost, spc_transpile};

#[derive(Parser)]
#[command(
    name = "lapbc",
    about = "Compile and simulate Pauli-based computation on surface-code patch grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Args)]
struct CommonParams {
    /// Code distance (cycles per lattice surgery step).
    #[arg(long = "d", default_value_t = 15)]
    d: u32,
    /// Cycles per magic state distillation round.
    #[arg(long = "m", default_value_t = 27)]
    m: u32,
    /// Distillation acceptance probability per attempt.
    #[arg(long = "p-success", default_value_t = 0.25)]
    p_success: f64,
    /// Connected distillation patches per pi/8 rotation.
    #[arg(long = "D", default_value_t = 4)]
    distill_patches: u32,
    /// Gate synthesis target precision.
    #[arg(long = "rho", default_value_t = 1e-7)]
    rho: f64,
    /// Synthesized-length standard deviation.
    #[arg(long = "length-stddev", default_value_t = 2.0)]
    length_stddev: f64,
    #[arg(long = "seed", default_value_t = 1)]
    seed: u64,
    #[arg(long = "trials", default_value_t = 10)]
    trials: u32,
    /// Patch layout: standard or sparse.
    #[arg(long = "layout", default_value = "standard")]
    layout: String,
    /// Data-qubit grid, e.g. 6x6. `compare` accepts a comma-separated list.
    #[arg(long = "data-grid", default_value = "6x6")]
    data_grid: String,
    /// External qubit-mapping file; defaults to row-major assignment.
    #[arg(long = "mapping")]
    mapping: Option<PathBuf>,
    /// Keep all distillation patches for the whole rotation.
    #[arg(long = "hold-distill", default_value_t = false)]
    hold_distill: bool,
    /// Flat key = value config file; command-line flags override it.
    #[arg(long = "config")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random-circuit-sampling benchmark in IR text form.
    GenRcs {
        #[command(flatten)]
        common: CommonParams,
        #[arg(long = "layers", default_value_t = 500)]
        layers: u32,
        #[arg(long = "out")]
        out: PathBuf,
    },
    /// Generate a 2D transverse-field Ising Trotter circuit.
    GenIsing {
        #[command(flatten)]
        common: CommonParams,
        #[arg(long = "steps", default_value_t = 1)]
        steps: u32,
        #[arg(long = "J", default_value_t = 1.0)]
        coupling: f64,
        #[arg(long = "g", default_value_t = 1.0)]
        field: f64,
        #[arg(long = "t", default_value_t = 1.0)]
        time: f64,
        #[arg(long = "out")]
        out: PathBuf,
    },
    /// Replace arbitrary-angle rotations with synthesized Clifford+T tails.
    Synth {
        #[command(flatten)]
        common: CommonParams,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        out: PathBuf,
    },
    /// Transpile IR text into an ISA program (spc or lapbc).
    Transpile {
        #[command(flatten)]
        common: CommonParams,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "flavor", default_value = "lapbc")]
        flavor: String,
        #[arg(long = "out")]
        out: PathBuf,
    },
    /// Schedule a lapbc ISA program onto a patch grid; writes the occupancy CSV.
    Schedule {
        #[command(flatten)]
        common: CommonParams,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        out: PathBuf,
        /// Print a plain-text occupancy grid at this cycle.
        #[arg(long = "snapshot")]
        snapshot: Option<u64>,
    },
    /// Schedule and stochastically execute an ISA program; writes per-trial CSV.
    Simulate {
        #[command(flatten)]
        common: CommonParams,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        out: PathBuf,
    },
    /// Run the full SPC-versus-LAPBC comparison for one or more grid sizes.
    Compare {
        #[command(flatten)]
        common: CommonParams,
        #[arg(long = "benchmark", default_value = "rcs")]
        benchmark: String,
        #[arg(long = "layers", default_value_t = 500)]
        layers: u32,
        #[arg(long = "steps", default_value_t = 1)]
        steps: u32,
        #[arg(long = "out")]
        out: PathBuf,
    },
    /// Re-simulate one benchmark across several p-success values.
    Sweep {
        #[command(flatten)]
        common: CommonParams,
        #[arg(long = "benchmark", default_value = "rcs")]
        benchmark: String,
        #[arg(long = "layers", default_value_t = 100)]
        layers: u32,
        #[arg(long = "steps", default_value_t = 1)]
        steps: u32,
        #[arg(long = "p-values", default_value = "0.1,0.25,0.4,0.7,0.9")]
        p_values: String,
        #[arg(long = "out")]
        out: PathBuf,
    },
}

fn parse_grid(text: &str) -> Result<(u32, u32)> {
    let parts: Vec<&str> = text.split('x').collect();
    if parts.len() != 2 {
        bail!("expected ROWSxCOLS, got {:?}", text);
    }
    Ok((
        parts[0].parse().context("bad grid rows")?,
        parts[1].parse().context("bad grid cols")?,
    ))
}

fn parse_layout(text: &str) -> Result<LayoutKind> {
    match text {
        "standard" => Ok(LayoutKind::Standard),
        "sparse" => Ok(LayoutKind::Sparse),
        other => bail!("unknown layout {:?} (expected standard or sparse)", other),
    }
}

// Merges `key = value` config-file entries into the common parameters. A flag
// given explicitly on the command line wins over the config file.
fn apply_config(common: &mut CommonParams, raw_args: &[String]) -> Result<()> {
    let Some(path) = &common.config else {
        return Ok(());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("config: cannot read {}", path.display()))?;
    let mut values = HashMap::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config: line {}: expected key = value", index + 1);
        };
        values.insert(key.trim().to_string(), value.trim().to_string());
    }
    let explicitly_set = |flag: &str| {
        raw_args
            .iter()
            .any(|a| a == flag || a.starts_with(&format!("{}=", flag)))
    };
    for (key, value) in values {
        if explicitly_set(&format!("--{}", key)) {
            continue;
        }
        match key.as_str() {
            "d" => common.d = value.parse().context("config: bad d")?,
            "m" => common.m = value.parse().context("config: bad m")?,
            "p-success" => common.p_success = value.parse().context("config: bad p-success")?,
            "D" => common.distill_patches = value.parse().context("config: bad D")?,
            "rho" => common.rho = value.parse().context("config: bad rho")?,
            "length-stddev" => {
                common.length_stddev = value.parse().context("config: bad length-stddev")?
            }
            "seed" => common.seed = value.parse().context("config: bad seed")?,
            "trials" => common.trials = value.parse().context("config: bad trials")?,
            "layout" => common.layout = value,
            "data-grid" => common.data_grid = value,
            "mapping" => common.mapping = Some(PathBuf::from(value)),
            "hold-distill" => {
                common.hold_distill = value.parse().context("config: bad hold-distill")?
            }
            other => bail!("config: unknown key {:?}", other),
        }
    }
    Ok(())
}

fn run_config(
    common: &CommonParams,
    benchmark: BenchmarkKind,
    grid: (u32, u32),
) -> Result<RunConfig> {
    Ok(RunConfig {
        code_distance: common.d,
        distill_cost: common.m,
        p_success: common.p_success,
        distill_patches: common.distill_patches,
        rho: common.rho,
        length_stddev: common.length_stddev,
        seed: common.seed,
        trials: common.trials,
        layout_kind: parse_layout(&common.layout)?,
        data_rows: grid.0,
        data_cols: grid.1,
        mapping_path: common.mapping.clone(),
        benchmark,
        hold_distill: common.hold_distill,
    })
}

fn benchmark_kind(name: &str, layers: u32, steps: u32) -> Result<BenchmarkKind> {
    match name {
        "rcs" => Ok(BenchmarkKind::Rcs { layers }),
        "ising" => Ok(BenchmarkKind::Ising {
            steps,
            j: 1.0,
            g: 1.0,
            t: 1.0,
        }),
        other => bail!("unknown benchmark {:?} (expected rcs or ising)", other),
    }
}

// Builds layout + mapping + schedule for an ISA program.
fn schedule_program(common: &CommonParams, text: &str) -> Result<lapbc_core::schedule::Schedule> {
    let program = parse_isa(text).context("transpile: bad ISA input")?;
    let grid = parse_grid(&common.data_grid)?;
    let layout = parse_layout(&common.layout)?.generate(grid.0, grid.1);
    let mapping = match &common.mapping {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("layout: cannot read {}", path.display()))?;
            parse_mapping(&text, &layout).context("layout: bad mapping file")?
        }
        None => default_mapping(&layout, program.qubit_count).context("layout")?,
    };
    let params =
        lapbc_core::schedule::ScheduleParams::new(common.d, common.m, common.distill_patches)
            .context("schedule")?
            .with_hold_distill(common.hold_distill);
    let sched = schedule(&program, &layout, &mapping, &params).context("schedule")?;
    sched.validate().context("schedule: validation")?;
    Ok(sched)
}

fn main() -> Result<()> {
    let raw_args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match cli.command {
        Command::GenRcs {
            mut common,
            layers,
            out,
        } => {
            apply_config(&mut common, &raw_args)?;
            let (rows, cols) = parse_grid(&common.data_grid)?;
            let circuit = gen_rcs(cols, rows, layers, common.seed);
            std::fs::write(&out, circuit.serialize()).context("generate: write")?;
        }
        Command::GenIsing {
            mut common,
            steps,
            coupling,
            field,
            time,
            out,
        } => {
            apply_config(&mut common, &raw_args)?;
            let (rows, cols) = parse_grid(&common.data_grid)?;
            let circuit = gen_ising(cols, rows, steps, coupling, field, time);
            std::fs::write(&out, circuit.serialize()).context("generate: write")?;
        }
        Command::Synth {
            mut common,
            input,
            out,
        } => {
            apply_config(&mut common, &raw_args)?;
            let text = std::fs::read_to_string(&input).context("synth: read input")?;
            let circuit = parse_ir(&text).context("synth: parse input")?;
            let params = SynthesisParams::new(common.rho, common.length_stddev, common.seed)
                .context("synth")?;
            std::fs::write(&out, synthesize(&circuit, &params).serialize())
                .context("synth: write")?;
        }
        Command::Transpile {
            mut common,
            input,
            flavor,
            out,
        } => {
            apply_config(&mut common, &raw_args)?;
            let text = std::fs::read_to_string(&input).context("transpile: read input")?;
            let circuit = parse_ir(&text).context("transpile: parse input")?;
            let program = match flavor.as_str() {
                "spc" => spc_transpile(&circuit).context("transpile")?,
                "lapbc" => lapbc_transpile(&circuit).context("transpile")?,
                other => bail!("transpile: unknown flavor {:?}", other),
            };
            if program.flavor == lapbc_core::transpile::IsaFlavor::Spc {
                eprintln!(
                    "spc cycles at d={}: {}",
                    common.d,
                    spc_cost(&program, common.d).context("transpile")?
                );
            }
            std::fs::write(&out, program.serialize()).context("transpile: write")?;
        }
        Command::Schedule {
            mut common,
            input,
            out,
            snapshot,
        } => {
            apply_config(&mut common, &raw_args)?;
            let text = std::fs::read_to_string(&input).context("schedule: read input")?;
            let sched = schedule_program(&common, &text)?;
            if let Some(cycle) = snapshot {
                print!("{}", sched.snapshot(cycle));
            }
            eprintln!("makespan: {} cycles", sched.makespan);
            std::fs::write(&out, sched.dump_csv()).context("schedule: write")?;
        }
        Command::Simulate {
            mut common,
            input,
            out,
        } => {
            apply_config(&mut common, &raw_args)?;
            let text = std::fs::read_to_string(&input).context("simulate: read input")?;
            let sched = schedule_program(&common, &text)?;
            let rt = RuntimeParams::new(common.p_success, common.seed, common.trials)
                .context("simulate")?;
            let results = run_trials(&sched, &rt);
            let stats = lapbc_core::runtime::summarize(&results).context("simulate")?;
            eprintln!(
                "makespan: {} cycles; realized mean {:.2} (stddev {:.2}, min {}, max {})",
                sched.makespan, stats.mean, stats.stddev, stats.min, stats.max
            );
            std::fs::write(&out, results_csv(&results)).context("simulate: write")?;
        }
        Command::Compare {
            mut common,
            benchmark,
            layers,
            steps,
            out,
        } => {
            apply_config(&mut common, &raw_args)?;
            let kind = benchmark_kind(&benchmark, layers, steps)?;
            let mut rows = Vec::new();
            let grids = common.data_grid.clone();
            for grid_text in grids.split(',') {
                let grid = parse_grid(grid_text.trim())?;
                let config = run_config(&common, kind.clone(), grid)?;
                let row = run_compare(&config)?;
                eprintln!(
                    "{}: spc={} lapbc={:.1} reduction={:.2}% parallelism={:.3}",
                    row.benchmark,
                    row.spc_cycles,
                    row.lapbc_mean_cycles,
                    row.reduction_percent,
                    row.parallelism
                );
                rows.push(row);
            }
            emit_report(&rows, &out)?;
        }
        Command::Sweep {
            mut common,
            benchmark,
            layers,
            steps,
            p_values,
            out,
        } => {
            apply_config(&mut common, &raw_args)?;
            let kind = benchmark_kind(&benchmark, layers, steps)?;
            let grid = parse_grid(&common.data_grid)?;
            let config = run_config(&common, kind, grid)?;
            let values: Vec<f64> = p_values
                .split(',')
                .map(|v| v.trim().parse::<f64>().context("bad p value"))
                .collect::<Result<_>>()?;
            let rows = sweep_p_success(&config, &values)?;
            for row in &rows {
                eprintln!(
                    "{}: lapbc={:.1} reduction={:.2}%",
                    row.benchmark, row.lapbc_mean_cycles, row.reduction_percent
                );
            }
            emit_report(&rows, &out)?;
        }
    }
    Ok(())
}
