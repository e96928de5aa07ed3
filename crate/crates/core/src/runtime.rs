use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::layout::Cell;
use crate::schedule::Schedule;
use crate::transpile::IsaInstruction;

#[derive(Debug, Error, PartialEq)]
pub enum RuntimeError {
    #[error("success probability must be in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("cannot summarize an empty result list")]
    EmptyResults,
}

/// Stochastic execution parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuntimeParams {
    /// Acceptance probability of one distillation attempt.
    pub p_success: f64,
    pub seed: u64,
    pub trials: u32,
}

impl RuntimeParams {
    pub fn new(p_success: f64, seed: u64, trials: u32) -> Result<Self, RuntimeError> {
        if !(p_success > 0.0 && p_success <= 1.0) {
            return Err(RuntimeError::InvalidProbability(p_success));
        }
        Ok(RuntimeParams {
            p_success,
            seed,
            trials,
        })
    }
}

/// Realized execution of one schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeResult {
    pub total_cycles: u64,
    /// Realized (start, end) per instruction, indexed by instruction id.
    pub realized: Vec<(u64, u64)>,
    /// Number of pi/8 rotations whose distillation needed more than one round.
    pub delayed_distills: u64,
    /// Total extra cycles added to distillation phases.
    pub added_cycles: u64,
}

fn geometric<R: Rng>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    let u: f64 = rng.gen();
    ((1.0 - u).ln() / (1.0 - p).ln()).floor() as u64 + 1
}

/// Rounds until the first of `d_patches` parallel distillation processes
/// succeeds: the minimum of D independent Geometric(p) draws.
pub fn sample_distill_rounds<R: Rng>(p: f64, d_patches: u32, rng: &mut R) -> u64 {
    (0..d_patches).map(|_| geometric(p, rng)).min().unwrap_or(1)
}

/// Expected value of `sample_distill_rounds`: 1 / (1 - (1-p)^D).
pub fn expected_distill_rounds(p: f64, d_patches: u32) -> f64 {
    1.0 / (1.0 - (1.0 - p).powi(d_patches as i32))
}

/// Runs one trial of the schedule. Every pi/8 rotation's distillation phase
/// is lengthened by m * (rounds - 1); the delay propagates through shared
/// patches: a microinstruction waits for its own patch's predecessors, and a
/// joint (lattice surgery / data-in-operation) phase waits for all involved
/// patches. Deterministic given the seed.
pub fn simulate(schedule: &Schedule, rt: &RuntimeParams) -> RuntimeResult {
    let mut rng = ChaCha8Rng::seed_from_u64(rt.seed);
    let m = schedule.params.distill_cost as u64;

    // Instructions in scheduled-start order decide the sampling order.
    let mut order: Vec<usize> = (0..schedule.instructions.len()).collect();
    order.sort_by_key(|&i| (schedule.instructions[i].start, schedule.instructions[i].id));

    let mut rounds: HashMap<u32, u64> = HashMap::new();
    let mut delayed_distills = 0;
    let mut added_cycles = 0;
    for &i in &order {
        let instr = &schedule.instructions[i];
        if matches!(instr.instruction, IsaInstruction::EighthRot { .. }) {
            let r = sample_distill_rounds(rt.p_success, schedule.params.distill_patches, &mut rng);
            if r > 1 {
                delayed_distills += 1;
                added_cycles += m * (r - 1);
            }
            rounds.insert(instr.id, r);
        }
    }

    // Process phases in global scheduled order; per patch this matches the
    // committed order, so "preceding microinstructions" are already realized.
    let mut phase_refs: Vec<(u64, u32, usize, usize)> = Vec::new();
    for (index, instr) in schedule.instructions.iter().enumerate() {
        for (phase_index, phase) in instr.phases.iter().enumerate() {
            phase_refs.push((instr.start + phase.offset, instr.id, index, phase_index));
        }
    }
    phase_refs.sort();

    let mut patch_ready: HashMap<Cell, u64> = HashMap::new();
    let mut realized: Vec<(u64, u64)> = vec![(0, 0); schedule.instructions.len()];
    for instr in &schedule.instructions {
        realized[instr.id as usize] = (instr.start, instr.start);
    }
    let mut started: Vec<bool> = vec![false; schedule.instructions.len()];

    for (scheduled_start, _, index, phase_index) in phase_refs {
        let instr = &schedule.instructions[index];
        let id = instr.id as usize;
        let phase = &instr.phases[phase_index];
        // Joint phases wait on all involved patches; non-joint phases are
        // single-cell, so the same maximum applies.
        debug_assert!(phase.joint || phase.cells.len() == 1);
        let ready = phase
            .cells
            .iter()
            .map(|&(c, _)| patch_ready.get(&c).copied().unwrap_or(0))
            .max()
            .unwrap_or(0);
        let start = scheduled_start.max(ready);
        let stretch = if phase.stretches {
            m * (rounds.get(&instr.id).copied().unwrap_or(1) - 1)
        } else {
            0
        };
        let end = start + phase.duration + stretch;
        for &(cell, _) in &phase.cells {
            patch_ready.insert(cell, end);
        }
        if !started[id] {
            realized[id] = (start, end);
            started[id] = true;
        } else {
            realized[id].0 = realized[id].0.min(start);
            realized[id].1 = realized[id].1.max(end);
        }
    }

    // Zero-length markers realize at their patch's current completion.
    for instr in &schedule.instructions {
        if instr.phases.is_empty() {
            let cell = instr
                .instruction
                .support()
                .first()
                .and_then(|&q| schedule.mapping.cell_of(q));
            let at = cell
                .and_then(|c| patch_ready.get(&c).copied())
                .unwrap_or(0)
                .max(instr.start);
            realized[instr.id as usize] = (at, at);
        }
    }

    let total_cycles = realized.iter().map(|&(_, end)| end).max().unwrap_or(0);
    RuntimeResult {
        total_cycles,
        realized,
        delayed_distills,
        added_cycles,
    }
}

// Derives independent per-trial seeds from the base seed (splitmix64 step).
fn trial_seed(base: u64, trial: u32) -> u64 {
    let mut z = base
        .wrapping_add((trial as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Runs `rt.trials` independent trials with derived sub-seeds.
pub fn run_trials(schedule: &Schedule, rt: &RuntimeParams) -> Vec<RuntimeResult> {
    (0..rt.trials)
        .map(|trial| {
            let params = RuntimeParams {
                seed: trial_seed(rt.seed, trial),
                ..*rt
            };
            simulate(schedule, &params)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub stddev: f64,
    pub min: u64,
    pub max: u64,
}

/// Sample statistics of realized total cycle counts.
pub fn summarize(results: &[RuntimeResult]) -> Result<SummaryStats, RuntimeError> {
    if results.is_empty() {
        return Err(RuntimeError::EmptyResults);
    }
    let n = results.len() as f64;
    let mean = results.iter().map(|r| r.total_cycles as f64).sum::<f64>() / n;
    let variance = results
        .iter()
        .map(|r| (r.total_cycles as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(SummaryStats {
        mean,
        stddev: variance.sqrt(),
        min: results.iter().map(|r| r.total_cycles).min().unwrap(),
        max: results.iter().map(|r| r.total_cycles).max().unwrap(),
    })
}

/// Results CSV: one line per trial.
pub fn results_csv(results: &[RuntimeResult]) -> String {
    let mut out = String::from("trial,total_cycles,delayed_distills,added_cycles\n");
    for (trial, result) in results.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            trial, result.total_cycles, result.delayed_distills, result.added_cycles
        ));
    }
    out
}
