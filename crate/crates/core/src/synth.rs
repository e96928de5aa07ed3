use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::ir::{Circuit, IrInstruction};
use crate::pauli::{PauliAxis, Sign, SignedAxis};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("precision must be in (0, 1), got {0}")]
    InvalidPrecision(f64),
    #[error("length stddev must be finite and >= 0, got {0}")]
    InvalidStddev(f64),
}

/// Parameters of the gate-synthesis cost emulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthesisParams {
    /// Target rotation precision rho; the synthesized T count scales with
    /// log2(1/rho).
    pub rho: f64,
    pub length_stddev: f64,
    pub seed: u64,
}

impl SynthesisParams {
    pub fn new(rho: f64, length_stddev: f64, seed: u64) -> Result<Self, SynthError> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(SynthError::InvalidPrecision(rho));
        }
        if !(length_stddev.is_finite() && length_stddev >= 0.0) {
            return Err(SynthError::InvalidStddev(length_stddev));
        }
        Ok(SynthesisParams {
            rho,
            length_stddev,
            seed,
        })
    }

    /// delta with 2^-delta = rho.
    pub fn delta(&self) -> f64 {
        (1.0 / self.rho).log2()
    }

    /// Mean synthesized sequence length, 1.5 * delta.
    pub fn mean_length(&self) -> f64 {
        1.5 * self.delta()
    }
}

const AXES: [SignedAxis; 6] = [
    SignedAxis { sign: Sign::Plus, axis: PauliAxis::X },
    SignedAxis { sign: Sign::Plus, axis: PauliAxis::Y },
    SignedAxis { sign: Sign::Plus, axis: PauliAxis::Z },
    SignedAxis { sign: Sign::Minus, axis: PauliAxis::X },
    SignedAxis { sign: Sign::Minus, axis: PauliAxis::Y },
    SignedAxis { sign: Sign::Minus, axis: PauliAxis::Z },
];

fn sample_length<R: Rng>(params: &SynthesisParams, rng: &mut R) -> u32 {
    let mean = params.mean_length();
    let sampled = if params.length_stddev == 0.0 {
        mean
    } else {
        Normal::new(mean, params.length_stddev).unwrap().sample(rng)
    };
    sampled.round().max(0.0) as u32
}

/// Replaces every arbitrary-angle Z rotation by a cost-equivalent random
/// Clifford+T tail: l single-qubit pi/8 rotations with uniformly random
/// signed axes followed by two random pi/4 rotations, where l is drawn from
/// Normal(1.5 * log2(1/rho), length_stddev) rounded and clamped at zero.
/// The tail does not approximate the angle numerically; it only reproduces
/// the synthesis cost. Everything else passes through unchanged.
pub fn synthesize(circuit: &Circuit, params: &SynthesisParams) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut instructions = Vec::with_capacity(circuit.instructions.len());
    for instr in &circuit.instructions {
        match instr {
            IrInstruction::RotateZ { qubit, .. } => {
                let length = sample_length(params, &mut rng);
                for _ in 0..length {
                    instructions.push(IrInstruction::EighthRot {
                        qubit: *qubit,
                        axis: AXES[rng.gen_range(0..AXES.len())],
                    });
                }
                for _ in 0..2 {
                    instructions.push(IrInstruction::QuarterRot {
                        qubit: *qubit,
                        axis: AXES[rng.gen_range(0..AXES.len())],
                    });
                }
            }
            other => instructions.push(other.clone()),
        }
    }
    Circuit {
        qubit_count: circuit.qubit_count,
        instructions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{gen_ising, gen_rcs, parse_ir};

    #[test]
    fn test_delta_and_mean_for_1e_minus_7() {
        let params = SynthesisParams::new(1e-7, 2.0, 0).unwrap();
        assert!((params.delta() - 23.25349666421154).abs() < 1e-10);
        assert!((params.mean_length() - 34.88024499631731).abs() < 1e-10);
    }

    #[test]
    fn test_no_rotate_z_passes_through_byte_identical() {
        let circuit = gen_rcs(3, 3, 5, 11);
        let params = SynthesisParams::new(1e-7, 2.0, 0).unwrap();
        let out = synthesize(&circuit, &params);
        assert_eq!(out.serialize(), circuit.serialize());
    }

    #[test]
    fn test_zero_stddev_gives_exact_length() {
        let circuit = parse_ir("qubits 1\nrz 0 0.5\nrz 0 1.25").unwrap();
        let params = SynthesisParams::new(2f64.powi(-20), 0.0, 9).unwrap();
        let out = synthesize(&circuit, &params);
        // 1.5 * 20 = 30 eighths plus 2 quarters per rotation.
        assert_eq!(out.instructions.len(), 2 * 32);
        let eighths = out
            .instructions
            .iter()
            .filter(|i| matches!(i, IrInstruction::EighthRot { .. }))
            .count();
        assert_eq!(eighths, 60);
        assert!(out
            .instructions
            .iter()
            .all(|i| !matches!(i, IrInstruction::RotateZ { .. })));
    }

    #[test]
    fn test_determinism() {
        let circuit = gen_ising(2, 2, 1, 1.0, 1.0, 1.0);
        let params = SynthesisParams::new(1e-7, 2.0, 1234).unwrap();
        let a = synthesize(&circuit, &params).serialize();
        let b = synthesize(&circuit, &params).serialize();
        assert_eq!(a, b);
    }

    #[test]
    fn test_instruction_count_identity() {
        let circuit = gen_ising(2, 2, 1, 1.0, 1.0, 1.0);
        let params = SynthesisParams::new(1e-3, 1.0, 5).unwrap();
        let out = synthesize(&circuit, &params);
        let rz_count = circuit
            .instructions
            .iter()
            .filter(|i| matches!(i, IrInstruction::RotateZ { .. }))
            .count();
        let tail_len: usize = out
            .instructions
            .iter()
            .filter(|i| {
                matches!(
                    i,
                    IrInstruction::EighthRot { .. } | IrInstruction::QuarterRot { .. }
                )
            })
            .count();
        assert_eq!(
            out.instructions.len(),
            circuit.instructions.len() - rz_count + tail_len
        );
    }

    #[test]
    fn test_sample_mean_tracks_target() {
        let params = SynthesisParams::new(1e-7, 2.0, 77).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let total: u64 = (0..draws)
            .map(|_| sample_length(&params, &mut rng) as u64)
            .sum();
        let mean = total as f64 / draws as f64;
        let target = params.mean_length();
        assert!(
            (mean - target).abs() / target < 0.01,
            "mean {} target {}",
            mean,
            target
        );
    }
}
