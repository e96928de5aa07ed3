use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::ir::{Circuit, IrInstruction};
use crate::pauli::{PauliAxis, PauliMeasurement, Rotation, RotationKind, Sign, SignedPauli};
use crate::transpile::{IsaInstruction, IsaProgram};

const MAX_QUBITS: u32 = 10;
const MAX_MEASUREMENTS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("too many qubits for the dense oracle: {0} (limit {MAX_QUBITS})")]
    TooManyQubits(u32),
    #[error("too many measurements for branch enumeration: {0} (limit {MAX_MEASUREMENTS})")]
    TooManyMeasurements(usize),
    #[error("unitary_of cannot handle measurements or initializations")]
    NonUnitaryOp,
    #[error("measurement provenance mismatch: {0} vs {1} measurements")]
    ProvenanceMismatch(usize, usize),
}

/// A program step the reference simulator understands.
#[derive(Clone, Debug)]
pub enum OracleOp {
    Gate(IrInstruction),
    Rotation(Rotation),
    Measure(PauliMeasurement),
    Init(u32),
}

/// Exact distribution over measurement-outcome bitstrings. Bit k of a key is
/// the outcome of the k-th measurement in program order.
#[derive(Clone, Debug)]
pub struct OutcomeDistribution {
    pub outcome_count: usize,
    probs: BTreeMap<u32, f64>,
}

impl OutcomeDistribution {
    pub fn probability(&self, bits: u32) -> f64 {
        self.probs.get(&bits).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.probs.iter().map(|(&k, &p)| (k, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn total_variation(&self, other: &OutcomeDistribution) -> f64 {
        let keys: std::collections::BTreeSet<u32> = self
            .probs
            .keys()
            .chain(other.probs.keys())
            .copied()
            .collect();
        0.5 * keys
            .into_iter()
            .map(|k| (self.probability(k) - other.probability(k)).abs())
            .sum::<f64>()
    }
}

struct StateVector {
    n: u32,
    amps: Vec<Complex64>,
}

impl StateVector {
    fn zero_state(n: u32) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    fn norm_squared(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn apply_single(&mut self, qubit: u32, m: [[Complex64; 2]; 2]) {
        let mask = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_cx(&mut self, control: u32, target: u32) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
    }

    fn apply_cz(&mut self, a: u32, b: u32) {
        let mask = (1usize << a) | (1usize << b);
        for i in 0..self.amps.len() {
            if i & mask == mask {
                self.amps[i] = -self.amps[i];
            }
        }
    }

    // Replaces the state with p applied to it, sign included.
    fn apply_pauli(&mut self, p: &SignedPauli) {
        let mut xmask = 0usize;
        let mut zmask = 0usize;
        let mut ymask = 0usize;
        for (q, axis) in p.sites() {
            match axis {
                PauliAxis::X => xmask |= 1 << q,
                PauliAxis::Y => {
                    xmask |= 1 << q;
                    ymask |= 1 << q;
                }
                PauliAxis::Z => zmask |= 1 << q,
            }
        }
        let y_count = ymask.count_ones();
        let base = match y_count % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let base = if p.sign() == Sign::Minus { -base } else { base };
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &amp) in self.amps.iter().enumerate() {
            // Z sites and Y sites contribute (-1) on set bits.
            let flips = ((i & zmask) | (i & ymask)).count_ones();
            let factor = if flips % 2 == 0 { base } else { -base };
            out[i ^ xmask] = factor * amp;
        }
        self.amps = out;
    }

    // exp(i * theta * axis) = cos(theta) I + i sin(theta) axis.
    fn apply_rotation(&mut self, rotation: &Rotation) {
        let theta = match rotation.kind {
            RotationKind::Quarter => std::f64::consts::FRAC_PI_4,
            RotationKind::Eighth => std::f64::consts::PI / 8.0,
        };
        let mut pauli_part = StateVector {
            n: self.n,
            amps: self.amps.clone(),
        };
        pauli_part.apply_pauli(&rotation.axis);
        let c = theta.cos();
        let s = Complex64::new(0.0, theta.sin());
        for (a, pa) in self.amps.iter_mut().zip(pauli_part.amps.iter()) {
            *a = c * *a + s * *pa;
        }
    }

    // Projects onto the (-1)^m eigenspace of the signed axis. Returns the
    // branch probability; the state is left unnormalized.
    fn project(&mut self, axis: &SignedPauli, outcome: u8) -> f64 {
        let mut pauli_part = StateVector {
            n: self.n,
            amps: self.amps.clone(),
        };
        pauli_part.apply_pauli(axis);
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        for (a, pa) in self.amps.iter_mut().zip(pauli_part.amps.iter()) {
            *a = 0.5 * (*a + sign * *pa);
        }
        self.norm_squared()
    }

    // Projects onto |0> of the qubit and renormalizes.
    fn init_zero(&mut self, qubit: u32) {
        let prob = self.project(&SignedPauli::z(qubit), 0);
        if prob > 0.0 {
            let scale = 1.0 / prob.sqrt();
            for a in &mut self.amps {
                *a *= scale;
            }
        }
    }

    fn apply_gate(&mut self, gate: &IrInstruction) -> Result<(), OracleError> {
        use IrInstruction::*;
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match gate {
            H { qubit } => {
                let h = 1.0 / 2f64.sqrt();
                self.apply_single(
                    *qubit,
                    [
                        [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
                        [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
                    ],
                );
            }
            S { qubit } => {
                self.apply_single(*qubit, [[one, zero], [zero, Complex64::new(0.0, 1.0)]]);
            }
            Sdg { qubit } => {
                self.apply_single(*qubit, [[one, zero], [zero, Complex64::new(0.0, -1.0)]]);
            }
            T { qubit } => {
                let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
                self.apply_single(*qubit, [[one, zero], [zero, phase]]);
            }
            Tdg { qubit } => {
                let phase = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
                self.apply_single(*qubit, [[one, zero], [zero, phase]]);
            }
            Cx { control, target } => self.apply_cx(*control, *target),
            Cz { a, b } => self.apply_cz(*a, *b),
            // rz q theta means exp(i * theta * Z_q) = diag(e^{i theta}, e^{-i theta}).
            RotateZ { qubit, angle } => {
                self.apply_single(
                    *qubit,
                    [
                        [Complex64::from_polar(1.0, *angle), zero],
                        [zero, Complex64::from_polar(1.0, -*angle)],
                    ],
                );
            }
            EighthRot { qubit, axis } => {
                self.apply_rotation(&Rotation::eighth(SignedPauli::single(
                    *qubit, axis.axis, axis.sign,
                )));
            }
            QuarterRot { qubit, axis } => {
                self.apply_rotation(&Rotation::quarter(SignedPauli::single(
                    *qubit, axis.axis, axis.sign,
                )));
            }
            InitZero { .. } | MeasureZ { .. } => return Err(OracleError::NonUnitaryOp),
        }
        Ok(())
    }
}

/// Converts an input circuit into oracle steps.
pub fn circuit_ops(circuit: &Circuit) -> Vec<OracleOp> {
    circuit
        .instructions
        .iter()
        .map(|instr| match instr {
            IrInstruction::InitZero { qubit } => OracleOp::Init(*qubit),
            IrInstruction::MeasureZ { qubit } => {
                OracleOp::Measure(PauliMeasurement::new(SignedPauli::z(*qubit)))
            }
            other => OracleOp::Gate(other.clone()),
        })
        .collect()
}

/// Converts a transpiled program into oracle steps.
pub fn isa_ops(program: &IsaProgram) -> Vec<OracleOp> {
    program
        .instructions
        .iter()
        .map(|instr| match instr {
            IsaInstruction::InitZero { qubit } => OracleOp::Init(*qubit),
            IsaInstruction::MeasureSingle { axis } | IsaInstruction::MeasureMulti { axis } => {
                OracleOp::Measure(PauliMeasurement::new(axis.clone()))
            }
            IsaInstruction::QuarterRot { axis } => {
                OracleOp::Rotation(Rotation::quarter(axis.clone()))
            }
            IsaInstruction::EighthRot { axis } => {
                OracleOp::Rotation(Rotation::eighth(axis.clone()))
            }
        })
        .collect()
}

/// Dense column-major unitary built by applying the ops to each basis vector.
pub fn unitary_of(ops: &[OracleOp], n: u32) -> Result<Vec<Vec<Complex64>>, OracleError> {
    if n > MAX_QUBITS {
        return Err(OracleError::TooManyQubits(n));
    }
    let dim = 1usize << n;
    let mut columns = Vec::with_capacity(dim);
    for basis in 0..dim {
        let mut state = StateVector {
            n,
            amps: vec![Complex64::new(0.0, 0.0); dim],
        };
        state.amps[basis] = Complex64::new(1.0, 0.0);
        for op in ops {
            match op {
                OracleOp::Gate(gate) => state.apply_gate(gate)?,
                OracleOp::Rotation(rotation) => state.apply_rotation(rotation),
                OracleOp::Measure(_) | OracleOp::Init(_) => {
                    return Err(OracleError::NonUnitaryOp)
                }
            }
        }
        columns.push(state.amps);
    }
    Ok(columns)
}

/// True iff a = e^{i phi} b for some global phase phi, entrywise within tol.
pub fn unitaries_equal_up_to_phase(
    a: &[Vec<Complex64>],
    b: &[Vec<Complex64>],
    tol: f64,
) -> bool {
    assert_eq!(a.len(), b.len());
    // Find the largest entry of b to fix the phase.
    let mut best = (0, 0, 0.0f64);
    for (c, col) in b.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            if v.norm() > best.2 {
                best = (c, r, v.norm());
            }
        }
    }
    if best.2 < tol {
        return false;
    }
    let phase = a[best.0][best.1] / b[best.0][best.1];
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    a.iter().zip(b.iter()).all(|(ca, cb)| {
        ca.iter()
            .zip(cb.iter())
            .all(|(va, vb)| (va - phase * vb).norm() <= tol)
    })
}

/// Exact outcome distribution by depth-first branch enumeration.
pub fn distribution(ops: &[OracleOp], n: u32) -> Result<OutcomeDistribution, OracleError> {
    if n > MAX_QUBITS {
        return Err(OracleError::TooManyQubits(n));
    }
    let measurement_count = ops
        .iter()
        .filter(|op| matches!(op, OracleOp::Measure(_)))
        .count();
    if measurement_count > MAX_MEASUREMENTS {
        return Err(OracleError::TooManyMeasurements(measurement_count));
    }
    let mut probs = BTreeMap::new();
    let state = StateVector::zero_state(n);
    branch(&state, ops, 0, 0, 0, 1.0, &mut probs)?;
    Ok(OutcomeDistribution {
        outcome_count: measurement_count,
        probs,
    })
}

fn branch(
    state: &StateVector,
    ops: &[OracleOp],
    op_index: usize,
    bit_index: u32,
    bits: u32,
    weight: f64,
    probs: &mut BTreeMap<u32, f64>,
) -> Result<(), OracleError> {
    let mut state = StateVector {
        n: state.n,
        amps: state.amps.clone(),
    };
    for (offset, op) in ops[op_index..].iter().enumerate() {
        match op {
            OracleOp::Gate(gate) => state.apply_gate(gate)?,
            OracleOp::Rotation(rotation) => state.apply_rotation(rotation),
            OracleOp::Init(qubit) => state.init_zero(*qubit),
            OracleOp::Measure(measurement) => {
                let norm = state.norm_squared();
                for outcome in 0..2u8 {
                    let mut branch_state = StateVector {
                        n: state.n,
                        amps: state.amps.clone(),
                    };
                    let p = branch_state.project(&measurement.axis, outcome);
                    if p / norm <= 0.0 {
                        continue;
                    }
                    // Renormalize so downstream branch probabilities compose.
                    let scale = 1.0 / p.sqrt();
                    for a in &mut branch_state.amps {
                        *a *= scale;
                    }
                    let new_bits = bits | ((outcome as u32) << bit_index);
                    branch(
                        &branch_state,
                        ops,
                        op_index + offset + 1,
                        bit_index + 1,
                        new_bits,
                        weight * p / norm,
                        probs,
                    )?;
                }
                return Ok(());
            }
        }
    }
    *probs.entry(bits).or_insert(0.0) += weight;
    Ok(())
}

/// Compares the outcome distributions of a circuit and a transpiled program.
/// Outcomes are aligned positionally: the k-th measurement of the program
/// descends from the k-th measurement of the circuit.
pub fn equivalent(a: &Circuit, b: &IsaProgram, tol: f64) -> Result<bool, OracleError> {
    let da = distribution(&circuit_ops(a), a.qubit_count)?;
    let db = distribution(&isa_ops(b), b.qubit_count)?;
    if da.outcome_count != db.outcome_count {
        return Err(OracleError::ProvenanceMismatch(
            da.outcome_count,
            db.outcome_count,
        ));
    }
    Ok(da.total_variation(&db) <= tol)
}
