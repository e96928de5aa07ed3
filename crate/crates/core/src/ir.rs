use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pauli::SignedAxis;

#[derive(Debug, Error, PartialEq)]
pub enum IrError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("qubit {qubit} out of range (register size {size})")]
    QubitOutOfRange { qubit: u32, size: u32 },
    #[error("qubit {0} initialized after another instruction on it")]
    Reinit(u32),
    #[error("qubit {0} used after its measurement")]
    UseAfterMeasure(u32),
    #[error("operands of a two-qubit gate must differ (qubit {0})")]
    EqualOperands(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub enum IrInstruction {
    InitZero { qubit: u32 },
    MeasureZ { qubit: u32 },
    H { qubit: u32 },
    S { qubit: u32 },
    Sdg { qubit: u32 },
    T { qubit: u32 },
    Tdg { qubit: u32 },
    Cx { control: u32, target: u32 },
    Cz { a: u32, b: u32 },
    /// exp(i * angle * Z) with angle in [0, 2*pi).
    RotateZ { qubit: u32, angle: f64 },
    /// Single-qubit pi/8 rotation along an explicit signed axis. Produced by
    /// gate synthesis; not part of the input grammar proper.
    EighthRot { qubit: u32, axis: SignedAxis },
    /// Single-qubit pi/4 rotation along an explicit signed axis (synthesis).
    QuarterRot { qubit: u32, axis: SignedAxis },
}

impl IrInstruction {
    pub fn qubits(&self) -> Vec<u32> {
        use IrInstruction::*;
        match self {
            InitZero { qubit } | MeasureZ { qubit } | H { qubit } | S { qubit }
            | Sdg { qubit } | T { qubit } | Tdg { qubit } => vec![*qubit],
            RotateZ { qubit, .. } | EighthRot { qubit, .. } | QuarterRot { qubit, .. } => {
                vec![*qubit]
            }
            Cx { control, target } => vec![*control, *target],
            Cz { a, b } => vec![*a, *b],
        }
    }
}

impl fmt::Display for IrInstruction {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        use IrInstruction::*;
        match self {
            InitZero { qubit } => write!(f, "init {}", qubit),
            MeasureZ { qubit } => write!(f, "measure {}", qubit),
            H { qubit } => write!(f, "h {}", qubit),
            S { qubit } => write!(f, "s {}", qubit),
            Sdg { qubit } => write!(f, "sdg {}", qubit),
            T { qubit } => write!(f, "t {}", qubit),
            Tdg { qubit } => write!(f, "tdg {}", qubit),
            Cx { control, target } => write!(f, "cx {} {}", control, target),
            Cz { a, b } => write!(f, "cz {} {}", a, b),
            RotateZ { qubit, angle } => write!(f, "rz {} {}", qubit, angle),
            EighthRot { qubit, axis } => {
                write!(f, "eighth {} {}{}", qubit, axis.sign.as_char(), axis.axis.as_char().to_ascii_lowercase())
            }
            QuarterRot { qubit, axis } => {
                write!(f, "quarter {} {}{}", qubit, axis.sign.as_char(), axis.axis.as_char().to_ascii_lowercase())
            }
        }
    }
}

/// An input program: a qubit register plus an ordered instruction list.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub qubit_count: u32,
    pub instructions: Vec<IrInstruction>,
}

impl Circuit {
    pub fn new(qubit_count: u32, instructions: Vec<IrInstruction>) -> Result<Self, IrError> {
        let circuit = Circuit {
            qubit_count,
            instructions,
        };
        circuit.validate()?;
        Ok(circuit)
    }

    /// Checks index ranges, distinct two-qubit operands, init-comes-first and
    /// measurement-is-terminal per qubit.
    pub fn validate(&self) -> Result<(), IrError> {
        let mut touched = HashSet::new();
        let mut measured = HashSet::new();
        for instr in &self.instructions {
            let qubits = instr.qubits();
            if qubits.len() == 2 && qubits[0] == qubits[1] {
                return Err(IrError::EqualOperands(qubits[0]));
            }
            for &q in &qubits {
                if q >= self.qubit_count {
                    return Err(IrError::QubitOutOfRange {
                        qubit: q,
                        size: self.qubit_count,
                    });
                }
                if measured.contains(&q) {
                    return Err(IrError::UseAfterMeasure(q));
                }
                if matches!(instr, IrInstruction::InitZero { .. }) && touched.contains(&q) {
                    return Err(IrError::Reinit(q));
                }
                touched.insert(q);
                if matches!(instr, IrInstruction::MeasureZ { .. }) {
                    measured.insert(q);
                }
            }
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("qubits {}\n", self.qubit_count);
        for instr in &self.instructions {
            out.push_str(&instr.to_string());
            out.push('\n');
        }
        out
    }
}

fn parse_qubit(token: &str, line: usize) -> Result<u32, IrError> {
    token.parse().map_err(|_| IrError::Syntax {
        line,
        message: format!("expected a qubit index, got {:?}", token),
    })
}

fn parse_signed_axis(token: &str, line: usize) -> Result<SignedAxis, IrError> {
    token.parse().map_err(|_| IrError::Syntax {
        line,
        message: format!("expected a signed axis like -z, got {:?}", token),
    })
}

/// Parses the line-oriented IR text format. `#` starts a comment.
pub fn parse_ir(text: &str) -> Result<Circuit, IrError> {
    let mut qubit_count: Option<u32> = None;
    let mut instructions = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let arity_error = |expected: usize| IrError::Syntax {
            line,
            message: format!(
                "{} expects {} operand(s), got {}",
                tokens[0],
                expected,
                tokens.len() - 1
            ),
        };
        let require = |n: usize| -> Result<(), IrError> {
            if tokens.len() - 1 == n {
                Ok(())
            } else {
                Err(arity_error(n))
            }
        };
        match tokens[0] {
            "qubits" => {
                require(1)?;
                if qubit_count.is_some() {
                    return Err(IrError::Syntax {
                        line,
                        message: "duplicate qubits declaration".to_string(),
                    });
                }
                let n = parse_qubit(tokens[1], line)?;
                if n == 0 {
                    return Err(IrError::Syntax {
                        line,
                        message: "register size must be positive".to_string(),
                    });
                }
                qubit_count = Some(n);
            }
            op => {
                if qubit_count.is_none() {
                    return Err(IrError::Syntax {
                        line,
                        message: "instruction before qubits declaration".to_string(),
                    });
                }
                let instr = match op {
                    "init" => {
                        require(1)?;
                        IrInstruction::InitZero {
                            qubit: parse_qubit(tokens[1], line)?,
                        }
                    }
                    "measure" => {
                        require(1)?;
                        IrInstruction::MeasureZ {
                            qubit: parse_qubit(tokens[1], line)?,
                        }
                    }
                    "h" => {
                        require(1)?;
                        IrInstruction::H {
                            qubit: parse_qubit(tokens[1], line)?,
                        }
                    }
                    "s" => {
                        require(1)?;
                        IrInstruction::S {
                            qubit: parse_qubit(tokens[1], line)?,
                        }
                    }
                    "sdg" => {
                        require(1)?;
                        IrInstruction::Sdg {
                            qubit: parse_qubit(tokens[1], line)?,
                        }
                    }
                    "t" => {
                        require(1)?;
                        IrInstruction::T {
                            qubit: parse_qubit(tokens[1], line)?,
                        }
                    }
                    "tdg" => {
                        require(1)?;
                        IrInstruction::Tdg {
                            qubit: parse_qubit(tokens[1], line)?,
                        }
                    }
                    "cx" => {
                        require(2)?;
                        IrInstruction::Cx {
                            control: parse_qubit(tokens[1], line)?,
                            target: parse_qubit(tokens[2], line)?,
                        }
                    }
                    "cz" => {
                        require(2)?;
                        IrInstruction::Cz {
                            a: parse_qubit(tokens[1], line)?,
                            b: parse_qubit(tokens[2], line)?,
                        }
                    }
                    "rz" => {
                        require(2)?;
                        let qubit = parse_qubit(tokens[1], line)?;
                        let angle: f64 = tokens[2].parse().map_err(|_| IrError::Syntax {
                            line,
                            message: format!("invalid angle {:?}", tokens[2]),
                        })?;
                        if !angle.is_finite() {
                            return Err(IrError::Syntax {
                                line,
                                message: format!("invalid angle {:?}", tokens[2]),
                            });
                        }
                        IrInstruction::RotateZ {
                            qubit,
                            angle: reduce_angle(angle),
                        }
                    }
                    "eighth" => {
                        require(2)?;
                        IrInstruction::EighthRot {
                            qubit: parse_qubit(tokens[1], line)?,
                            axis: parse_signed_axis(tokens[2], line)?,
                        }
                    }
                    "quarter" => {
                        require(2)?;
                        IrInstruction::QuarterRot {
                            qubit: parse_qubit(tokens[1], line)?,
                            axis: parse_signed_axis(tokens[2], line)?,
                        }
                    }
                    other => {
                        return Err(IrError::Syntax {
                            line,
                            message: format!("unrecognized instruction {:?}", other),
                        })
                    }
                };
                instructions.push(instr);
            }
        }
    }
    let qubit_count = qubit_count.ok_or(IrError::Syntax {
        line: 0,
        message: "missing qubits declaration".to_string(),
    })?;
    Circuit::new(qubit_count, instructions)
}

/// Reduces an angle into [0, 2*pi).
pub fn reduce_angle(angle: f64) -> f64 {
    let reduced = angle.rem_euclid(TAU);
    if reduced == TAU {
        0.0
    } else {
        reduced
    }
}

// Edges of a width x height grid with row-major qubit indexing: all
// horizontal edges in row-major order, then all vertical edges.
fn grid_edges(width: u32, height: u32) -> Vec<(u32, u32)> {
    let index = |r: u32, c: u32| r * width + c;
    let mut edges = Vec::new();
    for r in 0..height {
        for c in 0..width - 1 {
            edges.push((index(r, c), index(r, c + 1)));
        }
    }
    for r in 0..height - 1 {
        for c in 0..width {
            edges.push((index(r, c), index(r + 1, c)));
        }
    }
    edges
}

/// Random circuit sampling on a width x height grid: every layer applies CZ
/// on all neighboring pairs, then a random gate from {S, H, T} on each qubit.
/// Init and measurement bookends on all qubits.
pub fn gen_rcs(width: u32, height: u32, layers: u32, seed: u64) -> Circuit {
    assert!(width >= 1 && height >= 1);
    let n = width * height;
    let edges = grid_edges(width, height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instructions = Vec::new();
    for q in 0..n {
        instructions.push(IrInstruction::InitZero { qubit: q });
    }
    for _ in 0..layers {
        for &(a, b) in &edges {
            instructions.push(IrInstruction::Cz { a, b });
        }
        for q in 0..n {
            let gate = match rng.gen_range(0..3u32) {
                0 => IrInstruction::S { qubit: q },
                1 => IrInstruction::H { qubit: q },
                _ => IrInstruction::T { qubit: q },
            };
            instructions.push(gate);
        }
    }
    for q in 0..n {
        instructions.push(IrInstruction::MeasureZ { qubit: q });
    }
    Circuit {
        qubit_count: n,
        instructions,
    }
}

/// Fourth-order Trotter coefficient: (4 - 4^(1/3))^-1.
pub fn trotter_gamma() -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / 3.0))
}

/// Fourth-order Trotter circuit for exp(-iHt) of the 2D transverse-field
/// Ising model H = -J * sum ZZ + g * sum X on a width x height grid, split
/// into `steps` outer steps. Adjacent B half-exponentials are merged, giving
/// 5*steps A exponentials and 5*steps + 1 B exponentials.
pub fn gen_ising(width: u32, height: u32, steps: u32, j: f64, g: f64, t: f64) -> Circuit {
    assert!(width >= 1 && height >= 1);
    assert!(steps >= 1);
    let n = width * height;
    let edges = grid_edges(width, height);
    let delta = t / steps as f64;
    let gamma = trotter_gamma();
    let w = 1.0 - 4.0 * gamma;

    let mut instructions = Vec::new();
    for q in 0..n {
        instructions.push(IrInstruction::InitZero { qubit: q });
    }

    // exp(-i*(-J)*c*delta * Z_a Z_b) for every edge: CX, RZ on the target, CX.
    let emit_a = |instructions: &mut Vec<IrInstruction>, coefficient: f64| {
        let angle = reduce_angle(j * delta * coefficient);
        for &(a, b) in &edges {
            instructions.push(IrInstruction::Cx {
                control: a,
                target: b,
            });
            instructions.push(IrInstruction::RotateZ { qubit: b, angle });
            instructions.push(IrInstruction::Cx {
                control: a,
                target: b,
            });
        }
    };
    // exp(-i*g*c*delta * X_q) for every qubit: H, RZ, H.
    let emit_b = |instructions: &mut Vec<IrInstruction>, coefficient: f64| {
        let angle = reduce_angle(-g * delta * coefficient);
        for q in 0..n {
            instructions.push(IrInstruction::H { qubit: q });
            instructions.push(IrInstruction::RotateZ { qubit: q, angle });
            instructions.push(IrInstruction::H { qubit: q });
        }
    };

    let a_coefficients = [gamma, gamma, w, gamma, gamma];
    emit_b(&mut instructions, gamma / 2.0);
    for step in 0..steps {
        for (i, &a) in a_coefficients.iter().enumerate() {
            emit_a(&mut instructions, a);
            let b = match i {
                0 | 3 => gamma,
                1 | 2 => (gamma + w) / 2.0,
                // Step boundary: halves merge except at the very end.
                _ if step + 1 == steps => gamma / 2.0,
                _ => gamma,
            };
            emit_b(&mut instructions, b);
        }
    }

    for q in 0..n {
        instructions.push(IrInstruction::MeasureZ { qubit: q });
    }
    Circuit {
        qubit_count: n,
        instructions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_parse_basic() {
        let circuit = parse_ir("qubits 1\nh 0\nt 0\nmeasure 0\n").unwrap();
        assert_eq!(circuit.qubit_count, 1);
        assert_eq!(
            circuit.instructions,
            vec![
                IrInstruction::H { qubit: 0 },
                IrInstruction::T { qubit: 0 },
                IrInstruction::MeasureZ { qubit: 0 },
            ]
        );

        let circuit = parse_ir("qubits 2\ncx 0 1").unwrap();
        assert_eq!(
            circuit.instructions,
            vec![IrInstruction::Cx {
                control: 0,
                target: 1
            }]
        );
    }

    #[test]
    fn test_parse_rz_literal_angle() {
        let circuit = parse_ir("qubits 1\nrz 0 1.5707963267948966").unwrap();
        assert_eq!(
            circuit.instructions,
            vec![IrInstruction::RotateZ {
                qubit: 0,
                angle: std::f64::consts::FRAC_PI_2
            }]
        );
    }

    #[test]
    fn test_parse_comments_and_errors() {
        assert!(parse_ir("qubits 2 # two qubits\ncz 0 1 # entangle\n").is_ok());

        let err = parse_ir("qubits 1\nfoo 0").unwrap_err();
        assert!(matches!(err, IrError::Syntax { line: 2, .. }));

        let err = parse_ir("qubits 1\nh 1").unwrap_err();
        assert_eq!(err, IrError::QubitOutOfRange { qubit: 1, size: 1 });

        let err = parse_ir("qubits 1\nh 0\ninit 0").unwrap_err();
        assert_eq!(err, IrError::Reinit(0));

        let err = parse_ir("qubits 1\nmeasure 0\nh 0").unwrap_err();
        assert_eq!(err, IrError::UseAfterMeasure(0));

        let err = parse_ir("qubits 2\ncx 1 1").unwrap_err();
        assert_eq!(err, IrError::EqualOperands(1));
    }

    #[test]
    fn test_serialize_roundtrip() {
        let circuit = gen_ising(2, 2, 1, 1.0, 1.0, 1.0);
        let text = circuit.serialize();
        let parsed = parse_ir(&text).unwrap();
        assert_eq!(parsed, circuit);
    }

    #[test]
    fn test_gen_rcs_counts() {
        // 2x2 grid has 4 edges.
        let circuit = gen_rcs(2, 2, 1, 7);
        assert_eq!(circuit.instructions.len(), 4 + 4 + 4 + 4);

        let circuit = gen_rcs(2, 2, 0, 7);
        assert_eq!(circuit.instructions.len(), 8);

        // 6x6 grid has 60 edges.
        let circuit = gen_rcs(6, 6, 500, 7);
        assert_eq!(circuit.instructions.len() as u32, 36 + 500 * (60 + 36) + 36);
    }

    #[test]
    fn test_gen_rcs_deterministic() {
        let a = gen_rcs(3, 4, 10, 42).serialize();
        let b = gen_rcs(3, 4, 10, 42).serialize();
        assert_eq!(a, b);
        let c = gen_rcs(3, 4, 10, 43).serialize();
        assert_ne!(a, c);
    }

    #[test]
    fn test_gen_rcs_gate_frequencies() {
        let circuit = gen_rcs(10, 10, 1000, 3);
        let mut counts = [0u32; 3];
        for instr in &circuit.instructions {
            match instr {
                IrInstruction::S { .. } => counts[0] += 1,
                IrInstruction::H { .. } => counts[1] += 1,
                IrInstruction::T { .. } => counts[2] += 1,
                _ => {}
            }
        }
        let total: u32 = counts.iter().sum();
        assert_eq!(total, 100_000);
        for &count in &counts {
            let frequency = count as f64 / total as f64;
            assert!((frequency - 1.0 / 3.0).abs() < 0.01, "frequency {}", frequency);
        }
    }

    #[test]
    fn test_trotter_gamma_value() {
        let gamma = trotter_gamma();
        assert!((gamma - 0.41449077179437576).abs() < 1e-15);
        assert!((1.0 - 4.0 * gamma - (-0.6579630871775031)).abs() < 1e-12);
    }

    #[test]
    fn test_gen_ising_exponential_counts() {
        // With steps outer steps: 5*steps A exponentials over 4 edges each and
        // 5*steps+1 B exponentials over 4 qubits each.
        for steps in [1u32, 2, 3] {
            let circuit = gen_ising(2, 2, steps, 1.0, 1.0, 1.0);
            let rz_count = circuit
                .instructions
                .iter()
                .filter(|i| matches!(i, IrInstruction::RotateZ { .. }))
                .count() as u32;
            assert_eq!(rz_count, 5 * steps * 4 + (5 * steps + 1) * 4);
        }
    }

    #[test]
    fn test_gen_ising_merged_coefficient_identity() {
        // The five A coefficients per step sum to 1, so the signed per-edge
        // angles of one step sum to J * delta.
        let j = 0.7;
        let t = 1.3;
        let steps = 3;
        let circuit = gen_ising(2, 2, steps, j, 1.0, t);
        let delta = t / steps as f64;
        // Collect one angle per A exponential (the edge (0, 1) carries the rz
        // between cx 0 1 pairs).
        let mut a_angles = Vec::new();
        for window in circuit.instructions.windows(3) {
            if let [IrInstruction::Cx { control: 0, target: 1 }, IrInstruction::RotateZ { qubit: 1, angle }, IrInstruction::Cx { control: 0, target: 1 }] =
                window
            {
                a_angles.push(*angle);
            }
        }
        assert_eq!(a_angles.len() as u32, 5 * steps);
        let signed = |theta: f64| {
            if theta > std::f64::consts::PI {
                theta - TAU
            } else {
                theta
            }
        };
        for step in 0..steps as usize {
            let sum: f64 = a_angles[step * 5..step * 5 + 5].iter().map(|&a| signed(a)).sum();
            assert!((sum - j * delta).abs() < 1e-12, "step sum {}", sum);
        }
    }

    #[test]
    fn test_angles_reduced() {
        let circuit = gen_ising(2, 2, 1, 5.0, -3.0, 9.0);
        for instr in &circuit.instructions {
            if let IrInstruction::RotateZ { angle, .. } = instr {
                assert!((0.0..TAU).contains(angle));
            }
        }
    }
}
