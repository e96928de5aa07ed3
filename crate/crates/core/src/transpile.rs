use std::fmt;

use thiserror::Error;

use crate::ir::{Circuit, IrInstruction};
use crate::pauli::{clifford_as_quarters, conjugate_by_quarter, PauliAxis, SignedPauli};

#[derive(Debug, Error, PartialEq)]
pub enum TranspileError {
    #[error("circuit still contains an arbitrary-angle rotation; run synthesis first")]
    RotateZPresent,
    #[error("circuit is invalid: {0}")]
    InvalidCircuit(String),
    #[error("expected a {expected:?} program, got {actual:?}")]
    WrongFlavor { expected: IsaFlavor, actual: IsaFlavor },
    #[error("{flavor:?} weight constraint violated by {instruction}")]
    WeightViolation { flavor: IsaFlavor, instruction: String },
    #[error("line {line}: bad ISA text: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, Eq, PartialEq)]
pub enum IsaFlavor {
    Spc,
    Lapbc,
}

impl fmt::Display for IsaFlavor {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            IsaFlavor::Spc => write!(f, "spc"),
            IsaFlavor::Lapbc => write!(f, "lapbc"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum IsaInstruction {
    InitZero { qubit: u32 },
    /// Weight-1 Pauli measurement.
    MeasureSingle { axis: SignedPauli },
    MeasureMulti { axis: SignedPauli },
    QuarterRot { axis: SignedPauli },
    EighthRot { axis: SignedPauli },
}

impl IsaInstruction {
    pub fn support(&self) -> Vec<u32> {
        match self {
            IsaInstruction::InitZero { qubit } => vec![*qubit],
            IsaInstruction::MeasureSingle { axis }
            | IsaInstruction::MeasureMulti { axis }
            | IsaInstruction::QuarterRot { axis }
            | IsaInstruction::EighthRot { axis } => axis.support().collect(),
        }
    }
}

impl fmt::Display for IsaInstruction {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            IsaInstruction::InitZero { qubit } => write!(f, "init {}", qubit),
            IsaInstruction::MeasureSingle { axis } => write!(f, "meas {}", axis),
            IsaInstruction::MeasureMulti { axis } => write!(f, "measm {}", axis),
            IsaInstruction::QuarterRot { axis } => write!(f, "quarter {}", axis),
            IsaInstruction::EighthRot { axis } => write!(f, "eighth {}", axis),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsaProgram {
    pub flavor: IsaFlavor,
    pub qubit_count: u32,
    pub instructions: Vec<IsaInstruction>,
}

impl IsaProgram {
    /// Checks the flavor-specific weight constraints: SPC programs carry no
    /// quarter rotations; LAPBC programs have weight-1 eighths, weight-2
    /// quarters and weight-1 measurements.
    pub fn validate(&self) -> Result<(), TranspileError> {
        for instr in &self.instructions {
            let violation = match (self.flavor, instr) {
                (IsaFlavor::Spc, IsaInstruction::QuarterRot { .. }) => true,
                (IsaFlavor::Lapbc, IsaInstruction::EighthRot { axis }) => axis.weight() != 1,
                (IsaFlavor::Lapbc, IsaInstruction::QuarterRot { axis }) => axis.weight() != 2,
                (IsaFlavor::Lapbc, IsaInstruction::MeasureMulti { .. }) => false,
                (_, IsaInstruction::MeasureSingle { axis }) => axis.weight() != 1,
                (_, IsaInstruction::MeasureMulti { axis }) => axis.weight() < 2,
                _ => false,
            };
            if violation {
                return Err(TranspileError::WeightViolation {
                    flavor: self.flavor,
                    instruction: instr.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("isa {} {}\n", self.flavor, self.qubit_count);
        for instr in &self.instructions {
            out.push_str(&instr.to_string());
            out.push('\n');
        }
        out
    }
}

fn measurement_instruction(axis: SignedPauli) -> IsaInstruction {
    if axis.weight() <= 1 {
        IsaInstruction::MeasureSingle { axis }
    } else {
        IsaInstruction::MeasureMulti { axis }
    }
}

// Shared sweep. Quarter rotations that qualify for deferral accumulate in
// `pending` in application order; every later instruction axis is conjugated
// by the whole pending list, most recent conjugator first. Deferred quarters
// are dropped at the end of the circuit.
fn transpile(circuit: &Circuit, flavor: IsaFlavor) -> Result<IsaProgram, TranspileError> {
    circuit
        .validate()
        .map_err(|e| TranspileError::InvalidCircuit(e.to_string()))?;
    let mut pending: Vec<SignedPauli> = Vec::new();
    let mut instructions = Vec::new();

    let conjugated = |pending: &[SignedPauli], axis: SignedPauli| -> SignedPauli {
        let mut axis = axis;
        for quarter in pending.iter().rev() {
            axis = conjugate_by_quarter(quarter, &axis);
        }
        axis
    };

    for instr in &circuit.instructions {
        match instr {
            IrInstruction::InitZero { qubit } => {
                instructions.push(IsaInstruction::InitZero { qubit: *qubit });
            }
            IrInstruction::MeasureZ { qubit } => {
                let axis = conjugated(&pending, SignedPauli::z(*qubit));
                instructions.push(measurement_instruction(axis));
            }
            IrInstruction::T { qubit } => {
                let axis = conjugated(
                    &pending,
                    SignedPauli::single(*qubit, PauliAxis::Z, crate::pauli::Sign::Minus),
                );
                instructions.push(IsaInstruction::EighthRot { axis });
            }
            IrInstruction::Tdg { qubit } => {
                let axis = conjugated(&pending, SignedPauli::z(*qubit));
                instructions.push(IsaInstruction::EighthRot { axis });
            }
            IrInstruction::EighthRot { qubit, axis } => {
                let axis = conjugated(
                    &pending,
                    SignedPauli::single(*qubit, axis.axis, axis.sign),
                );
                instructions.push(IsaInstruction::EighthRot { axis });
            }
            IrInstruction::QuarterRot { qubit, axis } => {
                pending.push(SignedPauli::single(*qubit, axis.axis, axis.sign));
            }
            IrInstruction::RotateZ { .. } => return Err(TranspileError::RotateZPresent),
            clifford => {
                let quarters = clifford_as_quarters(clifford)
                    .map_err(|e| TranspileError::InvalidCircuit(e.to_string()))?;
                for rotation in quarters {
                    match flavor {
                        IsaFlavor::Spc => pending.push(rotation.axis),
                        IsaFlavor::Lapbc => {
                            if rotation.axis.weight() == 1 {
                                pending.push(rotation.axis);
                            } else {
                                // Multi-qubit quarters stay in place; the
                                // deferred single-qubit quarters sweep past
                                // them, transforming the axis.
                                let axis = conjugated(&pending, rotation.axis);
                                instructions.push(IsaInstruction::QuarterRot { axis });
                            }
                        }
                    }
                }
            }
        }
    }

    let program = IsaProgram {
        flavor,
        qubit_count: circuit.qubit_count,
        instructions,
    };
    program.validate()?;
    Ok(program)
}

/// SPC transpilation: every Clifford is deferred past the rest of the circuit
/// and dropped, leaving inits, pi/8 rotations and Pauli measurements.
pub fn spc_transpile(circuit: &Circuit) -> Result<IsaProgram, TranspileError> {
    transpile(circuit, IsaFlavor::Spc)
}

/// LAPBC transpilation: only single-qubit quarter rotations are deferred, so
/// every surviving instruction keeps the support of the gate it came from.
pub fn lapbc_transpile(circuit: &Circuit) -> Result<IsaProgram, TranspileError> {
    transpile(circuit, IsaFlavor::Lapbc)
}

/// Analytic SPC execution cost in cycles: one d-cycle initialization epoch if
/// the program initializes anything, d per pi/8 rotation, d per multi-qubit
/// or Y measurement, 0 for single-qubit Z/X measurements.
pub fn spc_cost(program: &IsaProgram, code_distance: u32) -> Result<u64, TranspileError> {
    if program.flavor != IsaFlavor::Spc {
        return Err(TranspileError::WrongFlavor {
            expected: IsaFlavor::Spc,
            actual: program.flavor,
        });
    }
    let d = code_distance as u64;
    let mut cycles = 0u64;
    let mut any_init = false;
    for instr in &program.instructions {
        match instr {
            IsaInstruction::InitZero { .. } => any_init = true,
            IsaInstruction::EighthRot { .. } | IsaInstruction::MeasureMulti { .. } => cycles += d,
            IsaInstruction::MeasureSingle { axis } => {
                let qubit = axis.support().next().unwrap();
                if axis.axis_on(qubit) == Some(PauliAxis::Y) {
                    cycles += d;
                }
            }
            IsaInstruction::QuarterRot { .. } => unreachable!("validated above"),
        }
    }
    Ok(cycles + if any_init { d } else { 0 })
}

/// Parses the line-oriented ISA text format written by `IsaProgram::serialize`.
pub fn parse_isa(text: &str) -> Result<IsaProgram, TranspileError> {
    let mut flavor = None;
    let mut qubit_count = 0;
    let mut instructions = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let parse_axis = |token: &str| -> Result<SignedPauli, TranspileError> {
            token.parse().map_err(|_| TranspileError::Parse {
                line,
                message: format!("bad Pauli string {:?}", token),
            })
        };
        match (tokens[0], tokens.len()) {
            ("isa", 3) => {
                flavor = Some(match tokens[1] {
                    "spc" => IsaFlavor::Spc,
                    "lapbc" => IsaFlavor::Lapbc,
                    other => {
                        return Err(TranspileError::Parse {
                            line,
                            message: format!("unknown flavor {:?}", other),
                        })
                    }
                });
                qubit_count = tokens[2].parse().map_err(|_| TranspileError::Parse {
                    line,
                    message: "bad qubit count".to_string(),
                })?;
            }
            ("init", 2) => {
                instructions.push(IsaInstruction::InitZero {
                    qubit: tokens[1].parse().map_err(|_| TranspileError::Parse {
                        line,
                        message: "bad qubit index".to_string(),
                    })?,
                });
            }
            ("meas", 2) => instructions.push(IsaInstruction::MeasureSingle {
                axis: parse_axis(tokens[1])?,
            }),
            ("measm", 2) => instructions.push(IsaInstruction::MeasureMulti {
                axis: parse_axis(tokens[1])?,
            }),
            ("quarter", 2) => instructions.push(IsaInstruction::QuarterRot {
                axis: parse_axis(tokens[1])?,
            }),
            ("eighth", 2) => instructions.push(IsaInstruction::EighthRot {
                axis: parse_axis(tokens[1])?,
            }),
            _ => {
                return Err(TranspileError::Parse {
                    line,
                    message: format!("unrecognized line {:?}", content),
                })
            }
        }
    }
    let flavor = flavor.ok_or(TranspileError::Parse {
        line: 0,
        message: "missing isa header line".to_string(),
    })?;
    let program = IsaProgram {
        flavor,
        qubit_count,
        instructions,
    };
    program.validate()?;
    Ok(program)
}
