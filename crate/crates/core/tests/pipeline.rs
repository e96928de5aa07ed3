use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lapbc_core::ir::{parse_ir, Circuit, IrInstruction};
use lapbc_core::layout::{default_mapping, gen_standard};
use lapbc_core::oracle::equivalent;
use lapbc_core::runtime::{run_trials, summarize, RuntimeParams};
use lapbc_core::schedule::{schedule, ScheduleParams};
use lapbc_core::synth::{synthesize, SynthesisParams};
use lapbc_core::transpile::{lapbc_transpile, spc_transpile, IsaInstruction};

/// Random Clifford+T circuit with init bookends and terminal measurements on
/// a random subset of qubits. Synthesis is bypassed (T/Tdg stay exact) so the
/// oracle can check unitary equivalence.
pub fn random_circuit(rng: &mut ChaCha8Rng, max_qubits: u32, max_gates: u32) -> Circuit {
    let n = rng.gen_range(1..=max_qubits);
    let gates = rng.gen_range(0..=max_gates);
    let mut instructions: Vec<IrInstruction> = (0..n).map(|q| IrInstruction::InitZero { qubit: q }).collect();
    for _ in 0..gates {
        let q = rng.gen_range(0..n);
        let instr = match rng.gen_range(0..9) {
            0 => IrInstruction::H { qubit: q },
            1 => IrInstruction::S { qubit: q },
            2 => IrInstruction::Sdg { qubit: q },
            3 => IrInstruction::T { qubit: q },
            4 => IrInstruction::Tdg { qubit: q },
            5 | 6 => {
                if n < 2 {
                    IrInstruction::T { qubit: q }
                } else {
                    let mut t = rng.gen_range(0..n);
                    while t == q {
                        t = rng.gen_range(0..n);
                    }
                    IrInstruction::Cx { control: q, target: t }
                }
            }
            _ => {
                if n < 2 {
                    IrInstruction::H { qubit: q }
                } else {
                    let mut b = rng.gen_range(0..n);
                    while b == q {
                        b = rng.gen_range(0..n);
                    }
                    IrInstruction::Cz { a: q, b }
                }
            }
        };
        instructions.push(instr);
    }
    for q in 0..n {
        if rng.gen_bool(0.75) {
            instructions.push(IrInstruction::MeasureZ { qubit: q });
        }
    }
    Circuit::new(n, instructions).unwrap()
}

#[test]
fn transpiled_programs_match_oracle_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xABCD);
    for case in 0..60 {
        let circuit = random_circuit(&mut rng, 4, 25);
        let spc = spc_transpile(&circuit).unwrap();
        let lapbc = lapbc_transpile(&circuit).unwrap();
        assert!(
            equivalent(&circuit, &spc, 1e-9).unwrap(),
            "spc mismatch on case {}:\n{}",
            case,
            circuit.serialize()
        );
        assert!(
            equivalent(&circuit, &lapbc, 1e-9).unwrap(),
            "lapbc mismatch on case {}:\n{}",
            case,
            circuit.serialize()
        );
    }
}

#[test]
fn inequivalent_program_detected() {
    // T and Tdg differ by cos^2(pi/8) vs sin^2(pi/8) once an S rotates the
    // phase into the measurement basis. (A bare h-t-measure pair is uniform
    // either way and cannot discriminate.)
    let circuit = parse_ir("qubits 1\ninit 0\nh 0\nt 0\ns 0\nh 0\nmeasure 0").unwrap();
    let other = parse_ir("qubits 1\ninit 0\nh 0\ntdg 0\ns 0\nh 0\nmeasure 0").unwrap();
    let transpiled_other = spc_transpile(&other).unwrap();
    assert!(!equivalent(&circuit, &transpiled_other, 1e-9).unwrap());
    // Sanity: each one is equivalent to its own transpilation.
    assert!(equivalent(&circuit, &spc_transpile(&circuit).unwrap(), 1e-9).unwrap());
}

#[test]
fn equivalence_survives_synthesis_free_pipeline_stages() {
    // Serialize/parse between every stage, as the standalone CLI stages do.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10 {
        let circuit = random_circuit(&mut rng, 3, 15);
        let text = circuit.serialize();
        let reparsed = parse_ir(&text).unwrap();
        let program = lapbc_transpile(&reparsed).unwrap();
        let reparsed_program = lapbc_core::transpile::parse_isa(&program.serialize()).unwrap();
        assert!(equivalent(&circuit, &reparsed_program, 1e-9).unwrap());
    }
}

#[test]
fn lapbc_weight_invariants_on_random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    for _ in 0..300 {
        let circuit = random_circuit(&mut rng, 5, 30);
        let program = lapbc_transpile(&circuit).unwrap();
        program.validate().unwrap();
        for instr in &program.instructions {
            match instr {
                IsaInstruction::EighthRot { axis } => assert_eq!(axis.weight(), 1),
                IsaInstruction::QuarterRot { axis } => assert_eq!(axis.weight(), 2),
                IsaInstruction::MeasureSingle { axis } => assert_eq!(axis.weight(), 1),
                IsaInstruction::MeasureMulti { .. } => panic!("no multi measurements from weight-1 inputs"),
                IsaInstruction::InitZero { .. } => {}
            }
        }
    }
}

#[test]
fn lapbc_support_preservation() {
    // Every eighth rotation descending from t q has support exactly {q}.
    let circuit = parse_ir(
        "qubits 3\ninit 0\ninit 1\ninit 2\nh 0\ncx 0 1\ncz 1 2\nt 0\nt 1\nt 2\nmeasure 0\nmeasure 1\nmeasure 2",
    )
    .unwrap();
    let program = lapbc_transpile(&circuit).unwrap();
    let eighth_supports: Vec<Vec<u32>> = program
        .instructions
        .iter()
        .filter_map(|i| match i {
            IsaInstruction::EighthRot { axis } => Some(axis.support().collect()),
            _ => None,
        })
        .collect();
    assert_eq!(eighth_supports, vec![vec![0], vec![1], vec![2]]);
}

#[test]
fn synthesized_pipeline_schedules_and_simulates() {
    let circuit = lapbc_core::ir::gen_ising(2, 2, 1, 1.0, 1.0, 1.0);
    let params = SynthesisParams::new(1e-3, 1.0, 7).unwrap();
    let synthesized = synthesize(&circuit, &params);
    let program = lapbc_transpile(&synthesized).unwrap();
    let layout = gen_standard(2, 2);
    let mapping = default_mapping(&layout, 4).unwrap();
    let sched_params = ScheduleParams::new(15, 27, 4).unwrap();
    let sched = schedule(&program, &layout, &mapping, &sched_params).unwrap();
    sched.validate().unwrap();

    let rt = RuntimeParams::new(1.0, 0, 1).unwrap();
    let results = run_trials(&sched, &rt);
    assert_eq!(results[0].total_cycles, sched.makespan);

    let rt = RuntimeParams::new(0.25, 3, 5).unwrap();
    let stats = summarize(&run_trials(&sched, &rt)).unwrap();
    assert!(stats.mean >= sched.makespan as f64);
}
