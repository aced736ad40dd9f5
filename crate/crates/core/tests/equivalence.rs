//! Oracle ↔ engine agreement and model-surgery ↔ circuit-surgery commutation.

use proptest::prelude::*;
use qdo_core::catalog;
use qdo_core::{
    compile, enumerate_joint, run_exact, surgered_circuit, CausalModel, Edge, GateKind, Intervention, Prep,
    Variable,
};

const ORACLE_TOL: f64 = 1e-10;
const SURGERY_TOL: f64 = 1e-12;

fn engine(model: &CausalModel) -> qdo_core::Distribution {
    run_exact(&compile(model).unwrap()).unwrap()
}

fn oracle_gap(model: &CausalModel) -> f64 {
    let oracle = enumerate_joint(model).unwrap();
    engine(model).max_abs_diff(&oracle).unwrap().0
}

fn surgery_gap(model: &CausalModel, iv: &Intervention) -> f64 {
    let via_model = engine(&model.apply_do(iv).unwrap());
    let via_circuit = run_exact(&surgered_circuit(&compile(model).unwrap(), iv).unwrap()).unwrap();
    via_model.max_abs_diff(&via_circuit).unwrap().0
}

#[test]
fn catalog_models_match_oracle() {
    for entry in [catalog::simpson3(), catalog::healthcare10()] {
        assert!(oracle_gap(&entry.model) < ORACLE_TOL, "{}", entry.id);
        for t in 0..=1 {
            let iv = Intervention::new(entry.roles.treatment.clone(), t);
            let cut = entry.model.apply_do(&iv).unwrap();
            assert!(oracle_gap(&cut) < ORACLE_TOL, "{} {iv}", entry.id);
            assert!(surgery_gap(&entry.model, &iv) < SURGERY_TOL, "{} {iv}", entry.id);
        }
    }
}

#[test]
fn compile_simpson3_gate_sequence() {
    let c = compile(&catalog::simpson3().model).unwrap();
    assert_eq!(
        c.to_text(false),
        "qubits 3\nH q0\nCRY q0=0 q1 2.400000\nCRY q0=1 q1 0.800000\nRY q2 0.300000\n\
         CRY q0=1 q2 1.000000\nCRY q1=1 q2 0.600000\n"
    );
    let cut = catalog::simpson3().model.apply_do(&Intervention::new("T", 1)).unwrap();
    assert_eq!(
        compile(&cut).unwrap().to_text(false),
        "qubits 3\nH q0\nX q1\nRY q2 0.300000\nCRY q0=1 q2 1.000000\nCRY q1=1 q2 0.600000\n"
    );
}

#[test]
fn compile_is_byte_stable() {
    let m = catalog::healthcare10().model;
    assert_eq!(compile(&m).unwrap().to_text(true), compile(&m).unwrap().to_text(true));
}

#[test]
fn healthcare_surgery_on_treatment() {
    let m = catalog::healthcare10().model;
    let c = compile(&m).unwrap();
    let links_into_t = c
        .gates
        .iter()
        .filter(|g| matches!(&g.tag, qdo_core::Tag::Link { child, .. } if child == "Treatment"))
        .count();
    assert_eq!(links_into_t, 3);
    let cut = surgered_circuit(&c, &Intervention::new("Treatment", 0)).unwrap();
    // three links and the prep RY go, nothing is inserted
    assert_eq!(cut.gates.len(), c.gates.len() - 4);
    assert!(!cut.gates.iter().any(|g| matches!(g.tag, qdo_core::Tag::Force(_))));

    let model_cut = m.apply_do(&Intervention::new("Treatment", 0)).unwrap();
    let removed: Vec<_> = m.edges.iter().filter(|e| !model_cut.edges.contains(e)).collect();
    let parents: Vec<_> = removed.iter().map(|e| e.parent.as_str()).collect();
    assert_eq!(parents, ["Age", "Income", "GenderBias"]);
}

#[test]
fn gate_count_matches_preps_plus_edges() {
    for entry in [catalog::simpson3(), catalog::healthcare10()] {
        let m = &entry.model;
        let preps = m.variables.iter().filter(|v| v.prep != Prep::Ground).count();
        assert_eq!(compile(m).unwrap().gates.len(), preps + m.edges.len());
    }
}

fn arb_model() -> impl Strategy<Value = (CausalModel, usize, u8)> {
    (1usize..=6).prop_flat_map(|n| {
        (
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(prop::option::of(0.01f64..std::f64::consts::PI), n),
            prop::collection::vec(0u8..4, n * n),
            prop::collection::vec((0.01f64..std::f64::consts::PI, any::<bool>()), 2 * n * n),
            0..n,
            0u8..2,
        )
            .prop_map(move |(qubits, preps, links, params, target, value)| {
                // variables are created in causal order; qubits are shuffled
                let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
                let variables = (0..n)
                    .map(|i| {
                        let prep = preps[i].map_or(Prep::Ground, Prep::rotation);
                        Variable::new(names[i].clone(), qubits[i], prep)
                    })
                    .collect();
                let mut edges = Vec::new();
                for child in 0..n {
                    for parent in 0..child {
                        let slot = parent * n + child;
                        for cv in 0..=1u8 {
                            if links[slot] & (1 << cv) == 0 {
                                continue;
                            }
                            let (angle, negative) = params[2 * slot + cv as usize];
                            let e = Edge::new(names[parent].clone(), names[child].clone(), cv, angle);
                            edges.push(if negative { e.negative() } else { e });
                        }
                    }
                }
                (CausalModel::new("random", variables, edges), target, value)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn random_models_agree((model, target, value) in arb_model()) {
        prop_assert!(model.validate().is_empty());
        prop_assert!(oracle_gap(&model) < ORACLE_TOL);

        let iv = Intervention::new(model.variables[target].name.clone(), value);
        let cut = model.apply_do(&iv).unwrap();
        prop_assert!(oracle_gap(&cut) < ORACLE_TOL);
        prop_assert!(surgery_gap(&model, &iv) < SURGERY_TOL);

        // surgery removes exactly the incoming edges
        let expected: Vec<_> = model.edges.iter().filter(|e| e.child != iv.variable).cloned().collect();
        prop_assert_eq!(&cut.edges, &expected);
        prop_assert!(cut.apply_do(&iv).is_err());
    }

    #[test]
    fn same_target_gate_order_is_irrelevant((model, _t, _v) in arb_model(), seed in any::<u64>()) {
        let circuit = compile(&model).unwrap();
        let reference = run_exact(&circuit).unwrap();
        // reverse every maximal run of gates that share a target
        let mut shuffled = circuit.clone();
        let mut start = 0;
        while start < shuffled.gates.len() {
            let target = shuffled.gates[start].kind.target();
            let mut end = start;
            while end < shuffled.gates.len() && shuffled.gates[end].kind.target() == target {
                end += 1;
            }
            if seed & 1 == 1 {
                shuffled.gates[start..end].reverse();
            } else {
                shuffled.gates[start..end].rotate_left(1.min(end - start));
            }
            start = end;
        }
        let permuted = run_exact(&shuffled).unwrap();
        prop_assert!(reference.max_abs_diff(&permuted).unwrap().0 < SURGERY_TOL);
    }

    #[test]
    fn normalization_holds_after_every_gate((model, _t, _v) in arb_model()) {
        let circuit = compile(&model).unwrap();
        let mut state = qdo_core::Statevector::zero(circuit.n_qubits);
        for gate in &circuit.gates {
            state.apply(&gate.kind);
            prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
        }
        prop_assert_eq!(state.amplitudes().len(), 1 << circuit.n_qubits);
    }

    #[test]
    fn json_round_trip((model, target, value) in arb_model()) {
        let parsed = CausalModel::from_json(&model.to_json()).unwrap();
        prop_assert_eq!(&parsed, &model);
        let cut = model.apply_do(&Intervention::new(model.variables[target].name.clone(), value)).unwrap();
        prop_assert_eq!(CausalModel::from_json(&cut.to_json()).unwrap(), cut);
    }
}

#[test]
fn catalog_json_round_trip() {
    for entry in [catalog::simpson3(), catalog::healthcare10()] {
        assert_eq!(CausalModel::from_json(&entry.model.to_json()).unwrap(), entry.model);
    }
}

#[test]
fn shipped_model_files_match_catalog() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models");
    for entry in [catalog::simpson3(), catalog::healthcare10()] {
        let text = std::fs::read_to_string(dir.join(format!("{}.json", entry.id))).unwrap();
        assert_eq!(CausalModel::from_json(&text).unwrap(), entry.model, "{}", entry.id);
    }
}

#[test]
fn x_wrapped_control_matches_ir_attribute() {
    // control-on-zero through the IR equals an explicit X / CRY / X sandwich
    let m = catalog::simpson3().model;
    let c = compile(&m).unwrap();
    let mut explicit = c.clone();
    explicit.gates.clear();
    for gate in &c.gates {
        match gate.kind {
            GateKind::Cry { control, control_value: 0, target, theta } => {
                explicit.push(GateKind::X { target: control }, gate.tag.clone());
                explicit.push(GateKind::Cry { control, control_value: 1, target, theta }, gate.tag.clone());
                explicit.push(GateKind::X { target: control }, gate.tag.clone());
            }
            _ => explicit.gates.push(gate.clone()),
        }
    }
    let a = run_exact(&c).unwrap();
    let b = run_exact(&explicit).unwrap();
    assert!(a.max_abs_diff(&b).unwrap().0 < 1e-15);
}
