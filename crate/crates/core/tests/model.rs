mod common;

use splitsdp_core::algebra::SplitShape;
use splitsdp_core::bounds::BoundTable;
use splitsdp_core::model::{build_model, ModelOptions};
use splitsdp_core::oracle::{code_x, lexicode, CodeSample};
use splitsdp_core::verifier::check_feasible;

#[test]
fn corpus_codes_are_feasible() {
    let codes = common::corpus();
    assert_eq!(common::check_corpus_feasible(&codes[..8]).unwrap(), 24);
}

#[test]
fn lexicodes_are_feasible() {
    let table = BoundTable::builtin();
    for (n, d) in [(6, 4), (8, 4), (7, 4), (8, 6)] {
        let code = lexicode(n, d);
        for parts in [vec![n], vec![2, n - 2], vec![3, n - 3], vec![1, 2, n - 3]] {
            let shape = SplitShape::new(parts).unwrap();
            let model = build_model(&shape, d, &table, &ModelOptions::default()).unwrap();
            let x = code_x(&code, &shape).unwrap();
            common::assert_code_feasible(&model, &x, code.len()).unwrap();
        }
    }
}

#[test]
fn translated_code_is_feasible() {
    let code = CodeSample::from_strings(&["10110011", "01101010", "11000110", "00011101"]).unwrap();
    let d = code.min_distance().unwrap() / 2 * 2;
    let shape = SplitShape::new(vec![3, 5]).unwrap();
    let model = build_model(&shape, d, &BoundTable::builtin(), &ModelOptions::default()).unwrap();
    common::assert_code_feasible(&model, &code_x(&code, &shape).unwrap(), code.len()).unwrap();
}

#[test]
fn aggregation_is_consistent() {
    assert_eq!(common::check_aggregation(&common::corpus()).unwrap(), 25);
}

#[test]
fn split_transform_is_nonnegative() {
    assert!(common::check_delsarte(&common::corpus()).unwrap() > 0);
}

fn class_values_of(model: &splitsdp_core::model::SdpModel, code: &CodeSample) -> Vec<f64> {
    let x = code_x(code, &model.shape).unwrap();
    model
        .classes
        .iter()
        .map(|c| splitsdp_core::form::ratio_to_f64(&x[&c.representative]))
        .collect()
}

#[test]
fn feasibility_report() {
    let shape = SplitShape::new(vec![2, 6]).unwrap();
    let model = build_model(&shape, 4, &BoundTable::builtin(), &ModelOptions::default()).unwrap();

    let code = lexicode(8, 4);
    let good = check_feasible(&model, &class_values_of(&model, &code), 1e-9);
    assert!(good.pass, "{:?}", good.failures(1e-9));
    assert!((good.objective - 16.0).abs() < 1e-9);

    let mut single = vec![0.0; model.classes.len()];
    single[0] = 1.0;
    let one = check_feasible(&model, &single, 1e-9);
    assert!(one.pass, "{:?}", one.failures(1e-9));
    assert!((one.objective - 1.0).abs() < 1e-12);

    single[0] = 0.5;
    let half = check_feasible(&model, &single, 1e-9);
    assert!(!half.pass);
    assert!(half.failures(1e-9).iter().any(|f| f.starts_with("pin")));
}
