use heg_wasm_demo::{khop_json, mixing_json, sbm_json};
use serde_json::Value;

#[test]
fn four_cycle_hops() {
    let v: Value = serde_json::from_str(&khop_json(4, "0-1, 1-2, 2-3, 3-0", 2).unwrap()).unwrap();
    assert_eq!(v["hops"][0][0], serde_json::json!([1, 3]));
    assert_eq!(v["hops"][1][0], serde_json::json!([2]));
    assert_eq!(v["hops"][1][1], serde_json::json!([3]));
}

#[test]
fn path_has_no_two_hop_neighbors() {
    let v: Value = serde_json::from_str(&khop_json(3, "0-1;1-2", 2).unwrap()).unwrap();
    assert!(v["hops"][1].as_array().unwrap().iter().all(|r| r.as_array().unwrap().is_empty()));
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(khop_json(3, "0-7", 1).is_err());
    assert!(khop_json(3, "zero-one", 1).is_err());
    assert!(mixing_json("1, x", 1.0, 0).is_err());
    assert!(mixing_json("1, 2", 0.0, 0).is_err());
    assert!(sbm_json(0, 3, 0.1, 0.1, 0).is_err());
}

#[test]
fn mixing_weights_sum_to_one_and_sharpen() {
    let v: Value = serde_json::from_str(&mixing_json("0, 1, 2", 0.01, 3).unwrap()).unwrap();
    let e: Vec<f64> = v["expectation"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let g: Vec<f64> = v["gumbel"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(e[2] > 0.999);
}

#[test]
fn sbm_diagonal_mixing_is_homophilous() {
    let v: Value = serde_json::from_str(&sbm_json(20, 2, 0.5, 0.0, 1).unwrap()).unwrap();
    assert_eq!(v["node_homophily"], 1.0);
    assert_eq!(v["heterophily_matrix"], serde_json::json!([[1.0, 0.0], [0.0, 1.0]]));
}
