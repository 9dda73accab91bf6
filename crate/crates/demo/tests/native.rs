use serde_json::Value;
use spectral_count_demo::{branches_json, count_json};

const SCALAR: &str = r#"{
  "problem": {"abstract": {"lambda_interval": [0, 4], "coefficients": [[[3]], [[-4]], [[1]]]}},
  "interval": [0.5, 3.5],
  "lambda_grid": {"start": 0.25, "stop": 3.75, "steps": 141}
}"#;

const DIRICHLET: &str = r#"{
  "problem": {"differential": {
    "n": 1, "interval": [0, "pi"], "lambda_interval": [-20, 20],
    "coefficients": ["1", "-lambda"], "derivatives": ["0", "-1"],
    "boundary": {"kind": "dirichlet"}
  }},
  "interval": [1.5, 10],
  "mesh": 16
}"#;

#[test]
fn branches_of_scalar_quadratic() {
    let v: Value = serde_json::from_str(&branches_json(SCALAR, 8).unwrap()).unwrap();
    assert_eq!(v["dim"], 1);
    let lambda = v["lambda"].as_array().unwrap();
    let branch = v["branches"][0].as_array().unwrap();
    assert_eq!(lambda.len(), 8);
    for (l, b) in lambda.iter().zip(branch) {
        let l = l.as_f64().unwrap();
        assert!((b.as_f64().unwrap() - (l - 1.0) * (l - 3.0)).abs() < 1e-12);
    }
}

#[test]
fn count_dirichlet_interval() {
    let v: Value = serde_json::from_str(&count_json(DIRICHLET, 1.5, 10.0).unwrap()).unwrap();
    assert_eq!(v["n"], 2);
    assert_eq!(v["nu_xi1"], 1);
    assert_eq!(v["nu_xi2"], 3);
    let roots: Vec<f64> = v["roots"].as_array().unwrap().iter().map(|r| r["lambda0"].as_f64().unwrap()).collect();
    assert!((roots[0] - 4.0).abs() < 1e-2 && (roots[1] - 9.0).abs() < 1e-2);
    assert_eq!(v["verdicts"][0][1], "PASS");
}

#[test]
fn errors_are_messages() {
    let e = count_json(SCALAR, 0.5, 5.0).unwrap_err();
    assert!(e.contains("interval"), "{e}");
    assert!(branches_json("{", 10).is_err());
}
