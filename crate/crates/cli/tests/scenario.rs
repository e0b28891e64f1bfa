use kirchhoff_cli::scenario::{CoefficientSpec, DataSpec};
use kirchhoff_cli::Scenario;

const BASE: &str = r#"{
  "name": "t",
  "basis": { "kind": "interval", "modes": 4 },
  "initial": {
    "position": { "family": { "amplitude": 2.0, "decay": 0.5, "first_mode": 2, "last_mode": 3 } },
    "velocity": { "coefficients": [0.1] }
  },
  "gevrey": { "s": 2.0, "eta": 1.0 },
  "horizon": 1.0,
  "grid": { "steps": 10 }
}"#;

#[test]
fn family_amplitudes_follow_the_gevrey_profile() {
    let s = Scenario::parse(BASE).unwrap();
    let state = s.initial_state();
    let u0 = state.position();
    assert_eq!(u0[0], 0.0);
    assert_eq!(u0[3], 0.0);
    for k in [2usize, 3] {
        let expected = 2.0 * (-0.5 * (k as f64).sqrt()).exp();
        assert!((u0[k - 1] - expected).abs() < 1e-15);
    }
    assert_eq!(state.velocity(), &[0.1, 0.0, 0.0, 0.0]);
}

#[test]
fn defaults_fill_optional_fields() {
    let s = Scenario::parse(BASE).unwrap();
    assert_eq!(s.grid.output_stride, 1);
    assert_eq!(s.grid.min_gap, 1e-6);
    assert!(s.simulate.is_none() && s.audit.is_none());
    assert!(matches!(s.initial.velocity, DataSpec::Coefficients(_)));
    let with_audit = BASE.replace(
        r#""grid": { "steps": 10 }"#,
        r#""grid": { "steps": 10 },
        "audit": { "m_upper": 2, "k": 0, "q": 1.5, "coefficient": { "constant": { "value": 1 } } }"#,
    );
    let s = Scenario::parse(&with_audit).unwrap();
    let a = s.audit.unwrap();
    assert_eq!((a.sigma, a.m0, a.substeps), (1.0, 1.0, 4));
    assert!(matches!(a.coefficient, CoefficientSpec::Constant { value } if value == 1.0));
}

#[test]
fn torus_frequencies_use_the_period() {
    let text = BASE.replace(
        r#""kind": "interval", "modes": 4"#,
        r#""kind": "torus", "modes": 4, "period": 3.141592653589793"#,
    );
    let s = Scenario::parse(&text).unwrap();
    let basis = s.basis();
    assert!((basis.frequencies()[0] - 2.0).abs() < 1e-15);
}

#[test]
fn graded_grid_when_ratio_given() {
    let text = BASE.replace(
        r#""grid": { "steps": 10 }"#,
        r#""grid": { "steps": 10, "grading_ratio": 0.5, "min_gap": 1e-3 }"#,
    );
    let s = Scenario::parse(&text).unwrap();
    let g = s.time_grid().unwrap();
    let p = g.points();
    assert!(p[p.len() - 1] - p[p.len() - 2] < 1e-2);
}

#[test]
fn name_must_be_filename_safe() {
    let e = Scenario::parse(&BASE.replace(r#""name": "t""#, r#""name": "a/b""#)).unwrap_err();
    assert_eq!(e.field, "name");
}
