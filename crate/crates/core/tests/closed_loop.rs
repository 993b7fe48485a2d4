use nalgebra::{DMatrix, DVector};

use adaptctl::adapt_ct::{DisturbanceEntry, MracLoop, MracState, RobustMod};
use adaptctl::adapt_dt::BurstScenario;
use adaptctl::estimate::Gain;
use adaptctl::linalg::matrix_from_rows;
use adaptctl::model::{ReferenceModel, StateSpaceLTI};
use adaptctl::sim::{metrics, simulate_ct, DisturbanceSpec, MetricSpec, Signal, SimOptions, Trajectory};

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn second_order_mrac(r: Signal) -> Trajectory {
    let plant = StateSpaceLTI::single_input(
        matrix_from_rows(&[vec![0.0, 1.0], vec![4.0, -1.0]]).unwrap(),
        DVector::from_vec(vec![0.0, 1.0]),
    )
    .unwrap();
    let reference = ReferenceModel::new(
        matrix_from_rows(&[vec![0.0, 1.0], vec![-4.0, -4.0]]).unwrap(),
        DVector::from_vec(vec![0.0, 4.0]),
    )
    .unwrap();
    let law = MracState::new(DVector::zeros(2), 1.0, Gain::Scalar(10.0), 10.0, 1.0, &reference, &DMatrix::identity(2, 2)).unwrap();
    let mut lp = MracLoop::new(plant, reference, law, r, &DisturbanceSpec::None, None).unwrap();
    let x0 = lp.initial_state(&DVector::zeros(2), &DVector::zeros(2));
    let mut opts = SimOptions::new(200.0, 1e-3);
    opts.decimate = 10;
    let run = simulate_ct(&mut lp, x0, &opts).unwrap();
    assert!(run.abort.is_none());
    run.trajectory
}

#[test]
fn state_mrac_converges_under_rich_reference() {
    let traj = second_order_mrac(Signal::sines(&[(1.0, 1.0), (1.0, 2.7)]));
    let m = metrics(
        &traj,
        &[
            MetricSpec::TrackingTail { name: "tail".into(), channels: names(&["e0", "e1"]), from: 100.0 },
            MetricSpec::ParameterError {
                name: "err".into(),
                channels: names(&["theta0", "theta1", "k"]),
                truth: vec![-8.0, -3.0, 4.0],
                at: Some(200.0),
            },
            MetricSpec::LyapunovViolations { name: "lv".into(), channel: "V".into(), rel_tol: 1e-6 },
        ],
    )
    .unwrap();
    assert!(m[0].1 < 1e-2, "{m:?}");
    assert!(m[1].1 < 5e-2, "{m:?}");
    assert_eq!(m[2].1, 0.0);
}

#[test]
fn constant_reference_tracks_without_identifying() {
    let traj = second_order_mrac(Signal::constant(1.0));
    let m = metrics(
        &traj,
        &[
            MetricSpec::TrackingTail { name: "tail".into(), channels: names(&["e0", "e1"]), from: 100.0 },
            MetricSpec::ParameterError {
                name: "err".into(),
                channels: names(&["theta0", "theta1", "k"]),
                truth: vec![-8.0, -3.0, 4.0],
                at: None,
            },
        ],
    )
    .unwrap();
    assert!(m[0].1 < 1e-2, "{m:?}");
    assert!(m[1].1 > 5e-2, "{m:?}");
}

fn scalar_drift(robust: Option<RobustMod>, horizon: f64) -> f64 {
    let plant = StateSpaceLTI::single_input(DMatrix::from_element(1, 1, -1.0), DVector::from_element(1, 1.0)).unwrap();
    let reference = ReferenceModel::new(DMatrix::from_element(1, 1, -2.0), DVector::from_element(1, 1.0)).unwrap();
    let law = MracState::new(DVector::from_element(1, -1.0), 1.0, Gain::Scalar(100.0), 100.0, 1.0, &reference, &DMatrix::identity(1, 1)).unwrap();
    let noise = DisturbanceSpec::BoundedNoise { vmax: 0.1, seed: 1, hold: 0.02 };
    let mut lp = MracLoop::new(plant, reference, law, Signal::constant(1.0), &noise, None)
        .unwrap()
        .with_entry(DisturbanceEntry::Measurement);
    if let Some(r) = robust {
        lp = lp.with_robust(r).unwrap();
    }
    let x0 = lp.initial_state(&DVector::zeros(1), &DVector::zeros(1));
    let mut opts = SimOptions::new(horizon, 5e-3);
    opts.decimate = 20;
    let run = simulate_ct(&mut lp, x0, &opts).unwrap();
    assert!(run.abort.is_none());
    let m = metrics(
        &run.trajectory,
        &[MetricSpec::DriftIndicator { name: "drift".into(), channels: names(&["theta0", "k"]), reference: vec![-1.0, 1.0] }],
    )
    .unwrap();
    m[0].1
}

#[test]
fn sigma_modification_stops_noise_driven_drift() {
    let plain = scalar_drift(None, 300.0);
    let sigma = scalar_drift(Some(RobustMod::Sigma { sigma: 0.05 }), 300.0);
    assert!(plain > 10.0, "drift {plain}");
    assert!(sigma < 2.0, "drift {sigma}");
}

#[test]
fn pulse_triggers_burst_then_recovery() {
    let s = BurstScenario::default();
    let run = s.run().unwrap();
    assert!(run.abort.is_none());
    assert!(s.ratio(&run, 500).unwrap() >= 5.0);
    let e = run.trajectory.channel("e").unwrap();
    let tail = e[5000..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(tail < 1e-4, "tail {tail}");
}
