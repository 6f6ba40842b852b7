use std::sync::OnceLock;

use super::*;
use crate::attacks::{AttackConfig, AttackKind, Provenance};
use crate::autoencoder::{build_mlp, train, TrainConfig, TrainedAutoencoder};
use crate::channel::perturbation_power;

/// Noise-free-trained MLP with perfect clean accuracy.
fn memorized_model() -> &'static TrainedAutoencoder {
    static MODEL: OnceLock<TrainedAutoencoder> = OnceLock::new();
    MODEL.get_or_init(|| {
        let arch = build_mlp(4, 7).unwrap();
        let config = TrainConfig {
            epochs: 2500,
            batch_size: 64,
            learning_rate: 1e-3,
            train_ebno_db: f64::INFINITY,
            seed: 2001,
        };
        let model = train(&arch, &config).unwrap();
        assert_eq!(model.clean_accuracy().unwrap(), 1.0);
        model
    })
}

fn zero_perturbation(len: usize) -> crate::attacks::Perturbation {
    crate::attacks::Perturbation::new(
        vec![0.0; len],
        0.0,
        Provenance {
            attack: AttackKind::Universal,
            substitute_model: "test".into(),
            seed: 0,
            crafting_sigma2: 0.0,
            config: AttackConfig::with_seed(0),
            updates_applied: Some(0),
            warning_no_updates: true,
        },
    )
    .unwrap()
}

#[test]
fn trained_system_without_noise_is_always_correct() {
    let model = memorized_model().clone();
    // 200 dB Eb/N0: noise is far below the decision margins.
    let scenario = Scenario::new(
        "clean",
        SystemUnderTest::autoencoder(model),
        AttackModel::None,
        ShiftPolicy::None,
        ChannelConfig::new(200.0, 4, 7).unwrap(),
        None,
        2000,
        7,
    )
    .unwrap();
    let point = estimate_bler(&scenario).unwrap();
    assert_eq!(point.errors, 0);
    assert_eq!(point.bler, 0.0);
    assert_eq!(point.ci95, 0.0);
    assert_eq!(point.rule_of_three_upper(), Some(3.0 / 2000.0));
}

#[test]
fn zero_perturbation_equals_no_attack_per_trial() {
    let model = memorized_model().clone();
    let channel = ChannelConfig::new(4.0, 4, 7).unwrap();
    let none = Scenario::new(
        "none",
        SystemUnderTest::autoencoder(model.clone()),
        AttackModel::None,
        ShiftPolicy::None,
        channel,
        None,
        1,
        99,
    )
    .unwrap();
    let zero = Scenario::new(
        "zero",
        SystemUnderTest::autoencoder(model),
        AttackModel::fixed("zero", zero_perturbation(14)),
        ShiftPolicy::None,
        channel,
        None,
        1,
        99,
    )
    .unwrap();
    for t in 0..500 {
        assert_eq!(none.run_trial(t).unwrap(), zero.run_trial(t).unwrap());
    }
}

#[test]
fn jamming_degrades_bler_with_ci_separation() {
    let model = memorized_model().clone();
    let trials = 100_000;
    let grid = [2.0, 4.0, 6.0];
    let clean = Scenario::new(
        "clean",
        SystemUnderTest::autoencoder(model.clone()),
        AttackModel::None,
        ShiftPolicy::None,
        ChannelConfig::new(grid[0], 4, 7).unwrap(),
        None,
        trials,
        5,
    )
    .unwrap();
    let jam = Scenario::new(
        "jam",
        SystemUnderTest::autoencoder(model),
        AttackModel::Jamming {
            p_power: perturbation_power(-6.0, 7.0),
        },
        ShiftPolicy::None,
        ChannelConfig::new(grid[0], 4, 7).unwrap(),
        Some(-6.0),
        trials,
        5,
    )
    .unwrap();
    let clean_curve = sweep(&clean, &grid).unwrap();
    let jam_curve = sweep(&jam, &grid).unwrap();
    for (c, j) in clean_curve.points.iter().zip(&jam_curve.points) {
        assert!(
            j.lower() > c.upper(),
            "at {} dB jamming {} must exceed clean {} with CI separation",
            c.ebno_db,
            j.bler,
            c.bler
        );
    }
}

#[test]
fn estimator_is_unbiased_on_known_probability_stub() {
    let q = 0.137;
    let scenario = Scenario::new(
        "stub",
        SystemUnderTest::ErrorStub { error_prob: q },
        AttackModel::None,
        ShiftPolicy::None,
        ChannelConfig::new(7.0, 4, 7).unwrap(),
        None,
        1_000_000,
        123,
    )
    .unwrap();
    let point = estimate_bler(&scenario).unwrap();
    assert!(
        (point.bler - q).abs() <= 3.0 * point.ci95,
        "estimate {} vs true {q} (ci {})",
        point.bler,
        point.ci95
    );
}

#[test]
fn ci_shrinks_with_sqrt_of_trials() {
    let a = BlerPoint::new(0.0, 100, 1000);
    let b = BlerPoint::new(0.0, 200, 2000);
    assert!((b.ci95 / a.ci95 - 1.0 / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn results_are_schedule_independent() {
    let model = memorized_model().clone();
    let scenario = Scenario::new(
        "sched",
        SystemUnderTest::autoencoder(model),
        AttackModel::Jamming { p_power: 1.7583 },
        ShiftPolicy::None,
        ChannelConfig::new(5.0, 4, 7).unwrap(),
        Some(-6.0),
        20_000,
        31,
    )
    .unwrap();
    let default_pool = estimate_bler(&scenario).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| estimate_bler(&scenario))
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| estimate_bler(&scenario))
        .unwrap();
    assert_eq!(default_pool, single);
    assert_eq!(default_pool, four);
}

#[test]
fn fixed_perturbation_trials_match_manual_pipeline() {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let model = memorized_model().clone();
    let sigma2 = ChannelConfig::new(6.0, 4, 7).unwrap().sigma2;
    let mut vector = vec![0.0; 14];
    for (i, v) in vector.iter_mut().enumerate() {
        *v = ((i * 7 + 3) as f64 * 0.41).sin() * 0.3;
    }
    let pert = crate::attacks::Perturbation::new(
        vector.clone(),
        crate::util::norm_sq(&vector) + 1e-12,
        Provenance {
            attack: AttackKind::Universal,
            substitute_model: "manual".into(),
            seed: 0,
            crafting_sigma2: sigma2,
            config: AttackConfig::with_seed(0),
            updates_applied: Some(1),
            warning_no_updates: false,
        },
    )
    .unwrap();

    let scenario = Scenario::new(
        "manual",
        SystemUnderTest::autoencoder(model.clone()),
        AttackModel::fixed("manual", pert),
        ShiftPolicy::UniformRandom,
        ChannelConfig::new(6.0, 4, 7).unwrap(),
        None,
        1,
        555,
    )
    .unwrap();

    let codebook = model.codebook().unwrap();
    for trial in 0..200u64 {
        // Replicate the documented draw order: message, noise, shift.
        let mut rng = ChaCha8Rng::seed_from_u64(555);
        rng.set_stream(trial);
        let s = rng.random_range(0..16);
        let noise = awgn(14, sigma2, &mut rng);
        let r = rng.random_range(0..7);
        let shifted = cyclic_shift(&vector, r).unwrap();
        let y: Vec<f64> = codebook[s]
            .iter()
            .zip(&noise)
            .zip(&shifted)
            .map(|((x, n), p)| x + n + p)
            .collect();
        let (_, s_hat) = model.decode(&y).unwrap();
        let expect = s_hat != s;
        assert_eq!(scenario.run_trial(trial).unwrap(), expect, "trial {trial}");
    }
}

#[test]
fn sweep_validates_grid() {
    let scenario = Scenario::new(
        "stub",
        SystemUnderTest::ErrorStub { error_prob: 0.5 },
        AttackModel::None,
        ShiftPolicy::None,
        ChannelConfig::new(7.0, 4, 7).unwrap(),
        None,
        100,
        1,
    )
    .unwrap();
    assert!(sweep(&scenario, &[]).is_err());
    assert!(sweep(&scenario, &[3.0, 2.0]).is_err());
    assert!(sweep(&scenario, &[2.0, 2.0]).is_err());
    let single = sweep(&scenario, &[5.0]).unwrap();
    assert_eq!(single.points.len(), 1);
}

#[test]
fn scenario_validation_catches_mismatches() {
    let model = memorized_model().clone();
    // Channel (k, n) must match the model.
    assert!(Scenario::new(
        "bad",
        SystemUnderTest::autoencoder(model.clone()),
        AttackModel::None,
        ShiftPolicy::None,
        ChannelConfig::new(7.0, 4, 9).unwrap(),
        None,
        10,
        1,
    )
    .is_err());
    // Perturbation length must match 2n.
    assert!(Scenario::new(
        "bad",
        SystemUnderTest::autoencoder(model),
        AttackModel::fixed("short", zero_perturbation(10)),
        ShiftPolicy::None,
        ChannelConfig::new(7.0, 4, 7).unwrap(),
        None,
        10,
        1,
    )
    .is_err());
    // Zero trials.
    assert!(Scenario::new(
        "bad",
        SystemUnderTest::classical(),
        AttackModel::None,
        ShiftPolicy::None,
        ChannelConfig::new(7.0, 4, 7).unwrap(),
        None,
        0,
        1,
    )
    .is_err());
}

#[test]
fn compare_report_identity_and_errors() {
    let meta = |id: &str| ScenarioMeta {
        id: id.into(),
        system: "classical".into(),
        attack: "none".into(),
        shift_policy: "none".into(),
        psr_db: None,
        seed: 1,
    };
    let points = vec![BlerPoint::new(0.0, 50, 1000), BlerPoint::new(1.0, 20, 1000)];
    let a = BlerCurve {
        scenario: meta("a"),
        points: points.clone(),
    };
    let b = BlerCurve {
        scenario: meta("b"),
        points,
    };
    let report = compare_report(
        &[a.clone(), b.clone()],
        &[("a".into(), "b".into())],
    )
    .unwrap();
    for p in &report.pairs[0].points {
        assert_eq!(p.ratio, Some(1.0));
        assert!(!p.a_gt_b_ci && !p.b_gt_a_ci);
    }

    let missing = compare_report(&[a.clone()], &[("a".into(), "zzz".into())]);
    let msg = format!("{}", missing.unwrap_err());
    assert!(msg.contains("zzz") && msg.contains("available"), "{msg}");

    let mut short = b.clone();
    short.points.truncate(1);
    assert!(compare_report(&[a, short], &[("a".into(), "b".into())]).is_err());
}

#[test]
fn csv_round_trips() {
    let meta = ScenarioMeta {
        id: "x".into(),
        system: "classical".into(),
        attack: "jamming".into(),
        shift_policy: "none".into(),
        psr_db: Some(-6.0),
        seed: 42,
    };
    let curve = BlerCurve {
        scenario: meta,
        points: vec![
            BlerPoint::new(0.0, 123, 10_000),
            BlerPoint::new(1.0, 45, 10_000),
            BlerPoint::new(2.0, 0, 10_000),
        ],
    };
    let csv = curves_to_csv(&[curve.clone()]);
    assert!(csv.starts_with(CSV_HEADER));
    assert!(csv.contains("rule_of_three_upper=0.0003"));
    let back = curves_from_csv(&csv).unwrap();
    assert_eq!(back, vec![curve]);
}

#[test]
fn csv_rejects_malformed_input() {
    assert!(curves_from_csv("").is_err());
    assert!(curves_from_csv("bad,header\n").is_err());
    let bad_row = format!("{CSV_HEADER}\nx,sys,none,none,,notanumber,10,1,0.1,0.0,1,\n");
    assert!(curves_from_csv(&bad_row).is_err());
}
