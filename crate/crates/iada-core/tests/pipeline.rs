//! End-to-end contracts across the whole stack: the frozen source model,
//! audited run records, and lossless config round-trips.

use iada_core::data::{make_domain_sequence, realize_domain};
use iada_core::engine::{adapt, evaluate, AdaptationConfig, RunRecord};
use iada_core::harness::{prepare_seed, BenchData};
use iada_core::nets::ModelBundle;
use iada_core::runtime::{AccessAudit, Mode, NullSink, RunConfig, VecSink};
use proptest::prelude::*;

fn micro_cfg() -> RunConfig {
    RunConfig {
        steps_per_domain: 3,
        batch_size: 8,
        buffer_capacity: 32,
        noise_dim: 16,
        source_epochs: 1,
        source_gan_steps: 6,
        domain_count: 3,
        seeds: vec![1],
        train_count: 64,
        test_count: 40,
        ..RunConfig::default()
    }
}

/// The accuracy of the frozen source path must not move by a single bit, no
/// matter which regime adapts the target encoder.
#[test]
fn source_test_accuracy_is_bitwise_stable_across_all_regimes() {
    let cfg = micro_cfg();
    let data = BenchData::<f32>::synthesize(cfg.train_count, cfg.test_count, 21).unwrap();
    let audit = AccessAudit::new();
    let mut sink = NullSink;
    let artifacts = prepare_seed(&cfg, &data, true, &audit, &mut sink, &mut |_| {}).unwrap();

    let eval_source = |bundle: &ModelBundle<f32>| {
        evaluate(bundle, &data.test.images.view(), &data.test.labels, false, 32).unwrap()
    };
    let before = eval_source(&artifacts.post_source);
    assert_eq!(before, eval_source(artifacts.post_gan.as_ref().unwrap()));

    let sequence = make_domain_sequence(cfg.start_factor, cfg.end_factor, cfg.domain_count)
        .unwrap()
        .with_base_seed(cfg.seed);
    let domains: Vec<_> = sequence
        .specs
        .iter()
        .map(|s| realize_domain(&data.train, s, false).unwrap())
        .collect();

    for (mode, sdm) in [
        (Mode::Ada, false),
        (Mode::AdaUnion, false),
        (Mode::Iada, false),
        (Mode::Iada, true),
    ] {
        let mut bundle = if sdm {
            artifacts.post_gan.clone().unwrap()
        } else {
            artifacts.post_source.clone()
        };
        let adapt_cfg = AdaptationConfig::<f32> {
            mode,
            sdm,
            ..AdaptationConfig::from_run(&cfg).unwrap()
        };
        let run_audit = AccessAudit::new();
        let record = adapt(
            &mut bundle,
            (!sdm).then_some(&data.train),
            &domains,
            &adapt_cfg,
            &run_audit,
            &mut NullSink,
            None,
            None,
        )
        .unwrap();
        assert_eq!(
            eval_source(&bundle),
            before,
            "{mode} sdm={sdm} moved the frozen source path"
        );
        assert_eq!(
            (record.source_encoder_hash, record.head_hash),
            artifacts.post_source.frozen_hashes(),
            "{mode} sdm={sdm} recorded different frozen hashes"
        );
    }
}

/// Audit counters survive the trip through summary.json, and every batch the
/// run drew from the source pool is accounted for.
#[test]
fn audit_counters_round_trip_in_the_run_record() {
    let cfg = micro_cfg();
    let data = BenchData::<f32>::synthesize(cfg.train_count, cfg.test_count, 22).unwrap();
    let audit = AccessAudit::new();
    let mut sink = NullSink;
    let artifacts = prepare_seed(&cfg, &data, false, &audit, &mut sink, &mut |_| {}).unwrap();

    let sequence = make_domain_sequence(cfg.start_factor, cfg.end_factor, cfg.domain_count)
        .unwrap()
        .with_base_seed(cfg.seed);
    let domains: Vec<_> = sequence
        .specs
        .iter()
        .map(|s| realize_domain(&data.train, s, false).unwrap())
        .collect();

    let mut bundle = artifacts.post_source.clone();
    let run_audit = AccessAudit::new();
    let mut sink = VecSink::default();
    let record = adapt(
        &mut bundle,
        Some(&data.train),
        &domains,
        &AdaptationConfig::from_run(&cfg).unwrap(),
        &run_audit,
        &mut sink,
        None,
        None,
    )
    .unwrap();

    let per_domain = (cfg.steps_per_domain * cfg.batch_size) as u64;
    for outcome in &record.domains {
        assert_eq!(outcome.source_reads, per_domain);
        assert_eq!(
            record.audit.get(&format!("adapt/{}", outcome.index)),
            Some(&per_domain)
        );
    }
    assert_eq!(record.audit, run_audit.snapshot());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("summary.json");
    record.save(&path).unwrap();
    let back = RunRecord::load(&path).unwrap();
    assert_eq!(back.audit, record.audit);
    assert_eq!(back.total_steps, (cfg.steps_per_domain * cfg.domain_count) as u64);
}

prop_compose! {
    fn arb_config()(
        name in "[a-z][a-z0-9-]{0,11}",
        mode_pick in 0usize..3,
        sdm in any::<bool>(),
        lambda_adv in 1e-6f64..1.0,
        steps_per_domain in 1usize..5000,
        batch_size in 1usize..256,
        extra_capacity in 0usize..4096,
        noise_dim in 1usize..256,
        seed in any::<u64>(),
        lr in 1e-6f64..0.1,
        end_factor in 0.05f64..0.9,
        gap in 0.01f64..0.1,
        domain_count in 1usize..40,
        seeds in prop::collection::vec(any::<u64>(), 1..5),
        train_mult in 1usize..64,
        test_count in 1usize..5000,
    ) -> RunConfig {
        RunConfig {
            name,
            mode: Mode::ALL[mode_pick],
            sdm,
            lambda_adv,
            steps_per_domain,
            batch_size,
            buffer_capacity: batch_size + extra_capacity,
            noise_dim,
            seed,
            lr_discriminator: lr,
            lr_encoder: lr * 0.5,
            lr_generator: lr,
            lr_source: lr * 5.0,
            start_factor: (end_factor + gap).min(1.0),
            end_factor,
            domain_count,
            seeds,
            train_count: batch_size * train_mult,
            test_count,
            ..RunConfig::default()
        }
    }
}

proptest! {
    /// parse(serialize(c)) == c for every valid config document.
    #[test]
    fn config_round_trips_losslessly(cfg in arb_config()) {
        prop_assert!(cfg.validate().is_ok());
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
