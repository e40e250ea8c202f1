//! Sub-domain granularity sweep: split one large shift (source height down
//! to `end_factor`) into `n` equally spaced intermediate domains and adapt
//! incrementally through them under one fixed total step budget, for several
//! values of `n`.

use crate::data::{make_domain_sequence, realize_domain, DomainSequence};
use crate::engine::{adapt, evaluate_domain, AdaptationConfig};
use crate::error::{Error, Result};
use crate::harness::experiment::{prepare_seed, BenchData, SeedArtifacts};
use crate::harness::table::CellStat;
use crate::nets::ModelBundle;
use crate::runtime::{AccessAudit, JsonlSink, MetricsSink, Mode, NullSink, RunConfig};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Accuracy on the final (most-shifted) domain for one granularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Number of intermediate domains the shift was split into.
    pub count: usize,
    /// Adversarial steps spent on each of them (total budget / count).
    pub steps_per_domain: u64,
    pub iada: CellStat,
    pub iada_sdm: Option<CellStat>,
}

/// The whole curve plus the provenance needed to re-render it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub name: String,
    pub end_factor: f64,
    /// Fixed adversarial budget every point spends in total.
    pub total_steps: u64,
    pub seeds: Vec<u64>,
    pub desk_scale: bool,
    pub points: Vec<SweepPoint>,
    /// Aborted runs (`"count <n> seed <k>: <error>"`); non-empty marks the
    /// sweep partial.
    pub failures: Vec<String>,
}

impl SweepOutput {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn point(&self, count: usize) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.count == count)
    }
}

/// The factor ladder for splitting the full source→`end_factor` shift into
/// `count` equal jumps: every jump, including the one from the undeformed
/// source, spans `(1 − end_factor)/count`.
pub fn sweep_ladder(end_factor: f64, count: usize) -> Result<DomainSequence> {
    if count == 0 {
        return Err(Error::invalid("sub-domain count must be ≥ 1"));
    }
    let start = 1.0 - (1.0 - end_factor) / count as f64;
    make_domain_sequence(start.min(1.0), end_factor, count)
}

/// Run IADA (and optionally IADA-SDM) down to `cfg.end_factor` once per
/// entry in `counts`, all under the same total budget
/// `cfg.steps_per_domain × cfg.domain_count`, which every count must divide.
/// Only the final domain is evaluated. With `out_dir` set, each run persists
/// its record and metrics under `<out_dir>/sweep/count<n>-seed<k>[-sdm]/`.
pub fn run_subdomain_sweep<F: Scalar>(
    cfg: &RunConfig,
    data: &BenchData<F>,
    counts: &[usize],
    include_sdm: bool,
    out_dir: Option<&Path>,
    progress: &mut dyn FnMut(&str),
) -> Result<SweepOutput> {
    cfg.validate()?;
    if counts.is_empty() {
        return Err(Error::invalid("sweep needs at least one sub-domain count"));
    }
    let total_steps = (cfg.steps_per_domain * cfg.domain_count) as u64;
    for &n in counts {
        if n == 0 || total_steps % n as u64 != 0 {
            return Err(Error::invalid(format!(
                "count {n} must divide the total budget of {total_steps} steps"
            )));
        }
    }

    let mut failures: Vec<String> = Vec::new();

    // Source training (and the feature GAN) depend on the seed only, so each
    // seed's artifacts are shared by every granularity.
    let mut artifacts: Vec<(u64, SeedArtifacts<F>)> = Vec::new();
    for &seed in &cfg.seeds {
        let seed_cfg = RunConfig { seed, ..cfg.clone() };
        let audit = AccessAudit::new();
        let mut prep_sink = NullSink;
        match prepare_seed(&seed_cfg, data, include_sdm, &audit, &mut prep_sink, progress) {
            Ok(a) => artifacts.push((seed, a)),
            Err(e) => failures.push(format!("seed {seed} preparation: {e}")),
        }
    }

    let mut points = Vec::with_capacity(counts.len());
    for &count in counts {
        let steps_per_domain = total_steps / count as u64;
        let sequence = sweep_ladder(cfg.end_factor, count)?.with_base_seed(cfg.seed);
        progress(&format!(
            "count {count}: realizing {count} domains, {steps_per_domain} steps each"
        ));
        let train_domains = sequence
            .specs
            .iter()
            .map(|s| realize_domain(&data.train, s, false))
            .collect::<Result<Vec<_>>>()?;
        let final_test = realize_domain(&data.test, sequence.final_spec(), true)?;

        let mut iada_values: Vec<(u64, f64)> = Vec::new();
        let mut sdm_values: Vec<(u64, f64)> = Vec::new();
        for (seed, art) in &artifacts {
            let variants: &[bool] = if include_sdm { &[false, true] } else { &[false] };
            for &sdm in variants {
                let run = run_sweep_cell(
                    cfg, *seed, sdm, steps_per_domain, data, art, &train_domains, &final_test,
                    out_dir, count,
                );
                match run {
                    Ok(acc) => {
                        if sdm {
                            sdm_values.push((*seed, acc));
                        } else {
                            iada_values.push((*seed, acc));
                        }
                        progress(&format!(
                            "count {count} seed {seed}{}: final accuracy {acc:.4}",
                            if sdm { " (SDM)" } else { "" }
                        ));
                    }
                    Err(e) => failures.push(format!(
                        "count {count} seed {seed}{}: {e}",
                        if sdm { " (SDM)" } else { "" }
                    )),
                }
            }
        }
        if iada_values.is_empty() {
            continue;
        }
        points.push(SweepPoint {
            count,
            steps_per_domain,
            iada: CellStat::from_values(iada_values),
            iada_sdm: (!sdm_values.is_empty()).then(|| CellStat::from_values(sdm_values)),
        });
    }

    Ok(SweepOutput {
        name: format!("{}-sweep", cfg.name),
        end_factor: cfg.end_factor,
        total_steps,
        seeds: cfg.seeds.clone(),
        desk_scale: cfg.desk_scale,
        points,
        failures,
    })
}

fn run_sweep_cell<F: Scalar>(
    cfg: &RunConfig,
    seed: u64,
    sdm: bool,
    steps_per_domain: u64,
    data: &BenchData<F>,
    artifacts: &SeedArtifacts<F>,
    train_domains: &[crate::data::RealizedDomain<F>],
    final_test: &crate::data::RealizedDomain<F>,
    out_dir: Option<&Path>,
    count: usize,
) -> Result<f64> {
    let mut bundle: ModelBundle<F> = if sdm {
        artifacts
            .post_gan
            .as_ref()
            .ok_or_else(|| {
                Error::MissingPrerequisite("SDM sweep requires the source-GAN phase".into())
            })?
            .clone()
    } else {
        artifacts.post_source.clone()
    };
    let seed_cfg = RunConfig { seed, ..cfg.clone() };
    let adapt_cfg = AdaptationConfig::<F> {
        mode: Mode::Iada,
        sdm,
        steps_per_domain,
        ..AdaptationConfig::from_run(&seed_cfg)?
    };
    let run_dir = out_dir.map(|d| {
        d.join("sweep").join(format!(
            "count{count}-seed{seed}{}",
            if sdm { "-sdm" } else { "" }
        ))
    });
    let mut sink: Box<dyn MetricsSink> = match &run_dir {
        Some(dir) => Box::new(JsonlSink::create(&dir.join("metrics.jsonl"))?),
        None => Box::new(NullSink),
    };
    let audit = AccessAudit::new();
    let last = train_domains.len() - 1;
    let mut accuracy = None;
    let mut hook = |index: usize, _factor: f64, b: &ModelBundle<F>| {
        if index == last {
            let acc = evaluate_domain(b, final_test, true, cfg.batch_size.max(128))?;
            accuracy = Some(acc);
            Ok(Some(acc))
        } else {
            Ok(None)
        }
    };
    let record = adapt(
        &mut bundle,
        (!sdm).then_some(&data.train),
        train_domains,
        &adapt_cfg,
        &audit,
        sink.as_mut(),
        None,
        Some(&mut hook),
    )?;
    if let Some(dir) = &run_dir {
        record.save(&dir.join("summary.json"))?;
    }
    accuracy.ok_or_else(|| Error::State("sweep run produced no final accuracy".into()))
}
