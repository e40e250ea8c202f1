//! The regime-comparison table: every (mode, SDM) cell run over every seed,
//! aggregated as median with min–max spread, orderings judged per seed.

use crate::data::{make_domain_sequence, realize_domain, RealizedDomain};
use crate::engine::{adapt, evaluate_domain, AdaptationConfig};
use crate::error::{Error, Result};
use crate::harness::experiment::{prepare_seed, BenchData, CellKind, ExperimentSpec, SeedArtifacts};
use crate::nets::ModelBundle;
use crate::runtime::{AccessAudit, JsonlSink, MetricsSink, NullSink, RunConfig};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Accuracy of one cell across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    /// `(seed, accuracy)` in seed order — orderings are judged on these,
    /// never on the aggregate.
    pub per_seed: Vec<(u64, f64)>,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl CellStat {
    pub fn from_values(per_seed: Vec<(u64, f64)>) -> CellStat {
        let mut values: Vec<f64> = per_seed.iter().map(|&(_, v)| v).collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("accuracies are finite"));
        let n = values.len();
        let median = if n % 2 == 1 {
            values[n / 2]
        } else {
            0.5 * (values[n / 2 - 1] + values[n / 2])
        };
        CellStat {
            median,
            min: values[0],
            max: values[n - 1],
            per_seed,
        }
    }
}

/// One factor row; absent cells are the table's dashes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub factor: f64,
    pub cells: BTreeMap<CellKind, CellStat>,
}

/// The finished table plus enough provenance to re-render it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub name: String,
    pub seeds: Vec<u64>,
    pub desk_scale: bool,
    pub domain_count: usize,
    pub total_steps_per_cell: u64,
    pub columns: Vec<CellKind>,
    pub rows: Vec<TableRow>,
    /// Aborted cells (`"<cell> seed <k>: <error>"`); non-empty marks the
    /// table partial, but surviving cells still render.
    pub failures: Vec<String>,
}

impl ResultTable {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    /// Cell of the final (most-shifted) domain row.
    pub fn final_cell(&self, kind: CellKind) -> Option<&CellStat> {
        self.rows.last()?.cells.get(&kind)
    }

    /// How many seeds rank `a` strictly below `b` on the final row, as
    /// `(wins, total)` — the majority aggregation over per-seed orderings.
    pub fn final_row_majority(&self, a: CellKind, b: CellKind) -> Option<(usize, usize)> {
        let ca = self.final_cell(a)?;
        let cb = self.final_cell(b)?;
        let mut wins = 0;
        let mut total = 0;
        for (&(sa, va), &(sb, vb)) in ca.per_seed.iter().zip(&cb.per_seed) {
            debug_assert_eq!(sa, sb, "cells must share the seed grid");
            total += 1;
            if va < vb {
                wins += 1;
            }
        }
        Some((wins, total))
    }
}

/// Run every cell of the regime table. When `out_dir` is given, each
/// adaptation cell persists its run record and metrics stream under
/// `<out_dir>/cells/<cell>-seed<k>/`. A cell abort is recorded in
/// `failures` (marking the table partial) instead of killing the run.
pub fn run_table1<F: Scalar>(
    spec: &ExperimentSpec,
    cfg: &RunConfig,
    data: &BenchData<F>,
    out_dir: Option<&Path>,
    progress: &mut dyn FnMut(&str),
) -> Result<ResultTable> {
    spec.validate()?;
    cfg.validate()?;

    let sequence = make_domain_sequence(spec.start_factor, spec.end_factor, spec.domain_count)?
        .with_base_seed(cfg.seed);
    progress(&format!(
        "realizing {} domains over factors {:?}",
        sequence.len(),
        sequence.specs.iter().map(|s| s.factor).collect::<Vec<_>>()
    ));
    let train_domains: Vec<RealizedDomain<F>> = sequence
        .specs
        .iter()
        .map(|s| realize_domain(&data.train, s, false))
        .collect::<Result<_>>()?;
    let test_domains: Vec<RealizedDomain<F>> = sequence
        .specs
        .iter()
        .map(|s| realize_domain(&data.test, s, true))
        .collect::<Result<_>>()?;

    // accuracy per (row, column, seed)
    let mut values: BTreeMap<(usize, CellKind), Vec<(u64, f64)>> = BTreeMap::new();
    let mut failures: Vec<String> = Vec::new();

    for &seed in &spec.seeds {
        let seed_cfg = RunConfig {
            seed,
            ..cfg.clone()
        };
        let audit = AccessAudit::new();
        let mut prep_sink = NullSink;
        let artifacts = match prepare_seed(
            &seed_cfg,
            data,
            spec.needs_sdm(),
            &audit,
            &mut prep_sink,
            progress,
        ) {
            Ok(a) => a,
            Err(e) => {
                failures.push(format!("seed {seed} preparation: {e}"));
                continue;
            }
        };

        for &cell in &spec.cells {
            let mut cell_values: Vec<(usize, f64)> = Vec::new();
            let result = run_cell(
                cell,
                &seed_cfg,
                data,
                &artifacts,
                &train_domains,
                &test_domains,
                out_dir,
                &mut cell_values,
                progress,
            );
            match result {
                Ok(()) => {
                    for (row, acc) in cell_values {
                        values.entry((row, cell)).or_default().push((seed, acc));
                    }
                }
                Err(e) => failures.push(format!("{} seed {seed}: {e}", cell.title())),
            }
        }
    }

    let rows = sequence
        .specs
        .iter()
        .enumerate()
        .map(|(row, s)| TableRow {
            factor: s.factor,
            cells: spec
                .cells
                .iter()
                .filter_map(|&cell| {
                    values
                        .remove(&(row, cell))
                        .map(|v| (cell, CellStat::from_values(v)))
                })
                .collect(),
        })
        .collect();

    Ok(ResultTable {
        name: spec.name.clone(),
        seeds: spec.seeds.clone(),
        desk_scale: spec.desk_scale,
        domain_count: spec.domain_count,
        total_steps_per_cell: (cfg.steps_per_domain * spec.domain_count) as u64,
        columns: spec.cells.clone(),
        rows,
        failures,
    })
}

/// One (cell, seed) run with its own read auditor (cells must not see each
/// other's source accesses); accuracies land in `out` as `(row, accuracy)`.
fn run_cell<F: Scalar>(
    cell: CellKind,
    seed_cfg: &RunConfig,
    data: &BenchData<F>,
    artifacts: &SeedArtifacts<F>,
    train_domains: &[RealizedDomain<F>],
    test_domains: &[RealizedDomain<F>],
    out_dir: Option<&Path>,
    out: &mut Vec<(usize, f64)>,
    progress: &mut dyn FnMut(&str),
) -> Result<()> {
    let seed = seed_cfg.seed;
    let Some((mode, sdm)) = cell.regime() else {
        // untouched source model, evaluated on every domain
        for (row, domain) in test_domains.iter().enumerate() {
            let acc = evaluate_domain(&artifacts.post_source, domain, false, eval_batch(seed_cfg))?;
            out.push((row, acc));
        }
        progress(&format!("seed {seed}: only-source baseline evaluated"));
        return Ok(());
    };

    let mut bundle: ModelBundle<F> = if sdm {
        artifacts
            .post_gan
            .as_ref()
            .ok_or_else(|| {
                Error::MissingPrerequisite("SDM cell requires the source-GAN phase".into())
            })?
            .clone()
    } else {
        artifacts.post_source.clone()
    };
    let adapt_cfg = AdaptationConfig::<F> {
        mode,
        sdm,
        ..AdaptationConfig::from_run(seed_cfg)?
    };
    let cell_dir = out_dir.map(|d| d.join("cells").join(format!("{}-seed{}", slug(cell), seed)));
    let mut sink: Box<dyn MetricsSink> = match &cell_dir {
        Some(dir) => Box::new(JsonlSink::create(&dir.join("metrics.jsonl"))?),
        None => Box::new(NullSink),
    };
    let report_all = cell.reports_all_rows();
    let mut hook = |index: usize, _factor: f64, b: &ModelBundle<F>| {
        if report_all || index == test_domains.len() - 1 {
            evaluate_domain(b, &test_domains[index], true, eval_batch(seed_cfg)).map(Some)
        } else {
            Ok(None)
        }
    };
    let audit = AccessAudit::new();
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
    for outcome in &record.domains {
        if let Some(acc) = outcome.accuracy {
            out.push((outcome.index, acc));
        }
    }
    if let Some(dir) = &cell_dir {
        record.save(&dir.join("summary.json"))?;
    }
    progress(&format!(
        "seed {seed}: {} done (final accuracy {:.4})",
        cell.title(),
        record.final_accuracy().unwrap_or(f64::NAN)
    ));
    Ok(())
}

fn eval_batch(cfg: &RunConfig) -> usize {
    cfg.batch_size.max(128)
}

/// File-system-friendly cell name.
pub(crate) fn slug(cell: CellKind) -> &'static str {
    match cell {
        CellKind::OnlySource => "only-source",
        CellKind::Ada => "ada",
        CellKind::AdaSdm => "ada-sdm",
        CellKind::AdaUnion => "ada-union",
        CellKind::Iada => "iada",
        CellKind::IadaSdm => "iada-sdm",
    }
}
