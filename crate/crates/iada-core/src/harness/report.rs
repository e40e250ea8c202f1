//! Deterministic report rendering: aligned text tables, JSON dumps, and the
//! sweep plot. Same inputs produce byte-identical files.

use crate::error::{Error, Result};
use crate::harness::plot::render_sweep_plot;
use crate::harness::sweep::SweepOutput;
use crate::harness::table::{CellStat, ResultTable};
use crate::runtime::atomic_write;
use std::path::{Path, PathBuf};

/// Pad to `width` display characters (multi-byte glyphs like the en dash
/// count as one column).
fn pad(s: &str, width: usize) -> String {
    let len = s.chars().count();
    let mut out = String::with_capacity(s.len() + width.saturating_sub(len));
    out.push_str(s);
    for _ in len..width {
        out.push(' ');
    }
    out
}

/// `median (min–max)` in percent; the range collapses away for one seed.
fn cell_text(stat: &CellStat) -> String {
    if stat.per_seed.len() > 1 {
        format!(
            "{:.2} ({:.2}–{:.2})",
            100.0 * stat.median,
            100.0 * stat.min,
            100.0 * stat.max
        )
    } else {
        format!("{:.2}", 100.0 * stat.median)
    }
}

fn seeds_text(seeds: &[u64]) -> String {
    let list: Vec<String> = seeds.iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", list.join(", "))
}

fn render_grid(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for (i, row) in std::iter::once(&header).chain(rows.iter()).enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| pad(cell, w))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("  "));
            out.push('\n');
        }
    }
    out
}

/// The regime table as aligned text, one row per compression factor,
/// unevaluated cells rendered as `–`.
pub fn render_table_text(table: &ResultTable) -> String {
    let mut out = format!(
        "{} — target-domain accuracy (%) by vertical compression factor\n",
        table.name
    );
    out.push_str(&format!(
        "seeds {} · {} domains · {} adversarial steps per cell{}\n",
        seeds_text(&table.seeds),
        table.domain_count,
        table.total_steps_per_cell,
        if table.desk_scale { " · desk scale" } else { "" }
    ));
    out.push_str("cells: median (min–max) over seeds; – = not evaluated in that regime\n\n");

    let mut header = vec!["factor".to_string()];
    header.extend(table.columns.iter().map(|c| c.title().to_string()));
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![format!("{:.2}", row.factor)];
            cells.extend(table.columns.iter().map(|c| {
                row.cells
                    .get(c)
                    .map(cell_text)
                    .unwrap_or_else(|| "–".to_string())
            }));
            cells
        })
        .collect();
    out.push_str(&render_grid(header, rows));

    if table.is_partial() {
        out.push_str("\nPARTIAL — aborted cells:\n");
        for failure in &table.failures {
            out.push_str(&format!("  {failure}\n"));
        }
    }
    out
}

/// The sweep curve as aligned text, one row per sub-domain count.
pub fn render_sweep_text(sweep: &SweepOutput) -> String {
    let mut out = format!(
        "{} — final accuracy (%) at factor {:.2} by sub-domain count\n",
        sweep.name, sweep.end_factor
    );
    out.push_str(&format!(
        "seeds {} · {} total adversarial steps per run{}\n\n",
        seeds_text(&sweep.seeds),
        sweep.total_steps,
        if sweep.desk_scale { " · desk scale" } else { "" }
    ));
    let has_sdm = sweep.points.iter().any(|p| p.iada_sdm.is_some());
    let mut header = vec![
        "count".to_string(),
        "steps/domain".to_string(),
        "IADA".to_string(),
    ];
    if has_sdm {
        header.push("IADA SDM".to_string());
    }
    let rows: Vec<Vec<String>> = sweep
        .points
        .iter()
        .map(|p| {
            let mut row = vec![
                p.count.to_string(),
                p.steps_per_domain.to_string(),
                cell_text(&p.iada),
            ];
            if has_sdm {
                row.push(
                    p.iada_sdm
                        .as_ref()
                        .map(cell_text)
                        .unwrap_or_else(|| "–".to_string()),
                );
            }
            row
        })
        .collect();
    out.push_str(&render_grid(header, rows));
    if sweep.is_partial() {
        out.push_str("\nPARTIAL — aborted runs:\n");
        for failure in &sweep.failures {
            out.push_str(&format!("  {failure}\n"));
        }
    }
    out
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::State(format!("report serialization: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Write every report artifact that has data: `table1.txt` + `table1.json`
/// for the regime table, `sweep.json` + `sweep.png` for the granularity
/// sweep. Returns the paths written.
pub fn render_report(
    table: Option<&ResultTable>,
    sweep: Option<&SweepOutput>,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if table.is_none() && sweep.is_none() {
        return Err(Error::invalid("nothing to report"));
    }
    let mut written = Vec::new();
    if let Some(table) = table {
        let txt = dir.join("table1.txt");
        atomic_write(&txt, render_table_text(table).as_bytes())?;
        written.push(txt);
        let json = dir.join("table1.json");
        atomic_write(&json, &to_json(table)?)?;
        written.push(json);
    }
    if let Some(sweep) = sweep {
        let json = dir.join("sweep.json");
        atomic_write(&json, &to_json(sweep)?)?;
        written.push(json);
        let png = dir.join("sweep.png");
        atomic_write(&png, &render_sweep_plot(sweep)?)?;
        written.push(png);
    }
    Ok(written)
}
