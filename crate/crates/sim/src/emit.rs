//! Result serialization: a delimited per-UE row file and a structured
//! aggregate summary, both with 12 significant digits and byte-stable
//! across runs.

use std::path::{Path, PathBuf};

use cellfree_core::report::Scheme;
use cellfree_core::{Error, Estimator};

use crate::sweep::{ResultRow, ResultTable};

pub const ROWS_HEADER: &str = "setup,ue,estimator,scheme,sinr,se_bit_per_hz";

/// Renders the per-UE rows as delimited text.
pub fn format_rows(table: &ResultTable) -> String {
    let mut out = String::from(ROWS_HEADER);
    out.push('\n');
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{:.11e},{:.11e}\n",
            row.setup,
            row.ue,
            row.estimator.label(),
            row.scheme_label(),
            row.sinr,
            row.se
        ));
    }
    out
}

/// Renders the aggregate summary: per estimator/scheme cell the mean SE and
/// the percentile grid at 1% steps over the pooled per-UE values.
pub fn format_summary(table: &ResultTable) -> String {
    let mut out = String::from("# aggregates over closed-form rows; oracle rows excluded\n");
    out.push_str(&format!("bandwidth_hz = {:.11e}\n", table.bandwidth_hz));
    for (est, scheme) in table.cells() {
        let pooled = table.pooled_se(est, scheme);
        let mean = table.mean_se(est, scheme).unwrap();
        let grid = table.percentile_grid(est, scheme).unwrap();
        out.push_str(&format!("\n[{}/{}]\n", est.label(), scheme.label()));
        out.push_str(&format!("ues = {}\n", pooled.len()));
        out.push_str(&format!("mean_se = {mean:.11e}\n"));
        for (i, q) in grid.iter().enumerate() {
            out.push_str(&format!("p{i:03} = {q:.11e}\n"));
        }
    }
    out
}

/// Writes rows.csv and summary.txt under `out_dir`, creating it if needed.
pub fn emit_results(table: &ResultTable, out_dir: &Path) -> Result<(PathBuf, PathBuf), Error> {
    if table.rows.is_empty() {
        return Err(Error::InvalidConfig("refusing to emit an empty result table".into()));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::InvalidConfig(format!("cannot create {}: {e}", out_dir.display())))?;
    let rows_path = out_dir.join("rows.csv");
    let summary_path = out_dir.join("summary.txt");
    std::fs::write(&rows_path, format_rows(table))
        .map_err(|e| Error::InvalidConfig(format!("cannot write {}: {e}", rows_path.display())))?;
    std::fs::write(&summary_path, format_summary(table)).map_err(|e| {
        Error::InvalidConfig(format!("cannot write {}: {e}", summary_path.display()))
    })?;
    Ok((rows_path, summary_path))
}

/// Parses a rows.csv document back into rows; the serialization audit and
/// downstream tools rely on this being the exact inverse of [`format_rows`]
/// at emitted precision.
pub fn parse_rows(text: &str) -> Result<Vec<ResultRow>, Error> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == ROWS_HEADER => {}
        other => {
            return Err(Error::InvalidConfig(format!(
                "rows header mismatch: got {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::InvalidConfig(format!(
                "row {}: expected 6 fields, got {}",
                idx + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| Error::InvalidConfig(format!("row {}: bad {what}", idx + 2));
        let setup = fields[0].parse().map_err(|_| bad("setup"))?;
        let ue = fields[1].parse().map_err(|_| bad("ue"))?;
        let estimator = Estimator::ALL
            .into_iter()
            .find(|e| e.label() == fields[2])
            .ok_or_else(|| bad("estimator"))?;
        let (scheme_name, mc) = match fields[3].strip_suffix("+mc") {
            Some(prefix) => (prefix, true),
            None => (fields[3], false),
        };
        let scheme = Scheme::ALL
            .into_iter()
            .find(|s| s.label() == scheme_name)
            .ok_or_else(|| bad("scheme"))?;
        let sinr = fields[4].parse().map_err(|_| bad("sinr"))?;
        let se = fields[5].parse().map_err(|_| bad("se"))?;
        rows.push(ResultRow {
            setup,
            ue,
            estimator,
            scheme,
            mc,
            sinr,
            se,
        });
    }
    Ok(rows)
}
