//! Result rows, CSV emission and the run manifest.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "experiment,seed,param,param_value,metric,value,trial";

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub seed: u64,
    /// Swept parameter names and values, in sweep order.
    pub params: Vec<(String, String)>,
    pub metric: String,
    pub value: f64,
    /// Trial index, or `None` for an aggregate over trials.
    pub trial: Option<usize>,
}

impl ResultRow {
    pub fn param_names(&self) -> String {
        self.params.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>().join(";")
    }

    pub fn param_values(&self) -> String {
        self.params.iter().map(|(_, v)| v.as_str()).collect::<Vec<_>>().join(";")
    }

    fn trial_field(&self) -> String {
        self.trial.map_or_else(|| "aggregate".to_string(), |t| t.to_string())
    }
}

/// Shortest round-trip decimal form, used for parameter values.
pub fn fmt_param(v: f64) -> String {
    format!("{v}")
}

/// Seventeen significant digits; parses back to the same `f64`.
pub fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn cmp_field(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

fn cmp_values(a: &str, b: &str) -> Ordering {
    let (xs, ys) = (a.split(';'), b.split(';'));
    for (x, y) in xs.clone().zip(ys.clone()) {
        match cmp_field(x, y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    xs.count().cmp(&ys.count())
}

fn cmp_rows(a: &ResultRow, b: &ResultRow) -> Ordering {
    a.experiment
        .cmp(&b.experiment)
        .then(a.seed.cmp(&b.seed))
        .then_with(|| a.param_names().cmp(&b.param_names()))
        .then_with(|| cmp_values(&a.param_values(), &b.param_values()))
        .then_with(|| a.metric.cmp(&b.metric))
        .then_with(|| match (a.trial, b.trial) {
            (Some(x), Some(y)) => x.cmp(&y),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        })
        .then_with(|| a.value.total_cmp(&b.value))
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// CSV text with rows in a canonical order.
pub fn render_csv(rows: &[ResultRow]) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| cmp_rows(a, b));
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in sorted {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            quote(&r.experiment),
            r.seed,
            quote(&r.param_names()),
            quote(&r.param_values()),
            quote(&r.metric),
            fmt_value(r.value),
            r.trial_field()
        );
    }
    out
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(rows)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Parses CSV produced by [`render_csv`]. Fields never contain separators
/// inside quotes for the harness's own experiment and metric names.
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("missing or unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Config(format!("malformed CSV row {}: {line}", i + 2));
        if f.len() != 7 {
            return Err(bad());
        }
        let names: Vec<&str> = if f[2].is_empty() { vec![] } else { f[2].split(';').collect() };
        let values: Vec<&str> = if f[3].is_empty() { vec![] } else { f[3].split(';').collect() };
        if names.len() != values.len() {
            return Err(bad());
        }
        rows.push(ResultRow {
            experiment: f[0].to_string(),
            seed: f[1].parse().map_err(|_| bad())?,
            params: names.iter().zip(&values).map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            metric: f[4].to_string(),
            value: f[5].parse().map_err(|_| bad())?,
            trial: if f[6] == "aggregate" { None } else { Some(f[6].parse().map_err(|_| bad())?) },
        });
    }
    Ok(rows)
}

/// Merges `entries` for one experiment into the `manifest` file in `dir`,
/// keeping entries written for other experiments.
pub fn write_manifest(dir: &Path, experiment: &str, entries: &[(&str, String)]) -> Result<()> {
    let path = dir.join("manifest");
    let mut map = BTreeMap::new();
    if path.exists() {
        let text = std::fs::read_to_string(&path).map_err(|source| Error::Io { path: path.clone(), source })?;
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                map.insert(k.to_string(), v.to_string());
            }
        }
    }
    let prefix = format!("{experiment}.");
    map.retain(|k, _| !k.starts_with(&prefix));
    for (k, v) in entries {
        map.insert(format!("{prefix}{k}"), v.clone());
    }
    let text: String = map.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &str, trial: Option<usize>, value: f64) -> ResultRow {
        ResultRow {
            experiment: "x".into(),
            seed: 3,
            params: vec![("a".into(), v.into()), ("b".into(), "ali".into())],
            metric: "m".into(),
            value,
            trial,
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(render_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rows_sort_numerically_and_aggregate_last() {
        let rows = vec![row("10", Some(0), 1.0), row("2", None, 2.0), row("2", Some(1), 3.0)];
        let text = render_csv(&rows);
        let back = parse_csv(&text).unwrap();
        assert_eq!(back[0].params[0].1, "2");
        assert_eq!(back[0].trial, Some(1));
        assert_eq!(back[1].trial, None);
        assert_eq!(back[2].params[0].1, "10");
    }

    #[test]
    fn values_round_trip_exactly() {
        let vals = [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, f64::MIN_POSITIVE, 12345.678901234567];
        let rows: Vec<_> = vals.iter().enumerate().map(|(i, &v)| row("1", Some(i), v)).collect();
        let back = parse_csv(&render_csv(&rows)).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }
}
