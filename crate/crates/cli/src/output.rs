use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::Value;

use crate::experiments::{Table, UnitSystem};

/// Shortest round-trip text; exponent form only for very large or small
/// magnitudes.
pub fn fmt_num(x: f64) -> String {
    let x = x + 0.0;
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_table(dir: &Path, table: &Table, units: &UnitSystem) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{}.csv", table.name));
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(table.columns.iter().map(|(n, d)| format!("{n} [{}]", units.label(*d))))?;
    for row in &table.rows {
        w.write_record(
            row.iter()
                .zip(&table.columns)
                .map(|(v, (_, d))| fmt_num(v * units.scale(*d))),
        )?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_roundtrips() {
        for x in [0.0, 1.5, -2.25e-7, 3.0e9, 0.1, 123456.789, -1e-300] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(2.5e-7), "2.5e-7");
    }
}
