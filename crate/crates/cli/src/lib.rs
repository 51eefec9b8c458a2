//! Configuration-driven front end: presets, experiment runner and the
//! cross-method validation suite.

// Negated comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod presets;
pub mod run;
pub mod validate;

use anyhow::{anyhow, Context, Result};
use toml::Table;

/// Assembles the final configuration table: preset, then file, then
/// `--set` overrides, then the dedicated flags.
pub fn load(
    preset: Option<&str>,
    file_text: Option<&str>,
    sets: &[String],
    seed: Option<u64>,
    out: Option<&str>,
) -> Result<Table> {
    let mut table = Table::new();
    if let Some(name) = preset {
        let text = presets::toml(name)
            .ok_or_else(|| anyhow!("unknown preset {name:?}; try one of {}", presets::NAMES.join(", ")))?;
        table = toml::from_str(text).with_context(|| format!("preset {name}"))?;
    }
    if let Some(text) = file_text {
        let file: Table = toml::from_str(text).context("parsing configuration file")?;
        config::merge(&mut table, file);
    }
    config::apply_sets(&mut table, sets)?;
    if let Some(seed) = seed {
        table.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    if let Some(out) = out {
        table.insert("output".into(), toml::Value::String(out.into()));
    }
    Ok(table)
}
