//! Artifact writers: deterministic CSV and JSON with 9 significant digits,
//! '.' decimals, ',' delimiters, and '\n' line endings everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{json, Value};
use trilevel::doe::{level_name, AnovaTable, BestReport, CaseResult, Factor, Metric, RangeTable};
use trilevel::sweep::SweepResult;

use crate::config::RunConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Nine significant digits, scientific, with negative zero normalized so
/// byte-identical runs stay byte-identical across algebraic rewrites.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.8e}")
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

/// Heat-flow modes are small integers; render them without an exponent.
fn csv_mode(x: Option<f64>) -> String {
    x.map(|m| format!("{}", m as i64)).unwrap_or_default()
}

/// FNV-1a over the canonical config serialization.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in cfg.to_canonical_toml().as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// One CSV file per observable: header, then one line per cell in row-major
/// order, cell (i, j) of an A x B grid on line 1 + i*B + j.
pub fn write_sweep_csv(dir: &Path, sweep: &SweepResult) -> anyhow::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for name in sweep.observable_names() {
        let values = sweep.observable(name)?;
        let mut out = String::new();
        out.push_str(&format!(
            "{},{},{}\n",
            sweep.grid.omega20.name, sweep.grid.lam.name, name
        ));
        for (cell, v) in sweep.cells.iter().zip(&values) {
            let field = if *name == "mode" {
                csv_mode(*v)
            } else {
                csv_opt(*v)
            };
            out.push_str(&format!("{},{},{}\n", sig9(cell.omega20), sig9(cell.lam), field));
        }
        let path = dir.join(format!("sweep_{name}.csv"));
        write_text(&path, &out)?;
        written.push(path);
    }
    Ok(written)
}

/// The whole sweep as one JSON document with per-observable value arrays.
pub fn sweep_json(sweep: &SweepResult, cfg_hash: &str) -> anyhow::Result<Value> {
    let axis = |a: &trilevel::AxisSpec| {
        json!({ "name": a.name, "min": a.min, "max": a.max, "count": a.count })
    };
    let mut observables = serde_json::Map::new();
    for name in sweep.observable_names() {
        let values = sweep.observable(name)?;
        observables.insert((*name).to_string(), Value::from(values));
    }
    Ok(json!({
        "version": TOOL_VERSION,
        "engine": sweep.engine.name(),
        "config_hash": cfg_hash,
        "axes": [axis(&sweep.grid.omega20), axis(&sweep.grid.lam)],
        "cells": sweep.cells.len(),
        "observables": Value::Object(observables),
    }))
}

pub fn cases_csv(results: &[CaseResult]) -> String {
    let mut out = String::from(
        "case,dbeta,dr,dd,max_p,omega20_at_p,lam_at_p,max_eta,omega20_at_eta,lam_at_eta,\
         max_peta,omega20_at_peta,lam_at_peta,min_sigma,never_engine\n",
    );
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.case_id,
            r.levels[0],
            r.levels[1],
            r.levels[2],
            sig9(r.max_p),
            sig9(r.argmax_p.0),
            sig9(r.argmax_p.1),
            sig9(r.max_eta),
            sig9(r.argmax_eta.0),
            sig9(r.argmax_eta.1),
            sig9(r.max_peta),
            sig9(r.argmax_peta.0),
            sig9(r.argmax_peta.1),
            sig9(r.min_sigma),
            r.never_engine,
        ));
    }
    out
}

pub fn range_csv(range: &RangeTable) -> String {
    let mut out =
        String::from("metric,factor,k1,k2,k3,kbar1,kbar2,kbar3,r,best_level,no_preference\n");
    for metric in Metric::ALL {
        for factor in Factor::ALL {
            let e = range.entry(metric, factor);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                metric.label(),
                factor.label(),
                sig9(e.k[0]),
                sig9(e.k[1]),
                sig9(e.k[2]),
                sig9(e.kbar[0]),
                sig9(e.kbar[1]),
                sig9(e.kbar[2]),
                sig9(e.r),
                e.best_level,
                e.no_preference,
            ));
        }
    }
    out
}

pub fn anova_csv(table: &AnovaTable) -> String {
    let mut out = String::from("metric,source,s,df,mean_square,f,p,mark\n");
    for metric in Metric::ALL {
        let m = table.metric(metric);
        for row in &m.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                metric.label(),
                row.factor.label(),
                sig9(row.s),
                row.df,
                sig9(row.mean_square),
                sig9(row.f_value),
                sig9(row.p_value),
                row.mark,
            ));
        }
        out.push_str(&format!(
            "{},error,{},{},{},,,\n",
            metric.label(),
            sig9(m.s_error),
            m.df_error,
            sig9(m.ms_error),
        ));
    }
    out
}

pub fn best_csv(best: &BestReport) -> String {
    let mut out = String::from("metric,factor,level,level_name,rankings_agree\n");
    for metric in Metric::ALL {
        let m = best.metric(metric);
        for pick in &m.picks {
            let (level, name) = match pick.level {
                Some(l) => (l.to_string(), level_name(l).to_string()),
                None => (String::new(), "no preference".to_string()),
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                metric.label(),
                pick.factor.label(),
                level,
                name,
                m.rankings_agree,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.8), "8.00000000e-1");
        assert_eq!(sig9(1.308988764), "1.30898876e0");
        assert_eq!(sig9(-0.0), "0.00000000e0");
        assert_eq!(sig9(f64::INFINITY), "inf");
        assert_eq!(csv_opt(None), "");
        assert_eq!(csv_mode(Some(2.0)), "2");
    }

    #[test]
    fn hash_tracks_the_config() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.engine_spec.lam = 0.75;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
