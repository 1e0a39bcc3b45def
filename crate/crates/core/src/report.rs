//! Plot-ready CSV files and a text summary for a sweep result bundle.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::scenario::{CellData, CellKey, PlanSummary, ResultBundle};

pub const FILES: [&str; 8] = [
    "throughput_vs_load.csv",
    "mode_hist.csv",
    "min_q.csv",
    "spacing_stats.csv",
    "slot_usage.csv",
    "cost_perf.csv",
    "trace.csv",
    "summary.txt",
];

const KEY_COLS: [&str; 4] = ["load", "policy", "strategy", "psd_uw_per_ghz"];

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        String::new()
    }
}

fn key_cols(k: &CellKey) -> Vec<String> {
    vec![
        k.load.map_or_else(String::new, |l| format!("{l:.2}")),
        k.policy.to_string(),
        k.strategy.label(),
        format!("{}", k.psd_uw_per_ghz),
    ]
}

fn header(extra: &[&str]) -> Vec<String> {
    KEY_COLS.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn plans(d: &CellData) -> [(&'static str, &PlanSummary); 2] {
    [("ep", &d.ep), ("jp", &d.jp)]
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_csv(path: &Path, head: Vec<String>, rows: Vec<Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&head).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()
}

/// Writes [`FILES`] into `dir`. Output depends only on the bundle, so the
/// same scenario and seed reproduce identical bytes.
pub fn write_report(bundle: &ResultBundle, dir: impl AsRef<Path>) -> io::Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let path = |f: &str| dir.join(f);

    let mut rows = Vec::new();
    for c in &bundle.cells {
        let mut r = key_cols(&c.key);
        match &c.outcome {
            Ok(d) => r.extend([
                "ok".into(),
                d.w_cur.to_string(),
                d.ep.th.to_string(),
                d.jp.th.to_string(),
                d.abs_gain().to_string(),
                num(d.rel_gain()),
                d.trace.records.len().to_string(),
            ]),
            Err(_) => r.extend(["failed".into(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new()]),
        }
        rows.push(r);
    }
    write_csv(
        &path(FILES[0]),
        header(&["status", "w_cur", "th_ep_gbps", "th_jp_gbps", "abs_gain_gbps", "rel_gain", "iterations"]),
        rows,
    )?;

    let mut rows = Vec::new();
    for (k, d) in bundle.ok_cells() {
        for (plan, s) in plans(d) {
            for (mode, n) in &s.modes {
                let mut r = key_cols(k);
                r.extend([plan.into(), mode.clone(), n.to_string()]);
                rows.push(r);
            }
        }
    }
    write_csv(&path(FILES[1]), header(&["plan", "mode", "lightpaths"]), rows)?;

    let rows = bundle
        .ok_cells()
        .map(|(k, d)| {
            let mut r = key_cols(k);
            r.extend([num(d.ep.min_q_db), num(d.jp.min_q_db), num(d.jp.reduction_db)]);
            r
        })
        .collect();
    write_csv(&path(FILES[2]), header(&["min_q_ep_db", "min_q_jp_db", "jp_reduction_db"]), rows)?;

    let mut rows = Vec::new();
    for (k, d) in bundle.ok_cells() {
        for (plan, s) in plans(d) {
            let mut r = key_cols(k);
            r.push(plan.into());
            match s.spacing {
                Some(st) => r.extend([num(st.min_ghz), num(st.avg_ghz), num(st.max_ghz)]),
                None => r.extend([String::new(), String::new(), String::new()]),
            }
            rows.push(r);
        }
    }
    write_csv(&path(FILES[3]), header(&["plan", "min_ghz", "avg_ghz", "max_ghz"]), rows)?;

    let mut rows = Vec::new();
    for (k, d) in bundle.ok_cells() {
        for (plan, s) in plans(d) {
            for (slot, n) in s.slot_usage.iter().enumerate() {
                let mut r = key_cols(k);
                r.extend([plan.into(), (slot + 1).to_string(), n.to_string()]);
                rows.push(r);
            }
        }
    }
    write_csv(&path(FILES[4]), header(&["plan", "slot", "links_used"]), rows)?;

    let rows = bundle
        .ok_cells()
        .map(|(k, d)| {
            let mut r = key_cols(k);
            r.extend([d.ep.count.to_string(), d.jp.count.to_string(), num(d.count_increase()), num(d.rel_gain())]);
            r
        })
        .collect();
    write_csv(&path(FILES[5]), header(&["lightpaths_ep", "lightpaths_jp", "count_increase", "th_gain"]), rows)?;

    let mut rows = Vec::new();
    for (k, d) in bundle.ok_cells() {
        for t in &d.trace.records {
            let modes: Vec<String> = t.modes.iter().map(|(m, n)| format!("{m}:{n}")).collect();
            let mut r = key_cols(k);
            r.extend([
                t.iter.to_string(),
                format!("{:.2}", t.reduction_db),
                num(t.max_margin_db),
                if t.th.is_finite() { t.th.to_string() } else { String::new() },
                t.count.to_string(),
                num(t.min_q_db),
                num(t.x_network_db),
                format!("{:?}", t.status).to_lowercase(),
                modes.join(" "),
            ]);
            rows.push(r);
        }
    }
    write_csv(
        &path(FILES[6]),
        header(&["iter", "reduction_db", "max_margin_db", "th_gbps", "lightpaths", "min_q_db", "x_network_db", "status", "modes"]),
        rows,
    )?;

    fs::write(path(FILES[7]), summary(bundle))?;
    Ok(FILES.iter().map(|f| path(f)).collect())
}

/// EP/JP throughput and gain per cell, failures listed last.
pub fn summary(bundle: &ResultBundle) -> String {
    let s = &bundle.scenario;
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", s.name);
    let _ = writeln!(out, "topology: {}  K={}  seed={}  gap={}  delta_m={} dB", s.topology, s.k, s.seed, s.gap, s.delta_m_db);
    let _ = writeln!(out, "cells: {}  partial: {}", bundle.cells.len(), bundle.is_partial());
    let _ = writeln!(out);
    for (k, d) in bundle.ok_cells() {
        let _ = writeln!(
            out,
            "load={} policy={} strategy={} psd={}: EP={} Gbps JP={} Gbps gain={} Gbps ({:.2}%) lightpaths {}->{}",
            k.load.map_or_else(|| "-".into(), |l| format!("{l:.2}")),
            k.policy,
            k.strategy.label(),
            k.psd_uw_per_ghz,
            d.ep.th,
            d.jp.th,
            d.abs_gain(),
            100.0 * d.rel_gain(),
            d.ep.count,
            d.jp.count
        );
    }
    out.push_str(&gain_table(bundle));
    for c in &bundle.cells {
        if let Err(e) = &c.outcome {
            let _ = writeln!(out, "FAILED {:?} {} {} {}: {e}", c.key.load, c.key.policy, c.key.strategy.label(), c.key.psd_uw_per_ghz);
        }
    }
    out
}

/// Relative gain (%) with one row per load and one column per
/// (policy, strategy, PSD) combination.
fn gain_table(bundle: &ResultBundle) -> String {
    let mut cols: Vec<String> = Vec::new();
    let mut loads: Vec<String> = Vec::new();
    let mut cell = std::collections::BTreeMap::new();
    for (k, d) in bundle.ok_cells() {
        let col = format!("{}/{}/{}", k.policy, k.strategy.label(), k.psd_uw_per_ghz);
        let load = k.load.map_or_else(|| "-".into(), |l| format!("{l:.2}"));
        if !cols.contains(&col) {
            cols.push(col.clone());
        }
        if !loads.contains(&load) {
            loads.push(load.clone());
        }
        cell.insert((load, col), 100.0 * d.rel_gain());
    }
    let mut out = String::new();
    if cols.is_empty() {
        return out;
    }
    let _ = writeln!(out, "\nrelative gain JP over EP (%)");
    let _ = write!(out, "{:>6}", "load");
    for c in &cols {
        let _ = write!(out, " {c:>22}");
    }
    let _ = writeln!(out);
    for l in &loads {
        let _ = write!(out, "{l:>6}");
        for c in &cols {
            match cell.get(&(l.clone(), c.clone())) {
                Some(g) => {
                    let _ = write!(out, " {g:>22.2}");
                }
                None => {
                    let _ = write!(out, " {:>22}", "-");
                }
            }
        }
        let _ = writeln!(out);
    }
    out
}
