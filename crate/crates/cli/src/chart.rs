//! Static SVG of mean best-so-far return against episodes, one line per method.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use innatecoder::search::{CurveRow, Method};
use innatecoder::tasks::TaskId;

use crate::commands::read_curves;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 140.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const SAMPLES: usize = 240;
const COLORS: [&str; 5] = ["#1b6ca8", "#d1495b", "#66a182", "#edae49", "#6c4f9c"];

/// Mean over seeds of each seed's best-so-far at `x`; seeds whose curve has
/// not started yet are left out.
fn mean_at(curves: &[Vec<(u64, f64)>], x: u64) -> Option<f64> {
    let vals: Vec<f64> = curves
        .iter()
        .filter_map(|c| c.iter().take_while(|p| p.0 <= x).last().map(|p| p.1))
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn render(rows: &[CurveRow], task: TaskId) -> Result<String> {
    let mut by_method: BTreeMap<Method, BTreeMap<u64, Vec<(u64, f64)>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.task == task) {
        by_method
            .entry(r.method)
            .or_default()
            .entry(r.seed)
            .or_default()
            .push((r.episodes, r.best_return));
    }
    if by_method.is_empty() {
        bail!("no curves for {task}");
    }
    let x_max = rows
        .iter()
        .filter(|r| r.task == task)
        .map(|r| r.episodes)
        .max()
        .unwrap_or(1)
        .max(1);
    let (y_min, y_max) = (task.min_return().min(0.0), 1.0);
    let px = |x: f64| LEFT + x / x_max as f64 * (W - LEFT - RIGHT);
    let py = |y: f64| TOP + (y_max - y) / (y_max - y_min) * (H - TOP - BOTTOM);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#)?;
    writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{task}</text>"#,
        (LEFT + W - RIGHT) / 2.0
    )?;
    let (x0, x1, y0, y1) = (px(0.0), px(x_max as f64), py(y_min), py(y_max));
    writeln!(
        s,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#
    )?;
    for i in 0..=5 {
        let y = y_min + (y_max - y_min) * i as f64 / 5.0;
        let yy = py(y);
        writeln!(
            s,
            r##"<line x1="{x0:.1}" y1="{yy:.1}" x2="{x1:.1}" y2="{yy:.1}" stroke="#ddd"/>"##
        )?;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.1}</text>"#,
            x0 - 6.0,
            yy + 4.0
        )?;
        let x = x_max as f64 * i as f64 / 5.0;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x:.0}</text>"#,
            px(x),
            y0 + 18.0
        )?;
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">episodes</text>"#,
        (x0 + x1) / 2.0,
        H - 10.0
    )?;
    writeln!(
        s,
        r#"<text transform="translate(16,{:.1}) rotate(-90)" text-anchor="middle">mean best return</text>"#,
        (y0 + y1) / 2.0
    )?;

    for (i, (method, seeds)) in by_method.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut curves: Vec<Vec<(u64, f64)>> = seeds.values().cloned().collect();
        for c in &mut curves {
            c.sort_by_key(|p| p.0);
        }
        let mut pts = Vec::new();
        for j in 0..=SAMPLES {
            let x = x_max * j as u64 / SAMPLES as u64;
            if let Some(y) = mean_at(&curves, x) {
                pts.push(format!("{:.1},{:.1}", px(x as f64), py(y)));
            }
        }
        writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        )?;
        let ly = TOP + 18.0 * i as f64 + 8.0;
        writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            x1 + 14.0,
            x1 + 34.0
        )?;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{method} (n={})</text>"#,
            x1 + 40.0,
            ly + 4.0,
            seeds.len()
        )?;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn chart(curves: &Path, task: TaskId, out: &Path) -> Result<()> {
    let rows = read_curves(curves)?;
    let svg = render(&rows, task)?;
    fs::write(out, svg).with_context(|| format!("writing {}", out.display()))
}
