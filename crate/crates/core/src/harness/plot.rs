//! Hand-rolled SVG plots. Output is a deterministic function of the input
//! CSV, which keeps the golden-structure tests honest; acceptance logic never
//! reads plots, only CSVs.

use crate::error::{Error, Result};
use crate::harness::csvout::{parse_csv, ParsedCsv};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 180.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>, // already in log10 space
}

fn axis_span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if (hi - lo).abs() < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.06 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn render_loglog(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x_lo, x_hi) = axis_span(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y_lo, y_hi) = axis_span(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"18\" font-family=\"monospace\" font-size=\"14\">{title}</text>\n",
        MARGIN_L
    ));
    // axes
    svg.push_str("<g class=\"axes\" stroke=\"#333\" stroke-width=\"1\">\n");
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\"/>\n",
        MARGIN_L,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\"/>\n",
        MARGIN_L, MARGIN_T, MARGIN_L,
        HEIGHT - MARGIN_B
    ));
    svg.push_str("</g>\n");
    // ticks: integer powers of ten inside the span
    svg.push_str("<g class=\"ticks\" font-family=\"monospace\" font-size=\"11\" fill=\"#333\">\n");
    let mut tick = x_lo.ceil();
    while tick <= x_hi {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">1e{}</text>\n",
            px(tick),
            HEIGHT - MARGIN_B + 18.0,
            tick as i64
        ));
        tick += 1.0;
    }
    let mut tick = y_lo.ceil();
    while tick <= y_hi {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{}</text>\n",
            MARGIN_L - 6.0,
            py(tick) + 4.0,
            tick as i64
        ));
        tick += 1.0;
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>\n",
        0.5 * (MARGIN_L + WIDTH - MARGIN_R),
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">{y_label}</text>\n",
        0.5 * (MARGIN_T + HEIGHT - MARGIN_B),
        0.5 * (MARGIN_T + HEIGHT - MARGIN_B)
    ));
    svg.push_str("</g>\n");
    // series
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        svg.push_str(&format!(
            "<g class=\"series\" data-label=\"{}\" stroke=\"{color}\" fill=\"{color}\">\n",
            s.label
        ));
        if s.points.len() > 1 {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
        }
        for (x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\"/>\n",
                px(*x),
                py(*y)
            ));
        }
        svg.push_str("</g>\n");
    }
    // legend
    svg.push_str("<g class=\"legend\" font-family=\"monospace\" font-size=\"12\">\n");
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let y = MARGIN_T + 16.0 * (idx as f64 + 1.0);
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            WIDTH - MARGIN_R + 12.0,
            y - 9.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"#111\">{}</text>\n",
            WIDTH - MARGIN_R + 28.0,
            y,
            s.label
        ));
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}

fn results_error_plot(csv: &ParsedCsv) -> Result<String> {
    let col = |name: &str| -> Result<usize> {
        csv.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("results CSV missing column `{name}`")))
    };
    let (c_eps, c_adv, c_est, c_metric, c_value) = (
        col("eps")?,
        col("adversary")?,
        col("estimator")?,
        col("metric")?,
        col("value")?,
    );
    // (estimator, metric, adversary) → eps → values
    let mut grouped: BTreeMap<(String, String, String), BTreeMap<u64, (f64, usize)>> =
        BTreeMap::new();
    for rec in &csv.records {
        let metric = rec[c_metric].as_str();
        if metric != "tv_char" && metric != "tv_bound" {
            continue;
        }
        let eps: f64 = rec[c_eps]
            .parse()
            .map_err(|_| Error::Format("bad eps field".into()))?;
        let value: f64 = rec[c_value]
            .parse()
            .map_err(|_| Error::Format("bad value field".into()))?;
        if eps <= 0.0 || value <= 0.0 {
            continue;
        }
        let key = (
            rec[c_est].clone(),
            metric.to_string(),
            rec[c_adv].clone(),
        );
        let slot = grouped
            .entry(key)
            .or_default()
            .entry(eps.to_bits())
            .or_insert((0.0, 0));
        slot.0 += value;
        slot.1 += 1;
    }
    if grouped.is_empty() {
        return Err(Error::Format(
            "results CSV holds no plottable tv_char/tv_bound rows".into(),
        ));
    }
    let series: Vec<Series> = grouped
        .into_iter()
        .map(|((est, metric, adv), by_eps)| {
            let mut points: Vec<(f64, f64)> = by_eps
                .into_iter()
                .map(|(bits, (total, count))| {
                    let eps = f64::from_bits(bits);
                    (eps.log10(), (total / count as f64).log10())
                })
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: format!("{est}/{metric} [{adv}]"),
                points,
            }
        })
        .collect();
    Ok(render_loglog(
        "estimation error vs corruption rate",
        "eps",
        "error",
        &series,
    ))
}

fn lowerbound_decay_plot(csv: &ParsedCsv) -> Result<String> {
    let col = |name: &str| -> Result<usize> {
        csv.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("lowerbound CSV missing column `{name}`")))
    };
    let (c_n, c_k, c_tv) = (col("n")?, col("k")?, col("tv_estimate")?);
    let mut grouped: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for rec in &csv.records {
        let n: usize = rec[c_n].parse().map_err(|_| Error::Format("bad n".into()))?;
        let k: usize = rec[c_k].parse().map_err(|_| Error::Format("bad k".into()))?;
        let tv: f64 = rec[c_tv]
            .parse()
            .map_err(|_| Error::Format("bad tv_estimate".into()))?;
        if tv > 0.0 {
            grouped.entry(k).or_default().push(((n as f64).log10(), tv.log10()));
        }
    }
    if grouped.is_empty() {
        return Err(Error::Format("lowerbound CSV holds no plottable rows".into()));
    }
    let series: Vec<Series> = grouped
        .into_iter()
        .map(|(k, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: format!("k = {k}"),
                points,
            }
        })
        .collect();
    Ok(render_loglog(
        "outcome-law TV vs qubit count",
        "n",
        "tv estimate",
        &series,
    ))
}

/// Render the plot matching the CSV's schema into `out_dir`. File names are
/// fixed: `error_vs_eps.svg` for results CSVs, `lowerbound_decay.svg` for
/// lower-bound CSVs.
pub fn emit_plots(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(csv_path)?;
    let csv = parse_csv(&text)?;
    if csv.records.is_empty() {
        return Err(Error::Format("CSV has no data rows; nothing to plot".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let (name, svg) = if csv.schema.contains("robustkit-results") {
        ("error_vs_eps.svg", results_error_plot(&csv)?)
    } else if csv.schema.contains("robustkit-lowerbound") {
        ("lowerbound_decay.svg", lowerbound_decay_plot(&csv)?)
    } else {
        return Err(Error::Format(format!("unknown CSV schema `{}`", csv.schema)));
    };
    let path = out_dir.join(name);
    std::fs::write(&path, svg)?;
    Ok(vec![path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::csvout::{render_lowerbound_csv, render_results_csv, LowerboundRow, ResultRow};

    fn row(est: &str, metric: &str, eps: f64, value: f64) -> ResultRow {
        ResultRow {
            experiment: "robust_classical".into(),
            trial: 0,
            eps,
            n: 50,
            n_samples: 1000,
            adversary: "rare_inflate".into(),
            estimator: est.into(),
            metric: metric.into(),
            value,
            stderr: 0.0,
        }
    }

    #[test]
    fn empty_csv_is_an_error() {
        let dir = std::env::temp_dir().join("robustkit_plot_empty");
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("empty.csv");
        std::fs::write(&csv, render_results_csv(&[]).unwrap()).unwrap();
        assert!(emit_plots(&csv, &dir).is_err());
    }

    #[test]
    fn single_row_degenerate_plot() {
        let dir = std::env::temp_dir().join("robustkit_plot_single");
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("one.csv");
        std::fs::write(
            &csv,
            render_results_csv(&[row("filter", "tv_char", 0.02, 0.05)]).unwrap(),
        )
        .unwrap();
        let files = emit_plots(&csv, &dir).unwrap();
        let svg = std::fs::read_to_string(&files[0]).unwrap();
        assert!(svg.contains("<circle"));
        assert!(svg.contains("class=\"legend\""));
    }

    #[test]
    fn full_sweep_plot_has_series_and_legend_entries() {
        let dir = std::env::temp_dir().join("robustkit_plot_sweep");
        std::fs::create_dir_all(&dir).unwrap();
        let mut rows = Vec::new();
        for &eps in &[0.005, 0.01, 0.02, 0.04] {
            rows.push(row("filter", "tv_char", eps, eps));
            rows.push(row("naive", "tv_char", eps, 10.0 * eps));
            rows.push(row("naive", "tv_bound", eps, eps.sqrt()));
        }
        let csv = dir.join("sweep.csv");
        std::fs::write(&csv, render_results_csv(&rows).unwrap()).unwrap();
        let files = emit_plots(&csv, &dir).unwrap();
        let svg = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(svg.matches("class=\"series\"").count(), 3);
        assert!(svg.contains("filter/tv_char [rare_inflate]"));
        assert!(svg.contains("naive/tv_bound [rare_inflate]"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        // deterministic output
        let again = emit_plots(&csv, &dir).unwrap();
        assert_eq!(svg, std::fs::read_to_string(&again[0]).unwrap());
    }

    #[test]
    fn lowerbound_plot_renders_decay_series() {
        let dir = std::env::temp_dir().join("robustkit_plot_lb");
        std::fs::create_dir_all(&dir).unwrap();
        let rows = vec![
            LowerboundRow { n: 64, k: 4, tv_estimate: 0.19, stderr: 0.001, trace_distance_lower_bound: 0.5 },
            LowerboundRow { n: 4096, k: 4, tv_estimate: 0.0014, stderr: 0.0001, trace_distance_lower_bound: 0.27 },
        ];
        let csv = dir.join("lb.csv");
        std::fs::write(&csv, render_lowerbound_csv(&rows).unwrap()).unwrap();
        let files = emit_plots(&csv, &dir).unwrap();
        let svg = std::fs::read_to_string(&files[0]).unwrap();
        assert!(files[0].ends_with("lowerbound_decay.svg"));
        assert!(svg.contains("k = 4"));
    }
}
