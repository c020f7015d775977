//! Plot-ready tables and SVG line charts.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::experiment::{ExperimentResults, RunRecord};

/// A table with one x column and any number of series columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub x_label: String,
    pub series: Vec<String>,
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl PlotTable {
    pub fn new(x_label: impl Into<String>, series: &[&str]) -> Self {
        Self {
            x_label: x_label.into(),
            series: series.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> = std::iter::once(self.x_label.as_str())
            .chain(self.series.iter().map(String::as_str))
            .collect();
        w.write_record(&header)?;
        for (x, ys) in &self.rows {
            let record: Vec<String> = std::iter::once(x.to_string())
                .chain(ys.iter().map(|y| y.to_string()))
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean, minimum and maximum best fitness per generation over the runs.
pub fn fitness_curve(runs: &[RunRecord]) -> PlotTable {
    let mut t = PlotTable::new("generation", &["mean_best", "min_best", "max_best"]);
    let generations = runs.iter().map(|r| r.best_per_generation.len()).min().unwrap_or(0);
    for g in 0..generations {
        let column: Vec<f64> = runs.iter().map(|r| r.best_per_generation[g]).collect();
        let mean = column.iter().sum::<f64>() / column.len() as f64;
        let min = column.iter().copied().fold(f64::INFINITY, f64::min);
        let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        t.rows.push((g as f64, vec![mean, min, max]));
    }
    t
}

/// Fraction of runs that have succeeded by each generation.
pub fn success_curve(runs: &[RunRecord]) -> PlotTable {
    let mut t = PlotTable::new("generation", &["success_rate"]);
    let generations = runs.iter().map(|r| r.best_per_generation.len()).min().unwrap_or(0);
    for g in 0..generations {
        let hits = runs.iter().filter(|r| r.success_generation.is_some_and(|s| s <= g)).count();
        t.rows.push((g as f64, vec![hits as f64 / runs.len() as f64]));
    }
    t
}

/// Success rate against a swept parameter.
pub fn success_vs_parameter(x_label: &str, points: &[(usize, ExperimentResults)]) -> PlotTable {
    let mut t = PlotTable::new(x_label, &["success_rate"]);
    for (x, r) in points {
        t.rows.push((*x as f64, vec![r.summary().success_rate]));
    }
    t
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// A line chart of every series; non-finite points are skipped.
pub fn render_svg(table: &PlotTable, title: &str) -> String {
    let (x0, x1) = bounds(table.rows.iter().map(|r| r.0));
    let (y0, y1) = bounds(table.rows.iter().flat_map(|r| r.1.iter().copied()));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, bottom, right, top) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" stroke="black" fill="none"/>"#
    );
    for (label, v, x, y) in [
        (format!("{x0:.4}"), 0, left, bottom + 15.0),
        (format!("{x1:.4}"), 0, right, bottom + 15.0),
        (format!("{y0:.4}"), 1, left - 5.0, bottom),
        (format!("{y1:.4}"), 1, left - 5.0, top),
    ] {
        let anchor = if v == 0 { "middle" } else { "end" };
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{label}</text>"#
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0,
        escape(&table.x_label)
    );
    for (k, name) in table.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = table
            .rows
            .iter()
            .filter(|(x, ys)| x.is_finite() && ys[k].is_finite())
            .map(|(x, ys)| format!("{:.2},{:.2}", sx(*x), sy(ys[k])))
            .collect();
        if !points.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#,
                points.join(" ")
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            right - 110.0,
            top + 15.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn record(id: usize, best: &[f64], success: Option<usize>) -> RunRecord {
        RunRecord {
            run_id: id,
            seed: id as u64,
            best_per_generation: best.to_vec(),
            success_generation: success,
            wall_time: Duration::ZERO,
        }
    }

    #[test]
    fn empty_results_give_header_only() {
        let mut buf = Vec::new();
        fitness_curve(&[]).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "generation,mean_best,min_best,max_best\n");
    }

    #[test]
    fn curves() {
        let runs = [record(0, &[4.0, 2.0, 0.0], Some(2)), record(1, &[2.0, 2.0, 2.0], None)];
        let f = fitness_curve(&runs);
        assert_eq!(f.rows[0], (0.0, vec![3.0, 2.0, 4.0]));
        assert_eq!(f.rows[2], (2.0, vec![1.0, 0.0, 2.0]));
        let s = success_curve(&runs);
        assert_eq!(s.rows.iter().map(|r| r.1[0]).collect::<Vec<_>>(), vec![0.0, 0.0, 0.5]);
    }

    #[test]
    fn svg_has_one_line_per_series() {
        let runs = [record(0, &[4.0, 2.0, f64::INFINITY], None)];
        let svg = render_svg(&fitness_curve(&runs), "a < b");
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
