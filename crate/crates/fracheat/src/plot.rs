//! Self-contained SVG line charts for run tables: no external renderer,
//! one chart per CSV, log axes chosen automatically when a column spans
//! decades.

use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// One polyline of a chart.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 700.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 420.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        return format!("{v:.1e}");
    }
    let mut text = format!("{v:.3}");
    while text.contains('.') && (text.ends_with('0') || text.ends_with('.')) {
        text.pop();
    }
    text
}

/// Data range in (possibly log-transformed) axis coordinates, padded so a
/// flat series still spans a visible band.
fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.04;
    (lo - pad, hi + pad)
}

/// Render a line chart. Log axes transform the data; points that are not
/// finite, or not positive on a log axis, are dropped.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_x: bool,
    log_y: bool,
) -> String {
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let keep = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);
    let cleaned: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .filter(|&&(x, y)| keep(x, log_x) && keep(y, log_y))
                .map(|&(x, y)| (tx(x), ty(y)))
                .collect();
            (s.label.clone(), pts)
        })
        .collect();
    let (x0, x1) = axis_range(cleaned.iter().flat_map(|(_, p)| p.iter().map(|&(x, _)| x)));
    let (y0, y1) = axis_range(cleaned.iter().flat_map(|(_, p)| p.iter().map(|&(_, y)| y)));
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (RIGHT - LEFT);
    let py = |y: f64| BOTTOM - (y - y0) / (y1 - y0) * (BOTTOM - TOP);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.0}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" fill=\"#333\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        escape(title)
    ));

    // gridlines and tick labels, five per axis
    for i in 0..5 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let gx = px(fx);
        let gy = py(fy);
        svg.push_str(&format!(
            "<line x1=\"{gx:.1}\" y1=\"{TOP}\" x2=\"{gx:.1}\" y2=\"{BOTTOM}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
        ));
        svg.push_str(&format!(
            "<line x1=\"{LEFT}\" y1=\"{gy:.1}\" x2=\"{RIGHT}\" y2=\"{gy:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
        ));
        let xv = if log_x { 10f64.powf(fx) } else { fx };
        let yv = if log_y { 10f64.powf(fy) } else { fy };
        svg.push_str(&format!(
            "<text x=\"{gx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\" \
             fill=\"#333\">{}</text>\n",
            BOTTOM + 16.0,
            fmt_tick(xv)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\" \
             fill=\"#333\">{}</text>\n",
            LEFT - 6.0,
            gy + 4.0,
            fmt_tick(yv)
        ));
    }
    svg.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
         stroke=\"#333333\" stroke-width=\"1\"/>\n",
        RIGHT - LEFT,
        BOTTOM - TOP
    ));
    let x_title = if log_x { format!("{x_label} (log)") } else { x_label.to_string() };
    let y_title = if log_y { format!("{y_label} (log)") } else { y_label.to_string() };
    svg.push_str(&format!(
        "<text x=\"{:.0}\" y=\"{:.0}\" text-anchor=\"middle\" font-size=\"13\" \
         fill=\"#333\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 14.0,
        escape(&x_title)
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{:.0}\" text-anchor=\"middle\" font-size=\"13\" fill=\"#333\" \
         transform=\"rotate(-90 20 {:.0})\">{}</text>\n",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        escape(&y_title)
    ));

    for (i, (label, pts)) in cleaned.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> =
            pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            path.join(" ")
        ));
        let ly = TOP + 16.0 + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" \
             stroke-width=\"2.5\"/>\n",
            RIGHT - 150.0,
            RIGHT - 126.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"#333\">{}</text>\n",
            RIGHT - 120.0,
            ly + 4.0,
            escape(label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Build a chart from a CSV table: the first column whose every entry is
/// numeric becomes the abscissa, every later numeric column a series;
/// text columns are ignored. Axes go logarithmic when the (positive)
/// values span at least two decades.
pub fn csv_to_chart(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{} is empty", path.display())))?
        .split(',')
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    let mut numeric = vec![true; header.len()];
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Format(format!(
                "{} row has {} fields, header has {}",
                path.display(),
                fields.len(),
                header.len()
            )));
        }
        for (j, field) in fields.iter().enumerate() {
            match field.trim().parse::<f64>() {
                Ok(v) => columns[j].push(v),
                Err(_) => numeric[j] = false,
            }
        }
    }
    let numeric_cols: Vec<usize> = (0..header.len())
        .filter(|&j| numeric[j] && !columns[j].is_empty())
        .collect();
    if numeric_cols.is_empty() {
        return Err(Error::Format(format!(
            "{} has no numeric columns to plot",
            path.display()
        )));
    }
    // lone numeric column: plot it against the row index
    let (xs, x_label, y_cols) = if numeric_cols.len() == 1 {
        let rows = columns[numeric_cols[0]].len();
        let xs: Vec<f64> = (0..rows).map(|i| i as f64).collect();
        (xs, "row".to_string(), vec![numeric_cols[0]])
    } else {
        (
            columns[numeric_cols[0]].clone(),
            header[numeric_cols[0]].clone(),
            numeric_cols[1..].to_vec(),
        )
    };
    let series: Vec<Series> = y_cols
        .iter()
        .map(|&j| Series {
            label: header[j].clone(),
            points: xs.iter().copied().zip(columns[j].iter().copied()).collect(),
        })
        .collect();
    let spans_decades = |values: &mut dyn Iterator<Item = f64>| -> bool {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for v in values {
            if !v.is_finite() || v <= 0.0 {
                return false;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        lo.is_finite() && hi > 0.0 && hi / lo >= 100.0
    };
    let log_x = spans_decades(&mut xs.iter().copied());
    let log_y =
        spans_decades(&mut series.iter().flat_map(|s| s.points.iter().map(|&(_, y)| y)));
    let title = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    let y_label = if series.len() == 1 { series[0].label.clone() } else { "value".to_string() };
    Ok(line_chart(&title, &x_label, &y_label, &series, log_x, log_y))
}

/// Render an SVG next to every CSV in the directory. Returns the files
/// written and a note per table that could not be charted.
pub fn render_dir(dir: &Path) -> Result<(Vec<PathBuf>, Vec<String>)> {
    let mut tables: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension().map(|x| x.eq_ignore_ascii_case("csv")).unwrap_or(false)
        })
        .collect();
    tables.sort();
    let mut written = Vec::new();
    let mut skipped = Vec::new();
    for table in tables {
        match csv_to_chart(&table) {
            Ok(svg) => {
                let out = table.with_extension("svg");
                std::fs::write(&out, svg)?;
                written.push(out);
            }
            Err(e) => skipped.push(format!("{}: {e}", table.display())),
        }
    }
    Ok((written, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_carry_title_axes_and_one_polyline_per_series() {
        let series = vec![
            Series { label: "a<b".into(), points: vec![(0.0, 1.0), (1.0, 2.0)] },
            Series { label: "c".into(), points: vec![(0.0, 2.0), (1.0, 1.0)] },
        ];
        let svg = line_chart("demo", "t", "norm", &series, false, false);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("demo"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("a<b"));
    }

    #[test]
    fn log_points_at_or_below_zero_are_dropped_not_propagated() {
        let series =
            vec![Series { label: "s".into(), points: vec![(1.0, 0.0), (10.0, 1.0), (100.0, 2.0)] }];
        let svg = line_chart("demo", "t", "v", &series, true, true);
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
    }

    #[test]
    fn csv_charts_skip_text_columns_and_pick_log_axes() {
        let dir = std::env::temp_dir().join("fracheat-plot-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("table.csv");
        std::fs::write(&path, "t,branch,norm\n0.001,series,1\n0.1,series,2\n10,integral,3\n")
            .unwrap();
        let svg = csv_to_chart(&path).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("t (log)"));
        assert!(!svg.contains("branch"));
    }

    #[test]
    fn a_directory_of_tables_renders_one_svg_each() {
        let dir = std::env::temp_dir().join("fracheat-plot-dir-test");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("a.csv"), "x,y\n1,2\n3,4\n").unwrap();
        std::fs::write(dir.join("b.csv"), "x,y\n1,2\n2,8\n").unwrap();
        std::fs::write(dir.join("notes.txt"), "not a table").unwrap();
        std::fs::write(dir.join("empty.csv"), "a,b\n").unwrap();
        let (written, skipped) = render_dir(&dir).unwrap();
        assert_eq!(written.len(), 2);
        assert!(dir.join("a.svg").exists());
        assert!(dir.join("b.svg").exists());
        assert_eq!(skipped.len(), 1);
        assert!(skipped[0].contains("empty.csv"));
    }
}
