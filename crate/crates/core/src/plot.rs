//! Vector-graphics emission: covariance heatmap, squeezing bar chart, and
//! eigenmode shape plots, each with its underlying data as CSV alongside.
//!
//! SVGs are written directly with fixed-precision coordinates so identical
//! reports always produce byte-identical files.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::format_float;
use crate::formats::write_string;
use crate::report::{rows_to_matrix, AnalysisReport};

const CELL: f64 = 24.0;
const MARGIN: f64 = 56.0;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Diverging blue-white-red scale for t in [-1, 1].
fn diverging_color(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t < 0.0 {
        let s = -t;
        (
            (255.0 * (1.0 - s) + 33.0 * s) as u8,
            (255.0 * (1.0 - s) + 102.0 * s) as u8,
            (255.0 * (1.0 - s) + 172.0 * s) as u8,
        )
    } else {
        let s = t;
        (
            (255.0 * (1.0 - s) + 178.0 * s) as u8,
            (255.0 * (1.0 - s) + 24.0 * s) as u8,
            (255.0 * (1.0 - s) + 43.0 * s) as u8,
        )
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn svg_header(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\" font-family=\"monospace\" font-size=\"11\">\n",
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    )
}

/// Heatmap of the covariance matrix.
///
/// Cell color encodes the deviation from the shot-noise identity: diagonal
/// entries are centered at 1, off-diagonal entries at 0, on a diverging
/// scale documented in the legend.
pub fn heatmap_svg(c: &DMatrix<f64>) -> String {
    let n = c.nrows();
    let deviation = |i: usize, j: usize| c[(i, j)] - if i == j { 1.0 } else { 0.0 };
    let mut max_abs = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            max_abs = max_abs.max(deviation(i, j).abs());
        }
    }
    if max_abs == 0.0 {
        max_abs = 1.0;
    }

    let grid = n as f64 * CELL;
    let width = MARGIN + grid + 140.0;
    let height = MARGIN + grid + 30.0;
    let mut svg = svg_header(width, height);
    svg.push_str(&format!(
        "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        fmt(width),
        fmt(height)
    ));
    for i in 0..n {
        for j in 0..n {
            let x = MARGIN + j as f64 * CELL;
            let y = MARGIN + i as f64 * CELL;
            let color = diverging_color(deviation(i, j) / max_abs);
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>C[{},{}] = {}</title></rect>\n",
                fmt(x),
                fmt(y),
                fmt(CELL),
                fmt(CELL),
                color,
                i + 1,
                j + 1,
                format_float(c[(i, j)])
            ));
        }
    }
    for m in 0..n {
        let center = MARGIN + m as f64 * CELL + CELL / 2.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            fmt(center),
            fmt(MARGIN - 8.0),
            m + 1
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            fmt(MARGIN - 8.0),
            fmt(center + 4.0),
            m + 1
        ));
    }
    let legend_x = MARGIN + grid + 16.0;
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">color: deviation from</text>\n",
        fmt(legend_x),
        fmt(MARGIN + 12.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">shot-noise identity</text>\n",
        fmt(legend_x),
        fmt(MARGIN + 26.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">(diag centered at 1,</text>\n",
        fmt(legend_x),
        fmt(MARGIN + 40.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">off-diag at 0)</text>\n",
        fmt(legend_x),
        fmt(MARGIN + 54.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">blue -{} .. red +{}</text>\n",
        fmt(legend_x),
        fmt(MARGIN + 74.0),
        format_float(max_abs),
        format_float(max_abs)
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Bar chart of per-mode squeezing levels with a 0 dB reference line.
/// `None` levels (non-positive eigenvalues) render as gaps.
pub fn squeezing_bars_svg(levels: &[Option<f64>]) -> String {
    let n = levels.len();
    let finite: Vec<f64> = levels.iter().filter_map(|&o| o).collect();
    let max = finite.iter().copied().fold(0.5f64, f64::max);
    let min = finite.iter().copied().fold(-0.5f64, f64::min);
    let span = max - min;

    let bar_w = 22.0;
    let plot_h = 220.0;
    let width = MARGIN + n as f64 * bar_w + 60.0;
    let height = MARGIN + plot_h + 40.0;
    let y_of = |db: f64| MARGIN + (max - db) / span * plot_h;

    let mut svg = svg_header(width, height);
    svg.push_str(&format!(
        "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        fmt(width),
        fmt(height)
    ));
    let zero_y = y_of(0.0);
    for (idx, level) in levels.iter().enumerate() {
        let Some(db) = *level else { continue };
        let x = MARGIN + idx as f64 * bar_w + 2.0;
        let (top, h) = if db >= 0.0 {
            (y_of(db), zero_y - y_of(db))
        } else {
            (zero_y, y_of(db) - zero_y)
        };
        let color = if db < 0.0 { "#2166ac" } else { "#b2182b" };
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>mode {}: {} dB</title></rect>\n",
            fmt(x),
            fmt(top),
            fmt(bar_w - 4.0),
            fmt(h.max(0.5)),
            color,
            idx + 1,
            format_float(db)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            fmt(x + (bar_w - 4.0) / 2.0),
            fmt(MARGIN + plot_h + 16.0),
            idx + 1
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"1\"/>\n",
        fmt(MARGIN - 4.0),
        fmt(zero_y),
        fmt(MARGIN + n as f64 * bar_w + 4.0),
        fmt(zero_y)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">0 dB</text>\n",
        fmt(MARGIN + n as f64 * bar_w + 8.0),
        fmt(zero_y + 4.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">squeezing level per eigenmode (10*log10 v)</text>\n",
        fmt(MARGIN),
        fmt(MARGIN - 12.0)
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Line plot of one eigenmode's spectral profile across bins.
pub fn mode_shape_svg(mode_1based: usize, raw: &[f64], normalized: &[f64]) -> String {
    let n = raw.len();
    let all: Vec<f64> = raw.iter().chain(normalized).copied().collect();
    let max = all.iter().copied().fold(f64::MIN, f64::max).max(1e-12);
    let min = all.iter().copied().fold(f64::MAX, f64::min).min(-1e-12);
    let span = max - min;

    let step = 28.0;
    let plot_h = 200.0;
    let width = MARGIN + (n.max(2) - 1) as f64 * step + 150.0;
    let height = MARGIN + plot_h + 40.0;
    let x_of = |j: usize| MARGIN + j as f64 * step;
    let y_of = |v: f64| MARGIN + (max - v) / span * plot_h;

    let mut svg = svg_header(width, height);
    svg.push_str(&format!(
        "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        fmt(width),
        fmt(height)
    ));
    if min < 0.0 && max > 0.0 {
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#bbbbbb\" stroke-width=\"1\"/>\n",
            fmt(MARGIN - 4.0),
            fmt(y_of(0.0)),
            fmt(x_of(n - 1) + 4.0),
            fmt(y_of(0.0))
        ));
    }
    for (series, color) in [(raw, "#b2182b"), (normalized, "#2166ac")] {
        let points: Vec<String> = series
            .iter()
            .enumerate()
            .map(|(j, &v)| format!("{},{}", fmt(x_of(j)), fmt(y_of(v))))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            points.join(" "),
            color
        ));
    }
    for j in 0..n {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            fmt(x_of(j)),
            fmt(MARGIN + plot_h + 16.0),
            j + 1
        ));
    }
    let legend_x = x_of(n - 1) + 16.0;
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" fill=\"#b2182b\">raw</text>\n",
        fmt(legend_x),
        fmt(MARGIN + 12.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" fill=\"#2166ac\">normalized</text>\n",
        fmt(legend_x),
        fmt(MARGIN + 26.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">spectral amplitude of eigenmode {}</text>\n",
        fmt(MARGIN),
        fmt(MARGIN - 12.0),
        mode_1based
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Write the full plot set for a report: covariance heatmap, squeezing bar
/// chart, and shape plots for modes 1, 2, and N, each next to its data CSV.
pub fn emit_plots(report: &AnalysisReport, outdir: &Path) -> Result<()> {
    std::fs::create_dir_all(outdir).map_err(|source| crate::error::Error::Io {
        action: "create directory",
        path: outdir.to_path_buf(),
        source,
    })?;
    let rounded = report.rounded();
    let n = rounded.n_bins;

    let c = rows_to_matrix(&rounded.covariance);
    write_string(&outdir.join("heatmap.svg"), &heatmap_svg(&c))?;
    write_string(&outdir.join("heatmap.csv"), &crate::formats::emit_matrix_csv(&c))?;

    write_string(
        &outdir.join("squeezing.svg"),
        &squeezing_bars_svg(&rounded.modal.squeezing_db),
    )?;
    let mut squeezing_csv = String::from("mode,eigenvalue,squeezing_db\n");
    for (idx, v) in rounded.modal.eigenvalues.iter().enumerate() {
        let db = match rounded.modal.squeezing_db[idx] {
            Some(db) => format_float(db),
            None => String::new(),
        };
        squeezing_csv.push_str(&format!("{},{},{}\n", idx + 1, format_float(*v), db));
    }
    write_string(&outdir.join("squeezing.csv"), &squeezing_csv)?;

    // shape source: amplitude-weighted when available, else coefficients
    let (raw, normalized) = match (&rounded.modal.mode_shapes_raw, &rounded.modal.mode_shapes_normalized) {
        (Some(r), Some(nm)) => (rows_to_matrix(r), rows_to_matrix(nm)),
        _ => {
            let u = rows_to_matrix(&rounded.modal.eigenvectors);
            (u.clone(), u)
        }
    };
    let mut modes = vec![1, 2, n];
    modes.dedup();
    for mode in modes {
        if mode == 0 || mode > n {
            continue;
        }
        let row_raw: Vec<f64> = (0..n).map(|j| raw[(mode - 1, j)]).collect();
        let row_norm: Vec<f64> = (0..n).map(|j| normalized[(mode - 1, j)]).collect();
        write_string(
            &outdir.join(format!("mode_shape_m{mode}.svg")),
            &mode_shape_svg(mode, &row_raw, &row_norm),
        )?;
        let mut csv = String::from("bin,raw,normalized\n");
        for j in 0..n {
            csv.push_str(&format!(
                "{},{},{}\n",
                j + 1,
                format_float(row_raw[j]),
                format_float(row_norm[j])
            ));
        }
        write_string(&outdir.join(format!("mode_shape_m{mode}.csv")), &csv)?;
    }
    Ok(())
}
