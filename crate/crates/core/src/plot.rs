//! Minimal deterministic SVG rendering for benchmark reports: percentile
//! curves of relative loss vs. coreset size, and ratio histograms comparing
//! sampling distributions. No plotting dependency; every byte of the output
//! is a pure function of the inputs.

use std::fmt::Write;

use crate::weights::Histogram;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 60.0;

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Clip for log-scale display of exact zeros; raw values are unaffected.
const PLOT_FLOOR: f64 = 1e-16;

/// One method's percentile curves over coreset sizes.
#[derive(Debug, Clone)]
pub struct PercentileSeries {
    pub method: String,
    pub sizes: Vec<usize>,
    /// Percentile values; `None` marks a cell dominated by failed trials.
    pub p25: Vec<Option<f64>>,
    pub p50: Vec<Option<f64>>,
    pub p75: Vec<Option<f64>>,
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

fn log_clip(v: f64) -> f64 {
    v.max(PLOT_FLOOR).log10()
}

/// Renders log10(relative loss) against log-scaled coreset size, three
/// percentile lines per method (solid median, dashed quartiles).
pub fn relative_loss_plot(title: &str, series: &[PercentileSeries]) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &m in &s.sizes {
            xs.push((m as f64).log10());
        }
        for p in [&s.p25, &s.p50, &s.p75] {
            for v in p.iter().flatten() {
                if v.is_finite() {
                    ys.push(log_clip(*v));
                }
            }
        }
    }
    let (x_lo, x_hi) = span(&xs, 0.05);
    let (y_lo, y_hi) = span(&ys, 0.05);

    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let px = MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);
        (px, py)
    };

    let mut svg = svg_open(title);

    // y ticks at integer exponents
    let mut e = y_lo.ceil() as i64;
    while (e as f64) <= y_hi {
        let (_, py) = to_px(x_lo, e as f64);
        let _ = write!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>",
            fmt_coord(MARGIN_L),
            fmt_coord(py),
            fmt_coord(WIDTH - MARGIN_R),
            fmt_coord(py)
        );
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">1e{}</text>",
            fmt_coord(MARGIN_L - 6.0),
            fmt_coord(py + 4.0),
            e
        );
        e += 1;
    }
    // x ticks at the sizes of the first series
    if let Some(first) = series.first() {
        for &m in &first.sizes {
            let (px, _) = to_px((m as f64).log10(), y_lo);
            let _ = write!(
                svg,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>",
                fmt_coord(px),
                fmt_coord(MARGIN_T),
                fmt_coord(px),
                fmt_coord(HEIGHT - MARGIN_B)
            );
            let _ = write!(
                svg,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
                fmt_coord(px),
                fmt_coord(HEIGHT - MARGIN_B + 18.0),
                m
            );
        }
    }
    axis_labels(&mut svg, "coreset size m", "log10 relative loss");

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for (vals, dash, width) in [
            (&s.p50, "", 2.0),
            (&s.p25, "4,3", 1.0),
            (&s.p75, "4,3", 1.0),
        ] {
            let pts: Vec<String> = s
                .sizes
                .iter()
                .zip(vals.iter())
                .filter_map(|(&m, v)| v.map(|v| (m, v)))
                .map(|(m, v)| {
                    let (px, py) = to_px((m as f64).log10(), log_clip(v));
                    format!("{},{}", fmt_coord(px), fmt_coord(py))
                })
                .collect();
            if pts.len() >= 2 {
                let dash_attr = if dash.is_empty() {
                    String::new()
                } else {
                    format!(" stroke-dasharray=\"{dash}\"")
                };
                let _ = write!(
                    svg,
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"{dash_attr} points=\"{}\"/>",
                    pts.join(" ")
                );
            }
            // markers on the median
            if dash.is_empty() {
                for (&m, v) in s.sizes.iter().zip(vals.iter()) {
                    if let Some(v) = v {
                        let (px, py) = to_px((m as f64).log10(), log_clip(*v));
                        let _ = write!(
                            svg,
                            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>",
                            fmt_coord(px),
                            fmt_coord(py)
                        );
                    }
                }
            }
        }
        // legend
        let ly = MARGIN_T + 16.0 + 18.0 * k as f64;
        let _ = write!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            fmt_coord(WIDTH - MARGIN_R + 10.0),
            fmt_coord(ly - 4.0),
            fmt_coord(WIDTH - MARGIN_R + 34.0),
            fmt_coord(ly - 4.0)
        );
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"13\">{}</text>",
            fmt_coord(WIDTH - MARGIN_R + 40.0),
            fmt_coord(ly),
            xml_escape(&s.method)
        );
    }

    svg.push_str("</svg>\n");
    svg
}

/// Renders a ratio histogram: log-spaced bins of `max(p_i/q_i, q_i/p_i)`
/// against row counts.
pub fn histogram_plot(title: &str, hist: &Histogram) -> String {
    let bins = hist.counts.len();
    let max_count = hist.counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let log_hi = hist.edges.last().copied().unwrap_or(1.0).ln().max(1e-12);

    let mut svg = svg_open(title);
    axis_labels(&mut svg, "max(p/q, q/p)", "rows");

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    for (k, &c) in hist.counts.iter().enumerate() {
        let x0 = MARGIN_L + hist.edges[k].ln() / log_hi * plot_w;
        let x1 = MARGIN_L + hist.edges[k + 1].ln() / log_hi * plot_w;
        let h = c as f64 / max_count * plot_h;
        let _ = write!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#1f77b4\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>",
            fmt_coord(x0),
            fmt_coord(HEIGHT - MARGIN_B - h),
            fmt_coord((x1 - x0).max(0.5)),
            fmt_coord(h)
        );
    }
    // a few edge labels
    let label_every = (bins / 6).max(1);
    for k in (0..=bins).step_by(label_every) {
        let x = MARGIN_L + hist.edges[k].ln() / log_hi * plot_w;
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{:.3}</text>",
            fmt_coord(x),
            fmt_coord(HEIGHT - MARGIN_B + 18.0),
            hist.edges[k]
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>",
        fmt_coord(MARGIN_L - 6.0),
        fmt_coord(MARGIN_T + 12.0),
        max_count as u64
    );

    svg.push_str("</svg>\n");
    svg
}

fn svg_open(title: &str) -> String {
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"26\" font-size=\"15\" font-weight=\"bold\">{}</text>",
        fmt_coord(MARGIN_L),
        xml_escape(title)
    );
    let _ = write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\"/>",
        fmt_coord(MARGIN_L),
        fmt_coord(MARGIN_T),
        fmt_coord(WIDTH - MARGIN_L - MARGIN_R),
        fmt_coord(HEIGHT - MARGIN_T - MARGIN_B)
    );
    svg
}

fn axis_labels(svg: &mut String, x_label: &str, y_label: &str) {
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        fmt_coord((MARGIN_L + WIDTH - MARGIN_R) / 2.0),
        fmt_coord(HEIGHT - 16.0),
        xml_escape(x_label)
    );
    let _ = write!(
        svg,
        "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>",
        fmt_coord(HEIGHT / 2.0),
        fmt_coord(HEIGHT / 2.0),
        xml_escape(y_label)
    );
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn span(vals: &[f64], pad_frac: f64) -> (f64, f64) {
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let width = (hi - lo).max(1e-9);
    (lo - pad_frac * width, hi + pad_frac * width)
}
