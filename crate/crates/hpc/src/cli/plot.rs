use std::path::Path;

use crate::error::HpcError;

const W: f64 = 640.0;
const H: f64 = 320.0;
const MARGIN: f64 = 42.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Writes a standalone SVG line plot: one polyline per named series, shared
/// x axis over the sample index, y axis over `[y_min, y_max]`.
pub fn write_line_plot(
    path: &Path,
    title: &str,
    series: &[(String, Vec<f64>)],
    y_min: f64,
    y_max: f64,
) -> Result<(), HpcError> {
    if series.is_empty() || series.iter().all(|(_, v)| v.is_empty()) {
        return Err(HpcError::Argument(
            "plot needs at least one nonempty series".into(),
        ));
    }
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap().max(2);
    let span = (y_max - y_min).max(1e-12);
    let x_of = |i: usize| MARGIN + (W - 2.0 * MARGIN) * i as f64 / (n - 1) as f64;
    let y_of = |v: f64| H - MARGIN - (H - 2.0 * MARGIN) * ((v - y_min) / span).clamp(0.0, 1.0);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n<text x=\"{}\" y=\"20\" \
         font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        xml_escape(title)
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        r = W - MARGIN,
        t = MARGIN,
        b = H - MARGIN
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
        4.0,
        H - MARGIN,
        fmt_tick(y_min),
        4.0,
        MARGIN + 4.0,
        fmt_tick(y_max)
    ));
    for (k, (name, values)) in series.iter().enumerate() {
        if values.is_empty() {
            continue;
        }
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x_of(i), y_of(v)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            W - MARGIN + 4.0,
            MARGIN + 14.0 * k as f64,
            xml_escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)
        .map_err(|e| HpcError::Io(format!("cannot write '{}': {e}", path.display())))
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
