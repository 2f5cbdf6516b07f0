//! Minimal static SVG line charts, no external renderer.
//!
//! Axes default to log-log; any nonpositive value forces a linear fallback
//! (with a warning on stderr) since it cannot be placed on a log axis.

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Render a chart. Errors if there are fewer than 2 rows to draw.
pub fn render_chart(series: &[Series], title: &str) -> Result<String, String> {
    let points: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if series.is_empty() || series.iter().any(|s| s.points.len() < 2) {
        return Err("plots need at least 2 rows per series".into());
    }
    let log_axes = points.iter().all(|&(x, y)| x > 0.0 && y > 0.0);
    if !log_axes {
        eprintln!("warning: nonpositive values; falling back to linear axes");
    }
    let tx = |x: f64| if log_axes { x.log10() } else { x };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &points {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(tx(y));
        y1 = y1.max(tx(y));
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| MARGIN_L + (tx(x) - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (tx(y) - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"14\" font-family=\"monospace\" font-size=\"13\">{}</text>\n",
        MARGIN_L,
        xml_escape(title)
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    // ticks: decades on log axes, 5 even steps otherwise
    let ticks = |a: f64, b: f64| -> Vec<f64> {
        if log_axes {
            let lo = a.floor() as i64;
            let hi = b.ceil() as i64;
            (lo..=hi).map(|k| k as f64).filter(|k| *k >= a - 1e-9 && *k <= b + 1e-9).collect()
        } else {
            (0..=4).map(|k| a + (b - a) * k as f64 / 4.0).collect()
        }
    };
    for t in ticks(x0, x1) {
        let x = MARGIN_L + (t - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
        let label = if log_axes { format!("1e{t:.0}") } else { format!("{t:.3}") };
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"middle\">{label}</text>\n",
            HEIGHT - MARGIN_B + 18.0
        ));
    }
    for t in ticks(y0, y1) {
        let y = HEIGHT - MARGIN_B - (t - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);
        let label = if log_axes { format!("1e{t:.0}") } else { format!("{t:.3}") };
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{MARGIN_L}\" y2=\"{y:.1}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" \
             text-anchor=\"end\">{label}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0
        ));
    }
    // series
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
    }
    // legend
    if series.len() > 1 {
        for (k, s) in series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let y = MARGIN_T + 14.0 * (k as f64 + 1.0);
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
                 stroke=\"{color}\" stroke-width=\"2\"/>\n",
                WIDTH - MARGIN_R - 140.0,
                WIDTH - MARGIN_R - 120.0
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
                WIDTH - MARGIN_R - 115.0,
                y + 4.0,
                xml_escape(&s.label)
            ));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
