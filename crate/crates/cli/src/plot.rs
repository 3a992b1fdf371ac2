//! Minimal static SVG line plots for sweep results.
//!
//! Two panels side by side (distance and bearing MSE), log-scaled y axis,
//! one polyline per method plus a dashed CRLB line.

use std::fmt::Write;

use pattern_locate::{SweepAxis, SweepResult};

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Series {
    label: String,
    colour: &'static str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

struct Panel<'a> {
    title: &'a str,
    y_label: &'a str,
    series: Vec<Series>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Decade bounds covering every positive, finite y value.
fn log_bounds(panel: &Panel) -> (f64, f64) {
    let ys = panel
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|y| y.is_finite() && *y > 0.0);
    let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let (lo, hi) = (lo.log10().floor(), hi.log10().ceil());
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn draw_panel(svg: &mut String, panel: &Panel, x_label: &str, x_range: (f64, f64), left: f64) {
    let (x0, x1) = x_range;
    let x_span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let (y0, y1) = log_bounds(panel);
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| left + MARGIN_L + (x - x0) / x_span * plot_w;
    let py = |y: f64| MARGIN_T + (y1 - y.log10()) / (y1 - y0) * plot_h;

    let _ = writeln!(
        svg,
        r#"<rect x="{:.1}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#,
        left + MARGIN_L
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        left + MARGIN_L + plot_w / 2.0,
        escape(panel.title)
    );
    // decade grid lines and labels
    for e in (y0 as i32)..=(y1 as i32) {
        let y = py(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##,
            left + MARGIN_L,
            left + MARGIN_L + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">1e{e}</text>"#,
            left + MARGIN_L - 6.0,
            y + 4.0
        );
    }
    let ticks: Vec<f64> = panel.series.first().map(|s| s.points.iter().map(|p| p.0).collect()).unwrap_or_default();
    for x in ticks {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{x}</text>"#,
            px(x),
            MARGIN_T + plot_h + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
        left + MARGIN_L + plot_w / 2.0,
        PANEL_H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle" font-size="12">{}</text>"#,
        left + 16.0,
        MARGIN_T + plot_h / 2.0,
        escape(panel.y_label)
    );

    for (i, s) in panel.series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite() && p.1 > 0.0)
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.8"{dash}/>"#,
            pts.join(" "),
            s.colour
        );
        let ly = MARGIN_T + 14.0 + 16.0 * i as f64;
        let lx = left + MARGIN_L + plot_w - 110.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="1.8"{dash}/>"#,
            lx + 22.0,
            s.colour
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
}

fn panel_series(result: &SweepResult, theta: bool) -> Vec<Series> {
    let mut series: Vec<Series> = result
        .methods
        .iter()
        .enumerate()
        .map(|(i, &m)| Series {
            label: m.to_string(),
            colour: COLOURS[i % COLOURS.len()],
            dashed: false,
            points: result
                .series(m)
                .iter()
                .map(|r| (r.axis_value, if theta { r.mse_theta } else { r.mse_d }))
                .collect(),
        })
        .collect();
    // the bound does not depend on the method; take it from the first series
    if let Some(&first) = result.methods.first() {
        series.push(Series {
            label: "CRLB".into(),
            colour: "black",
            dashed: true,
            points: result
                .series(first)
                .iter()
                .map(|r| (r.axis_value, if theta { r.crlb_theta_deg2 } else { r.crlb_d }))
                .collect(),
        });
    }
    series
}

/// Renders the sweep as a two-panel SVG document.
pub fn sweep_svg(result: &SweepResult) -> String {
    let x_label = match result.axis {
        SweepAxis::Snr => "SNR (dB)",
        SweepAxis::RotationCount => "rotation count N",
        SweepAxis::DeltaPhi => "rotation step (deg)",
    };
    let xs: Vec<f64> = result.axis_info.iter().map(|a| a.axis_value).collect();
    let x_range = (
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let panels = [
        Panel {
            title: "distance MSE",
            y_label: "MSE (m²)",
            series: panel_series(result, false),
        },
        Panel {
            title: "bearing MSE",
            y_label: "MSE (deg²)",
            series: panel_series(result, true),
        },
    ];
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{PANEL_H}" font-family="sans-serif">"#,
        2.0 * PANEL_W
    );
    svg.push('\n');
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        draw_panel(&mut svg, panel, x_label, x_range, i as f64 * PANEL_W);
    }
    svg.push_str("</svg>\n");
    svg
}
