use std::fmt::Write;

/// Series drawn per row.
pub const PANEL_COLUMNS: usize = 5;
const CELL_W: f64 = 180.0;
const CELL_H: f64 = 110.0;
const GAP: f64 = 8.0;
const LABEL_W: f64 = 90.0;
const TITLE_H: f64 = 28.0;

pub struct PanelRow<'a> {
    pub label: &'a str,
    /// Up to five series; `None` marks a model with no samples.
    pub series: Option<Vec<&'a [f32]>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// A grid of line plots, one row per entry in `rows`, sharing a vertical
/// scale so rows can be compared directly.
pub fn render_panel(title: &str, rows: &[PanelRow<'_>]) -> String {
    let all = rows.iter().filter_map(|r| r.series.as_ref()).flatten().flat_map(|s| s.iter());
    let (lo, hi) = all.fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo as f64, hi as f64) } else { (-1.0, 1.0) };

    let width = LABEL_W + PANEL_COLUMNS as f64 * (CELL_W + GAP) + GAP;
    let height = TITLE_H + rows.len() as f64 * (CELL_H + GAP) + GAP;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="19" font-size="15">{}</text>"#, GAP, escape(title));
    for (r, row) in rows.iter().enumerate() {
        let y0 = TITLE_H + r as f64 * (CELL_H + GAP);
        let _ = writeln!(svg, r#"<g class="row" data-row="{r}">"#);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, GAP, y0 + CELL_H / 2.0, escape(row.label));
        for c in 0..PANEL_COLUMNS {
            let x0 = LABEL_W + c as f64 * (CELL_W + GAP);
            let _ = writeln!(
                svg,
                r##"<rect x="{x0:.1}" y="{y0:.1}" width="{CELL_W:.1}" height="{CELL_H:.1}" fill="none" stroke="#999"/>"##
            );
            let Some(s) = row.series.as_ref().and_then(|s| s.get(c)) else {
                if c == 0 && row.series.is_none() {
                    let _ = writeln!(svg, r##"<text x="{:.1}" y="{:.1}" fill="#777">no samples</text>"##, x0 + 8.0, y0 + CELL_H / 2.0);
                }
                continue;
            };
            let n = s.len().max(2) - 1;
            let points: Vec<String> = s
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let x = x0 + 4.0 + (CELL_W - 8.0) * i as f64 / n as f64;
                    let y = y0 + 4.0 + (CELL_H - 8.0) * (hi - v as f64) / (hi - lo);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                svg,
                r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1.2" points="{}"/>"##,
                points.join(" ")
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}
