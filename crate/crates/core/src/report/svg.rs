//! Static SVG charts: a tile-grid choropleth, per-state bars with interval
//! whiskers, and the daily trend line.

use std::fmt::Write as _;

use crate::aggregate::{DailyPoint, DateRange, StateSentiment};
use crate::geolocate::StateCode;

/// Five equal-width bins over [0, 10], low to high.
pub const BIN_COLORS: [&str; 5] = ["#d7191c", "#fdae61", "#ffffbf", "#a6d96a", "#1a9641"];
pub const NO_DATA_COLOR: &str = "#cccccc";

/// Tile-grid positions `(row, col)` approximating U.S. geography.
const TILES: [(&str, u8, u8); 51] = [
    ("AK", 0, 0),
    ("ME", 0, 10),
    ("VT", 1, 9),
    ("NH", 1, 10),
    ("WA", 2, 0),
    ("ID", 2, 1),
    ("MT", 2, 2),
    ("ND", 2, 3),
    ("MN", 2, 4),
    ("IL", 2, 5),
    ("WI", 2, 6),
    ("MI", 2, 7),
    ("NY", 2, 8),
    ("RI", 2, 9),
    ("MA", 2, 10),
    ("OR", 3, 0),
    ("NV", 3, 1),
    ("WY", 3, 2),
    ("SD", 3, 3),
    ("IA", 3, 4),
    ("IN", 3, 5),
    ("OH", 3, 6),
    ("PA", 3, 7),
    ("NJ", 3, 8),
    ("CT", 3, 9),
    ("CA", 4, 0),
    ("UT", 4, 1),
    ("CO", 4, 2),
    ("NE", 4, 3),
    ("MO", 4, 4),
    ("KY", 4, 5),
    ("WV", 4, 6),
    ("VA", 4, 7),
    ("MD", 4, 8),
    ("DE", 4, 9),
    ("AZ", 5, 1),
    ("NM", 5, 2),
    ("KS", 5, 3),
    ("AR", 5, 4),
    ("TN", 5, 5),
    ("NC", 5, 6),
    ("SC", 5, 7),
    ("DC", 5, 8),
    ("OK", 6, 3),
    ("LA", 6, 4),
    ("MS", 6, 5),
    ("AL", 6, 6),
    ("GA", 6, 7),
    ("HI", 7, 0),
    ("TX", 7, 3),
    ("FL", 7, 8),
];

pub fn bin_index(score: f64) -> usize {
    ((score / 2.0).floor().max(0.0) as usize).min(4)
}

/// Text shown for a score in every chart.
pub fn score_label(score: f64) -> String {
    format!("{score:.2}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(out: &mut String, w: u32, h: u32, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

pub fn map_svg(scores: &[StateSentiment]) -> String {
    const TILE: u32 = 56;
    const PAD: u32 = 20;
    let mut out = String::new();
    let width = PAD * 2 + TILE * 11;
    let height = PAD * 2 + 40 + TILE * 8 + 60;
    open(&mut out, width, height, "Average sentiment score by state");
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-size="18">Average sentiment score by state (0-10)</text>"#,
        PAD + 16
    );
    for (code, row, col) in TILES {
        let state = StateCode::from_code(code).expect("tile code");
        let x = PAD + u32::from(col) * TILE;
        let y = PAD + 40 + u32::from(row) * TILE;
        let score = scores.iter().find(|s| s.state == state).map(|s| s.score);
        let fill = score.map_or(NO_DATA_COLOR, |s| BIN_COLORS[bin_index(s)]);
        let label = score.map_or("no data".to_string(), score_label);
        let _ = writeln!(out, r#"<g data-state="{code}">"#);
        let _ = writeln!(
            out,
            r##"<rect x="{x}" y="{y}" width="{}" height="{}" fill="{fill}" stroke="#ffffff" stroke-width="2"/>"##,
            TILE - 2,
            TILE - 2
        );
        let cx = x + TILE / 2 - 1;
        let _ = writeln!(
            out,
            r#"<text x="{cx}" y="{}" font-size="14" text-anchor="middle" font-weight="bold">{code}</text>"#,
            y + 24
        );
        let _ = writeln!(
            out,
            r#"<text class="score" x="{cx}" y="{}" font-size="11" text-anchor="middle">{label}</text>"#,
            y + 42
        );
        let _ = writeln!(out, "</g>");
    }
    let ly = PAD + 40 + TILE * 8 + 20;
    for (i, color) in BIN_COLORS.iter().enumerate() {
        let x = PAD + i as u32 * 90;
        let _ = writeln!(
            out,
            r##"<rect x="{x}" y="{ly}" width="20" height="14" fill="{color}" stroke="#666666"/>"##
        );
        let hi = if i == 4 {
            "10]".to_string()
        } else {
            format!("{})", 2 * (i + 1))
        };
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12">[{}, {hi}</text>"#,
            x + 26,
            ly + 12,
            2 * i
        );
    }
    let x = PAD + 5 * 90;
    let _ = writeln!(
        out,
        r##"<rect x="{x}" y="{ly}" width="20" height="14" fill="{NO_DATA_COLOR}" stroke="#666666"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12">no data</text>"#,
        x + 26,
        ly + 12
    );
    out.push_str("</svg>\n");
    out
}

/// States sorted by score, best first, with interval whiskers.
pub fn bars_svg(scores: &[StateSentiment], national: Option<f64>) -> String {
    const ROW: u32 = 16;
    const LEFT: u32 = 60;
    const PLOT_W: f64 = 500.0;
    let mut rows: Vec<&StateSentiment> = scores.iter().collect();
    rows.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.state.cmp(&b.state)));
    let top = 50;
    let height = top + ROW * rows.len().max(1) as u32 + 50;
    let width = LEFT + PLOT_W as u32 + 80;
    let sx = |v: f64| f64::from(LEFT) + v / 10.0 * PLOT_W;
    let mut out = String::new();
    open(
        &mut out,
        width,
        height,
        "Average sentiment score with 95% intervals",
    );
    let _ = writeln!(
        out,
        r#"<text x="10" y="24" font-size="16">Average sentiment score by state (95% confidence intervals)</text>"#
    );
    for (i, s) in rows.iter().enumerate() {
        let y = top + i as u32 * ROW;
        let mid = f64::from(y) + f64::from(ROW) / 2.0;
        let _ = writeln!(out, r#"<g data-state="{}">"#, s.state);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
            LEFT - 6,
            y + 12,
            s.state
        );
        let _ = writeln!(
            out,
            r##"<rect x="{LEFT}" y="{}" width="{:.2}" height="{}" fill="#4a90c2"/>"##,
            y + 2,
            sx(s.score) - f64::from(LEFT),
            ROW - 4
        );
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{mid}" x2="{:.2}" y2="{mid}" stroke="#222222"/>"##,
            sx(s.ci_low),
            sx(s.ci_high)
        );
        for v in [s.ci_low, s.ci_high] {
            let _ = writeln!(
                out,
                r##"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="#222222"/>"##,
                sx(v),
                mid - 4.0,
                mid + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text class="score" x="{:.2}" y="{}" font-size="10">{}</text>"#,
            sx(10.0) + 6.0,
            y + 12,
            score_label(s.score)
        );
        let _ = writeln!(out, "</g>");
    }
    let axis_y = top + ROW * rows.len() as u32 + 6;
    for t in 0..=5 {
        let v = f64::from(t * 2);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" font-size="10" text-anchor="middle">{}</text>"#,
            sx(v),
            axis_y + 14,
            t * 2
        );
    }
    if let Some(avg) = national {
        let _ = writeln!(
            out,
            r##"<line x1="{0:.2}" y1="{top}" x2="{0:.2}" y2="{axis_y}" stroke="#d7191c" stroke-dasharray="4 3"/>"##,
            sx(avg)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" font-size="11">national average {}</text>"#,
            sx(avg) + 4.0,
            top - 6,
            score_label(avg)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Daily mean score over time; an excluded window is shaded.
pub fn trend_svg(points: &[DailyPoint], excluded: Option<&DateRange>) -> String {
    const LEFT: f64 = 50.0;
    const TOP: f64 = 40.0;
    const W: f64 = 700.0;
    const H: f64 = 260.0;
    let mut out = String::new();
    open(
        &mut out,
        (LEFT + W + 30.0) as u32,
        (TOP + H + 50.0) as u32,
        "Daily sentiment trend",
    );
    let _ = writeln!(
        out,
        r#"<text x="10" y="24" font-size="16">Daily average sentiment score</text>"#
    );
    let sy = |v: f64| TOP + H - v / 10.0 * H;
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{W}" height="{H}" fill="none" stroke="#999999"/>"##
    );
    for t in 0..=5 {
        let v = f64::from(t * 2);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(v) + 3.0,
            t * 2
        );
    }
    if let (Some(first), Some(last)) = (points.first(), points.last()) {
        let span = (last.date - first.date).num_days().max(1) as f64;
        let sx = |d: chrono::NaiveDate| LEFT + (d - first.date).num_days() as f64 / span * W;
        if let Some(r) = excluded {
            let x0 = sx(r.start).clamp(LEFT, LEFT + W);
            let x1 = (sx(r.end) + W / span).clamp(LEFT, LEFT + W);
            if x1 > x0 {
                let _ = writeln!(
                    out,
                    r##"<rect class="excluded" x="{x0:.2}" y="{TOP}" width="{:.2}" height="{H}" fill="#f4cccc" opacity="0.6"/>"##,
                    x1 - x0
                );
            }
        }
        let pts: Vec<String> = points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.date), sy(p.mean_score)))
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1f5f99" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{LEFT}" y="{}" font-size="11">{}</text>"#,
            TOP + H + 18.0,
            first.date
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
            LEFT + W,
            TOP + H + 18.0,
            last.date
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins() {
        assert_eq!(bin_index(0.0), 0);
        assert_eq!(bin_index(1.999), 0);
        assert_eq!(bin_index(2.0), 1);
        assert_eq!(bin_index(7.9), 3);
        assert_eq!(bin_index(10.0), 4);
    }

    #[test]
    fn tiles_cover_every_state_once() {
        let mut codes: Vec<&str> = TILES.iter().map(|t| t.0).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), 51);
        assert!(codes.iter().all(|c| StateCode::from_code(c).is_some()));
        let mut cells: Vec<(u8, u8)> = TILES.iter().map(|t| (t.1, t.2)).collect();
        cells.sort_unstable();
        cells.dedup();
        assert_eq!(cells.len(), 51);
    }
}
