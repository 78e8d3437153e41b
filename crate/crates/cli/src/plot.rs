//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Line {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    pub markers: bool,
}

pub struct Band {
    pub name: String,
    /// `(x, low, high)`
    pub points: Vec<(f64, f64, f64)>,
    pub opacity: f64,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub lines: Vec<Line>,
    pub bands: Vec<Band>,
    /// Draws `y = x` for calibration diagrams.
    pub diagonal: bool,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            lines: vec![],
            bands: vec![],
            diagonal: false,
            x_range: None,
            y_range: None,
        }
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let xs = self
            .lines
            .iter()
            .flat_map(|l| l.points.iter().map(|p| p.0))
            .chain(self.bands.iter().flat_map(|b| b.points.iter().map(|p| p.0)));
        let ys = self
            .lines
            .iter()
            .flat_map(|l| l.points.iter().map(|p| p.1))
            .chain(self.bands.iter().flat_map(|b| b.points.iter().flat_map(|p| [p.1, p.2])));
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) =
                it.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let x = self.x_range.unwrap_or_else(|| span(&mut xs.into_iter()));
        let y = self.y_range.unwrap_or_else(|| {
            let (lo, hi) = span(&mut ys.into_iter());
            (lo.min(0.0), hi + 0.05 * (hi - lo))
        });
        (x, y)
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_TOP + ph - (y - y0) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            escape(&self.title)
        );
        for i in 0..=5 {
            let fx = x0 + (x1 - x0) * i as f64 / 5.0;
            let fy = y0 + (y1 - y0) * i as f64 / 5.0;
            let _ = writeln!(
                s,
                r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#e5e5e5"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"##,
                sx(fx),
                MARGIN_TOP,
                MARGIN_TOP + ph,
                MARGIN_TOP + ph + 18.0,
                tick(fx)
            );
            let _ = writeln!(
                s,
                r##"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="#e5e5e5"/><text x="{3:.2}" y="{4:.2}" text-anchor="end">{5}</text>"##,
                MARGIN_LEFT,
                sy(fy),
                MARGIN_LEFT + pw,
                MARGIN_LEFT - 6.0,
                sy(fy) + 4.0,
                tick(fy)
            );
        }
        let _ =
            writeln!(s, r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + ph / 2.0,
            escape(&self.y_label)
        );
        if self.diagonal {
            let lo = x0.max(y0);
            let hi = x1.min(y1);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#777" stroke-dasharray="4 4"/>"##,
                sx(lo),
                sy(lo),
                sx(hi),
                sy(hi)
            );
        }
        let mut legend = Vec::new();
        for b in &self.bands {
            let color = PALETTE[0];
            let upper = b.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.2)));
            let lower = b.points.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)));
            let pts: Vec<String> = upper.chain(lower).collect();
            let _ =
                writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="{}" stroke="none"/>"#, pts.join(" "), b.opacity);
            legend.push((b.name.clone(), color, b.opacity));
        }
        for (i, l) in self.lines.iter().enumerate() {
            let color = PALETTE[(i + usize::from(!self.bands.is_empty())) % PALETTE.len()];
            let pts: Vec<String> =
                l.points.iter().filter(|p| p.1.is_finite()).map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
            let dash = if l.dashed { r#" stroke-dasharray="6 3""# } else { "" };
            let _ =
                writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"#, pts.join(" "));
            if l.markers {
                for p in l.points.iter().filter(|p| p.1.is_finite()) {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(p.0), sy(p.1));
                }
            }
            legend.push((l.name.clone(), color, 1.0));
        }
        for (k, (name, color, opacity)) in legend.iter().enumerate() {
            let y = MARGIN_TOP + 10.0 + 18.0 * k as f64;
            let x = MARGIN_LEFT + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="14" height="10" fill="{color}" fill-opacity="{opacity}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                y - 9.0,
                x + 20.0,
                y,
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
