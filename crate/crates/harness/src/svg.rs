//! Minimal static SVG line plots and heatmaps.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1b7837", "#222222", "#c0392b", "#2166ac", "#8e44ad", "#d35400"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Optional symmetric error bars, one per point.
    pub errors: Option<Vec<f64>>,
    /// Draw as a step function (CDFs).
    pub step: bool,
}

impl Series {
    pub fn line(label: &str, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.to_string(),
            points,
            dashed: false,
            errors: None,
            step: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plot {
    Lines {
        title: String,
        x_label: String,
        y_label: String,
        series: Vec<Series>,
        /// Vertical markers `(x, label)`.
        markers: Vec<(f64, String)>,
    },
    Heatmap {
        title: String,
        /// Row-major values, `None` for masked cells; row 0 at the bottom.
        values: Vec<Option<f64>>,
        n: usize,
        bound: f64,
    },
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

impl Plot {
    pub fn render(&self) -> String {
        match self {
            Plot::Lines {
                title,
                x_label,
                y_label,
                series,
                markers,
            } => render_lines(title, x_label, y_label, series, markers),
            Plot::Heatmap { title, values, n, bound } => render_heatmap(title, values, *n, *bound),
        }
    }
}

fn header(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        esc(title)
    );
}

fn render_lines(title: &str, x_label: &str, y_label: &str, series: &[Series], markers: &[(f64, String)]) -> String {
    let pts = series.iter().flat_map(|s| {
        let errs = s.errors.clone().unwrap_or_default();
        s.points.iter().enumerate().map(move |(k, &(x, y))| (x, y, errs.get(k).copied().unwrap_or(0.0)))
    });
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y, e) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y - e);
        y1 = y1.max(y + e);
    }
    for (m, _) in markers {
        x0 = x0.min(*m);
        x1 = x1.max(*m);
    }
    let (x0, x1) = nice_range(x0, x1);
    let (y0, y1) = nice_range(y0.min(0.0), y1);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    header(&mut s, title);
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, TOP + ph + 18.0);
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t}</text>"#, LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        esc(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(y_label)
    );
    for (m, label) in markers {
        let x = sx(*m);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#888888" stroke-dasharray="2,3"/>"##,
            TOP + ph
        );
        let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" fill="#555555">{}</text>"##, x + 3.0, TOP + 12.0, esc(label));
    }
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut path = Vec::new();
        let finite: Vec<(f64, f64)> = ser.points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        for (j, &(x, y)) in finite.iter().enumerate() {
            if ser.step && j > 0 {
                path.push(format!("{:.2},{:.2}", sx(x), sy(finite[j - 1].1)));
            }
            path.push(format!("{:.2},{:.2}", sx(x), sy(y)));
        }
        let dash = if ser.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"#,
            path.join(" ")
        );
        if let Some(errs) = &ser.errors {
            for (&(x, y), e) in ser.points.iter().zip(errs) {
                if x.is_finite() && y.is_finite() && e.is_finite() {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/>"#,
                        sx(x),
                        sy(y - e),
                        sy(y + e)
                    );
                }
            }
        }
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 22.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 28.0, ly + 4.0, esc(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn color_for(v: f64, scale: f64) -> String {
    // diverging blue-white-red
    let t = (v / scale).clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

fn render_heatmap(title: &str, values: &[Option<f64>], n: usize, bound: f64) -> String {
    let side = (HEIGHT - TOP - BOTTOM).min(WIDTH - LEFT - RIGHT);
    let cell = side / n.max(1) as f64;
    let scale = values
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { m })
        .max(1e-300);
    let mut s = String::new();
    header(&mut s, title);
    for i2 in 0..n {
        for i1 in 0..n {
            let fill = match values[i2 * n + i1] {
                Some(v) if v.is_finite() => color_for(v, scale),
                _ => "#bbbbbb".to_string(),
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
                LEFT + i1 as f64 * cell,
                TOP + side - (i2 + 1) as f64 * cell,
                cell + 0.05,
                cell + 0.05
            );
        }
    }
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{side}" height="{side}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">w1 in [-{bound:.3}, {bound:.3}]</text>"#,
        LEFT + side / 2.0,
        TOP + side + 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}">max |value| {scale:.4}</text>"#,
        LEFT + side + 12.0,
        TOP + 14.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_are_deterministic_and_escaped() {
        let p = Plot::Lines {
            title: "a < b & c".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series::line("s", vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)])],
            markers: vec![(0.5, "m".into())],
        };
        let a = p.render();
        assert_eq!(a, p.render());
        assert!(a.contains("a &lt; b &amp; c"));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
    }

    #[test]
    fn heatmap_masks_cells() {
        let p = Plot::Heatmap {
            title: "h".into(),
            values: vec![Some(1.0), None, Some(-1.0), Some(0.0)],
            n: 2,
            bound: 1.0,
        };
        let s = p.render();
        assert!(s.contains("#bbbbbb"));
        assert!(s.contains("#ff0000"));
        assert!(s.contains("#0000ff"));
    }

    #[test]
    fn ticks_cover_range() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.first(), Some(&0.0));
        assert!(t.len() >= 5);
        assert!(ticks(-3.0, 7.0).contains(&0.0));
    }
}
