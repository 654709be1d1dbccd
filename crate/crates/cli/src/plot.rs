//! Plot data: columnar CSV plus a bare SVG line chart.

use std::fmt::Write;

use tfstar::{RadialProfile, Species};

use crate::output::num;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Markers instead of a polyline.
    pub scatter: bool,
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    (x0, x1, y0, y1)
}

pub fn svg_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{x_label} [{x0:.6e}, {x1:.6e}]</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">{y_label} [{y0:.6e}, {y1:.6e}]</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = ser.points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        if ser.scatter {
            for (x, y) in &pts {
                let _ = writeln!(s, r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{}"/>"#, px(*x), py(*y), ser.color);
            }
        } else if !pts.is_empty() {
            let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" stroke="{}" stroke-width="1.5" fill="none"/>"#,
                coords.join(" "),
                ser.color
            );
        }
        let ly = 40.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-size="12" fill="{}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            ser.color,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Rows `r, rho_e, rho_p, ratio` with `ratio = ρ_p/ρ_e` (`nan` where `ρ_e = 0`).
pub fn density_rows(profile: &RadialProfile) -> Vec<Vec<String>> {
    profile
        .samples
        .iter()
        .map(|s| {
            let (e, p) = (s.rho(Species::Electron), s.rho(Species::Proton));
            let ratio = if e > 0.0 { p / e } else { f64::NAN };
            vec![num(s.r), num(e), num(p), num(ratio)]
        })
        .collect()
}

pub const DENSITY_HEADER: [&str; 4] = ["r", "rho_e", "rho_p", "ratio"];

pub fn density_chart(title: &str, profile: &RadialProfile) -> String {
    let pick = |sp: Species| profile.samples.iter().map(|s| (s.r, s.rho(sp))).collect();
    svg_chart(
        title,
        "r",
        "density",
        &[
            Series { label: "rho_e", color: "#1f77b4", points: pick(Species::Electron), scatter: false },
            Series { label: "rho_p", color: "#d62728", points: pick(Species::Proton), scatter: false },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use tfstar::ProfileSample;

    fn sample_profile() -> RadialProfile {
        RadialProfile::new(
            (0..=10)
                .map(|i| {
                    let r = i as f64 * 0.1;
                    let u = 1.0 - r * r;
                    ProfileSample { r, u_e: u, u_p: 1.2 * u, du_e: -2.0 * r, du_p: -2.4 * r }
                })
                .collect(),
        )
    }

    #[test]
    fn chart_is_deterministic() {
        let p = sample_profile();
        assert_eq!(density_chart("t", &p), density_chart("t", &p));
        assert!(density_chart("t", &p).contains("<polyline"));
    }

    #[test]
    fn proportional_profile_has_constant_ratio_column() {
        let rows = density_rows(&sample_profile());
        let expect = 1.2f64.powf(1.5);
        for row in &rows[..rows.len() - 1] {
            let ratio: f64 = row[3].parse().unwrap();
            assert!((ratio - expect).abs() < 1e-12);
        }
        assert_eq!(rows.last().unwrap()[3], "NaN");
    }

    #[test]
    fn empty_series_still_render() {
        let svg = svg_chart("x", "a", "b", &[Series { label: "none", color: "black", points: vec![], scatter: true }]);
        assert!(svg.ends_with("</svg>\n"));
    }
}
