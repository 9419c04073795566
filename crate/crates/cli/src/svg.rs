//! Minimal line-chart renderer emitting standalone SVG.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 10;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log10,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

struct Axis {
    lo: f64,
    hi: f64,
    scale: Scale,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, scale: Scale) -> Self {
        let t = |v: f64| match scale {
            Scale::Linear => v,
            Scale::Log10 => v.log10(),
        };
        let (mut lo, mut hi) = values
            .map(t)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if !lo.is_finite() || !hi.is_finite() {
            (lo, hi) = (0.0, 1.0);
        } else if lo == hi {
            (lo, hi) = (lo - 1.0, hi + 1.0);
        }
        Self { lo, hi, scale }
    }

    fn transform(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => v,
            Scale::Log10 => v.log10(),
        }
    }

    /// Position of `v` in `[0, 1]` along the axis.
    fn unit(&self, v: f64) -> f64 {
        (self.transform(v) - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..TICKS)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / (TICKS - 1) as f64;
                match self.scale {
                    Scale::Linear => t,
                    Scale::Log10 => 10f64.powf(t),
                }
            })
            .collect()
    }
}

fn label(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl Chart {
    fn plottable(&self, p: &(f64, f64)) -> bool {
        p.0.is_finite() && p.1.is_finite() && (self.y_scale == Scale::Linear || p.1 > 0.0)
    }

    pub fn render(&self) -> String {
        let points = || {
            self.series
                .iter()
                .flat_map(|s| s.points.iter())
                .filter(|p| self.plottable(p))
        };
        let x_axis = Axis::fit(points().map(|p| p.0), Scale::Linear);
        let y_axis = Axis::fit(points().map(|p| p.1), self.y_scale);
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + x_axis.unit(x) * plot_w;
        let py = |y: f64| TOP + (1.0 - y_axis.unit(y)) * plot_h;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            svg,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        let _ = writeln!(svg, r#"<g class="axes" stroke="black" fill="none">"#);
        let _ = writeln!(
            svg,
            r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}"/>"#
        );
        for t in x_axis.ticks() {
            let x = px(t);
            let _ = writeln!(
                svg,
                r#"<line class="tick x" x1="{x:.2}" y1="{0}" x2="{x:.2}" y2="{1}"/>"#,
                TOP + plot_h,
                TOP + plot_h + 5.0
            );
        }
        for t in y_axis.ticks() {
            let y = py(t);
            let _ = writeln!(
                svg,
                r#"<line class="tick y" x1="{0}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}"/>"#,
                LEFT - 5.0
            );
        }
        svg.push_str("</g>\n");

        svg.push_str("<g class=\"tick-labels\">\n");
        for t in x_axis.ticks() {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
                px(t),
                TOP + plot_h + 20.0,
                label(t)
            );
        }
        for t in y_axis.ticks() {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
                LEFT - 8.0,
                py(t),
                label(t)
            );
        }
        svg.push_str("</g>\n");

        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter(|p| self.plottable(p))
                .map(|&(x, y)| (px(x), py(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<g class="series" data-label="{}">"#,
                escape(&series.label)
            );
            if pts.len() > 1 {
                let coords: Vec<String> =
                    pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                );
            }
            for (x, y) in &pts {
                let _ = writeln!(
                    svg,
                    r#"<circle class="marker" cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#
                );
            }
            svg.push_str("</g>\n");
        }

        svg.push_str("<g class=\"legend\">\n");
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let x = WIDTH - RIGHT - 170.0;
            let y = TOP + 18.0 + 18.0 * i as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
                x + 24.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{y}" dominant-baseline="middle">{}</text>"#,
                x + 30.0,
                escape(&series.label)
            );
        }
        svg.push_str("</g>\n</svg>\n");
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_compact() {
        assert_eq!(label(0.0), "0");
        assert_eq!(label(12.5), "12.5");
        assert_eq!(label(99.0), "99");
        assert_eq!(label(0.0001234), "1.23e-4");
    }

    #[test]
    fn log_axis_ticks_span_data() {
        let axis = Axis::fit([0.1, 1000.0].into_iter(), Scale::Log10);
        let ticks = axis.ticks();
        assert_eq!(ticks.len(), TICKS);
        assert!((ticks[0] - 0.1).abs() < 1e-12);
        assert!((ticks[TICKS - 1] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_ranges_are_padded() {
        let axis = Axis::fit([5.0].into_iter(), Scale::Linear);
        assert_eq!((axis.lo, axis.hi), (4.0, 6.0));
        let empty = Axis::fit(std::iter::empty(), Scale::Log10);
        assert_eq!((empty.lo, empty.hi), (0.0, 1.0));
    }

    #[test]
    fn text_is_escaped() {
        let chart = Chart {
            title: "a < b & c".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            y_scale: Scale::Linear,
            series: vec![],
        };
        assert!(chart.render().contains("a &lt; b &amp; c"));
    }
}
