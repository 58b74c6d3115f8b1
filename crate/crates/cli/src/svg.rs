//! Static, self-contained SVG plots.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axes {
    Linear,
    LogLog,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mark {
    Dots,
    Line,
    Steps,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            mark: Mark::Dots,
        }
    }

    pub fn line(mut self) -> Self {
        self.mark = Mark::Line;
        self
    }

    pub fn steps(mut self) -> Self {
        self.mark = Mark::Steps;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub axes: Axes,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, axes: Axes, series: Vec<Series>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            axes,
            series,
        }
    }

    /// Empirical CDFs of the given samples, drawn as steps.
    pub fn ecdf(title: &str, x_label: &str, series: Vec<Series>) -> Self {
        Plot::new(title, x_label, "ECDF", Axes::Linear, series)
    }

    pub fn ecdf_of(title: &str, x_label: &str, samples: &[(&str, &[f64])]) -> Self {
        let series = samples
            .iter()
            .map(|(label, xs)| Series::new(*label, ecdf_points(xs)).steps())
            .collect();
        Plot::ecdf(title, x_label, series)
    }

    /// Histogram of `samples` in `bins` equal bins, as a density.
    pub fn histogram(title: &str, x_label: &str, samples: &[f64], bins: usize) -> Self {
        let finite: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
        let mut points = Vec::new();
        if !finite.is_empty() && bins > 0 {
            let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
            let mut counts = vec![0usize; bins];
            for v in &finite {
                let k = (((v - lo) / width) as usize).min(bins - 1);
                counts[k] += 1;
            }
            let scale = 1.0 / (finite.len() as f64 * width);
            for (k, &c) in counts.iter().enumerate() {
                let x0 = lo + k as f64 * width;
                points.push((x0, c as f64 * scale));
                points.push((x0 + width, c as f64 * scale));
            }
        }
        Plot::new(
            title,
            x_label,
            "density",
            Axes::Linear,
            vec![Series::new("histogram", points).line()],
        )
    }

    pub fn render(&self) -> String {
        let map = |(x, y): (f64, f64)| match self.axes {
            Axes::Linear => (x, y),
            Axes::LogLog => (x.log10(), y.log10()),
        };
        let drawn: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .map(|&p| map(p))
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .collect()
            })
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in drawn.iter().flatten() {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| {
            if hi > lo {
                (lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo))
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        let log = self.axes == Axes::LogLog;
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                px(xv),
                HEIGHT - MARGIN + 16.0,
                tick(xv, log)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                MARGIN - 6.0,
                py(yv) + 4.0,
                tick(yv, log)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (i, (series, pts)) in self.series.iter().zip(&drawn).enumerate() {
            let colour = COLOURS[i % COLOURS.len()];
            match series.mark {
                Mark::Dots => {
                    for &(x, y) in pts {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                            px(x),
                            py(y)
                        );
                    }
                }
                Mark::Line | Mark::Steps => {
                    let mut path = String::new();
                    for (k, &(x, y)) in pts.iter().enumerate() {
                        if k > 0 && series.mark == Mark::Steps {
                            let _ = write!(path, "{:.2},{:.2} ", px(x), py(pts[k - 1].1));
                        }
                        let _ = write!(path, "{:.2},{:.2} ", px(x), py(y));
                    }
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                        path.trim_end()
                    );
                }
            }
            let ly = MARGIN + 14.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{ly:.1}" fill="{colour}">{}</text>"#,
                WIDTH - MARGIN - 150.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// `(x_(k), k/n)` for the sorted samples.
pub fn ecdf_points(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().map(|(k, &x)| (x, (k + 1) as f64 / n)).collect()
}

fn tick(v: f64, log: bool) -> String {
    if log {
        format!("{:.3}", 10f64.powf(v))
    } else {
        format!("{v:.3}")
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Single root element, every tag closed in order, no external references.
    pub(crate) fn well_formed(doc: &str) -> bool {
        let mut stack: Vec<String> = Vec::new();
        let mut roots = 0;
        let mut rest = doc;
        while let Some(start) = rest.find('<') {
            if stack.is_empty() && !rest[..start].trim().is_empty() {
                return false;
            }
            let Some(end) = rest[start..].find('>') else {
                return false;
            };
            let tag = &rest[start + 1..start + end];
            rest = &rest[start + end + 1..];
            if let Some(name) = tag.strip_prefix('/') {
                if stack.pop().as_deref() != Some(name.trim()) {
                    return false;
                }
                continue;
            }
            let name = tag
                .split_whitespace()
                .next()
                .unwrap_or("")
                .trim_end_matches('/')
                .to_string();
            if stack.is_empty() {
                roots += 1;
            }
            if !tag.ends_with('/') {
                stack.push(name);
            }
        }
        stack.is_empty() && roots == 1 && rest.trim().is_empty() && !doc.contains("href")
    }

    #[test]
    fn plots_are_well_formed() {
        let s = vec![
            Series::new("a & <b>", vec![(1.0, 2.0), (2.0, 1.0), (4.0, 0.5)]),
            Series::new("fit", vec![(1.0, 2.0), (4.0, 0.5)]).line(),
        ];
        let log = Plot::new("log \"scan\"", "alpha", "corr", Axes::LogLog, s).render();
        assert!(well_formed(&log), "{log}");
        assert!(log.contains("a &amp; &lt;b&gt;"));
        let h = Plot::histogram("h", "x", &[0.0, 1.0, 1.0, 2.0, f64::NAN], 4).render();
        assert!(well_formed(&h));
        let e = Plot::ecdf_of("e", "x", &[("one", &[3.0, 1.0, 2.0])]).render();
        assert!(well_formed(&e));
        let empty = Plot::ecdf("e", "x", vec![]).render();
        assert!(well_formed(&empty));
    }

    #[test]
    fn checker_rejects_broken_documents() {
        assert!(!well_formed("<svg><g></svg>"));
        assert!(!well_formed("<svg/><svg/>"));
        assert!(!well_formed("<svg><image href=\"x.png\"/></svg>"));
        assert!(well_formed("<svg><g/></svg>"));
    }

    #[test]
    fn ecdf_steps_reach_one() {
        let p = ecdf_points(&[3.0, 1.0, 2.0, f64::INFINITY]);
        assert_eq!(p, vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]);
    }

    #[test]
    fn histogram_integrates_to_one() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sqrt()).collect();
        let p = Plot::histogram("h", "x", &xs, 10);
        let pts = &p.series[0].points;
        let area: f64 = pts.chunks(2).map(|w| (w[1].0 - w[0].0) * w[0].1).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }
}
