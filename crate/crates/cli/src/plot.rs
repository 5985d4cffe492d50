//! Static SVG charts drawn from the CSV tables.

use std::fmt::Write;

use crate::table::Table;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    /// Tick labels for a categorical x axis; points then use the index as x.
    pub categories: Option<Vec<String>>,
    pub series: Vec<Series>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn usable(scale: Scale, v: f64) -> bool {
    v.is_finite() && (scale == Scale::Linear || v > 0.0)
}

struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(scale: Scale, values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| usable(scale, *v)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = if scale == Scale::Log { (0.1, 1.0) } else { (0.0, 1.0) };
        }
        match scale {
            Scale::Log => {
                lo = 10f64.powf(lo.log10().floor());
                hi = 10f64.powf(hi.log10().ceil());
                if hi <= lo {
                    hi = lo * 10.0;
                }
            }
            Scale::Linear => {
                if hi <= lo {
                    lo -= 0.5;
                    hi += 0.5;
                } else {
                    let pad = 0.05 * (hi - lo);
                    lo -= pad;
                    hi += pad;
                }
            }
        }
        Self { scale, lo, hi }
    }

    fn unit(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Linear => (v - self.lo) / (self.hi - self.lo),
            Scale::Log => (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10()),
        }
    }

    fn ticks(&self) -> Vec<f64> {
        match self.scale {
            Scale::Log => {
                let (a, b) = (self.lo.log10().round() as i32, self.hi.log10().round() as i32);
                (a..=b).map(|e| 10f64.powi(e)).collect()
            }
            Scale::Linear => {
                let raw = (self.hi - self.lo) / 5.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
                let first = (self.lo / step).ceil() as i64;
                let last = (self.hi / step).floor() as i64;
                (first..=last).map(|i| i as f64 * step).collect()
            }
        }
    }
}

fn tick_label(scale: Scale, v: f64) -> String {
    match scale {
        Scale::Log => format!("1e{}", v.log10().round() as i32),
        Scale::Linear => {
            let s = format!("{v:.3}");
            let s = s.trim_end_matches('0').trim_end_matches('.');
            if s == "-0" { "0".to_string() } else { s.to_string() }
        }
    }
}

impl Chart {
    pub fn render(&self) -> String {
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let all = || self.series.iter().flat_map(|s| s.points.iter().copied());
        let x_axis = match &self.categories {
            Some(c) => Axis {
                scale: Scale::Linear,
                lo: -0.5,
                hi: c.len() as f64 - 0.5,
            },
            None => Axis::fit(self.x_scale, all().map(|p| p.0)),
        };
        let y_axis = Axis::fit(self.y_scale, all().map(|p| p.1));
        let px = |x: f64| LEFT + pw * x_axis.unit(x);
        let py = |y: f64| TOP + ph * (1.0 - y_axis.unit(y));

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            esc(&self.title)
        );
        let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);

        let x_ticks: Vec<(f64, String)> = match &self.categories {
            Some(c) => c.iter().enumerate().map(|(i, l)| (i as f64, l.clone())).collect(),
            None => x_axis.ticks().into_iter().map(|t| (t, tick_label(self.x_scale, t))).collect(),
        };
        for (t, label) in x_ticks {
            let x = px(t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, TOP + ph);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph + 16.0,
                esc(&label)
            );
        }
        for t in y_axis.ticks() {
            let y = py(t);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                tick_label(self.y_scale, t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|(x, y)| (self.categories.is_some() || usable(self.x_scale, *x)) && usable(self.y_scale, *y))
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            if pts.len() > 1 {
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                    pts.join(" ")
                );
            }
            if !series.dashed {
                for p in &pts {
                    let (x, y) = p.split_once(',').expect("formatted pair");
                    let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
                }
            }
            let ly = TOP + 14.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#,
                lx + 22.0
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 28.0, ly + 4.0, esc(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Points of `y` against `x` for the rows selected by `keep`.
fn column_pairs(t: &Table, x: &[Option<f64>], y: &str, keep: impl Fn(usize) -> bool) -> Vec<(f64, f64)> {
    let ys = t.numbers(y).unwrap_or_default();
    x.iter()
        .zip(ys)
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .filter_map(|(_, (x, y))| Some(((*x)?, y?)))
        .collect()
}

/// Charts of a sweep table: BER (log scale) and, when present, missed detection.
pub fn sweep_charts(t: &Table) -> Vec<(String, Chart)> {
    let axis = t.strings("axis").and_then(|a| a.first().cloned()).unwrap_or_default();
    let values = t.strings("axis_value").unwrap_or_default();
    let detectors = t.strings("detector").unwrap_or_default();
    let numeric: Option<Vec<f64>> = values.iter().map(|v| parse_axis_number(v)).collect();
    let (x, categories): (Vec<Option<f64>>, Option<Vec<String>>) = match numeric {
        Some(v) if axis != "modulation" => (v.into_iter().map(Some).collect(), None),
        _ => {
            let mut cats: Vec<String> = Vec::new();
            for v in &values {
                if !cats.contains(v) {
                    cats.push(v.clone());
                }
            }
            let idx = values.iter().map(|v| cats.iter().position(|c| c == v).map(|i| i as f64)).collect();
            (idx, Some(cats))
        }
    };
    let x_scale = if axis == "pfa_target" { Scale::Log } else { Scale::Linear };
    let mut names: Vec<String> = Vec::new();
    for d in &detectors {
        if !names.contains(d) {
            names.push(d.clone());
        }
    }
    let mut out = Vec::new();
    for (metric, label, overlay) in [("ber", "BER", "ber_analytic"), ("pmd_emp", "P_md", "pmd_analytic")] {
        let mut series = Vec::new();
        for name in &names {
            let keep = |i: usize| detectors[i] == *name;
            series.push(Series {
                label: name.clone(),
                points: column_pairs(t, &x, metric, keep),
                dashed: false,
            });
            let analytic = column_pairs(t, &x, overlay, keep);
            if !analytic.is_empty() {
                series.push(Series {
                    label: format!("{name} analytic"),
                    points: analytic,
                    dashed: true,
                });
            }
        }
        out.push((
            format!("sweep_{metric}.svg"),
            Chart {
                title: format!("{label} vs {axis}"),
                x_label: axis.clone(),
                y_label: label.to_string(),
                x_scale,
                y_scale: Scale::Log,
                categories: categories.clone(),
                series,
            },
        ));
    }
    out
}

/// Axis values such as `8/7` count as numbers.
fn parse_axis_number(v: &str) -> Option<f64> {
    if let Ok(x) = v.parse::<f64>() {
        return Some(x);
    }
    let (a, b) = v.split_once('/')?;
    Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?)
}

/// Complementary ROC, both axes logarithmic, one curve per axis value.
pub fn roc_chart(t: &Table) -> Chart {
    let x = t.numbers("pfa_target").unwrap_or_default();
    let axis = t.strings("axis").and_then(|a| a.first().cloned()).unwrap_or_default();
    let values = t.strings("axis_value").unwrap_or_default();
    let mut labels: Vec<String> = Vec::new();
    for v in &values {
        if !labels.contains(v) {
            labels.push(v.clone());
        }
    }
    let mut series = Vec::new();
    for label in &labels {
        let keep = |i: usize| values[i] == *label;
        series.push(Series {
            label: format!("{axis}={label}"),
            points: column_pairs(t, &x, "pmd_emp", keep),
            dashed: false,
        });
        let analytic = column_pairs(t, &x, "pmd_analytic", keep);
        if !analytic.is_empty() {
            series.push(Series {
                label: format!("{axis}={label} analytic"),
                points: analytic,
                dashed: true,
            });
        }
    }
    Chart {
        title: "Complementary ROC".into(),
        x_label: "P_fa".into(),
        y_label: "P_md".into(),
        x_scale: Scale::Log,
        y_scale: Scale::Log,
        categories: None,
        series,
    }
}

/// Analytic curves of `theory.csv` against the transmit SNR.
pub fn theory_chart(t: &Table) -> Chart {
    let x = t.numbers("gamma_db").unwrap_or_default();
    let series = [("pfa", "P_fa"), ("pmd_avg", "P_md"), ("ber", "BER"), ("ber_lower_bound", "BER bound")]
        .iter()
        .map(|(col, label)| Series {
            label: label.to_string(),
            points: column_pairs(t, &x, col, |_| true),
            dashed: *col == "ber_lower_bound",
        })
        .collect();
    Chart {
        title: "Analytic performance".into(),
        x_label: "gamma (dB)".into(),
        y_label: "probability".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Log,
        categories: None,
        series,
    }
}

/// False-alarm probability against `N`, one curve per threshold and a few antenna counts.
pub fn surface_chart(t: &Table) -> Chart {
    let m = t.numbers("m").unwrap_or_default();
    let n = t.numbers("n").unwrap_or_default();
    let eta = t.numbers("eta").unwrap_or_default();
    let mut series = Vec::new();
    let mut etas: Vec<f64> = Vec::new();
    for e in eta.iter().flatten() {
        if !etas.contains(e) {
            etas.push(*e);
        }
    }
    for (j, e) in etas.iter().enumerate() {
        for mm in [5.0, 10.0, 20.0, 30.0] {
            let keep = |i: usize| m[i] == Some(mm) && eta[i] == Some(*e);
            let points = column_pairs(t, &n, "pfa", keep);
            if !points.is_empty() {
                series.push(Series {
                    label: format!("eta={e} M={mm}"),
                    points,
                    dashed: j > 0,
                });
            }
        }
    }
    Chart {
        title: "Analytic false alarm".into(),
        x_label: "N".into(),
        y_label: "P_fa".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Log,
        categories: None,
        series,
    }
}
