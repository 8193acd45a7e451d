//! Dependency-free SVG plots derived from the CSV/JSON artifacts.

use std::fmt::Write;

use crate::active::ExperimentLog;
use crate::eval::{misclassification_analysis, EvalReport, Histogram};
use crate::pipeline::SimTrace;

const REQUESTED: &str = "#f28e2b";
const SCALED: &str = "#4e79a7";
const MARKER: &str = "#e15759";
const PALETTE: [&str; 7] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1", "#9c755f"];

/// One rectangular plot area with linear axes.
struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Panel {
    fn new(x0: f64, y0: f64, w: f64, h: f64, xr: (f64, f64), yr: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Panel {
            x0,
            y0,
            w,
            h,
            xr: widen(xr),
            yr: widen(yr),
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn frame(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, y0, w, h) = (self.x0, self.y0, self.w, self.h);
        let _ = write!(
            out,
            r##"<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#333"/>
<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>
<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>
<text x="{}" y="{}" text-anchor="middle" font-size="11" transform="rotate(-90 {} {})">{}</text>
"##,
            x0 + w / 2.0,
            y0 - 8.0,
            esc(title),
            x0 + w / 2.0,
            y0 + h + 32.0,
            esc(xlabel),
            x0 - 40.0,
            y0 + h / 2.0,
            x0 - 40.0,
            y0 + h / 2.0,
            esc(ylabel)
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = self.xr.0 + t * (self.xr.1 - self.xr.0);
            let yv = self.yr.0 + t * (self.yr.1 - self.yr.0);
            let _ = write!(
                out,
                r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9">{}</text>
<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="9">{}</text>
"##,
                self.px(xv),
                y0 + h + 14.0,
                tick(xv),
                x0 - 4.0,
                self.py(yv) + 3.0,
                tick(yv)
            );
        }
    }

    fn polyline(&self, out: &mut String, pts: impl IntoIterator<Item = (f64, f64)>, color: &str, dashed: bool) {
        let pts: Vec<String> = pts
            .into_iter()
            .map(|(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            pts.join(" ")
        );
    }

    fn cross(&self, out: &mut String, x: f64, y: f64, color: &str) {
        let (cx, cy) = (self.px(x), self.py(y));
        let _ = writeln!(
            out,
            r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="{color}" stroke-width="1.5"/>"#,
            cx - 3.0,
            cy - 3.0,
            cx + 3.0,
            cy + 3.0,
            cx - 3.0,
            cy + 3.0,
            cx + 3.0,
            cy - 3.0
        );
    }

    fn dot(&self, out: &mut String, x: f64, y: f64, color: &str) {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, self.px(x), self.py(y));
    }

    fn bar(&self, out: &mut String, x_lo: f64, x_hi: f64, y: f64, color: &str, opacity: f64) {
        let (l, r) = (self.px(x_lo), self.px(x_hi));
        let (top, base) = (self.py(y), self.py(self.yr.0));
        let _ = writeln!(
            out,
            r#"<rect x="{l:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="{opacity}"/>"#,
            (r - l).max(0.0),
            (base - top).max(0.0)
        );
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn document(width: f64, height: f64, body: &str, header: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\">\n<!-- {} -->\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
        esc(header)
    )
}

fn legend(out: &mut String, x: f64, y: f64, items: &[(&str, &str)]) {
    for (i, (label, color)) in items.iter().enumerate() {
        let yy = y + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}" font-size="10">{}</text>"#,
            yy - 9.0,
            x + 14.0,
            yy,
            esc(label)
        );
    }
}

/// Requested vs scaled rpm over time; high-entropy ticks marked with crosses.
pub fn trace_svg(trace: &SimTrace) -> String {
    let t_max = trace.rows.last().map_or(1.0, |r| r.time_s);
    let rpm_max = trace.rows.iter().map(|r| r.requested_rpm).fold(0.0, f64::max).max(1.0);
    let p = Panel::new(70.0, 40.0, 760.0, 300.0, (0.0, t_max), (0.0, rpm_max * 1.05));
    let mut body = String::new();
    p.frame(&mut body, "Wheel speed", "time [s]", "rpm");
    p.polyline(&mut body, trace.rows.iter().map(|r| (r.time_s, r.requested_rpm)), REQUESTED, false);
    p.polyline(&mut body, trace.rows.iter().map(|r| (r.time_s, r.scaled_rpm)), SCALED, false);
    for r in trace.rows.iter().filter(|r| r.high_entropy) {
        p.cross(&mut body, r.time_s, r.scaled_rpm, MARKER);
    }
    legend(
        &mut body,
        700.0,
        60.0,
        &[("requested", REQUESTED), ("scaled", SCALED), ("high entropy", MARKER)],
    );
    document(900.0, 400.0, &body, &format!("seed={} config_hash={}", trace.seed, trace.config_hash))
}

fn mean_curve(logs: &[&ExperimentLog], f: impl Fn(&crate::active::RoundLog) -> Option<f64>) -> Vec<(f64, f64)> {
    let rounds = logs.iter().map(|l| l.rounds.len()).min().unwrap_or(0);
    (0..rounds)
        .filter_map(|r| {
            let vals: Vec<f64> = logs.iter().filter_map(|l| f(&l.rounds[r])).collect();
            let x = logs.iter().map(|l| l.rounds[r].labeled_total as f64).sum::<f64>() / logs.len() as f64;
            (!vals.is_empty()).then(|| (x, vals.iter().sum::<f64>() / vals.len() as f64))
        })
        .collect()
}

/// Three panels: overall accuracy per model kind, then per-class accuracy
/// and per-class entropy of the first kind, all averaged over seeds.
pub fn al_svg(logs: &[ExperimentLog]) -> String {
    let mut body = String::new();
    let Some(first) = logs.first() else {
        return document(300.0, 60.0, "<text x=\"10\" y=\"30\">no data</text>\n", "");
    };
    let mut kinds: Vec<_> = logs.iter().map(|l| l.kind).collect();
    kinds.sort_by_key(|k| k.to_string());
    kinds.dedup();
    let x_max = logs
        .iter()
        .flat_map(|l| l.rounds.iter().map(|r| r.labeled_total as f64))
        .fold(1.0, f64::max);
    let ent_max = logs
        .iter()
        .flat_map(|l| l.rounds.iter().flat_map(|r| r.per_class_entropy.iter().flatten().copied()))
        .fold(0.1, f64::max);

    let overall = Panel::new(70.0, 40.0, 340.0, 240.0, (0.0, x_max), (0.0, 1.0));
    overall.frame(&mut body, &format!("Experiment {}: accuracy", first.experiment), "labelled samples", "test accuracy");
    let mut items = Vec::new();
    for (i, kind) in kinds.iter().enumerate() {
        let group: Vec<&ExperimentLog> = logs.iter().filter(|l| l.kind == *kind).collect();
        overall.polyline(&mut body, mean_curve(&group, |r| r.test_acc), PALETTE[i % PALETTE.len()], false);
        items.push((kind.to_string(), PALETTE[i % PALETTE.len()]));
    }
    let items_ref: Vec<(&str, &str)> = items.iter().map(|(a, b)| (a.as_str(), *b)).collect();
    legend(&mut body, 330.0, 260.0, &items_ref);

    let group: Vec<&ExperimentLog> = logs.iter().filter(|l| l.kind == kinds[0]).collect();
    let per_acc = Panel::new(490.0, 40.0, 340.0, 240.0, (0.0, x_max), (0.0, 1.0));
    per_acc.frame(&mut body, &format!("{}: per-class accuracy", kinds[0]), "labelled samples", "accuracy");
    let per_ent = Panel::new(910.0, 40.0, 340.0, 240.0, (0.0, x_max), (0.0, ent_max * 1.1));
    per_ent.frame(&mut body, &format!("{}: per-class entropy", kinds[0]), "labelled samples", "mean entropy [bits]");
    for (c, name) in first.classes.iter().enumerate() {
        let color = PALETTE[c % PALETTE.len()];
        per_acc.polyline(&mut body, mean_curve(&group, |r| r.per_class_acc[c]), color, false);
        per_ent.polyline(&mut body, mean_curve(&group, |r| r.per_class_entropy[c]), color, c % 2 == 1);
        legend(&mut body, 1270.0, 60.0 + 14.0 * c as f64, &[(name, color)]);
    }
    let seeds: Vec<String> = logs.iter().map(|l| l.seed.to_string()).collect();
    document(1400.0, 330.0, &body, &format!("seeds={}", seeds.join(",")))
}

/// True class angle (dot) vs nearest class in the top set (cross), colored
/// by the high-uncertainty flag.
pub fn misclassification_svg(report: &EvalReport) -> String {
    let recs = misclassification_analysis(report);
    let p = Panel::new(70.0, 40.0, 760.0, 300.0, (0.0, recs.len().max(1) as f64), (-90.0, 90.0));
    let mut body = String::new();
    p.frame(&mut body, "Misclassifications", "sample (by entropy)", "class angle [deg]");
    for (i, m) in recs.iter().enumerate() {
        let x = i as f64 + 0.5;
        p.dot(&mut body, x, m.true_angle_deg, "#000");
        p.cross(&mut body, x, m.nearest_angle_deg, if m.high_uncertainty { "#ff69b4" } else { REQUESTED });
    }
    legend(
        &mut body,
        850.0,
        60.0,
        &[("true", "#000"), ("nearest, low", REQUESTED), ("nearest, high", "#ff69b4")],
    );
    document(980.0, 400.0, &body, &format!("seed={} config_hash={}", report.seed, report.config_hash))
}

/// Regular vs uncertain entropy histograms, overlaid.
pub fn entropy_histogram_svg(report: &EvalReport) -> String {
    let (reg, unc): (&Histogram, &Histogram) = (&report.histogram_regular, &report.histogram_uncertain);
    let y_max = reg.counts.iter().chain(&unc.counts).copied().max().unwrap_or(1).max(1) as f64;
    let p = Panel::new(70.0, 40.0, 560.0, 280.0, (reg.lo, reg.hi), (0.0, y_max * 1.05));
    let mut body = String::new();
    p.frame(&mut body, "Entropy", "entropy [bits]", "samples");
    for (h, color) in [(reg, SCALED), (unc, MARKER)] {
        for (b, &c) in h.counts.iter().enumerate() {
            let lo = h.lo + b as f64 * h.bin_width();
            p.bar(&mut body, lo, lo + h.bin_width(), c as f64, color, 0.5);
        }
    }
    legend(&mut body, 650.0, 60.0, &[("regular", SCALED), ("uncertain", MARKER)]);
    document(760.0, 380.0, &body, &format!("seed={} config_hash={}", report.seed, report.config_hash))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::TraceRow;

    #[test]
    fn trace_plot_marks_high_entropy_ticks() {
        let row = |t: f64, high: bool| TraceRow {
            time_s: t,
            segment_id: 0,
            true_class: "Straight".into(),
            predicted_class: "Straight".into(),
            entropy_bits: if high { 2.7 } else { 0.2 },
            requested_rpm: 1000.0,
            scaled_rpm: if high { 0.0 } else { 1000.0 },
            tier: 0,
            high_entropy: high,
        };
        let trace = SimTrace {
            seed: 4,
            config_hash: "ff".into(),
            rows: vec![row(0.0, false), row(0.2, true), row(0.4, true)],
            stall_releases: 0,
        };
        let svg = trace_svg(&trace);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches(MARKER).count(), 3, "two crosses plus the legend swatch");
        assert!(svg.contains("seed=4"));
    }
}
