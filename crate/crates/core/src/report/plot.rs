//! Minimal SVG figures: power spectra, CUSUM paths with their boundaries and
//! DTW alignments.

use std::fmt::Write;

use super::pipeline::{CusumRun, DtwAlignment, ReportBundle, SpectrumRecord};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFile {
    /// Path relative to the output directory.
    pub path: String,
    pub svg: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotSet {
    pub files: Vec<PlotFile>,
    /// Plots that could not be drawn, with the reason.
    pub missing: Vec<String>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    xlog: bool,
    ylog: bool,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone, xlog: bool, ylog: bool) -> Frame {
        let range = |it: &mut dyn Iterator<Item = f64>, log: bool| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in it.filter(|v| v.is_finite()) {
                let v = if log { v.log10() } else { v };
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !lo.is_finite() {
                return (0.0, 1.0);
            }
            if hi - lo < 1e-12 {
                return (lo - 0.5, hi + 0.5);
            }
            let pad = 0.04 * (hi - lo);
            (lo - pad, hi + pad)
        };
        Frame { x: range(&mut xs.clone(), xlog), y: range(&mut ys.clone(), ylog), xlog, ylog }
    }

    fn sx(&self, v: f64) -> f64 {
        let v = if self.xlog { v.log10() } else { v };
        MARGIN + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn sy(&self, v: f64) -> f64 {
        let v = if self.ylog { v.log10() } else { v };
        HEIGHT - MARGIN - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn polyline(&self, out: &mut String, class: &str, colour: &str, pts: impl Iterator<Item = (f64, f64)>) {
        let mut d = String::new();
        for (x, y) in pts {
            if (self.xlog && x <= 0.0) || (self.ylog && y <= 0.0) || !x.is_finite() || !y.is_finite() {
                continue;
            }
            let _ = write!(d, "{:.2},{:.2} ", self.sx(x), self.sy(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline class="{class}" fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#,
            d.trim_end()
        );
    }

    fn axis_label(&self, v: f64, log: bool) -> String {
        let v = if log { 10f64.powf(v) } else { v };
        format!("{v:.3e}")
    }

    fn open(&self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(s, r##"<rect class="frame" x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="#333"/>"##, r - l, b - t);
        let _ = writeln!(s, r#"<text x="{l}" y="{}" text-anchor="start">{}</text>"#, b + 16.0, self.axis_label(self.x.0, self.xlog));
        let _ = writeln!(s, r#"<text x="{r}" y="{}" text-anchor="end">{}</text>"#, b + 16.0, self.axis_label(self.x.1, self.xlog));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, b, self.axis_label(self.y.0, self.ylog));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, t + 10.0, self.axis_label(self.y.1, self.ylog));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(ylabel)
        );
        s
    }
}

/// Log-log one-sided spectrum with the Nyquist frequency marked.
pub fn spectrum_svg(rec: &SpectrumRecord) -> Option<String> {
    let pts: Vec<(f64, f64)> = rec.density.one_sided().filter(|&(f, p)| f > 0.0 && p > 0.0).collect();
    if pts.len() < 2 {
        return None;
    }
    let nyq = rec.density.nyquist;
    let frame = Frame::fit(
        pts.iter().map(|p| p.0).chain(std::iter::once(nyq)),
        pts.iter().map(|p| p.1),
        true,
        true,
    );
    let title = format!("{} power spectrum ({})", rec.asset, rec.filter_state);
    let mut s = frame.open(&title, "frequency", "power spectral density");
    frame.polyline(&mut s, "density", "#1f4e9c", pts.into_iter());
    let x = frame.sx(nyq);
    let _ = writeln!(
        s,
        r##"<line class="nyquist" x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{}" stroke="#b22" stroke-dasharray="4 3"/>"##,
        HEIGHT - MARGIN
    );
    let _ = writeln!(s, r##"<text x="{:.2}" y="{}" text-anchor="end" fill="#b22">Nyquist {nyq}</text>"##, x - 4.0, MARGIN + 14.0);
    s.push_str("</svg>\n");
    Some(s)
}

/// Path plus the upper and lower curve of one boundary.
pub fn cusum_svg(run: &CusumRun, outcome: usize) -> Option<String> {
    let o = run.outcomes.get(outcome)?;
    let path = &run.path;
    if path.len() < 2 {
        return None;
    }
    let bound = &o.boundary.values;
    let frame = Frame::fit(
        path.taus.iter().copied(),
        path.values.iter().copied().chain(bound.iter().copied()).chain(bound.iter().map(|v| -v)),
        false,
        false,
    );
    let title = format!(
        "{}-CUSUM {} {} ({}), {}",
        path.kind.as_str(),
        run.target,
        run.window,
        run.filter_state,
        o.boundary.kind.as_str()
    );
    let mut s = frame.open(&title, "t", "W(t)");
    let zero = frame.sy(0.0);
    let _ = writeln!(
        s,
        r##"<line class="zero" x1="{MARGIN}" y1="{zero:.2}" x2="{}" y2="{zero:.2}" stroke="#999" stroke-width="0.5"/>"##,
        WIDTH - MARGIN
    );
    frame.polyline(&mut s, "boundary upper", "#b22", path.taus.iter().copied().zip(bound.iter().copied()));
    frame.polyline(&mut s, "boundary lower", "#b22", path.taus.iter().copied().zip(bound.iter().map(|v| -v)));
    frame.polyline(&mut s, "path", "#1f4e9c", path.taus.iter().copied().zip(path.values.iter().copied()));
    if let Some(t) = o.first_crossing_tau {
        let x = frame.sx(t);
        let _ = writeln!(
            s,
            r##"<line class="crossing" x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{}" stroke="#777" stroke-dasharray="2 2"/>"##,
            HEIGHT - MARGIN
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

/// Both series stacked with a link for each step of the warping path.
pub fn alignment_svg(a: &DtwAlignment) -> Option<String> {
    let n = a.x_values.len().max(a.y_values.len());
    if n < 2 || a.path.is_empty() {
        return None;
    }
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, (hi - lo).max(1e-12))
    };
    let (xl, xs) = span(&a.x_values);
    let (yl, ys) = span(&a.y_values);
    // x on the upper band, y on the lower band.
    let upper = |v: f64| 1.2 + (v - xl) / xs;
    let lower = |v: f64| (v - yl) / ys;
    let frame = Frame::fit((0..n).map(|i| i as f64), [0.0, 2.2].into_iter(), false, false);
    let title = format!("DTW alignment {} vs {} ({})", a.x, a.y, a.period);
    let mut s = frame.open(&title, "observation", "");
    let step = (a.path.len() / 150).max(1);
    for &(i, j) in a.path.iter().step_by(step) {
        let _ = writeln!(
            s,
            r##"<line class="link" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#bbb" stroke-width="0.5"/>"##,
            frame.sx(i as f64),
            frame.sy(upper(a.x_values[i])),
            frame.sx(j as f64),
            frame.sy(lower(a.y_values[j]))
        );
    }
    frame.polyline(&mut s, "series x", "#1f4e9c", a.x_values.iter().enumerate().map(|(i, &v)| (i as f64, upper(v))));
    frame.polyline(&mut s, "series y", "#2a8a3a", a.y_values.iter().enumerate().map(|(i, &v)| (i as f64, lower(v))));
    s.push_str("</svg>\n");
    Some(s)
}

/// Renders every figure the bundle supports. Nothing is written to disk.
pub fn render_plots(bundle: &ReportBundle) -> PlotSet {
    let mut set = PlotSet::default();
    for rec in &bundle.spectra {
        let path = format!("plots/spectrum_{}_{}.svg", rec.asset.file_stem(), rec.filter_state);
        match spectrum_svg(rec) {
            Some(svg) => set.files.push(PlotFile { path, svg }),
            None => set.missing.push(format!("{path}: fewer than two positive spectral points")),
        }
    }
    for run in &bundle.cusum {
        let stem = format!(
            "plots/cusum_{}_{}_{}_{}",
            run.path.kind.as_str(),
            run.target.file_stem(),
            run.window,
            run.filter_state
        );
        if run.outcomes.is_empty() {
            set.missing.push(format!("{stem}: no boundary tests"));
        }
        for (i, o) in run.outcomes.iter().enumerate() {
            let path = format!("{stem}_{}.svg", o.boundary.kind.as_str());
            match cusum_svg(run, i) {
                Some(svg) => set.files.push(PlotFile { path, svg }),
                None => set.missing.push(format!("{path}: path too short")),
            }
        }
    }
    if let Some(a) = &bundle.alignment {
        let path = format!("plots/dtw_alignment_{}_{}_{}.svg", a.x.file_stem(), a.y.file_stem(), a.period);
        match alignment_svg(a) {
            Some(svg) => set.files.push(PlotFile { path, svg }),
            None => set.missing.push(format!("{path}: series too short")),
        }
    }
    set
}
