//! Minimal SVG charts: enough for line plots, scatter plots with bands, error
//! bars and histograms. Coordinates are printed with fixed precision so files
//! are byte-stable.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy)]
pub enum Scale {
    Linear,
    Log10,
}

impl Scale {
    fn map(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log10 => v.log10(),
        }
    }
}

pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
    legend: Vec<(String, &'static str)>,
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Axes {
    /// Ranges are in data units; a log axis takes positive values.
    pub fn new(title: &str, x_label: &str, y_label: &str, x_scale: Scale, x: (f64, f64), y: (f64, f64)) -> Self {
        let (x0, x1) = (x_scale.map(x.0), x_scale.map(x.1));
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale,
            x_range: padded(x0, x1),
            y_range: padded(y.0, y.1),
            body: String::new(),
            legend: Vec::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        LEFT + (self.x_scale.map(x) - a) / (b - a) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        H - BOTTOM - (y - a) / (b - a) * (H - TOP - BOTTOM)
    }

    pub fn colour(k: usize) -> &'static str {
        PALETTE[k % PALETTE.len()]
    }

    pub fn line(&mut self, points: &[(f64, f64)], colour: &'static str, label: Option<&str>, dashed: bool) {
        let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let dash = if dashed { " stroke-dasharray=\"5,4\"" } else { "" };
        let _ = writeln!(
            self.body,
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
            pts.join(" ")
        );
        if let Some(l) = label {
            self.legend.push((l.to_string(), colour));
        }
    }

    pub fn points(&mut self, points: &[(f64, f64)], colour: &'static str, radius: f64) {
        for &(x, y) in points {
            let _ = writeln!(
                self.body,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{radius:.1}\" fill=\"{colour}\" fill-opacity=\"0.6\"/>",
                self.px(x),
                self.py(y)
            );
        }
    }

    pub fn error_bar(&mut self, x: f64, lo: f64, hi: f64, colour: &'static str) {
        let (cx, y0, y1) = (self.px(x), self.py(lo), self.py(hi));
        let _ = writeln!(
            self.body,
            "<path d=\"M{cx:.2},{y0:.2}V{y1:.2}M{:.2},{y0:.2}H{:.2}M{:.2},{y1:.2}H{:.2}\" stroke=\"{colour}\" fill=\"none\"/>",
            cx - 4.0,
            cx + 4.0,
            cx - 4.0,
            cx + 4.0
        );
    }

    pub fn bar(&mut self, x0: f64, x1: f64, height: f64, colour: &'static str) {
        let (a, b) = (self.px(x0), self.px(x1));
        let (top, base) = (self.py(height), self.py(0.0));
        let _ = writeln!(
            self.body,
            "<rect x=\"{a:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{colour}\" fill-opacity=\"0.7\" stroke=\"white\"/>",
            (b - a).max(0.0),
            (base - top).max(0.0)
        );
    }

    fn ticks(lo: f64, hi: f64) -> Vec<f64> {
        let span = hi - lo;
        let raw = span / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|s| s * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
        let mut t = (lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= hi + 1e-9 * step {
            out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
            t += step;
        }
        out
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">"
        );
        let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>", W / 2.0, escape(&self.title));
        let (x0, y0, x1, y1) = (LEFT, H - BOTTOM, W - RIGHT, TOP);
        let _ = writeln!(s, "<path d=\"M{x0},{y1}V{y0}H{x1}\" stroke=\"black\" fill=\"none\"/>");

        for t in Self::ticks(self.x_range.0, self.x_range.1) {
            let v = match self.x_scale {
                Scale::Linear => t,
                Scale::Log10 => 10f64.powf(t),
            };
            let px = self.px(v);
            let label = match self.x_scale {
                Scale::Linear => format_tick(t),
                Scale::Log10 => format!("1e{}", format_tick(t)),
            };
            let _ = writeln!(s, "<path d=\"M{px:.2},{y0}v5\" stroke=\"black\"/>");
            let _ = writeln!(s, "<text x=\"{px:.2}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>", y0 + 17.0);
        }
        for t in Self::ticks(self.y_range.0, self.y_range.1) {
            let py = self.py(t);
            let _ = writeln!(s, "<path d=\"M{x0},{py:.2}h-5\" stroke=\"black\"/>");
            let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>", x0 - 8.0, py + 4.0, format_tick(t));
        }
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", (x0 + x1) / 2.0, H - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            "<text transform=\"translate(16,{:.1}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        s.push_str(&self.body);
        for (k, (label, colour)) in self.legend.iter().enumerate() {
            let y = TOP + 8.0 + 16.0 * k as f64;
            let _ = writeln!(s, "<path d=\"M{:.1},{y:.1}h18\" stroke=\"{colour}\" stroke-width=\"2\"/>", x0 + 12.0);
            let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>", x0 + 36.0, y + 4.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn format_tick(t: f64) -> String {
    let r = (t * 1e6).round() / 1e6;
    if r == r.trunc() {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
