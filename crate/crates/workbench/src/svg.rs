//! Minimal SVG figures: prediction/residual panels and colored scatter grids.

use std::fmt::Write;

const FONT: &str = "font-family=\"sans-serif\"";
const TRAIN_COLOR: &str = "#1f77b4";
const TEST_COLOR: &str = "#d62728";
const TRUTH_COLOR: &str = "#555555";
const GUIDE_COLOR: &str = "#2ca02c";
const NOISE_COLOR: &str = "#bbbbbb";
const CATEGORICAL: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];
const VIRIDIS: [(f64, f64, f64); 5] =
    [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];

/// Color for `t` in `[0, 1]` on a perceptually ordered ramp.
pub fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let scaled = t * (VIRIDIS.len() - 1) as f64;
    let k = (scaled.floor() as usize).min(VIRIDIS.len() - 2);
    let f = scaled - k as f64;
    let (a, b) = (VIRIDIS[k], VIRIDIS[k + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Color for a cluster label; negative labels are noise.
pub fn category(label: i64) -> String {
    if label < 0 {
        NOISE_COLOR.to_string()
    } else {
        CATEGORICAL[label as usize % CATEGORICAL.len()].to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data range with a small margin; degenerate ranges are widened.
pub fn padded_range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.into_iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Canvas {
    width: f64,
    height: f64,
    body: String,
}

impl Canvas {
    fn new(width: f64, height: f64) -> Self {
        Self { width, height, body: String::new() }
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{x:.1}\" y=\"{y:.1}\" font-size=\"{size}\" text-anchor=\"{anchor}\" {FONT}>{}</text>",
            escape(content)
        );
    }

    fn line(&mut self, (x1, y1): (f64, f64), (x2, y2): (f64, f64), stroke: &str, dash: bool) {
        let dash = if dash { " stroke-dasharray=\"4 3\"" } else { "" };
        let _ = writeln!(
            self.body,
            "<line x1=\"{x1:.1}\" y1=\"{y1:.1}\" x2=\"{x2:.1}\" y2=\"{y2:.1}\" stroke=\"{stroke}\" stroke-width=\"1\"{dash}/>"
        );
    }

    fn dot(&mut self, (x, y): (f64, f64), r: f64, fill: &str) {
        let _ = writeln!(self.body, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"{r}\" fill=\"{fill}\"/>");
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        if points.is_empty() {
            return;
        }
        let mut d = String::new();
        for (x, y) in points {
            let _ = write!(d, "{x:.1},{y:.1} ");
        }
        let _ = writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1\"/>",
            d.trim_end()
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xlim: (f64, f64),
    ylim: (f64, f64),
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let fx = (x - self.xlim.0) / (self.xlim.1 - self.xlim.0);
        let fy = (y - self.ylim.0) / (self.ylim.1 - self.ylim.0);
        (self.x0 + fx * self.w, self.y0 + self.h - fy * self.h)
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xlim.0 && x <= self.xlim.1 && y >= self.ylim.0 && y <= self.ylim.1
    }

    fn draw_axes(&self, c: &mut Canvas, title: &str, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            c.body,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#333\"/>",
            self.x0, self.y0, self.w, self.h
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.xlim.0 + f * (self.xlim.1 - self.xlim.0);
            let yv = self.ylim.0 + f * (self.ylim.1 - self.ylim.0);
            let px = self.x0 + f * self.w;
            let py = self.y0 + self.h - f * self.h;
            c.line((px, self.y0 + self.h), (px, self.y0 + self.h + 4.0), "#333", false);
            c.text(px, self.y0 + self.h + 15.0, 9.0, "middle", &tick(xv));
            c.line((self.x0 - 4.0, py), (self.x0, py), "#333", false);
            c.text(self.x0 - 6.0, py + 3.0, 9.0, "end", &tick(yv));
        }
        c.text(self.x0 + self.w / 2.0, self.y0 - 6.0, 11.0, "middle", title);
        if !xlabel.is_empty() {
            c.text(self.x0 + self.w / 2.0, self.y0 + self.h + 28.0, 10.0, "middle", xlabel);
        }
        if !ylabel.is_empty() {
            let (x, y) = (self.x0 - 40.0, self.y0 + self.h / 2.0);
            let _ = writeln!(
                c.body,
                "<text x=\"{x:.1}\" y=\"{y:.1}\" font-size=\"10\" text-anchor=\"middle\" {FONT} transform=\"rotate(-90 {x:.1} {y:.1})\">{}</text>",
                escape(ylabel)
            );
        }
    }

    fn vline(&self, c: &mut Canvas, x: f64, stroke: &str, dash: bool) {
        if x >= self.xlim.0 && x <= self.xlim.1 {
            let (px, _) = self.map(x, self.ylim.0);
            c.line((px, self.y0), (px, self.y0 + self.h), stroke, dash);
        }
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// One model's predictions, drawn as a signal panel above a residual panel.
#[derive(Debug, Clone, Default)]
pub struct ResidualPanel {
    pub title: String,
    /// `(x', prediction, residual)` for training samples.
    pub train: Vec<(f64, f64, f64)>,
    pub test: Vec<(f64, f64, f64)>,
    /// Noise-free signal sorted by `x'`.
    pub truth: Vec<(f64, f64)>,
    /// Train/test boundary in `x'`.
    pub split: Option<f64>,
    /// Extra dashed guides, e.g. `k/8` bit boundaries.
    pub guides: Vec<f64>,
}

const PANEL_W: f64 = 360.0;
const SIGNAL_H: f64 = 150.0;
const RESID_H: f64 = 80.0;
const MARGIN_L: f64 = 60.0;
const GAP: f64 = 30.0;

/// Grid of prediction panels, `columns` per row. Residual panels share one
/// symmetric y-range so magnitudes compare across models.
pub fn residual_figure(title: &str, panels: &[ResidualPanel], columns: usize) -> String {
    let columns = columns.max(1).min(panels.len().max(1));
    let rows = panels.len().div_ceil(columns).max(1);
    let cell_w = MARGIN_L + PANEL_W + GAP;
    let cell_h = 30.0 + SIGNAL_H + 40.0 + RESID_H + 45.0;
    let mut c = Canvas::new(cell_w * columns as f64 + 20.0, 40.0 + cell_h * rows as f64);
    c.text(c.width / 2.0, 22.0, 14.0, "middle", title);

    let r_max = panels
        .iter()
        .flat_map(|p| p.train.iter().chain(&p.test).map(|t| t.2.abs()))
        .filter(|v| v.is_finite())
        .fold(0.0_f64, f64::max)
        .max(1e-6)
        * 1.05;

    for (k, p) in panels.iter().enumerate() {
        let (col, row) = (k % columns, k / columns);
        let x0 = MARGIN_L + col as f64 * cell_w;
        let y0 = 40.0 + row as f64 * cell_h + 30.0;
        let xlim = padded_range(p.truth.iter().map(|t| t.0).chain(p.train.iter().chain(&p.test).map(|t| t.0)));
        let ylim = padded_range(p.truth.iter().map(|t| t.1).chain(p.train.iter().chain(&p.test).map(|t| t.1)));
        let top = Frame { x0, y0, w: PANEL_W, h: SIGNAL_H, xlim, ylim };
        let bottom = Frame { x0, y0: y0 + SIGNAL_H + 40.0, w: PANEL_W, h: RESID_H, xlim, ylim: (-r_max, r_max) };

        top.draw_axes(&mut c, &p.title, "", "y");
        bottom.draw_axes(&mut c, "residual", "x'", "pred - true");
        let truth: Vec<_> = p.truth.iter().map(|&(x, y)| top.map(x, y)).collect();
        c.polyline(&truth, TRUTH_COLOR);
        for (pts, color) in [(&p.train, TRAIN_COLOR), (&p.test, TEST_COLOR)] {
            for &(x, pred, resid) in pts {
                if top.contains(x, pred) {
                    c.dot(top.map(x, pred), 1.0, color);
                }
                if bottom.contains(x, resid) {
                    c.dot(bottom.map(x, resid), 1.0, color);
                }
            }
        }
        for frame in [&top, &bottom] {
            for &g in &p.guides {
                frame.vline(&mut c, g, GUIDE_COLOR, true);
            }
            if let Some(s) = p.split {
                frame.vline(&mut c, s, "#000000", true);
            }
        }
        let (zx0, zy) = bottom.map(xlim.0, 0.0);
        let (zx1, _) = bottom.map(xlim.1, 0.0);
        c.line((zx0, zy), (zx1, zy), "#999", false);
    }
    c.finish()
}

/// One scatter panel: positions plus a color per point.
#[derive(Debug, Clone, Default)]
pub struct ScatterPanel {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub points: Vec<(f64, f64)>,
    pub colors: Vec<String>,
}

/// Rows of equally sized scatter panels.
pub fn scatter_figure(title: &str, rows: &[Vec<ScatterPanel>]) -> String {
    let size = 220.0;
    let cell_w = MARGIN_L + size + GAP;
    let cell_h = 30.0 + size + 45.0;
    let columns = rows.iter().map(Vec::len).max().unwrap_or(1).max(1);
    let mut c = Canvas::new(cell_w * columns as f64 + 20.0, 40.0 + cell_h * rows.len().max(1) as f64);
    c.text(c.width / 2.0, 22.0, 14.0, "middle", title);
    for (r, row) in rows.iter().enumerate() {
        for (k, p) in row.iter().enumerate() {
            let frame = Frame {
                x0: MARGIN_L + k as f64 * cell_w,
                y0: 40.0 + r as f64 * cell_h + 30.0,
                w: size,
                h: size,
                xlim: padded_range(p.points.iter().map(|q| q.0)),
                ylim: padded_range(p.points.iter().map(|q| q.1)),
            };
            frame.draw_axes(&mut c, &p.title, &p.xlabel, &p.ylabel);
            for (i, &(x, y)) in p.points.iter().enumerate() {
                let color = p.colors.get(i).map_or(TRAIN_COLOR, String::as_str);
                c.dot(frame.map(x, y), 1.2, color);
            }
        }
    }
    c.finish()
}

/// Line chart of one series per label, e.g. MAE against a swept parameter.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h) = (480.0, 280.0);
    let mut c = Canvas::new(MARGIN_L + w + 160.0, 40.0 + h + 60.0);
    c.text(c.width / 2.0, 22.0, 14.0, "middle", title);
    let all = || series.iter().flat_map(|s| s.1.iter().copied());
    let frame = Frame {
        x0: MARGIN_L,
        y0: 50.0,
        w,
        h,
        xlim: padded_range(all().map(|p| p.0)),
        ylim: padded_range(all().map(|p| p.1).chain([0.0])),
    };
    frame.draw_axes(&mut c, "", xlabel, ylabel);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = CATEGORICAL[k % CATEGORICAL.len()];
        let mapped: Vec<_> = pts.iter().filter(|p| p.1.is_finite()).map(|&(x, y)| frame.map(x, y)).collect();
        c.polyline(&mapped, color);
        for &p in &mapped {
            c.dot(p, 3.0, color);
        }
        let ly = 60.0 + 16.0 * k as f64;
        c.line((MARGIN_L + w + 15.0, ly), (MARGIN_L + w + 35.0, ly), color, false);
        c.text(MARGIN_L + w + 40.0, ly + 3.0, 10.0, "start", name);
    }
    c.finish()
}
