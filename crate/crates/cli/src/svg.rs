//! Minimal static SVG charts: grouped bars, bar panels and line charts.
//!
//! Output depends only on the inputs: fixed palette, fixed number formatting
//! and no timestamps, so identical data renders to identical bytes.

use std::fmt::Write;

const PALETTE: [&str; 6] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1",
];
const FONT: &str = "font-family=\"sans-serif\"";

/// One named series; `None` values leave a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub categories: Vec<String>,
    pub series: Vec<Series>,
    pub y_label: String,
    /// Upper end of the value axis; the data maximum (at least 1) when unset.
    pub y_max: Option<f64>,
    /// Shown in place of the plot when there is nothing to draw.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_labels: Vec<String>,
    pub series: Vec<Series>,
    pub y_label: String,
    /// Dashed horizontal guide, e.g. parity at 1.
    pub reference: Option<f64>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn f(x: f64) -> String {
    format!("{x:.2}")
}

fn data_max(series: &[Series]) -> f64 {
    series
        .iter()
        .flat_map(|s| s.values.iter().flatten())
        .fold(0.0_f64, |a, &b| a.max(b))
}

/// Rounds up to a readable axis end.
fn nice_max(x: f64) -> f64 {
    if x <= 1.0 {
        return 1.0;
    }
    let step = 10f64.powf(x.log10().floor()) / 2.0;
    (x / step).ceil() * step
}

struct Frame {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    y_max: f64,
}

impl Frame {
    fn y_of(&self, v: f64) -> f64 {
        self.y + self.h - (v / self.y_max).clamp(0.0, 1.0) * self.h
    }
}

fn axes(out: &mut String, fr: &Frame, y_label: &str) {
    for k in 0..=4 {
        let v = fr.y_max * k as f64 / 4.0;
        let y = fr.y_of(v);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>",
            f(fr.x),
            f(y),
            f(fr.x + fr.w),
            f(y)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\" {FONT}>{}</text>",
            f(fr.x - 4.0),
            f(y + 3.0),
            f(v)
        );
    }
    let _ = writeln!(
        out,
        "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#333333\"/>",
        f(fr.y),
        f(fr.y + fr.h),
        x = f(fr.x)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#333333\"/>",
        f(fr.x),
        f(fr.x + fr.w),
        y = f(fr.y + fr.h)
    );
    let (lx, ly) = (fr.x - 36.0, fr.y + fr.h / 2.0);
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\" {FONT}>{}</text>",
        f(lx),
        f(ly),
        f(lx),
        f(ly),
        esc(y_label)
    );
}

fn legend(out: &mut String, series: &[Series], x: f64, y: f64) {
    for (k, s) in series.iter().enumerate() {
        let yy = y + 16.0 * k as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>",
            f(x),
            f(yy),
            PALETTE[k % PALETTE.len()]
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" {FONT}>{}</text>",
            f(x + 14.0),
            f(yy + 9.0),
            esc(&s.name)
        );
    }
}

fn header(width: f64, height: f64, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = f(width),
        h = f(height)
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\" {FONT}>{}</text>",
        f(width / 2.0),
        esc(title)
    );
    out
}

fn bar_width(c: &BarChart) -> f64 {
    let per = c.series.len().max(1) as f64 * 12.0 + 14.0;
    (c.categories.len() as f64 * per).max(240.0)
}

/// Draws the bars of `c` into the frame starting at `(x, y)` of plot height `h`.
fn draw_bars(out: &mut String, c: &BarChart, x: f64, y: f64, h: f64) {
    let w = bar_width(c);
    let y_max = c.y_max.unwrap_or_else(|| nice_max(data_max(&c.series)));
    let fr = Frame { x, y, w, h, y_max };
    axes(out, &fr, &c.y_label);
    if c.categories.is_empty() || c.series.is_empty() {
        let note = c.note.as_deref().unwrap_or("no data");
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#888888\" {FONT}>{}</text>",
            f(x + w / 2.0),
            f(y + h / 2.0),
            esc(note)
        );
        return;
    }
    let slot = w / c.categories.len() as f64;
    let bw = (slot - 14.0) / c.series.len() as f64;
    for (ci, cat) in c.categories.iter().enumerate() {
        let x0 = x + slot * ci as f64 + 7.0;
        for (si, s) in c.series.iter().enumerate() {
            if let Some(v) = s.values.get(ci).copied().flatten() {
                let top = fr.y_of(v);
                let _ = writeln!(
                    out,
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{}: {}</title></rect>",
                    f(x0 + bw * si as f64),
                    f(top),
                    f(bw),
                    f(y + h - top),
                    PALETTE[si % PALETTE.len()],
                    esc(&s.name),
                    f(v)
                );
            }
        }
        let (lx, ly) = (x0 + slot / 2.0 - 7.0, y + h + 12.0);
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\" transform=\"rotate(-40 {} {})\" {FONT}>{}</text>",
            f(lx),
            f(ly),
            f(lx),
            f(ly),
            esc(cat)
        );
    }
}

/// Bars per category, one bar per series, categories in the given order.
pub fn grouped_bars(c: &BarChart) -> String {
    let (left, top, plot_h, bottom, legend_w) = (60.0, 40.0, 260.0, 110.0, 140.0);
    let width = left + bar_width(c) + legend_w;
    let height = top + plot_h + bottom;
    let mut out = header(width, height, &c.title);
    draw_bars(&mut out, c, left, top, plot_h);
    legend(&mut out, &c.series, left + bar_width(c) + 20.0, top);
    out.push_str("</svg>\n");
    out
}

/// Bar charts side by side, sharing one legend (taken from the first panel).
pub fn panels(title: &str, panels: &[BarChart]) -> String {
    let (left, top, plot_h, bottom, gap, legend_w) = (60.0, 56.0, 240.0, 90.0, 70.0, 140.0);
    let widths: Vec<f64> = panels.iter().map(bar_width).collect();
    let width =
        left + widths.iter().sum::<f64>() + gap * panels.len().saturating_sub(1) as f64 + legend_w;
    let height = top + plot_h + bottom;
    let mut out = header(width, height, title);
    let mut x = left;
    for (p, w) in panels.iter().zip(&widths) {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" {FONT}>{}</text>",
            f(x + w / 2.0),
            f(top - 10.0),
            esc(&p.title)
        );
        draw_bars(&mut out, p, x, top, plot_h);
        x += w + gap;
    }
    if let Some(first) = panels.first() {
        legend(&mut out, &first.series, x - gap + 20.0, top);
    }
    out.push_str("</svg>\n");
    out
}

/// One polyline per series over evenly spaced x labels.
pub fn line_chart(c: &LineChart) -> String {
    let (left, top, plot_h, bottom, legend_w) = (60.0, 40.0, 260.0, 90.0, 160.0);
    let plot_w = (c.x_labels.len() as f64 * 60.0).max(300.0);
    let width = left + plot_w + legend_w;
    let height = top + plot_h + bottom;
    let mut out = header(width, height, &c.title);
    let top_value = data_max(&c.series).max(c.reference.unwrap_or(0.0));
    let fr = Frame {
        x: left,
        y: top,
        w: plot_w,
        h: plot_h,
        y_max: nice_max(top_value * 1.05),
    };
    axes(&mut out, &fr, &c.y_label);
    let n = c.x_labels.len();
    let x_of = |k: usize| left + plot_w * (k as f64 + 0.5) / n.max(1) as f64;
    if let Some(r) = c.reference {
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#555555\" stroke-dasharray=\"4 3\"/>",
            f(left),
            f(left + plot_w),
            y = f(fr.y_of(r))
        );
    }
    for (k, label) in c.x_labels.iter().enumerate() {
        let (lx, ly) = (x_of(k), top + plot_h + 12.0);
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\" transform=\"rotate(-40 {} {})\" {FONT}>{}</text>",
            f(lx),
            f(ly),
            f(lx),
            f(ly),
            esc(label)
        );
    }
    for (si, s) in c.series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        // Gaps split the line into segments.
        let mut segment: Vec<String> = Vec::new();
        let flush = |seg: &mut Vec<String>, out: &mut String| {
            if seg.len() > 1 {
                let _ = writeln!(
                    out,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
                    seg.join(" ")
                );
            }
            seg.clear();
        };
        for (k, v) in s.values.iter().enumerate() {
            match v {
                Some(v) => {
                    let (px, py) = (x_of(k), fr.y_of(*v));
                    segment.push(format!("{},{}", f(px), f(py)));
                    let _ = writeln!(
                        out,
                        "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"><title>{}: {}</title></circle>",
                        f(px),
                        f(py),
                        esc(&s.name),
                        f(*v)
                    );
                }
                None => flush(&mut segment, &mut out),
            }
        }
        flush(&mut segment, &mut out);
    }
    legend(&mut out, &c.series, left + plot_w + 20.0, top);
    out.push_str("</svg>\n");
    out
}
