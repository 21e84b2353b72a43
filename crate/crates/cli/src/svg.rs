//! Minimal SVG 1.1 writer with a unit-square plot frame.

use std::fmt::Write as _;

pub const WIDTH: f64 = 900.0;
pub const HEIGHT: f64 = 600.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub struct Svg {
    body: String,
}

impl Svg {
    /// `title` and `desc` end up in the document metadata.
    pub fn new(title: &str, desc: &str) -> Self {
        let mut body = String::new();
        writeln!(
            body,
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<title>{}</title>
<desc>{}</desc>
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#,
            escape(title),
            escape(desc)
        )
        .expect("writing to a string");
        Self { body }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str, opacity: f64) {
        writeln!(
            self.body,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{fill}" fill-opacity="{opacity:.2}" stroke="{stroke}"/>"#
        )
        .expect("writing to a string");
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        writeln!(
            self.body,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{stroke}" stroke-width="{width:.2}"/>"#
        )
        .expect("writing to a string");
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        writeln!(self.body, r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.2}" fill="{fill}"/>"#)
            .expect("writing to a string");
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        writeln!(
            self.body,
            r#"<text x="{x:.3}" y="{y:.3}" font-family="sans-serif" font-size="{size:.1}" text-anchor="{anchor}">{}</text>"#,
            escape(content)
        )
        .expect("writing to a string");
    }

    pub fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// Maps `[0,1]²` into the drawing area, `y` pointing up.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Self { left: 80.0, top: 50.0, width: WIDTH - 120.0, height: HEIGHT - 110.0 }
    }
}

impl Frame {
    pub fn x(&self, u: f64) -> f64 {
        self.left + u * self.width
    }

    pub fn y(&self, v: f64) -> f64 {
        self.top + (1.0 - v) * self.height
    }

    /// Border, quarter ticks on both axes and axis labels.
    pub fn draw_axes(&self, svg: &mut Svg, heading: &str, x_label: &str, y_label: &str) {
        svg.rect(self.left, self.top, self.width, self.height, "none", "black", 1.0);
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let label = format!("{t:.2}");
            svg.line(self.x(t), self.y(0.0), self.x(t), self.y(0.0) + 6.0, "black", 1.0);
            svg.text(self.x(t), self.y(0.0) + 22.0, 12.0, "middle", &label);
            svg.line(self.left - 6.0, self.y(t), self.left, self.y(t), "black", 1.0);
            svg.text(self.left - 10.0, self.y(t) + 4.0, 12.0, "end", &label);
        }
        svg.text(self.x(0.5), 30.0, 16.0, "middle", heading);
        svg.text(self.x(0.5), HEIGHT - 15.0, 13.0, "middle", x_label);
        svg.text(20.0, self.y(0.5), 13.0, "middle", y_label);
    }
}
