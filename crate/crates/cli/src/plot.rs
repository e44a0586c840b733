//! Hand-rolled SVG renderings of the CSV outputs. Everything is formatted
//! with fixed precision so identical inputs give identical bytes.

use crate::PlotKind;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 56.0;

const LINE_COLORS: [&str; 3] = ["#1f6fb2", "#c03a2b", "#3a7d44"];

/// Parses a header row plus numeric rows into column-major data. Empty
/// cells become NaN and are skipped when drawing.
pub fn load_columns(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or("empty CSV file")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(format!(
                "row {} has {} cells, header has {}",
                lineno + 2,
                cells.len(),
                header.len()
            ));
        }
        for (c, cell) in cells.iter().enumerate() {
            let cell = cell.trim();
            let v = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse::<f64>()
                    .or_else(|_| match cell {
                        "true" => Ok(1.0),
                        "false" => Ok(0.0),
                        _ => Err(format!("row {}: cannot parse {cell:?}", lineno + 2)),
                    })?
            };
            cols[c].push(v);
        }
    }
    if cols.is_empty() || cols[0].is_empty() {
        return Err("CSV has no data rows".into());
    }
    Ok((header, cols))
}

struct Frame {
    x_min: f64,
    x_span: f64,
    y_min: f64,
    y_span: f64,
}

impl Frame {
    fn from_ranges(xs: &[f64], ys: &[f64]) -> Frame {
        let finite = |vals: &[f64]| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in vals {
                if v.is_finite() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if lo > hi {
                (0.0, 1.0)
            } else if lo == hi {
                (lo - 0.5, lo + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x_lo, x_hi) = finite(xs);
        let (y_lo, y_hi) = finite(ys);
        let pad = (y_hi - y_lo) * 0.05;
        Frame {
            x_min: x_lo,
            x_span: x_hi - x_lo,
            y_min: y_lo - pad,
            y_span: (y_hi - y_lo) + 2.0 * pad,
        }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x_min) / self.x_span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (v - self.y_min) / self.y_span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn push_header(svg: &mut String) {
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
}

fn push_axes(svg: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    let label = |v: f64| format!("{v:.4e}");
    svg.push_str(&format!(
        "<text x=\"{x0}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        y0 + 18.0,
        label(frame.x_min)
    ));
    svg.push_str(&format!(
        "<text x=\"{x1}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        y0 + 18.0,
        label(frame.x_min + frame.x_span)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
        x0 - 6.0,
        y0,
        label(frame.y_min)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
        x0 - 6.0,
        y1 + 10.0,
        label(frame.y_min + frame.y_span)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        (x0 + x1) / 2.0,
        y0 + 38.0,
        xml_escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        xml_escape(y_label)
    ));
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn push_polyline(svg: &mut String, frame: &Frame, xs: &[f64], ys: &[f64], color: &str) {
    let mut points = String::new();
    for (x, y) in xs.iter().zip(ys) {
        if x.is_finite() && y.is_finite() {
            points.push_str(&format!("{:.3},{:.3} ", frame.x(*x), frame.y(*y)));
        }
    }
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points.trim_end()
    ));
}

fn push_circle(svg: &mut String, frame: &Frame, x: f64, y: f64, color: &str) {
    svg.push_str(&format!(
        "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"4\" fill=\"none\" stroke=\"{color}\" \
         stroke-width=\"1.5\"/>\n",
        frame.x(x),
        frame.y(y)
    ));
}

fn push_cross(svg: &mut String, frame: &Frame, x: f64, y: f64, color: &str) {
    let (cx, cy) = (frame.x(x), frame.y(y));
    svg.push_str(&format!(
        "<path d=\"M {:.3} {:.3} L {:.3} {:.3} M {:.3} {:.3} L {:.3} {:.3}\" \
         stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
        cx - 4.0,
        cy - 4.0,
        cx + 4.0,
        cy + 4.0,
        cx - 4.0,
        cy + 4.0,
        cx + 4.0,
        cy - 4.0
    ));
}

pub fn render(text: &str, kind: PlotKind) -> Result<String, String> {
    let (header, cols) = load_columns(text)?;
    if cols.len() < 2 {
        return Err("need at least two columns to plot".into());
    }
    let mut svg = String::new();
    push_header(&mut svg);
    match kind {
        PlotKind::Series | PlotKind::Spectrum => {
            let xs = &cols[0];
            let all_y: Vec<f64> = cols[1..].iter().flatten().copied().collect();
            let frame = Frame::from_ranges(xs, &all_y);
            push_axes(&mut svg, &frame, &header[0], &header[1..].join(", "));
            for (ci, ys) in cols[1..].iter().enumerate() {
                push_polyline(&mut svg, &frame, xs, ys, LINE_COLORS[ci % LINE_COLORS.len()]);
            }
            if matches!(kind, PlotKind::Spectrum) {
                // mark strict local maxima above a tenth of the strongest bin
                let ys = &cols[1];
                let max = ys.iter().copied().fold(0.0f64, f64::max);
                for i in 1..ys.len().saturating_sub(1) {
                    if ys[i] > ys[i - 1] && ys[i] > ys[i + 1] && ys[i] >= 0.1 * max {
                        push_circle(&mut svg, &frame, xs[i], ys[i], "#c03a2b");
                    }
                }
            }
        }
        PlotKind::Dispersion => {
            if cols.len() < 3 {
                return Err("dispersion plots need mode, measured, and reference columns".into());
            }
            let xs = &cols[0];
            let all_y: Vec<f64> = cols[1..3].iter().flatten().copied().collect();
            let frame = Frame::from_ranges(xs, &all_y);
            push_axes(&mut svg, &frame, &header[0], &format!("{}, {}", header[1], header[2]));
            for (x, y) in xs.iter().zip(&cols[2]) {
                if x.is_finite() && y.is_finite() {
                    push_cross(&mut svg, &frame, *x, *y, "#3a7d44");
                }
            }
            for (x, y) in xs.iter().zip(&cols[1]) {
                if x.is_finite() && y.is_finite() {
                    push_circle(&mut svg, &frame, *x, *y, "#1f6fb2");
                }
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
