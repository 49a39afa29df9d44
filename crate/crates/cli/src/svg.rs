//! Minimal hand-rolled SVG scatter plots: particle dots plus optional
//! circles (obstacles, feasible boundary), rectangles (boxes), and
//! polylines (trajectories). Output is a pure function of the data, so
//! reruns are byte-identical.

pub enum Overlay {
    /// (cx, cy, r, filled)
    Circle(f64, f64, f64, bool),
    /// (x0, y0, x1, y1)
    Rect(f64, f64, f64, f64),
    Polyline(Vec<(f64, f64)>),
}

const SIZE: f64 = 600.0;
const PAD: f64 = 0.08;

struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        (v - self.x0) * self.scale
    }

    fn y(&self, v: f64) -> f64 {
        // flip: svg y grows downward
        SIZE - (v - self.y0) * self.scale
    }
}

fn fmt(v: f64) -> String {
    format!("{:.3}", v)
}

pub fn scatter_svg(points: &[(f64, f64)], overlays: &[Overlay]) -> String {
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut extend = |x: f64, y: f64| {
        lo.0 = lo.0.min(x);
        lo.1 = lo.1.min(y);
        hi.0 = hi.0.max(x);
        hi.1 = hi.1.max(y);
    };
    for &(x, y) in points {
        extend(x, y);
    }
    for o in overlays {
        match o {
            Overlay::Circle(cx, cy, r, _) => {
                extend(cx - r, cy - r);
                extend(cx + r, cy + r);
            }
            Overlay::Rect(x0, y0, x1, y1) => {
                extend(*x0, *y0);
                extend(*x1, *y1);
            }
            Overlay::Polyline(pts) => {
                for &(x, y) in pts {
                    extend(x, y);
                }
            }
        }
    }
    if !lo.0.is_finite() {
        lo = (-1.0, -1.0);
        hi = (1.0, 1.0);
    }
    let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-9);
    let pad = span * PAD;
    let frame = Frame {
        x0: lo.0 - pad,
        y0: lo.1 - pad,
        scale: SIZE / (span + 2.0 * pad),
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for o in overlays {
        match o {
            Overlay::Circle(cx, cy, r, filled) => {
                let style = if *filled {
                    "fill=\"#d0d0d0\" stroke=\"#808080\""
                } else {
                    "fill=\"none\" stroke=\"#2060c0\" stroke-dasharray=\"6,4\""
                };
                out.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" {} stroke-width=\"1.5\"/>\n",
                    fmt(frame.x(*cx)),
                    fmt(frame.y(*cy)),
                    fmt(r * frame.scale),
                    style
                ));
            }
            Overlay::Rect(x0, y0, x1, y1) => {
                out.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#909090\" stroke-width=\"1\"/>\n",
                    fmt(frame.x(*x0)),
                    fmt(frame.y(*y1)),
                    fmt((x1 - x0) * frame.scale),
                    fmt((y1 - y0) * frame.scale),
                ));
            }
            Overlay::Polyline(pts) => {
                let coords: Vec<String> = pts
                    .iter()
                    .map(|&(x, y)| format!("{},{}", fmt(frame.x(x)), fmt(frame.y(y))))
                    .collect();
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"#20a060\" stroke-width=\"1\" opacity=\"0.6\"/>\n",
                    coords.join(" ")
                ));
            }
        }
    }
    for &(x, y) in points {
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#c03020\" opacity=\"0.8\"/>\n",
            fmt(frame.x(x)),
            fmt(frame.y(y))
        ));
    }
    out.push_str("</svg>\n");
    out
}
