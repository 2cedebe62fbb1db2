//! Hand-emitted SVG plots: step plots for 1d signals and solver runs,
//! colored polygons with quiver arrows for planar fields, energy-vs-step
//! curves for certificates. No plotting dependency; outputs are diffable.

use anyhow::{bail, Result};
use tvk_core::atoms::EnergyKind;
use tvk_core::energy::EdgeQuadrature;
use tvk_core::field::{AnyField, Domain, GridField, PolygonalField, RegionGeometry};
use tvk_core::gcg::{GcgState, Observation};
use tvk_core::witness::{CertOutcome, DecompositionCertificate, EnergyEvaluator};

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 50.0;

pub struct Svg {
    body: String,
    reproducible: bool,
}

impl Svg {
    pub fn new(reproducible: bool) -> Self {
        Svg { body: String::new(), reproducible }
    }

    fn push(&mut self, s: &str) {
        self.body.push_str(s);
        self.body.push('\n');
    }

    pub fn finish(self, title: &str) -> String {
        let stamp = if self.reproducible {
            String::new()
        } else {
            format!(
                "<!-- generated {} -->\n",
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            )
        };
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" font-family=\"monospace\" font-size=\"12\">\n{stamp}<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n<text x=\"{MARGIN}\" y=\"24\" font-size=\"14\">{}</text>\n{}</svg>\n",
            escape(title),
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }
    fn y(&self, v: f64) -> f64 {
        H - MARGIN - (v - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn axes(svg: &mut Svg, f: &Frame, xlabel: &str, ylabel: &str) {
    svg.push(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>",
        MARGIN,
        MARGIN,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    ));
    svg.push(&format!(
        "<text x=\"{}\" y=\"{}\">{}</text>",
        W / 2.0 - 30.0,
        H - 12.0,
        escape(xlabel)
    ));
    svg.push(&format!(
        "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    ));
    for (v, label) in [(f.x0, f.x0), (f.x1, f.x1)] {
        svg.push(&format!(
            "<text x=\"{:.1}\" y=\"{}\" font-size=\"10\">{:.3}</text>",
            f.x(v) - 10.0,
            H - MARGIN + 16.0,
            label
        ));
    }
    for (v, label) in [(f.y0, f.y0), (f.y1, f.y1)] {
        svg.push(&format!(
            "<text x=\"{}\" y=\"{:.1}\" font-size=\"10\">{:.3}</text>",
            6.0,
            f.y(v) + 3.0,
            label
        ));
    }
}

fn polyline(svg: &mut Svg, pts: &[(f64, f64)], color: &str, width: f64) {
    if pts.is_empty() {
        return;
    }
    let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    svg.push(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"/>",
        path.join(" ")
    ));
}

fn value_color(v: &[f64], scale: f64) -> String {
    // Hue from the direction, lightness from the magnitude.
    let mag = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let hue = if v.len() >= 2 { v[1].atan2(v[0]).to_degrees().rem_euclid(360.0) } else if v[0] >= 0.0 { 210.0 } else { 20.0 };
    let light = 90.0 - 50.0 * (mag / scale.max(1e-12)).min(1.0);
    format!("hsl({hue:.0},70%,{light:.0}%)")
}

fn arrow(svg: &mut Svg, x: f64, y: f64, dx: f64, dy: f64) {
    let tipx = x + dx;
    let tipy = y + dy;
    let len = dx.hypot(dy);
    if len < 1e-9 {
        return;
    }
    let (ux, uy) = (dx / len, dy / len);
    let (px, py) = (-uy, ux);
    svg.push(&format!(
        "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{tipx:.2}\" y2=\"{tipy:.2}\" stroke=\"#222\" stroke-width=\"1\"/>"
    ));
    svg.push(&format!(
        "<polygon points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"#222\"/>",
        tipx,
        tipy,
        tipx - 4.0 * ux + 2.0 * px,
        tipy - 4.0 * uy + 2.0 * py,
        tipx - 4.0 * ux - 2.0 * px,
        tipy - 4.0 * uy - 2.0 * py
    ));
}

pub fn plot_polygonal(field: &PolygonalField, reproducible: bool) -> Result<String> {
    let mut svg = Svg::new(reproducible);
    match field.dim() {
        1 => {
            let [a, b] = match field.domain {
                Domain::Interval { bounds } => bounds,
                _ => unreachable!(),
            };
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut steps: Vec<(f64, f64, Vec<f64>)> = Vec::new();
            for r in &field.regions {
                if let (RegionGeometry::Interval(iv), v) = (&r.geometry, &r.value) {
                    let vals = v.eval(&[0.5 * (iv[0] + iv[1])]);
                    for c in &vals {
                        lo = lo.min(*c);
                        hi = hi.max(*c);
                    }
                    steps.push((iv[0], iv[1], vals));
                }
            }
            if !(hi > lo) {
                hi = lo + 1.0;
            }
            let pad = 0.1 * (hi - lo);
            let frame = Frame { x0: a, x1: b, y0: lo - pad, y1: hi + pad };
            axes(&mut svg, &frame, "t", "u");
            let colors = ["#1b6ca8", "#c2571a", "#3c8d40", "#7d3ca8"];
            for c in 0..field.n {
                let mut pts = Vec::new();
                for (t0, t1, vals) in &steps {
                    pts.push((frame.x(*t0), frame.y(vals[c])));
                    pts.push((frame.x(*t1), frame.y(vals[c])));
                }
                polyline(&mut svg, &pts, colors[c % colors.len()], 2.0);
            }
            Ok(svg.finish("piecewise-constant signal"))
        }
        _ => {
            let bbox = field.domain.bounding_box();
            let frame = Frame { x0: bbox[0][0], x1: bbox[0][1], y0: bbox[1][0], y1: bbox[1][1] };
            axes(&mut svg, &frame, "x1", "x2");
            let mut scale = 1e-12f64;
            for r in &field.regions {
                if let RegionGeometry::Polygon(p) = &r.geometry {
                    let c = centroid(p);
                    let v = r.value.eval(&c);
                    scale = scale.max(v.iter().map(|x| x * x).sum::<f64>().sqrt());
                }
            }
            for r in &field.regions {
                if let RegionGeometry::Polygon(p) = &r.geometry {
                    let pts: Vec<String> =
                        p.iter().map(|v| format!("{:.2},{:.2}", frame.x(v[0]), frame.y(v[1]))).collect();
                    let c = centroid(p);
                    let val = r.value.eval(&c);
                    svg.push(&format!(
                        "<polygon points=\"{}\" fill=\"{}\" stroke=\"#444\" stroke-width=\"0.8\"/>",
                        pts.join(" "),
                        value_color(&val, scale)
                    ));
                }
            }
            // Quiver arrows at region centroids (and a few interior points).
            for r in &field.regions {
                if let RegionGeometry::Polygon(p) = &r.geometry {
                    let c = centroid(p);
                    let v = r.value.eval(&c);
                    if v.len() >= 2 {
                        let len = 28.0 / scale.max(1e-12);
                        arrow(&mut svg, frame.x(c[0]), frame.y(c[1]), v[0] * len, -v[1] * len);
                    }
                }
            }
            Ok(svg.finish("piecewise field"))
        }
    }
}

fn centroid(p: &[[f64; 2]]) -> Vec<f64> {
    let m = tvk_core::field::geometry::moments(p);
    vec![m.ix / m.area, m.iy / m.area]
}

pub fn plot_grid(grid: &GridField, reproducible: bool) -> Result<String> {
    if grid.dim() != 2 {
        bail!("grid plots are planar");
    }
    let mut svg = Svg::new(reproducible);
    let bbox = grid.domain.bounding_box();
    let frame = Frame { x0: bbox[0][0], x1: bbox[0][1], y0: bbox[1][0], y1: bbox[1][1] };
    axes(&mut svg, &frame, "x1", "x2");
    // Downsample to at most 24 arrows per axis.
    let stride = [
        (grid.shape[0] / 24).max(1),
        (grid.shape[1] / 24).max(1),
    ];
    let mut scale = 1e-12f64;
    for idx in grid.active_cells() {
        scale = scale.max(grid.value(idx).iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    for i in (0..grid.shape[0]).step_by(stride[0]) {
        for j in (0..grid.shape[1]).step_by(stride[1]) {
            let idx = grid.flat_index(&[i, j]);
            if !grid.mask[idx] {
                continue;
            }
            let x = grid.cell_center(idx);
            let v = grid.value(idx);
            if v.len() >= 2 {
                let len = 10.0 / scale;
                arrow(&mut svg, frame.x(x[0]), frame.y(x[1]), v[0] * len, -v[1] * len);
            }
        }
    }
    Ok(svg.finish("grid field"))
}

pub fn plot_run(state: &GcgState, obs: Option<&Observation>, reproducible: bool) -> Result<String> {
    let mut svg = Svg::new(reproducible);
    let (a, b) = match obs.map(|o| &o.domain) {
        Some(Domain::Interval { bounds }) => (bounds[0], bounds[1]),
        _ => (0.0, 1.0),
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let grid: Vec<f64> = (0..400).map(|i| a + (b - a) * (i as f64 + 0.5) / 400.0).collect();
    for &x in &grid {
        for v in state.evaluate(x) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if let Some(o) = obs {
        for v in &o.data {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let pad = 0.1 * (hi - lo);
    let frame = Frame { x0: a, x1: b, y0: lo - pad, y1: hi + pad };
    axes(&mut svg, &frame, "t", "u");
    let n = state.constant.len();
    let colors = ["#1b6ca8", "#c2571a", "#3c8d40", "#7d3ca8"];
    for c in 0..n {
        let pts: Vec<(f64, f64)> =
            grid.iter().map(|&x| (frame.x(x), frame.y(state.evaluate(x)[c]))).collect();
        polyline(&mut svg, &pts, colors[c % colors.len()], 2.0);
    }
    if let Some(o) = obs {
        for (i, &x) in o.locations.iter().enumerate() {
            for c in 0..o.n {
                svg.push(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{}\" fill-opacity=\"0.6\"/>",
                    frame.x(x),
                    frame.y(o.data[i * o.n + c]),
                    colors[c % colors.len()]
                ));
            }
        }
    }
    // Atom markers.
    for atom in &state.atoms {
        let x = frame.x(atom.t);
        svg.push(&format!(
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>",
            MARGIN,
            H - MARGIN
        ));
    }
    Ok(svg.finish(&format!(
        "solver run: {} atoms, gap {:.2e}",
        state.atoms.len(),
        state.gap.last().copied().unwrap_or(f64::NAN)
    )))
}

pub fn plot_certificate(cert: &DecompositionCertificate, reproducible: bool) -> Result<String> {
    let mut svg = Svg::new(reproducible);
    match &cert.outcome {
        CertOutcome::Decomposable { v, w, direction, t_star, .. } => {
            // Reconstruct the base point and trace the energy along the step.
            let u0 = v.scale(0.5).add_scaled(0.5, w)?;
            let eval = EnergyEvaluator {
                spec: cert.spec.clone(),
                kind: cert.energy,
                quad: EdgeQuadrature { panels: cert.quad_panels },
            };
            let tmax = 1.3 * t_star;
            let samples = 64;
            let mut pts = Vec::with_capacity(samples);
            let mut emax = 1.0f64;
            let mut vals = Vec::with_capacity(samples);
            for i in 0..samples {
                let t = tmax * i as f64 / (samples - 1) as f64;
                let e_plus = eval.energy(&u0.add_scaled(t, direction)?)?;
                let e_minus = eval.energy(&u0.add_scaled(-t, direction)?)?;
                let e = e_plus.max(e_minus);
                emax = emax.max(e);
                vals.push((t, e));
            }
            let frame = Frame { x0: 0.0, x1: tmax, y0: 0.95, y1: emax.max(1.05) };
            axes(&mut svg, &frame, "step t", "max energy");
            for (t, e) in vals {
                pts.push((frame.x(t), frame.y(e)));
            }
            polyline(&mut svg, &pts, "#1b6ca8", 2.0);
            // Unit level and the certified step.
            polyline(&mut svg, &[(frame.x(0.0), frame.y(1.0)), (frame.x(tmax), frame.y(1.0))], "#999", 1.0);
            polyline(
                &mut svg,
                &[(frame.x(*t_star), frame.y(0.95)), (frame.x(*t_star), frame.y(emax.max(1.05)))],
                "#c2571a",
                1.0,
            );
            let kind = match cert.energy { EnergyKind::Tv => "tv", EnergyKind::Td => "td" };
            Ok(svg.finish(&format!("decomposition found ({kind}): t* = {t_star:.4}")))
        }
        CertOutcome::NoDecompositionFound { per_class, max_t_star, .. } => {
            let frame = Frame {
                x0: 0.0,
                x1: per_class.len().max(1) as f64,
                y0: 0.0,
                y1: max_t_star.max(1e-12) * 1.2,
            };
            axes(&mut svg, &frame, "direction class", "max feasible step");
            for (i, class) in per_class.iter().enumerate() {
                let x = frame.x(i as f64 + 0.2);
                let xw = frame.x(i as f64 + 0.8) - x;
                let y = frame.y(class.max_t_star);
                svg.push(&format!(
                    "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{xw:.2}\" height=\"{:.2}\" fill=\"#1b6ca8\"/>",
                    (H - MARGIN) - y
                ));
                svg.push(&format!(
                    "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"9\">{}</text>",
                    H - MARGIN + 28.0 + 10.0 * (i % 2) as f64,
                    escape(&class.class)
                ));
            }
            Ok(svg.finish(&format!("no decomposition found; max step {max_t_star:.2e}")))
        }
    }
}

pub fn plot_field(field: &AnyField, reproducible: bool) -> Result<String> {
    match field {
        AnyField::Polygonal(f) => plot_polygonal(f, reproducible),
        AnyField::Grid(g) => plot_grid(g, reproducible),
    }
}
