//! Static line plots of bound curves.

use std::fmt::Write;

use dirl::bounds::BoundCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XAxis {
    Log10N,
    Log10E,
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn y_of(p: &dirl::bounds::BoundPoint) -> f64 {
    p.normalized_value.unwrap_or(p.value_bits)
}

fn series(curves: &[BoundCurve], axis: XAxis) -> Vec<Series> {
    let mut out = Vec::new();
    for c in curves {
        let mut groups: Vec<(Option<usize>, Vec<(f64, f64)>)> = Vec::new();
        for p in &c.points {
            let (key, x) = match axis {
                XAxis::Log10N => (None, p.n.map(|n| (n as f64).log10())),
                XAxis::Log10E => (p.n, p.e.map(f64::log10)),
            };
            let (Some(x), y) = (x, y_of(p)) else { continue };
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            match groups.iter_mut().find(|g| g.0 == key) {
                Some(g) => g.1.push((x, y)),
                None => groups.push((key, vec![(x, y)])),
            }
        }
        for (key, mut pts) in groups {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let label = match key {
                Some(n) => format!("{} n={n}", c.formula_id.as_str()),
                None => c.formula_id.as_str().to_string(),
            };
            out.push(Series { label, points: pts });
        }
    }
    out
}

fn extent(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Path data of each series, in drawing order.
pub fn path_data(curves: &[BoundCurve], axis: XAxis) -> Vec<String> {
    let all = series(curves, axis);
    let (x0, x1) = extent(all.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = extent(all.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    all.iter()
        .map(|s| {
            let mut d = String::new();
            for (i, &(x, y)) in s.points.iter().enumerate() {
                let cmd = if i == 0 { 'M' } else { 'L' };
                let _ = write!(d, "{cmd}{:.2},{:.2} ", sx(x), sy(y));
            }
            d.trim_end().to_string()
        })
        .collect()
}

pub fn render(curves: &[BoundCurve], axis: XAxis) -> String {
    let labels: Vec<String> = series(curves, axis).into_iter().map(|s| s.label).collect();
    let paths = path_data(curves, axis);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{m},{m} L{m},{b} L{r},{b}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let xlabel = match axis {
        XAxis::Log10N => "log10 n",
        XAxis::Log10E => "log10 E",
    };
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{xlabel}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    for (i, (d, label)) in paths.iter().zip(&labels).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(out, r#"<path class="series" d="{d}" stroke="{color}" fill="none"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{label}</text>"#,
            MARGIN + 10.0,
            MARGIN + 14.0 * (i as f64 + 1.0)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use dirl::bounds::{sweep, FormulaId, Grid};

    #[test]
    fn one_path_per_formula() {
        let grid = Grid {
            ns: vec![1000, 10_000, 100_000],
            ..Grid::default()
        };
        let a = sweep(FormulaId::Cor2Upper, &grid, None).unwrap();
        let b = sweep(FormulaId::Thm6Stein, &grid, None).unwrap();
        let paths = path_data(&[a, b], XAxis::Log10N);
        assert_eq!(paths.len(), 2);
        assert!(paths.iter().all(|p| p.starts_with('M') && p.matches('L').count() == 2));
    }

    #[test]
    fn empty_curves_render() {
        let svg = render(&[], XAxis::Log10E);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }
}
