//! Packing and covering numbers of finite point clouds, and finite-scale
//! Minkowski dimension estimates built from them.
//!
//! Centers are always cloud points. Packings use open balls (centers at
//! distance at least `2δ`), coverings use closed balls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{invalid, DirlError, Result};
use crate::infodist::{euclidean, total_variation};

/// Slack applied to every distance comparison.
pub const DIST_TOL: f64 = 1e-12;

/// Largest cloud the exact solvers accept.
pub const EXACT_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    TotalVariation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Greedy,
    Exact,
    /// Exact when the cloud fits the exact solver, greedy otherwise.
    Auto,
}

#[derive(Clone, Debug)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    metric: Metric,
    pub provenance: String,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, metric: Metric, provenance: impl Into<String>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| invalid("empty point cloud"))?;
        if points.iter().any(|p| p.len() != dim) {
            return Err(invalid("point cloud has mixed dimensions"));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(invalid("point cloud has non-finite coordinates"));
        }
        Ok(PointCloud {
            points,
            metric,
            provenance: provenance.into(),
        })
    }

    /// `{sqrt W_x}` with the Euclidean metric.
    pub fn sqrt_embedding(w: &ChannelModel) -> Self {
        PointCloud {
            points: w
                .rows()
                .iter()
                .map(|r| r.iter().map(|p| p.sqrt()).collect())
                .collect(),
            metric: Metric::Euclidean,
            provenance: "sqrt".into(),
        }
    }

    /// `{W_x}` with total variation.
    pub fn distributions(w: &ChannelModel) -> Self {
        PointCloud {
            points: w.rows().to_vec(),
            metric: Metric::TotalVariation,
            provenance: "tv".into(),
        }
    }

    pub fn for_channel(w: &ChannelModel, metric: Metric) -> Self {
        match metric {
            Metric::Euclidean => Self::sqrt_embedding(w),
            Metric::TotalVariation => Self::distributions(w),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.points[i], &self.points[j]);
        match self.metric {
            Metric::Euclidean => euclidean(a, b),
            Metric::TotalVariation => total_variation(a, b),
        }
    }

    /// Row-major `len x len` distance table.
    pub fn distance_matrix(&self) -> Vec<f64> {
        let n = self.len();
        (0..n * n)
            .into_par_iter()
            .map(|k| self.distance(k / n, k % n))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    pub radius: f64,
    pub center_indices: Vec<usize>,
    pub count: usize,
    /// True when the count is a proven maximum.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringResult {
    pub radius: f64,
    pub center_indices: Vec<usize>,
    pub count: usize,
    /// True when the count is a proven minimum.
    pub exact: bool,
}

fn check_radius(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("radius must be positive, got {delta}")))
    }
}

fn resolve(mode: Mode, len: usize) -> Result<bool> {
    match mode {
        Mode::Greedy => Ok(false),
        Mode::Auto => Ok(len <= EXACT_LIMIT),
        Mode::Exact if len <= EXACT_LIMIT => Ok(true),
        Mode::Exact => Err(DirlError::SizeGuard {
            what: "exact packing/covering points",
            requested: len as u128,
            limit: EXACT_LIMIT as u128,
        }),
    }
}

/// Largest set of points with pairwise distance at least `2δ`.
pub fn max_packing(cloud: &PointCloud, delta: f64, mode: Mode) -> Result<PackingResult> {
    check_radius(delta)?;
    let exact = resolve(mode, cloud.len())?;
    let dm = cloud.distance_matrix();
    let greedy = greedy_packing(&dm, cloud.len(), delta);
    let centers = if exact {
        exact_packing(&dm, cloud.len(), delta, greedy)
    } else {
        greedy
    };
    Ok(PackingResult {
        radius: delta,
        count: centers.len(),
        center_indices: centers,
        exact,
    })
}

/// Fewest cloud points whose closed `δ`-balls cover the cloud.
pub fn min_covering(cloud: &PointCloud, delta: f64, mode: Mode) -> Result<CoveringResult> {
    check_radius(delta)?;
    let exact = resolve(mode, cloud.len())?;
    let dm = cloud.distance_matrix();
    let greedy = greedy_covering(&dm, cloud.len(), delta);
    let centers = if exact {
        exact_covering(&dm, cloud.len(), delta, greedy)
    } else {
        greedy
    };
    Ok(CoveringResult {
        radius: delta,
        count: centers.len(),
        center_indices: centers,
        exact,
    })
}

fn greedy_packing(dm: &[f64], n: usize, delta: f64) -> Vec<usize> {
    let mut centers = vec![0];
    let mut nearest: Vec<f64> = dm[..n].to_vec();
    loop {
        let (far, d) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        if d < 2.0 * delta - DIST_TOL {
            break;
        }
        centers.push(far);
        for (i, v) in nearest.iter_mut().enumerate() {
            *v = v.min(dm[far * n + i]);
        }
    }
    centers.sort_unstable();
    centers
}

fn exact_packing(dm: &[f64], n: usize, delta: f64, seed: Vec<usize>) -> Vec<usize> {
    let conflict: Vec<u64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && dm[i * n + j] < 2.0 * delta - DIST_TOL)
                .fold(0u64, |m, j| m | 1 << j)
        })
        .collect();
    let mut best = seed.iter().fold(0u64, |m, &i| m | 1 << i);
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    mis(&conflict, all, 0, &mut best);
    bits(best)
}

fn mis(conflict: &[u64], cand: u64, chosen: u64, best: &mut u64) {
    if chosen.count_ones() + cand.count_ones() <= best.count_ones() {
        return;
    }
    // vertex of highest degree inside the candidate set
    let mut pick = None;
    let mut pick_deg = 0;
    let mut rest = cand;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let deg = (conflict[v] & cand).count_ones();
        if deg > pick_deg {
            pick_deg = deg;
            pick = Some(v);
        }
    }
    let Some(v) = pick else {
        *best = chosen | cand;
        return;
    };
    let bit = 1u64 << v;
    mis(conflict, cand & !bit & !conflict[v], chosen | bit, best);
    mis(conflict, cand & !bit, chosen, best);
}

fn bits(mut m: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(m.count_ones() as usize);
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

fn balls(dm: &[f64], n: usize, delta: f64) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| (0..n).filter(|&j| dm[i * n + j] <= delta + DIST_TOL).collect())
        .collect()
}

fn greedy_covering(dm: &[f64], n: usize, delta: f64) -> Vec<usize> {
    let ball = balls(dm, n, delta);
    let mut covered = vec![false; n];
    let mut gain: Vec<usize> = ball.iter().map(Vec::len).collect();
    let mut left = n;
    let mut centers = Vec::new();
    while left > 0 {
        let c = (0..n).fold(0, |b, i| if gain[i] > gain[b] { i } else { b });
        centers.push(c);
        for &j in &ball[c] {
            if !covered[j] {
                covered[j] = true;
                left -= 1;
                // balls are symmetric, so the points that could cover j lose one
                for &k in &ball[j] {
                    gain[k] -= 1;
                }
            }
        }
    }
    centers.sort_unstable();
    centers
}

fn exact_covering(dm: &[f64], n: usize, delta: f64, seed: Vec<usize>) -> Vec<usize> {
    let sets: Vec<u64> = balls(dm, n, delta)
        .iter()
        .map(|b| b.iter().fold(0u64, |m, &j| m | 1 << j))
        .collect();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = seed;
    let mut chosen = Vec::new();
    cover(&sets, all, &mut chosen, &mut best);
    best.sort_unstable();
    best
}

fn cover(sets: &[u64], uncovered: u64, chosen: &mut Vec<usize>, best: &mut Vec<usize>) {
    if uncovered == 0 {
        if chosen.len() < best.len() {
            *best = chosen.clone();
        }
        return;
    }
    let widest = sets.iter().map(|s| (s & uncovered).count_ones()).max().unwrap_or(0);
    let need = uncovered.count_ones().div_ceil(widest.max(1)) as usize;
    if chosen.len() + need >= best.len() {
        return;
    }
    // branch on the uncovered point with the fewest covering candidates
    let mut target = 0;
    let mut options = u32::MAX;
    let mut rest = uncovered;
    while rest != 0 {
        let e = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let k = sets.iter().filter(|s| *s & (1 << e) != 0).count() as u32;
        if k < options {
            options = k;
            target = e;
        }
    }
    for (i, s) in sets.iter().enumerate() {
        if s & (1 << target) != 0 {
            chosen.push(i);
            cover(sets, uncovered & !s, chosen, best);
            chosen.pop();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub radii_grid: Vec<f64>,
    pub counts: Vec<usize>,
    pub log_counts: Vec<f64>,
    /// Least-squares slope of `log Γ` against `-log δ`.
    pub slope: f64,
    pub slope_lower: f64,
    pub slope_upper: f64,
    /// Root-mean-square residual of the fit.
    pub fit_residual: f64,
    /// True when every count came from the exact solver.
    pub exact: bool,
}

fn check_grid(radii: &[f64]) -> Result<()> {
    if radii.len() < 4 {
        return Err(invalid("dimension grid needs at least 4 radii"));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(invalid("dimension grid radii must be positive"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("dimension grid must be strictly decreasing"));
    }
    if radii[0] / radii[radii.len() - 1] < 4.0 {
        return Err(invalid("dimension grid must span at least two octaves"));
    }
    Ok(())
}

/// Finite-scale dimension of a fixed cloud from its covering counts.
pub fn estimate_dimension(cloud: &PointCloud, radii: &[f64], mode: Mode) -> Result<DimensionEstimate> {
    estimate_dimension_with(|_| Ok(cloud.clone()), radii, mode)
}

/// Same, with a cloud generated per radius.
pub fn estimate_dimension_with<F>(generator: F, radii: &[f64], mode: Mode) -> Result<DimensionEstimate>
where
    F: Fn(f64) -> Result<PointCloud>,
{
    check_grid(radii)?;
    let mut counts = Vec::with_capacity(radii.len());
    let mut exact = true;
    for &r in radii {
        let c = min_covering(&generator(r)?, r, mode)?;
        exact &= c.exact;
        counts.push(c.count);
    }
    let x: Vec<f64> = radii.iter().map(|r| -r.log2()).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c as f64).log2()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let fit_residual = (x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    let pair_slopes: Vec<f64> = (1..x.len())
        .map(|i| (y[i] - y[i - 1]) / (x[i] - x[i - 1]))
        .collect();
    Ok(DimensionEstimate {
        radii_grid: radii.to_vec(),
        counts,
        log_counts: y,
        slope,
        slope_lower: pair_slopes.iter().copied().fold(f64::INFINITY, f64::min),
        slope_upper: pair_slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        fit_residual,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bernoulli_family;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::new(xs.iter().map(|&x| vec![x]).collect(), Metric::Euclidean, "line").unwrap()
    }

    #[test]
    fn packing_examples() {
        let c = line(&[0.0, 1.0, 2.0]);
        for mode in [Mode::Greedy, Mode::Exact] {
            assert_eq!(max_packing(&c, 0.4, mode).unwrap().count, 3);
            let p = max_packing(&c, 0.6, mode).unwrap();
            assert_eq!(p.count, 2);
            assert_eq!(p.center_indices, vec![0, 2]);
            assert_eq!(max_packing(&c, 1.5, mode).unwrap().count, 1);
        }
        assert!(max_packing(&c, 0.0, Mode::Greedy).is_err());
    }

    #[test]
    fn covering_examples() {
        let c = line(&[0.0, 1.0, 2.0]);
        let r = min_covering(&c, 1.0, Mode::Exact).unwrap();
        assert_eq!((r.count, r.center_indices.clone()), (1, vec![1]));
        assert_eq!(min_covering(&c, 1.0, Mode::Greedy).unwrap().center_indices, vec![1]);
        assert_eq!(min_covering(&c, 0.4, Mode::Exact).unwrap().count, 3);
    }

    #[test]
    fn bernoulli_tv_cover() {
        let w = bernoulli_family(2.0, 12).unwrap();
        let cloud = PointCloud::distributions(&w);
        let r = min_covering(&cloud, 1.0 / 16.0, Mode::Exact).unwrap();
        assert!(r.exact);
        assert_eq!(r.count, 4);
        let lo = (16.0f64 / 3.0).log2();
        assert!(lo <= r.count as f64 && r.count as f64 <= 5.0);
    }

    #[test]
    fn exact_size_guard() {
        let xs: Vec<f64> = (0..65).map(f64::from).collect();
        let c = line(&xs);
        assert!(max_packing(&c, 0.3, Mode::Exact).unwrap_err().is_size_guard());
        assert!(min_covering(&c, 0.3, Mode::Exact).unwrap_err().is_size_guard());
        assert!(!max_packing(&c, 0.3, Mode::Auto).unwrap().exact);
        let xs: Vec<f64> = (0..64).map(f64::from).collect();
        assert_eq!(max_packing(&line(&xs), 0.3, Mode::Exact).unwrap().count, 64);
    }

    #[test]
    fn interval_dimension() {
        let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let radii: Vec<f64> = (2..=8).map(|k| 0.5f64.powi(k)).collect();
        let d = estimate_dimension(&line(&xs), &radii, Mode::Auto).unwrap();
        assert!((d.slope - 1.0).abs() <= 0.1, "{d:?}");
        assert!(d.counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn point_dimension() {
        let radii = [0.5, 0.25, 0.125, 0.0625];
        let d = estimate_dimension(&line(&[0.3]), &radii, Mode::Auto).unwrap();
        assert_eq!(d.slope, 0.0);
        assert!(estimate_dimension(&line(&[0.3]), &radii[..3], Mode::Auto).is_err());
        assert!(estimate_dimension(&line(&[0.3]), &[0.5, 0.4, 0.3, 0.2], Mode::Auto).is_err());
        assert!(estimate_dimension(&line(&[0.3]), &[0.5, 0.6, 0.1, 0.05], Mode::Auto).is_err());
    }

    #[test]
    fn greedy_packing_covers_at_twice_radius() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 41) as f64 / 7.0).collect();
        let c = line(&xs);
        for delta in [0.1, 0.3, 0.7, 1.9] {
            let p = max_packing(&c, delta, Mode::Greedy).unwrap();
            for i in 0..c.len() {
                assert!(p.center_indices.iter().any(|&j| c.distance(i, j) <= 2.0 * delta + DIST_TOL));
            }
        }
    }
}
