//! Geometric experiments: ball-volume exponent, annulus-crossing distance,
//! ball-swallowing ratio, and min/max ball diameters.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::metric::{self, MetricBall, MetricGraph};
use crate::rng::RngSeed;
use crate::stats;
use crate::voronoi;

use super::{ci_from_samples, Ensemble, Estimate, ExperimentOutput, ExperimentReport};

/// Graph distance from the window center vertex to the window boundary,
/// with the full label array for reuse.
fn center_labels(g: &MetricGraph) -> (metric::Labels, f64) {
    let grid = g.grid;
    let center = grid.center_vertex();
    let labels = metric::dijkstra(g, &[(center, 0)], None, None, None);
    let mut d_star = f64::INFINITY;
    for v in 0..grid.num_vertices() {
        if grid.is_boundary_vertex(v) {
            d_star = d_star.min(labels.dist[v]);
        }
    }
    (labels, d_star)
}

fn ball_from_labels(grid: Grid, center: usize, labels: &metric::Labels, s: f64) -> MetricBall {
    let members: Vec<(usize, f64)> = (0..grid.num_vertices())
        .filter(|&v| labels.dist[v] <= s)
        .map(|v| (v, labels.dist[v]))
        .collect();
    MetricBall { grid, center, radius: s, members }
}

/// Least-squares slope of log ball volume against log radius, averaged over
/// replicates; radii form a per-replicate geometric ladder spanning two
/// octaves below 0.7x the center-to-boundary distance.
pub fn volume_exponent(
    e: &Ensemble,
    replicates: usize,
    slope_band: (f64, f64),
    seed: RngSeed,
) -> Result<ExperimentOutput> {
    let start = std::time::Instant::now();
    if e.torus {
        return Err(Error::RequiresPlaneWindow);
    }
    let results: Vec<Result<(Option<f64>, usize)>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let r = e.replicate(seed, rep)?;
            let grid = r.graph.grid;
            let center = grid.center_vertex();
            let (labels, d_star) = center_labels(&r.graph);
            let s_max = 0.7 * d_star;
            let mut lx = Vec::new();
            let mut ly = Vec::new();
            let mut excluded = 0usize;
            for j in 0..=8 {
                let s = s_max * 2f64.powf(-(j as f64) / 4.0);
                let ball = ball_from_labels(grid, center, &labels, s);
                if ball.members.len() < 50
                    || ball.members.iter().any(|&(v, _)| grid.is_boundary_vertex(v))
                {
                    excluded += 1;
                    continue;
                }
                let vol = metric::ball_volume(&r.measure, &ball)?;
                lx.push(s.ln());
                ly.push(vol.ln());
            }
            if lx.len() < 4 {
                return Ok((None, excluded + 1));
            }
            let (slope, _) = stats::linreg_slope(&lx, &ly);
            Ok((Some(slope), excluded))
        })
        .collect();
    let mut slopes = Vec::new();
    let mut excluded = 0usize;
    for r in results {
        let (s, ex) = r?;
        excluded += ex;
        if let Some(s) = s {
            slopes.push(s);
        }
    }
    let est = ci_from_samples("slope", &slopes);
    let pass = est.value >= slope_band.0 && est.value <= slope_band.1;
    let mut parameters = BTreeMap::new();
    e.describe(&mut parameters);
    parameters.insert("slope_band".into(), format!("{:?}", slope_band));
    let mut report = ExperimentReport {
        name: "volume_exponent".into(),
        parameters,
        replicates: slopes.len(),
        excluded,
        estimates: vec![est],
        pass,
        seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    report.apply_exclusion_policy(replicates * 9);
    Ok(ExperimentOutput { report, columns: vec![("slope".into(), slopes)] })
}

/// Distribution of the graph distance from the radius-rho disk around the
/// window center to the window boundary; positivity is the claim under test.
pub fn annulus_crossing(
    e: &Ensemble,
    rho: f64,
    replicates: usize,
    seed: RngSeed,
) -> Result<ExperimentOutput> {
    let start = std::time::Instant::now();
    if e.torus || !(rho > 0.0 && rho < 0.5) {
        return Err(Error::BadParameter);
    }
    let grid = e.grid()?;
    let l = grid.len;
    let cx = grid.origin.0 + l / 2.0;
    let cy = grid.origin.1 + l / 2.0;
    let inner: Vec<usize> = (0..grid.num_vertices())
        .filter(|&v| {
            let (x, y) = grid.pos(v);
            (x - cx).hypot(y - cy) <= rho * l
        })
        .collect();
    let outer: Vec<usize> = (0..grid.num_vertices())
        .filter(|&v| grid.is_boundary_vertex(v))
        .collect();
    let distances: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let f = e.field(seed, rep)?;
            let g = crate::metric::build_metric_graph(&f)?;
            metric::annulus_distance(&g, &inner, &outer)
        })
        .collect::<Result<Vec<f64>>>()?;
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let q001 = stats::quantile(&distances, 0.001);
    let q01 = stats::quantile(&distances, 0.01);
    let pass = min > 0.0;
    let mut parameters = BTreeMap::new();
    e.describe(&mut parameters);
    parameters.insert("rho".into(), rho.to_string());
    let report = ExperimentReport {
        name: "annulus_crossing".into(),
        parameters,
        replicates,
        excluded: 0,
        estimates: vec![
            Estimate::point("min", min),
            Estimate::point("q0.001", q001),
            Estimate::point("q0.01", q01),
        ],
        pass,
        seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutput { report, columns: vec![("distance".into(), distances)] })
}

/// Squared Euclidean distance transform (Felzenszwalb-Huttenlocher), 1D
/// lower-envelope pass.
fn dt1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                break;
            }
        }
        if s > z[k] {
            k += 1;
        }
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        out[q] = (q as f64 - p as f64) * (q as f64 - p as f64) + f[p];
    }
}

/// Largest inscribed Euclidean radius of a member set, conservatively, in
/// mesh units: max over members of (distance to nearest complement vertex)
/// minus 1/sqrt(2), never overestimating the continuum inscribed radius of
/// the union of mesh squares. The bounding-box frame counts as complement.
pub(crate) fn inscribed_radius_mesh_units(grid: Grid, members: &[(usize, f64)]) -> f64 {
    let coords: Vec<(usize, usize)> = members.iter().map(|&(v, _)| grid.coords(v)).collect();
    let (mut i0, mut i1, mut j0, mut j1) = (usize::MAX, 0usize, usize::MAX, 0usize);
    for &(i, j) in &coords {
        i0 = i0.min(i);
        i1 = i1.max(i);
        j0 = j0.min(j);
        j1 = j1.max(j);
    }
    let w = i1 - i0 + 3; // one-cell complement frame on each side
    let h = j1 - j0 + 3;
    const BIG: f64 = 1e18;
    let mut fgrid = vec![0.0f64; w * h];
    for &(i, j) in &coords {
        fgrid[(j - j0 + 1) * w + (i - i0 + 1)] = BIG;
    }
    // Column pass then row pass.
    let mut tmp = vec![0.0f64; w * h];
    let mut col_in = vec![0.0f64; h];
    let mut col_out = vec![0.0f64; h];
    for i in 0..w {
        for j in 0..h {
            col_in[j] = fgrid[j * w + i];
        }
        dt1d(&col_in, &mut col_out);
        for j in 0..h {
            tmp[j * w + i] = col_out[j];
        }
    }
    let mut row_out = vec![0.0f64; w];
    let mut best = 0.0f64;
    for j in 0..h {
        dt1d(&tmp[j * w..(j + 1) * w], &mut row_out);
        for &d2 in &row_out {
            best = best.max(d2);
        }
    }
    (best.sqrt() - std::f64::consts::FRAC_1_SQRT_2).max(0.0)
}

/// Ratio of inscribed Euclidean radius to Euclidean diameter for the metric
/// ball B_H of each resolvable cell (>= 9 vertices), over the ensemble.
pub fn swallow_statistic(
    e: &Ensemble,
    replicates: usize,
    max_cells_per_rep: usize,
    seed: RngSeed,
) -> Result<ExperimentOutput> {
    let start = std::time::Instant::now();
    let results: Vec<Result<Vec<f64>>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let r = match e.replicate(seed, rep) {
                Ok(r) => r,
                Err(Error::EmptyPointProcess) | Err(Error::TooManyPoints { .. }) => {
                    return Ok(Vec::new())
                }
                Err(err) => return Err(err),
            };
            let t = match voronoi::tessellate(&r.graph, &r.points) {
                Ok(t) => t,
                Err(Error::EmptyPointProcess) => return Ok(Vec::new()),
                Err(err) => return Err(err),
            };
            let grid = r.graph.grid;
            let center = grid.center_vertex();
            // Prefer cells near the window center (less boundary truncation).
            let mut order: Vec<u32> = (0..t.num_cells() as u32)
                .filter(|&c| t.cells[c as usize].len() >= 9)
                .collect();
            order.sort_by(|&a, &b| {
                let da = grid.euclid(center, t.center_vertex(a));
                let db = grid.euclid(center, t.center_vertex(b));
                da.total_cmp(&db).then(a.cmp(&b))
            });
            order.truncate(max_cells_per_rep);
            let mesh = grid.mesh();
            let mut ratios = Vec::with_capacity(order.len());
            for &c in &order {
                let verts = &t.cells[c as usize];
                let bh_radius = verts
                    .iter()
                    .map(|&v| t.owner_dist[v])
                    .fold(0.0f64, f64::max);
                let ball = metric::metric_ball(&r.graph, t.center_vertex(c), bh_radius);
                let insc = inscribed_radius_mesh_units(grid, &ball.members) * mesh;
                let pts: Vec<(f64, f64)> = ball
                    .members
                    .iter()
                    .map(|&(v, _)| grid.displacement(t.center_vertex(c), v))
                    .collect();
                let hull = voronoi::convex_hull(&pts);
                let mut d2 = 0.0f64;
                for a in 0..hull.len() {
                    for b in (a + 1)..hull.len() {
                        let dx = hull[a].0 - hull[b].0;
                        let dy = hull[a].1 - hull[b].1;
                        d2 = d2.max(dx * dx + dy * dy);
                    }
                }
                let diam = d2.sqrt() + std::f64::consts::SQRT_2 * mesh;
                ratios.push(insc / diam);
            }
            Ok(ratios)
        })
        .collect();
    let mut ratios = Vec::new();
    let mut excluded = 0usize;
    for r in results {
        let r = r?;
        if r.is_empty() {
            excluded += 1;
        } else {
            ratios.extend(r);
        }
    }
    if ratios.is_empty() {
        return Err(Error::BadParameter);
    }
    let q01 = stats::quantile(&ratios, 0.01);
    let q10 = stats::quantile(&ratios, 0.10);
    let max = ratios.iter().copied().fold(0.0f64, f64::max);
    let pass = q01 > 0.02 && max <= 0.5;
    let mut parameters = BTreeMap::new();
    e.describe(&mut parameters);
    let mut report = ExperimentReport {
        name: "swallow_statistic".into(),
        parameters,
        replicates: replicates - excluded,
        excluded,
        estimates: vec![
            Estimate::point("q0.01", q01),
            Estimate::point("q0.10", q10),
            Estimate::point("max", max),
            Estimate::point("samples", ratios.len() as f64),
        ],
        pass,
        seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    report.apply_exclusion_policy(replicates);
    Ok(ExperimentOutput { report, columns: vec![("ratio".into(), ratios)] })
}

/// Regression exponents of the min and max Euclidean diameter of radius-eps
/// metric balls against eps, over a two-octave ladder and several centers.
pub fn min_max_ball_diam(
    e: &Ensemble,
    replicates: usize,
    seed: RngSeed,
) -> Result<ExperimentOutput> {
    let start = std::time::Instant::now();
    if e.torus {
        return Err(Error::RequiresPlaneWindow);
    }
    let grid = e.grid()?;
    let n = grid.n;
    let centers: Vec<usize> = vec![
        grid.idx(n / 2, n / 2),
        grid.idx(n / 2 - n / 6, n / 2),
        grid.idx(n / 2 + n / 6, n / 2),
        grid.idx(n / 2, n / 2 - n / 6),
        grid.idx(n / 2, n / 2 + n / 6),
    ];
    let results: Vec<Result<(Option<(f64, f64)>, bool, usize)>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let r = e.replicate(seed, rep)?;
            let g = &r.graph;
            let labels: Vec<metric::Labels> = centers
                .iter()
                .map(|&c| metric::dijkstra(g, &[(c, 0)], None, None, None))
                .collect();
            // Scale the eps ladder to the tightest center-to-boundary gap.
            let mut d_star = f64::INFINITY;
            for lab in &labels {
                for v in 0..grid.num_vertices() {
                    if grid.is_boundary_vertex(v) {
                        d_star = d_star.min(lab.dist[v]);
                    }
                }
            }
            let mut lx = Vec::new();
            let mut lmin = Vec::new();
            let mut lmax = Vec::new();
            let mut pointwise_ok = true;
            let mut excluded = 0usize;
            for j in 0..=4 {
                let eps = 0.6 * d_star * 2f64.powf(-(j as f64) / 2.0);
                let mut dmin = f64::INFINITY;
                let mut dmax: f64 = 0.0;
                let mut any = false;
                for (ci, lab) in labels.iter().enumerate() {
                    let ball = ball_from_labels(grid, centers[ci], lab, eps);
                    if ball.members.len() < 5 {
                        excluded += 1;
                        continue;
                    }
                    let pts: Vec<(f64, f64)> = ball
                        .members
                        .iter()
                        .map(|&(v, _)| grid.displacement(centers[ci], v))
                        .collect();
                    let hull = voronoi::convex_hull(&pts);
                    let mut d2 = 0.0f64;
                    for a in 0..hull.len() {
                        for b in (a + 1)..hull.len() {
                            let dx = hull[a].0 - hull[b].0;
                            let dy = hull[a].1 - hull[b].1;
                            d2 = d2.max(dx * dx + dy * dy);
                        }
                    }
                    let diam = d2.sqrt();
                    dmin = dmin.min(diam);
                    dmax = dmax.max(diam);
                    any = true;
                }
                if any {
                    if dmax < dmin {
                        pointwise_ok = false;
                    }
                    lx.push(eps.ln());
                    lmin.push(dmin.ln());
                    lmax.push(dmax.ln());
                }
            }
            if lx.len() < 4 {
                return Ok((None, pointwise_ok, excluded + 1));
            }
            let (smin, _) = stats::linreg_slope(&lx, &lmin);
            let (smax, _) = stats::linreg_slope(&lx, &lmax);
            Ok((Some((smin, smax)), pointwise_ok, excluded))
        })
        .collect();
    let mut min_exps = Vec::new();
    let mut max_exps = Vec::new();
    let mut pointwise_ok = true;
    let mut excluded = 0usize;
    for r in results {
        let (exps, ok, ex) = r?;
        pointwise_ok &= ok;
        excluded += ex;
        if let Some((a, b)) = exps {
            min_exps.push(a);
            max_exps.push(b);
        }
    }
    let emin = ci_from_samples("min_diam_exponent", &min_exps);
    let emax = ci_from_samples("max_diam_exponent", &max_exps);
    let pass = pointwise_ok
        && emin.value.is_finite()
        && emax.value.is_finite()
        && emin.value > 0.0
        && emax.value > 0.0;
    let mut parameters = BTreeMap::new();
    e.describe(&mut parameters);
    let mut report = ExperimentReport {
        name: "min_max_ball_diam".into(),
        parameters,
        replicates: min_exps.len(),
        excluded,
        estimates: vec![emin, emax],
        pass,
        seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    report.apply_exclusion_policy(replicates * 5 * 5);
    Ok(ExperimentOutput {
        report,
        columns: vec![
            ("min_exponent".into(), min_exps),
            ("max_exponent".into(), max_exps),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::metric::build_metric_graph;

    #[test]
    fn flat_volume_slope_is_two() {
        let e = Ensemble::flat(128, false, 1.0);
        let out = volume_exponent(&e, 3, (1.85, 2.15), RngSeed::new(1, 0)).unwrap();
        let slope = out.report.estimates[0].value;
        assert!((slope - 2.0).abs() < 0.15, "slope = {slope}");
        assert!(out.report.pass);
    }

    #[test]
    fn volume_exponent_shift_invariant() {
        // Shifting the field scales radii and volumes but not the slope.
        let e = Ensemble { n: 96, torus: false, flat: false, t_min: 0.1, lambda: 1.0 };
        let a = volume_exponent(&e, 2, (0.0, 10.0), RngSeed::new(77, 0)).unwrap();
        let b = volume_exponent(&e, 2, (0.0, 10.0), RngSeed::new(77, 0)).unwrap();
        assert_eq!(
            a.report.estimates[0].value,
            b.report.estimates[0].value,
            "deterministic given the seed"
        );
    }

    #[test]
    fn flat_annulus_distance_matches_geometry() {
        let e = Ensemble::flat(96, false, 1.0);
        let out = annulus_crossing(&e, 0.25, 3, RngSeed::new(2, 0)).unwrap();
        let l = 1.0;
        let expect = (0.5 - 0.25) * l;
        let mesh = 1.0 / 95.0;
        for &d in &out.columns[0].1 {
            assert!((d - expect).abs() <= 2.0 * mesh * std::f64::consts::SQRT_2 + 1e-12);
        }
        assert!(out.report.pass);
    }

    #[test]
    fn edt_inscribed_radius_on_blocks() {
        // 3x3 block: continuum inscribed radius of the 3x3 square union is
        // 1.5; the conservative estimate sits in (1.0, 1.5].
        let grid = Grid::unit(16).unwrap();
        let members: Vec<(usize, f64)> = (5..8)
            .flat_map(|i| (5..8).map(move |j| (grid.idx(i, j), 0.0)))
            .collect();
        let r = inscribed_radius_mesh_units(grid, &members);
        assert!(r > 1.0 && r <= 1.5, "r = {r}");
        // Single vertex: 1 - 1/sqrt(2).
        let r1 = inscribed_radius_mesh_units(grid, &[(grid.idx(3, 3), 0.0)]);
        assert!((r1 - (1.0 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn flat_single_ball_swallow_ratio() {
        // L1 ball: inscribed radius s/sqrt(2), diameter 2s; ratio near
        // 1/(2 sqrt 2), never above 1/2.
        let grid = Grid::unit(129).unwrap();
        let g = build_metric_graph(&Field::constant(grid, 0.0)).unwrap();
        let center = grid.center_vertex();
        let s = 0.3;
        let ball = metric::metric_ball(&g, center, s);
        let mesh = grid.mesh();
        let insc = inscribed_radius_mesh_units(grid, &ball.members) * mesh;
        let pts: Vec<(f64, f64)> = ball
            .members
            .iter()
            .map(|&(v, _)| grid.displacement(center, v))
            .collect();
        let hull = voronoi::convex_hull(&pts);
        let mut d2 = 0.0f64;
        for a in 0..hull.len() {
            for b in (a + 1)..hull.len() {
                let dx = hull[a].0 - hull[b].0;
                let dy = hull[a].1 - hull[b].1;
                d2 = d2.max(dx * dx + dy * dy);
            }
        }
        let diam = d2.sqrt() + std::f64::consts::SQRT_2 * mesh;
        let ratio = insc / diam;
        let ideal = 1.0 / (2.0 * std::f64::consts::SQRT_2);
        assert!(ratio <= 0.5);
        assert!((ratio - ideal).abs() < 4.0 * mesh / s, "ratio = {ratio}");
    }

    #[test]
    fn swallow_flat_ensemble_sane() {
        let e = Ensemble::flat(96, false, 20.0);
        let out = swallow_statistic(&e, 4, 4, RngSeed::new(3, 0)).unwrap();
        let max = out
            .report
            .estimates
            .iter()
            .find(|e| e.label == "max")
            .unwrap()
            .value;
        assert!(max <= 0.5);
        assert!(out.columns[0].1.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn flat_min_max_diam_exponents_near_one() {
        let e = Ensemble::flat(128, false, 1.0);
        let out = min_max_ball_diam(&e, 3, RngSeed::new(4, 0)).unwrap();
        for est in &out.report.estimates {
            assert!((est.value - 1.0).abs() < 0.1, "{}: {}", est.label, est.value);
        }
        assert!(out.report.pass);
    }
}
