//! Walk-based experiments: exit-law and embedding-displacement trends in
//! the Poisson intensity, and the isotropy diagnostic for the increment
//! covariance.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::sample_poisson;
use crate::rng::RngSeed;
use crate::stats;
use crate::tutte;
use crate::voronoi;
use crate::walk::{self, PlanarCurve};
#[cfg(test)]
use crate::walk::CurveSource;

use super::{Ensemble, Estimate, ExperimentOutput, ExperimentReport};

fn subsample(c: &PlanarCurve, max: usize) -> PlanarCurve {
    if c.vertices.len() <= max {
        return c.clone();
    }
    let stride = c.vertices.len().div_ceil(max);
    let mut v: Vec<(f64, f64)> = c.vertices.iter().copied().step_by(stride).collect();
    if *v.last().unwrap() != *c.vertices.last().unwrap() {
        v.push(*c.vertices.last().unwrap());
    }
    PlanarCurve { vertices: v, source: c.source }
}

#[derive(Debug, Clone, Copy)]
struct TrendPoint {
    ks: f64,
    displacement: f64,
    frechet: f64,
}

/// Per-intensity medians over replicates of (a) the exit-angle KS distance
/// from uniform, (b) the Tutte-vs-a-priori mean displacement, and (c) the
/// walk-vs-Brownian Frechet distance, on the disk ensemble. The trend
/// claim is that (a) and (b) are non-increasing in lambda.
pub fn walk_trend(
    e: &Ensemble,
    lambdas: &[f64],
    replicates: usize,
    walks: usize,
    seed: RngSeed,
) -> Result<ExperimentOutput> {
    let start = std::time::Instant::now();
    if e.torus || lambdas.len() < 2 {
        return Err(Error::BadParameter);
    }
    let grid = e.grid()?;
    let l = grid.len;
    let cx = grid.origin.0 + l / 2.0;
    let cy = grid.origin.1 + l / 2.0;
    let radius = 0.45 * l;
    let apriori = move |p: (f64, f64)| ((p.0 - cx) / radius, (p.1 - cy) / radius);
    let frechet_pairs = 12usize.min(walks);
    let mut ks_medians = Vec::new();
    let mut disp_medians = Vec::new();
    let mut frechet_medians = Vec::new();
    let mut excluded_total = 0usize;
    let mut columns = Vec::new();
    for (li, &lambda) in lambdas.iter().enumerate() {
        let results: Vec<Result<Option<TrendPoint>>> = (0..replicates as u64)
            .into_par_iter()
            .map(|rep| {
                let key = (li as u64) * replicates as u64 + rep;
                let en = Ensemble { lambda, ..*e };
                let r = match en.replicate(seed, key) {
                    Ok(r) => r,
                    Err(Error::EmptyPointProcess) | Err(Error::TooManyPoints { .. }) => {
                        return Ok(None)
                    }
                    Err(err) => return Err(err),
                };
                let t = match voronoi::tessellate_disk(&r.graph, &r.points, (cx, cy), radius) {
                    Ok(t) => t,
                    Err(Error::EmptyPointProcess) => return Ok(None),
                    Err(err) => return Err(err),
                };
                let nb = t.boundary_cells.iter().filter(|&&b| b).count();
                if t.num_cells() < 5 || nb < 3 || nb == t.num_cells() {
                    return Ok(None);
                }
                let start_v = grid.center_vertex();
                if t.owner[start_v] == crate::metric::NO_OWNER
                    || t.boundary_cells[t.owner[start_v] as usize]
                {
                    return Ok(None);
                }
                // Exit angles.
                let mut angles = Vec::with_capacity(walks);
                let mut frechets = Vec::with_capacity(frechet_pairs);
                for k in 0..walks as u64 {
                    let ws = RngSeed::new(seed.master, seed.stream ^ 0xA1 ^ (key << 20) ^ (k << 1));
                    let p = walk::run_walk(&t, start_v, 5_000_000, true, ws)?;
                    angles.push(walk::exit_angle(&p, (cx, cy))?);
                    if (k as usize) < frechet_pairs {
                        let bs =
                            RngSeed::new(seed.master, seed.stream ^ 0xB2 ^ (key << 20) ^ (k << 1));
                        let dt = (radius / 30.0) * (radius / 30.0);
                        let start_pos = grid.pos(start_v);
                        let b = walk::sample_brownian(start_pos, dt, (cx, cy), radius, bs)?;
                        let wc = subsample(&p.curve(), 200);
                        let bc = subsample(&b, 200);
                        frechets.push(walk::cmp_distance(&wc, &bc));
                    }
                }
                let ks = stats::ks_uniform(&angles, TAU);
                // Tutte displacement: z0 from an extra measure draw.
                let mut z0 = t.owner[start_v];
                for attempt in 0..20u64 {
                    let es = RngSeed::new(
                        seed.master,
                        seed.stream ^ 0xC3 ^ (key << 20) ^ (attempt << 1),
                    );
                    if let Ok(extra) = sample_poisson(&r.measure, 1.0 / r.measure.total, es) {
                        if let Some(&(v, _)) = extra.points.first() {
                            let o = t.owner[v];
                            if o != crate::metric::NO_OWNER && !t.boundary_cells[o as usize] {
                                z0 = o;
                                break;
                            }
                        }
                    }
                }
                let x0 = (0..t.num_cells() as u32)
                    .find(|&c| t.boundary_cells[c as usize])
                    .expect("boundary cells exist");
                let emb = tutte::tutte_embedding(&t, z0, x0, tutte::DEFAULT_TOL)?;
                if !tutte::max_principle_holds(&emb, &t) {
                    return Err(Error::SolverStalled { target: 0.0, achieved: f64::NAN });
                }
                // The embedding's limit is the chart followed by the disk
                // automorphism sending z0 to the origin; compare against
                // that, modulo the free rotation.
                let mob = tutte::mobius_to_origin(apriori(t.points.points[z0 as usize].1));
                let chart = move |p| mob(apriori(p));
                let emb = tutte::align_rotation(&emb, &t, chart);
                let (_, mean_disp) = tutte::embedding_displacement(&emb, &t, chart);
                Ok(Some(TrendPoint { ks, displacement: mean_disp, frechet: stats::median(&frechets) }))
            })
            .collect();
        let mut ks_col = Vec::new();
        let mut disp_col = Vec::new();
        let mut fre_col = Vec::new();
        for r in results {
            match r? {
                Some(p) => {
                    ks_col.push(p.ks);
                    disp_col.push(p.displacement);
                    fre_col.push(p.frechet);
                }
                None => excluded_total += 1,
            }
        }
        if ks_col.is_empty() {
            return Err(Error::BadParameter);
        }
        ks_medians.push(stats::median(&ks_col));
        disp_medians.push(stats::median(&disp_col));
        frechet_medians.push(stats::median(&fre_col));
        columns.push((format!("ks_lambda{li}"), ks_col));
        columns.push((format!("disp_lambda{li}"), disp_col));
        columns.push((format!("frechet_lambda{li}"), fre_col));
    }
    let non_increasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] <= w[0]);
    let pass = non_increasing(&ks_medians) && non_increasing(&disp_medians);
    let mut parameters = BTreeMap::new();
    e.describe(&mut parameters);
    parameters.insert("lambdas".into(), format!("{lambdas:?}"));
    parameters.insert("walks".into(), walks.to_string());
    let mut estimates = Vec::new();
    for i in 0..lambdas.len() {
        estimates.push(Estimate::point(&format!("ks_median_{i}"), ks_medians[i]));
        estimates.push(Estimate::point(&format!("disp_median_{i}"), disp_medians[i]));
        estimates.push(Estimate::point(&format!("frechet_median_{i}"), frechet_medians[i]));
    }
    let mut report = ExperimentReport {
        name: "walk_trend".into(),
        parameters,
        replicates,
        excluded: excluded_total,
        estimates,
        pass,
        seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    report.apply_exclusion_policy(replicates * lambdas.len());
    Ok(ExperimentOutput { report, columns })
}

/// Covariance of embedded walk increments on the torus ensemble. The
/// isotropy claim: off-diagonal/diagonal ratio small, diagonal ratio near 1.
pub fn isotropy(
    e: &Ensemble,
    replicates: usize,
    steps_per_rep: usize,
    off_tol: f64,
    diag_band: (f64, f64),
    seed: RngSeed,
) -> Result<ExperimentOutput> {
    let start = std::time::Instant::now();
    if !e.torus {
        return Err(Error::RequiresTorus);
    }
    let sums: Vec<Result<Option<[f64; 6]>>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let r = match e.replicate(seed, rep) {
                Ok(r) => r,
                Err(Error::EmptyPointProcess) | Err(Error::TooManyPoints { .. }) => {
                    return Ok(None)
                }
                Err(err) => return Err(err),
            };
            let t = match voronoi::tessellate(&r.graph, &r.points) {
                Ok(t) => t,
                Err(Error::EmptyPointProcess) => return Ok(None),
                Err(err) => return Err(err),
            };
            if t.num_cells() < 2 {
                return Ok(None);
            }
            let ws = RngSeed::new(seed.master, seed.stream ^ 0xD4 ^ (rep << 8));
            let p = walk::run_walk(&t, 0, steps_per_rep, false, ws)?;
            let incs = walk::embedded_increments(&t, &p);
            let mut s = [0.0f64; 6];
            for (dx, dy) in incs {
                s[0] += dx;
                s[1] += dy;
                s[2] += dx * dx;
                s[3] += dy * dy;
                s[4] += dx * dy;
                s[5] += 1.0;
            }
            Ok(Some(s))
        })
        .collect();
    // Normalize each replicate's covariance by its trace before pooling:
    // the masses (and hence step sizes) are heavy-tailed across fields, and
    // raw pooling lets a handful of large-cell replicates dominate. The
    // isotropy claim is about the shape of the covariance, not its scale.
    let mut acc = [0.0f64; 3];
    let mut total_steps = 0.0f64;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for s in sums {
        match s? {
            Some(s) => {
                let n = s[5];
                if n < 2.0 {
                    excluded += 1;
                    continue;
                }
                let mx = s[0] / n;
                let my = s[1] / n;
                let cxx = s[2] / n - mx * mx;
                let cyy = s[3] / n - my * my;
                let cxy = s[4] / n - mx * my;
                let tr = 0.5 * (cxx + cyy);
                if !(tr > 0.0) {
                    excluded += 1;
                    continue;
                }
                acc[0] += cxx / tr;
                acc[1] += cyy / tr;
                acc[2] += cxy / tr;
                total_steps += n;
                used += 1;
            }
            None => excluded += 1,
        }
    }
    if used < 2 {
        return Err(Error::BadParameter);
    }
    let n = total_steps;
    let cxx = acc[0] / used as f64;
    let cyy = acc[1] / used as f64;
    let cxy = acc[2] / used as f64;
    let off_ratio = cxy.abs() / (0.5 * (cxx + cyy));
    let diag_ratio = cxx / cyy;
    let pass = off_ratio < off_tol && diag_ratio >= diag_band.0 && diag_ratio <= diag_band.1;
    let mut parameters = BTreeMap::new();
    e.describe(&mut parameters);
    parameters.insert("steps_per_rep".into(), steps_per_rep.to_string());
    let mut report = ExperimentReport {
        name: "isotropy".into(),
        parameters,
        replicates: replicates - excluded,
        excluded,
        estimates: vec![
            Estimate::point("increments", n),
            Estimate::point("off_diagonal_ratio", off_ratio),
            Estimate::point("diagonal_ratio", diag_ratio),
            Estimate::point("cxx", cxx),
            Estimate::point("cyy", cyy),
            Estimate::point("cxy", cxy),
        ],
        pass,
        seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    report.apply_exclusion_policy(replicates);
    Ok(ExperimentOutput { report, columns: vec![] })
}
