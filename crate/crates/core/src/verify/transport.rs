//! Cell-moment tail behavior and the ball-cell mass transport identity on
//! the torus.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::stats;
use crate::voronoi;

use super::{ci_from_samples, Ensemble, Estimate, ExperimentOutput, ExperimentReport};

/// Per-replicate (lhs, rhs) transport terms; degenerate replicates (empty
/// point process, mesh-limited point counts) are excluded and counted.
fn transport_samples(
    e: &Ensemble,
    replicates: usize,
    seed: RngSeed,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    if !e.torus {
        return Err(Error::RequiresTorus);
    }
    let results: Vec<Result<Option<(f64, f64)>>> = (0..replicates as u64)
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
            let stats = voronoi::cell_stats(&t, &r.measure, &r.graph)?;
            let pair = voronoi::transport_terms(&t, &stats, 0)?;
            Ok(Some(pair))
        })
        .collect();
    let mut lhs = Vec::with_capacity(replicates);
    let mut rhs = Vec::with_capacity(replicates);
    let mut excluded = 0usize;
    for r in results {
        match r? {
            Some((a, b)) => {
                lhs.push(a);
                rhs.push(b);
            }
            None => excluded += 1,
        }
    }
    Ok((lhs, rhs, excluded))
}

/// Tail and running-mean stabilization of the origin-cell statistic
/// diam^2 deg / area and the ball-sum statistic.
pub fn moment_tail(e: &Ensemble, replicates: usize, seed: RngSeed) -> Result<ExperimentOutput> {
    let start = std::time::Instant::now();
    let (lhs, rhs, excluded) = transport_samples(e, replicates, seed)?;
    let full = stats::mean(&lhs);
    let last_quartile = &lhs[lhs.len() - lhs.len() / 4..];
    let tail_mean = stats::mean(last_quartile);
    let stabilized = (tail_mean - full).abs() <= 0.2 * full.abs().max(1e-12);
    let mut parameters = BTreeMap::new();
    e.describe(&mut parameters);
    let mut report = ExperimentReport {
        name: "moment_tail".into(),
        parameters,
        replicates: lhs.len(),
        excluded,
        estimates: vec![
            Estimate::point("mean", full),
            Estimate::point("last_quartile_mean", tail_mean),
            Estimate::point("q0.5", stats::quantile(&lhs, 0.5)),
            Estimate::point("q0.9", stats::quantile(&lhs, 0.9)),
            Estimate::point("q0.99", stats::quantile(&lhs, 0.99)),
            Estimate::point("ball_sum_q0.9", stats::quantile(&rhs, 0.9)),
        ],
        pass: stabilized,
        seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    report.apply_exclusion_policy(replicates);
    Ok(ExperimentOutput {
        report,
        columns: vec![("statistic".into(), lhs), ("ball_sum".into(), rhs)],
    })
}

/// The two sides of the transport identity with 95% CIs; the identity
/// asserts equal expectations, tested as CI overlap.
pub fn mass_transport(e: &Ensemble, replicates: usize, seed: RngSeed) -> Result<ExperimentOutput> {
    let start = std::time::Instant::now();
    let (lhs, rhs, excluded) = transport_samples(e, replicates, seed)?;
    let el = ci_from_samples("lhs", &lhs);
    let er = ci_from_samples("rhs", &rhs);
    let pass = el.ci.0 <= er.ci.1 && er.ci.0 <= el.ci.1;
    let mut parameters = BTreeMap::new();
    e.describe(&mut parameters);
    let mut report = ExperimentReport {
        name: "mass_transport".into(),
        parameters,
        replicates: lhs.len(),
        excluded,
        estimates: vec![el, er],
        pass,
        seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    report.apply_exclusion_policy(replicates);
    Ok(ExperimentOutput {
        report,
        columns: vec![("lhs".into(), lhs), ("rhs".into(), rhs)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_single_point_statistic_zero() {
        // Expected count ~1: most replicates carry a lone cell with
        // degree 0, so the statistic is exactly 0 for them.
        let e = Ensemble::flat(32, true, 1.0);
        let out = moment_tail(&e, 60, RngSeed::new(41, 0)).unwrap();
        let zeros = out.columns[0]
            .1
            .iter()
            .filter(|&&x| x == 0.0)
            .count();
        assert!(zeros * 2 > out.columns[0].1.len());
    }

    #[test]
    fn flat_torus_transport_identity() {
        let e = Ensemble::flat(48, true, 20.0);
        let out = mass_transport(&e, 120, RngSeed::new(42, 0)).unwrap();
        assert!(out.report.pass, "estimates: {:?}", out.report.estimates);
    }

    #[test]
    fn flat_running_mean_stabilizes() {
        let e = Ensemble::flat(48, true, 20.0);
        let out = moment_tail(&e, 150, RngSeed::new(43, 0)).unwrap();
        assert!(out.report.pass, "estimates: {:?}", out.report.estimates);
    }

    #[test]
    fn transport_rejects_plane_window() {
        let e = Ensemble::flat(48, false, 20.0);
        assert!(mass_transport(&e, 10, RngSeed::new(0, 0)).is_err());
    }
}
