//! Regularized LQG area measure and Poisson point sampling.
//!
//! Cell mass is mesh^(2 + gamma^2/2) * exp(gamma * f(v)), the mollified-
//! measure normalization at cutoff equal to the mesh, with gamma = sqrt(8/3)
//! fixed. Poisson points are grid vertices drawn with probability
//! proportional to cell mass; duplicates are redrawn so Voronoi centers stay
//! distinct.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::rng::RngSeed;
use crate::GAMMA;

#[derive(Debug, Clone)]
pub struct AreaMeasure {
    pub grid: Grid,
    /// Mass per grid cell, indexed like vertices.
    pub mass: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointProcess {
    /// (vertex id, plane coordinates), distinct vertices.
    pub points: Vec<(usize, (f64, f64))>,
    pub lambda: f64,
    pub seed: RngSeed,
}

/// mass(v) = mesh^(2 + gamma^2/2) * exp(gamma f(v)); gamma^2/2 = 4/3.
pub fn build_measure(f: &Field) -> Result<AreaMeasure> {
    f.check_finite()?;
    let grid = f.grid;
    let scale = grid.mesh().powf(2.0 + GAMMA * GAMMA / 2.0);
    let mut mass = Vec::with_capacity(grid.num_vertices());
    let mut total = 0.0f64;
    for (v, &x) in f.values.iter().enumerate() {
        let m = scale * (GAMMA * x).exp();
        if !m.is_finite() {
            let (i, j) = grid.coords(v);
            return Err(Error::MeasureOverflow { i, j, value: x });
        }
        mass.push(m);
        total += m;
    }
    Ok(AreaMeasure { grid, mass, total })
}

/// N ~ Poisson(lambda * total), then N distinct vertices i.i.d. proportional
/// to cell mass (collisions redrawn). Deterministic per seed.
pub fn sample_poisson(m: &AreaMeasure, lambda: f64, seed: RngSeed) -> Result<PointProcess> {
    assert!(lambda > 0.0);
    if m.total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let expected = lambda * m.total;
    let budget = m.grid.num_vertices() / 4;
    if expected > budget as f64 {
        return Err(Error::TooManyPoints { expected, budget });
    }
    let mut rng = seed.keyed_rng(&[0x10]);
    let n = if expected > 0.0 {
        Poisson::new(expected).expect("positive mean").sample(&mut rng) as usize
    } else {
        0
    };

    // Cumulative masses for inverse-CDF sampling.
    let mut cum = Vec::with_capacity(m.mass.len());
    let mut acc = 0.0f64;
    for &w in &m.mass {
        acc += w;
        cum.push(acc);
    }
    let total = acc;

    let mut chosen = std::collections::HashSet::new();
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let u: f64 = rng.gen::<f64>() * total;
        let v = cum.partition_point(|&c| c <= u).min(m.mass.len() - 1);
        if chosen.insert(v) {
            points.push((v, m.grid.pos(v)));
        }
    }
    Ok(PointProcess { points, lambda, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_wn_field;
    use crate::stats;

    #[test]
    fn uniform_field_total_mass() {
        // f = 0 on an n x n unit window: total = n^2 * mesh^(10/3).
        let n = 16;
        let g = Grid::unit(n).unwrap();
        let f = Field::constant(g, 0.0);
        let m = build_measure(&f).unwrap();
        let mesh = 1.0 / (n as f64 - 1.0);
        let expect = (n * n) as f64 * mesh.powf(10.0 / 3.0);
        assert!((m.total - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn constant_shift_scales_masses_exactly() {
        let g = Grid::unit(16).unwrap();
        let f = sample_wn_field(g, 0.25, RngSeed::new(2, 0)).unwrap();
        let b = 3.7f64;
        let c = b.ln() / GAMMA;
        let m0 = build_measure(&f).unwrap();
        let m1 = build_measure(&f.shifted(c)).unwrap();
        for (a, z) in m0.mass.iter().zip(&m1.mass) {
            assert!((z / a - b).abs() < 1e-12, "ratio {} vs {b}", z / a);
        }
    }

    #[test]
    fn hand_computed_masses() {
        let g = Grid::new(8, (0.0, 0.0), 1.0, crate::Topology::PlaneWindow).unwrap();
        let mut f = Field::constant(g, 0.0);
        f.values[g.idx(2, 3)] = 0.7;
        f.values[g.idx(5, 1)] = -1.2;
        let m = build_measure(&f).unwrap();
        let mesh: f64 = 1.0 / 7.0;
        let base = mesh.powf(10.0 / 3.0);
        assert!((m.mass[g.idx(0, 0)] / base - 1.0).abs() < 1e-12);
        assert!((m.mass[g.idx(2, 3)] / (base * (GAMMA * 0.7).exp()) - 1.0).abs() < 1e-12);
        assert!((m.mass[g.idx(5, 1)] / (base * (GAMMA * -1.2).exp()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_mean_mc() {
        let g = Grid::unit(32).unwrap();
        let m = build_measure(&Field::constant(g, 0.0)).unwrap();
        let lambda = 40.0 / m.total;
        let n_seeds = 2000;
        let counts: Vec<f64> = (0..n_seeds)
            .map(|k| {
                sample_poisson(&m, lambda, RngSeed::new(8, k)).unwrap().points.len() as f64
            })
            .collect();
        let mean = stats::mean(&counts);
        let se = stats::std_error(&counts);
        assert!((mean - 40.0).abs() < 3.0 * se, "mean {mean}");
        // Dispersion: variance/mean within [0.9, 1.1] for a Poisson law.
        let dispersion = stats::variance(&counts) / mean;
        assert!((0.9..=1.1).contains(&dispersion), "dispersion {dispersion}");
    }

    #[test]
    fn two_cell_split_chi_square() {
        // Uniform masses on two halves: point counts split 50/50.
        let g = Grid::unit(32).unwrap();
        let m = build_measure(&Field::constant(g, 0.0)).unwrap();
        let lambda = 100.0 / m.total;
        let mut left = 0.0f64;
        let mut right = 0.0f64;
        for k in 0..500 {
            let p = sample_poisson(&m, lambda, RngSeed::new(21, k)).unwrap();
            for &(v, _) in &p.points {
                let (i, _) = g.coords(v);
                if i < 16 {
                    left += 1.0;
                } else {
                    right += 1.0;
                }
            }
        }
        let total = left + right;
        let chi2 = stats::chi_square(&[left, right], &[total / 2.0, total / 2.0]);
        // 1 dof, level 1e-3 critical value 10.83.
        assert!(chi2 < 10.83, "chi2 {chi2} (left {left}, right {right})");
    }

    #[test]
    fn exchangeability_permutation_diagnostic() {
        // Conditional on N, the first point's x-coordinate has the same law
        // as the last point's.
        let g = Grid::unit(32).unwrap();
        let m = build_measure(&Field::constant(g, 0.0)).unwrap();
        let lambda = 20.0 / m.total;
        let mut first = Vec::new();
        let mut last = Vec::new();
        for k in 0..2000 {
            let p = sample_poisson(&m, lambda, RngSeed::new(33, k)).unwrap();
            if p.points.len() >= 2 {
                first.push(p.points[0].1 .0);
                last.push(p.points[p.points.len() - 1].1 .0);
            }
        }
        let d = stats::mean(&first) - stats::mean(&last);
        let se = (stats::variance(&first) / first.len() as f64
            + stats::variance(&last) / last.len() as f64)
            .sqrt();
        assert!(d.abs() < 3.0 * se, "diff {d}, se {se}");
    }

    #[test]
    fn rejects_mesh_limited_request() {
        let g = Grid::unit(16).unwrap();
        let m = build_measure(&Field::constant(g, 0.0)).unwrap();
        let lambda = (g.num_vertices() as f64) / m.total; // E[N] = n^2 >> n^2/4
        assert!(sample_poisson(&m, lambda, RngSeed::new(0, 0)).is_err());
    }

    #[test]
    fn points_distinct_and_in_window() {
        let g = Grid::unit(24).unwrap();
        let f = sample_wn_field(g, 0.25, RngSeed::new(4, 0)).unwrap();
        let m = build_measure(&f).unwrap();
        let p = sample_poisson(&m, 60.0 / m.total, RngSeed::new(4, 1)).unwrap();
        let mut seen = std::collections::HashSet::new();
        for &(v, (x, y)) in &p.points {
            assert!(seen.insert(v));
            assert!(g.contains_point(x, y));
        }
    }
}
