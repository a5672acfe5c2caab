//! Zero-boundary discrete Gaussian free field.
//!
//! Exact sampler via the sine eigenbasis of the Dirichlet grid Laplacian:
//! interior covariance is the Green's function of the combinatorial
//! Laplacian, boundary values are exactly zero.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{Grid, Topology};
use crate::rng::RngSeed;

use super::{Field, FieldKind};

const TAG_ZB: u64 = 0x03;

/// Eigenvalue of the 1d Dirichlet chain for mode p on n-1 intervals.
fn eig1d(p: usize, n: usize) -> f64 {
    let theta = std::f64::consts::PI * p as f64 / (n - 1) as f64;
    2.0 - 2.0 * theta.cos()
}

pub fn sample_zero_boundary_field(grid: Grid, seed: RngSeed) -> Result<Field> {
    if grid.topology != Topology::PlaneWindow {
        return Err(Error::RequiresPlaneWindow);
    }
    let n = grid.n;
    let m = n - 2; // interior vertices per side
    let mut rng = seed.keyed_rng(&[TAG_ZB]);

    // Coefficients xi_{pq} / sqrt(lambda_p + lambda_q), p,q = 1..m.
    let mut coef = vec![0.0f64; m * m];
    for q in 1..=m {
        for p in 1..=m {
            let lam = eig1d(p, n) + eig1d(q, n);
            let xi: f64 = rng.sample(StandardNormal);
            coef[(q - 1) * m + p - 1] = xi / lam.sqrt();
        }
    }

    // Orthonormal sine basis: S[i][p] = sqrt(2/(n-1)) sin(pi p i / (n-1)),
    // i = 1..m interior index, p = 1..m mode.
    let norm = (2.0 / (n - 1) as f64).sqrt();
    let mut basis = vec![0.0f64; m * m];
    for i in 1..=m {
        for p in 1..=m {
            basis[(i - 1) * m + p - 1] =
                norm * (std::f64::consts::PI * (p * i) as f64 / (n - 1) as f64).sin();
        }
    }

    // values_int = S * coef * S^T (S is symmetric in (i, p) here).
    let tmp = matmul(&basis, &coef, m); // tmp[i][q]
    let mut values = vec![0.0f64; grid.num_vertices()];
    for i in 1..=m {
        for j in 1..=m {
            let mut acc = 0.0;
            for q in 1..=m {
                acc += tmp[(i - 1) * m + q - 1] * basis[(j - 1) * m + q - 1];
            }
            values[grid.idx(i, j)] = acc;
        }
    }

    let field = Field {
        grid,
        values,
        scale_range: (grid.mesh(), 1.0),
        kind: FieldKind::ZeroBoundary,
        seed,
    };
    field.check_finite()?;
    Ok(field)
}

/// c[i][k] = sum_j a[i][j] b[j][k], square m x m row-major.
fn matmul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0f64; m * m];
    for i in 0..m {
        for j in 0..m {
            let aij = a[i * m + j];
            if aij == 0.0 {
                continue;
            }
            let brow = &b[j * m..(j + 1) * m];
            let crow = &mut c[i * m..(i + 1) * m];
            for (ck, bk) in crow.iter_mut().zip(brow) {
                *ck += aij * bk;
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn boundary_exactly_zero() {
        let g = Grid::unit(16).unwrap();
        let f = sample_zero_boundary_field(g, RngSeed::new(3, 0)).unwrap();
        for v in 0..g.num_vertices() {
            if g.is_boundary_vertex(v) {
                assert_eq!(f.values[v], 0.0);
            }
        }
    }

    #[test]
    fn torus_rejected() {
        let g = Grid::unit_torus(16).unwrap();
        assert!(sample_zero_boundary_field(g, RngSeed::new(3, 0)).is_err());
    }

    #[test]
    fn deterministic() {
        let g = Grid::unit(12).unwrap();
        let a = sample_zero_boundary_field(g, RngSeed::new(5, 1)).unwrap();
        let b = sample_zero_boundary_field(g, RngSeed::new(5, 1)).unwrap();
        assert_eq!(a.values, b.values);
    }

    /// Dense Green's function oracle: invert the interior Laplacian by
    /// Gaussian elimination.
    fn greens_function(g: &Grid) -> (Vec<usize>, Vec<f64>) {
        let interior: Vec<usize> =
            (0..g.num_vertices()).filter(|&v| !g.is_boundary_vertex(v)).collect();
        let m = interior.len();
        let pos: std::collections::HashMap<usize, usize> =
            interior.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut a = vec![0.0f64; m * m];
        let mut out = [0usize; 4];
        for (k, &v) in interior.iter().enumerate() {
            a[k * m + k] = 4.0; // full lattice degree, Dirichlet outside
            let c = g.neighbors(v, &mut out);
            for &w in &out[..c] {
                if let Some(&kw) = pos.get(&w) {
                    a[k * m + kw] = -1.0;
                }
            }
        }
        // Invert via Gauss-Jordan.
        let mut inv = vec![0.0f64; m * m];
        for k in 0..m {
            inv[k * m + k] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&r1, &r2| a[r1 * m + col].abs().total_cmp(&a[r2 * m + col].abs()))
                .unwrap();
            for j in 0..m {
                a.swap(col * m + j, piv * m + j);
                inv.swap(col * m + j, piv * m + j);
            }
            let d = a[col * m + col];
            for j in 0..m {
                a[col * m + j] /= d;
                inv[col * m + j] /= d;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r * m + col];
                    if f != 0.0 {
                        for j in 0..m {
                            a[r * m + j] -= f * a[col * m + j];
                            inv[r * m + j] -= f * inv[col * m + j];
                        }
                    }
                }
            }
        }
        (interior, inv)
    }

    #[test]
    fn single_interior_vertex_variance() {
        // 3x3 interior pattern embedded in the minimum 8x8 grid is not a
        // single vertex; test the hand-computable law directly on the
        // smallest admissible grid via the dense oracle instead, and verify
        // the 1x1 formula G = 1/4 against the oracle on a synthetic 3x3.
        // The 3x3 grid itself is below the size floor, so check the formula
        // analytically: a single interior vertex has Laplacian 4, G = 1/4.
        assert_eq!(1.0 / 4.0, 0.25);

        // Monte Carlo variance at one interior vertex of an 8x8 grid
        // matches the dense Green's function.
        let g = Grid::unit(8).unwrap();
        let (interior, ginv) = greens_function(&g);
        let m = interior.len();
        let target = g.idx(3, 4);
        let k = interior.iter().position(|&v| v == target).unwrap();
        let expect = ginv[k * m + k];
        let n_seeds = 4000;
        let vals: Vec<f64> = (0..n_seeds)
            .map(|s| sample_zero_boundary_field(g, RngSeed::new(9, s)).unwrap().values[target])
            .collect();
        let var = stats::variance(&vals);
        let se = expect * (2.0 / (n_seeds as f64 - 1.0)).sqrt();
        assert!((var - expect).abs() < 3.0 * se, "var {var} vs {expect}");
    }

    #[test]
    fn pair_covariance_matches_dense_inverse() {
        let g = Grid::unit(16).unwrap();
        let (interior, ginv) = greens_function(&g);
        let m = interior.len();
        let va = g.idx(5, 7);
        let vb = g.idx(9, 4);
        let ka = interior.iter().position(|&v| v == va).unwrap();
        let kb = interior.iter().position(|&v| v == vb).unwrap();
        let expect = ginv[ka * m + kb];
        let n_seeds = 2000;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in 0..n_seeds {
            let f = sample_zero_boundary_field(g, RngSeed::new(17, s)).unwrap();
            xs.push(f.values[va]);
            ys.push(f.values[vb]);
        }
        let cov = stats::covariance(&xs, &ys);
        // SE of a covariance estimate ~ sqrt((vx*vy + cov^2)/n).
        let se = ((stats::variance(&xs) * stats::variance(&ys) + expect * expect)
            / n_seeds as f64)
            .sqrt();
        assert!((cov - expect).abs() < 3.0 * se, "cov {cov} vs {expect} (se {se})");
    }
}
