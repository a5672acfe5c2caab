//! Tutte (harmonic) embedding of the cell adjacency graph into the closed
//! unit disk: boundary cells on the circle at cumulative hitting
//! probabilities, interior cells at the average of their neighbors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voronoi::Tessellation;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Embedding {
    /// Plane position per cell id.
    pub positions: Vec<(f64, f64)>,
    /// Boundary cells in counterclockwise cyclic order starting at x0.
    pub boundary_order: Vec<u32>,
    /// Max over interior cells of the harmonicity defect per coordinate.
    pub residual: f64,
    /// (z0 interior cell, x0 boundary cell).
    pub marked: (u32, u32),
}

pub const DEFAULT_TOL: f64 = 1e-10;

/// Boundary cells ordered by the first occurrence of their vertices along
/// the counterclockwise traversal of the domain boundary, starting at x0's
/// first boundary vertex.
pub fn order_boundary(t: &Tessellation, x0: u32) -> Result<Vec<u32>> {
    let nb = t.boundary_cells.iter().filter(|&&b| b).count();
    if nb < 3 {
        return Err(Error::TooFewBoundaryCells { need: 3, found: nb });
    }
    if !t.boundary_cells[x0 as usize] {
        return Err(Error::NotBoundaryCell(x0));
    }
    let ring = t.boundary_traversal()?;
    let start = ring
        .iter()
        .position(|&v| t.owner[v] == x0)
        .expect("x0 is a boundary cell, so it owns a boundary vertex");
    let mut seen = vec![false; t.num_cells()];
    let mut order = Vec::with_capacity(nb);
    for k in 0..ring.len() {
        let v = ring[(start + k) % ring.len()];
        let o = t.owner[v];
        if o != crate::metric::NO_OWNER && !seen[o as usize] {
            seen[o as usize] = true;
            order.push(o);
        }
    }
    Ok(order)
}

/// Conjugate gradient on an SPD operator given as a closure; fixed-order
/// reductions for reproducibility.
fn cg(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let mut x = vec![0.0f64; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0f64; n];
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let bnorm = dot(b, b).sqrt().max(1e-300);
    let target = tol * bnorm;
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= target {
        return Ok(x);
    }
    for _ in 0..20 * n + 100 {
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(x);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::SolverStalled { target, achieved: rr.sqrt() })
}

/// Interior cells must all reach the boundary through interior edges plus a
/// final hop; returns the interior index map or the offending cell.
fn interior_index(adj: &[Vec<u32>], boundary: &[bool]) -> Result<Vec<Option<usize>>> {
    let n = adj.len();
    let mut idx = vec![None; n];
    let mut k = 0;
    for (c, &b) in boundary.iter().enumerate() {
        if !b {
            idx[c] = Some(k);
            k += 1;
        }
    }
    // BFS from all boundary cells over the whole graph; every interior cell
    // must be reached.
    let mut seen: Vec<bool> = boundary.to_vec();
    let mut queue: Vec<usize> = (0..n).filter(|&c| boundary[c]).collect();
    while let Some(c) = queue.pop() {
        for &d in &adj[c] {
            if !seen[d as usize] {
                seen[d as usize] = true;
                queue.push(d as usize);
            }
        }
    }
    if let Some(c) = seen.iter().position(|&s| !s) {
        return Err(Error::DisconnectedFromBoundary(c as u32));
    }
    Ok(idx)
}

/// Exact hitting distribution of the absorbed walk from z0, by one
/// symmetric solve: with D the interior degree matrix and A the
/// interior-interior adjacency, (D - A) w = e_{z0} gives the per-edge flux
/// w, and the probability of first hitting boundary cell b is the sum of
/// w_i over interior neighbors i of b. Returned per cell id (zero on
/// interior cells).
pub(crate) fn solve_hitting(adj: &[Vec<u32>], boundary: &[bool], z0: u32) -> Result<Vec<f64>> {
    if boundary[z0 as usize] {
        return Err(Error::NotInteriorCell(z0));
    }
    let idx = interior_index(adj, boundary)?;
    let ni = idx.iter().flatten().count();
    let deg: Vec<f64> = adj.iter().map(|a| a.len() as f64).collect();
    let apply = |w: &[f64], out: &mut [f64]| {
        for (c, &i) in idx.iter().enumerate() {
            let Some(i) = i else { continue };
            let mut acc = deg[c] * w[i];
            for &d in &adj[c] {
                if let Some(j) = idx[d as usize] {
                    acc -= w[j];
                }
            }
            out[i] = acc;
        }
    };
    let mut b = vec![0.0f64; ni];
    b[idx[z0 as usize].unwrap()] = 1.0;
    let w = cg(ni, apply, &b, 1e-14)?;
    let mut probs = vec![0.0f64; adj.len()];
    for (c, &bnd) in boundary.iter().enumerate() {
        if !bnd {
            continue;
        }
        let mut p = 0.0;
        for &d in &adj[c] {
            if let Some(j) = idx[d as usize] {
                p += w[j];
            }
        }
        probs[c] = p;
    }
    Ok(probs)
}

pub fn hitting_probabilities(t: &Tessellation, z0: u32) -> Result<Vec<f64>> {
    solve_hitting(&t.adjacency, &t.boundary_cells, z0)
}

/// Boundary cell positions on the unit circle at cumulative hitting
/// probabilities: x_j at angle 2*pi*(p_0 + ... + p_j). Zero-probability
/// cells collapse onto the previous angle.
pub fn place_boundary(probs: &[f64], order: &[u32]) -> Vec<(u32, (f64, f64))> {
    let mut out = Vec::with_capacity(order.len());
    let mut cum = 0.0;
    for &b in order {
        cum += probs[b as usize];
        let a = std::f64::consts::TAU * cum;
        out.push((b, (a.cos(), a.sin())));
    }
    out
}

/// Harmonic extension core: boundary positions fixed, interior solves the
/// discrete Laplace equation per coordinate. Returns positions and the max
/// harmonicity defect.
pub(crate) fn solve_harmonic(
    adj: &[Vec<u32>],
    boundary_pos: &[Option<(f64, f64)>],
    tol: f64,
) -> Result<(Vec<(f64, f64)>, f64)> {
    let n = adj.len();
    let boundary: Vec<bool> = boundary_pos.iter().map(|p| p.is_some()).collect();
    let idx = interior_index(adj, &boundary)?;
    let ni = idx.iter().flatten().count();
    let deg: Vec<f64> = adj.iter().map(|a| a.len() as f64).collect();
    let apply = |w: &[f64], out: &mut [f64]| {
        for (c, &i) in idx.iter().enumerate() {
            let Some(i) = i else { continue };
            let mut acc = deg[c] * w[i];
            for &d in &adj[c] {
                if let Some(j) = idx[d as usize] {
                    acc -= w[j];
                }
            }
            out[i] = acc;
        }
    };
    let mut positions: Vec<(f64, f64)> = boundary_pos
        .iter()
        .map(|p| p.unwrap_or((0.0, 0.0)))
        .collect();
    for coord in 0..2 {
        let mut b = vec![0.0f64; ni];
        for (c, &i) in idx.iter().enumerate() {
            let Some(i) = i else { continue };
            for &d in &adj[c] {
                if let Some(p) = boundary_pos[d as usize] {
                    b[i] += if coord == 0 { p.0 } else { p.1 };
                }
            }
        }
        let x = cg(ni, apply, &b, (tol * 1e-3).min(1e-12))?;
        for (c, &i) in idx.iter().enumerate() {
            if let Some(i) = i {
                if coord == 0 {
                    positions[c].0 = x[i];
                } else {
                    positions[c].1 = x[i];
                }
            }
        }
    }
    // Harmonicity defect: interior position minus the mean of neighbors.
    let mut residual = 0.0f64;
    for c in 0..n {
        if boundary[c] || adj[c].is_empty() {
            continue;
        }
        let (mut mx, mut my) = (0.0, 0.0);
        for &d in &adj[c] {
            mx += positions[d as usize].0;
            my += positions[d as usize].1;
        }
        mx /= deg[c];
        my /= deg[c];
        residual = residual
            .max((positions[c].0 - mx).abs())
            .max((positions[c].1 - my).abs());
    }
    if residual > tol {
        return Err(Error::SolverStalled { target: tol, achieved: residual });
    }
    Ok((positions, residual))
}

pub fn harmonic_extension(
    t: &Tessellation,
    boundary_positions: &[(u32, (f64, f64))],
    boundary_order: Vec<u32>,
    marked: (u32, u32),
    tol: f64,
) -> Result<Embedding> {
    let mut bpos: Vec<Option<(f64, f64)>> = vec![None; t.num_cells()];
    for &(b, p) in boundary_positions {
        bpos[b as usize] = Some(p);
    }
    let (positions, residual) = solve_harmonic(&t.adjacency, &bpos, tol)?;
    Ok(Embedding { positions, boundary_order, residual, marked })
}

/// Full pipeline: boundary order from x0, hitting probabilities from z0,
/// circle placement, harmonic extension.
pub fn tutte_embedding(t: &Tessellation, z0: u32, x0: u32, tol: f64) -> Result<Embedding> {
    let order = order_boundary(t, x0)?;
    let probs = hitting_probabilities(t, z0)?;
    let placed = place_boundary(&probs, &order);
    harmonic_extension(t, &placed, order, (z0, x0), tol)
}

/// Max and mean distance between the Tutte position of each cell and the
/// a-priori position of its center under the window-to-disk map.
pub fn embedding_displacement(
    e: &Embedding,
    t: &Tessellation,
    apriori: impl Fn((f64, f64)) -> (f64, f64),
) -> (f64, f64) {
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    for (id, &(x, y)) in e.positions.iter().enumerate() {
        let (ax, ay) = apriori(t.points.points[id].1);
        let d = (x - ax).hypot(y - ay);
        max = max.max(d);
        sum += d;
    }
    (max, sum / e.positions.len() as f64)
}

/// Disk automorphism sending `a` to the origin: w = (z - a) / (1 - conj(a) z).
/// The embedding pins the marked interior cell at 0 and spreads the boundary
/// by hitting probabilities seen from it, so its large-intensity limit is
/// the a-priori chart post-composed with this map, not the chart itself.
pub fn mobius_to_origin(a: (f64, f64)) -> impl Fn((f64, f64)) -> (f64, f64) + Copy {
    move |(x, y): (f64, f64)| {
        let (nx, ny) = (x - a.0, y - a.1);
        // den = 1 - conj(a) z
        let dx = 1.0 - (a.0 * x + a.1 * y);
        let dy = a.1 * x - a.0 * y;
        let d2 = dx * dx + dy * dy;
        ((nx * dx + ny * dy) / d2, (ny * dx - nx * dy) / d2)
    }
}

/// Rotate the embedding to best match the a-priori chart (least squares
/// over all cells). The embedding's own normalization only pins the
/// rotation to "marked boundary cell at angle zero", which has nothing to
/// do with the window's orientation; comparisons against the a-priori map
/// must quotient that rotation out. Orientation is already shared (both
/// traversals are counterclockwise), so no reflection is considered.
pub fn align_rotation(
    e: &Embedding,
    t: &Tessellation,
    apriori: impl Fn((f64, f64)) -> (f64, f64),
) -> Embedding {
    let mut dot = 0.0f64;
    let mut crs = 0.0f64;
    for (id, &(px, py)) in e.positions.iter().enumerate() {
        let (ax, ay) = apriori(t.points.points[id].1);
        dot += px * ax + py * ay;
        crs += px * ay - py * ax;
    }
    let theta = crs.atan2(dot);
    let (s, c) = theta.sin_cos();
    let rot = |&(x, y): &(f64, f64)| (c * x - s * y, s * x + c * y);
    Embedding {
        positions: e.positions.iter().map(rot).collect(),
        boundary_order: e.boundary_order.clone(),
        residual: e.residual,
        marked: e.marked,
    }
}

/// Every interior position must lie in the convex hull of the boundary
/// positions (maximum principle).
pub fn max_principle_holds(e: &Embedding, t: &Tessellation) -> bool {
    let bpts: Vec<(f64, f64)> = e
        .boundary_order
        .iter()
        .map(|&b| e.positions[b as usize])
        .collect();
    let hull = crate::voronoi::convex_hull(&bpts);
    if hull.len() < 3 {
        return true;
    }
    let eps = 1e-9;
    (0..t.num_cells())
        .filter(|&c| !t.boundary_cells[c])
        .all(|c| {
            let (px, py) = e.positions[c];
            // Counterclockwise hull: point inside iff left of every edge.
            (0..hull.len()).all(|i| {
                let (ax, ay) = hull[i];
                let (bx, by) = hull[(i + 1) % hull.len()];
                (bx - ax) * (py - ay) - (by - ay) * (px - ax) >= -eps
            })
        })
}
