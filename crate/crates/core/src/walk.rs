//! Simple random walk on the cell adjacency graph, Brownian reference paths
//! on a disk, and the discrete Frechet distance used as the proxy for the
//! curves-modulo-parameterization distance.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::voronoi::Tessellation;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkPath {
    pub cells: Vec<u32>,
    /// Cell-center coordinates along the path.
    pub embedded: Vec<(f64, f64)>,
    pub stopped_at_boundary: bool,
    pub seed: RngSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveSource {
    Walk,
    Brownian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanarCurve {
    pub vertices: Vec<(f64, f64)>,
    pub source: CurveSource,
}

impl PlanarCurve {
    pub fn check(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::EmptyCurve);
        }
        if self
            .vertices
            .iter()
            .any(|&(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::BadParameter);
        }
        Ok(())
    }
}

impl WalkPath {
    pub fn curve(&self) -> PlanarCurve {
        PlanarCurve { vertices: self.embedded.clone(), source: CurveSource::Walk }
    }
}

/// Walk on the adjacency graph from the cell owning `start_vertex`. Each
/// step is uniform over adjacency neighbors; stops on first entry into a
/// boundary cell (when requested) or after `max_steps` steps. A degree-0
/// start cell yields a length-1 path.
pub fn run_walk(
    t: &Tessellation,
    start_vertex: usize,
    max_steps: usize,
    stop_at_boundary: bool,
    seed: RngSeed,
) -> Result<WalkPath> {
    if stop_at_boundary && t.num_cells() < 2 {
        return Err(Error::TooFewCells);
    }
    let start = t.owner[start_vertex];
    if start == crate::metric::NO_OWNER {
        return Err(Error::VertexOutsideDomain);
    }
    let mut rng = seed.rng();
    let mut cells = Vec::with_capacity(max_steps.min(1 << 16) + 1);
    let mut embedded = Vec::with_capacity(cells.capacity());
    let mut cur = start;
    cells.push(cur);
    embedded.push(t.points.points[cur as usize].1);
    let mut stopped = stop_at_boundary && t.boundary_cells[cur as usize];
    while !stopped && cells.len() <= max_steps {
        let nbrs = &t.adjacency[cur as usize];
        if nbrs.is_empty() {
            break;
        }
        cur = nbrs[rng.gen_range(0..nbrs.len())];
        cells.push(cur);
        embedded.push(t.points.points[cur as usize].1);
        if stop_at_boundary && t.boundary_cells[cur as usize] {
            stopped = true;
        }
    }
    Ok(WalkPath { cells, embedded, stopped_at_boundary: stopped, seed })
}

/// Step displacements of the embedded path, minimal-image on the torus.
pub fn embedded_increments(t: &Tessellation, p: &WalkPath) -> Vec<(f64, f64)> {
    p.cells
        .windows(2)
        .map(|w| {
            let a = t.center_vertex(w[0]);
            let b = t.center_vertex(w[1]);
            t.grid.displacement(a, b)
        })
        .collect()
}

/// Planar Brownian motion with per-coordinate increment variance `dt`,
/// stopped at the first exit from the disk; the final vertex is the exact
/// crossing point of the last sub-step with the circle.
pub fn sample_brownian(
    start: (f64, f64),
    dt: f64,
    center: (f64, f64),
    radius: f64,
    seed: RngSeed,
) -> Result<PlanarCurve> {
    if !(dt > 0.0) || !(radius > 0.0) {
        return Err(Error::BadParameter);
    }
    let r0 = (start.0 - center.0).hypot(start.1 - center.1);
    if r0 >= radius {
        return Err(Error::StartOutsideDomain);
    }
    let mut rng = seed.rng();
    let sd = dt.sqrt();
    let mut verts = vec![start];
    let (mut x, mut y) = start;
    loop {
        let dx: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng) * sd;
        let dy: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng) * sd;
        let nx = x + dx;
        let ny = y + dy;
        let rn = (nx - center.0).hypot(ny - center.1);
        if rn >= radius {
            // Solve |p + s d - c|^2 = radius^2 for the first s in (0, 1].
            let px = x - center.0;
            let py = y - center.1;
            let a = dx * dx + dy * dy;
            let b = 2.0 * (px * dx + py * dy);
            let c = px * px + py * py - radius * radius;
            let disc = (b * b - 4.0 * a * c).max(0.0);
            let s = (-b + disc.sqrt()) / (2.0 * a);
            let s = s.clamp(0.0, 1.0);
            verts.push((x + s * dx, y + s * dy));
            break;
        }
        x = nx;
        y = ny;
        verts.push((x, y));
    }
    Ok(PlanarCurve { vertices: verts, source: CurveSource::Brownian })
}

/// Discrete Frechet distance between two polylines: minimum over monotone
/// couplings of the maximum pointwise gap, by dynamic programming.
pub fn cmp_distance(a: &PlanarCurve, b: &PlanarCurve) -> f64 {
    assert!(!a.vertices.is_empty() && !b.vertices.is_empty());
    let na = a.vertices.len();
    let nb = b.vertices.len();
    let d = |i: usize, j: usize| {
        let (ax, ay) = a.vertices[i];
        let (bx, by) = b.vertices[j];
        (ax - bx).hypot(ay - by)
    };
    let mut prev = vec![0.0f64; nb];
    let mut row = vec![0.0f64; nb];
    prev[0] = d(0, 0);
    for j in 1..nb {
        prev[j] = prev[j - 1].max(d(0, j));
    }
    for i in 1..na {
        row[0] = prev[0].max(d(i, 0));
        for j in 1..nb {
            let reach = prev[j].min(prev[j - 1]).min(row[j - 1]);
            row[j] = reach.max(d(i, j));
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[nb - 1]
}

/// Angle in [0, 2*pi) of the terminal embedded point around the disk center.
pub fn exit_angle(p: &WalkPath, center: (f64, f64)) -> Result<f64> {
    if !p.stopped_at_boundary {
        return Err(Error::NotBoundaryStopped);
    }
    let (x, y) = *p.embedded.last().expect("path is nonempty");
    let a = (y - center.1).atan2(x - center.0);
    Ok(if a < 0.0 { a + std::f64::consts::TAU } else { a })
}
