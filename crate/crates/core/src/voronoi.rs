//! Poisson-Voronoi tessellation under the graph metric: vertex assignment by
//! multi-source Dijkstra, cell adjacency, boundary cells, and per-cell
//! statistics including the cell-moment statistic diam^2 * deg / area.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Topology};
use crate::measure::{AreaMeasure, PointProcess};
use crate::metric::{self, MetricBall, MetricGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DomainShape {
    /// The whole grid window.
    Full,
    /// Vertices within `radius` of `center` (disk experiments).
    Disk { center: (f64, f64), radius: f64 },
}

#[derive(Debug, Clone)]
pub struct Tessellation {
    pub grid: Grid,
    pub points: PointProcess,
    /// Owner cell id per vertex (NO_OWNER outside the domain).
    pub owner: Vec<u32>,
    /// Graph distance to the owner point.
    pub owner_dist: Vec<f64>,
    /// Vertex list per cell.
    pub cells: Vec<Vec<usize>>,
    /// Sorted adjacency lists on cell ids (simple, loop-free).
    pub adjacency: Vec<Vec<u32>>,
    pub boundary_cells: Vec<bool>,
    pub domain: DomainShape,
    mask: Option<Vec<bool>>,
}

#[derive(Debug, Clone)]
pub struct CellStats {
    /// Euclidean diameter of each cell (plane units).
    pub diam: Vec<f64>,
    /// mesh^2 * vertex count.
    pub area: Vec<f64>,
    pub deg: Vec<usize>,
    /// Max owner-distance over the cell's vertices (LQG length).
    pub bh_radius: Vec<f64>,
    /// LQG mass of the smallest centered metric ball containing the cell.
    pub bh_volume: Vec<f64>,
    /// That ball's member set.
    pub bh_ball: Vec<MetricBall>,
}

pub fn tessellate(g: &MetricGraph, p: &PointProcess) -> Result<Tessellation> {
    tessellate_inner(g, p, None, DomainShape::Full)
}

/// Tessellation restricted to the disk of given radius around a center
/// point; Poisson points outside the disk are dropped.
pub fn tessellate_disk(
    g: &MetricGraph,
    p: &PointProcess,
    center: (f64, f64),
    radius: f64,
) -> Result<Tessellation> {
    let grid = g.grid;
    let mut mask = vec![false; grid.num_vertices()];
    for (v, m) in mask.iter_mut().enumerate() {
        let (x, y) = grid.pos(v);
        *m = (x - center.0).hypot(y - center.1) <= radius;
    }
    let kept: Vec<(usize, (f64, f64))> = p
        .points
        .iter()
        .copied()
        .filter(|&(v, _)| mask[v])
        .collect();
    let p2 = PointProcess { points: kept, lambda: p.lambda, seed: p.seed };
    tessellate_inner(g, &p2, Some(mask), DomainShape::Disk { center, radius })
}

fn tessellate_inner(
    g: &MetricGraph,
    p: &PointProcess,
    mask: Option<Vec<bool>>,
    domain: DomainShape,
) -> Result<Tessellation> {
    if p.points.is_empty() {
        return Err(Error::EmptyPointProcess);
    }
    let grid = g.grid;
    let sources: Vec<(usize, u32)> = p
        .points
        .iter()
        .enumerate()
        .map(|(id, &(v, _))| (v, id as u32))
        .collect();
    let labels = metric::dijkstra(g, &sources, mask.as_deref(), None, None);

    let nc = p.points.len();
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); nc];
    for v in 0..grid.num_vertices() {
        let o = labels.owner[v];
        if o != metric::NO_OWNER {
            cells[o as usize].push(v);
        }
    }

    // Adjacency: a lattice edge joins vertices with different owners.
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); nc];
    let mut nb = [0usize; 4];
    for v in 0..grid.num_vertices() {
        let ov = labels.owner[v];
        if ov == metric::NO_OWNER {
            continue;
        }
        let k = grid.neighbors(v, &mut nb);
        for &w in &nb[..k] {
            let ow = labels.owner[w];
            if ow != metric::NO_OWNER && ow != ov {
                adjacency[ov as usize].push(ow);
            }
        }
    }
    for a in adjacency.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }

    // Boundary cells: owners of domain-boundary vertices.
    let mut boundary_cells = vec![false; nc];
    for v in 0..grid.num_vertices() {
        let o = labels.owner[v];
        if o == metric::NO_OWNER {
            continue;
        }
        if is_domain_boundary_vertex(&grid, mask.as_deref(), v) {
            boundary_cells[o as usize] = true;
        }
    }

    Ok(Tessellation {
        grid,
        points: p.clone(),
        owner: labels.owner,
        owner_dist: labels.dist,
        cells,
        adjacency,
        boundary_cells,
        domain,
        mask,
    })
}

fn is_domain_boundary_vertex(grid: &Grid, mask: Option<&[bool]>, v: usize) -> bool {
    match mask {
        None => grid.is_boundary_vertex(v),
        Some(m) => {
            if !m[v] {
                return false;
            }
            if grid.is_boundary_vertex(v) {
                return true;
            }
            let mut nb = [0usize; 4];
            let k = grid.neighbors(v, &mut nb);
            nb[..k].iter().any(|&w| !m[w])
        }
    }
}

impl Tessellation {
    pub fn num_cells(&self) -> usize {
        self.points.points.len()
    }

    /// Grid vertex at which the cell's Poisson point sits.
    pub fn center_vertex(&self, cell: u32) -> usize {
        self.points.points[cell as usize].0
    }

    pub fn in_domain(&self, v: usize) -> bool {
        match &self.mask {
            None => true,
            Some(m) => m[v],
        }
    }

    /// Domain-boundary vertices in canonical counterclockwise order.
    /// For the full window this walks the window edge; for a disk it sorts
    /// boundary vertices by angle around the disk center.
    pub fn boundary_traversal(&self) -> Result<Vec<usize>> {
        if self.grid.topology == Topology::Torus {
            return Err(Error::RequiresPlaneWindow);
        }
        let g = &self.grid;
        let n = g.n;
        match self.domain {
            DomainShape::Full => {
                let mut out = Vec::with_capacity(4 * (n - 1));
                for i in 0..n {
                    out.push(g.idx(i, 0));
                }
                for j in 1..n {
                    out.push(g.idx(n - 1, j));
                }
                for i in (0..n - 1).rev() {
                    out.push(g.idx(i, n - 1));
                }
                for j in (1..n - 1).rev() {
                    out.push(g.idx(0, j));
                }
                Ok(out)
            }
            DomainShape::Disk { center, .. } => {
                let mask = self.mask.as_deref().expect("disk domain has a mask");
                let mut ring: Vec<(f64, usize)> = (0..g.num_vertices())
                    .filter(|&v| is_domain_boundary_vertex(g, Some(mask), v))
                    .map(|v| {
                        let (x, y) = g.pos(v);
                        let a = (y - center.1).atan2(x - center.0);
                        (a, v)
                    })
                    .collect();
                ring.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                Ok(ring.into_iter().map(|(_, v)| v).collect())
            }
        }
    }

    /// Partition check: every in-domain vertex owned exactly once and each
    /// cell connected in the lattice.
    pub fn check_invariants(&self) -> Result<()> {
        let total: usize = self.cells.iter().map(|c| c.len()).sum();
        let in_domain = (0..self.grid.num_vertices())
            .filter(|&v| self.in_domain(v))
            .count();
        assert_eq!(total, in_domain, "partition: cell sizes must sum to domain size");
        for (id, cell) in self.cells.iter().enumerate() {
            assert!(
                self.cell_is_connected(id as u32),
                "cell {id} not lattice-connected ({} vertices)",
                cell.len()
            );
            assert!(
                cell.contains(&self.center_vertex(id as u32)),
                "cell {id} does not contain its center"
            );
        }
        // Adjacency symmetric, loop-free.
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            for &b in nbrs {
                assert_ne!(a as u32, b);
                assert!(self.adjacency[b as usize].contains(&(a as u32)));
            }
        }
        Ok(())
    }

    pub fn cell_is_connected(&self, cell: u32) -> bool {
        let verts = &self.cells[cell as usize];
        if verts.is_empty() {
            return true;
        }
        let inset: std::collections::HashSet<usize> = verts.iter().copied().collect();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![verts[0]];
        seen.insert(verts[0]);
        let mut nb = [0usize; 4];
        while let Some(v) = stack.pop() {
            let k = self.grid.neighbors(v, &mut nb);
            for &w in &nb[..k] {
                if inset.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == verts.len()
    }

    /// Adjacent cells must be joined by a lattice path inside their union
    /// running from center to center.
    pub fn adjacency_realizable(&self, a: u32, b: u32) -> bool {
        let ok = |v: usize| self.owner[v] == a || self.owner[v] == b;
        let start = self.center_vertex(a);
        let goal = self.center_vertex(b);
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![start];
        seen.insert(start);
        let mut nb = [0usize; 4];
        while let Some(v) = stack.pop() {
            if v == goal {
                return true;
            }
            let k = self.grid.neighbors(v, &mut nb);
            for &w in &nb[..k] {
                if ok(w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        false
    }

    /// A boundary cell must contain a lattice path from its center to a
    /// domain-boundary vertex staying inside the cell.
    pub fn boundary_cell_has_path(&self, cell: u32) -> bool {
        if !self.boundary_cells[cell as usize] {
            return false;
        }
        let start = self.center_vertex(cell);
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![start];
        seen.insert(start);
        let mut nb = [0usize; 4];
        while let Some(v) = stack.pop() {
            if is_domain_boundary_vertex(&self.grid, self.mask.as_deref(), v) {
                return true;
            }
            let k = self.grid.neighbors(v, &mut nb);
            for &w in &nb[..k] {
                if self.owner[w] == cell && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        false
    }
}

/// Euclidean diameter of a vertex set, minimal-image on the torus relative
/// to the anchor vertex. Convex-hull based.
fn point_set_diameter(grid: &Grid, verts: &[usize], anchor: usize) -> f64 {
    let pts: Vec<(f64, f64)> = verts
        .iter()
        .map(|&v| grid.displacement(anchor, v))
        .collect();
    let hull = convex_hull(&pts);
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for j in (i + 1)..hull.len() {
            let dx = hull[i].0 - hull[j].0;
            let dy = hull[i].1 - hull[j].1;
            best = best.max(dx * dx + dy * dy);
        }
    }
    best.sqrt()
}

pub(crate) fn convex_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p: Vec<(f64, f64)> = pts.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::with_capacity(p.len());
    for &pt in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], pt) <= 0.0 {
            // Keep collinear points off the hull; diameter is unaffected.
            lower.pop();
        }
        lower.push(pt);
    }
    let mut upper: Vec<(f64, f64)> = Vec::with_capacity(p.len());
    for &pt in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], pt) <= 0.0 {
            upper.pop();
        }
        upper.push(pt);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        // All points collinear and got popped; fall back.
        return p;
    }
    lower
}

pub fn cell_stats(t: &Tessellation, m: &AreaMeasure, g: &MetricGraph) -> Result<CellStats> {
    if t.grid != m.grid || t.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    let nc = t.num_cells();
    let d2 = t.grid.mesh() * t.grid.mesh();
    let mut diam = Vec::with_capacity(nc);
    let mut area = Vec::with_capacity(nc);
    let mut deg = Vec::with_capacity(nc);
    let mut bh_radius = Vec::with_capacity(nc);
    let mut bh_volume = Vec::with_capacity(nc);
    let mut bh_ball = Vec::with_capacity(nc);
    for id in 0..nc {
        let verts = &t.cells[id];
        let center = t.center_vertex(id as u32);
        diam.push(point_set_diameter(&t.grid, verts, center));
        area.push(d2 * verts.len() as f64);
        deg.push(t.adjacency[id].len());
        let r = verts
            .iter()
            .map(|&v| t.owner_dist[v])
            .fold(0.0f64, f64::max);
        bh_radius.push(r);
        let ball = metric::metric_ball(g, center, r);
        bh_volume.push(metric::ball_volume(m, &ball)?);
        bh_ball.push(ball);
    }
    Ok(CellStats { diam, area, deg, bh_radius, bh_volume, bh_ball })
}

/// diam^2 * deg / area for the cell owning the origin vertex; 0 for an
/// isolated single cell.
pub fn moment_statistic(t: &Tessellation, stats: &CellStats, origin_vertex: usize) -> f64 {
    let id = t.owner[origin_vertex];
    assert_ne!(id, metric::NO_OWNER, "origin vertex outside the domain");
    let id = id as usize;
    if stats.deg[id] == 0 {
        return 0.0;
    }
    stats.diam[id] * stats.diam[id] * stats.deg[id] as f64 / stats.area[id]
}

/// One replicate's contribution to the two sides of the ball-cell mass
/// transport identity: lhs = diam(H_0)^2 deg(H_0) / area(H_0); rhs =
/// sum over cells H with origin in B_H of diam(H)^2 deg(H) / area(B_H),
/// with area(B_H) the Lebesgue area mesh^2 * |B_H|.
pub fn transport_terms(
    t: &Tessellation,
    stats: &CellStats,
    origin_vertex: usize,
) -> Result<(f64, f64)> {
    if t.grid.topology != Topology::Torus {
        return Err(Error::RequiresTorus);
    }
    let lhs = moment_statistic(t, stats, origin_vertex);
    let d2 = t.grid.mesh() * t.grid.mesh();
    let mut rhs = 0.0;
    for id in 0..t.num_cells() {
        if stats.deg[id] == 0 {
            continue;
        }
        let ball = &stats.bh_ball[id];
        if ball.contains(origin_vertex) {
            let area_bh = d2 * ball.members.len() as f64;
            rhs += stats.diam[id] * stats.diam[id] * stats.deg[id] as f64 / area_bh;
        }
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::measure::{build_measure, sample_poisson};
    use crate::metric::build_metric_graph;
    use crate::rng::RngSeed;
    use rand::Rng;

    #[test]
    fn hull_keeps_every_circle_point() {
        // Points on a circle are in strictly convex position: all of them
        // are hull vertices and the polygon comes back counterclockwise.
        let m = 17;
        let pts: Vec<(f64, f64)> = (0..m)
            .map(|k| {
                let a = std::f64::consts::TAU * (k as f64 + 0.3) / m as f64;
                (a.cos(), a.sin())
            })
            .collect();
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), m);
        let mut area2 = 0.0;
        for i in 0..hull.len() {
            let (ax, ay) = hull[i];
            let (bx, by) = hull[(i + 1) % hull.len()];
            area2 += ax * by - bx * ay;
        }
        assert!(area2 > 0.0, "hull not counterclockwise");
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts = vec![
            (0.0, 0.0),
            (2.0, 0.0),
            (2.0, 2.0),
            (0.0, 2.0),
            (1.0, 0.0), // collinear on the bottom edge
            (1.0, 1.0), // interior
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(!hull.contains(&(1.0, 1.0)) && !hull.contains(&(1.0, 0.0)));
    }

    fn uniform_setup(n: usize, pts: &[(usize, usize)]) -> (MetricGraph, PointProcess) {
        let g = Grid::unit(n).unwrap();
        let mg = build_metric_graph(&Field::constant(g, 0.0)).unwrap();
        let points = pts
            .iter()
            .map(|&(i, j)| {
                let v = g.idx(i, j);
                (v, g.pos(v))
            })
            .collect();
        (mg, PointProcess { points, lambda: 1.0, seed: RngSeed::new(0, 0) })
    }

    #[test]
    fn single_point_owns_everything() {
        let (mg, p) = uniform_setup(8, &[(3, 3)]);
        let t = tessellate(&mg, &p).unwrap();
        assert_eq!(t.cells[0].len(), 64);
        assert!(t.adjacency[0].is_empty());
        assert!(t.boundary_cells[0]);
        t.check_invariants().unwrap();
    }

    #[test]
    fn empty_point_process_rejected() {
        let (mg, _) = uniform_setup(8, &[(0, 0)]);
        let p = PointProcess { points: vec![], lambda: 1.0, seed: RngSeed::new(0, 0) };
        assert!(tessellate(&mg, &p).is_err());
    }

    #[test]
    fn two_points_match_l1_rule_with_tiebreak() {
        let (mg, p) = uniform_setup(9, &[(2, 4), (6, 4)]);
        let t = tessellate(&mg, &p).unwrap();
        let g = mg.grid;
        for v in 0..g.num_vertices() {
            let (i, j) = g.coords(v);
            let d0 = (i as i64 - 2).abs() + (j as i64 - 4).abs();
            let d1 = (i as i64 - 6).abs() + (j as i64 - 4).abs();
            let expect = if d0 <= d1 { 0 } else { 1 }; // id tie-break
            assert_eq!(t.owner[v], expect, "vertex ({i},{j})");
        }
        t.check_invariants().unwrap();
    }

    #[test]
    fn every_cell_contains_its_center() {
        let g = Grid::unit(24).unwrap();
        let f = crate::field::sample_wn_field(g, 0.2, RngSeed::new(42, 0)).unwrap();
        let mg = build_metric_graph(&f).unwrap();
        let m = build_measure(&f).unwrap();
        let p = sample_poisson(&m, 30.0 / m.total, RngSeed::new(42, 1)).unwrap();
        let t = tessellate(&mg, &p).unwrap();
        for id in 0..t.num_cells() {
            assert_eq!(t.owner[t.center_vertex(id as u32)], id as u32);
            assert_eq!(t.owner_dist[t.center_vertex(id as u32)], 0.0);
        }
        t.check_invariants().unwrap();
    }

    #[test]
    fn adjacency_realizable_and_boundary_paths() {
        let g = Grid::unit(24).unwrap();
        let f = crate::field::sample_wn_field(g, 0.2, RngSeed::new(17, 0)).unwrap();
        let mg = build_metric_graph(&f).unwrap();
        let m = build_measure(&f).unwrap();
        let p = sample_poisson(&m, 25.0 / m.total, RngSeed::new(17, 1)).unwrap();
        let t = tessellate(&mg, &p).unwrap();
        for a in 0..t.num_cells() as u32 {
            for &b in &t.adjacency[a as usize] {
                assert!(t.adjacency_realizable(a, b), "cells {a} and {b}");
            }
            if t.boundary_cells[a as usize] {
                assert!(t.boundary_cell_has_path(a));
            }
        }
    }

    #[test]
    fn cell_stats_whole_window() {
        let (mg, p) = uniform_setup(16, &[(8, 8)]);
        let m = build_measure(&Field::constant(mg.grid, 0.0)).unwrap();
        let t = tessellate(&mg, &p).unwrap();
        let s = cell_stats(&t, &m, &mg).unwrap();
        let d2 = mg.grid.mesh() * mg.grid.mesh();
        assert!((s.area[0] - d2 * 256.0).abs() < 1e-15);
        assert!((s.diam[0] - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.deg[0], 0);
    }

    #[test]
    fn two_cell_areas_partition() {
        let (mg, p) = uniform_setup(16, &[(4, 8), (12, 8)]);
        let m = build_measure(&Field::constant(mg.grid, 0.0)).unwrap();
        let t = tessellate(&mg, &p).unwrap();
        let s = cell_stats(&t, &m, &mg).unwrap();
        let d2 = mg.grid.mesh() * mg.grid.mesh();
        assert!((s.area[0] + s.area[1] - d2 * 256.0).abs() < 1e-15);
    }

    #[test]
    fn bh_radius_matches_pairwise_recomputation() {
        let g = Grid::unit(8).unwrap();
        let mut f = Field::constant(g, 0.0);
        let mut rng = RngSeed::new(4, 4).rng();
        for v in f.values.iter_mut() {
            *v = rng.gen::<f64>() * 2.0 - 1.0;
        }
        let mg = build_metric_graph(&f).unwrap();
        let m = build_measure(&f).unwrap();
        let points = vec![
            (g.idx(1, 2), g.pos(g.idx(1, 2))),
            (g.idx(6, 5), g.pos(g.idx(6, 5))),
            (g.idx(3, 6), g.pos(g.idx(3, 6))),
        ];
        let p = PointProcess { points, lambda: 1.0, seed: RngSeed::new(0, 0) };
        let t = tessellate(&mg, &p).unwrap();
        let s = cell_stats(&t, &m, &mg).unwrap();
        for id in 0..t.num_cells() {
            let center = t.center_vertex(id as u32);
            let mut expect = 0.0f64;
            for &v in &t.cells[id] {
                let (d, _) = crate::metric::distance(&mg, center, v);
                expect = expect.max(d);
            }
            assert!((s.bh_radius[id] - expect).abs() < 1e-12);
            // B_H contains the cell.
            for &v in &t.cells[id] {
                assert!(s.bh_ball[id].contains(v));
            }
        }
    }

    #[test]
    fn moment_statistic_degenerate_and_half_window() {
        // Single cell: deg 0 -> statistic 0.
        let (mg, p) = uniform_setup(16, &[(8, 8)]);
        let m = build_measure(&Field::constant(mg.grid, 0.0)).unwrap();
        let t = tessellate(&mg, &p).unwrap();
        let s = cell_stats(&t, &m, &mg).unwrap();
        assert_eq!(moment_statistic(&t, &s, 0), 0.0);

        // Two half-window cells on the unit window: left cell has
        // diam^2 = 5/4, deg = 1, area = 1/2 -> statistic 5/2 up to a mesh row.
        let n = 33;
        let (mg, p) = uniform_setup(n, &[(8, 16), (24, 16)]);
        let m = build_measure(&Field::constant(mg.grid, 0.0)).unwrap();
        let t = tessellate(&mg, &p).unwrap();
        let s = cell_stats(&t, &m, &mg).unwrap();
        let origin = mg.grid.idx(0, 0);
        let stat = moment_statistic(&t, &s, origin);
        let mesh = mg.grid.mesh();
        assert!((stat - 2.5).abs() < 4.0 * mesh * 10.0, "stat = {stat}");
    }

    #[test]
    fn disk_domain_masks_and_boundary() {
        let g = Grid::unit(33).unwrap();
        let mg = build_metric_graph(&Field::constant(g, 0.0)).unwrap();
        let m = build_measure(&Field::constant(g, 0.0)).unwrap();
        let p = sample_poisson(&m, 40.0 / m.total, RngSeed::new(9, 0)).unwrap();
        let t = tessellate_disk(&mg, &p, (0.5, 0.5), 0.5).unwrap();
        // Vertices outside the disk are unowned.
        for v in 0..g.num_vertices() {
            let (x, y) = g.pos(v);
            let inside = (x - 0.5).hypot(y - 0.5) <= 0.5;
            assert_eq!(t.in_domain(v), inside);
            assert_eq!(t.owner[v] != crate::metric::NO_OWNER, inside);
        }
        assert!(t.boundary_cells.iter().any(|&b| b));
        t.check_invariants().unwrap();
        // Boundary traversal is angularly sorted and covers each boundary
        // vertex once.
        let ring = t.boundary_traversal().unwrap();
        assert!(!ring.is_empty());
        let mut seen = std::collections::HashSet::new();
        for &v in &ring {
            assert!(seen.insert(v));
        }
    }

    #[test]
    fn transport_requires_torus() {
        let (mg, p) = uniform_setup(16, &[(4, 8), (12, 8)]);
        let m = build_measure(&Field::constant(mg.grid, 0.0)).unwrap();
        let t = tessellate(&mg, &p).unwrap();
        let s = cell_stats(&t, &m, &mg).unwrap();
        assert!(transport_terms(&t, &s, 0).is_err());
    }

    #[test]
    fn transport_degenerate_single_point_zero() {
        let g = Grid::unit_torus(16).unwrap();
        let mg = build_metric_graph(&Field::constant(g, 0.0)).unwrap();
        let m = build_measure(&Field::constant(g, 0.0)).unwrap();
        let v = g.idx(3, 3);
        let p = PointProcess {
            points: vec![(v, g.pos(v))],
            lambda: 1.0,
            seed: RngSeed::new(0, 0),
        };
        let t = tessellate(&mg, &p).unwrap();
        let s = cell_stats(&t, &m, &mg).unwrap();
        let (lhs, rhs) = transport_terms(&t, &s, 0).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
    }

    #[test]
    fn torus_partition_and_connectivity() {
        let g = Grid::unit_torus(24).unwrap();
        let f = crate::field::sample_wn_field(g, 0.2, RngSeed::new(88, 0)).unwrap();
        let mg = build_metric_graph(&f).unwrap();
        let m = build_measure(&f).unwrap();
        let p = sample_poisson(&m, 20.0 / m.total, RngSeed::new(88, 1)).unwrap();
        let t = tessellate(&mg, &p).unwrap();
        t.check_invariants().unwrap();
        assert!(t.boundary_cells.iter().all(|&b| !b));
    }
}
