//! LFPP proxy metric: 4-neighbor lattice with edge weights
//! mesh * exp((f(u) + f(v)) / (2 sqrt 6)), shortest paths by Dijkstra.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Grid, Topology};
use crate::measure::AreaMeasure;
use crate::XI;

#[derive(Debug, Clone)]
pub struct MetricGraph {
    pub grid: Grid,
    /// Weight of the edge from (i, j) to (i+1, j); unused entries on the
    ///right edge of a plane window are NaN.
    w_right: Vec<f64>,
    /// Weight of the edge from (i, j) to (i, j+1).
    w_up: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MetricBall {
    pub grid: Grid,
    pub center: usize,
    pub radius: f64,
    /// Vertices with dist(center, v) <= radius, with their distances.
    pub members: Vec<(usize, f64)>,
}

impl MetricBall {
    pub fn contains(&self, v: usize) -> bool {
        self.members.iter().any(|&(m, _)| m == v)
    }
}

pub fn build_metric_graph(f: &Field) -> Result<MetricGraph> {
    f.check_finite()?;
    let grid = f.grid;
    let n = grid.n;
    let d = grid.mesh();
    let mut w_right = vec![f64::NAN; grid.num_vertices()];
    let mut w_up = vec![f64::NAN; grid.num_vertices()];
    let torus = grid.topology == Topology::Torus;
    for j in 0..n {
        for i in 0..n {
            let v = grid.idx(i, j);
            if i + 1 < n || torus {
                let u = grid.idx((i + 1) % n, j);
                w_right[v] = d * (XI * (f.values[v] + f.values[u]) / 2.0).exp();
            }
            if j + 1 < n || torus {
                let u = grid.idx(i, (j + 1) % n);
                w_up[v] = d * (XI * (f.values[v] + f.values[u]) / 2.0).exp();
            }
        }
    }
    for w in w_right.iter().chain(w_up.iter()) {
        if !w.is_nan() && !(*w > 0.0 && w.is_finite()) {
            return Err(Error::NonFiniteValue { i: 0, j: 0 });
        }
    }
    Ok(MetricGraph { grid, w_right, w_up })
}

impl MetricGraph {
    /// Edges out of v: (neighbor, weight). Returns count written.
    #[inline]
    pub fn edges(&self, v: usize, out: &mut [(usize, f64); 4]) -> usize {
        let n = self.grid.n;
        let (i, j) = self.grid.coords(v);
        let torus = self.grid.topology == Topology::Torus;
        let mut k = 0;
        if i + 1 < n || torus {
            out[k] = (self.grid.idx((i + 1) % n, j), self.w_right[v]);
            k += 1;
        }
        if i > 0 {
            let u = self.grid.idx(i - 1, j);
            out[k] = (u, self.w_right[u]);
            k += 1;
        } else if torus {
            let u = self.grid.idx(n - 1, j);
            out[k] = (u, self.w_right[u]);
            k += 1;
        }
        if j + 1 < n || torus {
            out[k] = (self.grid.idx(i, (j + 1) % n), self.w_up[v]);
            k += 1;
        }
        if j > 0 {
            let u = self.grid.idx(i, j - 1);
            out[k] = (u, self.w_up[u]);
            k += 1;
        } else if torus {
            let u = self.grid.idx(i, n - 1);
            out[k] = (u, self.w_up[u]);
            k += 1;
        }
        k
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        let mut out = [(0usize, 0.0f64); 4];
        let k = self.edges(u, &mut out);
        out[..k]
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, w)| w)
            .expect("vertices not adjacent")
    }
}

#[derive(Clone, Copy)]
struct HeapItem {
    dist: f64,
    owner: u32,
    vertex: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    // min-heap by (dist, owner): ties in distance resolve to the smallest
    // point id, which keeps the Voronoi assignment deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.owner.cmp(&self.owner))
    }
}

/// Label arrays of a (multi-source) Dijkstra run.
pub struct Labels {
    pub dist: Vec<f64>,
    pub owner: Vec<u32>,
    pub parent: Vec<usize>,
}

pub const NO_OWNER: u32 = u32::MAX;
pub const NO_PARENT: usize = usize::MAX;

/// Multi-source Dijkstra with optional vertex mask, radius cutoff, and early
/// stop when a target vertex is settled.
pub(crate) fn dijkstra(
    g: &MetricGraph,
    sources: &[(usize, u32)],
    mask: Option<&[bool]>,
    radius: Option<f64>,
    stop_at: Option<usize>,
) -> Labels {
    let nv = g.grid.num_vertices();
    let mut dist = vec![f64::INFINITY; nv];
    let mut owner = vec![NO_OWNER; nv];
    let mut parent = vec![NO_PARENT; nv];
    let mut done = vec![false; nv];
    let mut heap = BinaryHeap::new();
    for &(src, id) in sources {
        if let Some(m) = mask {
            assert!(m[src], "source outside mask");
        }
        if 0.0 < dist[src] || (dist[src] == 0.0 && id < owner[src]) {
            dist[src] = 0.0;
            owner[src] = id;
            heap.push(HeapItem { dist: 0.0, owner: id, vertex: src });
        }
    }
    let mut edges = [(0usize, 0.0f64); 4];
    while let Some(HeapItem { dist: du, owner: ou, vertex: u }) = heap.pop() {
        if done[u] || du > dist[u] || (du == dist[u] && ou > owner[u]) {
            continue;
        }
        done[u] = true;
        if stop_at == Some(u) {
            break;
        }
        let k = g.edges(u, &mut edges);
        for &(v, w) in &edges[..k] {
            if done[v] {
                continue;
            }
            if let Some(m) = mask {
                if !m[v] {
                    continue;
                }
            }
            let nd = du + w;
            if let Some(r) = radius {
                if nd > r {
                    continue;
                }
            }
            if nd < dist[v] || (nd == dist[v] && ou < owner[v]) {
                dist[v] = nd;
                owner[v] = ou;
                parent[v] = u;
                heap.push(HeapItem { dist: nd, owner: ou, vertex: v });
            }
        }
    }
    Labels { dist, owner, parent }
}

/// Exact shortest-path distance with the geodesic that attains it.
pub fn distance(g: &MetricGraph, src: usize, dst: usize) -> (f64, Vec<usize>) {
    let labels = dijkstra(g, &[(src, 0)], None, None, Some(dst));
    let mut path = vec![dst];
    let mut v = dst;
    while v != src {
        v = labels.parent[v];
        debug_assert_ne!(v, NO_PARENT);
        path.push(v);
    }
    path.reverse();
    (labels.dist[dst], path)
}

/// Closed metric ball: exact sublevel set of the distance from center.
pub fn metric_ball(g: &MetricGraph, center: usize, s: f64) -> MetricBall {
    assert!(s >= 0.0);
    let labels = dijkstra(g, &[(center, 0)], None, Some(s), None);
    let mut members: Vec<(usize, f64)> = labels
        .dist
        .iter()
        .enumerate()
        .filter(|&(_, &d)| d <= s)
        .map(|(v, &d)| (v, d))
        .collect();
    members.sort_by_key(|&(v, _)| v);
    MetricBall { grid: g.grid, center, radius: s, members }
}

/// Sum of cell masses over ball members.
pub fn ball_volume(m: &AreaMeasure, b: &MetricBall) -> Result<f64> {
    if m.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(b.members.iter().map(|&(v, _)| m.mass[v]).sum())
}

/// Min over pairs of shortest-path distance between two disjoint vertex sets.
pub fn annulus_distance(g: &MetricGraph, inner: &[usize], outer: &[usize]) -> Result<f64> {
    if inner.is_empty() || outer.is_empty() {
        return Err(Error::BadVertexSets);
    }
    let mut is_outer = vec![false; g.grid.num_vertices()];
    for &v in outer {
        is_outer[v] = true;
    }
    for &v in inner {
        if is_outer[v] {
            return Err(Error::BadVertexSets);
        }
    }
    let sources: Vec<(usize, u32)> = inner.iter().map(|&v| (v, 0)).collect();
    let labels = dijkstra(g, &sources, None, None, None);
    let best = outer
        .iter()
        .map(|&v| labels.dist[v])
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}
