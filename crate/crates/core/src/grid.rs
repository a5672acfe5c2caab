use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    PlaneWindow,
    Torus,
}

/// Square lattice window: `n` vertices per side over an axis-aligned square
/// of side `len` anchored at `origin`. Vertex (i, j) sits at
/// `origin + (i, j) * mesh` with mesh = len / (n - 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub origin: (f64, f64),
    pub len: f64,
    pub topology: Topology,
}

impl Grid {
    pub fn new(n: usize, origin: (f64, f64), len: f64, topology: Topology) -> Result<Self> {
        if n < 8 {
            return Err(Error::GridTooSmall(n));
        }
        assert!(len > 0.0 && len.is_finite());
        Ok(Grid { n, origin, len, topology })
    }

    /// Unit-square plane window with n vertices per side.
    pub fn unit(n: usize) -> Result<Self> {
        Grid::new(n, (0.0, 0.0), 1.0, Topology::PlaneWindow)
    }

    /// Unit-square torus with n vertices per side.
    pub fn unit_torus(n: usize) -> Result<Self> {
        Grid::new(n, (0.0, 0.0), 1.0, Topology::Torus)
    }

    #[inline]
    pub fn mesh(&self) -> f64 {
        self.len / (self.n - 1) as f64
    }

    /// Spatial period of the torus identification (n * mesh).
    #[inline]
    pub fn period(&self) -> f64 {
        self.n as f64 * self.mesh()
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        j * self.n + i
    }

    /// (i, j) lattice coordinates of vertex v.
    #[inline]
    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v % self.n, v / self.n)
    }

    /// Plane position of vertex v.
    #[inline]
    pub fn pos(&self, v: usize) -> (f64, f64) {
        let (i, j) = self.coords(v);
        let d = self.mesh();
        (self.origin.0 + i as f64 * d, self.origin.1 + j as f64 * d)
    }

    /// 4-neighbors of v, respecting topology. Returns how many were written.
    #[inline]
    pub fn neighbors(&self, v: usize, out: &mut [usize; 4]) -> usize {
        let n = self.n;
        let (i, j) = self.coords(v);
        let mut k = 0;
        match self.topology {
            Topology::PlaneWindow => {
                if i > 0 {
                    out[k] = v - 1;
                    k += 1;
                }
                if i + 1 < n {
                    out[k] = v + 1;
                    k += 1;
                }
                if j > 0 {
                    out[k] = v - n;
                    k += 1;
                }
                if j + 1 < n {
                    out[k] = v + n;
                    k += 1;
                }
            }
            Topology::Torus => {
                out[0] = self.idx((i + n - 1) % n, j);
                out[1] = self.idx((i + 1) % n, j);
                out[2] = self.idx(i, (j + n - 1) % n);
                out[3] = self.idx(i, (j + 1) % n);
                k = 4;
            }
        }
        k
    }

    /// True iff v lies on the window boundary (always false on the torus).
    #[inline]
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        match self.topology {
            Topology::Torus => false,
            Topology::PlaneWindow => {
                let (i, j) = self.coords(v);
                i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
            }
        }
    }

    /// Displacement from a to b, minimal-image on the torus.
    pub fn displacement(&self, a: usize, b: usize) -> (f64, f64) {
        let (ax, ay) = self.pos(a);
        let (bx, by) = self.pos(b);
        let (mut dx, mut dy) = (bx - ax, by - ay);
        if self.topology == Topology::Torus {
            let p = self.period();
            if dx > p / 2.0 {
                dx -= p;
            } else if dx < -p / 2.0 {
                dx += p;
            }
            if dy > p / 2.0 {
                dy -= p;
            } else if dy < -p / 2.0 {
                dy += p;
            }
        }
        (dx, dy)
    }

    /// Euclidean distance between vertices (minimal-image on the torus).
    pub fn euclid(&self, a: usize, b: usize) -> f64 {
        let (dx, dy) = self.displacement(a, b);
        dx.hypot(dy)
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.origin.0
            && y >= self.origin.1
            && x <= self.origin.0 + self.len
            && y <= self.origin.1 + self.len
    }

    /// Vertex nearest to a plane point.
    pub fn nearest_vertex(&self, x: f64, y: f64) -> Result<usize> {
        if !self.contains_point(x, y) {
            return Err(Error::PointOutsideWindow { x, y });
        }
        let d = self.mesh();
        let i = (((x - self.origin.0) / d).round() as usize).min(self.n - 1);
        let j = (((y - self.origin.1) / d).round() as usize).min(self.n - 1);
        Ok(self.idx(i, j))
    }

    /// Center vertex of the window.
    pub fn center_vertex(&self) -> usize {
        self.idx(self.n / 2, self.n / 2)
    }
}
