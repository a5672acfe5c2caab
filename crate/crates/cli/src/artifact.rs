//! Artifact emission: manifest with content hashes, CSV, PNG rasters of
//! tessellations, and SVG embeddings. All writes funnel through the
//! ArtifactWriter so the manifest lists exactly what was produced.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lqgv_core::voronoi::Tessellation;
use lqgv_core::{Embedding, Result};
use sha2::{Digest, Sha256};

pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<(String, String, bool)>, // (relative path, sha256, canonical)
}

const COLOR_MULT: u32 = 0x9E37_79B1;

/// Invertible owner-id to 24-bit color map (multiplier odd, so it is a
/// bijection mod 2^24). Id 0 maps away from black; black is reserved for
/// out-of-domain pixels.
pub fn owner_color(id: u32) -> [u8; 3] {
    let c = (id + 1).wrapping_mul(COLOR_MULT) & 0x00FF_FFFF;
    [(c >> 16) as u8, (c >> 8) as u8, c as u8]
}

pub fn decode_color(rgb: [u8; 3]) -> Option<u32> {
    let c = ((rgb[0] as u32) << 16) | ((rgb[1] as u32) << 8) | rgb[2] as u32;
    if c == 0 {
        return None;
    }
    // Newton iteration for the inverse of an odd multiplier mod 2^24.
    let mut inv: u32 = 1;
    for _ in 0..5 {
        inv = inv.wrapping_mul(2u32.wrapping_sub(COLOR_MULT.wrapping_mul(inv)));
    }
    Some((c.wrapping_mul(inv).wrapping_sub(1)) & 0x00FF_FFFF)
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<ArtifactWriter> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactWriter { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write raw bytes and record them in the manifest.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        let hash = hex(&Sha256::digest(bytes));
        self.entries.push((name.to_string(), hash, false));
        Ok(())
    }

    /// Write a report: the file keeps its wall clock, the manifest hashes
    /// the canonical (wall-zeroed) form so re-runs produce byte-identical
    /// manifests.
    pub fn write_report(
        &mut self,
        name: &str,
        report: &lqgv_core::verify::ExperimentReport,
    ) -> Result<()> {
        std::fs::write(self.dir.join(name), report.to_json())?;
        let hash = hex(&Sha256::digest(report.canonical_json().as_bytes()));
        self.entries.push((name.to_string(), hash, true));
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[Vec<f64>]) -> Result<()> {
        let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
        out.push_str(header);
        out.push('\n');
        for row in rows {
            for (k, x) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                // Shortest round-trip float formatting keeps hashes stable.
                write!(out, "{x}").unwrap();
            }
            out.push('\n');
        }
        self.write(name, out.as_bytes())
    }

    /// Sample columns as CSV (columns may have unequal length; short ones
    /// leave blanks).
    pub fn write_columns(&mut self, name: &str, cols: &[(String, Vec<f64>)]) -> Result<()> {
        let mut out = String::new();
        for (k, (label, _)) in cols.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(label);
        }
        out.push('\n');
        let rows = cols.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
        for r in 0..rows {
            for (k, (_, col)) in cols.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                if let Some(x) = col.get(r) {
                    write!(out, "{x}").unwrap();
                }
            }
            out.push('\n');
        }
        self.write(name, out.as_bytes())
    }

    /// Finish: write the manifest listing every artifact.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.entries.sort();
        let mut out = String::from("{\n  \"artifacts\": [\n");
        for (k, (path, hash, canonical)) in self.entries.iter().enumerate() {
            write!(
                out,
                "    {{\"path\": \"{path}\", \"sha256\": \"{hash}\", \"canonical\": {canonical}}}{}\n",
                if k + 1 < self.entries.len() { "," } else { "" }
            )
            .unwrap();
        }
        out.push_str("  ]\n}\n");
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, out)?;
        Ok(path)
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

/// Color-by-owner raster, one pixel per grid vertex, row 0 at the bottom.
/// With `outline`, vertices of boundary cells adjacent to another cell are
/// drawn black.
pub fn render_tessellation(t: &Tessellation, outline: bool) -> image::RgbImage {
    let n = t.grid.n as u32;
    let mut img = image::RgbImage::new(n, n);
    let mut nb = [0usize; 4];
    for py in 0..n {
        for px in 0..n {
            let j = (n - 1 - py) as usize;
            let i = px as usize;
            let v = t.grid.idx(i, j);
            let o = t.owner[v];
            let color = if o == u32::MAX {
                [0, 0, 0]
            } else if outline && t.boundary_cells[o as usize] && {
                let k = t.grid.neighbors(v, &mut nb);
                nb[..k].iter().any(|&w| t.owner[w] != o)
            } {
                [0, 0, 0]
            } else {
                owner_color(o)
            };
            img.put_pixel(px, py, image::Rgb(color));
        }
    }
    img
}

/// Embedded adjacency graph as SVG: unit circle, edges as segments, cells
/// as dots.
pub fn embedding_svg(e: &Embedding, t: &Tessellation) -> String {
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.1 -1.1 2.2 2.2\" width=\"800\" height=\"800\">\n",
    );
    s.push_str("<circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"none\" stroke=\"#ccc\" stroke-width=\"0.005\"/>\n");
    for (a, nbrs) in t.adjacency.iter().enumerate() {
        let (ax, ay) = e.positions[a];
        for &b in nbrs {
            if (b as usize) < a {
                continue;
            }
            let (bx, by) = e.positions[b as usize];
            write!(
                s,
                "<line x1=\"{ax:.6}\" y1=\"{:.6}\" x2=\"{bx:.6}\" y2=\"{:.6}\" stroke=\"#555\" stroke-width=\"0.003\"/>\n",
                -ay, -by
            )
            .unwrap();
        }
    }
    for (c, &(x, y)) in e.positions.iter().enumerate() {
        let fill = if t.boundary_cells[c] { "#d33" } else { "#36c" };
        write!(
            s,
            "<circle cx=\"{x:.6}\" cy=\"{:.6}\" r=\"0.012\" fill=\"{fill}\"/>\n",
            -y
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
