//! Scale-decomposed white-noise field sampler.
//!
//! The field at cutoff t is a sum over geometric scale slices of independent
//! white-noise sheets smoothed by the heat kernel at the slice scale
//! (spectral synthesis on a slice-adapted coarse periodic grid, then bilinear
//! interpolation onto the target grid). Slice boundaries are global (fixed
//! powers of 2^(1/8)), so two samples with the same seed and different
//! cutoffs share the randomness of their common scale range exactly; the
//! requested cutoff is snapped to the nearest slice boundary.
//!
//! Each slice's per-vertex variance is normalized to its analytic value, so
//! Var(h_ttilde - h_t) = log(ttilde/t) holds exactly at slice boundaries.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, Topology};
use crate::rng::RngSeed;

use super::{Field, FieldKind};

/// Scale slices per octave of t.
pub const SLICES_PER_OCTAVE: usize = 8;

const TAG_WN: u64 = 0x01;
const TAG_TR: u64 = 0x02;

/// Truncation radius of the spatially truncated field's kernel.
const TRUNC_RADIUS: f64 = 0.1;

/// Snap a cutoff t in (0, 1] to the nearest global slice boundary
/// 2^(-j / SLICES_PER_OCTAVE). Returns (snapped t, slice count j).
pub fn snap_cutoff(t: f64) -> (f64, usize) {
    assert!(t > 0.0 && t <= 1.0);
    let j = (-t.log2() * SLICES_PER_OCTAVE as f64).round().max(0.0) as usize;
    (slice_boundary(j), j)
}

fn slice_boundary(j: usize) -> f64 {
    2f64.powf(-(j as f64) / SLICES_PER_OCTAVE as f64)
}

/// Sample the scale-decomposed field at cutoff t_min on the grid vertices.
pub fn sample_wn_field(grid: Grid, t_min: f64, seed: RngSeed) -> Result<Field> {
    let mesh = grid.mesh();
    if !(t_min > 0.0 && t_min <= 1.0) || t_min < mesh / 4.0 {
        return Err(Error::CutoffBelowMesh { t_min, min: mesh / 4.0 });
    }
    if grid.n < 8 {
        return Err(Error::GridTooSmall(grid.n));
    }
    let (t_snap, slices) = snap_cutoff(t_min);
    let mut values = vec![0.0f64; grid.num_vertices()];
    let mut planner = FftPlanner::new();
    for j in 0..slices {
        add_slice(&grid, &mut values, j, seed, TAG_WN, None, &mut planner);
    }
    let field = Field {
        grid,
        values,
        scale_range: (t_snap, 1.0),
        kind: FieldKind::Wn,
        seed,
    };
    field.check_finite()?;
    Ok(field)
}

/// Sample the spatially truncated field: kernels cut off at Euclidean radius
/// just under 1/10, so restrictions to vertex sets at distance >= 1/5 are
/// exactly independent. The internal scale cutoff is the mesh size.
pub fn sample_truncated_field(grid: Grid, seed: RngSeed) -> Result<Field> {
    if grid.len < 1.0 {
        return Err(Error::WindowTooSmall(grid.len));
    }
    let mesh = grid.mesh();
    let (t_snap, slices) = snap_cutoff(mesh.min(1.0));
    let mut values = vec![0.0f64; grid.num_vertices()];
    let mut planner = FftPlanner::new();
    for j in 0..slices {
        add_slice(
            &grid,
            &mut values,
            j,
            seed,
            TAG_TR,
            Some(TRUNC_RADIUS),
            &mut planner,
        );
    }
    let field = Field {
        grid,
        values,
        scale_range: (t_snap, 1.0),
        kind: FieldKind::WnTruncated,
        seed,
    };
    field.check_finite()?;
    Ok(field)
}

/// Analytic per-vertex variance of slice j (free kernel): log 2 / m.
pub fn slice_variance() -> f64 {
    std::f64::consts::LN_2 / SLICES_PER_OCTAVE as f64
}

/// Per-vertex variance of slice j with the kernel truncated at radius r:
/// integral over the slice of (1 - exp(-2 r^2 / s)) / (2 s) ds.
fn truncated_slice_variance(s_lo: f64, s_hi: f64, r: f64) -> f64 {
    // Simpson quadrature in log s; the integrand is smooth.
    let m = 64;
    let a = s_lo.ln();
    let b = s_hi.ln();
    let h = (b - a) / m as f64;
    let f = |u: f64| {
        let s = u.exp();
        // ds = s du, integrand (1 - exp(-2r^2/s)) / (2 s) -> (1 - exp(-2r^2/s)) / 2
        0.5 * (1.0 - (-2.0 * r * r / s).exp())
    };
    let mut sum = f(a) + f(b);
    for k in 1..m {
        sum += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

struct SynthGrid {
    /// Cells per side of the synthesis torus.
    m: usize,
    /// Spacing.
    a: f64,
    /// Plane coordinate of synthesis node (0, 0).
    origin: (f64, f64),
}

/// Synthesize slice j and accumulate it onto the target vertex values.
fn add_slice(
    grid: &Grid,
    values: &mut [f64],
    j: usize,
    seed: RngSeed,
    tag: u64,
    trunc: Option<f64>,
    planner: &mut FftPlanner<f64>,
) {
    let t_hi = slice_boundary(j);
    let t_lo = slice_boundary(j + 1);
    // s-range of the slice is [t_lo^2, t_hi^2]; representative scale is the
    // geometric midpoint.
    let s_rep = t_hi * t_lo;
    let sigma = (s_rep / 2.0).sqrt();
    let mesh = grid.mesh();
    // The synthesis grid only needs to resolve the kernel; slices below a
    // quarter-mesh are unresolvable on the target grid anyway.
    let target_spacing = (sigma / 3.0).max(mesh / 4.0);

    // Below this point the kernel at the truncation radius is zero to f64
    // precision, so the free spectral path gives the same field.
    let trunc = match trunc {
        Some(r) if r * r / s_rep > 200.0 => None,
        other => other,
    };
    // A truncated kernel must also resolve its own cutoff edge.
    let target_spacing = match trunc {
        Some(r) => target_spacing.min(r / 5.0),
        None => target_spacing,
    };

    let synth = match grid.topology {
        Topology::Torus => {
            // The synthesis torus must share the grid's period so the field
            // is exactly periodic with the window.
            let period = grid.period();
            let m = (period / target_spacing).ceil() as usize;
            SynthGrid { m, a: period / m as f64, origin: grid.origin }
        }
        Topology::PlaneWindow => {
            let pad = match trunc {
                // Kernel support is compact; pad just beyond twice the radius.
                Some(r) => 2.0 * r + 0.05,
                // Slice covariance decays like exp(-d^2 / (2 s)): 8 sqrt(s)
                // of padding puts wraparound correlations below 1e-14.
                None => 8.0 * s_rep.sqrt(),
            };
            let m = ((grid.len + pad) / target_spacing).ceil() as usize;
            SynthGrid {
                m,
                a: target_spacing,
                origin: (grid.origin.0 - pad / 2.0, grid.origin.1 - pad / 2.0),
            }
        }
    };

    let m = synth.m;
    let mut rng = seed.keyed_rng(&[tag, j as u64]);
    let mut buf: Vec<Complex<f64>> = (0..m * m)
        .map(|_| Complex::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();

    let fft_fwd = planner.plan_fft_forward(m);
    let fft_inv = planner.plan_fft_inverse(m);

    fft2d(&mut buf, m, &fft_fwd);

    // Transfer function and its sum of squares for exact normalization.
    let mut sumsq = 0.0f64;
    match trunc {
        None => {
            // Heat kernel p(s/2; .) has Fourier transform exp(-s |k|^2 / 4).
            let period = m as f64 * synth.a;
            let two_pi = 2.0 * std::f64::consts::PI;
            let mut hk = vec![0.0f64; m];
            for (q, h) in hk.iter_mut().enumerate() {
                let f = if q <= m / 2 { q as f64 } else { q as f64 - m as f64 };
                let k = two_pi * f / period;
                *h = (-s_rep * k * k / 4.0).exp();
            }
            for qy in 0..m {
                for qx in 0..m {
                    let h = hk[qx] * hk[qy];
                    sumsq += h * h;
                    buf[qy * m + qx] *= h;
                }
            }
        }
        Some(r) => {
            // Real-space kernel exp(-|x|^2 / s) hard-truncated so the field
            // at a point depends only on noise within radius < 1/10 even
            // after bilinear interpolation.
            let r_eff = r - 2.0 * synth.a;
            assert!(r_eff > 0.0, "synthesis spacing too coarse for kernel truncation");
            let mut kernel = vec![Complex::new(0.0, 0.0); m * m];
            let reach = (r_eff / synth.a).floor() as isize;
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let rx = dx as f64 * synth.a;
                    let ry = dy as f64 * synth.a;
                    let d2 = rx * rx + ry * ry;
                    if d2 <= r_eff * r_eff {
                        let ix = dx.rem_euclid(m as isize) as usize;
                        let iy = dy.rem_euclid(m as isize) as usize;
                        kernel[iy * m + ix] = Complex::new((-d2 / s_rep).exp(), 0.0);
                    }
                }
            }
            fft2d(&mut kernel, m, &fft_fwd);
            for (b, k) in buf.iter_mut().zip(kernel.iter()) {
                // Even kernel: transform is real up to roundoff.
                let h = k.re;
                sumsq += h * h;
                *b *= h;
            }
        }
    }

    ifft2d(&mut buf, m, &fft_inv);

    let var_grid = sumsq / (m * m) as f64;
    let var_target = match trunc {
        None => slice_variance(),
        Some(r) => truncated_slice_variance(t_lo * t_lo, t_hi * t_hi, r - 2.0 * synth.a),
    };
    let scale = if var_grid > 0.0 { (var_target / var_grid).sqrt() } else { 0.0 };

    // Bilinear interpolation (periodic) onto the target grid.
    let n = grid.n;
    let inv_a = 1.0 / synth.a;
    for jy in 0..n {
        for jx in 0..n {
            let x = grid.origin.0 + jx as f64 * mesh;
            let y = grid.origin.1 + jy as f64 * mesh;
            let fx = (x - synth.origin.0) * inv_a;
            let fy = (y - synth.origin.1) * inv_a;
            let ix = fx.floor() as isize;
            let iy = fy.floor() as isize;
            let tx = fx - ix as f64;
            let ty = fy - iy as f64;
            let w = |px: isize, py: isize| -> f64 {
                let ux = px.rem_euclid(m as isize) as usize;
                let uy = py.rem_euclid(m as isize) as usize;
                buf[uy * m + ux].re
            };
            let val = w(ix, iy) * (1.0 - tx) * (1.0 - ty)
                + w(ix + 1, iy) * tx * (1.0 - ty)
                + w(ix, iy + 1) * (1.0 - tx) * ty
                + w(ix + 1, iy + 1) * tx * ty;
            values[jy * n + jx] += scale * val;
        }
    }
}

fn fft2d(buf: &mut [Complex<f64>], m: usize, fft: &Arc<dyn Fft<f64>>) {
    for row in buf.chunks_mut(m) {
        fft.process(row);
    }
    transpose(buf, m);
    for row in buf.chunks_mut(m) {
        fft.process(row);
    }
    transpose(buf, m);
}

fn ifft2d(buf: &mut [Complex<f64>], m: usize, fft: &Arc<dyn Fft<f64>>) {
    for row in buf.chunks_mut(m) {
        fft.process(row);
    }
    transpose(buf, m);
    for row in buf.chunks_mut(m) {
        fft.process(row);
    }
    transpose(buf, m);
    let norm = 1.0 / (m * m) as f64;
    for z in buf.iter_mut() {
        *z *= norm;
    }
}

fn transpose(buf: &mut [Complex<f64>], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}
