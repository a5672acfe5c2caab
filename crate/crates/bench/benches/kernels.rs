use criterion::{criterion_group, criterion_main, Criterion};

use lqgv_core::field::sample_wn_field;
use lqgv_core::measure::{build_measure, sample_poisson};
use lqgv_core::metric::{build_metric_graph, metric_ball};
use lqgv_core::tutte::tutte_embedding;
use lqgv_core::voronoi::{tessellate, tessellate_disk};
use lqgv_core::walk::{cmp_distance, run_walk, CurveSource, PlanarCurve};
use lqgv_core::{Field, Grid, RngSeed};

fn bench_field(c: &mut Criterion) {
    let g = Grid::unit(129).unwrap();
    c.bench_function("wn_field_129", |b| {
        let mut k = 0u64;
        b.iter(|| {
            k += 1;
            sample_wn_field(g, 0.05, RngSeed::new(1, k)).unwrap()
        })
    });
}

fn flat_instance(n: usize, count: f64) -> (lqgv_core::MetricGraph, lqgv_core::PointProcess) {
    let g = Grid::unit(n).unwrap();
    let f = Field::constant(g, 0.0);
    let mg = build_metric_graph(&f).unwrap();
    let m = build_measure(&f).unwrap();
    let p = sample_poisson(&m, count / m.total, RngSeed::new(2, 0)).unwrap();
    (mg, p)
}

fn bench_tessellate(c: &mut Criterion) {
    let (mg, p) = flat_instance(257, 400.0);
    c.bench_function("tessellate_257_400pts", |b| b.iter(|| tessellate(&mg, &p).unwrap()));
    c.bench_function("metric_ball_257", |b| {
        let center = mg.grid.center_vertex();
        b.iter(|| metric_ball(&mg, center, 0.2))
    });
}

fn bench_tutte(c: &mut Criterion) {
    let (mg, p) = flat_instance(129, 300.0);
    let grid = mg.grid;
    let l = grid.len;
    let center = (grid.origin.0 + l / 2.0, grid.origin.1 + l / 2.0);
    let t = tessellate_disk(&mg, &p, center, 0.45 * l).unwrap();
    let z0 = t.owner[grid.center_vertex()];
    let x0 = (0..t.num_cells() as u32)
        .find(|&c| t.boundary_cells[c as usize])
        .unwrap();
    c.bench_function("tutte_embedding_300cells", |b| {
        b.iter(|| tutte_embedding(&t, z0, x0, 1e-10).unwrap())
    });
}

fn bench_walk_frechet(c: &mut Criterion) {
    let (mg, p) = flat_instance(129, 300.0);
    let grid = mg.grid;
    let l = grid.len;
    let center = (grid.origin.0 + l / 2.0, grid.origin.1 + l / 2.0);
    let t = tessellate_disk(&mg, &p, center, 0.45 * l).unwrap();
    let start = grid.center_vertex();
    c.bench_function("walk_to_boundary", |b| {
        let mut k = 0u64;
        b.iter(|| {
            k += 1;
            run_walk(&t, start, 10_000_000, true, RngSeed::new(3, k)).unwrap()
        })
    });
    // Two fixed wiggly curves; only the DP cost matters here.
    let curve = |phase: f64| PlanarCurve {
        vertices: (0..200)
            .map(|k| {
                let s = k as f64 * 0.05;
                ((s + phase).sin() + 0.3 * (7.0 * s).cos(), (s * 1.3).cos() + phase)
            })
            .collect(),
        source: CurveSource::Brownian,
    };
    let a = curve(0.0);
    let b2 = curve(1.0);
    c.bench_function("frechet_200x200", |b| b.iter(|| cmp_distance(&a, &b2)));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = bench_field, bench_tessellate, bench_tutte, bench_walk_frechet
}
criterion_main!(kernels);
