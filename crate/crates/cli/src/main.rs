use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lqgv_core::field::{
    add_log_singularity, read_field_cache, sample_wn_field, write_field_cache,
};
use lqgv_core::measure::{build_measure, sample_poisson};
use lqgv_core::metric::build_metric_graph;
use lqgv_core::verify;
use lqgv_core::voronoi::{cell_stats, tessellate, tessellate_disk, Tessellation};
use lqgv_core::{tutte, walk, Error, Field, Grid, Result, RngSeed};

use lqgv_cli::artifact::{self, ArtifactWriter};
use lqgv_cli::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "lqgv", about = "Tessellation simulator and verifier")]
struct Cli {
    /// simulate | tutte | verify | render
    mode: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Binary field cache to reuse (read if present, written otherwise).
    #[arg(long)]
    field_cache: Option<PathBuf>,
    /// Overrides the Poisson intensity from the config file.
    #[arg(long)]
    lambda: Option<f64>,
    /// Separate stream for the point process.
    #[arg(long)]
    poisson_seed: Option<u64>,
    /// CSV of center-to-point distance samples (relative to --out).
    #[arg(long)]
    emit_distances: Option<String>,
    #[arg(long)]
    walks: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .expect("thread pool initializes once");
    }
    let cfg = match RunConfig::from_file(&cli.config) {
        Ok(mut cfg) => {
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(l) = cli.lambda {
                cfg.lambda = Some(l);
            }
            if let Some(w) = cli.walks {
                cfg.walks = w;
            }
            if let Some(m) = cli.max_steps {
                cfg.max_steps = m;
            }
            if let Some(dt) = cli.dt {
                cfg.dt = Some(dt);
            }
            cfg
        }
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let run = match cli.mode.as_str() {
        "simulate" => run_simulate(&cli, &cfg),
        "render" => run_render(&cli, &cfg),
        "tutte" => run_tutte(&cli, &cfg),
        "verify" => run_verify(&cli, &cfg),
        other => {
            eprintln!("unknown mode {other:?} (expected simulate|tutte|verify|render)");
            return ExitCode::from(2);
        }
    };
    match run {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn grid_for(cfg: &RunConfig) -> Result<Grid> {
    if cfg.torus {
        Grid::unit_torus(cfg.n)
    } else {
        Grid::unit(cfg.n)
    }
}

fn load_field(cli: &Cli, cfg: &RunConfig) -> Result<Field> {
    let grid = grid_for(cfg)?;
    let cache_path: Option<PathBuf> = cli.field_cache.clone().or_else(|| {
        std::env::var_os("LQGV_CACHE_DIR").map(|dir| {
            let kind = if cfg.flat_field { "flat" } else { "wn" };
            let topo = if cfg.torus { "torus" } else { "plane" };
            PathBuf::from(dir).join(format!(
                "field-{}-{}-{}-{}-{}.lqgf",
                cfg.n,
                topo,
                kind,
                cfg.t_min_or_default(),
                cfg.seed
            ))
        })
    });
    if let Some(p) = &cache_path {
        if p.exists() {
            let f = read_field_cache(p)?;
            if f.grid != grid {
                return Err(Error::GridMismatch);
            }
            return Ok(f);
        }
    }
    let mut f = if cfg.flat_field {
        Field::constant(grid, 0.0)
    } else {
        sample_wn_field(grid, cfg.t_min_or_default(), RngSeed::new(cfg.seed, 0))?
    };
    if cfg.alpha != 0.0 {
        let l = grid.len;
        let center = (grid.origin.0 + l / 2.0, grid.origin.1 + l / 2.0);
        f = add_log_singularity(&f, cfg.alpha, center)?;
    }
    if let Some(p) = &cache_path {
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write_field_cache(&f, p)?;
    }
    Ok(f)
}

struct Instance {
    field: Field,
    graph: lqgv_core::MetricGraph,
    measure: lqgv_core::AreaMeasure,
    points: lqgv_core::PointProcess,
}

fn build_instance(cli: &Cli, cfg: &RunConfig) -> Result<Instance> {
    let field = load_field(cli, cfg)?;
    let graph = build_metric_graph(&field)?;
    let measure = build_measure(&field)?;
    let lambda = cfg
        .lambda
        .unwrap_or_else(|| cfg.expected_points.unwrap_or(40.0) / measure.total);
    let pseed = cli.poisson_seed.unwrap_or(cfg.seed.wrapping_add(1));
    let points = sample_poisson(&measure, lambda, RngSeed::new(pseed, 1))?;
    Ok(Instance { field, graph, measure, points })
}

fn emit_points_csv(w: &mut ArtifactWriter, t: &Tessellation) -> Result<()> {
    let rows: Vec<Vec<f64>> = t
        .points
        .points
        .iter()
        .enumerate()
        .map(|(k, &(v, (x, y)))| {
            let (i, j) = t.grid.coords(v);
            vec![k as f64, i as f64, j as f64, x, y]
        })
        .collect();
    w.write_csv("points.csv", "index,i,j,x,y", &rows)
}

fn run_simulate(cli: &Cli, cfg: &RunConfig) -> Result<bool> {
    let inst = build_instance(cli, cfg)?;
    let t = tessellate(&inst.graph, &inst.points)?;
    let stats = cell_stats(&t, &inst.measure, &inst.graph)?;
    let mut w = ArtifactWriter::new(&cli.out)?;
    w.write("config.txt", cfg.raw.as_bytes())?;
    emit_points_csv(&mut w, &t)?;
    let rows: Vec<Vec<f64>> = (0..t.num_cells())
        .map(|c| {
            let (x, y) = t.points.points[c].1;
            vec![
                c as f64,
                x,
                y,
                stats.diam[c],
                stats.area[c],
                stats.deg[c] as f64,
                stats.bh_radius[c],
                stats.bh_volume[c],
            ]
        })
        .collect();
    w.write_csv("cells.csv", "point_id,x,y,diam,area,deg,bh_radius,bh_volume", &rows)?;
    let img = artifact::render_tessellation(&t, cfg.outline);
    let mut png = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
        .map_err(|e| Error::Config(format!("png encode: {e}")))?;
    w.write("tessellation.png", &png)?;
    if let Some(name) = &cli.emit_distances {
        let center = t.grid.center_vertex();
        let rows: Vec<Vec<f64>> = t
            .points
            .points
            .iter()
            .enumerate()
            .map(|(k, &(v, _))| {
                let (d, _) = lqgv_core::metric::distance(&inst.graph, center, v);
                vec![k as f64, d]
            })
            .collect();
        w.write_csv(name, "point_id,distance", &rows)?;
    }
    for k in 0..cfg.walks {
        let ws = RngSeed::new(cfg.seed, 0x100 + k as u64);
        let p = walk::run_walk(&t, t.grid.center_vertex(), cfg.max_steps, !cfg.torus, ws)?;
        let rows: Vec<Vec<f64>> = p
            .cells
            .iter()
            .zip(&p.embedded)
            .enumerate()
            .map(|(s, (&c, &(x, y)))| vec![s as f64, c as f64, x, y])
            .collect();
        w.write_csv(&format!("walk_{k}.csv"), "step,cell,x,y", &rows)?;
    }
    if let (Some(dt), false) = (cfg.dt, cfg.torus) {
        let grid = t.grid;
        let l = grid.len;
        let center = (grid.origin.0 + l / 2.0, grid.origin.1 + l / 2.0);
        let b = walk::sample_brownian(center, dt, center, 0.45 * l, RngSeed::new(cfg.seed, 0x200))?;
        let rows: Vec<Vec<f64>> = b
            .vertices
            .iter()
            .enumerate()
            .map(|(s, &(x, y))| vec![s as f64, x, y])
            .collect();
        w.write_csv("brownian.csv", "step,x,y", &rows)?;
    }
    drop(inst.field);
    w.finish()?;
    Ok(true)
}

fn run_render(cli: &Cli, cfg: &RunConfig) -> Result<bool> {
    let inst = build_instance(cli, cfg)?;
    let t = tessellate(&inst.graph, &inst.points)?;
    let mut w = ArtifactWriter::new(&cli.out)?;
    w.write("config.txt", cfg.raw.as_bytes())?;
    emit_points_csv(&mut w, &t)?;
    let img = artifact::render_tessellation(&t, cfg.outline);
    let mut png = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
        .map_err(|e| Error::Config(format!("png encode: {e}")))?;
    w.write("tessellation.png", &png)?;
    w.finish()?;
    Ok(true)
}

fn run_tutte(cli: &Cli, cfg: &RunConfig) -> Result<bool> {
    if cfg.torus {
        return Err(Error::RequiresPlaneWindow);
    }
    let inst = build_instance(cli, cfg)?;
    let grid = inst.graph.grid;
    let l = grid.len;
    let center = (grid.origin.0 + l / 2.0, grid.origin.1 + l / 2.0);
    let radius = 0.45 * l;
    let t = tessellate_disk(&inst.graph, &inst.points, center, radius)?;
    // z0: the owner of an extra measure sample, falling back to the center
    // cell; x0: the first boundary cell.
    let mut z0 = t.owner[grid.center_vertex()];
    for attempt in 0..20u64 {
        let es = RngSeed::new(cfg.seed, 0x300 + attempt);
        if let Ok(extra) = sample_poisson(&inst.measure, 1.0 / inst.measure.total, es) {
            if let Some(&(v, _)) = extra.points.first() {
                let o = t.owner[v];
                if o != u32::MAX && !t.boundary_cells[o as usize] {
                    z0 = o;
                    break;
                }
            }
        }
    }
    if z0 == u32::MAX || t.boundary_cells[z0 as usize] {
        return Err(Error::TooFewCells);
    }
    let x0 = (0..t.num_cells() as u32)
        .find(|&c| t.boundary_cells[c as usize])
        .ok_or(Error::TooFewBoundaryCells { need: 3, found: 0 })?;
    let e = tutte::tutte_embedding(&t, z0, x0, cfg.tol)?;
    let probs = tutte::hitting_probabilities(&t, z0)?;
    let prob_sum: f64 = probs.iter().sum();
    let apriori = move |p: (f64, f64)| ((p.0 - center.0) / radius, (p.1 - center.1) / radius);
    // Displacement is measured against the chart composed with the disk
    // automorphism sending z0 to the origin, modulo the free rotation.
    let mob = tutte::mobius_to_origin(apriori(t.points.points[z0 as usize].1));
    let chart = move |p| mob(apriori(p));
    let e = tutte::align_rotation(&e, &t, chart);
    let (max_disp, mean_disp) = tutte::embedding_displacement(&e, &t, chart);
    let max_ok = tutte::max_principle_holds(&e, &t);
    let pass = e.residual <= cfg.tol && (prob_sum - 1.0).abs() <= 1e-10 && max_ok;

    let mut w = ArtifactWriter::new(&cli.out)?;
    w.write("config.txt", cfg.raw.as_bytes())?;
    w.write("embedding.svg", artifact::embedding_svg(&e, &t).as_bytes())?;
    let rows: Vec<Vec<f64>> = (0..t.num_cells())
        .map(|c| {
            let (tx, ty) = e.positions[c];
            let (ax, ay) = apriori(t.points.points[c].1);
            vec![c as f64, tx, ty, ax, ay]
        })
        .collect();
    w.write_csv("embedding.csv", "cell,tutte_x,tutte_y,apriori_x,apriori_y", &rows)?;
    let mut parameters = std::collections::BTreeMap::new();
    parameters.insert("n".to_string(), cfg.n.to_string());
    parameters.insert("tol".to_string(), cfg.tol.to_string());
    let report = verify::ExperimentReport {
        name: "tutte".into(),
        parameters,
        replicates: 1,
        excluded: 0,
        estimates: vec![
            verify::Estimate::point("residual", e.residual),
            verify::Estimate::point("prob_sum_defect", (prob_sum - 1.0).abs()),
            verify::Estimate::point("max_displacement", max_disp),
            verify::Estimate::point("mean_displacement", mean_disp),
            verify::Estimate::point("max_principle", if max_ok { 1.0 } else { 0.0 }),
        ],
        pass,
        seed: RngSeed::new(cfg.seed, 0),
        wall_seconds: 0.0,
    };
    w.write_report("report.json", &report)?;
    w.finish()?;
    Ok(pass)
}

fn run_verify(cli: &Cli, cfg: &RunConfig) -> Result<bool> {
    let seed = RngSeed::new(cfg.seed, 0);
    let e = cfg.ensemble();
    let name = cfg
        .experiment
        .clone()
        .ok_or_else(|| Error::Config("verify mode needs experiment=<name>".into()))?;
    let out = match name.as_str() {
        "variance" => verify::wn_variance_law(cfg.n, 0.05, 0.2, cfg.replicates, seed)?,
        "scaling" => verify::scaling_covariance(cfg.n, 0.7, seed)?,
        "euclidean" => verify::euclidean_suite(
            cfg.n,
            cfg.expected_points.unwrap_or(700.0),
            if cfg.walks > 0 { cfg.walks } else { 10_000 },
            seed,
        )?,
        "volume" => {
            let band = if cfg.flat_field { (1.85, 2.15) } else { (3.0, 5.0) };
            verify::volume_exponent(&e, cfg.replicates, band, seed)?
        }
        "annulus" => verify::annulus_crossing(&e, cfg.rho, cfg.replicates, seed)?,
        "swallow" => verify::swallow_statistic(&e, cfg.replicates, 6, seed)?,
        "min_max" => verify::min_max_ball_diam(&e, cfg.replicates, seed)?,
        "moment_tail" => verify::moment_tail(&e, cfg.replicates, seed)?,
        "mass_transport" => verify::mass_transport(&e, cfg.replicates, seed)?,
        "walk_trend" => {
            let lambdas = if cfg.lambdas.is_empty() {
                vec![e.lambda, 4.0 * e.lambda, 16.0 * e.lambda]
            } else {
                cfg.lambdas.clone()
            };
            let walks = if cfg.walks > 0 { cfg.walks } else { 200 };
            verify::walk_trend(&e, &lambdas, cfg.replicates, walks, seed)?
        }
        "isotropy" => {
            let steps = if cfg.max_steps != 1_000_000 { cfg.max_steps } else { 10_000 };
            verify::isotropy(&e, cfg.replicates, steps, 0.05, (0.9, 1.1), seed)?
        }
        other => return Err(Error::Config(format!("unknown experiment {other:?}"))),
    };
    let mut w = ArtifactWriter::new(&cli.out)?;
    w.write("config.txt", cfg.raw.as_bytes())?;
    w.write_report(&format!("{name}.json"), &out.report)?;
    if !out.columns.is_empty() {
        w.write_columns(&format!("{name}_samples.csv"), &out.columns)?;
    }
    w.finish()?;
    if !out.report.pass {
        eprintln!(
            "FAIL {}: {}",
            out.report.name,
            cli.out.join(format!("{name}.json")).display()
        );
    }
    Ok(out.report.pass)
}
