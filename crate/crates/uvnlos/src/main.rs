use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use uvnlos::channel::{
    no_obstacle_baseline, path_loss_db, sweep_obstacle_offset, sweep_range, total_energy,
    ChannelResult, Scene, SweepRow,
};
use uvnlos::config::{load_config, ScenarioConfig};
use uvnlos::geometry::validate_geometry;
use uvnlos::mcpt::{trace, McptEstimate};
use uvnlos::reflection::ReflectionSurface;

#[derive(Parser)]
#[command(name = "uvnlos", about = "UV non-line-of-sight channel path loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario and write result.csv / summary.json.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (JSON, unit-suffixed quantities).
    #[arg(long)]
    config: PathBuf,
    /// analytic | mcpt | compare | sweep-range | sweep-offset
    #[arg(long, default_value = "analytic")]
    mode: Mode,
    /// Output directory (created if absent).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the Monte-Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Monte-Carlo photon count.
    #[arg(long)]
    photons: Option<u64>,
    /// Override quadrature node counts as T,W,U (vartheta, varpi, tau).
    #[arg(long, value_parser = parse_nodes)]
    nodes: Option<(usize, usize, usize)>,
    /// Ranges in meters for compare / sweep-range modes.
    #[arg(long, value_delimiter = ',')]
    ranges: Option<Vec<f64>>,
    /// Obstacle center offsets x_o in meters for sweep-offset mode.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    offsets: Option<Vec<f64>>,
    /// Also write plot.svg.
    #[arg(long)]
    plot: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, clap::ValueEnum)]
enum Mode {
    Analytic,
    Mcpt,
    Compare,
    SweepRange,
    SweepOffset,
}

fn parse_nodes(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected T,W,U".into());
    }
    let mut vals = [0usize; 3];
    for (slot, p) in vals.iter_mut().zip(&parts) {
        *slot = p.trim().parse().map_err(|_| format!("bad node count '{p}'"))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    if let Ok(threads) = std::env::var("UVNLOS_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// One output row; optional fields print as empty CSV cells.
#[derive(Default)]
struct Row {
    range_m: f64,
    x_o_m: Option<f64>,
    pl_total_db: Option<f64>,
    pl_sca_db: Option<f64>,
    pl_ref_db: Option<f64>,
    q_sca_j: Option<f64>,
    q_ref_j: Option<f64>,
    blocked_fraction: Option<f64>,
    mcpt_pl_db: Option<f64>,
    mcpt_stderr_db: Option<f64>,
    delta_db: Option<f64>,
}

impl Row {
    fn from_analytic(range_m: f64, x_o_m: Option<f64>, res: &ChannelResult, pulse: f64) -> Self {
        Row {
            range_m,
            x_o_m,
            pl_total_db: Some(res.path_loss_db),
            pl_sca_db: Some(path_loss_db(pulse, res.q_sca)),
            pl_ref_db: Some(path_loss_db(pulse, res.q_ref)),
            q_sca_j: Some(res.q_sca),
            q_ref_j: Some(res.q_ref),
            blocked_fraction: Some(res.scatter_diag.blocked_fraction),
            ..Row::default()
        }
    }

    fn with_mcpt(mut self, est: &McptEstimate) -> Self {
        self.mcpt_pl_db = Some(est.path_loss_db);
        self.mcpt_stderr_db = Some(est.std_error_db());
        if let Some(pl) = self.pl_total_db {
            self.delta_db = Some(pl - est.path_loss_db);
        }
        self
    }
}

fn csv_cell(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_infinite() => if x > 0.0 { "inf" } else { "-inf" }.into(),
        Some(x) => format!("{x:.9e}"),
    }
}

fn write_csv(path: &std::path::Path, rows: &[Row]) -> std::io::Result<()> {
    let mut out = String::from(
        "range_m,x_o_m,pl_total_db,pl_sca_db,pl_ref_db,q_sca_j,q_ref_j,blocked_fraction,mcpt_pl_db,mcpt_stderr_db,delta_db\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_cell(Some(r.range_m)),
            csv_cell(r.x_o_m),
            csv_cell(r.pl_total_db),
            csv_cell(r.pl_sca_db),
            csv_cell(r.pl_ref_db),
            csv_cell(r.q_sca_j),
            csv_cell(r.q_ref_j),
            csv_cell(r.blocked_fraction),
            csv_cell(r.mcpt_pl_db),
            csv_cell(r.mcpt_stderr_db),
            csv_cell(r.delta_db),
        ));
    }
    std::fs::write(path, out)
}

fn mcpt_for_scene(cfg: &ScenarioConfig, scene: &Scene) -> McptEstimate {
    let surface = match (&scene.obstacle, &scene.reflection) {
        (Some(obs), Some(rp)) if rp.r_r > 0.0 => {
            Some(ReflectionSurface::on_facade(obs, rp.r_r, rp.m_s, rp.eta))
        }
        _ => None,
    };
    trace(
        &scene.geom,
        &scene.atm,
        scene.obstacle.as_ref(),
        surface.as_ref(),
        &cfg.mcpt,
    )
}

fn run(args: &RunArgs) -> uvnlos::Result<()> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.mcpt.rng_seed = seed;
    }
    if let Some(n) = args.photons {
        cfg.mcpt.n_photons = n;
    }
    if let Some((t, w, u)) = args.nodes {
        cfg.quadrature.n_vartheta = t;
        cfg.quadrature.n_varpi = w;
        cfg.quadrature.n_tau = u;
    }
    std::fs::create_dir_all(&args.out)?;

    let scene = cfg.scene();
    let pulse = scene.geom.pulse_energy;
    let mut warnings: Vec<String> = Vec::new();
    if let Some(obs) = &scene.obstacle {
        let report = validate_geometry(&scene.geom, obs);
        warnings = report.violations;
        for v in &warnings {
            eprintln!("warning: {v}");
        }
    }

    let mut rows: Vec<Row> = Vec::new();
    let mut summary = serde_json::json!({
        "mode": format!("{:?}", args.mode),
        "config": serde_json::from_str::<serde_json::Value>(&cfg.emit()).unwrap(),
        "validation_warnings": warnings,
    });

    match args.mode {
        Mode::Analytic => {
            let res = total_energy(&scene);
            let base = no_obstacle_baseline(&scene.geom, &scene.atm, &scene.quad);
            rows.push(Row::from_analytic(
                scene.geom.range_r,
                scene.obstacle.map(|o| o.center_x),
                &res,
                pulse,
            ));
            summary["result"] = result_json(&res);
            summary["baseline_pl_db"] = serde_json::json!(base.path_loss_db);
        }
        Mode::Mcpt => {
            let est = mcpt_for_scene(&cfg, &scene);
            let row = Row {
                range_m: scene.geom.range_r,
                x_o_m: scene.obstacle.map(|o| o.center_x),
                ..Row::default()
            }
            .with_mcpt(&est);
            rows.push(row);
            summary["mcpt"] = mcpt_json(&est);
        }
        Mode::Compare => {
            let ranges = args
                .ranges
                .clone()
                .unwrap_or_else(|| (0..7).map(|i| 50.0 + 25.0 * i as f64).collect());
            let mut points = Vec::new();
            for r in ranges {
                let sc = cfg.scene_at_range(r);
                let res = total_energy(&sc);
                let est = mcpt_for_scene(&cfg, &sc);
                points.push(serde_json::json!({
                    "range_m": r,
                    "analytic_pl_db": res.path_loss_db,
                    "mcpt_pl_db": est.path_loss_db,
                    "mcpt_stderr_db": est.std_error_db(),
                    "delta_db": res.path_loss_db - est.path_loss_db,
                }));
                rows.push(
                    Row::from_analytic(r, sc.obstacle.map(|o| o.center_x), &res, pulse)
                        .with_mcpt(&est),
                );
            }
            summary["points"] = serde_json::Value::Array(points);
        }
        Mode::SweepRange => {
            let ranges = args
                .ranges
                .clone()
                .unwrap_or_else(|| (0..7).map(|i| 50.0 + 25.0 * i as f64).collect());
            for sr in sweep_range(&scene, &ranges) {
                push_sweep_row(&mut rows, &sr, pulse);
            }
        }
        Mode::SweepOffset => {
            let offsets = args.offsets.clone().unwrap_or_else(|| {
                let s = scene
                    .obstacle
                    .map(|o| o.thickness_s)
                    .unwrap_or(scene.geom.range_r / 10.0);
                // offsets pulling the box away from the transmitter
                (1..=8).map(|i| -0.5 * s - 10.0 * i as f64).collect()
            });
            for sr in sweep_obstacle_offset(&scene, &offsets) {
                push_sweep_row(&mut rows, &sr, pulse);
            }
        }
    }

    write_csv(&args.out.join("result.csv"), &rows)?;
    std::fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    if args.plot {
        let svg = plot_svg(&rows, args.mode);
        std::fs::write(args.out.join("plot.svg"), svg)?;
    }
    Ok(())
}

fn push_sweep_row(rows: &mut Vec<Row>, sr: &SweepRow, pulse: f64) {
    for v in &sr.validation_violations {
        eprintln!("warning (r = {} m): {v}", sr.range_m);
    }
    rows.push(Row::from_analytic(sr.range_m, sr.x_o_m, &sr.result, pulse));
}

fn result_json(res: &ChannelResult) -> serde_json::Value {
    serde_json::json!({
        "q_sca_j": res.q_sca,
        "q_ref_j": res.q_ref,
        "q_total_j": res.q_total,
        "path_loss_db": res.path_loss_db,
        "blocked_fraction": res.scatter_diag.blocked_fraction,
        "truncation_bound": res.scatter_diag.truncation_bound,
        "epsilon_underflows": res.scatter_diag.epsilon_underflows,
        "reflection_active_fraction": res.reflection_diag.active_fraction,
    })
}

fn mcpt_json(est: &McptEstimate) -> serde_json::Value {
    serde_json::json!({
        "q_r_hat_j": est.q_r_hat,
        "std_error_j": est.std_error,
        "path_loss_db": est.path_loss_db,
        "std_error_db": est.std_error_db(),
        "n_contributing": est.n_contributing,
        "n_photons": est.n_photons,
        "insufficient": est.insufficient(),
    })
}

/// Minimal self-contained SVG: path loss against the sweep variable.
fn plot_svg(rows: &[Row], mode: Mode) -> String {
    let (w, h, ml, mb) = (640.0, 420.0, 60.0, 40.0);
    let xs: Vec<f64> = rows
        .iter()
        .map(|r| match mode {
            Mode::SweepOffset => r.x_o_m.unwrap_or(r.range_m),
            _ => r.range_m,
        })
        .collect();
    let series: Vec<(&str, &str, Vec<Option<f64>>)> = vec![
        ("total", "#1f77b4", rows.iter().map(|r| r.pl_total_db).collect()),
        ("scattered", "#2ca02c", rows.iter().map(|r| r.pl_sca_db).collect()),
        ("reflected", "#d62728", rows.iter().map(|r| r.pl_ref_db).collect()),
        ("mcpt", "#9467bd", rows.iter().map(|r| r.mcpt_pl_db).collect()),
    ];
    let finite = |v: &Option<f64>| v.filter(|x| x.is_finite());
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|(_, _, v)| v.iter().filter_map(finite))
        .collect();
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = if ys.is_empty() { (0.0, 1.0) } else { bounds(&ys) };
    let sx = |x: f64| ml + (x - x_lo) / (x_hi - x_lo).max(1e-12) * (w - ml - 20.0);
    let sy = |y: f64| h - mb - (y - y_lo) / (y_hi - y_lo).max(1e-12) * (h - mb - 20.0);
    let mut body = String::new();
    for (name, color, vals) in &series {
        let pts: Vec<String> = xs
            .iter()
            .zip(vals)
            .filter_map(|(&x, v)| finite(v).map(|y| format!("{:.2},{:.2}", sx(x), sy(y))))
            .collect();
        if pts.len() < 2 {
            continue;
        }
        body.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n<text x=\"{:.0}\" y=\"{:.0}\" fill=\"{color}\" font-size=\"12\">{name}</text>\n",
            pts.join(" "),
            w - 110.0,
            30.0 + 16.0 * series.iter().position(|(n, _, _)| n == name).unwrap() as f64,
        ));
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n<line x1=\"{ml}\" y1=\"{:.0}\" x2=\"{:.0}\" y2=\"{:.0}\" stroke=\"black\"/>\n<line x1=\"{ml}\" y1=\"20\" x2=\"{ml}\" y2=\"{:.0}\" stroke=\"black\"/>\n<text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\">{}</text>\n<text x=\"14\" y=\"{:.0}\" font-size=\"12\" transform=\"rotate(-90 14 {:.0})\">path loss (dB)</text>\n{body}</svg>\n",
        h - mb,
        w - 20.0,
        h - mb,
        h - mb,
        w / 2.0 - 30.0,
        h - 10.0,
        if mode == Mode::SweepOffset { "x_o (m)" } else { "range (m)" },
        h / 2.0,
        h / 2.0,
    )
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}
