//! Command-line front end: reproducible experiment runs wiring the beam
//! oracle, FRF estimators, identification, stabilization, and reports.
//!
//! Every subcommand resolves one [`RunConfig`] (defaults, then config file,
//! then flags), validates it up front, writes the effective configuration
//! next to its artifacts, and derives all randomness from the single
//! top-level seed. Identical invocations therefore produce byte-identical
//! numeric outputs (timing values excepted).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use ndarray::{Array1, Array3};
use rayon::prelude::*;

use crate::beam::{
    analytical_modes, assemble_beam, exact_frf, simulate_step_response, AssembledSystem,
    Direction,
};
use crate::config::{parse_band, parse_orders, stage_seed, RunConfig};
use crate::error::{Error, Result};
use crate::frf::{EstimatorKind, FrequencyResponseSet, TimeHistorySet};
use crate::loewner::{
    build_loewner_pencil, evaluate_model_grid, partition_data, real_transform, IlfEngine,
    StateSpaceRealization, TransformMode, PINV_REL_TOL,
};
use crate::metrics::{compare, timing_sweep, ComparisonReport, Method};
use crate::modal::{extract_modes, ModeSet};
use crate::signal::{add_wgn, frf_direct, h1_estimate, DirectFrfOptions, WindowKind};
use crate::stabilization::{diagram_export, stabilization_scan};

/// Frequency window (percent) when pairing identified modes with reference
/// modes in reports.
const MODE_MATCH_WINDOW_PCT: f64 = 2.0;

#[derive(Parser)]
#[command(
    name = "loewner-modal",
    version,
    about = "Frequency-domain modal identification via tangential interpolation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file (key = value lines) applied before flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Top-level seed; stage seeds derive from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for all artifacts.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Analysis band low:high in Hz.
    #[arg(long, global = true)]
    pub band: Option<String>,
    /// Order sweep min:max[:step].
    #[arg(long, global = true)]
    pub orders: Option<String>,
    /// FRF estimator: direct | h1.
    #[arg(long, global = true)]
    pub estimator: Option<String>,
    /// Noise level in percent added to simulated histories.
    #[arg(long, global = true)]
    pub noise: Option<f64>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Simulate the clamped-beam oracle: time histories, exact and
    /// estimated FRFs, and the analytical mode list.
    BeamSim {
        #[arg(long)]
        n_elements: Option<usize>,
        #[arg(long)]
        fs: Option<f64>,
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Identify a model at one order from an FRF CSV.
    Identify {
        frf: PathBuf,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Sweep orders, classify pole stability, and export the diagram.
    Stabilize { frf: PathBuf },
    /// Corrupt, re-estimate, and re-identify across noise levels and seeds.
    NoiseSweep {
        /// Comma-separated noise levels in percent.
        #[arg(long)]
        levels: Option<String>,
        /// Repetitions per level.
        #[arg(long)]
        n_seeds: Option<usize>,
    },
    /// Wall-clock identification per order for both implementations.
    Bench {
        /// FRF CSV to identify from (default: exact beam FRF).
        #[arg(long)]
        frf: Option<PathBuf>,
        #[arg(long)]
        repeats: Option<usize>,
    },
}

/// Parses arguments, runs, and maps errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    let band_given = cli.band.is_some();
    if let Some(b) = &cli.band {
        cfg.band_hz = parse_band(b)?;
    }
    if let Some(o) = &cli.orders {
        cfg.orders = parse_orders(o)?;
    }
    if let Some(e) = &cli.estimator {
        cfg.set("estimator.kind", e)?;
    }
    if let Some(n) = cli.noise {
        cfg.noise_pct = n;
    }

    match &cli.command {
        Command::BeamSim {
            n_elements,
            fs,
            n_samples,
        } => {
            if let Some(n) = n_elements {
                cfg.beam.n_elements = *n;
            }
            if let Some(f) = fs {
                cfg.fs_hz = *f;
            }
            if let Some(n) = n_samples {
                cfg.n_samples = *n;
            }
            prepare(&cfg)?;
            cmd_beam_sim(&cfg)
        }
        Command::Identify { frf, order } => {
            if let Some(k) = order {
                cfg.identify_order = *k;
            }
            prepare(&cfg)?;
            cmd_identify(&cfg, frf, band_given)
        }
        Command::Stabilize { frf } => {
            prepare(&cfg)?;
            cmd_stabilize(&cfg, frf, band_given)
        }
        Command::NoiseSweep { levels, n_seeds } => {
            if let Some(l) = levels {
                cfg.set("noise.levels_pct", l)?;
            }
            if let Some(n) = n_seeds {
                cfg.noise_seeds = *n;
            }
            prepare(&cfg)?;
            cmd_noise_sweep(&cfg)
        }
        Command::Bench { frf, repeats } => {
            if let Some(r) = repeats {
                cfg.bench_repeats = *r;
            }
            prepare(&cfg)?;
            cmd_bench(&cfg, frf.as_deref())
        }
    }
}

/// Validates, creates the output directory, and logs the effective config.
fn prepare(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let text = cfg.effective_text();
    std::fs::write(cfg.out_dir.join("effective_config.txt"), &text)?;
    println!("# effective configuration\n{text}");
    Ok(())
}

/// The two step experiments driving the beam: one per bending plane, both
/// input channels present in each record (the idle one silent), so the
/// direct estimator sees a square per-bin system.
fn beam_step_runs(
    cfg: &RunConfig,
    n_samples: usize,
) -> Result<(AssembledSystem, Vec<TimeHistorySet>)> {
    let system = assemble_beam(&cfg.beam)?;
    let node = cfg.input_node;
    let runs = vec![
        simulate_step_response(
            &system,
            &[
                (node, Direction::Y, cfg.amplitude),
                (node, Direction::Z, 0.0),
            ],
            cfg.fs_hz,
            n_samples,
        )?,
        simulate_step_response(
            &system,
            &[
                (node, Direction::Y, 0.0),
                (node, Direction::Z, cfg.amplitude),
            ],
            cfg.fs_hz,
            n_samples,
        )?,
    ];
    Ok((system, runs))
}

/// Estimates the FRF from step runs with the configured estimator.
fn estimate_frf(
    cfg: &RunConfig,
    runs: &[TimeHistorySet],
    analysis_len: Option<usize>,
) -> Result<FrequencyResponseSet> {
    match cfg.estimator {
        EstimatorKind::DirectRatio => frf_direct(
            runs,
            cfg.band_hz,
            &DirectFrfOptions {
                analysis_len,
                zoh_correction: true,
                difference: true,
            },
        ),
        EstimatorKind::H1 => {
            // One column per run: each record is reduced to its driven input
            // channel, estimated alone, and the columns assembled.
            let mut columns = Vec::new();
            let mut input_labels = Vec::new();
            for run in runs {
                let active = (0..run.inputs.nrows())
                    .max_by(|&a, &b| {
                        let ea = run.inputs.row(a).mapv(|x| x * x).sum();
                        let eb = run.inputs.row(b).mapv(|x| x * x).sum();
                        ea.total_cmp(&eb)
                    })
                    .ok_or_else(|| Error::Computation("run has no input channels".into()))?;
                let single = TimeHistorySet::new(
                    run.fs_hz,
                    run.inputs
                        .row(active)
                        .to_owned()
                        .insert_axis(ndarray::Axis(0)),
                    run.outputs.clone(),
                    vec![run.input_labels[active].clone()],
                    run.output_labels.clone(),
                )?;
                let h = h1_estimate(&single, cfg.h1_seg_len, cfg.h1_overlap, WindowKind::Hann)?;
                input_labels.push(run.input_labels[active].clone());
                columns.push(h.restrict_band(cfg.band_hz.0, cfg.band_hz.1)?);
            }
            let first = &columns[0];
            let (p, _, nf) = first.values.dim();
            let mut values = Array3::zeros((p, columns.len(), nf));
            for (q, col) in columns.iter().enumerate() {
                if col.freqs_hz != first.freqs_hz {
                    return Err(Error::Computation(
                        "per-run H1 grids differ; same record lengths required".into(),
                    ));
                }
                values
                    .slice_mut(ndarray::s![.., q, ..])
                    .assign(&col.values.slice(ndarray::s![.., 0, ..]));
            }
            FrequencyResponseSet::new(
                first.freqs_hz.clone(),
                values,
                first.output_labels.clone(),
                input_labels,
                EstimatorKind::H1,
            )
        }
    }
}

fn cmd_beam_sim(cfg: &RunConfig) -> Result<()> {
    let (system, mut runs) = beam_step_runs(cfg, cfg.n_samples)?;
    if cfg.noise_pct > 0.0 {
        for (i, run) in runs.iter_mut().enumerate() {
            *run = add_wgn(
                run,
                cfg.noise_pct,
                stage_seed(cfg.seed, &format!("beam-sim-noise-run{i}")),
            )?;
        }
    }
    let run_paths = ["run_y.csv", "run_z.csv"];
    for (run, name) in runs.iter().zip(run_paths) {
        run.write_csv(&cfg.out_dir.join(name))?;
    }

    let estimated = estimate_frf(cfg, &runs, cfg.analysis_len)?;
    estimated.write_csv(&cfg.out_dir.join("frf_estimated.csv"))?;
    let exact = exact_frf(
        &system,
        &estimated.freqs_hz,
        &[
            (cfg.input_node, Direction::Y),
            (cfg.input_node, Direction::Z),
        ],
    )?;
    exact.write_csv(&cfg.out_dir.join("frf_exact.csv"))?;
    let modes = analytical_modes(&system)?;
    modes.write_csv(&cfg.out_dir.join("modes_analytical.csv"))?;

    println!(
        "wrote {} + frf_estimated.csv + frf_exact.csv + modes_analytical.csv ({} modes) to {}",
        run_paths.join(" + "),
        modes.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

/// One-order identification used by `identify` and the noise sweep.
fn identify_at_order(
    frf: &FrequencyResponseSet,
    k: usize,
    directions_seed: u64,
) -> Result<(ModeSet, StateSpaceRealization)> {
    let data = partition_data(frf, directions_seed)?;
    let pencil = build_loewner_pencil(&data)?;
    let real = real_transform(&pencil, &data, TransformMode::Vectorized)?;
    let engine = IlfEngine::from_pencil(&real, k, PINV_REL_TOL)?;
    let realization = engine.realize(k)?;
    let band = (frf.freqs_hz[0], frf.freqs_hz[frf.freqs_hz.len() - 1]);
    let modes = extract_modes(&realization, band)?;
    Ok((modes, realization))
}

fn load_frf(cfg: &RunConfig, path: &Path, band_given: bool) -> Result<FrequencyResponseSet> {
    let frf = FrequencyResponseSet::read_csv(path)?;
    if band_given {
        frf.restrict_band(cfg.band_hz.0, cfg.band_hz.1)
    } else {
        Ok(frf)
    }
}

fn cmd_identify(cfg: &RunConfig, frf_path: &Path, band_given: bool) -> Result<()> {
    let frf = load_frf(cfg, frf_path, band_given)?;
    let k = cfg.identify_order;
    let (modes, realization) =
        identify_at_order(&frf, k, stage_seed(cfg.seed, "directions"))?;
    modes.write_csv(&cfg.out_dir.join("modes_identified.csv"))?;

    let recon = evaluate_model_grid(&realization, &frf.freqs_hz)?;
    let diff_sq: f64 = recon
        .iter()
        .zip(frf.values.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let data_sq: f64 = frf.values.iter().map(|v| v.norm_sqr()).sum();
    let rel = (diff_sq / data_sq).sqrt();
    let summary = format!(
        "order = {k}\nmodes_in_band = {}\nrelative_reconstruction_error = {rel}\n",
        modes.len()
    );
    std::fs::write(cfg.out_dir.join("reconstruction.txt"), &summary)?;
    print!("{summary}");
    println!("wrote modes_identified.csv to {}", cfg.out_dir.display());
    Ok(())
}

fn cmd_stabilize(cfg: &RunConfig, frf_path: &Path, band_given: bool) -> Result<()> {
    let frf = load_frf(cfg, frf_path, band_given)?;
    let diagram = stabilization_scan(
        &frf,
        cfg.orders,
        &cfg.criteria,
        stage_seed(cfg.seed, "directions"),
    )?;
    for w in &diagram.warnings {
        eprintln!("warning: {w}");
    }
    diagram_export(
        &diagram,
        &cfg.out_dir.join("diagram.csv"),
        &cfg.out_dir.join("diagram.svg"),
        Some((&frf, 0, 0)),
    )?;
    diagram
        .consolidated_mode_set()
        .write_csv(&cfg.out_dir.join("modes_consolidated.csv"))?;
    println!(
        "{} orders scanned, {} poles, {} consolidated modes:",
        diagram.orders.len(),
        diagram.n_poles(),
        diagram.consolidated.len()
    );
    for c in &diagram.consolidated {
        println!(
            "  {:10.4} Hz  zeta {:.5}  chain {} orders [{}..{}]",
            c.mode.natural_frequency_hz,
            c.mode.damping_ratio,
            c.chain_length,
            c.first_order,
            c.last_order
        );
    }
    println!(
        "wrote diagram.csv + diagram.svg + modes_consolidated.csv to {}",
        cfg.out_dir.display()
    );
    Ok(())
}

struct SweepCell {
    level_pct: f64,
    seed_idx: usize,
    method: &'static str,
    report: ComparisonReport,
}

fn cmd_noise_sweep(cfg: &RunConfig) -> Result<()> {
    let (system, clean_runs) = beam_step_runs(cfg, cfg.noise_n_samples)?;
    let reference = analytical_modes(&system)?;
    let min_order = cfg.identify_order;

    let mut tasks = Vec::new();
    for (li, &level) in cfg.noise_levels_pct.iter().enumerate() {
        for si in 0..cfg.noise_seeds {
            tasks.push((li, level, si));
        }
    }

    let cells: Vec<Vec<SweepCell>> = tasks
        .par_iter()
        .map(|&(li, level, si)| -> Result<Vec<SweepCell>> {
            let mut runs = Vec::with_capacity(clean_runs.len());
            for (r, clean) in clean_runs.iter().enumerate() {
                runs.push(add_wgn(
                    clean,
                    level,
                    stage_seed(cfg.seed, &format!("noise-L{li}-S{si}-run{r}")),
                )?);
            }
            let frf = estimate_frf(cfg, &runs, Some(cfg.noise_analysis_len))?;
            let directions = stage_seed(cfg.seed, "directions");

            let (modes_min, _) = identify_at_order(&frf, min_order, directions)?;
            let report_min = compare(&modes_min, &reference, MODE_MATCH_WINDOW_PCT)?;

            let diagram = stabilization_scan(&frf, cfg.orders, &cfg.criteria, directions)?;
            let report_stab = compare(
                &diagram.consolidated_mode_set(),
                &reference,
                MODE_MATCH_WINDOW_PCT,
            )?;
            Ok(vec![
                SweepCell {
                    level_pct: level,
                    seed_idx: si,
                    method: "minimal_order",
                    report: report_min,
                },
                SweepCell {
                    level_pct: level,
                    seed_idx: si,
                    method: "stabilization",
                    report: report_stab,
                },
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<SweepCell> = cells.into_iter().flatten().collect();

    // Per-cell summary rows.
    use std::fmt::Write as _;
    let mut summary = String::from(
        "level_pct,seed,method,n_matched,median_abs_df_pct,max_abs_df_pct,\
         median_abs_dz_pct,max_abs_dz_pct,median_mac,min_mac\n",
    );
    for c in &cells {
        let r = &c.report;
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{}",
            c.level_pct,
            c.seed_idx,
            c.method,
            r.rows.len(),
            r.median_abs_freq_err_pct,
            r.max_abs_freq_err_pct,
            r.median_abs_damping_err_pct,
            r.max_abs_damping_err_pct,
            r.median_mac,
            r.min_mac
        );
    }
    std::fs::write(cfg.out_dir.join("noise_summary.csv"), &summary)?;

    // Per-mode medians across seeds, per level and method.
    let median = |mut v: Vec<f64>| -> f64 {
        if v.is_empty() {
            return f64::NAN;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    };
    let mut per_mode = String::from(
        "level_pct,method,ref_freq_hz,n_seeds_matched,median_abs_df_pct,\
         median_abs_dz_pct,median_mac\n",
    );
    for &level in &cfg.noise_levels_pct {
        for method in ["minimal_order", "stabilization"] {
            for reference_mode in &reference.modes {
                let f_ref = reference_mode.natural_frequency_hz;
                let mut dfs = Vec::new();
                let mut dzs = Vec::new();
                let mut macs = Vec::new();
                for c in cells
                    .iter()
                    .filter(|c| c.level_pct == level && c.method == method)
                {
                    for row in &c.report.rows {
                        if row.reference_freq_hz == f_ref {
                            dfs.push(row.freq_err_pct.abs());
                            dzs.push(row.damping_err_pct.abs());
                            macs.push(row.mac);
                        }
                    }
                }
                let _ = writeln!(
                    per_mode,
                    "{},{},{},{},{},{},{}",
                    level,
                    method,
                    f_ref,
                    dfs.len(),
                    median(dfs),
                    median(dzs),
                    median(macs)
                );
            }
        }
    }
    std::fs::write(cfg.out_dir.join("noise_modes.csv"), &per_mode)?;
    println!(
        "noise sweep complete: {} cells ({} levels x {} seeds x 2 methods); \
         wrote noise_summary.csv + noise_modes.csv to {}",
        cells.len(),
        cfg.noise_levels_pct.len(),
        cfg.noise_seeds,
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_bench(cfg: &RunConfig, frf_path: Option<&Path>) -> Result<()> {
    let frf = match frf_path {
        Some(path) => FrequencyResponseSet::read_csv(path)?,
        None => {
            let system = assemble_beam(&cfg.beam)?;
            let grid = Array1::linspace(cfg.band_hz.0, cfg.band_hz.1, 2000);
            exact_frf(
                &system,
                &grid,
                &[
                    (cfg.input_node, Direction::Y),
                    (cfg.input_node, Direction::Z),
                ],
            )?
        }
    };
    let report = timing_sweep(
        &frf,
        cfg.orders,
        cfg.bench_repeats,
        &[Method::Ilf, Method::LfLoopBaseline],
        stage_seed(cfg.seed, "directions"),
    )?;
    report.to_csv(&cfg.out_dir.join("timing.csv"))?;
    print!("{}", report.format_table());
    println!("wrote timing.csv to {}", cfg.out_dir.display());
    Ok(())
}
