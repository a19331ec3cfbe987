//! Subcommand implementations. Each writes its tables under `out`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use perisem::estimator::{estimate_from_parts, segments_to_path, PathObservation};
use perisem::io::fmt_real;
use perisem::noise::simulate_coefficient_noise;
use perisem::risk::{d_n_sweep, Experiment, OracleReport, REPORT_CSV_HEADER};
use perisem::rng::ReplicateStreams;
use perisem::selection::{select, SelectionConfig, SelectionResult, SigmaMode};
use perisem::signal::DEFAULT_QUAD_POINTS;
use perisem::weights::WeightGrid;
use perisem::{Error, Result};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ModeKind};

/// Whether every verification check passed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<S: serde::Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn grid_for(cfg: &ExperimentConfig, n: usize) -> Result<WeightGrid<f64>> {
    WeightGrid::build(n, cfg.k_star, cfg.epsilon)
}

fn selection_cfg(cfg: &ExperimentConfig, rho: f64, mode: ModeKind) -> Result<SelectionConfig<f64>> {
    SelectionConfig::new(rho, cfg.sigma_mode(mode))
}

/// Writes `n{n}/estimates_r{r}.csv` and `n{n}/jumps_r{r}.csv` with
/// `j_max = n` for every replicate.
pub fn run_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    for &n in cfg.require_ns()? {
        let theta = cfg.signal.fourier_coefficients(n, DEFAULT_QUAD_POINTS);
        let draws = (0..cfg.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let mut streams = ReplicateStreams::new(cfg.seed, r);
                let xi = simulate_coefficient_noise(&cfg.noise, n, n, &mut streams)?;
                let est = estimate_from_parts(&theta, &xi.values, n)?;
                Ok((est, xi.jumps))
            })
            .collect::<Result<Vec<_>>>()?;
        let dir = out.join(format!("n{n}"));
        for (r, (est, jumps)) in draws.iter().enumerate() {
            let mut w = create(&dir.join(format!("estimates_r{r}.csv")))?;
            est.write_csv(&mut w)?;
            w.flush()?;
            let mut w = create(&dir.join(format!("jumps_r{r}.csv")))?;
            jumps.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(Outcome::Pass)
}

pub const SELECTION_CSV_HEADER: &str = "n,rho,sigma_mode,replicate,beta,t,sigma_used,cost";

fn select_replicate(
    cfg: &ExperimentConfig,
    theta: &[f64],
    grid: &WeightGrid<f64>,
    sel: &SelectionConfig<f64>,
    n: usize,
    r: u64,
) -> Result<SelectionResult<f64>> {
    let j_max = match sel.sigma_mode() {
        SigmaMode::Known(_) => grid.max_support(),
        SigmaMode::Estimated => n,
    };
    let mut streams = ReplicateStreams::new(cfg.seed, r);
    let xi = simulate_coefficient_noise(&cfg.noise, n, j_max, &mut streams)?;
    let est = estimate_from_parts(&theta[..j_max], &xi.values, n)?;
    select(&est, grid, sel)
}

/// Per `(n, rho, sigma_mode)`: a JSON dump of every replicate's
/// selection, plus one row per replicate in `selection_summary.csv`.
pub fn run_select(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let mut summary = create(&out.join("selection_summary.csv"))?;
    writeln!(summary, "{SELECTION_CSV_HEADER}")?;
    for &n in cfg.require_ns()? {
        let grid = grid_for(cfg, n)?;
        if grid.max_support() > n {
            return Err(Error::Budget { requested: grid.max_support(), available: n });
        }
        let theta = cfg.signal.fourier_coefficients(n, DEFAULT_QUAD_POINTS);
        for &rho in &cfg.rhos {
            for &mode in &cfg.modes {
                let sel = selection_cfg(cfg, rho, mode)?;
                let results = (0..cfg.replicates as u64)
                    .into_par_iter()
                    .map(|r| select_replicate(cfg, &theta, &grid, &sel, n, r))
                    .collect::<Result<Vec<_>>>()?;
                for (r, res) in results.iter().enumerate() {
                    let (beta, t) = res
                        .chosen_alpha()
                        .map_or((String::new(), String::new()), |a| (a.beta.to_string(), fmt_real(a.t)));
                    writeln!(
                        summary,
                        "{n},{},{},{r},{beta},{t},{},{}",
                        fmt_real(rho),
                        mode.name(),
                        fmt_real(res.sigma_used),
                        fmt_real(res.chosen_cost())
                    )?;
                }
                write_json(&out.join(format!("selection_n{n}_rho{rho}_{}.json", mode.name())), &results)?;
            }
        }
    }
    summary.flush()?;
    Ok(Outcome::Pass)
}

/// Oracle-inequality check over the `(n, rho, sigma_mode)` matrix.
pub fn run_verify(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let replicates = cfg.require_mc_replicates()?;
    let mut reports: Vec<OracleReport<f64>> = Vec::new();
    for &n in cfg.require_ns()? {
        let grid = grid_for(cfg, n)?;
        for &rho in &cfg.rhos {
            for &mode in &cfg.modes {
                let sel = selection_cfg(cfg, rho, mode)?;
                let exp = Experiment::new(&cfg.signal, &cfg.noise, n, &grid, &sel)?;
                reports.push(exp.verify_oracle(replicates, cfg.seed, cfg.bound)?);
            }
        }
    }
    let mut w = create(&out.join("oracle_report.csv"))?;
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for r in &reports {
        r.write_csv_row(&mut w)?;
    }
    w.flush()?;
    write_json(&out.join("oracle_report.json"), &reports)?;
    if !cfg.plot_ns.is_empty() {
        write_plot_data(cfg, &out.join("d_n_plot.csv"))?;
    }
    Ok(if reports.iter().all(|r| r.holds) { Outcome::Pass } else { Outcome::Fail })
}

/// `(n, D_n(rho) / n^0.25)` series, one block per `rho`.
pub fn write_plot_data(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let sdot = cfg.signal.sdot_l1(DEFAULT_QUAD_POINTS)?;
    let mut w = create(path)?;
    writeln!(w, "rho,n,nu,mu,d_n,d_n_scaled")?;
    for &rho in &cfg.rhos {
        for p in d_n_sweep(&cfg.noise, sdot, rho, 0.25, &cfg.plot_ns, cfg.k_star, cfg.epsilon)? {
            writeln!(w, "{},{},{},{},{},{}", fmt_real(rho), p.n, p.nu, p.mu, fmt_real(p.d_n), fmt_real(p.scaled))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Concatenates the `*.csv` segments of a directory (sorted by file name)
/// into `path.csv`.
pub fn run_ingest(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let dir = cfg.segments.as_ref().ok_or_else(|| Error::Config("ingest needs segments = DIR".into()))?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let segments = files
        .iter()
        .map(|p| {
            PathObservation::<f64>::read_segment_csv(BufReader::new(File::open(p)?))
                .map_err(|e| Error::Format(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let path = segments_to_path(&segments)?;
    let mut w = create(&out.join("path.csv"))?;
    path.write_csv(&mut w)?;
    w.flush()?;
    Ok(Outcome::Pass)
}

/// `grid_n{n}.csv` for every `n`.
pub fn run_grid_dump(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    for &n in cfg.require_ns()? {
        let grid = grid_for(cfg, n)?;
        let mut w = create(&out.join(format!("grid_n{n}.csv")))?;
        grid.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(Outcome::Pass)
}
