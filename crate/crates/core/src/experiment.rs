//! Multi-call experiments comparing NEAT and dNEAT, and their output files.
//!
//! Each algorithm is called `config.calls` times with seeds `seed, seed+1, ...`
//! (the same seeds for both algorithms). The best genome of each call, its
//! "winner", is re-simulated in free run on the learning set and on every
//! verification set, and the MSEs are summarised as best / worst / average of
//! the winners.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{Algo, Config};
use crate::error::Result;
use crate::genome::Genome;
use crate::network::{mse, CompiledNetwork};
use crate::plant::{write_text, Dataset};
use crate::population::{evolve, Evaluator, RunResult};

/// Free-run MSE of a genome on a dataset.
pub fn winner_mse(genome: &Genome, dataset: &Dataset) -> Result<f64> {
    let net = CompiledNetwork::compile(genome)?;
    mse(&net.simulate_free_run(&dataset.u), &dataset.t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseSummary {
    pub best: f64,
    pub worst: f64,
    pub average: f64,
}

impl MseSummary {
    pub fn from_values(values: &[f64]) -> MseSummary {
        assert!(!values.is_empty(), "summary of no winners");
        let best = values.iter().copied().fold(f64::INFINITY, f64::min);
        let worst = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let average = values.iter().sum::<f64>() / values.len() as f64;
        MseSummary {
            best,
            worst,
            average: average.clamp(best, worst),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WinnerRecord {
    pub call: usize,
    pub seed: u64,
    pub genome: Genome,
    /// One MSE per dataset, learning set first.
    pub mse: Vec<f64>,
}

/// Per-generation averages over calls.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub generation: usize,
    pub mean_population_fitness: f64,
    pub mean_best_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct AlgorithmReport {
    pub algo: Algo,
    /// One summary per dataset, learning set first.
    pub cells: Vec<MseSummary>,
    pub winners: Vec<WinnerRecord>,
    pub curves: Vec<CurvePoint>,
    pub runs: Vec<RunResult>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    /// Dataset labels, learning set first.
    pub datasets: Vec<String>,
    pub algorithms: Vec<AlgorithmReport>,
}

fn curves(runs: &[RunResult]) -> Vec<CurvePoint> {
    let len = runs.iter().map(|r| r.log.len()).min().unwrap_or(0);
    let n = runs.len() as f64;
    (0..len)
        .map(|g| CurvePoint {
            generation: runs[0].log[g].generation,
            mean_population_fitness: runs.iter().map(|r| r.log[g].mean_fitness).sum::<f64>() / n,
            mean_best_fitness: runs.iter().map(|r| r.log[g].best_fitness).sum::<f64>() / n,
        })
        .collect()
}

pub fn run_experiment(
    config: &Config,
    algos: &[Algo],
    learning: &Dataset,
    verifications: &[Dataset],
    evaluator: &Evaluator,
) -> Result<ExperimentReport> {
    config.validate()?;
    let datasets: Vec<&Dataset> = std::iter::once(learning).chain(verifications).collect();
    let mut algorithms = Vec::new();
    for &algo in algos {
        let mut runs = Vec::with_capacity(config.calls);
        let mut winners = Vec::with_capacity(config.calls);
        for call in 0..config.calls {
            let seed = config.seed.wrapping_add(call as u64);
            let run_config = Config {
                algo,
                seed,
                ..config.clone()
            };
            let run = evolve(&run_config, learning, evaluator)?;
            let mse = datasets
                .iter()
                .map(|d| winner_mse(&run.winner, d))
                .collect::<Result<Vec<_>>>()?;
            winners.push(WinnerRecord {
                call,
                seed,
                genome: run.winner.clone(),
                mse,
            });
            runs.push(run);
        }
        let cells = (0..datasets.len())
            .map(|d| MseSummary::from_values(&winners.iter().map(|w| w.mse[d]).collect::<Vec<_>>()))
            .collect();
        algorithms.push(AlgorithmReport {
            algo,
            cells,
            curves: curves(&runs),
            winners,
            runs,
        });
    }
    Ok(ExperimentReport {
        datasets: datasets.iter().map(|d| d.label.clone()).collect(),
        algorithms,
    })
}

/// Per-generation CSV for one run.
pub fn write_generation_log(run: &RunResult, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from(
        "generation,mean_fitness,best_fitness,species_count,best_du,best_dy,best_node_count,best_connection_count\n",
    );
    for s in &run.log {
        writeln!(
            out,
            "{},{:?},{:?},{},{},{},{},{}",
            s.generation,
            s.mean_fitness,
            s.best_fitness,
            s.species_count,
            s.best_du,
            s.best_dy,
            s.best_node_count,
            s.best_connection_count
        )
        .unwrap();
    }
    write_text(path.as_ref(), &out)
}

pub fn write_winner(genome: &Genome, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &genome.to_text())
}

/// Raw MSE cells, one row per algorithm and dataset.
pub fn report_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("algorithm,dataset,best_mse,worst_mse,average_mse\n");
    for a in &report.algorithms {
        for (label, c) in report.datasets.iter().zip(&a.cells) {
            writeln!(out, "{},{},{:?},{:?},{:?}", a.algo, label, c.best, c.worst, c.average).unwrap();
        }
    }
    out
}

/// Aligned table with values scaled by 10², one block per dataset.
pub fn report_table(report: &ExperimentReport) -> String {
    let mut out = String::new();
    writeln!(out, "MSE of winners (values x 1e-2)").unwrap();
    writeln!(
        out,
        "{:<16} {:<10} {:<26} {:>14}",
        "dataset", "algorithm", "description", "value"
    )
    .unwrap();
    writeln!(out, "{}", "-".repeat(69)).unwrap();
    for (d, label) in report.datasets.iter().enumerate() {
        for a in &report.algorithms {
            let c = a.cells[d];
            for (desc, v) in [
                ("the best of the winners", c.best),
                ("the worst of the winners", c.worst),
                ("average of the winners", c.average),
            ] {
                writeln!(
                    out,
                    "{:<16} {:<10} {:<26} {:>14.5}",
                    label,
                    a.algo.name().to_uppercase(),
                    desc,
                    v * 100.0
                )
                .unwrap();
            }
        }
    }
    out
}

pub fn curves_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("algorithm,generation,mean_population_fitness,mean_best_fitness\n");
    for a in &report.algorithms {
        for p in &a.curves {
            writeln!(
                out,
                "{},{},{:?},{:?}",
                a.algo, p.generation, p.mean_population_fitness, p.mean_best_fitness
            )
            .unwrap();
        }
    }
    out
}

/// Writes `report.csv`, `report.txt` and `curves.csv` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    write_text(&dir.join("report.csv"), &report_csv(report))?;
    write_text(&dir.join("report.txt"), &report_table(report))?;
    write_text(&dir.join("curves.csv"), &curves_csv(report))
}
