use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use tdneat::experiment::{run_experiment, write_generation_log, write_report, write_winner};
use tdneat::plant::{
    generate_excitation, load_dataset, load_input, normalize, save_dataset, save_input, simulate_exemplary,
};
use tdneat::population::evaluate_genome;
use tdneat::{evolve, Algo, Config, Dataset, Evaluator, ExcitationSpec, Genome};

#[derive(Parser)]
#[command(name = "tdneat", version, about = "Evolve NARX neural models of time-delay systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one evolution and write its generation log and winner.
    Evolve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        algo: Option<Algo>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run both algorithms for several calls and tabulate winner MSEs.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        learning: PathBuf,
        #[arg(long, num_args = 1..)]
        verify: Vec<PathBuf>,
        #[arg(long)]
        calls: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Feed an input trajectory through the exemplary delayed plant.
    SimulatePlant {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Divide the response by 30.
        #[arg(long)]
        normalize: bool,
    },
    /// Generate a piecewise-constant excitation trajectory.
    GenInput {
        #[arg(long)]
        length: usize,
        #[arg(long)]
        hold: usize,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Free-run a saved genome on a dataset and print its MSE and fitness.
    Eval {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    Ok(match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    })
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("{}: cannot create directory", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve {
            config,
            dataset,
            algo,
            generations,
            seed,
            out,
        } => {
            let mut config = load_config(config.as_deref())?;
            config.algo = algo.unwrap_or(config.algo);
            config.generations = generations.unwrap_or(config.generations);
            config.seed = seed.unwrap_or(config.seed);
            config.validate()?;
            let data = load_dataset(&dataset)?;
            create_dir(&out)?;
            let result = evolve(&config, &data, &Evaluator::from_env())?;
            write_generation_log(&result, out.join("generation_log.csv"))?;
            write_winner(&result.winner, out.join("winner.json"))?;
            std::fs::write(out.join("config.txt"), config.to_text())
                .with_context(|| format!("{}: cannot write config", out.display()))?;
            if result.reinitializations > 0 {
                eprintln!("population reinitialized {} time(s) after extinction", result.reinitializations);
            }
            let best = result.log.last().expect("nonempty log").best_fitness;
            println!(
                "{} seed {}: {} generations, best fitness {best}, MSE {}, du {}, dy {}",
                config.algo,
                config.seed,
                config.generations,
                -best / 1000.0,
                result.winner.du,
                result.winner.dy
            );
        }
        Command::Experiment {
            config,
            learning,
            verify,
            calls,
            generations,
            seed,
            out,
        } => {
            let mut config = load_config(config.as_deref())?;
            config.calls = calls.unwrap_or(config.calls);
            config.generations = generations.unwrap_or(config.generations);
            config.seed = seed.unwrap_or(config.seed);
            config.validate()?;
            let learning = load_dataset(&learning)?;
            let verifications = verify.iter().map(load_dataset).collect::<tdneat::Result<Vec<Dataset>>>()?;
            let report = run_experiment(&config, &Algo::ALL, &learning, &verifications, &Evaluator::from_env())?;
            create_dir(&out.join("winners"))?;
            create_dir(&out.join("logs"))?;
            for a in &report.algorithms {
                for (w, run) in a.winners.iter().zip(&a.runs) {
                    write_winner(&w.genome, out.join("winners").join(format!("{}_call{}.json", a.algo, w.call)))?;
                    write_generation_log(run, out.join("logs").join(format!("{}_call{}.csv", a.algo, w.call)))?;
                }
            }
            write_report(&report, &out)?;
            std::fs::write(out.join("config.txt"), config.to_text())
                .with_context(|| format!("{}: cannot write config", out.display()))?;
            print!("{}", tdneat::experiment::report_table(&report));
        }
        Command::SimulatePlant { input, out, normalize: scale } => {
            let u = load_input(&input)?;
            let x = simulate_exemplary(&u);
            let t = if scale { normalize(&x) } else { x };
            save_dataset(&Dataset::new(u, t, "plant")?, &out)?;
        }
        Command::GenInput {
            length,
            hold,
            lo,
            hi,
            seed,
            out,
        } => {
            let u = generate_excitation(&ExcitationSpec {
                length,
                hold,
                lo,
                hi,
                seed,
            })?;
            save_input(&u, &out)?;
        }
        Command::Eval { genome, dataset } => {
            let text = std::fs::read_to_string(&genome)
                .with_context(|| format!("{}: cannot read genome", genome.display()))?;
            let g = Genome::from_text(&text).with_context(|| format!("{}", genome.display()))?;
            let data = load_dataset(&dataset)?;
            let fitness = evaluate_genome(&g, &data);
            println!("mse {:?}", tdneat::experiment::winner_mse(&g, &data)?);
            println!("fitness {fitness:?}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
