//! End-to-end acceptance checks. Each test prints one `[PASS]`/`[FAIL]` line;
//! run with `--nocapture` to see them.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use tdneat::genome::{input_ids, InnovationRegistry, NodeId};
use tdneat::plant::{default_learning_dataset, save_dataset, simulate_exemplary};
use tdneat::population::Advance;
use tdneat::random::seeded;
use tdneat::variation::{crossover, mutate, mutate_delay, DelayGene, Repair};
use tdneat::{evolve, fitness, Algo, CompiledNetwork, Config, Evaluator, Genome, Population};

use common::{busy_config, hand_genome, random_genome, reference_mse, uniform_series};

fn verdict(id: &str, what: &str, violations: usize, detail: String) {
    let tag = if violations == 0 { "PASS" } else { "FAIL" };
    println!("[{tag}] {id} {what}: {detail}");
    assert_eq!(violations, 0, "{id}: {detail}");
}

/// Rounds a nonnegative value half away from zero without `f64::round`.
fn round_half_up(x: f64) -> u32 {
    let whole = x.trunc();
    (if x - whole >= 0.5 { whole + 1.0 } else { whole }) as u32
}

#[test]
fn ac1_delay_crossover_oracle() {
    let start = Instant::now();
    let config = Config::default();
    let mut violations = 0;
    let mut checked = 0;
    for d1 in 0..=20u32 {
        for d2 in 0..=20u32 {
            // du blends (d1, d2), dy blends (d2, d1)
            let mut p1 = Genome::new(d1, d2);
            let mut p2 = Genome::new(d2, d1);
            p1.fitness = Some(-1.0);
            p2.fitness = Some(-2.0);
            let mut rng = seeded(((d1 as u64) << 8) | d2 as u64);
            for _ in 0..1000 {
                let mut replay = rng.clone();
                let r_u: f64 = replay.random();
                let r_y: f64 = replay.random();
                let child = crossover(&p1, &p2, &config, &mut rng);
                let want_u = round_half_up(r_u * d1 as f64 + (1.0 - r_u) * d2 as f64);
                let want_y = round_half_up(r_y * d2 as f64 + (1.0 - r_y) * d1 as f64);
                let (lo, hi) = (d1.min(d2), d1.max(d2));
                let bad = child.du != want_u
                    || child.dy != want_y
                    || !(lo..=hi).contains(&child.du)
                    || !(lo..=hi).contains(&child.dy);
                violations += bad as usize;
                checked += 2;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    violations += (elapsed >= 10.0) as usize;
    verdict(
        "AC1",
        "delay crossover",
        violations,
        format!("{checked} blended delays, {violations} violations, {elapsed:.2} s"),
    );
}

#[test]
fn ac2_delay_mutation_properties() {
    let config = busy_config();
    let mut registry = InnovationRegistry::new();
    let mut rng = seeded(2);
    let mut violations = 0;
    let mut total = 0;
    let mut grew = 0;
    let mut shrank = 0;
    for lineage in 0..200u64 {
        let mut g = random_genome(lineage, 4, &mut registry);
        for step in 0..500 {
            if step % 25 == 24 {
                mutate(&mut g, &config, &mut rng, &mut registry);
            }
            let which = if rng.random::<bool>() { DelayGene::Du } else { DelayGene::Dy };
            let before = g.clone();
            let out = mutate_delay(&mut g, which, &config, &mut rng, &mut registry);
            total += 1;

            let mut bad = out.delta == 0;
            bad |= out.new_delay as i64 != (out.old_delay as i64 + out.delta).abs();
            let (old, new) = match which {
                DelayGene::Du => (before.du, g.du),
                DelayGene::Dy => (before.dy, g.dy),
            };
            bad |= old != out.old_delay || new != out.new_delay;
            bad |= g.validate().is_err();
            bad |= g.input_count() as u32 != g.du + 1 + g.dy;

            // repair: pruned inputs lose exactly their edges, new inputs feed every hidden node
            let lag_node = |lag| match which {
                DelayGene::Du => NodeId::U(lag),
                DelayGene::Dy => NodeId::Y(lag),
            };
            let hidden = before.hidden_ids();
            let mut expected: BTreeMap<u64, _> = before.connections.clone();
            if new < old {
                shrank += 1;
                let gone: BTreeSet<NodeId> = (new + 1..=old).map(lag_node).collect();
                expected.retain(|_, c| !gone.contains(&c.source));
                bad |= out.repaired_connections.iter().any(|r| !matches!(r, Repair::Removed(_)));
            } else {
                grew += 1;
                let added: Vec<_> = out
                    .repaired_connections
                    .iter()
                    .filter_map(|r| match r {
                        Repair::Added(c) => Some(*c),
                        Repair::Removed(_) => None,
                    })
                    .collect();
                bad |= added.len() != out.repaired_connections.len();
                bad |= added.len() != (new - old) as usize * hidden.len();
                for lag in old + 1..=new {
                    for &h in &hidden {
                        bad |= !added.iter().any(|c| c.source == lag_node(lag) && c.target == h && c.enabled);
                    }
                }
                expected.extend(added.iter().map(|c| (c.innovation, *c)));
            }
            bad |= g.connections != expected;
            bad |= g.hidden_ids() != hidden;
            violations += bad as usize;
        }
    }
    verdict(
        "AC2",
        "delay mutation",
        violations,
        format!("{total} mutations ({grew} up, {shrank} down), {violations} violations"),
    );
}

#[test]
fn ac3_fitness_exactness() {
    let mut rng = seeded(3);
    let mut violations = 0;
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=100);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let want = -1000.0 * reference_mse(&y, &t);
        let got = fitness(&y, &t).unwrap();
        let rel = ((got - want) / want).abs();
        worst = worst.max(rel);
        violations += (rel.is_nan() || rel > 1e-12) as usize;
    }
    let same = uniform_series(33, 50, -1.0, 1.0);
    let zero = fitness(&same, &same).unwrap();
    let ten = fitness(&[0.1, 0.1], &[0.0, 0.0]).unwrap();
    violations += (zero != 0.0) as usize + (ten != -10.0) as usize;
    verdict(
        "AC3",
        "fitness exactness",
        violations,
        format!("1000 triples, worst relative error {worst:.2e}, anchors {zero:?} and {ten:?}"),
    );
}

/// Direct transcription of the plant recursion over zero-padded histories.
fn plant_oracle(u: &[f64]) -> Vec<f64> {
    const PAD: usize = 15;
    let mut up = vec![0.0; PAD];
    up.extend_from_slice(u);
    let mut xp = vec![0.0_f64; PAD + u.len()];
    for k in PAD..PAD + u.len() {
        xp[k] = -0.05 * xp[k - 1] + 0.02 * xp[k - 5] + (xp[k - 10] / 10.0).sin() + up[k - 15];
    }
    xp.split_off(PAD)
}

#[test]
fn ac4_plant_oracle() {
    let mut violations = 0;
    for seed in 0..1000 {
        let mut rng = seeded(40_000 + seed);
        let u: Vec<f64> = (0..200).map(|_| rng.random_range(-2.0..2.0)).collect();
        let got = simulate_exemplary(&u);
        let want = plant_oracle(&u);
        violations += got.iter().zip(&want).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
        violations += (got.len() != want.len()) as usize;
    }
    let step = simulate_exemplary(&[1.0; 40]);
    violations += step[..15].iter().filter(|&&x| x != 0.0).count();
    violations += (step[15] != 1.0) as usize;
    verdict(
        "AC4",
        "plant oracle",
        violations,
        format!("1000 inputs x 200 samples bit-compared, unit step x(14)={:?} x(15)={:?}", step[14], step[15]),
    );
}

#[test]
fn ac5_phenotype_checks() {
    let u = uniform_series(5, 60, -1.0, 1.0);
    let mut cases: Vec<(&str, Genome, Vec<f64>)> = Vec::new();

    cases.push(("zero network", hand_genome(2, 2, &[], &[]), vec![0.0; u.len()]));

    let (b, w1, w2) = (0.3, 1.7, -0.8);
    let g = hand_genome(0, 0, &[(1, b)], &[(NodeId::U(0), NodeId::Hidden(1), w1), (NodeId::Hidden(1), NodeId::Output, w2)]);
    cases.push(("single tanh path", g, u.iter().map(|&x| w2 * (b + w1 * x).tanh()).collect()));

    let (c, a) = (0.5, 0.9);
    let g = hand_genome(0, 1, &[], &[(NodeId::U(0), NodeId::Output, c), (NodeId::Y(1), NodeId::Output, a)]);
    let mut prev = 0.0;
    let want = u
        .iter()
        .map(|&x| {
            prev = c * x + a * prev;
            prev
        })
        .collect();
    cases.push(("self-feedback recursion", g, want));

    let (b, w1, w2, w3) = (-0.1, 2.0, 0.6, -0.3);
    let g = hand_genome(
        3,
        2,
        &[(1, b)],
        &[(NodeId::U(3), NodeId::Hidden(1), w1), (NodeId::Hidden(1), NodeId::Output, w2), (NodeId::Y(2), NodeId::Output, w3)],
    );
    let mut y: Vec<f64> = Vec::new();
    for k in 0..u.len() {
        let u3 = if k >= 3 { u[k - 3] } else { 0.0 };
        let y2 = if k >= 2 { y[k - 2] } else { 0.0 };
        y.push(w2 * (b + w1 * u3).tanh() + w3 * y2);
    }
    cases.push(("delayed input and output", g, y));

    let g = hand_genome(
        1,
        0,
        &[(1, 0.2), (2, -0.4)],
        &[
            (NodeId::U(0), NodeId::Hidden(1), 1.1),
            (NodeId::U(1), NodeId::Hidden(2), -0.7),
            (NodeId::Hidden(1), NodeId::Output, 0.9),
            (NodeId::Hidden(2), NodeId::Output, 1.3),
            (NodeId::U(0), NodeId::Output, 0.25),
        ],
    );
    let want = (0..u.len())
        .map(|k| {
            let u1 = if k >= 1 { u[k - 1] } else { 0.0 };
            0.9 * (0.2 + 1.1 * u[k]).tanh() + 1.3 * (-0.4 + -0.7 * u1).tanh() + 0.25 * u[k]
        })
        .collect();
    cases.push(("two hidden paths with skip", g, want));

    let mut violations = 0;
    let mut failed = Vec::new();
    for (name, g, want) in &cases {
        let net = CompiledNetwork::compile(g).unwrap();
        let got = net.simulate_free_run(&u);
        let back = CompiledNetwork::compile(&Genome::from_text(&g.to_text()).unwrap()).unwrap();
        let again = back.simulate_free_run(&u);
        let bad = got.iter().zip(want).filter(|(a, b)| a.to_bits() != b.to_bits()).count()
            + got.iter().zip(&again).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
        if bad > 0 {
            failed.push(*name);
        }
        violations += bad;
    }
    // step() agrees with the free run on the recursion case
    let net = CompiledNetwork::compile(&cases[2].1).unwrap();
    let first = net.step(&[u[0]], &[0.0]).unwrap();
    let second = net.step(&[u[1]], &[first]).unwrap();
    violations += (first != cases[2].2[0]) as usize + (second != cases[2].2[1]) as usize;

    // serialization round trip on evolved-looking genomes
    let mut registry = InnovationRegistry::new();
    for seed in 0..200 {
        let g = random_genome(seed, 20, &mut registry);
        let a = CompiledNetwork::compile(&g).unwrap().simulate_free_run(&u);
        let b = CompiledNetwork::compile(&Genome::from_text(&g.to_text()).unwrap())
            .unwrap()
            .simulate_free_run(&u);
        violations += a.iter().zip(&b).filter(|(x, y)| x.to_bits() != y.to_bits()).count();
    }
    verdict(
        "AC5",
        "phenotype checks",
        violations,
        format!("{} hand-built genomes + 200 round trips, mismatches in {failed:?}", cases.len()),
    );
}

#[test]
fn ac6_determinism_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("learning.csv");
    save_dataset(&default_learning_dataset(), &data).unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_tdneat"))
            .args(["evolve", "--dataset", data.to_str().unwrap(), "--generations", "40", "--seed", "11", "--out"])
            .arg(&out)
            .env("TDNEAT_THREADS", threads)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        ["generation_log.csv", "winner.json"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    let a = run("1", "a");
    let b = run("1", "b");
    let c = run("4", "c");
    let mut violations = (a != b) as usize + (a != c) as usize;

    let config = Config {
        generations: 20,
        seed: 12,
        ..Config::default()
    };
    let dataset = default_learning_dataset();
    let x = evolve(&config, &dataset, &Evaluator::new(1)).unwrap();
    let y = evolve(&config, &dataset, &Evaluator::new(3)).unwrap();
    violations += (x.log != y.log) as usize + (x.winner != y.winner) as usize;
    verdict(
        "AC6",
        "determinism",
        violations,
        format!("CLI runs with 1, 1 and 4 threads plus library runs with 1 and 3 threads, {violations} differences"),
    );
}

#[test]
fn ac7_desk_scale_learning() {
    let dataset = default_learning_dataset();
    let evaluator = Evaluator::new(0);
    let mut violations = 0;
    let mut summary = Vec::new();
    for seed in 1..=5 {
        let config = Config {
            algo: Algo::Dneat,
            generations: 300,
            seed,
            ..Config::default()
        };
        let run = evolve(&config, &dataset, &evaluator).unwrap();
        let first = run.log[0].best_fitness;
        let last = run.log.last().unwrap().best_fitness;
        let factor = first / last;
        let monotone = run.log.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness);
        violations += (factor.is_nan() || factor < 5.0) as usize + (!monotone) as usize;
        summary.push(format!("seed {seed}: x{factor:.1}"));
    }
    verdict("AC7", "desk-scale learning", violations, summary.join(", "));
}

#[test]
fn ac8_dneat_not_worse_than_neat() {
    let dataset = default_learning_dataset();
    let evaluator = Evaluator::new(0);
    let median = |algo: Algo| {
        let mut mse: Vec<f64> = (1..=5)
            .map(|seed| {
                let config = Config {
                    algo,
                    generations: 500,
                    seed,
                    ..Config::default()
                };
                let run = evolve(&config, &dataset, &evaluator).unwrap();
                tdneat::experiment::winner_mse(&run.winner, &dataset).unwrap()
            })
            .collect();
        mse.sort_by(f64::total_cmp);
        mse[2]
    };
    let dneat = median(Algo::Dneat);
    let neat = median(Algo::Neat);
    verdict(
        "AC8",
        "dNEAT vs NEAT ordering",
        (dneat > neat) as usize,
        format!("median winner MSE dNEAT {dneat:.3e}, NEAT {neat:.3e}"),
    );
}

#[test]
fn ac9_population_mechanics() {
    let dataset = default_learning_dataset();
    let evaluator = Evaluator::new(0);
    let mut violations = 0;
    let mut details = Vec::new();
    for algo in Algo::ALL {
        let config = Config {
            algo,
            seed: 9,
            ..Config::default()
        };
        let mut pop = Population::new(&config);
        let mut allowed: BTreeSet<(u32, u32)> = pop.genomes.iter().map(|g| (g.du, g.dy)).collect();
        let mut reproductions = 0;
        for _ in 0..100 {
            pop.evaluate(&dataset, &evaluator);
            pop.speciate();

            let mut seen = vec![0usize; pop.genomes.len()];
            for s in &pop.species {
                violations += s.members.is_empty() as usize;
                for &i in &s.members {
                    seen[i] += 1;
                }
            }
            violations += seen.iter().filter(|&&n| n != 1).count();

            let old = pop.genomes.clone();
            match pop.advance().unwrap() {
                Advance::Reproduced(offspring) => {
                    reproductions += 1;
                    violations += (offspring.genomes.len() != 100) as usize;
                    violations += (offspring.quotas.iter().sum::<usize>() != 100) as usize;
                    for &(new, was) in &offspring.elites {
                        violations += (offspring.genomes[new] != old[was]) as usize;
                    }
                    violations += (offspring.genomes != pop.genomes) as usize;
                }
                Advance::Reinitialized => {
                    allowed.extend(pop.genomes.iter().map(|g| (g.du, g.dy)));
                }
            }
            violations += (pop.genomes.len() != 100) as usize;
            for g in &pop.genomes {
                violations += g.validate().is_err() as usize;
                violations += input_ids(g.du, g.dy).any(|id| !g.nodes.contains_key(&id)) as usize;
                if algo == Algo::Neat {
                    violations += !allowed.contains(&(g.du, g.dy)) as usize;
                }
            }
        }
        details.push(format!("{algo}: {reproductions} reproductions"));
    }
    verdict(
        "AC9",
        "population mechanics",
        violations,
        format!("{}, {violations} violations", details.join(", ")),
    );
}
