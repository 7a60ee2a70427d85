#![allow(dead_code)]

use rand::Rng;
use tdneat::genome::{initial_genome, ConnectionGene, Genome, InnovationRegistry, NodeGene, NodeId};
use tdneat::random::seeded;
use tdneat::variation::mutate;
use tdneat::Config;

/// Config with every structural operator turned up, for growing varied genomes.
pub fn busy_config() -> Config {
    Config {
        du_init_max: 6,
        dy_init_max: 6,
        conn_add_prob: 0.6,
        conn_delete_prob: 0.2,
        node_add_prob: 0.5,
        node_delete_prob: 0.15,
        enabled_mutate_rate: 0.4,
        du_mutate_rate: 0.5,
        dy_mutate_rate: 0.5,
        ..Config::default()
    }
}

/// An initial genome pushed through `steps` rounds of full mutation.
pub fn random_genome(seed: u64, steps: usize, registry: &mut InnovationRegistry) -> Genome {
    let config = busy_config();
    let mut rng = seeded(seed);
    let mut g = initial_genome(&config, &mut rng, registry);
    for _ in 0..steps {
        mutate(&mut g, &config, &mut rng, registry);
    }
    g
}

/// Plain MSE written as an explicit index loop.
pub fn reference_mse(y: &[f64], t: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut i = 0;
    while i < y.len() {
        let e = y[i] - t[i];
        acc += e * e;
        i += 1;
    }
    acc / y.len() as f64
}

/// Builds a genome from an explicit edge list; hidden nodes are created on demand
/// with the given biases (zero when absent).
pub fn hand_genome(du: u32, dy: u32, biases: &[(u32, f64)], edges: &[(NodeId, NodeId, f64)]) -> Genome {
    let mut registry = InnovationRegistry::new();
    let mut g = Genome::new(du, dy);
    for &(h, bias) in biases {
        g.nodes.insert(NodeId::Hidden(h), NodeGene { id: NodeId::Hidden(h), bias });
    }
    for &(source, target, weight) in edges {
        for id in [source, target] {
            g.nodes.entry(id).or_insert(NodeGene { id, bias: 0.0 });
        }
        let innovation = registry.innovation(source, target);
        g.connections.insert(
            innovation,
            ConnectionGene {
                innovation,
                source,
                target,
                weight,
                enabled: true,
            },
        );
    }
    g.validate().expect("hand-built genome is valid");
    g
}

/// Uniform values in `[lo, hi)` from a seeded stream.
pub fn uniform_series(seed: u64, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = seeded(seed);
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}
