//! Crossover and mutation operators.
//!
//! Node and connection handling follows classical NEAT. Delay genes get their
//! own operators: a rounded convex blend of the parents' delays on crossover,
//! and a nonzero integer step on mutation. Any change of delay level repairs
//! the input layer: pruned lags lose their node and outgoing connections, new
//! lags are wired to every hidden node.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::config::Config;
use crate::genome::{
    input_ids, topological_order, ConnectionGene, Genome, InnovationRegistry, NodeGene, NodeId,
    NodeKind,
};
use crate::random::{chance, gaussian};

/// Which delay gene an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayGene {
    Du,
    Dy,
}

impl DelayGene {
    fn get(self, g: &Genome) -> u32 {
        match self {
            DelayGene::Du => g.du,
            DelayGene::Dy => g.dy,
        }
    }

    fn input(self, lag: u32) -> NodeId {
        match self {
            DelayGene::Du => NodeId::U(lag),
            DelayGene::Dy => NodeId::Y(lag),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Repair {
    Added(ConnectionGene),
    Removed(ConnectionGene),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayMutationOutcome {
    pub old_delay: u32,
    pub delta: i64,
    pub new_delay: u32,
    pub repaired_connections: Vec<Repair>,
}

/// `round(r·d1 + (1-r)·d2)`, rounding half away from zero.
pub fn blend_delay(d1: u32, d2: u32, r: f64) -> u32 {
    (r * d1 as f64 + (1.0 - r) * d2 as f64).round() as u32
}

fn fitness_order(a: &Genome, b: &Genome) -> Ordering {
    let fa = a.fitness.unwrap_or(f64::NEG_INFINITY);
    let fb = b.fitness.unwrap_or(f64::NEG_INFINITY);
    fa.total_cmp(&fb)
}

/// Produces one child. Parents are left untouched.
///
/// Matching genes come from either parent at random; disjoint and excess genes
/// come from the fitter parent (from either, per gene, on a tie). With
/// `config.algo == Neat` the child copies the fitter parent's delays instead of
/// blending them.
pub fn crossover<R: Rng + ?Sized>(
    parent1: &Genome,
    parent2: &Genome,
    config: &Config,
    rng: &mut R,
) -> Genome {
    let order = fitness_order(parent1, parent2);

    let (du, dy) = if config.algo.evolves_delays() {
        let r_u: f64 = rng.random();
        let r_y: f64 = rng.random();
        (
            blend_delay(parent1.du, parent2.du, r_u),
            blend_delay(parent1.dy, parent2.dy, r_y),
        )
    } else {
        let first = match order {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => rng.random(),
        };
        let p = if first { parent1 } else { parent2 };
        (p.du, p.dy)
    };

    let mut genes: Vec<ConnectionGene> = Vec::new();
    let innovations: BTreeSet<u64> = parent1
        .connections
        .keys()
        .chain(parent2.connections.keys())
        .copied()
        .collect();
    for innovation in innovations {
        match (
            parent1.connections.get(&innovation),
            parent2.connections.get(&innovation),
        ) {
            (Some(a), Some(b)) => {
                let mut gene = if rng.random::<bool>() { *a } else { *b };
                if !a.enabled || !b.enabled {
                    gene.enabled = !chance(rng, config.disable_inherit_rate);
                }
                genes.push(gene);
            }
            (Some(a), None) => {
                if order == Ordering::Greater || (order == Ordering::Equal && rng.random::<bool>()) {
                    genes.push(*a);
                }
            }
            (None, Some(b)) => {
                if order == Ordering::Less || (order == Ordering::Equal && rng.random::<bool>()) {
                    genes.push(*b);
                }
            }
            (None, None) => unreachable!(),
        }
    }

    let mut child = Genome::new(du, dy);
    let mut hidden: BTreeSet<NodeId> = match order {
        Ordering::Greater => parent1.hidden_ids().into_iter().collect(),
        Ordering::Less => parent2.hidden_ids().into_iter().collect(),
        Ordering::Equal => parent1
            .hidden_ids()
            .into_iter()
            .chain(parent2.hidden_ids())
            .collect(),
    };
    for g in &genes {
        for n in [g.source, g.target] {
            if n.kind() == NodeKind::Hidden {
                hidden.insert(n);
            }
        }
    }
    for id in hidden {
        let bias = match (parent1.nodes.get(&id), parent2.nodes.get(&id)) {
            (Some(a), Some(b)) => {
                if rng.random::<bool>() {
                    a.bias
                } else {
                    b.bias
                }
            }
            (Some(a), None) => a.bias,
            (None, Some(b)) => b.bias,
            (None, None) => unreachable!("hidden node taken from a parent"),
        };
        child.nodes.insert(id, NodeGene { id, bias });
    }

    // Genes from lags outside the child's delay range are dropped.
    for g in genes {
        if child.nodes.contains_key(&g.source) && child.nodes.contains_key(&g.target) {
            child.connections.insert(g.innovation, g);
        }
    }
    break_cycles(&mut child);
    child
}

/// Disables the later gene (by innovation) of any enabled cycle.
fn break_cycles(genome: &mut Genome) {
    if topological_order(genome).is_some() {
        return;
    }
    let wanted: Vec<u64> = genome
        .connections
        .values()
        .filter(|c| c.enabled)
        .map(|c| c.innovation)
        .collect();
    for c in genome.connections.values_mut() {
        c.enabled = false;
    }
    for innovation in wanted {
        let c = genome.connections[&innovation];
        if !genome.creates_cycle(c.source, c.target) {
            genome.connections.get_mut(&innovation).unwrap().enabled = true;
        }
    }
}

/// Sets a delay level and repairs the input layer to match.
pub fn set_delay<R: Rng + ?Sized>(
    genome: &mut Genome,
    which: DelayGene,
    new_delay: u32,
    config: &Config,
    rng: &mut R,
    registry: &mut InnovationRegistry,
) -> Vec<Repair> {
    let old_delay = which.get(genome);
    let mut repairs = Vec::new();
    match new_delay.cmp(&old_delay) {
        Ordering::Less => {
            for lag in new_delay + 1..=old_delay {
                repairs.extend(genome.remove_node(which.input(lag)).into_iter().map(Repair::Removed));
            }
        }
        Ordering::Greater => {
            let hidden = genome.hidden_ids();
            for lag in old_delay + 1..=new_delay {
                let input = which.input(lag);
                genome.nodes.insert(input, NodeGene { id: input, bias: 0.0 });
                for &h in &hidden {
                    let innovation = registry.innovation(input, h);
                    let gene = ConnectionGene {
                        innovation,
                        source: input,
                        target: h,
                        weight: gaussian(rng, config.weight_init_mean, config.weight_init_stdev),
                        enabled: true,
                    };
                    genome.connections.insert(innovation, gene);
                    repairs.push(Repair::Added(gene));
                }
            }
        }
        Ordering::Equal => {}
    }
    match which {
        DelayGene::Du => genome.du = new_delay,
        DelayGene::Dy => genome.dy = new_delay,
    }
    debug_assert!(input_ids(genome.du, genome.dy).all(|id| genome.nodes.contains_key(&id)));
    repairs
}

/// Draws a nonzero integer step and applies `d = |d + δ|`.
///
/// The caller has already decided that this delay mutates.
pub fn mutate_delay<R: Rng + ?Sized>(
    genome: &mut Genome,
    which: DelayGene,
    config: &Config,
    rng: &mut R,
    registry: &mut InnovationRegistry,
) -> DelayMutationOutcome {
    let power = match which {
        DelayGene::Du => config.du_mutate_power,
        DelayGene::Dy => config.dy_mutate_power,
    };
    let mut delta = rng.random_range(-power..=power).round() as i64;
    if delta == 0 {
        delta = if rng.random::<bool>() { 1 } else { -1 };
    }
    let old_delay = which.get(genome);
    let new_delay = (old_delay as i64 + delta).unsigned_abs() as u32;
    let repaired_connections = set_delay(genome, which, new_delay, config, rng, registry);
    DelayMutationOutcome {
        old_delay,
        delta,
        new_delay,
        repaired_connections,
    }
}

/// Splits a random enabled connection. Returns the new hidden node, if any.
pub fn add_node<R: Rng + ?Sized>(
    genome: &mut Genome,
    config: &Config,
    rng: &mut R,
    registry: &mut InnovationRegistry,
) -> Option<NodeId> {
    let enabled: Vec<u64> = genome
        .connections
        .values()
        .filter(|c| c.enabled)
        .map(|c| c.innovation)
        .collect();
    let &innovation = enabled.choose(rng)?;
    let old = {
        let c = genome.connections.get_mut(&innovation).unwrap();
        c.enabled = false;
        *c
    };
    let hidden = registry.split_node(innovation, genome);
    let bias = gaussian(rng, config.bias_init_mean, config.bias_init_stdev);
    genome.nodes.insert(hidden, NodeGene { id: hidden, bias });
    for (source, target, weight) in [(old.source, hidden, 1.0), (hidden, old.target, old.weight)] {
        let innovation = registry.innovation(source, target);
        genome.connections.insert(
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
    Some(hidden)
}

/// Removes a random hidden node with all its connections.
pub fn delete_node<R: Rng + ?Sized>(genome: &mut Genome, rng: &mut R) -> Option<NodeId> {
    let &victim = genome.hidden_ids().choose(rng)?;
    genome.remove_node(victim);
    Some(victim)
}

/// Every `(source, target)` pair a new connection could legally occupy.
pub fn connection_candidates(genome: &Genome) -> Vec<(NodeId, NodeId)> {
    let existing: BTreeSet<(NodeId, NodeId)> = genome
        .connections
        .values()
        .map(|c| (c.source, c.target))
        .collect();
    let mut out = Vec::new();
    for &source in genome.nodes.keys().filter(|id| id.kind() != NodeKind::Output) {
        for &target in genome.nodes.keys().filter(|id| !id.is_input()) {
            if Genome::is_valid_direction(source, target)
                && !existing.contains(&(source, target))
                && !genome.creates_cycle(source, target)
            {
                out.push((source, target));
            }
        }
    }
    out
}

pub fn add_connection<R: Rng + ?Sized>(
    genome: &mut Genome,
    config: &Config,
    rng: &mut R,
    registry: &mut InnovationRegistry,
) -> Option<u64> {
    let &(source, target) = connection_candidates(genome).choose(rng)?;
    let innovation = registry.innovation(source, target);
    genome.connections.insert(
        innovation,
        ConnectionGene {
            innovation,
            source,
            target,
            weight: gaussian(rng, config.weight_init_mean, config.weight_init_stdev),
            enabled: true,
        },
    );
    Some(innovation)
}

pub fn delete_connection<R: Rng + ?Sized>(genome: &mut Genome, rng: &mut R) -> Option<u64> {
    let keys: Vec<u64> = genome.connections.keys().copied().collect();
    let &innovation = keys.choose(rng)?;
    genome.connections.remove(&innovation);
    Some(innovation)
}

/// Flips a random connection's enabled flag; re-enabling that would close a cycle is skipped.
pub fn toggle_connection<R: Rng + ?Sized>(genome: &mut Genome, rng: &mut R) -> Option<u64> {
    let keys: Vec<u64> = genome.connections.keys().copied().collect();
    let &innovation = keys.choose(rng)?;
    let c = genome.connections[&innovation];
    if c.enabled {
        genome.connections.get_mut(&innovation).unwrap().enabled = false;
    } else if !genome.creates_cycle(c.source, c.target) {
        genome.connections.get_mut(&innovation).unwrap().enabled = true;
    } else {
        return None;
    }
    Some(innovation)
}

/// Structural operators, each an independent trial:
/// add node, delete node, add connection, delete connection, toggle.
pub fn mutate_structure<R: Rng + ?Sized>(
    genome: &mut Genome,
    config: &Config,
    rng: &mut R,
    registry: &mut InnovationRegistry,
) {
    if chance(rng, config.node_add_prob) {
        add_node(genome, config, rng, registry);
    }
    if chance(rng, config.node_delete_prob) {
        delete_node(genome, rng);
    }
    if chance(rng, config.conn_add_prob) {
        add_connection(genome, config, rng, registry);
    }
    if chance(rng, config.conn_delete_prob) {
        delete_connection(genome, rng);
    }
    if chance(rng, config.enabled_mutate_rate) {
        toggle_connection(genome, rng);
    }
}

/// Per connection (innovation order) then per hidden node (id order):
/// one perturb roll, one replace roll, then at most one Gaussian draw.
/// Replacement wins when both rolls fire.
pub fn mutate_weights_biases<R: Rng + ?Sized>(genome: &mut Genome, config: &Config, rng: &mut R) {
    for c in genome.connections.values_mut() {
        let perturb = chance(rng, config.weight_mutate_rate);
        let replace = chance(rng, config.weight_replace_rate);
        if replace {
            c.weight = gaussian(rng, config.weight_init_mean, config.weight_init_stdev);
        } else if perturb {
            c.weight += gaussian(rng, 0.0, config.weight_mutate_power);
        }
    }
    for node in genome.nodes.values_mut().filter(|n| n.id.kind() == NodeKind::Hidden) {
        let perturb = chance(rng, config.bias_mutate_rate);
        let replace = chance(rng, config.bias_replace_rate);
        if replace {
            node.bias = gaussian(rng, config.bias_init_mean, config.bias_init_stdev);
        } else if perturb {
            node.bias += gaussian(rng, 0.0, config.bias_mutate_power);
        }
    }
}

/// Full mutation of one offspring: delays (dNEAT only), structure, then parameters.
pub fn mutate<R: Rng + ?Sized>(
    genome: &mut Genome,
    config: &Config,
    rng: &mut R,
    registry: &mut InnovationRegistry,
) {
    if config.algo.evolves_delays() {
        if chance(rng, config.du_mutate_rate) {
            mutate_delay(genome, DelayGene::Du, config, rng, registry);
        }
        if chance(rng, config.dy_mutate_rate) {
            mutate_delay(genome, DelayGene::Dy, config, rng, registry);
        }
    }
    mutate_structure(genome, config, rng, registry);
    mutate_weights_biases(genome, config, rng);
    genome.fitness = None;
}
