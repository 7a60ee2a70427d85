//! Executable form of a genome and free-run simulation.
//!
//! Hidden units apply `tanh(bias + Σ w·x)`; the output unit is the plain
//! weighted sum with slope one and no bias.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::genome::{topological_order, Genome, GenomeError, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// Bipolar sigmoid.
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Unit {
    id: NodeId,
    bias: f64,
    activation: Activation,
    /// (value slot, weight)
    incoming: Vec<(usize, f64)>,
}

/// Topologically ordered network ready for simulation.
///
/// Value slots `0..=du` hold `u(k-0..=du)`, the next `dy` slots hold
/// `y(k-1..=dy)`, and each non-input unit writes the slot after those in
/// evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledNetwork {
    du: u32,
    dy: u32,
    units: Vec<Unit>,
    output_slot: usize,
}

impl CompiledNetwork {
    pub fn compile(genome: &Genome) -> Result<CompiledNetwork> {
        let order = topological_order(genome).ok_or(GenomeError::Cycle)?;
        let input_count = (genome.du + 1 + genome.dy) as usize;
        let mut slots: HashMap<NodeId, usize> = HashMap::new();
        for id in crate::genome::input_ids(genome.du, genome.dy) {
            let next = slots.len();
            slots.insert(id, next);
        }
        if slots.len() != input_count {
            return Err(Error::Contract("input layout does not match delays".into()));
        }

        let mut incoming: HashMap<NodeId, Vec<(NodeId, f64)>> = HashMap::new();
        for c in genome.connections.values().filter(|c| c.enabled) {
            incoming.entry(c.target).or_default().push((c.source, c.weight));
        }

        let mut units = Vec::new();
        for id in order.into_iter().filter(|id| !id.is_input()) {
            let node = genome.nodes[&id];
            let incoming = incoming
                .remove(&id)
                .unwrap_or_default()
                .into_iter()
                .map(|(src, w)| (slots[&src], w))
                .collect();
            let (bias, activation) = match id.kind() {
                NodeKind::Hidden => (node.bias, Activation::Tanh),
                _ => (0.0, Activation::Identity),
            };
            let slot = input_count + units.len();
            slots.insert(id, slot);
            units.push(Unit {
                id,
                bias,
                activation,
                incoming,
            });
        }
        let output_slot = *slots
            .get(&NodeId::Output)
            .ok_or(GenomeError::MissingOutput)?;
        Ok(CompiledNetwork {
            du: genome.du,
            dy: genome.dy,
            units,
            output_slot,
        })
    }

    pub fn du(&self) -> u32 {
        self.du
    }

    pub fn dy(&self) -> u32 {
        self.dy
    }

    /// Non-input node ids in evaluation order.
    pub fn evaluation_order(&self) -> Vec<NodeId> {
        self.units.iter().map(|u| u.id).collect()
    }

    fn input_count(&self) -> usize {
        (self.du + 1 + self.dy) as usize
    }

    /// One evaluation given `u(k-0..=du)` and `y(k-1..=dy)`.
    pub fn step(&self, u_inputs: &[f64], y_inputs: &[f64]) -> Result<f64> {
        if u_inputs.len() != self.du as usize + 1 || y_inputs.len() != self.dy as usize {
            return Err(Error::Contract(format!(
                "step expects {} u-lags and {} y-lags, got {} and {}",
                self.du + 1,
                self.dy,
                u_inputs.len(),
                y_inputs.len()
            )));
        }
        let mut values = vec![0.0; self.input_count() + self.units.len()];
        values[..u_inputs.len()].copy_from_slice(u_inputs);
        values[u_inputs.len()..self.input_count()].copy_from_slice(y_inputs);
        Ok(self.propagate(&mut values))
    }

    #[inline]
    fn propagate(&self, values: &mut [f64]) -> f64 {
        let base = self.input_count();
        for (i, unit) in self.units.iter().enumerate() {
            let mut sum = unit.bias;
            for &(slot, w) in &unit.incoming {
                sum += w * values[slot];
            }
            values[base + i] = unit.activation.apply(sum);
        }
        values[self.output_slot]
    }

    /// Parallel-model simulation: y-lags are the network's own past outputs.
    pub fn simulate_free_run(&self, u: &[f64]) -> Vec<f64> {
        let mut buffer = DelayBuffer::new(self.du, self.dy);
        let mut values = vec![0.0; self.input_count() + self.units.len()];
        let mut out = Vec::with_capacity(u.len());
        for &uk in u {
            buffer.push_input(uk);
            buffer.fill(&mut values[..self.input_count()]);
            let y = self.propagate(&mut values);
            buffer.push_output(y);
            out.push(y);
        }
        out
    }
}

/// Lag histories for one simulation, zero before the first sample.
#[derive(Debug, Clone)]
pub struct DelayBuffer {
    /// `u(k), u(k-1), ..., u(k-du)`
    u: VecDeque<f64>,
    /// `y(k-1), ..., y(k-dy)`
    y: VecDeque<f64>,
}

impl DelayBuffer {
    pub fn new(du: u32, dy: u32) -> Self {
        DelayBuffer {
            u: std::iter::repeat_n(0.0, du as usize + 1).collect(),
            y: std::iter::repeat_n(0.0, dy as usize).collect(),
        }
    }

    pub fn push_input(&mut self, u: f64) {
        self.u.pop_back();
        self.u.push_front(u);
    }

    pub fn push_output(&mut self, y: f64) {
        if !self.y.is_empty() {
            self.y.pop_back();
            self.y.push_front(y);
        }
    }

    /// Writes u-lags then y-lags into `dst`.
    pub fn fill(&self, dst: &mut [f64]) {
        for (d, v) in dst.iter_mut().zip(self.u.iter().chain(self.y.iter())) {
            *d = *v;
        }
    }
}

/// Mean squared error between two equal-length trajectories.
pub fn mse(y: &[f64], t: &[f64]) -> Result<f64> {
    check_lengths(y, t)?;
    let sum: f64 = y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / y.len() as f64)
}

fn check_lengths(y: &[f64], t: &[f64]) -> Result<()> {
    if y.len() != t.len() || y.is_empty() {
        return Err(Error::Contract(format!(
            "trajectories must be nonempty and equal length ({} vs {})",
            y.len(),
            t.len()
        )));
    }
    Ok(())
}

/// `-(1000 / N) Σ (y_j - t_j)²`; higher is better, 0 for a perfect fit.
///
/// Each error is scaled before squaring, `(1000·e)·e`, which keeps round
/// decimal cases exact (`e = 0.1` contributes exactly 10).
pub fn fitness(y: &[f64], t: &[f64]) -> Result<f64> {
    check_lengths(y, t)?;
    let sum: f64 = y.iter().zip(t).map(|(a, b)| (1000.0 * (a - b)) * (a - b)).sum();
    // subtracting from +0.0 keeps a perfect fit at +0.0 rather than -0.0
    Ok(0.0 - sum / y.len() as f64)
}
