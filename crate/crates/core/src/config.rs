//! Algorithm parameters and the flat `key = value` config file format.
//!
//! Every key is optional; a missing key keeps its default. Lines starting
//! with `#` (and trailing `# ...` comments) are ignored.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which variant of the algorithm drives evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    /// Baseline: delay levels are drawn at initialization and then frozen.
    Neat,
    /// Delay levels evolve through delay crossover and delay mutation.
    Dneat,
}

impl Algo {
    pub const ALL: [Algo; 2] = [Algo::Neat, Algo::Dneat];

    pub fn evolves_delays(self) -> bool {
        matches!(self, Algo::Dneat)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algo::Neat => "neat",
            Algo::Dneat => "dneat",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neat" => Ok(Algo::Neat),
            "dneat" => Ok(Algo::Dneat),
            other => Err(format!("unknown algorithm `{other}` (expected neat or dneat)")),
        }
    }
}

macro_rules! config_struct {
    ($( $(#[$doc:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)?) => {
        /// Every tunable parameter of a run.
        #[derive(Debug, Clone, PartialEq)]
        pub struct Config {
            $( $(#[$doc])* pub $field: $ty, )*
        }

        impl Default for Config {
            fn default() -> Self {
                Config { $( $field: $default, )* }
            }
        }

        impl Config {
            /// Names of all recognised keys, in declaration order.
            pub const KEYS: &'static [&'static str] = &[$( stringify!($field) ),*];

            /// Assigns one parameter from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
                match key {
                    $(
                        stringify!($field) => {
                            self.$field = value
                                .trim()
                                .parse::<$ty>()
                                .map_err(|e| format!("bad value `{}` for `{}`: {}", value.trim(), key, e))?;
                            Ok(())
                        }
                    )*
                    _ => Err(format!("unknown key `{key}`")),
                }
            }

            /// Renders the config in the same format [`Config::parse`] reads.
            pub fn to_text(&self) -> String {
                let mut out = String::new();
                $( out.push_str(&format!("{} = {}\n", stringify!($field), self.$field)); )*
                out
            }
        }
    };
}

config_struct! {
    /// Target number of individuals in the population.
    pop_size: usize = 100,
    weight_init_mean: f64 = 0.0,
    weight_init_stdev: f64 = 0.5,
    bias_init_mean: f64 = 0.0,
    bias_init_stdev: f64 = 0.5,
    /// Upper bound (inclusive) for the initial input delay level.
    du_init_max: u32 = 20,
    /// Upper bound (inclusive) for the initial output delay level.
    dy_init_max: u32 = 20,
    bias_mutate_power: f64 = 0.033,
    bias_mutate_rate: f64 = 0.2,
    bias_replace_rate: f64 = 0.2,
    weight_mutate_power: f64 = 0.1,
    weight_mutate_rate: f64 = 0.6,
    weight_replace_rate: f64 = 0.05,
    conn_add_prob: f64 = 0.2,
    conn_delete_prob: f64 = 0.2,
    enabled_mutate_rate: f64 = 0.2,
    node_add_prob: f64 = 0.2,
    node_delete_prob: f64 = 0.2,
    compatibility_threshold: f64 = 2.3,
    max_stagnation: usize = 25,
    species_elitism: usize = 3,
    /// Most-fit members of each species copied unchanged into the next generation.
    elitism: usize = 10,
    survival_threshold: f64 = 0.25,
    du_mutate_rate: f64 = 0.2,
    dy_mutate_rate: f64 = 0.2,
    du_mutate_power: f64 = 2.0,
    dy_mutate_power: f64 = 2.0,
    /// Coefficient on the disjoint + excess gene fraction in the compatibility distance.
    disjoint_coefficient: f64 = 1.0,
    /// Coefficient on the mean weight difference of matching genes.
    weight_coefficient: f64 = 0.5,
    /// Chance that a gene disabled in either parent stays disabled in the child.
    disable_inherit_rate: f64 = 0.75,
    generations: usize = 2500,
    calls: usize = 10,
    seed: u64 = 1,
    algo: Algo = Algo::Dneat,
}

impl Config {
    /// Parses `key = value` lines on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Config> {
        let mut config = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line: idx + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            config
                .set(key.trim(), value)
                .map_err(|reason| Error::ConfigSyntax {
                    line: idx + 1,
                    reason,
                })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let probabilities = [
            ("bias_mutate_rate", self.bias_mutate_rate),
            ("bias_replace_rate", self.bias_replace_rate),
            ("weight_mutate_rate", self.weight_mutate_rate),
            ("weight_replace_rate", self.weight_replace_rate),
            ("conn_add_prob", self.conn_add_prob),
            ("conn_delete_prob", self.conn_delete_prob),
            ("enabled_mutate_rate", self.enabled_mutate_rate),
            ("node_add_prob", self.node_add_prob),
            ("node_delete_prob", self.node_delete_prob),
            ("survival_threshold", self.survival_threshold),
            ("du_mutate_rate", self.du_mutate_rate),
            ("dy_mutate_rate", self.dy_mutate_rate),
            ("disable_inherit_rate", self.disable_inherit_rate),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        let nonnegative = [
            ("weight_init_stdev", self.weight_init_stdev),
            ("bias_init_stdev", self.bias_init_stdev),
            ("bias_mutate_power", self.bias_mutate_power),
            ("weight_mutate_power", self.weight_mutate_power),
            ("du_mutate_power", self.du_mutate_power),
            ("dy_mutate_power", self.dy_mutate_power),
            ("compatibility_threshold", self.compatibility_threshold),
            ("disjoint_coefficient", self.disjoint_coefficient),
            ("weight_coefficient", self.weight_coefficient),
        ];
        for (name, v) in nonnegative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} = {v} must be a finite nonnegative number")));
            }
        }
        for (name, v) in [("weight_init_mean", self.weight_init_mean), ("bias_init_mean", self.bias_init_mean)] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite")));
            }
        }
        if self.pop_size == 0 {
            return Err(Error::InvalidConfig("pop_size must be at least 1".into()));
        }
        if self.pop_size < self.elitism {
            return Err(Error::InvalidConfig(format!(
                "pop_size ({}) must be at least elitism ({})",
                self.pop_size, self.elitism
            )));
        }
        if self.calls == 0 {
            return Err(Error::InvalidConfig("calls must be at least 1".into()));
        }
        Ok(())
    }
}
