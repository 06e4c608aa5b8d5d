use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Arc, Commodity, Instance};
use crate::error::{NppError, Result};

/// Parameters of the random grid generator. Costs are drawn as uniform
/// integers from the inclusive ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub tolled_fraction: f64,
    pub cost_min: u32,
    pub cost_max: u32,
    pub toll_cost_min: u32,
    pub toll_cost_max: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { tolled_fraction: 0.2, cost_min: 2, cost_max: 20, toll_cost_min: 0, toll_cost_max: 5 }
    }
}

impl GeneratorConfig {
    fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tolled_fraction) {
            return Err(NppError::Generation(format!("tolled_fraction {} outside [0, 1]", self.tolled_fraction)));
        }
        if self.cost_min > self.cost_max || self.toll_cost_min > self.toll_cost_max {
            return Err(NppError::Generation("empty cost range".into()));
        }
        Ok(())
    }
}

/// Bidirectional `side × side` grid with random tolled arcs, costs and
/// origin-destination pairs. Node `(r, c)` has id `r * side + c`.
pub fn generate_grid(side: usize, k_count: usize, seed: u64, config: &GeneratorConfig) -> Result<Instance> {
    if side < 2 {
        return Err(NppError::Precondition(format!("grid side must be at least 2, got {side}")));
    }
    if k_count < 1 {
        return Err(NppError::Precondition("at least one commodity is required".into()));
    }
    config.check()?;
    let n = side * side;
    if k_count > n * (n - 1) {
        return Err(NppError::Generation(format!(
            "{k_count} commodities exceed the {} distinct node pairs",
            n * (n - 1)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut ends = Vec::with_capacity(4 * side * (side - 1));
    for r in 0..side {
        for c in 0..side {
            let v = r * side + c;
            if c + 1 < side {
                ends.push((v, v + 1));
                ends.push((v + 1, v));
            }
            if r + 1 < side {
                ends.push((v, v + side));
                ends.push((v + side, v));
            }
        }
    }
    let m = ends.len();
    let tolled_count = ((config.tolled_fraction * m as f64).round() as usize).min(m - 1);
    let mut tolled = vec![false; m];
    for i in index::sample(&mut rng, m, tolled_count) {
        tolled[i] = true;
    }
    let arcs: Vec<Arc> = ends
        .into_iter()
        .zip(tolled)
        .map(|((tail, head), tolled)| {
            let cost = if tolled {
                rng.gen_range(config.toll_cost_min..=config.toll_cost_max)
            } else {
                rng.gen_range(config.cost_min..=config.cost_max)
            };
            Arc { tail, head, cost: cost as f64, tolled }
        })
        .collect();

    // Validate the graph once, then draw commodities one at a time against it.
    let base = Instance::new(n, arcs, Vec::new())?;
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            base.distances(s, |_, a| if a.tolled { None } else { Some(a.cost) }).iter().map(Option::is_some).collect()
        })
        .collect();
    let mut used = HashSet::new();
    let mut commodities = Vec::with_capacity(k_count);
    let max_draws = 1000 * k_count + 10 * n * n;
    let mut draws = 0;
    while commodities.len() < k_count {
        if draws == max_draws {
            return Err(NppError::Generation(format!(
                "could not draw {k_count} distinct toll-free-connected origin-destination pairs"
            )));
        }
        draws += 1;
        let o = rng.gen_range(0..n);
        let d = rng.gen_range(0..n);
        if o == d || !reach[o][d] || !used.insert((o, d)) {
            continue;
        }
        commodities.push(Commodity { origin: o, destination: d, demand: 1.0 });
    }
    Instance::new(n, base.arcs, commodities)
}
