//! Resource-block possession (RBP) maps and the tier-based availability rule.
//!
//! A map is a B x K binary matrix: bit `(b, k)` set means BS `b` currently
//! serves some ground user on RB `k`. For a candidate RB the BS population
//! splits into `occupied` (bit set) and `potential` (bit clear); a potential
//! BS is `available` to serve the drone only if no occupied BS sits within its
//! first `p` hexagonal tiers, which protects the ground users already holding
//! that RB.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::world::HexLayout;
use crate::{Error, Result};

/// B x K binary occupancy matrix, row-major by BS.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbpMap {
    n_bs: usize,
    n_rb: usize,
    bits: Vec<u8>,
}

impl RbpMap {
    pub fn zeros(n_bs: usize, n_rb: usize) -> Self {
        Self { n_bs, n_rb, bits: vec![0; n_bs * n_rb] }
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn n_rb(&self) -> usize {
        self.n_rb
    }

    pub fn get(&self, b: usize, k: usize) -> bool {
        self.bits[b * self.n_rb + k] != 0
    }

    pub fn set(&mut self, b: usize, k: usize, v: bool) {
        self.bits[b * self.n_rb + k] = u8::from(v);
    }

    /// Row-major 0/1 encoding used as the outer-MDP state vector.
    pub fn encode(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| f64::from(b)).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }
}

/// Occupied / potential / available split for one RB.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RbPartition {
    pub rb: usize,
    pub occupied: Vec<usize>,
    pub potential: Vec<usize>,
    pub available: Vec<usize>,
}

/// Split the BS population on RB `k` into (occupied, potential).
pub fn partition_bs(map: &RbpMap, k: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if k >= map.n_rb {
        return Err(Error::Domain(format!(
            "RB index {k} out of range (K = {})",
            map.n_rb
        )));
    }
    let mut occupied = Vec::new();
    let mut potential = Vec::new();
    for b in 0..map.n_bs {
        if map.get(b, k) {
            occupied.push(b);
        } else {
            potential.push(b);
        }
    }
    Ok((occupied, potential))
}

/// Potential BSs whose tier-`p` neighborhood contains no occupied BS.
pub fn available_set(map: &RbpMap, k: usize, tier_order: usize, layout: &HexLayout) -> Vec<usize> {
    let occupied_mask: Vec<bool> = (0..map.n_bs).map(|b| map.get(b, k)).collect();
    (0..map.n_bs)
        .filter(|&b| !occupied_mask[b])
        .filter(|&b| {
            layout
                .tier_set(b, tier_order)
                .iter()
                .all(|&t| !occupied_mask[t])
        })
        .collect()
}

/// Full partition of RB `k` under tier order `p`.
pub fn rb_partition(
    map: &RbpMap,
    k: usize,
    tier_order: usize,
    layout: &HexLayout,
) -> Result<RbPartition> {
    let (occupied, potential) = partition_bs(map, k)?;
    let available = available_set(map, k, tier_order, layout);
    Ok(RbPartition { rb: k, occupied, potential, available })
}

/// Outer reward: |available| / (|available| + |occupied|). For partitions of a
/// non-empty BS set the denominator is always >= 1; the degenerate empty/empty
/// case maps to 0.
pub fn outer_reward(available: &[usize], occupied: &[usize]) -> f64 {
    let denom = available.len() + occupied.len();
    if denom == 0 {
        return 0.0;
    }
    available.len() as f64 / denom as f64
}

/// How pool maps are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PoolGenerator {
    /// Greedy RB coloring that respects the tier rule among ground users.
    Criterion,
    /// Independent biased coin per bit; ignores the tier rule (ablation only).
    Bernoulli { density: f64 },
}

/// Parameters of the RBP pool.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbpPoolParams {
    /// Number of map variants in the pool.
    pub pool_size: usize,
    /// Per-BS ground-user count is uniform in [gue_min, gue_max].
    pub gue_min: u32,
    pub gue_max: u32,
    /// Tier order `p` of the interference-protection rule.
    pub tier_order: usize,
    pub generator: PoolGenerator,
}

impl Default for RbpPoolParams {
    fn default() -> Self {
        Self {
            pool_size: 22,
            gue_min: 1,
            gue_max: 4,
            tier_order: 1,
            generator: PoolGenerator::Criterion,
        }
    }
}

impl RbpPoolParams {
    pub fn validate(&self) -> Result<()> {
        if self.pool_size == 0 {
            return Err(Error::Config("pool_size must be >= 1".into()));
        }
        if self.gue_min > self.gue_max {
            return Err(Error::Config("gue_min must be <= gue_max".into()));
        }
        if !(1..=3).contains(&self.tier_order) {
            return Err(Error::Config("tier_order must be in 1..=3".into()));
        }
        if let PoolGenerator::Bernoulli { density } = self.generator {
            if !(0.0..=1.0).contains(&density) {
                return Err(Error::Config("Bernoulli density must be in [0,1]".into()));
            }
        }
        Ok(())
    }
}

/// A generated pool of RBP maps plus its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbpPool {
    pub params: RbpPoolParams,
    pub seed: u64,
    pub n_bs: usize,
    pub n_rb: usize,
    pub maps: Vec<RbpMap>,
}

impl RbpPool {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Generate the pool. Deterministic per seed.
pub fn gen_rbp_pool(
    params: &RbpPoolParams,
    n_rb: usize,
    layout: &HexLayout,
    seed: u64,
) -> Result<RbpPool> {
    params.validate()?;
    if n_rb == 0 {
        return Err(Error::Config("need at least one RB".into()));
    }
    let n_bs = layout.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tiers: Vec<Vec<usize>> = (0..n_bs)
        .map(|b| layout.tier_set(b, params.tier_order))
        .collect();

    let mut maps = Vec::with_capacity(params.pool_size);
    for _ in 0..params.pool_size {
        let map = match params.generator {
            PoolGenerator::Criterion => {
                gen_criterion_map(params, n_rb, n_bs, &tiers, &mut rng)?
            }
            PoolGenerator::Bernoulli { density } => {
                let mut map = RbpMap::zeros(n_bs, n_rb);
                for b in 0..n_bs {
                    for k in 0..n_rb {
                        map.set(b, k, rng.gen::<f64>() < density);
                    }
                }
                map
            }
        };
        maps.push(map);
    }
    Ok(RbpPool { params: *params, seed, n_bs, n_rb, maps })
}

fn gen_criterion_map(
    params: &RbpPoolParams,
    n_rb: usize,
    n_bs: usize,
    tiers: &[Vec<usize>],
    rng: &mut ChaCha8Rng,
) -> Result<RbpMap> {
    let gues: Vec<u32> = (0..n_bs)
        .map(|_| rng.gen_range(params.gue_min..=params.gue_max))
        .collect();
    // The greedy coloring below succeeds whenever every tier neighborhood
    // requests at most K RBs in total.
    for (b, tier) in tiers.iter().enumerate() {
        let demand: u32 = tier.iter().map(|&t| gues[t]).sum();
        if demand as usize > n_rb {
            return Err(Error::Generation(format!(
                "RBP pool infeasible: tier-{} neighborhood of BS {b} requests {demand} RBs, \
                 only {n_rb} exist",
                params.tier_order
            )));
        }
    }
    let mut map = RbpMap::zeros(n_bs, n_rb);
    let mut candidates = Vec::with_capacity(n_rb);
    for b in 0..n_bs {
        for _ in 0..gues[b] {
            candidates.clear();
            candidates.extend(
                (0..n_rb).filter(|&k| tiers[b].iter().all(|&t| !map.get(t, k))),
            );
            let Some(&k) = candidates.get(rng.gen_range(0..candidates.len().max(1))) else {
                return Err(Error::Generation(format!(
                    "greedy RB assignment exhausted all {n_rb} RBs at BS {b}"
                )));
            };
            map.set(b, k, true);
        }
    }
    Ok(map)
}

/// Uniformly random pool element: the outer-MDP transition kernel.
pub fn pool_step<'a>(maps: &'a [RbpMap], rng: &mut ChaCha8Rng) -> Result<&'a RbpMap> {
    if maps.is_empty() {
        return Err(Error::Domain("cannot step an empty RBP pool".into()));
    }
    Ok(&maps[rng.gen_range(0..maps.len())])
}
