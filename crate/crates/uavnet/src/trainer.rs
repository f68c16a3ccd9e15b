//! The interleaved training loop: per outer epoch the D3QN picks an RB and
//! stores one outer transition; inside each outer epoch the DDPG agent runs a
//! full inner episode against the fading environment of one randomly chosen
//! available BS. Both agents train from replay once their buffers reach one
//! batch; exploration anneals geometrically per episode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

use crate::agents::{
    d3qn_update, ddpg_actor_update, ddpg_critic_update, explore, D3qnAgent, DdpgAgent,
    InnerTransition, OuterTransition, ReplayBuffer,
};
use crate::channel::ChannelConfig;
use crate::nn::{AdamState, MlpNet};
use crate::radioenv::{InnerEnv, OuterEnv, RadioParams};
use crate::rballoc::{RbpPool, RbpPoolParams};
use crate::world::{BuildingWorld, ItuParams, LayoutConfig, Trajectory};
use crate::{Error, Result};

/// Full training configuration. Defaults reproduce the reference setup:
/// 37 BSs, 100 RBs, 8 antennas, 22 slots of 1.82 s along a 1.4 km diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub episodes: usize,
    /// Outer epochs per episode; must equal the trajectory slot count.
    pub outer_epochs: usize,
    /// Inner (DDPG) steps per outer epoch.
    pub inner_epochs: usize,
    /// Hard-sync the D3QN target every this many D3QN updates.
    pub target_sync_every: u64,
    pub eps_init: f64,
    pub eps_decay: f64,
    pub noise_var_init: f64,
    pub noise_var_decay: f64,
    pub lr_d3qn: f64,
    pub lr_critic: f64,
    pub lr_actor: f64,
    pub tau: f64,
    pub gamma: f64,
    pub batch_d3qn: usize,
    pub batch_ddpg: usize,
    pub outer_capacity: usize,
    pub inner_capacity: usize,
    pub d3qn_hidden: Vec<usize>,
    pub ddpg_hidden: Vec<usize>,
    /// RBs per BS.
    pub n_rb: usize,
    pub itu: ItuParams,
    pub layout: LayoutConfig,
    pub chan: ChannelConfig,
    pub radio: RadioParams,
    pub pool: RbpPoolParams,
    pub traj_start: [f64; 3],
    pub traj_end: [f64; 3],
    pub velocity_mps: f64,
    pub slot_duration_s: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            outer_epochs: 22,
            inner_epochs: 200,
            target_sync_every: 500,
            eps_init: 0.9,
            eps_decay: 0.93,
            noise_var_init: 1.0,
            noise_var_decay: 0.91,
            lr_d3qn: 0.001,
            lr_critic: 0.002,
            lr_actor: 0.001,
            tau: 0.00005,
            gamma: 0.99,
            batch_d3qn: 128,
            batch_ddpg: 128,
            outer_capacity: 100_000,
            inner_capacity: 100_000,
            d3qn_hidden: vec![512, 256, 128],
            ddpg_hidden: vec![512, 128],
            n_rb: 100,
            itu: ItuParams::default(),
            layout: LayoutConfig::default(),
            chan: ChannelConfig::default(),
            radio: RadioParams::default(),
            pool: RbpPoolParams::default(),
            traj_start: [1000.0, 1000.0, 100.0],
            traj_end: [2000.0, 2000.0, 100.0],
            velocity_mps: 35.0,
            slot_duration_s: 1.82,
            seed: 1,
        }
    }
}

impl TrainConfig {
    /// Desk-scale profile: 19 BSs, 20 RBs, 4 antennas and slimmer networks.
    /// Trains to a clear learning signal in minutes on a laptop core. The
    /// noise floor is raised so the outage-vs-power knee of every policy
    /// falls inside the standard -20..40 dBm sweep grid.
    pub fn desk() -> Self {
        Self {
            episodes: 40,
            inner_epochs: 100,
            batch_ddpg: 64,
            d3qn_hidden: vec![128, 64, 32],
            ddpg_hidden: vec![64, 32],
            n_rb: 20,
            layout: LayoutConfig { n_tiers: 2, ..Default::default() },
            radio: RadioParams { n_antennas: 4, noise_dbm: -68.0, ..Default::default() },
            pool: RbpPoolParams { gue_min: 1, gue_max: 2, ..Default::default() },
            ..Self::default()
        }
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(
            self.traj_start,
            self.traj_end,
            self.velocity_mps,
            self.slot_duration_s,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.itu.validate()?;
        self.chan.validate()?;
        self.radio.validate()?;
        self.pool.validate()?;
        let traj = self.trajectory()?;
        if self.outer_epochs != traj.n_slots {
            return Err(Error::Config(format!(
                "outer_epochs ({}) must equal the trajectory slot count ({})",
                self.outer_epochs, traj.n_slots
            )));
        }
        if self.batch_d3qn == 0 || self.batch_ddpg == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        if self.batch_d3qn > self.outer_capacity || self.batch_ddpg > self.inner_capacity {
            return Err(Error::Config("batch size exceeds buffer capacity".into()));
        }
        if self.n_rb == 0 {
            return Err(Error::Config("need at least one RB".into()));
        }
        if !(0.0..=1.0).contains(&self.eps_init)
            || !(0.0..1.0).contains(&self.eps_decay)
            || !(0.0..1.0).contains(&self.noise_var_decay)
        {
            return Err(Error::Config("invalid annealing parameters".into()));
        }
        if !(0.0..=1.0).contains(&self.tau) || !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config("tau and gamma must be in [0,1]".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One per-episode log row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub avg_outer_reward: f64,
    pub avg_inner_reward: f64,
    pub d3qn_loss: f64,
    pub critic_loss: f64,
    pub actor_objective: f64,
    pub epsilon: f64,
    pub sigma2: f64,
    pub seconds: f64,
}

/// Per-episode training history.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub rows: Vec<EpisodeRow>,
}

impl TrainLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        // Explicit header so even an empty log is schema-stable.
        w.write_record([
            "episode",
            "avg_outer_reward",
            "avg_inner_reward",
            "d3qn_loss",
            "critic_loss",
            "actor_objective",
            "epsilon",
            "sigma2",
            "seconds",
        ])?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for rec in r.deserialize() {
            rows.push(rec?);
        }
        Ok(Self { rows })
    }

    /// Rows compare equal ignoring wall-clock timing.
    pub fn same_trajectory(&self, other: &TrainLog) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.episode == b.episode
                    && a.avg_outer_reward == b.avg_outer_reward
                    && a.avg_inner_reward == b.avg_inner_reward
                    && a.d3qn_loss == b.d3qn_loss
                    && a.critic_loss == b.critic_loss
                    && a.actor_objective == b.actor_objective
                    && a.epsilon == b.epsilon
                    && a.sigma2 == b.sigma2
            })
    }
}

/// Trained agents plus bookkeeping.
pub struct TrainOutcome {
    /// Agents as of the final episode.
    pub d3qn: D3qnAgent,
    pub ddpg: DdpgAgent,
    /// Snapshots from the best-average-reward episodes (tracked independently).
    pub best_d3qn: D3qnAgent,
    pub best_ddpg: DdpgAgent,
    pub best_outer_episode: usize,
    pub best_inner_episode: usize,
    pub log: TrainLog,
    pub outer_transitions: usize,
    pub inner_transitions: usize,
}

/// Run the interleaved loop over a prebuilt world and RBP pool.
pub fn train_hybrid(
    config: &TrainConfig,
    world: &BuildingWorld,
    pool: &RbpPool,
) -> Result<TrainOutcome> {
    config.validate()?;
    let traj = config.trajectory()?;
    if pool.n_bs != world.n_sites() || pool.n_rb != config.n_rb {
        return Err(Error::Config(format!(
            "pool shape {}x{} does not match world ({} BSs) and config ({} RBs)",
            pool.n_bs,
            pool.n_rb,
            world.n_sites(),
            config.n_rb
        )));
    }

    let n_bs = world.n_sites();
    let m = config.radio.n_antennas;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let sub = |master: &mut ChaCha8Rng| ChaCha8Rng::seed_from_u64(master.gen::<u64>());
    let mut init_rng = sub(&mut master);
    let mut act_rng = sub(&mut master);
    let mut pick_rng = sub(&mut master);
    let mut outer_sample_rng = sub(&mut master);
    let mut inner_sample_rng = sub(&mut master);
    let mut noise_rng = sub(&mut master);
    let outer_env_seed = master.gen::<u64>();
    let mut inner_seed_rng = sub(&mut master);

    let mut d3qn = D3qnAgent::new(
        n_bs * config.n_rb,
        &config.d3qn_hidden,
        config.n_rb,
        config.eps_init,
        &mut init_rng,
    );
    let mut ddpg = DdpgAgent::new(m, &config.ddpg_hidden, config.noise_var_init, &mut init_rng);

    let mut outer_buf: ReplayBuffer<OuterTransition> = ReplayBuffer::new(config.outer_capacity);
    let mut inner_buf: ReplayBuffer<InnerTransition> = ReplayBuffer::new(config.inner_capacity);

    // Slot contexts are trajectory-static; precompute the per-slot link state.
    let mut contexts = Vec::with_capacity(traj.n_slots);
    for slot in 0..traj.n_slots {
        contexts.push(crate::radioenv::slot_context(
            world,
            &traj,
            config.chan.carrier_ghz,
            slot,
        )?);
    }

    let mut env = OuterEnv::new(
        &pool.maps,
        &world.layout,
        config.pool.tier_order,
        config.outer_epochs,
        outer_env_seed,
    )?;

    let mut log = TrainLog::default();
    let mut best_outer = f64::NEG_INFINITY;
    let mut best_inner = f64::NEG_INFINITY;
    let mut best_d3qn = d3qn.clone();
    let mut best_ddpg = ddpg.clone();
    let mut best_outer_episode = 0;
    let mut best_inner_episode = 0;
    let mut outer_transitions = 0usize;
    let mut inner_transitions = 0usize;

    for episode in 0..config.episodes {
        let t0 = Instant::now();
        env.reset();
        let mut outer_reward_sum = 0.0;
        let mut inner_reward_sum = 0.0;
        let mut inner_steps = 0usize;
        let mut d3qn_loss_sum = 0.0;
        let mut d3qn_updates = 0usize;
        let mut critic_loss_sum = 0.0;
        let mut actor_obj_sum = 0.0;
        let mut ddpg_updates = 0usize;

        for _epoch in 0..config.outer_epochs {
            let state = env.state().encode();
            let action = d3qn.act(&state, &mut act_rng);
            let part = env.partition(action)?;
            let slot = env.slot();

            if !part.available.is_empty() {
                // One inner episode against a randomly chosen available BS.
                let bs = part.available[pick_rng.gen_range(0..part.available.len())];
                let link = contexts[slot].per_bs[bs].link;
                let mut inner =
                    InnerEnv::new(bs, link, &config.chan, m, inner_seed_rng.gen::<u64>());
                let mut inner_state = inner.observe();
                for _ in 0..config.inner_epochs {
                    let raw = ddpg.act(&inner_state);
                    let noised = explore(&raw, ddpg.noise_var, &mut noise_rng);
                    let (next_state, reward) = inner.step(&noised);
                    inner_reward_sum += reward;
                    inner_steps += 1;
                    inner_buf.push(InnerTransition {
                        state: inner_state,
                        action: noised,
                        reward,
                        next_state: next_state.clone(),
                    });
                    inner_transitions += 1;
                    if inner_buf.len() >= config.batch_ddpg {
                        let batch = inner_buf.sample(config.batch_ddpg, &mut inner_sample_rng);
                        critic_loss_sum +=
                            ddpg_critic_update(&mut ddpg, &batch, config.gamma, config.lr_critic);
                        actor_obj_sum += ddpg_actor_update(&mut ddpg, &batch, config.lr_actor);
                        ddpg_updates += 1;
                        ddpg.polyak(config.tau);
                    }
                    inner_state = next_state;
                }
            }

            let (reward, next_map) = env.step(action)?;
            outer_reward_sum += reward;
            let next_state = next_map.encode();
            outer_buf.push(OuterTransition { state, action, reward, next_state });
            outer_transitions += 1;
            if outer_buf.len() >= config.batch_d3qn {
                let batch = outer_buf.sample(config.batch_d3qn, &mut outer_sample_rng);
                d3qn_loss_sum += d3qn_update(&mut d3qn, &batch, config.gamma, config.lr_d3qn);
                d3qn_updates += 1;
                if d3qn.n_updates.is_multiple_of(config.target_sync_every) {
                    d3qn.sync_target();
                }
            }
        }

        let avg_outer = outer_reward_sum / config.outer_epochs as f64;
        let avg_inner = if inner_steps > 0 {
            inner_reward_sum / inner_steps as f64
        } else {
            0.0
        };
        log.rows.push(EpisodeRow {
            episode,
            avg_outer_reward: avg_outer,
            avg_inner_reward: avg_inner,
            d3qn_loss: if d3qn_updates > 0 { d3qn_loss_sum / d3qn_updates as f64 } else { 0.0 },
            critic_loss: if ddpg_updates > 0 { critic_loss_sum / ddpg_updates as f64 } else { 0.0 },
            actor_objective: if ddpg_updates > 0 { actor_obj_sum / ddpg_updates as f64 } else { 0.0 },
            epsilon: d3qn.epsilon,
            sigma2: ddpg.noise_var,
            seconds: t0.elapsed().as_secs_f64(),
        });

        if avg_outer > best_outer {
            best_outer = avg_outer;
            best_d3qn = d3qn.clone();
            best_outer_episode = episode;
        }
        if avg_inner > best_inner {
            best_inner = avg_inner;
            best_ddpg = ddpg.clone();
            best_inner_episode = episode;
        }

        d3qn.epsilon *= config.eps_decay;
        ddpg.noise_var *= config.noise_var_decay;
    }

    Ok(TrainOutcome {
        d3qn,
        ddpg,
        best_d3qn,
        best_ddpg,
        best_outer_episode,
        best_inner_episode,
        log,
        outer_transitions,
        inner_transitions,
    })
}

/// Schedule and shape metadata stored next to the network checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    pub epsilon: f64,
    pub noise_var: f64,
    pub n_bs: usize,
    pub n_rb: usize,
    pub n_antennas: usize,
    pub seed: u64,
    pub best_outer_episode: usize,
    pub best_inner_episode: usize,
}

/// One JSON document per network: architecture with weights, optimizer state,
/// the seed the run was launched with, and free-form hyperparameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetDocument {
    pub net: MlpNet,
    pub optimizer: Option<AdamState>,
    pub rng_seed: u64,
    pub hyperparameters: serde_json::Value,
}

fn write_net(dir: &Path, name: &str, doc: &NetDocument) -> Result<()> {
    std::fs::write(dir.join(name), serde_json::to_string(doc)?)?;
    Ok(())
}

fn read_net(dir: &Path, name: &str) -> Result<NetDocument> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(Error::Config(format!("missing checkpoint file {}", path.display())));
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Persist both agents plus the schedule into `dir` (one JSON per network).
pub fn checkpoint_save(
    d3qn: &D3qnAgent,
    ddpg: &DdpgAgent,
    schedule: &ScheduleState,
    config: &TrainConfig,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let hyper = serde_json::json!({
        "lr_d3qn": config.lr_d3qn,
        "lr_critic": config.lr_critic,
        "lr_actor": config.lr_actor,
        "gamma": config.gamma,
        "tau": config.tau,
    });
    let doc = |net: &MlpNet, opt: Option<&AdamState>| NetDocument {
        net: net.clone(),
        optimizer: opt.cloned(),
        rng_seed: config.seed,
        hyperparameters: hyper.clone(),
    };
    write_net(dir, "d3qn_online.json", &doc(&d3qn.online.base, Some(&d3qn.opt)))?;
    write_net(dir, "d3qn_target.json", &doc(&d3qn.target.base, None))?;
    write_net(dir, "actor.json", &doc(&ddpg.actor, Some(&ddpg.actor_opt)))?;
    write_net(dir, "critic.json", &doc(&ddpg.critic, Some(&ddpg.critic_opt)))?;
    write_net(dir, "actor_target.json", &doc(&ddpg.actor_target, None))?;
    write_net(dir, "critic_target.json", &doc(&ddpg.critic_target, None))?;
    std::fs::write(dir.join("schedule.json"), serde_json::to_string_pretty(schedule)?)?;
    Ok(())
}

/// Restore agents and schedule from a checkpoint directory, validating shapes.
pub fn checkpoint_load(dir: &Path) -> Result<(D3qnAgent, DdpgAgent, ScheduleState)> {
    let sched_path = dir.join("schedule.json");
    if !sched_path.exists() {
        return Err(Error::Config(format!(
            "missing checkpoint file {}",
            sched_path.display()
        )));
    }
    let schedule: ScheduleState = serde_json::from_str(&std::fs::read_to_string(sched_path)?)?;

    let d3qn_online = read_net(dir, "d3qn_online.json")?;
    let d3qn_target = read_net(dir, "d3qn_target.json")?;
    let actor = read_net(dir, "actor.json")?;
    let critic = read_net(dir, "critic.json")?;
    let actor_target = read_net(dir, "actor_target.json")?;
    let critic_target = read_net(dir, "critic_target.json")?;

    let expect_in = schedule.n_bs * schedule.n_rb;
    if d3qn_online.net.input_dim() != expect_in {
        return Err(Error::Dimension(format!(
            "D3QN input dim {} does not match {} BSs x {} RBs",
            d3qn_online.net.input_dim(),
            schedule.n_bs,
            schedule.n_rb
        )));
    }
    if d3qn_online.net.output_dim() != schedule.n_rb + 1 {
        return Err(Error::Dimension("D3QN head size mismatch".into()));
    }
    let state_dim = 2 * schedule.n_antennas + 1;
    if actor.net.input_dim() != state_dim
        || actor.net.output_dim() != 2 * schedule.n_antennas
        || critic.net.input_dim() != state_dim + 2 * schedule.n_antennas
    {
        return Err(Error::Dimension(format!(
            "DDPG nets do not match {} antennas",
            schedule.n_antennas
        )));
    }

    let opt_or_fresh = |doc: &NetDocument| {
        doc.optimizer.clone().unwrap_or_else(|| AdamState::new(&doc.net))
    };
    let d3qn = D3qnAgent {
        opt: opt_or_fresh(&d3qn_online),
        online: crate::agents::DuelingQNet { base: d3qn_online.net, n_actions: schedule.n_rb },
        target: crate::agents::DuelingQNet { base: d3qn_target.net, n_actions: schedule.n_rb },
        epsilon: schedule.epsilon,
        n_updates: 0,
        n_syncs: 0,
    };
    let ddpg = DdpgAgent {
        actor_opt: opt_or_fresh(&actor),
        critic_opt: opt_or_fresh(&critic),
        actor: actor.net,
        critic: critic.net,
        actor_target: actor_target.net,
        critic_target: critic_target.net,
        noise_var: schedule.noise_var,
        n_antennas: schedule.n_antennas,
    };
    Ok((d3qn, ddpg, schedule))
}
