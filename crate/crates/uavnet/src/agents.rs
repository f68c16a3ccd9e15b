//! Learning agents: a dueling double deep Q-network for the discrete RB
//! choice and a DDPG actor-critic pair for the continuous beam choice, plus
//! the replay buffers they share.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::channel::ComplexVec;
use crate::nn::{adam_step, Activation, AdamState, Cache, Gradients, MlpNet};

/// Fixed-capacity FIFO transition store with uniform without-replacement
/// batch sampling.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: VecDeque<T>,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: VecDeque::with_capacity(capacity.min(1 << 20)) }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, idx: usize) -> &T {
        &self.items[idx]
    }

    /// Uniform sample of `batch` distinct stored transitions.
    pub fn sample(&self, batch: usize, rng: &mut ChaCha8Rng) -> Vec<&T> {
        assert!(batch <= self.items.len(), "batch larger than buffer");
        rand::seq::index::sample(rng, self.items.len(), batch)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }
}

/// One outer-MDP transition (RBP map encodings).
#[derive(Clone, Debug)]
pub struct OuterTransition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// One inner-MDP transition (encoded CSI states, raw beam actions).
#[derive(Clone, Debug)]
pub struct InnerTransition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Aggregate a dueling head `[V, A_1..A_K]` into Q values `V + A - mean(A)`.
pub fn dueling_q(head: &[f64]) -> Vec<f64> {
    debug_assert!(head.len() >= 2);
    let v = head[0];
    let adv = &head[1..];
    let mean = adv.iter().sum::<f64>() / adv.len() as f64;
    adv.iter().map(|a| v + a - mean).collect()
}

/// Pull a Q-gradient back through the dueling aggregation to the head.
pub fn dueling_upstream(d_q: &[f64]) -> Vec<f64> {
    let sum: f64 = d_q.iter().sum();
    let mean = sum / d_q.len() as f64;
    let mut out = Vec::with_capacity(d_q.len() + 1);
    out.push(sum);
    out.extend(d_q.iter().map(|g| g - mean));
    out
}

/// MLP trunk ending in a `K + 1` dueling head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuelingQNet {
    pub base: MlpNet,
    pub n_actions: usize,
}

impl DuelingQNet {
    pub fn new(input_dim: usize, hidden: &[usize], n_actions: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(hidden);
        dims.push(n_actions + 1);
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Linear);
        Self { base: MlpNet::new(&dims, &acts, rng), n_actions }
    }

    pub fn input_dim(&self) -> usize {
        self.base.input_dim()
    }

    pub fn q_values(&self, state: &[f64]) -> Vec<f64> {
        dueling_q(&self.base.forward(state))
    }

    pub fn forward_cached(&self, state: &[f64]) -> Cache {
        self.base.forward_cached(state)
    }

    pub fn backward(&self, cache: &Cache, d_q: &[f64]) -> Gradients {
        self.base.backward(cache, &dueling_upstream(d_q))
    }
}

/// Greedy action index; ties resolve to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy selection over `q`.
pub fn eps_greedy(q: &[f64], epsilon: f64, rng: &mut ChaCha8Rng) -> usize {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..q.len())
    } else {
        argmax(q)
    }
}

/// Dueling double DQN agent with a hard-synced target copy.
#[derive(Clone, Debug)]
pub struct D3qnAgent {
    pub online: DuelingQNet,
    pub target: DuelingQNet,
    pub opt: AdamState,
    pub epsilon: f64,
    pub n_updates: u64,
    pub n_syncs: u64,
}

impl D3qnAgent {
    pub fn new(
        input_dim: usize,
        hidden: &[usize],
        n_actions: usize,
        epsilon: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let online = DuelingQNet::new(input_dim, hidden, n_actions, rng);
        let target = online.clone();
        let opt = AdamState::new(&online.base);
        Self { online, target, opt, epsilon, n_updates: 0, n_syncs: 0 }
    }

    pub fn act(&self, state: &[f64], rng: &mut ChaCha8Rng) -> usize {
        eps_greedy(&self.online.q_values(state), self.epsilon, rng)
    }

    pub fn greedy(&self, state: &[f64]) -> usize {
        argmax(&self.online.q_values(state))
    }

    /// Hard sync: target parameters become bit-equal to the online ones.
    pub fn sync_target(&mut self) {
        self.target.base.copy_params_from(&self.online.base);
        self.n_syncs += 1;
    }
}

/// Double-Q targets: the online net picks the bootstrap action, the target
/// net evaluates it. No terminal masking; episodes end by epoch count only.
pub fn d3qn_targets(
    batch: &[&OuterTransition],
    online: &DuelingQNet,
    target: &DuelingQNet,
    gamma: f64,
) -> Vec<f64> {
    batch
        .iter()
        .map(|tr| {
            let a_star = argmax(&online.q_values(&tr.next_state));
            tr.reward + gamma * target.q_values(&tr.next_state)[a_star]
        })
        .collect()
}

/// One Adam step on the mean-square temporal-difference loss. The gradient
/// flows only through the Q value of the taken action. Returns the loss.
pub fn d3qn_update(agent: &mut D3qnAgent, batch: &[&OuterTransition], gamma: f64, lr: f64) -> f64 {
    let n = batch.len();
    assert!(n > 0);
    let targets = d3qn_targets(batch, &agent.online, &agent.target, gamma);
    let mut acc = Gradients::zeros_like(&agent.online.base);
    let mut loss = 0.0;
    for (tr, &y) in batch.iter().zip(&targets) {
        let cache = agent.online.forward_cached(&tr.state);
        let q = dueling_q(cache.output());
        let err = q[tr.action] - y;
        loss += err * err / n as f64;
        let mut d_q = vec![0.0; q.len()];
        d_q[tr.action] = 2.0 * err / n as f64;
        acc.add(&agent.online.backward(&cache, &d_q));
    }
    adam_step(&mut agent.opt, &mut agent.online.base, &acc, lr);
    agent.n_updates += 1;
    loss
}

/// DDPG agent: deterministic actor, Q critic and their Polyak-averaged targets.
#[derive(Clone, Debug)]
pub struct DdpgAgent {
    pub actor: MlpNet,
    pub critic: MlpNet,
    pub actor_target: MlpNet,
    pub critic_target: MlpNet,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub noise_var: f64,
    pub n_antennas: usize,
}

impl DdpgAgent {
    /// State is `2M + 1` reals (interleaved CSI estimate plus a LoS flag),
    /// the action `2M` reals, the critic consumes both.
    pub fn new(n_antennas: usize, hidden: &[usize], noise_var: f64, rng: &mut ChaCha8Rng) -> Self {
        let state_dim = 2 * n_antennas + 1;
        let action_dim = 2 * n_antennas;

        let mut actor_dims = vec![state_dim];
        actor_dims.extend_from_slice(hidden);
        actor_dims.push(action_dim);
        let mut actor_acts = vec![Activation::Relu; hidden.len()];
        actor_acts.push(Activation::Tanh);
        let actor = MlpNet::new(&actor_dims, &actor_acts, rng);

        let mut critic_dims = vec![state_dim + action_dim];
        critic_dims.extend_from_slice(hidden);
        critic_dims.push(1);
        let mut critic_acts = vec![Activation::Relu; hidden.len()];
        critic_acts.push(Activation::Linear);
        let critic = MlpNet::new(&critic_dims, &critic_acts, rng);

        let actor_target = actor.clone();
        let critic_target = critic.clone();
        let actor_opt = AdamState::new(&actor);
        let critic_opt = AdamState::new(&critic);
        Self {
            actor,
            critic,
            actor_target,
            critic_target,
            actor_opt,
            critic_opt,
            noise_var,
            n_antennas,
        }
    }

    pub fn state_dim(&self) -> usize {
        2 * self.n_antennas + 1
    }

    pub fn act(&self, state: &[f64]) -> Vec<f64> {
        self.actor.forward(state)
    }

    /// Soft-update both target nets: `target <- tau * online + (1 - tau) * target`.
    pub fn polyak(&mut self, tau: f64) {
        self.actor_target.polyak_from(&self.actor, tau);
        self.critic_target.polyak_from(&self.critic, tau);
    }

    /// Hard copy of both target nets.
    pub fn sync_targets(&mut self) {
        self.actor_target.copy_params_from(&self.actor);
        self.critic_target.copy_params_from(&self.critic);
    }
}

/// Interleave a raw `2M`-real action into a unit-norm complex beam. Raw
/// vectors of negligible norm fall back to the first basis vector.
pub fn actor_to_beam(raw: &[f64]) -> ComplexVec {
    let v = ComplexVec::from_interleaved(raw);
    let norm = v.norm();
    if norm < 1e-9 {
        return ComplexVec::basis(v.len(), 0);
    }
    ComplexVec(v.0.iter().map(|z| z / norm).collect())
}

/// Add zero-mean Gaussian exploration noise (variance per component) to a raw
/// action, before any normalization.
pub fn explore(raw: &[f64], noise_var: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if noise_var <= 0.0 {
        return raw.to_vec();
    }
    let normal = Normal::new(0.0, noise_var.sqrt()).expect("valid noise std");
    raw.iter().map(|x| x + normal.sample(rng)).collect()
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// Bootstrapped critic targets `r + gamma * Q_target(s', actor_target(s'))`.
pub fn ddpg_targets(
    batch: &[&InnerTransition],
    actor_target: &MlpNet,
    critic_target: &MlpNet,
    gamma: f64,
) -> Vec<f64> {
    batch
        .iter()
        .map(|tr| {
            let a_next = actor_target.forward(&tr.next_state);
            tr.reward + gamma * critic_target.forward(&concat(&tr.next_state, &a_next))[0]
        })
        .collect()
}

/// One Adam step on the critic's mean-square Bellman loss. Returns the loss.
pub fn ddpg_critic_update(
    agent: &mut DdpgAgent,
    batch: &[&InnerTransition],
    gamma: f64,
    lr: f64,
) -> f64 {
    let n = batch.len();
    assert!(n > 0);
    let targets = ddpg_targets(batch, &agent.actor_target, &agent.critic_target, gamma);
    let mut acc = Gradients::zeros_like(&agent.critic);
    let mut loss = 0.0;
    for (tr, &y) in batch.iter().zip(&targets) {
        let cache = agent.critic.forward_cached(&concat(&tr.state, &tr.action));
        let err = cache.output()[0] - y;
        loss += err * err / n as f64;
        acc.add(&agent.critic.backward(&cache, &[2.0 * err / n as f64]));
    }
    adam_step(&mut agent.critic_opt, &mut agent.critic, &acc, lr);
    loss
}

/// Gradient-ascent step on the mean critic value of the actor's own actions;
/// per-sample action gradients are supplied by `d_q_d_a(state, action)`.
pub(crate) fn actor_ascent_step<F>(
    actor: &mut MlpNet,
    opt: &mut AdamState,
    states: &[&[f64]],
    mut d_q_d_a: F,
    lr: f64,
) where
    F: FnMut(&[f64], &[f64]) -> Vec<f64>,
{
    let n = states.len();
    assert!(n > 0);
    let mut acc = Gradients::zeros_like(actor);
    for &s in states {
        let cache = actor.forward_cached(s);
        let mut d_a = d_q_d_a(s, cache.output());
        for g in &mut d_a {
            *g /= n as f64;
        }
        acc.add(&actor.backward(&cache, &d_a));
    }
    // The optimizer minimizes; flip the sign to ascend.
    acc.scale(-1.0);
    adam_step(opt, actor, &acc, lr);
}

/// One gradient-ascent Adam step on `mean_t Q(s_t, actor(s_t))` with the
/// critic frozen. Returns the pre-update mean Q estimate.
pub fn ddpg_actor_update(agent: &mut DdpgAgent, batch: &[&InnerTransition], lr: f64) -> f64 {
    let n = batch.len();
    assert!(n > 0);
    let state_dim = agent.state_dim();
    let states: Vec<&[f64]> = batch.iter().map(|tr| tr.state.as_slice()).collect();
    let mut mean_q = 0.0;
    let DdpgAgent { actor, critic, actor_opt, .. } = agent;
    actor_ascent_step(
        actor,
        actor_opt,
        &states,
        |s, a| {
            let cache = critic.forward_cached(&concat(s, a));
            mean_q += cache.output()[0] / n as f64;
            critic.backward(&cache, &[1.0]).d_input[state_dim..].to_vec()
        },
        lr,
    );
    mean_q
}
