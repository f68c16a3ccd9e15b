//! Radio-layer glue: per-slot link context, SINR with macro-diversity,
//! Monte-Carlo outage probability, ergodic outage duration, and the two MDP
//! environment facades consumed by the agents.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::actor_to_beam;
use crate::channel::{
    complex_gaussian, compose_imperfect_csi, mrt, pathloss_db, sample_fading, ChannelConfig,
    ComplexVec, CsiSample, LinkType,
};
use crate::rballoc::{outer_reward, rb_partition, RbPartition, RbpMap};
use crate::world::{BuildingWorld, HexLayout, Trajectory};
use crate::{Error, Result};

/// Transmit-side and measurement parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioParams {
    /// Per-BS transmit power, dBm.
    pub tx_power_dbm: f64,
    /// Receiver noise power, dBm.
    pub noise_dbm: f64,
    /// Outage SINR threshold, dB.
    pub sinr_threshold_db: f64,
    /// SINR measurements per slot used for the arithmetic outage estimate.
    pub sinr_measurements: usize,
    /// Antennas per BS.
    pub n_antennas: usize,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            tx_power_dbm: 15.0,
            noise_dbm: -90.0,
            sinr_threshold_db: 0.0,
            sinr_measurements: 1000,
            n_antennas: 8,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if self.sinr_measurements == 0 {
            return Err(Error::Config("need at least one SINR measurement".into()));
        }
        if self.n_antennas == 0 {
            return Err(Error::Config("need at least one antenna".into()));
        }
        Ok(())
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Link class, pathloss and distance of one BS towards the DUE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsRadioState {
    pub link: LinkType,
    pub pathloss_db: f64,
    pub distance_m: f64,
}

/// Everything slot-static the radio layer needs: DUE position and per-BS
/// link state, consistent with the blockage geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotContext {
    pub slot: usize,
    pub due_pos: [f64; 3],
    pub per_bs: Vec<BsRadioState>,
}

/// Build the slot context by ray-checking every BS against the building field.
pub fn slot_context(
    world: &BuildingWorld,
    traj: &Trajectory,
    carrier_ghz: f64,
    slot: usize,
) -> Result<SlotContext> {
    let due_pos = traj.position(slot)?;
    let mut per_bs = Vec::with_capacity(world.n_sites());
    for site in &world.layout.sites {
        let d = ((site.x - due_pos[0]).powi(2)
            + (site.y - due_pos[1]).powi(2)
            + (site.z - due_pos[2]).powi(2))
        .sqrt();
        let link = if world.los_blocked(site.id, due_pos) {
            LinkType::Nlos
        } else {
            LinkType::Los
        };
        per_bs.push(BsRadioState {
            link,
            pathloss_db: pathloss_db(link, d, due_pos[2], carrier_ghz)?,
            distance_m: d,
        });
    }
    Ok(SlotContext { slot, due_pos, per_bs })
}

/// Instantaneous SINR (linear). `desired` carries `(bs, channel, beam)` for
/// every serving BS, `interferers` the same for every co-channel BS; all
/// beams must be unit-norm. Powers combine per BS (macro-diversity adds
/// received powers, not amplitudes).
pub fn sinr(
    ctx: &SlotContext,
    desired: &[(usize, &ComplexVec, &ComplexVec)],
    interferers: &[(usize, &ComplexVec, &ComplexVec)],
    params: &RadioParams,
) -> f64 {
    let p_mw = dbm_to_mw(params.tx_power_dbm);
    let noise_mw = dbm_to_mw(params.noise_dbm);
    let mut signal = 0.0;
    for (b, h, w) in desired {
        assert!((w.norm() - 1.0).abs() < 1e-6, "beam for BS {b} is not unit-norm");
        let gain = 10f64.powf(-ctx.per_bs[*b].pathloss_db / 10.0);
        signal += p_mw * gain * h.dot(w).norm_sqr();
    }
    let mut interference = 0.0;
    for (b, h, w) in interferers {
        assert!((w.norm() - 1.0).abs() < 1e-6, "beam for BS {b} is not unit-norm");
        let gain = 10f64.powf(-ctx.per_bs[*b].pathloss_db / 10.0);
        interference += p_mw * gain * h.dot(w).norm_sqr();
    }
    signal / (interference + noise_mw)
}

/// Binary outage indicator: 1 iff the SINR falls strictly below the threshold.
pub fn itop(sinr_linear: f64, threshold_db: f64) -> u8 {
    u8::from(sinr_linear < dbm_to_mw(threshold_db))
}

/// Chooses a unit beam from an estimated channel and its link class.
pub trait BeamPolicy {
    fn beam(&self, est: &ComplexVec, link: LinkType, rng: &mut ChaCha8Rng) -> ComplexVec;
}

/// Arithmetic outage probability over `sinr_measurements` independent fading
/// realizations. Every available BS gets a fresh estimate, the imperfect-CSI
/// composition and a policy beam on its own estimate; every occupied BS draws
/// a fresh drone-bound channel and aims a maximum-ratio beam at an
/// independent Rayleigh ground channel.
pub fn estimate_top(
    ctx: &SlotContext,
    available: &[usize],
    occupied: &[usize],
    policy: &dyn BeamPolicy,
    chan: &ChannelConfig,
    params: &RadioParams,
    seed: u64,
) -> f64 {
    let mut chan_rng = ChaCha8Rng::seed_from_u64(seed);
    // A separate policy stream keeps channel draws aligned across policies.
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let m = params.n_antennas;
    let mut outages = 0usize;
    for _ in 0..params.sinr_measurements {
        let mut desired_store: Vec<(usize, ComplexVec, ComplexVec)> =
            Vec::with_capacity(available.len());
        for &b in available {
            let link = ctx.per_bs[b].link;
            let est = sample_fading(link, m, chan, &mut chan_rng);
            let csi = compose_imperfect_csi(est, link, chan.csi_rho, &mut chan_rng);
            let w = policy.beam(&csi.est, link, &mut policy_rng);
            desired_store.push((b, csi.truth, w));
        }
        let mut interferer_store: Vec<(usize, ComplexVec, ComplexVec)> =
            Vec::with_capacity(occupied.len());
        for &b in occupied {
            let link = ctx.per_bs[b].link;
            let h = sample_fading(link, m, chan, &mut chan_rng);
            let ground = complex_gaussian(m, &mut chan_rng);
            let w_bg = mrt(&ground).expect("Gaussian channel is nonzero");
            interferer_store.push((b, h, w_bg));
        }
        let desired: Vec<(usize, &ComplexVec, &ComplexVec)> =
            desired_store.iter().map(|(b, h, w)| (*b, h, w)).collect();
        let interferers: Vec<(usize, &ComplexVec, &ComplexVec)> =
            interferer_store.iter().map(|(b, h, w)| (*b, h, w)).collect();
        let s = sinr(ctx, &desired, &interferers, params);
        outages += itop(s, params.sinr_threshold_db) as usize;
    }
    outages as f64 / params.sinr_measurements as f64
}

/// Ergodic outage duration: slot duration times the summed per-slot outage
/// probabilities.
pub fn eod(per_slot_tops: &[f64], slot_duration_s: f64) -> f64 {
    slot_duration_s * per_slot_tops.iter().sum::<f64>()
}

/// Outer environment: the RBP map is the state, the RB index the action, the
/// availability ratio the reward, and the pool draw the transition kernel.
pub struct OuterEnv<'a> {
    maps: &'a [RbpMap],
    layout: &'a HexLayout,
    tier_order: usize,
    epoch_limit: usize,
    epoch: usize,
    current: RbpMap,
    rng: ChaCha8Rng,
}

impl<'a> OuterEnv<'a> {
    pub fn new(
        maps: &'a [RbpMap],
        layout: &'a HexLayout,
        tier_order: usize,
        epoch_limit: usize,
        seed: u64,
    ) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::Config("outer environment needs a non-empty pool".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let current = crate::rballoc::pool_step(maps, &mut rng)?.clone();
        Ok(Self { maps, layout, tier_order, epoch_limit, epoch: 0, current, rng })
    }

    /// Re-observe a pool map and rewind the slot counter.
    pub fn reset(&mut self) -> &RbpMap {
        self.epoch = 0;
        self.current = crate::rballoc::pool_step(self.maps, &mut self.rng)
            .expect("pool checked non-empty")
            .clone();
        &self.current
    }

    pub fn state(&self) -> &RbpMap {
        &self.current
    }

    /// Slot index of the upcoming step.
    pub fn slot(&self) -> usize {
        self.epoch
    }

    pub fn partition(&self, rb: usize) -> Result<RbPartition> {
        rb_partition(&self.current, rb, self.tier_order, self.layout)
    }

    /// Execute RB choice `rb`: reward comes from the current map, the next
    /// state is a fresh pool draw.
    pub fn step(&mut self, rb: usize) -> Result<(f64, &RbpMap)> {
        if self.epoch >= self.epoch_limit {
            return Err(Error::Domain(format!(
                "episode is over after {} epochs",
                self.epoch_limit
            )));
        }
        let part = self.partition(rb)?;
        let reward = outer_reward(&part.available, &part.occupied);
        self.current = crate::rballoc::pool_step(self.maps, &mut self.rng)
            .expect("pool checked non-empty")
            .clone();
        self.epoch += 1;
        Ok((reward, &self.current))
    }
}

/// Encode an inner state: interleaved estimated CSI plus a LoS flag.
pub fn encode_inner_state(est: &ComplexVec, link: LinkType) -> Vec<f64> {
    let mut v = est.to_interleaved();
    v.push(match link {
        LinkType::Los => 1.0,
        LinkType::Nlos => 0.0,
    });
    v
}

/// Inner environment for one serving BS: states are estimated-CSI draws, the
/// action is a raw beam vector, the reward the beam's matched-power ratio.
/// State transitions are i.i.d. channel redraws.
pub struct InnerEnv {
    pub bs: usize,
    pub link: LinkType,
    n_antennas: usize,
    rho: f64,
    chan: ChannelConfig,
    csi: CsiSample,
    rng: ChaCha8Rng,
}

impl InnerEnv {
    pub fn new(
        bs: usize,
        link: LinkType,
        chan: &ChannelConfig,
        n_antennas: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let csi = Self::draw(link, chan, n_antennas, &mut rng);
        Self { bs, link, n_antennas, rho: chan.csi_rho, chan: *chan, csi, rng }
    }

    fn draw(
        link: LinkType,
        chan: &ChannelConfig,
        n_antennas: usize,
        rng: &mut ChaCha8Rng,
    ) -> CsiSample {
        let est = sample_fading(link, n_antennas, chan, rng);
        compose_imperfect_csi(est, link, chan.csi_rho, rng)
    }

    pub fn observe(&self) -> Vec<f64> {
        encode_inner_state(&self.csi.est, self.link)
    }

    pub fn csi(&self) -> &CsiSample {
        &self.csi
    }

    /// Execute a raw action: normalize it into a beam, score it against the
    /// current channel draw, then redraw the channel as the next state.
    pub fn step(&mut self, raw_action: &[f64]) -> (Vec<f64>, f64) {
        debug_assert_eq!(raw_action.len(), 2 * self.n_antennas);
        let beam = actor_to_beam(raw_action);
        let reward = self.csi.truth.dot(&beam).norm_sqr() / self.csi.est.norm_sqr();
        self.csi = Self::draw(self.link, &self.chan, self.n_antennas, &mut self.rng);
        (self.observe(), reward)
    }

    /// Correlation coefficient the environment composes channels with.
    pub fn rho(&self) -> f64 {
        self.rho
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::mrt;
    use crate::rballoc::{gen_rbp_pool, RbpPoolParams};
    use crate::world::{hex_bs_layout, ItuParams, LayoutConfig, Region};
    use num_complex::Complex64;
    use rand::Rng;

    fn ctx_with_pathloss(pl: &[f64]) -> SlotContext {
        SlotContext {
            slot: 0,
            due_pos: [0.0, 0.0, 100.0],
            per_bs: pl
                .iter()
                .map(|&p| BsRadioState { link: LinkType::Los, pathloss_db: p, distance_m: 1.0 })
                .collect(),
        }
    }

    #[test]
    fn sinr_constructed_equality() {
        // One serving BS, no interferers, received power tuned to the noise.
        let params = RadioParams {
            tx_power_dbm: 0.0,
            noise_dbm: -30.0,
            n_antennas: 1,
            ..Default::default()
        };
        let ctx = ctx_with_pathloss(&[30.0]);
        let h = ComplexVec(vec![Complex64::new(1.0, 0.0)]);
        let w = ComplexVec(vec![Complex64::new(1.0, 0.0)]);
        let s = sinr(&ctx, &[(0, &h, &w)], &[], &params);
        assert!((s - 1.0).abs() < 1e-12);

        // Empty serving set: zero SINR.
        assert_eq!(sinr(&ctx, &[], &[], &params), 0.0);
    }

    #[test]
    fn sinr_sums_per_bs_powers() {
        let params = RadioParams {
            tx_power_dbm: 0.0,
            noise_dbm: -30.0,
            n_antennas: 1,
            ..Default::default()
        };
        let ctx = ctx_with_pathloss(&[30.0, 30.0]);
        let h = ComplexVec(vec![Complex64::new(1.0, 0.0)]);
        let w = ComplexVec(vec![Complex64::new(1.0, 0.0)]);
        let s = sinr(&ctx, &[(0, &h, &w), (1, &h, &w)], &[], &params);
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_is_phase_invariant() {
        let params = RadioParams { n_antennas: 2, ..Default::default() };
        let ctx = ctx_with_pathloss(&[95.0, 101.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = complex_gaussian(2, &mut rng);
        let w = mrt(&h).unwrap();
        let hi = complex_gaussian(2, &mut rng);
        let wi = mrt(&complex_gaussian(2, &mut rng)).unwrap();
        let base = sinr(&ctx, &[(0, &h, &w)], &[(1, &hi, &wi)], &params);
        for theta in [0.3, 1.2, 2.9] {
            let rot = Complex64::from_polar(1.0, theta);
            let w_rot = ComplexVec(w.0.iter().map(|z| z * rot).collect());
            let wi_rot = ComplexVec(wi.0.iter().map(|z| z * rot).collect());
            let s = sinr(&ctx, &[(0, &h, &w_rot)], &[(1, &hi, &wi_rot)], &params);
            assert!((s - base).abs() < 1e-12 * base.max(1.0));
        }
    }

    #[test]
    #[should_panic(expected = "unit-norm")]
    fn sinr_rejects_non_unit_beams() {
        let params = RadioParams { n_antennas: 1, ..Default::default() };
        let ctx = ctx_with_pathloss(&[90.0]);
        let h = ComplexVec(vec![Complex64::new(1.0, 0.0)]);
        let w = ComplexVec(vec![Complex64::new(2.0, 0.0)]);
        sinr(&ctx, &[(0, &h, &w)], &[], &params);
    }

    #[test]
    fn itop_is_strict() {
        assert_eq!(itop(0.99, 0.0), 1);
        assert_eq!(itop(1.0, 0.0), 0);
        assert_eq!(itop(10.0, 0.0), 0);
    }

    struct MrtPolicy;
    impl BeamPolicy for MrtPolicy {
        fn beam(&self, est: &ComplexVec, _link: LinkType, _rng: &mut ChaCha8Rng) -> ComplexVec {
            mrt(est).unwrap()
        }
    }

    #[test]
    fn top_with_no_serving_bs_is_one() {
        let ctx = ctx_with_pathloss(&[100.0, 100.0]);
        let params = RadioParams { sinr_measurements: 50, n_antennas: 2, ..Default::default() };
        let chan = ChannelConfig::default();
        let top = estimate_top(&ctx, &[], &[1], &MrtPolicy, &chan, &params, 7);
        assert_eq!(top, 1.0);
    }

    #[test]
    fn top_with_huge_margin_is_zero() {
        // 20 dB mean SNR above threshold, no interferers, perfect CSI + MRT:
        // outage is impossible in practice.
        let params = RadioParams {
            tx_power_dbm: 15.0,
            noise_dbm: -90.0,
            sinr_threshold_db: 0.0,
            sinr_measurements: 10_000,
            n_antennas: 8,
        };
        let chan = ChannelConfig { csi_rho: 1.0, ..Default::default() };
        let ctx = ctx_with_pathloss(&[85.0]);
        let top = estimate_top(&ctx, &[0], &[], &MrtPolicy, &chan, &params, 3);
        assert_eq!(top, 0.0);
    }

    #[test]
    fn top_measurement_noise_is_binomial() {
        // Mid-range outage scenario; two independent runs must agree within
        // the binomial error of the measurement count.
        let params = RadioParams {
            tx_power_dbm: 15.0,
            noise_dbm: -90.0,
            sinr_threshold_db: 0.0,
            sinr_measurements: 10_000,
            n_antennas: 4,
        };
        let chan = ChannelConfig::default();
        let ctx = ctx_with_pathloss(&[104.0, 102.0]);
        let a = estimate_top(&ctx, &[0], &[1], &MrtPolicy, &chan, &params, 11);
        let b = estimate_top(&ctx, &[0], &[1], &MrtPolicy, &chan, &params, 12);
        assert!(a > 0.05 && a < 0.95, "want a mid-range scenario, got {a}");
        let p = (a + b) / 2.0;
        let se = (p * (1.0 - p) / params.sinr_measurements as f64).sqrt();
        assert!((a - b).abs() <= 3.0 * se, "a {a} b {b}");
    }

    #[test]
    fn eod_examples() {
        assert!((eod(&[1.0; 22], 1.82) - 40.04).abs() < 1e-9);
        assert_eq!(eod(&[0.0; 22], 1.82), 0.0);
        assert!((eod(&[0.5; 22], 1.82) - 20.02).abs() < 1e-9);
    }

    fn small_world() -> (crate::world::BuildingWorld, crate::rballoc::RbpPool) {
        let itu = ItuParams { side_km: 3.0, ..Default::default() };
        let lcfg = LayoutConfig { n_tiers: 1, ..Default::default() };
        let world = BuildingWorld::generate(&itu, &lcfg, 5).unwrap();
        let pool = gen_rbp_pool(
            &RbpPoolParams { pool_size: 4, gue_min: 1, gue_max: 1, ..Default::default() },
            8,
            &world.layout,
            9,
        )
        .unwrap();
        (world, pool)
    }

    #[test]
    fn outer_env_rewards_and_determinism() {
        let region = Region::new(0.0, 3000.0, 0.0, 3000.0, 0.0, 100.0).unwrap();
        let layout = hex_bs_layout(1, 450.0, 25.0, &region).unwrap();

        // Hand-built pool: map 0 leaves RB 0 idle everywhere, map 1 occupies
        // RB 1 at every BS.
        let mut idle = RbpMap::zeros(7, 2);
        idle.set(0, 1, true);
        let mut full = RbpMap::zeros(7, 2);
        for b in 0..7 {
            full.set(b, 1, true);
        }
        let maps = vec![idle, full];

        let mut env = OuterEnv::new(&maps, &layout, 1, 4, 3).unwrap();
        env.reset();
        // Find which map we're on and check both reward extremes.
        for _ in 0..4 {
            let on_full = env.state().get(3, 1);
            let (r_idle, _) = {
                let part = env.partition(0).unwrap();
                (outer_reward(&part.available, &part.occupied), ())
            };
            if on_full {
                let part = env.partition(1).unwrap();
                assert_eq!(outer_reward(&part.available, &part.occupied), 0.0);
            }
            assert_eq!(r_idle, 1.0);
            env.step(0).unwrap();
        }
        assert!(env.step(0).is_err(), "episode must end");

        // Same seed, same trajectory of states and rewards.
        let run = |seed: u64| {
            let mut env = OuterEnv::new(&maps, &layout, 1, 8, seed).unwrap();
            env.reset();
            let mut out = Vec::new();
            for _ in 0..8 {
                let (r, s) = env.step(1).unwrap();
                out.push((r, s.clone()));
            }
            out
        };
        assert_eq!(run(42), run(42));
    }

    #[test]
    fn inner_env_reward_identities() {
        let chan = ChannelConfig { csi_rho: 1.0, ..Default::default() };
        let mut env = InnerEnv::new(0, LinkType::Los, &chan, 4, 1);
        // Perfect CSI + matched beam: reward exactly 1.
        for _ in 0..20 {
            let w = mrt(&env.csi().est).unwrap();
            let raw = w.to_interleaved();
            let (_, r) = env.step(&raw);
            assert!((r - 1.0).abs() < 1e-12, "reward {r}");
        }

        // Beam orthogonal to the true channel: reward 0. For a 2-entry
        // channel (t0, t1), the vector (t1, -t0) satisfies t . w = 0 under
        // the unconjugated product.
        let chan = ChannelConfig::default();
        let mut env = InnerEnv::new(0, LinkType::Nlos, &chan, 2, 2);
        let truth = env.csi().truth.clone();
        let raw = ComplexVec(vec![truth.0[1], -truth.0[0]]).to_interleaved();
        let (_, r) = env.step(&raw);
        assert!(r < 1e-12, "reward {r}");
    }

    #[test]
    fn inner_env_reward_bound() {
        let chan = ChannelConfig::default();
        let mut env = InnerEnv::new(0, LinkType::Los, &chan, 4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let bound = env.csi().truth.norm_sqr() / env.csi().est.norm_sqr();
            let raw: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (_, r) = env.step(&raw);
            assert!(r <= bound + 1e-9, "reward {r} above bound {bound}");
        }
    }

    #[test]
    fn inner_state_encoding_shape() {
        let chan = ChannelConfig::default();
        let env = InnerEnv::new(2, LinkType::Los, &chan, 4, 5);
        let s = env.observe();
        assert_eq!(s.len(), 9);
        assert_eq!(s[8], 1.0);
        let env = InnerEnv::new(2, LinkType::Nlos, &chan, 4, 5);
        assert_eq!(env.observe()[8], 0.0);
    }

    #[test]
    fn slot_context_is_geometry_consistent() {
        let (world, _) = small_world();
        let traj = Trajectory::new(
            [1000.0, 1000.0, 100.0],
            [2000.0, 2000.0, 100.0],
            35.0,
            1.82,
        )
        .unwrap();
        let ctx = slot_context(&world, &traj, 2.0, 0).unwrap();
        assert_eq!(ctx.per_bs.len(), world.n_sites());
        for (i, bs) in ctx.per_bs.iter().enumerate() {
            let expect = if world.los_blocked(i, ctx.due_pos) {
                LinkType::Nlos
            } else {
                LinkType::Los
            };
            assert_eq!(bs.link, expect);
            let pl = pathloss_db(bs.link, bs.distance_m, 100.0, 2.0).unwrap();
            assert_eq!(pl, bs.pathloss_db);
        }
        assert!(slot_context(&world, &traj, 2.0, 22).is_err());
    }
}
