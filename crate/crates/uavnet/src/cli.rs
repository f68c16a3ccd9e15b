//! Command-line surface: world/pool generation, training, evaluation and
//! parameter sweeps. All artifacts are JSON (worlds, pools, checkpoints,
//! configs) or CSV (logs, evaluation results).
//!
//! Exit codes: 0 success, 2 configuration error, 1 runtime error.

use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::eval::{
    evaluate_eod, sweep_m, sweep_p, write_results_csv, EvalResult, EvalSetup, PolicySpec,
    TrainedPolicy,
};
use crate::rballoc::{gen_rbp_pool, PoolGenerator, RbpPool, RbpPoolParams};
use crate::trainer::{checkpoint_save, train_hybrid, ScheduleState, TrainConfig, TrainLog};
use crate::world::BuildingWorld;
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "uavnet", version, about = "Cellular-connected UAV link simulator and trainer")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a building field plus BS grid and write it as JSON.
    GenWorld(GenWorldArgs),
    /// Generate a pool of RB-possession maps for an existing world.
    GenPool(GenPoolArgs),
    /// Train the hybrid agents and write checkpoints plus a CSV log.
    Train(TrainArgs),
    /// Evaluate one policy's ergodic outage duration.
    Eval(EvalArgs),
    /// Sweep transmit power or antenna count across policies.
    Sweep(SweepArgs),
    /// Print the resolved configuration and derived quantities.
    Inspect(InspectArgs),
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// JSON config file; fields mirror the training configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in profile: `full` (reference scale) or `desk` (minutes-scale).
    #[arg(long, default_value = "full")]
    profile: String,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = match self.config.as_deref() {
            Some(path) => TrainConfig::load(path)?,
            None => match self.profile.as_str() {
                "full" => TrainConfig::default(),
                "desk" => TrainConfig::desk(),
                other => {
                    return Err(Error::Config(format!(
                        "unknown profile '{other}' (expected full or desk)"
                    )))
                }
            },
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct GenWorldArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    side_km: Option<f64>,
    #[arg(long)]
    built_ratio: Option<f64>,
    /// Buildings per square kilometer.
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    mean_height: Option<f64>,
    #[arg(long)]
    road_km: Option<f64>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    height_clip: Option<f64>,
    #[arg(long)]
    tiers: Option<usize>,
    #[arg(long)]
    isd: Option<f64>,
    #[arg(long)]
    bs_height: Option<f64>,
}

#[derive(Args, Debug)]
struct GenPoolArgs {
    #[arg(long)]
    world: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    n_rb: usize,
    #[arg(long, default_value_t = 22)]
    pool_size: usize,
    #[arg(long, default_value_t = 1)]
    gue_min: u32,
    #[arg(long, default_value_t = 4)]
    gue_max: u32,
    #[arg(long, default_value_t = 1)]
    tier: usize,
    /// Use an independent-bit generator with this density instead of the
    /// criterion-consistent one (ablation).
    #[arg(long)]
    bernoulli: Option<f64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Reuse an existing world JSON instead of generating one.
    #[arg(long)]
    world: Option<PathBuf>,
    /// Reuse an existing pool JSON instead of generating one.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    world: Option<PathBuf>,
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Checkpoint directory (required for learned policies).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// rr | rr-bd | rr-mrt | er-bd | er-mrt | proposed
    #[arg(long)]
    policy: String,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated evaluation seeds.
    #[arg(long, default_value = "1")]
    seeds: String,
    /// Override SINR measurements per slot.
    #[arg(long)]
    measurements: Option<usize>,
    /// Override transmit power, dBm.
    #[arg(long)]
    power_dbm: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    world: Option<PathBuf>,
    #[arg(long)]
    pool: Option<PathBuf>,
    /// `p` (transmit power) or `m` (antenna count).
    #[arg(long)]
    axis: String,
    /// Checkpoint directory for the power sweep.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Checkpoint directory pattern for the antenna sweep; `{m}` is replaced
    /// by the antenna count.
    #[arg(long)]
    checkpoint_pattern: Option<String>,
    /// Comma-separated policy ids; defaults to every policy the supplied
    /// checkpoints can serve.
    #[arg(long)]
    policies: Option<String>,
    /// Comma-separated dBm grid for the power sweep.
    #[arg(long, default_value = "-20,-10,0,10,20,30,40", allow_hyphen_values = true)]
    grid: String,
    /// Comma-separated antenna counts for the antenna sweep.
    #[arg(long, default_value = "2,4,8")]
    antennas: String,
    #[arg(long, default_value = "1,2,3")]
    seeds: String,
    #[arg(long)]
    measurements: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

/// Entry point shared by the binary and the CLI tests.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Dimension(_) => 2,
                _ => 1,
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::GenWorld(a) => gen_world(a),
        Cmd::GenPool(a) => gen_pool(a),
        Cmd::Train(a) => train(a),
        Cmd::Eval(a) => eval(a),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Inspect(a) => inspect(a),
    }
}

fn gen_world(a: GenWorldArgs) -> Result<()> {
    let mut itu = crate::world::ItuParams::default();
    if let Some(v) = a.side_km {
        itu.side_km = v;
    }
    if let Some(v) = a.built_ratio {
        itu.built_ratio = v;
    }
    if let Some(v) = a.density {
        itu.buildings_per_km2 = v;
    }
    if let Some(v) = a.mean_height {
        itu.mean_height_m = v;
    }
    if let Some(v) = a.road_km {
        itu.road_km = v;
    }
    if let Some(v) = a.clusters {
        itu.clusters_per_side = v;
    }
    if let Some(v) = a.height_clip {
        itu.height_clip_m = v;
    }
    let mut lcfg = crate::world::LayoutConfig::default();
    if let Some(v) = a.tiers {
        lcfg.n_tiers = v;
    }
    if let Some(v) = a.isd {
        lcfg.isd_m = v;
    }
    if let Some(v) = a.bs_height {
        lcfg.bs_height_m = v;
    }
    let world = BuildingWorld::generate(&itu, &lcfg, a.seed)?;
    world.save(&a.out)?;
    println!(
        "wrote {} ({} buildings, {} BSs)",
        a.out.display(),
        world.buildings.len(),
        world.n_sites()
    );
    Ok(())
}

fn gen_pool(a: GenPoolArgs) -> Result<()> {
    let world = BuildingWorld::load(&a.world)?;
    let params = RbpPoolParams {
        pool_size: a.pool_size,
        gue_min: a.gue_min,
        gue_max: a.gue_max,
        tier_order: a.tier,
        generator: match a.bernoulli {
            Some(density) => PoolGenerator::Bernoulli { density },
            None => PoolGenerator::Criterion,
        },
    };
    let pool = gen_rbp_pool(&params, a.n_rb, &world.layout, a.seed)?;
    pool.save(&a.out)?;
    println!(
        "wrote {} ({} maps of {}x{})",
        a.out.display(),
        pool.maps.len(),
        pool.n_bs,
        pool.n_rb
    );
    Ok(())
}

fn load_or_generate(
    cfg: &TrainConfig,
    world_path: Option<&Path>,
    pool_path: Option<&Path>,
) -> Result<(BuildingWorld, RbpPool)> {
    let world = match world_path {
        Some(p) => BuildingWorld::load(p)?,
        None => BuildingWorld::generate(&cfg.itu, &cfg.layout, cfg.seed)?,
    };
    let pool = match pool_path {
        Some(p) => RbpPool::load(p)?,
        None => gen_rbp_pool(&cfg.pool, cfg.n_rb, &world.layout, cfg.seed)?,
    };
    Ok((world, pool))
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = a.config.resolve()?;
    if let Some(e) = a.episodes {
        cfg.episodes = e;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&a.out_dir)?;
    cfg.save(&a.out_dir.join("config.json"))?;

    let (world, pool) = load_or_generate(&cfg, a.world.as_deref(), a.pool.as_deref())?;
    // Keep the exact geometry and pool next to the checkpoint so evaluation
    // runs against the maps the agents were trained on.
    world.save(&a.out_dir.join("world.json"))?;
    pool.save(&a.out_dir.join("pool.json"))?;
    if cfg.episodes == 0 {
        TrainLog::default().write_csv(&a.out_dir.join("train_log.csv"))?;
        println!("no episodes requested; wrote an empty log");
        return Ok(());
    }
    let out = train_hybrid(&cfg, &world, &pool)?;
    out.log.write_csv(&a.out_dir.join("train_log.csv"))?;
    let schedule = ScheduleState {
        epsilon: out.d3qn.epsilon,
        noise_var: out.ddpg.noise_var,
        n_bs: world.n_sites(),
        n_rb: cfg.n_rb,
        n_antennas: cfg.radio.n_antennas,
        seed: cfg.seed,
        best_outer_episode: out.best_outer_episode,
        best_inner_episode: out.best_inner_episode,
    };
    // The shipped checkpoint keeps the best-average-reward episode of each agent.
    checkpoint_save(
        &out.best_d3qn,
        &out.best_ddpg,
        &schedule,
        &cfg,
        &a.out_dir.join("checkpoint"),
    )?;
    let last = out.log.rows.last().expect("at least one episode");
    println!(
        "trained {} episodes: avg outer reward {:.3}, avg inner reward {:.3} \
         (best episodes: outer {}, inner {})",
        cfg.episodes,
        last.avg_outer_reward,
        last.avg_inner_reward,
        out.best_outer_episode,
        out.best_inner_episode
    );
    println!("checkpoint: {}", a.out_dir.join("checkpoint").display());
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.trim()
                .parse::<T>()
                .map_err(|_| Error::Config(format!("bad {what} entry '{x}'")))
        })
        .collect()
}

fn eval(a: EvalArgs) -> Result<()> {
    let mut cfg = a.config.resolve()?;
    if let Some(m) = a.measurements {
        cfg.radio.sinr_measurements = m;
    }
    if let Some(p) = a.power_dbm {
        cfg.radio.tx_power_dbm = p;
    }
    let policy = PolicySpec::parse(&a.policy)?;
    let (world, pool) = load_or_generate(&cfg, a.world.as_deref(), a.pool.as_deref())?;
    let traj = cfg.trajectory()?;
    let agents = match &a.checkpoint {
        Some(dir) => Some(TrainedPolicy::load(dir)?),
        None => {
            if policy.needs_d3qn() || policy.needs_ddpg() {
                return Err(Error::Config(format!(
                    "policy '{}' requires --checkpoint <dir>",
                    policy.label()
                )));
            }
            None
        }
    };
    let setup = EvalSetup {
        world: &world,
        traj: &traj,
        maps: &pool.maps,
        chan: cfg.chan,
        radio: cfg.radio,
        tier_order: cfg.pool.tier_order,
    };
    let seeds: Vec<u64> = parse_list(&a.seeds, "seed")?;
    let mut results: Vec<EvalResult> = Vec::new();
    for seed in seeds {
        let mut r = evaluate_eod(&setup, policy, agents.as_ref(), seed)?;
        r.axis = "P_dBm".into();
        r.axis_value = cfg.radio.tx_power_dbm;
        println!("{} seed {} -> EOD {:.3} s", r.policy, seed, r.eod_s);
        results.push(r);
    }
    write_results_csv(&results, &a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = a.config.resolve()?;
    if let Some(m) = a.measurements {
        cfg.radio.sinr_measurements = m;
    }
    let (world, pool) = load_or_generate(&cfg, a.world.as_deref(), a.pool.as_deref())?;
    let traj = cfg.trajectory()?;
    let seeds: Vec<u64> = parse_list(&a.seeds, "seed")?;
    let setup = EvalSetup {
        world: &world,
        traj: &traj,
        maps: &pool.maps,
        chan: cfg.chan,
        radio: cfg.radio,
        tier_order: cfg.pool.tier_order,
    };

    let policies: Vec<PolicySpec> = match &a.policies {
        Some(list) => list
            .split(',')
            .filter(|s| !s.is_empty())
            .map(PolicySpec::parse)
            .collect::<Result<Vec<_>>>()?,
        None => {
            let has_ckpt = a.checkpoint.is_some() || a.checkpoint_pattern.is_some();
            if has_ckpt {
                PolicySpec::ALL.to_vec()
            } else {
                vec![PolicySpec::RR_NO_BD, PolicySpec::RR_MRT, PolicySpec::ER_MRT]
            }
        }
    };

    let results = match a.axis.as_str() {
        "p" | "P" => {
            let grid: Vec<f64> = parse_list(&a.grid, "grid")?;
            let agents = match &a.checkpoint {
                Some(dir) => Some(TrainedPolicy::load(dir)?),
                None => None,
            };
            sweep_p(&setup, &grid, &policies, agents.as_ref(), &seeds)?
        }
        "m" | "M" => {
            let antennas: Vec<usize> = parse_list(&a.antennas, "antenna count")?;
            let mut agents_by_m = BTreeMap::new();
            if let Some(pattern) = &a.checkpoint_pattern {
                for &m in &antennas {
                    let dir = PathBuf::from(pattern.replace("{m}", &m.to_string()));
                    if dir.exists() {
                        agents_by_m.insert(m, TrainedPolicy::load(&dir)?);
                    }
                }
            }
            sweep_m(&setup, &antennas, &policies, &agents_by_m, &seeds)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown sweep axis '{other}' (expected p or m)"
            )))
        }
    };
    write_results_csv(&results, &a.out)?;
    println!("wrote {} ({} rows)", a.out.display(), results.len());
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<()> {
    let cfg = a.config.resolve()?;
    cfg.validate()?;
    let traj = cfg.trajectory()?;
    println!("{}", serde_json::to_string_pretty(&cfg)?);
    println!("derived:");
    println!("  slots along trajectory : {}", traj.n_slots);
    println!("  travel time            : {:.1} s", traj.travel_time_s());
    println!(
        "  BS sites               : {}",
        3 * cfg.layout.n_tiers * cfg.layout.n_tiers + 3 * cfg.layout.n_tiers + 1
    );
    println!("  buildings              : {}", cfg.itu.building_count());
    println!(
        "  D3QN input / actions   : {} / {}",
        (3 * cfg.layout.n_tiers * cfg.layout.n_tiers + 3 * cfg.layout.n_tiers + 1) * cfg.n_rb,
        cfg.n_rb
    );
    println!(
        "  DDPG state / action    : {} / {}",
        2 * cfg.radio.n_antennas + 1,
        2 * cfg.radio.n_antennas
    );
    Ok(())
}
