//! End-to-end checks of the command-line surface: artifact generation, exit
//! codes and CSV schemas.

use uavnet::cli::cli_main;
use uavnet::eval::read_results_csv;
use uavnet::trainer::TrainLog;
use uavnet::world::BuildingWorld;

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["uavnet"];
    argv.extend_from_slice(args);
    cli_main(argv)
}

#[test]
fn gen_world_produces_the_reference_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("world.json");
    let code = run(&["gen-world", "--out", out.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(code, 0);
    let world = BuildingWorld::load(&out).unwrap();
    assert_eq!(world.buildings.len(), 927);
    assert_eq!(world.n_sites(), 37);
}

#[test]
fn gen_pool_respects_world_shape() {
    let dir = tempfile::tempdir().unwrap();
    let world = dir.path().join("world.json");
    assert_eq!(
        run(&["gen-world", "--out", world.to_str().unwrap(), "--tiers", "1", "--seed", "2"]),
        0
    );
    let pool = dir.path().join("pool.json");
    let code = run(&[
        "gen-pool",
        "--world",
        world.to_str().unwrap(),
        "--out",
        pool.to_str().unwrap(),
        "--n-rb",
        "10",
        "--gue-min",
        "1",
        "--gue-max",
        "1",
        "--pool-size",
        "4",
    ]);
    assert_eq!(code, 0);
    let pool = uavnet::rballoc::RbpPool::load(&pool).unwrap();
    assert_eq!(pool.n_bs, 7);
    assert_eq!(pool.n_rb, 10);
    assert_eq!(pool.maps.len(), 4);
}

#[test]
fn train_zero_episodes_writes_an_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let code = run(&[
        "train",
        "--profile",
        "desk",
        "--episodes",
        "0",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let log = TrainLog::read_csv(&out_dir.join("train_log.csv")).unwrap();
    assert!(log.rows.is_empty());
    // The header must still be present.
    let text = std::fs::read_to_string(out_dir.join("train_log.csv")).unwrap();
    assert!(text.starts_with("episode,avg_outer_reward"));
    assert!(out_dir.join("world.json").exists());
    assert!(out_dir.join("pool.json").exists());
}

#[test]
fn eval_without_checkpoint_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eod.csv");
    let code = run(&[
        "eval",
        "--profile",
        "desk",
        "--policy",
        "proposed",
        "--out",
        out.to_str().unwrap(),
        "--measurements",
        "5",
    ]);
    assert_eq!(code, 2);

    // A named-but-missing checkpoint directory is also a config error.
    let code = run(&[
        "eval",
        "--profile",
        "desk",
        "--policy",
        "proposed",
        "--checkpoint",
        dir.path().join("nope").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--measurements",
        "5",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn eval_mrt_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eod.csv");
    let code = run(&[
        "eval",
        "--profile",
        "desk",
        "--policy",
        "rr-mrt",
        "--out",
        out.to_str().unwrap(),
        "--seeds",
        "1,2",
        "--measurements",
        "10",
    ]);
    assert_eq!(code, 0);
    let results = read_results_csv(&out).unwrap();
    assert_eq!(results.len(), 2);
    assert!(results.iter().all(|r| r.policy == "RR w/ MRT"));
    assert!(results.iter().all(|r| r.per_slot_tops.len() == 22));
}

#[test]
fn sweep_without_checkpoint_covers_unlearned_policies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let code = run(&[
        "sweep",
        "--axis",
        "p",
        "--profile",
        "desk",
        "--grid",
        "-20,40",
        "--seeds",
        "1",
        "--measurements",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let results = read_results_csv(&out).unwrap();
    // 3 checkpoint-free policies x 2 grid points x 1 seed.
    assert_eq!(results.len(), 6);
}

#[test]
fn inspect_succeeds_for_both_profiles() {
    assert_eq!(run(&["inspect", "--profile", "full"]), 0);
    assert_eq!(run(&["inspect", "--profile", "desk"]), 0);
}

#[test]
fn unknown_flags_are_usage_errors() {
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["eval", "--policy"]), 2);
    assert_eq!(run(&["--help"]), 0);
}
