use axcomp_core::actionspace::ActionSpaceKind;
use axcomp_core::sim2d::{canonical, config_set, Env, EpisodeParams, TaskKind};
use axcomp_rl::evaluate::{mean_success, run_episodes};
use axcomp_rl::*;

fn tiny_spec(seed: u64) -> TrainSpec {
    let mut spec = TrainSpec::new(
        TaskKind::BlockFit,
        ActionSpaceKind::ExpSingle,
        80,
        config_set(TaskKind::BlockFit, "train").unwrap(),
        seed,
    );
    spec.ppo.hidden = vec![16];
    spec.ppo.rollout_len = 48;
    spec.ppo.minibatches = 4;
    spec.ppo.epochs = 2;
    spec.workers = 4;
    spec.total_env_steps = 240;
    spec.log_every = 80;
    spec
}

fn run(spec: &TrainSpec, resume: Option<Checkpoint>) -> (TrainOutcome, Vec<u8>) {
    let mut csv = Vec::new();
    let out = {
        let mut w = MetricsWriter::new(&mut csv).unwrap();
        train(spec, resume, &mut |e| match e {
            TrainEvent::Metrics(rows) => w.write(rows),
            TrainEvent::Checkpoint { .. } => Ok(()),
        })
        .unwrap()
    };
    (out, csv)
}

#[test]
fn same_seed_same_metrics_and_weights() {
    let (a, csv_a) = run(&tiny_spec(5), None);
    let (b, csv_b) = run(&tiny_spec(5), None);
    assert_eq!(csv_a, csv_b);
    assert_eq!(a.checkpoint.to_bytes(), b.checkpoint.to_bytes());
    let (c, _) = run(&tiny_spec(6), None);
    assert_ne!(a.checkpoint.net, c.checkpoint.net);
    assert!(a.checkpoint.state.env_steps >= 240);
    assert!(!csv_a.is_empty() && a.diverged.is_none());
}

#[test]
fn resuming_continues_the_step_count() {
    let mut spec = tiny_spec(2);
    spec.total_env_steps = 120;
    let (first, _) = run(&spec, None);
    spec.total_env_steps = 240;
    let (second, _) = run(&spec, Some(first.checkpoint.clone()));
    assert!(second.checkpoint.state.updates > first.checkpoint.state.updates);
    assert!(second.checkpoint.state.env_steps >= 240);
    assert!(second.metrics.iter().all(|r| r.step > first.checkpoint.state.env_steps));

    let mut other = spec.clone();
    other.action_space = ActionSpaceKind::OneCtrlr;
    let mut sink = |_: TrainEvent<'_>| Ok(());
    assert!(train(&other, Some(first.checkpoint), &mut sink).is_err());
}

#[test]
fn workers_visit_configs_round_robin() {
    let configs = config_set(TaskKind::BlockFit, "train").unwrap();
    let net_arch = |v: &VecEnv| Architecture { obs_dim: v.obs_dim(), hidden: vec![4], head: v.adapter().head() };
    let mut v =
        VecEnv::new(configs.clone(), EpisodeParams::for_period(80), ActionSpaceKind::OneCtrlr, 3, 1, 1).unwrap();
    let net = ActorCritic::zeros(net_arch(&v));
    let r = v.collect(&net, 3 * 15 * 6, 0.99, 0.95).unwrap();
    let seen: std::collections::BTreeSet<usize> = r.episodes.iter().map(|e| e.config_id).collect();
    assert_eq!(seen.len(), configs.len());
    assert_eq!(r.batch.len(), 3 * 15 * 6);
    assert_eq!(r.env_steps, 3 * 15 * 6);
}

#[test]
fn expanded_rollouts_take_three_decisions_per_step() {
    let configs = vec![canonical(TaskKind::BlockFit)];
    let mut v = VecEnv::new(configs, EpisodeParams::for_period(80), ActionSpaceKind::ExpMulti, 2, 3, 1).unwrap();
    let net = ActorCritic::zeros(Architecture { obs_dim: v.obs_dim(), hidden: vec![4], head: v.adapter().head() });
    let r = v.collect(&net, 60, 0.99, 0.95).unwrap();
    assert_eq!(r.batch.len(), 60);
    assert_eq!(r.env_steps, 20);
    assert!(r.batch.masks.iter().all(Option::is_some));
}

#[test]
fn evaluation_has_one_row_per_config_and_is_deterministic() {
    let configs = config_set(TaskKind::BlockFit, "test_small").unwrap();
    let ep = EpisodeParams::for_period(80);
    let env = Env::new(configs[0].clone(), ep);
    let ad = ActionAdapter::new(ActionSpaceKind::Priority, env.catalog(), 1).unwrap();
    let net = ActorCritic::new(
        Architecture { obs_dim: ad.obs_dim(env.obs_dim()), hidden: vec![8], head: ad.head() },
        &mut stream(1, 1),
    );
    let a = evaluate_net(&net, &ad, &configs, ep, 3, 11).unwrap();
    assert_eq!(a.len(), configs.len());
    assert_eq!(a, evaluate_net(&net, &ad, &configs, ep, 3, 11).unwrap());
    assert!(a.iter().all(|r| r.episodes == 3));
}

#[test]
fn scripted_policy_is_reliable_on_fresh_start_poses() {
    // Fit never fails; Push occasionally loses the target during the lift.
    for (task, floor) in [(TaskKind::BlockFit, 1.0), (TaskKind::BlockPush, 0.9)] {
        let rows =
            evaluate(|_| ScriptedPolicy(task), &[canonical(task)], EpisodeParams::for_period(10), 60, 4).unwrap();
        assert!(rows[0].success_rate >= floor, "{task:?} {}", rows[0].success_rate);
    }
}

/// A uniformly random policy is a floor well below the scripted sequences.
/// The catalog makes some random triples finish the task in one selection,
/// so the floor is not zero.
#[test]
fn random_policy_is_a_low_floor() {
    let config = canonical(TaskKind::BlockFit);
    let ep = EpisodeParams::for_period(80);
    let env = Env::new(config.clone(), ep);
    let ad = ActionAdapter::new(ActionSpaceKind::ExpSingle, env.catalog(), 1).unwrap();
    let net = ActorCritic::zeros(Architecture { obs_dim: ad.obs_dim(env.obs_dim()), hidden: vec![4], head: ad.head() });
    let mut policy = NetPolicy::new(&net, &ad, false, stream(9, 1));
    let records = run_episodes(&mut policy, &config, ep, 100, &mut stream(9, 2), 0).unwrap();
    let rate = records.iter().filter(|r| r.success).count() as f64 / 100.0;
    assert!(rate < 0.6, "random success {rate}");
    let scripted = evaluate(|_| ScriptedPolicy(TaskKind::BlockFit), &[config], ep, 100, 9).unwrap();
    assert!(mean_success(&scripted) - rate > 0.4);
}
