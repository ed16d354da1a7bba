use d2ac::engine::{Ablation, Agent, ReplayBuffer, TrainConfig, Trainer, Transition};
use d2ac::env::{make_env, EnvSpec, RewardKind};
use d2ac::nn::Tensor;
use d2ac::rng::{seeded, uniform};

const A: [f64; 2] = [1.0, 0.0];
const B: [f64; 2] = [0.0, 1.0];

/// `A → B` pays 0, `B → end` pays 1, whatever the action.
fn two_state_buffer() -> ReplayBuffer {
    let mut rng = seeded(3);
    let mut buf = ReplayBuffer::new(10_000).unwrap();
    for i in 0..2000 {
        let (state, next, reward, done) = if i % 2 == 0 { (A, B, 0.0, false) } else { (B, A, 1.0, true) };
        buf.append(Transition {
            state: state.to_vec(),
            action: vec![uniform(&mut rng, -1.0, 1.0)],
            reward,
            next_state: next.to_vec(),
            done,
            goal: None,
        });
    }
    buf
}

fn two_state_config(ablation: Ablation) -> (TrainConfig, EnvSpec) {
    let spec = EnvSpec { name: "two_state", obs_dim: 2, action_dim: 1, max_steps: 2, reward_kind: RewardKind::Dense, goal_dim: None };
    let cfg = TrainConfig { hidden_units: 32, batch_size: 32, v_min: -2.0, v_max: 2.0, atoms: 41, ablation, ..TrainConfig::for_env(&spec) };
    (cfg, spec)
}

#[test]
fn critics_learn_a_two_state_chain() {
    let buf = two_state_buffer();
    for ablation in [Ablation::Full, Ablation::NoCdq, Ablation::ScalarCdq, Ablation::ScalarSingle] {
        let (cfg, spec) = two_state_config(ablation);
        let mut agent = Agent::new(&cfg, &spec, &mut seeded(1)).unwrap();
        let mut rng = seeded(2);
        for _ in 0..5000 {
            agent.train_step(&buf, &mut rng).unwrap();
        }
        let states = Tensor::from_rows(&[A, A, B, B]).unwrap();
        let actions = Tensor::from_rows(&[[-0.5], [0.5], [-0.5], [0.5]]).unwrap();
        let truth = [cfg.gamma, cfg.gamma, 1.0, 1.0];
        for q in agent.critics().q_values(&states, &actions).unwrap() {
            for (got, want) in q.iter().zip(truth) {
                assert!((got - want).abs() <= 0.1 * want, "{}: {got} vs {want}", ablation.name());
            }
        }
    }
}

#[test]
fn relabeled_goal_episodes_fill_the_buffer_in_blocks() {
    let spec = make_env("point_mass_goal").unwrap().spec().clone();
    let cfg = TrainConfig { hidden_units: 16, batch_size: 16, workers: 1, initial_random_trajectories: 3, ..TrainConfig::for_env(&spec) };
    let mut t = Trainer::new(&cfg, "point_mass_goal").unwrap();
    while t.episodes_finished() < 3 {
        t.env_step().unwrap();
        assert_eq!(t.buffer().len() as u64 % (1 + cfg.her_k as u64), 0);
    }
    assert_eq!(t.buffer().len() as u64, t.env_steps() * (1 + cfg.her_k as u64));
    let relabeled = (0..t.buffer().len()).filter(|&i| t.buffer().get(i).reward == 0.0).count();
    assert!(relabeled > 0);
}

#[test]
fn identical_seeds_give_identical_agents() {
    let spec = make_env("predator_prey").unwrap().spec().clone();
    let cfg = TrainConfig { hidden_units: 16, batch_size: 16, workers: 2, initial_random_trajectories: 1, seed: 11, ..TrainConfig::for_env(&spec) };
    let run = || {
        let mut t = Trainer::new(&cfg, "predator_prey").unwrap();
        t.run_until(600).unwrap();
        (t.agent().parameter_values(), t.evaluate(4, 5).unwrap())
    };
    assert_eq!(run(), run());
}
