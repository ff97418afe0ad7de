use super::*;
use crate::agent::OuParams;

const D: usize = 5;

fn transition(episode: u64, step: u64, rng: &mut ChaCha8Rng, termination: Termination) -> Transition {
    let state: Vec<f64> = (0..D).map(|_| rng.random_range(-1.0..1.0)).collect();
    let next_state: Vec<f64> = (0..D).map(|_| rng.random_range(-1.0..1.0)).collect();
    Transition {
        state,
        action: [rng.random_range(-1.0..1.0), rng.random(), rng.random()],
        reward: rng.random_range(-1.0..1.0),
        next_state,
        termination,
        episode,
        step,
    }
}

/// Three episodes of 30 steps; the middle one ends early.
fn filled(config: AgentConfig, seed: u64) -> Agent {
    let mut agent = Agent::new(config, D, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for ep in 0..3u64 {
        for step in 0..30u64 {
            let term = match (ep, step) {
                (1, 29) => Termination::OutOfTrack,
                (_, 29) => Termination::MaxSteps,
                _ => Termination::None,
            };
            agent.remember(transition(ep, step, &mut rng, term)).unwrap();
        }
    }
    agent
}

fn bits<P: Parameterized>(p: &P) -> Vec<u64> {
    p.tensors().iter().flat_map(|t| t.iter().map(|v| v.to_bits())).collect()
}

/// Target critic that ignores its input and returns `q`.
fn constant_target(agent: &mut Agent, q: f64) {
    agent.target_critic.scale(0.0);
    let mut tensors = agent.target_critic.tensors_mut();
    tensors.last_mut().unwrap()[0] = q;
}

#[test]
fn zero_weight_actor_gives_centre_action() {
    let mut agent = Agent::new(AgentConfig::default(), D, 1).unwrap();
    agent.actor_mut().scale(0.0);
    let a = agent.act(&[0.3; D]).unwrap();
    assert_eq!(a.to_array(), [0.0, 0.5, 0.5]);
}

#[test]
fn act_is_deterministic_and_checks_shape() {
    let agent = Agent::new(AgentConfig::for_variant(Variant::Win4), D, 2).unwrap();
    let window: Vec<f64> = (0..4 * D).map(|i| (i as f64 * 0.37).sin()).collect();
    assert_eq!(agent.act(&window).unwrap(), agent.act(&window).unwrap());
    assert!(matches!(agent.act(&window[..D]), Err(AgentError::Nn(NnError::Shape { .. }))));
}

#[test]
fn recurrent_actor_sees_only_latest_state() {
    let agent = Agent::new(AgentConfig::for_variant(Variant::Lstm4), D, 3).unwrap();
    let mut a: Vec<f64> = vec![0.1; 4 * D];
    let b = agent.act(&a).unwrap();
    a[0] = 9.0;
    assert_eq!(agent.act(&a).unwrap(), b);
    assert_eq!(agent.actor().input_dim(), D);
}

#[test]
fn zero_epsilon_exploration_is_identity() {
    let mut agent = Agent::new(AgentConfig::default(), D, 4).unwrap();
    agent.exploration_mut().set_epsilon_override(Some(0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let obs: Vec<f64> = (0..D).map(|_| rng.random_range(-3.0..3.0)).collect();
        let plain = agent.act(&obs).unwrap().to_array().map(f64::to_bits);
        let explored = agent.act_explore(&obs).unwrap().to_array().map(f64::to_bits);
        assert_eq!(plain, explored);
    }
}

fn both_pedals_fraction(config: ExplorationConfig, steps: usize) -> f64 {
    let mut agent = Agent::new(
        AgentConfig {
            exploration: config,
            ..AgentConfig::default()
        },
        D,
        6,
    )
    .unwrap();
    agent.actor_mut().scale(0.0);
    agent.exploration_mut().set_epsilon_override(Some(1.0));
    let obs = [0.0; D];
    let mut both = 0;
    for _ in 0..steps {
        let a = agent.act_explore(&obs).unwrap();
        if a.throttle > 0.5 && a.brake > 0.5 {
            both += 1;
        }
    }
    both as f64 / steps as f64
}

#[test]
fn brake_bursts_rarely_overlap_with_throttle() {
    let braking = both_pedals_fraction(ExplorationConfig::default(), 10_000);
    let symmetric = both_pedals_fraction(
        ExplorationConfig {
            burst_probability: 0.0,
            brake: OuParams::new(0.15, 0.2, 0.0),
            ..ExplorationConfig::default()
        },
        10_000,
    );
    assert!(braking < 0.05, "{braking}");
    assert!(symmetric > 0.20, "{symmetric}");
}

#[test]
fn two_step_target_by_hand() {
    let mut agent = Agent::new(
        AgentConfig {
            gamma: 0.5,
            ..AgentConfig::for_variant(Variant::Ms2)
        },
        D,
        7,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for step in 0..3 {
        let mut t = transition(0, step, &mut rng, Termination::None);
        t.reward = 1.0;
        agent.remember(t).unwrap();
    }
    constant_target(&mut agent, 4.0);
    assert_eq!(agent.target_for(0, 2).unwrap(), 2.5);
    // the newest transition truncates the horizon to one step
    assert_eq!(agent.target_for(2, 2).unwrap(), 1.0 + 0.5 * 4.0);
}

#[test]
fn termination_cases_through_the_buffer() {
    for (adopted, expect_cap) in [(true, 1.0 + 0.99 * 2.0), (false, 1.0)] {
        let mut agent = Agent::new(
            AgentConfig {
                adopted_target: adopted,
                ..AgentConfig::default()
            },
            D,
            8,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (ep, term) in [(0, Termination::MaxSteps), (1, Termination::OutOfTrack), (2, Termination::None)] {
            let mut t = transition(ep, 0, &mut rng, term);
            t.reward = if term == Termination::OutOfTrack { -1.0 } else { 1.0 };
            agent.remember(t).unwrap();
        }
        constant_target(&mut agent, 2.0);
        assert_eq!(agent.target_for(0, 1).unwrap(), expect_cap);
        assert_eq!(agent.target_for(1, 1).unwrap(), -1.0);
        assert_eq!(agent.target_for(2, 1).unwrap(), 1.0 + 0.99 * 2.0);
    }
}

#[test]
fn one_step_horizon_matches_across_families() {
    let win = filled(AgentConfig::for_variant(Variant::Win1), 11);
    let ms = filled(AgentConfig::for_variant(Variant::Ms3), 11);
    for seq in 0..90 {
        assert_eq!(win.target_for(seq, 1).unwrap().to_bits(), ms.target_for(seq, 1).unwrap().to_bits());
    }
}

fn action_grad_check(critic: &Critic, states: &[f64], actions: &[[f64; 3]]) {
    let cache = critic.forward(states, actions).unwrap();
    let mut scratch = critic.zeros_like();
    let g = critic.backward(&cache, 1.0, &mut scratch).unwrap();
    let h = 1e-6;
    for k in 0..actions.len() {
        for j in 0..3 {
            let mut up = actions.to_vec();
            up[k][j] += h;
            let mut down = actions.to_vec();
            down[k][j] -= h;
            let fd = (critic.q(states, &up).unwrap() - critic.q(states, &down).unwrap()) / (2.0 * h);
            let an = g.actions[k][j];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
            assert!(rel < 1e-4 || (fd - an).abs() < 1e-10, "step {k} dim {j}: {an} vs {fd}");
        }
    }
}

#[test]
fn critic_action_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ff = Critic::Ff(FfCritic::new(D, 7, 6, &mut rng).unwrap());
    let lstm = Critic::Lstm(LstmCritic::new(D, 4, 6, 5, &mut rng).unwrap());
    for critic in [ff, lstm] {
        let mut critic = critic;
        critic.scale(3.0);
        for _ in 0..5 {
            let w = critic.window();
            let states: Vec<f64> = (0..w * D).map(|_| rng.random_range(-1.0..1.0)).collect();
            let actions: Vec<[f64; 3]> = (0..w).map(|_| [rng.random_range(-1.0..1.0), rng.random(), rng.random()]).collect();
            action_grad_check(&critic, &states, &actions);
        }
    }
}

#[test]
fn lstm_eval_checks_variant_and_window() {
    let agent = Agent::new(AgentConfig::for_variant(Variant::Lstm4), D, 13).unwrap();
    assert!(agent.lstm_critic_eval(&[0.0; 4 * D], &[[0.0; 3]; 4]).is_ok());
    assert!(agent.lstm_critic_eval(&[0.0; 3 * D], &[[0.0; 3]; 3]).is_err());
    let ff = Agent::new(AgentConfig::default(), D, 13).unwrap();
    assert!(ff.lstm_critic_eval(&[0.0; D], &[[0.0; 3]]).is_err());
}

#[test]
fn zero_tau_freezes_targets() {
    let mut agent = filled(
        AgentConfig {
            tau: 0.0,
            ..AgentConfig::default()
        },
        14,
    );
    let (ta, tc) = (bits(agent.target_actor()), bits(agent.target_critic()));
    let before = bits(agent.critic());
    for _ in 0..100 {
        agent.train_step().unwrap().unwrap();
    }
    assert_ne!(bits(agent.critic()), before);
    assert_eq!(bits(agent.target_actor()), ta);
    assert_eq!(bits(agent.target_critic()), tc);
}

#[test]
fn not_ready_below_batch_size() {
    let mut agent = Agent::new(AgentConfig::default(), D, 15).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for step in 0..31 {
        agent.remember(transition(0, step, &mut rng, Termination::None)).unwrap();
        assert!(agent.train_step().unwrap().is_none());
    }
    agent.remember(transition(0, 31, &mut rng, Termination::None)).unwrap();
    assert!(agent.train_step().unwrap().is_some());
}

#[test]
fn train_step_is_bit_reproducible() {
    for variant in Variant::ALL {
        let config = AgentConfig::for_variant(variant);
        let mut a = filled(config.clone(), 21);
        let mut b = filled(config, 21);
        for _ in 0..3 {
            let sa = a.train_step().unwrap().unwrap();
            let sb = b.train_step().unwrap().unwrap();
            assert_eq!(sa.critic_loss.to_bits(), sb.critic_loss.to_bits(), "{variant}");
            assert_eq!(sa.td_errors, sb.td_errors);
        }
        assert_eq!(bits(a.actor()), bits(b.actor()), "{variant}");
        assert_eq!(bits(a.critic()), bits(b.critic()), "{variant}");
        assert_eq!(bits(a.target_critic()), bits(b.target_critic()), "{variant}");
    }
}

#[test]
fn self_consistent_transition_drives_loss_to_zero() {
    let mut agent = Agent::new(
        AgentConfig {
            gamma: 0.0,
            batch_size: 1,
            warmup: 1,
            ..AgentConfig::default()
        },
        D,
        16,
    )
    .unwrap();
    let s = vec![0.2, -0.1, 0.4, 0.0, 0.3];
    agent
        .remember(Transition {
            state: s.clone(),
            action: [0.1, 0.6, 0.2],
            reward: 0.0,
            next_state: s,
            termination: Termination::None,
            episode: 0,
            step: 0,
        })
        .unwrap();
    // push the output bias away from zero so the loss starts large
    agent.critic_mut().tensors_mut().last_mut().unwrap()[0] = 0.5;
    let first = agent.train_step().unwrap().unwrap().critic_loss;
    let mut last = first;
    for _ in 0..2000 {
        last = agent.train_step().unwrap().unwrap().critic_loss;
    }
    assert!(first > 0.2);
    assert!(last < 1e-8, "{last}");
}

#[test]
fn critic_regresses_known_values() {
    let mut agent = Agent::new(
        AgentConfig {
            gamma: 0.0,
            ..AgentConfig::default()
        },
        D,
        17,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for step in 0..200 {
        let mut t = transition(0, step, &mut rng, Termination::None);
        t.reward = t.state[0] - 0.5 * t.state[1] + t.action[0] * t.action[1];
        agent.remember(t).unwrap();
    }
    let losses: Vec<f64> = (0..500).map(|_| agent.train_step().unwrap().unwrap().critic_loss).collect();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let early = mean(&losses[..50]);
    let late = mean(&losses[450..]);
    assert!(late < 0.5 * early, "{early} -> {late}");
}

#[test]
fn prioritized_variant_feeds_back_priorities() {
    let mut agent = filled(AgentConfig::for_variant(Variant::Per40k), 18);
    let stats = agent.train_step().unwrap().unwrap();
    let per = agent.config().per;
    let changed = (0..90).filter(|&s| agent.buffer().priority(s).unwrap() != Some(1.0)).count();
    assert!(changed > 0);
    assert_eq!(stats.td_errors.len(), 32);
    assert!(stats.action_grad_norms.iter().all(|g| g.is_finite() && *g >= 0.0));
    let min = (0..90).filter_map(|s| agent.buffer().priority(s).unwrap()).fold(f64::INFINITY, f64::min);
    assert!(min >= per.epsilon);
}

#[test]
fn checkpoint_round_trip_keeps_policy() {
    let mut agent = filled(AgentConfig::for_variant(Variant::Lstm4), 19);
    for _ in 0..3 {
        agent.train_step().unwrap();
    }
    let bytes = agent.to_bytes();
    let back = Agent::from_bytes(&bytes, 0).unwrap();
    assert_eq!(bits(back.actor()), bits(agent.actor()));
    assert_eq!(bits(back.critic()), bits(agent.critic()));
    assert_eq!(bits(back.target_critic()), bits(agent.target_critic()));
    assert_eq!(back.updates(), 3);
    assert_eq!(back.config(), agent.config());
    assert!(Agent::from_bytes(&bytes[..bytes.len() - 1], 0).is_err());
}

#[test]
fn observation_window_pads_with_first_frame() {
    let mut w = ObservationWindow::new(3);
    w.reset(&[1.0, 2.0]);
    assert_eq!(w.flat(), vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
    w.push(&[3.0, 4.0]);
    assert_eq!(w.flat(), vec![1.0, 2.0, 1.0, 2.0, 3.0, 4.0]);
    w.push(&[5.0, 6.0]);
    w.push(&[7.0, 8.0]);
    assert_eq!(w.flat(), vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
    assert_eq!(w.latest(), Some(&[7.0, 8.0][..]));
}
