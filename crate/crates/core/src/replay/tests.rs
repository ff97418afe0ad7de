use super::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tr(episode: u64, step: u64, reward: f64, termination: Termination) -> Transition {
    Transition {
        state: vec![episode as f64, step as f64],
        action: [step as f64 * 0.1, 0.5, 0.0],
        reward,
        next_state: vec![episode as f64, step as f64 + 1.0],
        termination,
        episode,
        step,
    }
}

fn episode_into(buf: &mut ReplayBuffer, episode: u64, rewards: &[f64], last: Termination) {
    for (k, r) in rewards.iter().enumerate() {
        let term = if k + 1 == rewards.len() { last } else { Termination::None };
        buf.push(tr(episode, k as u64, *r, term)).unwrap();
    }
}

#[test]
fn push_grows_then_evicts() {
    let mut b = ReplayBuffer::uniform(3).unwrap();
    assert!(b.is_empty());
    b.push(tr(0, 0, 0.0, Termination::None)).unwrap();
    assert_eq!(b.len(), 1);
    for s in 1..4 {
        b.push(tr(0, s, 0.0, Termination::None)).unwrap();
    }
    assert_eq!(b.len(), 3);
    assert!(b.get(0).is_err());
    assert_eq!(b.get(1).unwrap().step, 1);
    assert_eq!(b.oldest(), 1);
}

#[test]
fn push_rejects_gaps_and_post_terminal_steps() {
    let mut b = ReplayBuffer::uniform(10).unwrap();
    b.push(tr(0, 0, 0.0, Termination::None)).unwrap();
    assert!(matches!(
        b.push(tr(0, 2, 0.0, Termination::None)),
        Err(ReplayError::NonContiguous { expected: 1, got: 2, .. })
    ));
    b.push(tr(0, 1, 0.0, Termination::OutOfTrack)).unwrap();
    assert!(matches!(b.push(tr(0, 2, 0.0, Termination::None)), Err(ReplayError::AfterTerminal { .. })));
    b.push(tr(1, 0, 0.0, Termination::None)).unwrap();
    let mut wide = tr(1, 1, 0.0, Termination::None);
    wide.state.push(0.0);
    assert!(matches!(b.push(wide), Err(ReplayError::Width { .. })));
}

#[test]
fn single_item_sampled_repeatedly() {
    let mut b = ReplayBuffer::uniform(8).unwrap();
    b.push(tr(0, 0, 1.0, Termination::None)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert_eq!(b.sample_uniform(4, &mut rng).unwrap(), vec![0; 4]);
}

#[test]
fn empty_buffer_is_not_ready() {
    let b = ReplayBuffer::uniform(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(matches!(b.sample_uniform(4, &mut rng), Err(ReplayError::NotReady { .. })));
    let p = ReplayBuffer::prioritized(8, PerConfig::default()).unwrap();
    assert!(p.sample_prioritized(4, &mut rng).is_err());
}

#[test]
fn uniform_frequencies() {
    let mut b = ReplayBuffer::uniform(10).unwrap();
    episode_into(&mut b, 0, &[0.0; 10], Termination::None);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [0usize; 10];
    let draws = 100_000;
    for i in b.sample_uniform(draws, &mut rng).unwrap() {
        counts[i as usize] += 1;
    }
    for c in counts {
        let f = c as f64 / draws as f64;
        assert!((f - 0.1).abs() < 0.02, "{f}");
    }
}

#[test]
fn uniform_sampling_is_seeded() {
    let mut b = ReplayBuffer::uniform(50).unwrap();
    episode_into(&mut b, 0, &[0.0; 50], Termination::None);
    let a = b.sample_uniform(32, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let c = b.sample_uniform(32, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(a, c);
}

/// Buffer whose raw priorities equal `ps` exactly (δ = √(p − ε), no gradient term).
fn with_priorities(ps: &[f64], alpha: f64) -> ReplayBuffer {
    let cfg = PerConfig {
        alpha,
        lambda3: 0.0,
        epsilon: 1e-3,
        is_beta: None,
    };
    let mut b = ReplayBuffer::prioritized(ps.len(), cfg).unwrap();
    episode_into(&mut b, 0, &vec![0.0; ps.len()], Termination::None);
    for (i, p) in ps.iter().enumerate() {
        let got = b.update_priority(i as u64, (p - cfg.epsilon).sqrt(), 0.0).unwrap();
        assert!((got - p).abs() < 1e-12);
    }
    b
}

fn empirical(b: &ReplayBuffer, draws: usize, batch: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; b.len()];
    for _ in 0..draws / batch {
        for i in b.sample_prioritized(batch, &mut rng).unwrap().indices {
            counts[i as usize] += 1;
        }
    }
    counts.iter().map(|c| *c as f64 / draws as f64).collect()
}

#[test]
fn prioritized_matches_closed_form() {
    let b = with_priorities(&[1.0, 3.0], 1.0);
    assert!((b.probability(0).unwrap() - 0.25).abs() < 1e-12);
    assert!((b.probability(1).unwrap() - 0.75).abs() < 1e-12);
    let f = empirical(&b, 100_000, 1, 11);
    assert!((f[0] - 0.25).abs() < 0.01, "{f:?}");
    assert!((f[1] - 0.75).abs() < 0.01, "{f:?}");
}

#[test]
fn equal_priorities_and_zero_alpha_are_uniform() {
    for (ps, alpha) in [(vec![2.0; 8], 0.7), (vec![0.1, 5.0, 1.0, 9.0, 0.5, 2.0, 3.0, 7.0], 0.0)] {
        let b = with_priorities(&ps, alpha);
        for i in 0..8 {
            assert!((b.probability(i).unwrap() - 0.125).abs() < 1e-12);
        }
        for f in empirical(&b, 80_000, 8, 5) {
            assert!((f - 0.125).abs() < 0.01);
        }
    }
}

#[test]
fn priority_formula() {
    let cfg = PerConfig::default();
    assert!((cfg.priority(2.0, 5.0) - 4.501).abs() < 1e-12);
    assert_eq!(cfg.priority(0.0, 0.0), cfg.epsilon);
    let mut b = ReplayBuffer::prioritized(4, cfg).unwrap();
    episode_into(&mut b, 0, &[0.0; 4], Termination::None);
    assert_eq!(b.update_priority(2, 2.0, 5.0), Some(4.501));
    assert_eq!(b.priority(2).unwrap(), Some(4.501));
    let tree = b.tree().unwrap();
    let sum: f64 = tree.leaves().iter().sum();
    assert!((tree.total() - sum).abs() < 1e-9);
    assert!((tree.get(2) - 4.501f64.powf(0.7)).abs() < 1e-12);
}

#[test]
fn stale_updates_are_skipped() {
    let mut b = ReplayBuffer::prioritized(2, PerConfig::default()).unwrap();
    episode_into(&mut b, 0, &[0.0; 3], Termination::None);
    assert_eq!(b.update_priority(0, 1.0, 0.0), None);
    assert_eq!(b.stats().stale_updates, 1);
}

#[test]
fn new_transitions_get_sampled_before_their_first_update() {
    use rand::Rng;
    let cfg = PerConfig::default();
    let mut b = ReplayBuffer::prioritized(128, cfg).unwrap();
    episode_into(&mut b, 0, &[0.0; 99], Termination::None);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..99 {
        let td: f64 = rng.random_range(0.0..1.5);
        b.update_priority(i, td, rng.random_range(0.0..2.0));
    }
    let fresh = b.push(tr(0, 99, 0.0, Termination::None)).unwrap();
    let p_fresh = b.probability(fresh).unwrap();
    for i in 0..99 {
        assert!(p_fresh >= b.probability(i).unwrap());
    }
    // one pass over the buffer: ceil(len / N) minibatches of N = 32
    let batches_per_pass = b.len().div_ceil(32);
    let trials = 2000;
    let mut hits = 0usize;
    for _ in 0..trials {
        for _ in 0..batches_per_pass {
            hits += b.sample_prioritized(32, &mut rng).unwrap().indices.iter().filter(|i| **i == fresh).count();
        }
    }
    let mean = hits as f64 / trials as f64;
    let expected = (32 * batches_per_pass) as f64 * p_fresh;
    assert!(expected >= 1.0, "{expected}");
    assert!(mean >= 1.0, "{mean}");
    assert!((mean - expected).abs() < 0.1 * expected, "{mean} vs {expected}");
}

#[test]
fn importance_weights_optional() {
    let mut b = with_priorities(&[1.0, 3.0], 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    assert!(b.sample_prioritized(8, &mut rng).unwrap().weights.iter().all(|w| *w == 1.0));
    if let Some((cfg, _)) = &mut b.per {
        cfg.is_beta = Some(1.0);
    }
    let s = b.sample_prioritized(64, &mut rng).unwrap();
    for (i, w) in s.indices.iter().zip(&s.weights) {
        let want = if *i == 0 { 1.0 } else { 1.0 / 3.0 };
        assert!((w - want).abs() < 1e-12);
    }
}

#[test]
fn window_of_one_is_own_state() {
    let mut b = ReplayBuffer::uniform(16).unwrap();
    episode_into(&mut b, 0, &[0.0; 5], Termination::None);
    assert_eq!(b.assemble_window(3, 1).unwrap(), b.get(3).unwrap().state);
}

#[test]
fn window_pads_with_first_state() {
    let mut b = ReplayBuffer::uniform(16).unwrap();
    episode_into(&mut b, 0, &[0.0; 3], Termination::OutOfTrack);
    episode_into(&mut b, 1, &[0.0; 5], Termination::None);
    // episode 1 step 2 sits at seq 5
    assert_eq!(b.window_indices(5, 4).unwrap(), vec![3, 3, 4, 5]);
    let w = b.assemble_window(5, 4).unwrap();
    assert_eq!(w, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
}

#[test]
fn mid_episode_window_matches_log() {
    let mut b = ReplayBuffer::uniform(64).unwrap();
    let mut log = Vec::new();
    for s in 0..20 {
        let t = tr(4, s, s as f64, Termination::None);
        log.push(t.clone());
        b.push(t).unwrap();
    }
    for i in 3..20u64 {
        let w = b.assemble_window(i, 4).unwrap();
        let expect: Vec<f64> = log[(i - 3) as usize..=i as usize].iter().flat_map(|t| t.state.clone()).collect();
        assert_eq!(w, expect);
        let next = b.assemble_next_window(i, 4).unwrap();
        let mut expect_next: Vec<f64> = log[(i - 2) as usize..=i as usize].iter().flat_map(|t| t.state.clone()).collect();
        expect_next.extend(log[i as usize].next_state.clone());
        assert_eq!(next, expect_next);
        let acts = b.assemble_action_window(i, 4).unwrap();
        assert_eq!(acts[3], log[i as usize].action);
        assert_eq!(b.assemble_next_action_prefix(i, 4).unwrap(), acts[1..].to_vec());
    }
}

#[test]
fn window_pads_after_eviction() {
    let mut b = ReplayBuffer::uniform(4).unwrap();
    episode_into(&mut b, 0, &[0.0; 10], Termination::None);
    // seqs 6..=9 remain
    assert_eq!(b.window_indices(7, 4).unwrap(), vec![6, 6, 6, 7]);
}

#[test]
fn nstep_cases() {
    let mut b = ReplayBuffer::uniform(32).unwrap();
    episode_into(&mut b, 0, &[1.0, 1.0, 1.0, 1.0, 1.0], Termination::None);
    let one = b.assemble_nstep(0, 1, 0.5).unwrap();
    assert_eq!((one.reward_sum, one.last, one.horizon, one.termination), (1.0, 0, 1, Termination::None));
    let two = b.assemble_nstep(0, 2, 0.5).unwrap();
    assert_eq!(two.reward_sum, 1.5);
    assert_eq!(two.last, 1);
    assert_eq!(b.get(two.last).unwrap().next_state, vec![0.0, 2.0]);

    let mut c = ReplayBuffer::uniform(32).unwrap();
    episode_into(&mut c, 0, &[2.0, 3.0], Termination::OutOfTrack);
    episode_into(&mut c, 1, &[5.0, 5.0, 5.0], Termination::None);
    let cut = c.assemble_nstep(0, 4, 0.9).unwrap();
    assert_eq!(cut.horizon, 2);
    assert!((cut.reward_sum - (2.0 + 0.9 * 3.0)).abs() < 1e-12);
    assert_eq!(cut.termination, Termination::OutOfTrack);

    // newest transition truncates without a terminal
    let tail = c.assemble_nstep(3, 4, 0.9).unwrap();
    assert_eq!(tail.horizon, 2);
    assert_eq!(tail.termination, Termination::None);
}

#[test]
fn snapshot_round_trip() {
    let mut b = ReplayBuffer::prioritized(5, PerConfig::default()).unwrap();
    episode_into(&mut b, 0, &[1.0, 2.0, 3.0], Termination::MaxSteps);
    episode_into(&mut b, 1, &[4.0, 5.0, 6.0, 7.0], Termination::None);
    b.update_priority(4, 1.5, 0.2);
    b.update_priority(0, 1.0, 0.0);
    let back = ReplayBuffer::from_bytes(&b.to_bytes()).unwrap();
    assert_eq!(back.len(), b.len());
    assert_eq!(back.next_seq(), b.next_seq());
    assert_eq!(back.stats(), b.stats());
    for s in b.oldest()..b.next_seq() {
        assert_eq!(back.get(s).unwrap(), b.get(s).unwrap());
        assert_eq!(back.priority(s).unwrap(), b.priority(s).unwrap());
        assert_eq!(back.probability(s).unwrap(), b.probability(s).unwrap());
    }
    let mut rng_a = ChaCha8Rng::seed_from_u64(9);
    let mut rng_b = ChaCha8Rng::seed_from_u64(9);
    assert_eq!(b.sample_prioritized(8, &mut rng_a).unwrap(), back.sample_prioritized(8, &mut rng_b).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("buf.bin");
    b.save(&path).unwrap();
    assert_eq!(ReplayBuffer::load(&path).unwrap().len(), b.len());
    let mut bytes = b.to_bytes();
    bytes.truncate(bytes.len() - 3);
    assert!(ReplayBuffer::from_bytes(&bytes).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sixteen_leaf_distribution(ps in proptest::collection::vec(0.01f64..10.0, 16), seed in 0u64..1000) {
        let b = with_priorities(&ps, 0.7);
        let weights: Vec<f64> = ps.iter().map(|p| p.powf(0.7)).collect();
        let total: f64 = weights.iter().sum();
        let f = empirical(&b, 100_000, 32, seed);
        for (got, w) in f.iter().zip(&weights) {
            prop_assert!((got - w / total).abs() < 0.01, "{} vs {}", got, w / total);
        }
    }
}

proptest! {
    #[test]
    fn tree_consistent_under_mixed_ops(
        ops in proptest::collection::vec((any::<bool>(), 0u64..200, -3.0f64..3.0, 0.0f64..4.0), 1..400)
    ) {
        let mut b = ReplayBuffer::prioritized(64, PerConfig::default()).unwrap();
        let mut step = 0;
        for (push, idx, td, g) in ops {
            if push || b.is_empty() {
                b.push(tr(0, step, 0.0, Termination::None)).unwrap();
                step += 1;
            } else {
                b.update_priority(idx, td, g);
            }
        }
        let tree = b.tree().unwrap();
        prop_assert!(tree.max_inconsistency() <= 1e-9);
        let sum: f64 = tree.leaves().iter().sum();
        prop_assert!((tree.total() - sum).abs() <= 1e-9);
    }

    #[test]
    fn windows_stay_in_episode(
        lengths in proptest::collection::vec(1usize..8, 1..10), w in 1usize..9, cap in 4usize..40
    ) {
        let mut b = ReplayBuffer::uniform(cap).unwrap();
        for (e, len) in lengths.iter().enumerate() {
            episode_into(&mut b, e as u64, &vec![0.0; *len], Termination::OutOfTrack);
        }
        for seq in b.oldest()..b.next_seq() {
            let ep = b.get(seq).unwrap().episode;
            let idx = b.window_indices(seq, w).unwrap();
            prop_assert_eq!(idx.len(), w);
            prop_assert_eq!(*idx.last().unwrap(), seq);
            for pair in idx.windows(2) {
                prop_assert!(pair[0] <= pair[1]);
            }
            for i in idx {
                prop_assert_eq!(b.get(i).unwrap().episode, ep);
            }
        }
    }

    #[test]
    fn one_step_return_is_the_transition(rewards in proptest::collection::vec(-5.0f64..5.0, 1..20), gamma in 0.0f64..1.0) {
        let mut b = ReplayBuffer::uniform(32).unwrap();
        episode_into(&mut b, 0, &rewards, Termination::Backwards);
        for seq in 0..rewards.len() as u64 {
            let t = b.get(seq).unwrap();
            let n = b.assemble_nstep(seq, 1, gamma).unwrap();
            prop_assert_eq!(n.reward_sum, t.reward);
            prop_assert_eq!(n.last, seq);
            prop_assert_eq!(n.horizon, 1);
            prop_assert_eq!(n.termination, t.termination);
        }
    }
}
