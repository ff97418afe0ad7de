//! Analytic gradients of the numeric core against central finite differences.

use racer_core::nn::{Activation, Init, LstmCell, LstmState, Mlp, Parameterized};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-6)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn mlp_loss(net: &Mlp, x: &[f64], g: &[f64]) -> f64 {
    net.predict(x).unwrap().iter().zip(g).map(|(y, g)| y * g).sum()
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let acts = [Activation::Relu, Activation::Tanh, Activation::Sigmoid, Activation::Linear];
    for trial in 0..10 {
        let depth = 1 + trial % 3;
        let mut sizes = vec![rng.random_range(1..6)];
        for _ in 0..depth {
            sizes.push(rng.random_range(1..6));
        }
        let layer_acts: Vec<Activation> = (0..depth).map(|l| acts[(trial + l) % acts.len()]).collect();
        let mut net = Mlp::new(&sizes, &layer_acts, Init::FanIn, &mut rng).unwrap();
        let x = random_vec(&mut rng, sizes[0]);
        let g = random_vec(&mut rng, *sizes.last().unwrap());
        let cache = net.forward(&x).unwrap();
        let (grads, grad_in) = net.backward(&cache, &g).unwrap();

        let analytic: Vec<f64> = grads.tensors().iter().flat_map(|t| t.to_vec()).collect();
        let mut k = 0;
        let n_tensors = net.tensors().len();
        for ti in 0..n_tensors {
            let len = net.tensors()[ti].len();
            for j in 0..len {
                let orig = net.tensors()[ti][j];
                net.tensors_mut()[ti][j] = orig + H;
                let up = mlp_loss(&net, &x, &g);
                net.tensors_mut()[ti][j] = orig - H;
                let down = mlp_loss(&net, &x, &g);
                net.tensors_mut()[ti][j] = orig;
                let fd = (up - down) / (2.0 * H);
                assert!(rel_err(fd, analytic[k]) < TOL, "trial {trial} tensor {ti}[{j}]: fd {fd} vs {}", analytic[k]);
                k += 1;
            }
        }
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += H;
            let mut xm = x.clone();
            xm[i] -= H;
            let fd = (mlp_loss(&net, &xp, &g) - mlp_loss(&net, &xm, &g)) / (2.0 * H);
            assert!(rel_err(fd, grad_in[i]) < TOL, "trial {trial} input {i}");
        }
    }
}

fn lstm_loss(cell: &LstmCell, xs: &[Vec<f64>], init: &LstmState, gs: &[Vec<f64>]) -> f64 {
    let (outs, _, _) = cell.forward_sequence(xs, init).unwrap();
    outs.iter().zip(gs).flat_map(|(h, g)| h.iter().zip(g)).map(|(h, g)| h * g).sum()
}

#[test]
fn lstm_unrolled_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..6 {
        let input_dim = rng.random_range(1..4);
        let hidden = rng.random_range(1..4);
        let steps = 4;
        let mut cell = LstmCell::new(input_dim, hidden, Init::Uniform(0.8), &mut rng);
        let xs: Vec<Vec<f64>> = (0..steps).map(|_| random_vec(&mut rng, input_dim)).collect();
        let init = LstmState {
            hidden: random_vec(&mut rng, hidden),
            cell: random_vec(&mut rng, hidden),
        };
        // alternate between loss on every step and on the final step only
        let gs: Vec<Vec<f64>> = (0..steps)
            .map(|t| if trial % 2 == 0 || t == steps - 1 { random_vec(&mut rng, hidden) } else { vec![0.0; hidden] })
            .collect();
        let (_, _, cache) = cell.forward_sequence(&xs, &init).unwrap();
        let mut grads = cell.zeros_like();
        let back = cell.backward_sequence(&cache, &gs, &mut grads).unwrap();

        for ti in 0..2 {
            let len = cell.tensors()[ti].len();
            for j in 0..len {
                let orig = cell.tensors()[ti][j];
                cell.tensors_mut()[ti][j] = orig + H;
                let up = lstm_loss(&cell, &xs, &init, &gs);
                cell.tensors_mut()[ti][j] = orig - H;
                let down = lstm_loss(&cell, &xs, &init, &gs);
                cell.tensors_mut()[ti][j] = orig;
                let fd = (up - down) / (2.0 * H);
                let an = grads.tensors()[ti][j];
                assert!(rel_err(fd, an) < TOL, "trial {trial} tensor {ti}[{j}]: fd {fd} vs {an}");
            }
        }
        for t in 0..steps {
            for i in 0..input_dim {
                let mut xp = xs.clone();
                xp[t][i] += H;
                let mut xm = xs.clone();
                xm[t][i] -= H;
                let fd = (lstm_loss(&cell, &xp, &init, &gs) - lstm_loss(&cell, &xm, &init, &gs)) / (2.0 * H);
                assert!(rel_err(fd, back.inputs[t][i]) < TOL, "trial {trial} input t={t} i={i}");
            }
        }
        for k in 0..hidden {
            let mut p = init.clone();
            p.hidden[k] += H;
            let mut m = init.clone();
            m.hidden[k] -= H;
            let fd = (lstm_loss(&cell, &xs, &p, &gs) - lstm_loss(&cell, &xs, &m, &gs)) / (2.0 * H);
            assert!(rel_err(fd, back.initial.hidden[k]) < TOL);
            let mut p = init.clone();
            p.cell[k] += H;
            let mut m = init.clone();
            m.cell[k] -= H;
            let fd = (lstm_loss(&cell, &xs, &p, &gs) - lstm_loss(&cell, &xs, &m, &gs)) / (2.0 * H);
            assert!(rel_err(fd, back.initial.cell[k]) < TOL);
        }
    }
}
