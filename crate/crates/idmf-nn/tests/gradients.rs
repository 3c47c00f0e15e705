//! End-to-end gradient verification: the hybrid loss differentiated through
//! the full network against central finite differences.

use idmf_core::trajectory::SequenceWindow;
use idmf_nn::gradcheck::grad_check;
use idmf_nn::net::{FollowerNet, NetConfig};
use idmf_nn::tape::Tape;
use idmf_nn::trainer::{hybrid_loss, Example};
use idmf_core::normalize::normalize_window;

fn synthetic_example(seed: u64, horizon: usize) -> Example {
    let dt = 0.1;
    let s = seed as f64;
    let clean = SequenceWindow {
        window_id: format!("w{seed}"),
        dt,
        leader_positions: (0..horizon)
            .map(|k| 30.0 + s + 10.0 * k as f64 * dt + (k as f64 * 0.31 + s).sin() * 0.5)
            .collect(),
        leader_velocities: (0..horizon)
            .map(|k| 10.0 + (k as f64 * 0.31 + s).cos() * 0.4)
            .collect(),
        follower_positions: (0..horizon)
            .map(|k| 12.0 + s + 9.5 * k as f64 * dt + (k as f64 * 0.17 + s).cos() * 0.3)
            .collect(),
        follower_initial_velocity: 9.5,
    };
    let mut noisy = clean.clone();
    for (k, p) in noisy.leader_positions.iter_mut().enumerate() {
        *p += ((k as f64 * 0.7 + s * 1.3).sin()) * 0.8 + 1.7;
    }
    for (k, p) in noisy.follower_positions.iter_mut().enumerate() {
        *p += ((k as f64 * 0.9 + s * 0.7).cos()) * 0.8 + 1.7;
    }
    Example { noisy, clean }
}

/// Synthetic physics target: a smooth curve near the follower positions.
fn model_target(ex: &Example) -> Vec<f64> {
    ex.noisy
        .follower_positions
        .iter()
        .enumerate()
        .map(|(k, p)| p + 0.4 * (k as f64 * 0.23).sin() - 0.8)
        .collect()
}

/// Batch hybrid loss as a plain function of the flat parameter vector.
fn batch_loss(template: &FollowerNet, examples: &[Example], targets: &[Vec<f64>], mu: f64, flat: &[f64]) -> f64 {
    let mut net = template.clone();
    net.set_params_flat(flat);
    let mut total = 0.0;
    for (ex, target) in examples.iter().zip(targets) {
        let mut tape = Tape::new();
        let (normed, norm) = normalize_window(&ex.noisy);
        let staged = net.stage(&mut tape);
        let pred_norm = staged.forward(&mut tape, &normed.leader_positions, &normed.leader_velocities);
        let scaled = tape.scale(pred_norm, norm.position_scale);
        let pred_m = tape.add_scalar(scaled, norm.position_offset);
        let loss = hybrid_loss(&mut tape, pred_m, &ex.noisy.follower_positions, Some(target), mu);
        total += tape.scalar(loss);
    }
    total / examples.len() as f64
}

/// Analytic batch gradient via the tape.
fn batch_grad(template: &FollowerNet, examples: &[Example], targets: &[Vec<f64>], mu: f64) -> Vec<f64> {
    let mut grad = vec![0.0; template.param_count()];
    let inv = 1.0 / examples.len() as f64;
    for (ex, target) in examples.iter().zip(targets) {
        let mut tape = Tape::new();
        let (normed, norm) = normalize_window(&ex.noisy);
        let staged = template.stage(&mut tape);
        let pred_norm = staged.forward(&mut tape, &normed.leader_positions, &normed.leader_velocities);
        let scaled = tape.scale(pred_norm, norm.position_scale);
        let pred_m = tape.add_scalar(scaled, norm.position_offset);
        let loss = hybrid_loss(&mut tape, pred_m, &ex.noisy.follower_positions, Some(target), mu);
        let grads = tape.backward(loss);
        let mut pos = 0;
        for leaf in &staged.param_leaves {
            for g in grads.get(*leaf) {
                grad[pos] += g * inv;
                pos += 1;
            }
        }
    }
    grad
}

#[test]
fn hybrid_loss_gradients_match_finite_differences() {
    let config = NetConfig {
        hidden: 8,
        layers: 2,
        horizon: 10,
    };
    let net = FollowerNet::init(config, 42).unwrap();
    let examples = vec![synthetic_example(1, 10), synthetic_example(2, 10)];
    let targets: Vec<Vec<f64>> = examples.iter().map(model_target).collect();
    let flat = net.params_flat();

    // Step size balances truncation against round-off: the loss is O(10) m,
    // so 1e-5 steps leave cancellation noise above the smallest gradients
    // while 1e-4 keeps both error sources near 1e-5 relative.
    for mu in [0.0, 0.5, 1.0] {
        let analytic = batch_grad(&net, &examples, &targets, mu);
        let report = grad_check(
            |x| batch_loss(&net, &examples, &targets, mu, x),
            &analytic,
            &flat,
            1e-4,
            1e-4,
        );
        assert!(
            report.passed(),
            "mu={mu}: max rel error {} at parameter {} of {}",
            report.max_rel_error,
            report.worst_index,
            report.checked
        );
    }
}

#[test]
fn mu_one_gradient_has_no_model_component() {
    // At mu = 1 the model term carries coefficient zero: gradients with and
    // without a physics target are identical.
    let config = NetConfig {
        hidden: 6,
        layers: 2,
        horizon: 8,
    };
    let net = FollowerNet::init(config, 9).unwrap();
    let ex = synthetic_example(3, 8);
    let with_target = {
        let targets = vec![model_target(&ex)];
        batch_grad(&net, std::slice::from_ref(&ex), &targets, 1.0)
    };
    let without_target: Vec<f64> = {
        let mut tape = Tape::new();
        let (normed, norm) = normalize_window(&ex.noisy);
        let staged = net.stage(&mut tape);
        let pred_norm = staged.forward(&mut tape, &normed.leader_positions, &normed.leader_velocities);
        let scaled = tape.scale(pred_norm, norm.position_scale);
        let pred_m = tape.add_scalar(scaled, norm.position_offset);
        let loss = hybrid_loss(&mut tape, pred_m, &ex.noisy.follower_positions, None, 1.0);
        let grads = tape.backward(loss);
        staged
            .param_leaves
            .iter()
            .flat_map(|l| grads.get(*l).to_vec())
            .collect()
    };
    assert_eq!(with_target, without_target);
}
