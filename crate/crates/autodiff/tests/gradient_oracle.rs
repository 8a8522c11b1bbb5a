//! Finite-difference oracles for the tape engine: every differentiable
//! op kind, full reverse-mode networks, and the forward-over-reverse
//! composition used by residual losses.

use autodiff::nn::{mlp_forward_tape, Activation, MlpArch};
use autodiff::params::xavier_normal_init;
use autodiff::rng::DeterministicRng;
use autodiff::tape::{NodeId, Tape, TapeBinding};

const FD_H: f64 = 1e-5;

/// Central finite difference of the recorded graph via leaf perturbation
/// and replay; independent of the adjoint code path.
fn finite_diff(tape: &mut Tape, output: NodeId, leaf: NodeId) -> f64 {
    let orig = tape.value(leaf);
    tape.set_leaf(leaf, orig + FD_H);
    tape.replay();
    let fp = tape.value(output);
    tape.set_leaf(leaf, orig - FD_H);
    tape.replay();
    let fm = tape.value(output);
    tape.set_leaf(leaf, orig);
    tape.replay();
    (fp - fm) / (2.0 * FD_H)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn every_op_kind_matches_finite_differences() {
    let mut rng = DeterministicRng::from_seed(2024);
    for trial in 0..50 {
        let mut tape = Tape::new();
        // Generic operands in [-2, 2]; domain-restricted ops get their
        // own safe ranges below.
        let x = tape.leaf(rng.uniform(-2.0, 2.0));
        let y = tape.leaf(rng.uniform(-2.0, 2.0));
        let denom = tape.leaf(rng.uniform(0.5, 2.5));
        let pos = tape.leaf(rng.uniform(0.1, 2.2));

        let results = {
            let add = tape.add(x, y);
            let sub = tape.sub(x, y);
            let mul = tape.mul(x, y);
            let div = tape.div(x, denom);
            let neg = tape.neg(x);
            let tanh = tape.tanh(x);
            let exp = tape.exp(x);
            let ln = tape.ln(pos);
            let sin = tape.sin(x);
            let cos = tape.cos(x);
            let sqrt = tape.sqrt(pos);
            let square = tape.square(x);
            let min = tape.min(x, y);
            let max = tape.max(x, y);
            let dot = tape.dot(&[(x, y), (x, x), (denom, pos)]);
            vec![
                ("add", add),
                ("sub", sub),
                ("mul", mul),
                ("div", div),
                ("neg", neg),
                ("tanh", tanh),
                ("exp", exp),
                ("ln", ln),
                ("sin", sin),
                ("cos", cos),
                ("sqrt", sqrt),
                ("square", square),
                ("min", min),
                ("max", max),
                ("dot", dot),
            ]
        };

        for (name, out) in results {
            let grads = tape.backward(out).unwrap();
            for leaf in [x, y, denom, pos] {
                // Skip leaves at a min/max tie: the subgradient is
                // one-sided there.
                if (name == "min" || name == "max")
                    && (tape.value(x) - tape.value(y)).abs() < 10.0 * FD_H
                {
                    continue;
                }
                let fd = finite_diff(&mut tape, out, leaf);
                let ad = grads.get(leaf);
                assert!(
                    rel_err(fd, ad) < 1e-4 || (fd.abs() < 1e-7 && ad.abs() < 1e-7),
                    "trial {trial} op {name}: ad {ad} vs fd {fd}"
                );
            }
        }
    }
}

#[test]
fn two_layer_tanh_network_gradient_oracle() {
    for seed in 0..5u64 {
        let arch = MlpArch::new(&[2, 6, 1], Activation::Tanh, Activation::Linear);
        let mut params = xavier_normal_init(&arch.param_shapes("net"), seed);
        let mut rng = DeterministicRng::from_seed(seed + 100);
        for b in params.blocks_mut() {
            if b.name.contains(".b") {
                for v in b.values.iter_mut() {
                    *v = rng.uniform(-0.5, 0.5);
                }
            }
        }

        let mut tape = Tape::new();
        let binding = TapeBinding::bind(&mut tape, &params);
        let inputs: Vec<NodeId> = (0..2).map(|_| tape.leaf(rng.uniform(-2.0, 2.0))).collect();
        let out = mlp_forward_tape(&mut tape, &binding, 0, &arch, &inputs);
        let loss = tape.square(out[0]);
        let grads = tape.backward(loss).unwrap();
        let grad = binding.gradient(&grads, &params);

        let mut max_rel = 0.0_f64;
        for (bi, block) in grad.blocks().iter().enumerate() {
            for (i, g) in block.values.iter().enumerate() {
                let fd = finite_diff(&mut tape, loss, binding.node(bi, i));
                if fd.abs().max(g.abs()) > 1e-7 {
                    max_rel = max_rel.max(rel_err(fd, *g));
                }
            }
        }
        assert!(max_rel < 1e-4, "seed {seed}: max relative error {max_rel}");
    }
}

#[test]
fn input_derivative_matches_finite_differences_on_network() {
    // 5-input network like the dynamics surrogates; derivative of each
    // output with respect to the first input.
    for seed in 0..3u64 {
        let arch = MlpArch::new(&[5, 16, 16, 3], Activation::Tanh, Activation::Linear);
        let params = xavier_normal_init(&arch.param_shapes("net"), seed);
        let mut rng = DeterministicRng::from_seed(seed + 7);

        let mut tape = Tape::new();
        let binding = TapeBinding::bind(&mut tape, &params);
        let inputs: Vec<NodeId> = (0..5).map(|_| tape.leaf(rng.uniform(-1.0, 1.0))).collect();
        let outputs = mlp_forward_tape(&mut tape, &binding, 0, &arch, &inputs);
        let tangents = tape.input_derivative(&outputs, inputs[0]).unwrap();

        for (o, t) in outputs.iter().zip(&tangents) {
            let fd = finite_diff(&mut tape, *o, inputs[0]);
            let ad = tape.value(*t);
            assert!(
                rel_err(fd, ad) < 1e-4 || (fd.abs() < 1e-7 && ad.abs() < 1e-7),
                "seed {seed}: tangent {ad} vs fd {fd}"
            );
        }
    }
}

#[test]
fn forward_over_reverse_second_order_check() {
    // d/dw of (d f / d tau) computed as backward(input_derivative(f))
    // must match nested finite differences.
    let arch = MlpArch::new(&[1, 8, 1], Activation::Tanh, Activation::Linear);
    let params = xavier_normal_init(&arch.param_shapes("net"), 13);
    let tau0 = 0.37;

    let mut tape = Tape::new();
    let binding = TapeBinding::bind(&mut tape, &params);
    let tau = tape.leaf(tau0);
    let out = mlp_forward_tape(&mut tape, &binding, 0, &arch, &[tau]);
    let tangent = tape.input_derivative(&out, tau).unwrap()[0];
    let grads = tape.backward(tangent).unwrap();
    let grad = binding.gradient(&grads, &params);

    // Oracle: FD over each weight of the FD-over-tau derivative, using
    // the plain f64 forward path.
    let f = |p: &autodiff::ParamVector, t: f64| -> f64 {
        autodiff::nn::mlp_forward(p, 0, &arch, &[t])[0]
    };
    let dtau = |p: &autodiff::ParamVector| -> f64 {
        let h = 1e-5;
        (f(p, tau0 + h) - f(p, tau0 - h)) / (2.0 * h)
    };

    let flat = params.to_flat();
    let gflat = grad.to_flat();
    let mut scratch = params.clone();
    let h = 1e-5;
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += h;
        scratch.copy_from_flat(&plus);
        let fp = dtau(&scratch);
        let mut minus = flat.clone();
        minus[i] -= h;
        scratch.copy_from_flat(&minus);
        let fm = dtau(&scratch);
        let fd = (fp - fm) / (2.0 * h);
        let ad = gflat[i];
        assert!(
            (fd - ad).abs() / fd.abs().max(ad.abs()).max(1e-3) < 1e-3,
            "param {i}: second-order ad {ad} vs fd {fd}"
        );
    }
}
