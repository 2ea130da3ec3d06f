//! Frozen-backbone behavior: freshly initialized models are pure frozen
//! stacks, gradients stop at the frozen boundary, and the full denoiser
//! backpropagates correctly into the motion blocks.

use latentmotion_model::{
    bent_identity, denoiser_forward, frozen_layer_forward, spatial_position_features,
    time_embedding, ModelError, ModelParams, TrainConfig,
};
use latentmotion_tensor::{finite_diff_check, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_cfg() -> TrainConfig {
    TrainConfig {
        frames: 4,
        channels: 2,
        height: 4,
        width: 4,
        inner_dim: 4,
        heads: 1,
        layers: 1,
        negative_threshold: 1,
        diffusion_steps: 10,
        num_conditions: 2,
        adapter_hidden: 6,
        embed_dim: 3,
        dataset_size: 2,
        ..TrainConfig::default()
    }
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::from_vec(data, shape).unwrap()
}

#[test]
fn bent_identity_pins_values_and_slope_bounds() {
    let x = Tensor::from_vec(vec![0.0, 1.0, -1.0, 3.0], &[4]).unwrap();
    let y = bent_identity(&x).unwrap().data();
    assert_eq!(y[0], 0.0);
    let f = |v: f64| v + 0.5 * ((v * v + 1.0).sqrt() - 1.0);
    assert!((y[1] - f(1.0)).abs() < 1e-15);
    assert!((y[2] - f(-1.0)).abs() < 1e-15);
    assert!((y[3] - f(3.0)).abs() < 1e-15);
    // Slope stays within (0.5, 1.5), so the map is strictly increasing.
    for v in [-10.0, -2.0, -0.5, 0.0, 0.5, 2.0, 10.0] {
        let eps = 1e-6;
        let slope = (f(v + eps) - f(v - eps)) / (2.0 * eps);
        assert!(slope > 0.5 && slope < 1.5, "slope {slope} at {v}");
    }
}

#[test]
fn time_embedding_separates_timesteps() {
    let a = time_embedding(1, 16);
    let b = time_embedding(2, 16);
    let c = time_embedding(500, 16);
    assert_eq!(a.shape(), vec![16]);
    assert_ne!(a.data(), b.data());
    assert_ne!(b.data(), c.data());
    for v in a.data().iter().chain(b.data().iter()).chain(c.data().iter()) {
        assert!(v.abs() <= 1.0);
    }
}

#[test]
fn spatial_features_cover_the_grid() {
    let f = spatial_position_features(3, 5);
    assert_eq!(f.shape(), vec![15, 4]);
    let data = f.data();
    for v in &data {
        assert!(v.abs() <= 1.0);
    }
    // No two pixels share a feature row (that is the whole point).
    for a in 0..15 {
        for b in (a + 1)..15 {
            assert_ne!(&data[a * 4..a * 4 + 4], &data[b * 4..b * 4 + 4], "pixels {a} vs {b}");
        }
    }
}

#[test]
fn fresh_model_is_exactly_the_frozen_stack() {
    let cfg = tiny_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let z = rand_tensor(&mut rng, &[1, 2, 4, 4, 4]);

    let full = denoiser_forward(&z, 3, 1, &params.image, &params.motion, true, true).unwrap();
    let mut frozen_only = z.clone();
    for idx in 0..cfg.layers {
        frozen_only = frozen_layer_forward(&frozen_only, &params.image, idx, 3, 1).unwrap();
    }
    assert_eq!(full.data(), frozen_only.data());
}

#[test]
fn frozen_layer_changes_with_timestep_and_condition() {
    let cfg = tiny_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let z = rand_tensor(&mut rng, &[1, 2, 4, 4, 4]);
    let base = frozen_layer_forward(&z, &params.image, 0, 1, 0).unwrap();
    let other_t = frozen_layer_forward(&z, &params.image, 0, 7, 0).unwrap();
    let other_c = frozen_layer_forward(&z, &params.image, 0, 1, 1).unwrap();
    assert_ne!(base.data(), other_t.data(), "timestep must matter");
    assert_ne!(base.data(), other_c.data(), "condition must matter");
}

#[test]
fn unknown_condition_is_a_lookup_error() {
    let cfg = tiny_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    let z = Tensor::zeros(&[1, 2, 4, 4, 4]);
    let err = denoiser_forward(&z, 1, 99, &params.image, &params.motion, true, true).unwrap_err();
    assert!(matches!(err, ModelError::Lookup(_)), "got {err}");
}

#[test]
fn timestep_zero_is_rejected() {
    let cfg = tiny_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    let z = Tensor::zeros(&[1, 2, 4, 4, 4]);
    assert!(denoiser_forward(&z, 0, 0, &params.image, &params.motion, true, true).is_err());
}

#[test]
fn backward_leaves_frozen_tensors_without_gradients() {
    let cfg = tiny_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    // Give the zero output projections signal so motion weights get gradients.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for block in &params.motion.blocks {
        let fresh = rand_tensor(&mut rng, &block.proj_out.shape());
        block.proj_out.set_data(&fresh.data()).unwrap();
    }
    let z = rand_tensor(&mut rng, &[1, 2, 4, 4, 4]);
    let out = denoiser_forward(&z, 2, 0, &params.image, &params.motion, true, true).unwrap();
    out.square().mean().unwrap().backward().unwrap();

    for (name, tensor, frozen) in params.named_tensors() {
        if frozen {
            assert!(tensor.grad().is_none(), "{name} is frozen but has a gradient");
        } else if name.starts_with("motion.") {
            // Adapter tensors sit outside this graph; motion tensors are in it.
            let grad = tensor.grad().unwrap_or_else(|| panic!("{name} missing gradient"));
            assert!(grad.iter().all(|g| g.is_finite()), "{name} gradient not finite");
        }
    }
}

#[test]
fn denoiser_gradients_match_finite_differences() {
    let cfg = tiny_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for block in &params.motion.blocks {
        let fresh = rand_tensor(&mut rng, &block.proj_out.shape());
        block.proj_out.set_data(&fresh.data()).unwrap();
    }
    let z = rand_tensor(&mut rng, &[1, 2, 4, 4, 4]);
    let trainables = params.trainable();
    let worst = finite_diff_check(
        |_| {
            let out = denoiser_forward(&z, 2, 1, &params.image, &params.motion, true, true)
                .map_err(|e| latentmotion_tensor::TensorError::Contract(e.to_string()))?;
            out.square().mean()
        },
        &trainables,
        1e-5,
    )
    .unwrap();
    assert!(worst < 1e-4, "worst relative gradient error {worst}");
}
