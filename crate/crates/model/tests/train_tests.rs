//! Training-loop contracts: determinism, resume, logging, and what the
//! optimizer may and may not touch.

use std::fs;
use std::path::Path;

use latentmotion_model::{
    gen_synthetic_dataset, load_checkpoint, train, train_step, Adam, ModelError, ModelParams,
    NoiseSchedule, TrainConfig,
};
use latentmotion_tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;

fn tiny_cfg(root: &Path) -> TrainConfig {
    TrainConfig {
        frames: 4,
        channels: 1,
        height: 4,
        width: 4,
        inner_dim: 4,
        heads: 1,
        layers: 1,
        negative_threshold: 1,
        diffusion_steps: 10,
        num_conditions: 2,
        dataset_size: 2,
        adapter_hidden: 6,
        embed_dim: 3,
        steps: 10,
        checkpoint_every: 5,
        checkpoint_dir: root.join("ckpt"),
        output_dir: root.join("out"),
        ..TrainConfig::default()
    }
}

fn read_log(cfg: &TrainConfig) -> Vec<String> {
    fs::read_to_string(cfg.output_dir.join("loss.csv"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn training_writes_log_rows_and_periodic_checkpoints() {
    let dir = tempdir().unwrap();
    let cfg = tiny_cfg(dir.path());
    let report = train(&cfg, None).unwrap();
    assert_eq!(report.final_step, 10);

    let log = read_log(&cfg);
    assert_eq!(log[0], "step,l_diff,l_con,l_total");
    assert_eq!(log.len(), 11, "header plus exactly cfg.steps rows");
    for (i, row) in log[1..].iter().enumerate() {
        assert!(row.starts_with(&format!("{},", i + 1)), "row {row}");
        assert_eq!(row.split(',').count(), 4);
    }

    assert!(cfg.checkpoint_dir.join("step_000005").is_dir());
    assert!(cfg.checkpoint_dir.join("step_000010").is_dir());
    assert!(report.final_checkpoint.is_dir());
    let final_ckpt = load_checkpoint(&report.final_checkpoint).unwrap();
    assert_eq!(final_ckpt.step, 10);
}

#[test]
fn two_fresh_runs_produce_identical_logs() {
    let dir_a = tempdir().unwrap();
    let dir_b = tempdir().unwrap();
    let cfg_a = tiny_cfg(dir_a.path());
    let cfg_b = tiny_cfg(dir_b.path());
    train(&cfg_a, None).unwrap();
    train(&cfg_b, None).unwrap();
    assert_eq!(read_log(&cfg_a), read_log(&cfg_b));
}

#[test]
fn resumed_run_reproduces_the_uninterrupted_log() {
    // Uninterrupted 10-step run.
    let dir_full = tempdir().unwrap();
    let cfg_full = tiny_cfg(dir_full.path());
    train(&cfg_full, None).unwrap();

    // 5 steps, then resume to 10 from the final checkpoint.
    let dir_split = tempdir().unwrap();
    let mut cfg_split = tiny_cfg(dir_split.path());
    cfg_split.steps = 5;
    let first = train(&cfg_split, None).unwrap();
    assert_eq!(first.final_step, 5);
    cfg_split.steps = 10;
    let second = train(&cfg_split, Some(&first.final_checkpoint)).unwrap();
    assert_eq!(second.final_step, 10);

    assert_eq!(read_log(&cfg_full), read_log(&cfg_split), "loss logs must match row for row");
}

#[test]
fn zero_steps_checkpoints_the_initialization() {
    let dir = tempdir().unwrap();
    let mut cfg = tiny_cfg(dir.path());
    cfg.steps = 0;
    let report = train(&cfg, None).unwrap();
    assert_eq!(report.final_step, 0);
    assert_eq!(read_log(&cfg).len(), 1, "header only");

    let loaded = load_checkpoint(&report.final_checkpoint).unwrap();
    let fresh = ModelParams::init(&cfg).unwrap();
    for ((name, ta, _), (_, tb, _)) in
        loaded.params.named_tensors().iter().zip(fresh.named_tensors())
    {
        assert_eq!(ta.data(), tb.data(), "{name} must equal initialization");
    }
}

#[test]
fn training_touches_only_trainable_tensors() {
    let dir = tempdir().unwrap();
    let cfg = tiny_cfg(dir.path());
    let report = train(&cfg, None).unwrap();
    let trained = load_checkpoint(&report.final_checkpoint).unwrap().params;
    let fresh = ModelParams::init(&cfg).unwrap();

    let mut some_trainable_moved = false;
    for ((name, ta, frozen), (_, tb, _)) in
        trained.named_tensors().iter().zip(fresh.named_tensors())
    {
        if *frozen {
            let a = ta.data();
            let b = tb.data();
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.to_bits(), y.to_bits(), "{name} is frozen and must not move");
            }
        } else if ta.data() != tb.data() {
            some_trainable_moved = true;
        }
    }
    assert!(some_trainable_moved, "ten steps must move at least one trainable tensor");
}

#[test]
fn zero_contrastive_weight_collapses_total_to_diffusion_loss() {
    let dir = tempdir().unwrap();
    let mut cfg = tiny_cfg(dir.path());
    cfg.lambda_con = 0.0;
    let params = ModelParams::init(&cfg).unwrap();
    let mut adam = Adam::new(&params.trainable(), cfg.learning_rate);
    let sched =
        NoiseSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end).unwrap();
    let dataset = gen_synthetic_dataset(2, &cfg, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (l_diff, l_con, l_total) =
        train_step(&dataset[0], &params, &sched, &cfg, &mut rng, &mut adam).unwrap();
    assert_eq!(l_total.to_bits(), l_diff.to_bits());
    assert!(l_con.is_finite());
}

#[test]
fn ablation_switches_still_train() {
    for (versatile, sparse_causal) in [(false, true), (true, false), (false, false)] {
        let dir = tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path());
        cfg.steps = 3;
        cfg.checkpoint_every = 100;
        cfg.enable_versatile = versatile;
        cfg.enable_sparse_causal = sparse_causal;
        let report = train(&cfg, None).unwrap();
        assert_eq!(report.final_step, 3);
        assert_eq!(read_log(&cfg).len(), 4);
    }
}

#[test]
fn resume_rejects_model_shape_changes() {
    let dir = tempdir().unwrap();
    let mut cfg = tiny_cfg(dir.path());
    cfg.steps = 2;
    let report = train(&cfg, None).unwrap();

    let mut changed = cfg.clone();
    changed.steps = 4;
    changed.tau = 0.5;
    let err = train(&changed, Some(&report.final_checkpoint)).unwrap_err();
    assert!(matches!(err, ModelError::Checkpoint(_)), "got {err}");
}

#[test]
fn optimizer_skips_parameters_without_gradients() {
    let t = Tensor::from_vec(vec![1.0, -2.0, 3.0], &[3]).unwrap().with_requires_grad();
    let params = vec![t.clone()];
    let mut adam = Adam::new(&params, 0.1);
    adam.step(&params).unwrap();
    assert_eq!(t.data(), vec![1.0, -2.0, 3.0], "no gradient, no movement");
}

#[test]
fn optimizer_descends_a_simple_quadratic() {
    // Minimize mean((x − 3)²); Adam should walk x toward 3 from 0.
    let x = Tensor::from_vec(vec![0.0, 0.0], &[2]).unwrap().with_requires_grad();
    let params = vec![x.clone()];
    let mut adam = Adam::new(&params, 0.05);
    let target = Tensor::from_vec(vec![3.0, 3.0], &[2]).unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        x.zero_grad();
        let loss = x.add(&target.scale(-1.0)).unwrap().square().mean().unwrap();
        loss.backward().unwrap();
        adam.step(&params).unwrap();
        last = loss.item();
    }
    assert!(last < 1e-2, "final loss {last}");
    for v in x.data() {
        assert!((v - 3.0).abs() < 0.2, "x drifted to {v}");
    }
}

#[test]
fn optimizer_state_restore_validates_shapes() {
    let t = Tensor::from_vec(vec![1.0, 2.0], &[2]).unwrap().with_requires_grad();
    let mut adam = Adam::new(std::slice::from_ref(&t), 0.1);
    let bad_state = vec![(Tensor::zeros(&[3]), Tensor::zeros(&[3]))];
    assert!(adam.restore(1, &bad_state).is_err());
    assert!(adam.restore(1, &[]).is_err());
}
