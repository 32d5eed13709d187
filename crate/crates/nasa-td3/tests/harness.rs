//! End-to-end checks of the training harness: run artifacts, determinism,
//! evaluation purity, checkpoint round-trips, resume equivalence, and
//! plotting.

use std::path::Path;
use std::process::Command;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use nasa_td3::agent::{Model, Variant};
use nasa_td3::harness::{
    checkpoint, evaluate, plot, stream, train, RngStreams, RunConfig, STREAM_INIT,
};
use nasa_td3::imaging::{FrameStack, Image};
use nasa_td3::intrinsic::RewardBreakdown;
use nasa_td3::replay::{ReplayBuffer, Transition};
use nasa_td3::Error;

fn tiny_cfg(variant: Variant, seed: u64, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.env = "valve-random".to_string();
    cfg.variant = variant;
    cfg.seed = seed;
    cfg.image_size = 16;
    cfg.frame_stack = 2;
    cfg.filters = 4;
    cfg.z_dim = 6;
    cfg.hidden = 16;
    cfg.pred_hidden = 8;
    cfg.n_predictors = 2;
    cfg.batch_size = 4;
    cfg.buffer_capacity = 500;
    cfg.total_steps = 30;
    cfg.warmup_steps = 10;
    cfg.updates_per_step = 2;
    cfg.eval_every = 15;
    cfg.eval_episodes = 2;
    cfg.out_dir = out.display().to_string();
    cfg
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn empty_run_writes_headers_and_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_cfg(Variant::NasaTd3, 1, dir.path());
    cfg.total_steps = 0;
    let outcome = train(&cfg).unwrap();
    assert_eq!(
        read(&outcome.metrics_path),
        "step,r_ext,r_novel,r_surprise,ae_loss,critic_loss,actor_loss,predictor_loss\n"
    );
    assert_eq!(read(&outcome.eval_path), "step,mean_return,return_stddev\n");
    assert!(outcome.final_eval.is_none());
    let loaded = checkpoint::load(&outcome.checkpoint_path).unwrap();
    assert_eq!(loaded.steps_done, 0);
    assert_eq!(loaded.model.ticks_done(), 0);
    assert_eq!(loaded.config, cfg);
}

#[test]
fn identical_config_and_seed_runs_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut cfg_a = tiny_cfg(Variant::NasaTd3, 7, dir_a.path());
    let mut cfg_b = tiny_cfg(Variant::NasaTd3, 7, dir_b.path());
    let out_a = train(&cfg_a).unwrap();
    let out_b = train(&cfg_b).unwrap();
    assert_eq!(read(&out_a.metrics_path), read(&out_b.metrics_path));
    assert_eq!(read(&out_a.eval_path), read(&out_b.eval_path));

    // The checkpoints differ only in the embedded out_dir; align the
    // configs and the files must match byte for byte.
    cfg_a.out_dir = "x".to_string();
    cfg_b.out_dir = "x".to_string();
    let la = checkpoint::load(&out_a.checkpoint_path).unwrap();
    let lb = checkpoint::load(&out_b.checkpoint_path).unwrap();
    let pa = dir_a.path().join("a.ckpt");
    let pb = dir_b.path().join("b.ckpt");
    checkpoint::save(&pa, &cfg_a, &la.model, &la.streams, la.steps_done).unwrap();
    checkpoint::save(&pb, &cfg_b, &lb.model, &lb.streams, lb.steps_done).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());

    let dir_c = tempfile::tempdir().unwrap();
    let out_c = train(&tiny_cfg(Variant::NasaTd3, 8, dir_c.path())).unwrap();
    assert_ne!(
        read(&out_a.metrics_path),
        read(&out_c.metrics_path),
        "a different seed must change the run"
    );
}

#[test]
fn eval_rows_land_exactly_on_eval_every_multiples() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = train(&tiny_cfg(Variant::NasaTd3, 2, dir.path())).unwrap();
    let text = read(&outcome.eval_path);
    let steps: Vec<u64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(steps, vec![15, 30]);
    let (mean, _) = outcome.final_eval.unwrap();
    let last: f64 = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(mean.to_bits(), last.to_bits());
}

#[test]
fn evaluation_is_pure_and_single_episode_exact() {
    let cfg = tiny_cfg(Variant::NasaTd3, 3, Path::new("unused"));
    let mut init = stream(cfg.seed, STREAM_INIT);
    let model: Model<f32> = Model::new(&cfg.model_config(1), &mut init).unwrap();

    let hashes_before = model.component_hashes();
    let mut rng = stream(9, 5);
    let (mean, sd) = evaluate(&model, &cfg.env, 16, 2, 3, &mut rng).unwrap();
    assert!(mean.is_finite() && sd >= 0.0);
    assert_eq!(
        model.component_hashes(),
        hashes_before,
        "evaluation must not write any parameter"
    );

    // One episode: the mean is that episode's return, the spread is zero.
    let mut rng_a = stream(11, 5);
    let mut rng_b = rng_a.clone();
    let (mean_1, sd_1) = evaluate(&model, &cfg.env, 16, 2, 1, &mut rng_a).unwrap();
    assert_eq!(sd_1, 0.0);
    let mut env = nasa_td3::envs::make_env(&cfg.env, 16).unwrap();
    let mut stack = FrameStack::reset(env.reset(&mut rng_b), 2).unwrap();
    let mut ret = 0.0;
    loop {
        let action = model.select_action(&stack, 0.0, &mut rng_b).unwrap();
        let step = env.step(&action).unwrap();
        ret += step.r_ext;
        if step.done {
            break;
        }
        stack = stack.push(step.obs).unwrap();
    }
    assert_eq!(mean_1.to_bits(), ret.to_bits());
}

#[test]
fn checkpoint_save_load_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = train(&tiny_cfg(Variant::NasaTd3, 4, dir.path())).unwrap();
    let original = std::fs::read(&outcome.checkpoint_path).unwrap();
    let loaded = checkpoint::load(&outcome.checkpoint_path).unwrap();
    let again = dir.path().join("again.ckpt");
    checkpoint::save(&again, &loaded.config, &loaded.model, &loaded.streams, loaded.steps_done)
        .unwrap();
    assert_eq!(
        std::fs::read(&again).unwrap(),
        original,
        "a loaded checkpoint must save back to the same bytes"
    );
    assert_eq!(loaded.steps_done, 30);
    assert_eq!(loaded.model.ticks_done(), 40, "20 trained steps of 2 ticks");
}

#[test]
fn checkpoint_rejects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = train(&tiny_cfg(Variant::NasaTd3, 5, dir.path())).unwrap();
    let good = std::fs::read(&outcome.checkpoint_path).unwrap();

    let bad_magic = dir.path().join("magic.ckpt");
    let mut bytes = good.clone();
    bytes[0] = b'X';
    std::fs::write(&bad_magic, &bytes).unwrap();
    match checkpoint::load(&bad_magic).unwrap_err() {
        Error::Checkpoint { offset, msg } => {
            assert_eq!(offset, 0);
            assert!(msg.contains("magic"), "{msg}");
        }
        other => panic!("wrong error {other}"),
    }

    let truncated = dir.path().join("short.ckpt");
    std::fs::write(&truncated, &good[..good.len() - 10]).unwrap();
    match checkpoint::load(&truncated).unwrap_err() {
        Error::Checkpoint { offset, msg } => {
            assert!(offset > 0);
            assert!(msg.contains("truncated"), "{msg}");
        }
        other => panic!("wrong error {other}"),
    }

    let versioned = dir.path().join("version.ckpt");
    let mut bytes = good.clone();
    bytes[4..8].copy_from_slice(&9u32.to_le_bytes());
    std::fs::write(&versioned, &bytes).unwrap();
    match checkpoint::load(&versioned).unwrap_err() {
        Error::Checkpoint { offset, msg } => {
            assert_eq!(offset, 4);
            assert!(msg.contains("version 9"), "{msg}");
        }
        other => panic!("wrong error {other}"),
    }

    // A well-formed tensor the model has no use for is also an error.
    let extra = dir.path().join("extra.ckpt");
    let mut bytes = good.clone();
    let name = b"junk.x";
    bytes.extend_from_slice(&(name.len() as u32).to_le_bytes());
    bytes.extend_from_slice(name);
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&1.0f32.to_le_bytes());
    std::fs::write(&extra, &bytes).unwrap();
    match checkpoint::load(&extra).unwrap_err() {
        Error::Checkpoint { msg, .. } => assert!(msg.contains("junk.x"), "{msg}"),
        other => panic!("wrong error {other}"),
    }
}

#[test]
fn pixel_checkpoints_contain_no_perception_tensors() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = train(&tiny_cfg(Variant::PixelTd3, 6, dir.path())).unwrap();
    let bytes = std::fs::read(&outcome.checkpoint_path).unwrap();
    let names: Vec<String> = checkpoint::read_tensors(&bytes)
        .unwrap()
        .into_iter()
        .map(|t| t.name)
        .collect();
    for banned in ["enc.", "dec.", "pred.", "opt.enc", "opt.dec", "opt.pred"] {
        assert!(
            names.iter().all(|n| !n.starts_with(banned)),
            "pixel variant must not construct {banned} tensors"
        );
    }
    assert!(names.iter().any(|n| n == "actor.l0.weight"));
}

#[test]
fn ablation_runs_store_zero_intrinsic_rewards() {
    for variant in [Variant::AeTd3, Variant::PixelTd3] {
        let dir = tempfile::tempdir().unwrap();
        let outcome = train(&tiny_cfg(variant, 7, dir.path())).unwrap();
        let text = read(&outcome.metrics_path);
        let mut rows = 0;
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[2], "0", "r_novel must be exactly zero, got {line}");
            assert_eq!(fields[3], "0", "r_surprise must be exactly zero, got {line}");
            rows += 1;
        }
        assert_eq!(rows, 30);
    }
}

fn random_frame(rng: &mut ChaCha8Rng, hw: usize) -> Image {
    let bytes: Vec<u8> = (0..hw * hw * 3).map(|_| rng.gen()).collect();
    Image::from_rgb_u8(hw, hw, &bytes).unwrap()
}

fn fixture_buffer(rng: &mut ChaCha8Rng, steps: usize) -> ReplayBuffer {
    let mut buf = ReplayBuffer::new(256).unwrap();
    let mut s = FrameStack::reset(random_frame(rng, 16), 2).unwrap();
    for t in 0..steps {
        let s_next = s.push(random_frame(rng, 16)).unwrap();
        let r = rng.gen_range(-1.0..0.0);
        buf.push(&Transition {
            s: s.clone(),
            action: vec![rng.gen_range(-1.0..1.0)],
            r_total: r,
            breakdown: RewardBreakdown::extrinsic_only(r),
            s_next: s_next.clone(),
            done: (t + 1) % 10 == 0,
        })
        .unwrap();
        s = s_next;
    }
    buf
}

#[test]
fn resumed_training_reproduces_the_unbroken_loss_stream() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_cfg(Variant::NasaTd3, 9, dir.path());
    let mut init = stream(cfg.seed, STREAM_INIT);
    let mut model: Model<f32> = Model::new(&cfg.model_config(1), &mut init).unwrap();
    let mut frames = stream(42, 0);
    let buffer = fixture_buffer(&mut frames, 40);
    let mut streams = RngStreams::new(cfg.seed);

    for _ in 0..10 {
        model.train_step(&buffer, 4, &mut streams.sampling).unwrap();
    }
    let ckpt = dir.path().join("mid.ckpt");
    checkpoint::save(&ckpt, &cfg, &model, &streams, 10).unwrap();

    // The replay buffer is deliberately outside the checkpoint; resume
    // equivalence is over the training state proper, with the buffer
    // shared.
    let unbroken: Vec<[u64; 4]> = (0..100)
        .map(|_| {
            let l = model.train_step(&buffer, 4, &mut streams.sampling).unwrap();
            [
                l.critic_loss.to_bits(),
                l.ae_loss.to_bits(),
                l.actor_loss.to_bits(),
                l.predictor_loss.to_bits(),
            ]
        })
        .collect();

    let mut loaded = checkpoint::load(&ckpt).unwrap();
    assert_eq!(loaded.steps_done, 10);
    let resumed: Vec<[u64; 4]> = (0..100)
        .map(|_| {
            let l = loaded
                .model
                .train_step(&buffer, 4, &mut loaded.streams.sampling)
                .unwrap();
            [
                l.critic_loss.to_bits(),
                l.ae_loss.to_bits(),
                l.actor_loss.to_bits(),
                l.predictor_loss.to_bits(),
            ]
        })
        .collect();
    assert_eq!(unbroken, resumed, "resume must continue the exact loss stream");
}

#[test]
fn plots_group_variants_and_band_spans_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let header = "step,r_ext,critic_loss";
    let files = [
        ("metrics_nasa-td3_seed0.csv", "1,-1,0.5\n2,-0.8,0.4\n3,-0.6,0.3\n"),
        ("metrics_nasa-td3_seed1.csv", "1,-0.9,0.7\n2,-0.7,0.6\n3,-0.5,0.5\n"),
        ("metrics_pixel-td3_seed0.csv", "1,-1,0.9\n2,-1,0.8\n3,-1,0.7\n"),
    ];
    let mut paths = Vec::new();
    for (name, rows) in files {
        let p = dir.path().join(name);
        std::fs::write(&p, format!("{header}\n{rows}")).unwrap();
        paths.push(p);
    }
    let out = dir.path().join("plots");
    let written = plot::plot(&paths, &out).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, vec!["plot_critic_loss.svg", "plot_r_ext.svg"]);
    let svg = read(&written[1]);
    assert!(svg.contains(">nasa-td3</text>") && svg.contains(">pixel-td3</text>"));
    assert!(svg.contains("<polygon") && svg.contains("<polyline"));

    let rerun = plot::plot(&paths, &dir.path().join("plots2")).unwrap();
    assert_eq!(read(&written[1]), read(&rerun[1]), "plots must be deterministic");
}

#[test]
fn plot_accepts_header_only_files_and_names_malformed_lines() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("eval_nasa-td3_seed0.csv");
    std::fs::write(&empty, "step,mean_return,return_stddev\n").unwrap();
    let written = plot::plot(&[empty.clone()], &dir.path().join("out")).unwrap();
    assert_eq!(written.len(), 2);
    let svg = read(&written[0]);
    assert!(!svg.contains("<polyline"), "no data means empty axes");
    assert!(svg.contains("mean_return"));

    let bad = dir.path().join("metrics_x_seed0.csv");
    std::fs::write(&bad, "step,r_ext\n1,0.5\n2,oops\n").unwrap();
    match plot::plot(&[bad], &dir.path().join("out2")).unwrap_err() {
        Error::Csv { file, line, msg } => {
            assert!(file.contains("metrics_x_seed0.csv"));
            assert_eq!(line, 3);
            assert!(msg.contains("oops"), "{msg}");
        }
        other => panic!("wrong error {other}"),
    }

    let short = dir.path().join("metrics_y_seed0.csv");
    std::fs::write(&short, "step,r_ext\n1\n").unwrap();
    match plot::plot(&[short], &dir.path().join("out3")).unwrap_err() {
        Error::Csv { line, .. } => assert_eq!(line, 2),
        other => panic!("wrong error {other}"),
    }
}

#[test]
fn cli_round_trip_and_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_nasa-td3");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &cfg_path,
        "env=valve-random\nvariant=nasa-td3\nimage_size=16\nframe_stack=2\nfilters=4\n\
         z_dim=6\nhidden=16\npred_hidden=8\nn_predictors=2\nbatch_size=4\nbuffer_capacity=100\n\
         total_steps=8\nwarmup_steps=4\nupdates_per_step=2\neval_every=8\neval_episodes=1\n",
    )
    .unwrap();

    let train_out = Command::new(exe)
        .args(["train", "--config"])
        .arg(&cfg_path)
        .args(["--seed", "3", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(train_out.status.success(), "{}", String::from_utf8_lossy(&train_out.stderr));
    let ckpt = out_dir.join("checkpoint_nasa-td3_seed3.ckpt");
    assert!(ckpt.exists(), "seed and out overrides must shape the artifacts");

    let eval_out = Command::new(exe)
        .args(["eval", "--episodes", "2", "--checkpoint"])
        .arg(&ckpt)
        .output()
        .unwrap();
    assert!(eval_out.status.success());
    let stdout = String::from_utf8_lossy(&eval_out.stdout);
    assert!(stdout.contains("mean_return="), "{stdout}");

    let inspect_out = Command::new(exe)
        .arg("inspect-checkpoint")
        .arg(&ckpt)
        .output()
        .unwrap();
    assert!(inspect_out.status.success());
    let stdout = String::from_utf8_lossy(&inspect_out.stdout);
    assert!(stdout.contains("format version 1"), "{stdout}");
    assert!(stdout.contains("actor.l0.weight"), "{stdout}");
    assert!(stdout.contains("seed=3"), "{stdout}");

    let plot_out = Command::new(exe)
        .args(["plot"])
        .arg(out_dir.join("metrics_nasa-td3_seed3.csv"))
        .args(["--out"])
        .arg(dir.path().join("plots"))
        .output()
        .unwrap();
    assert!(plot_out.status.success());

    let missing = Command::new(exe)
        .args(["plot", "no-such-file.csv", "--out", "x"])
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error:"));

    let bad_cfg = dir.path().join("bad.cfg");
    std::fs::write(&bad_cfg, "learning=everything\n").unwrap();
    let bad = Command::new(exe)
        .args(["train", "--config"])
        .arg(&bad_cfg)
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 1"));
}
