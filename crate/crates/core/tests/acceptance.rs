//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::*;
use mtrack::curriculum::{level_masses, CurriculumConfig};
use mtrack::geometry::{add, Quat};
use mtrack::matrix::Matrix;
use mtrack::metrics::{
    mpjae, mpjpe, mpjve, per_level_report, AngleErrorMode, LabeledPair, TrajectoryPair,
};
use mtrack::motion::RobotFrame;
use mtrack::observation::{
    build_observation, offset_table, quat_to_6d, CommandLayout, Proprioception,
};
use mtrack::reward::{
    regularization, task_rewards, total_reward, BodyStatePair, ContactForce, ControlStep,
    RewardConfig,
};
use mtrack::scheduler::{ClipStats, SchedulerConfig, SchedulerState};
use mtrack::sim::{
    compare_uniform, run, BaseError, ClipRoster, LearnerModel, RunSettings, SimConfig,
};
use mtrack::tokenizer::{quantize, vqvae_loss, Codebook, LossWeights, MotionTensor, MOTION_WIDTH};
use rand::Rng;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scheduler_math() -> Check {
    let mut rng = rng(1001);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.random_range(1..=60);
        let cfg = SchedulerConfig {
            alpha: rng.random_range(0.0..=1.0),
            beta: rng.random_range(0.0..=1.0),
            w: rng.random_range(0.0..=1.0),
            c: rng.random_range(0.05..2.0),
            gamma: rng.random_range(0.1..4.0),
            temperature: rng.random_range(0.2..5.0),
            eps_explore: rng.random_range(0.0..=1.0),
            eps_num: 1e-6,
        };
        let stats: Vec<ClipStats<f64>> = (0..n)
            .map(|_| ClipStats {
                error: rng.random_range(0.0..3.0),
                success: rng.random_range(0.0..1.0),
                failure: rng.random_range(0.0..1.0),
                initialized: true,
            })
            .collect();
        let mut state = SchedulerState::new((0..n).map(|i| format!("c{i}")).collect()).unwrap();
        state.stats_mut().copy_from_slice(&stats);
        let r = state.difficulty_scores(&cfg);
        ensure(r.iter().all(|x| (0.0..=1.0).contains(x)), || {
            format!("case {case}: score outside [0,1]")
        })?;
        let p = state.sampling_distribution(&cfg);
        let total: f64 = p.iter().sum();
        ensure((total - 1.0).abs() <= 1e-9, || {
            format!("case {case}: sum {total}")
        })?;
        let floor = cfg.eps_explore / n as f64;
        ensure(p.iter().all(|x| *x >= floor - 1e-12), || {
            format!("case {case}: below floor")
        })?;

        let brute: Vec<f64> = stats
            .iter()
            .map(|s| {
                let e = (s.error / cfg.c).min(1.0);
                let f = 1.0 - s.success / (s.success + s.failure + cfg.eps_num);
                let r = (1.0 - cfg.w) * e + cfg.w * f;
                (r + cfg.eps_num).powf(cfg.gamma / cfg.temperature)
            })
            .collect();
        let z: f64 = brute.iter().sum();
        for (pi, b) in p.iter().zip(&brute) {
            let o = (1.0 - cfg.eps_explore) * b / z + floor;
            worst = worst.max((pi - o).abs());
        }
        ensure(worst <= 1e-9, || {
            format!("case {case}: oracle deviation {worst:e}")
        })?;
    }
    Ok(format!("1000 cases, max oracle deviation {worst:.1e}"))
}

fn curriculum_dynamics() -> Check {
    let cfg_for = |seed: u64, iters: u64| {
        let mut cfg = SimConfig::new(RunSettings::new(iters, 8, seed));
        cfg.curriculum = CurriculumConfig {
            theta_pos: 0.5,
            theta_ang: 1.5,
            ..CurriculumConfig::default()
        };
        cfg
    };
    let roster = ClipRoster::synthetic(&[1, 1, 1, 1, 2, 2, 2, 3, 3, 3]).unwrap();
    let log = run(&roster, &cfg_for(0, 500)).map_err(|e| e.to_string())?;
    ensure(log.final_l_max == 3, || {
        format!("l_max stopped at {}", log.final_l_max)
    })?;

    let mut rng = rng(2002);
    let mut checked = 0usize;
    for k in 0..200 {
        let levels: Vec<u8> = (0..10).map(|_| rng.random_range(1..=3)).collect();
        let roster = ClipRoster::synthetic(&levels).unwrap();
        let mut cfg = cfg_for(k, 200);
        cfg.curriculum.auto_advance_iters = rng.random_range(20..120);
        cfg.curriculum.theta_pos = rng.random_range(0.05..0.5);
        let log = run(&roster, &cfg).map_err(|e| e.to_string())?;
        let mut prev = 0;
        for r in &log.records {
            ensure(r.l_max >= prev, || {
                format!("run {k}: l_max fell at iteration {}", r.iteration)
            })?;
            prev = r.l_max;
            for (level, m) in level_masses(&r.prob, &roster.levels) {
                if level <= r.l_max {
                    ensure(m >= 0.05 - 1e-9, || {
                        format!("run {k} iteration {}: level {level} mass {m}", r.iteration)
                    })?;
                    checked += 1;
                }
            }
        }
        ensure(log.final_l_max >= prev, || {
            format!("run {k}: final l_max fell")
        })?;
    }
    Ok(format!(
        "top level reached; 200 runs monotone; {checked} level-mass checks at floor 0.05"
    ))
}

fn adaptive_vs_uniform() -> Check {
    let levels: Vec<u8> = (1..=10).flat_map(|l| [l, l]).collect();
    let roster = ClipRoster::synthetic(&levels).unwrap();
    let mut cfg = SimConfig::new(RunSettings::new(2000, 1, 0));
    cfg.run.curriculum = false;
    cfg.learner = LearnerModel {
        base_error: BaseError::Linear {
            intercept: 0.0,
            slope: 0.05,
        },
        learn_rate: 0.02,
        noise_std: 0.01,
        fail_threshold: 0.3,
    };
    let seeds: Vec<u64> = (0..20).collect();
    let report = compare_uniform(&roster, &cfg, &seeds).map_err(|e| e.to_string())?;
    let rate = report.adaptive_win_rate();
    let wins = report.rows.iter().filter(|r| r.adaptive_wins()).count();
    ensure(rate >= 0.8, || format!("adaptive won {wins}/20 seeds"))?;
    Ok(format!("adaptive lower final max error in {wins}/20 seeds"))
}

fn reward_suite() -> Check {
    let cfg = RewardConfig::default();
    let mut rng = rng(3003);
    for _ in 0..20 {
        let f = random_frame(&mut rng);
        let t = total_reward(
            &BodyStatePair::new(&f, &f).unwrap(),
            &ControlStep::clean(29),
            &cfg,
        )
        .map_err(|e| e.to_string())?;
        ensure((t - 5.3).abs() <= 1e-9, || format!("perfect total {t}"))?;
    }

    let mut worst = 0.0f64;
    for case in 0..1000 {
        let r = random_frame(&mut rng);
        let mut a = r.clone();
        for i in 0..a.body_pos.len() {
            a.body_pos[i] = add(a.body_pos[i], vec3(&mut rng, 0.2));
            a.body_quat[i] = Quat::from_rotation_vector(vec3(&mut rng, 0.5))
                .mul(a.body_quat[i])
                .normalized();
            a.body_lin_vel[i] = add(a.body_lin_vel[i], vec3(&mut rng, 1.0));
            a.body_ang_vel[i] = add(a.body_ang_vel[i], vec3(&mut rng, 3.0));
        }
        let got =
            task_rewards(&BodyStatePair::new(&r, &a).unwrap(), &cfg).map_err(|e| e.to_string())?;
        let expect = matrix_oracle(&r, &a, &cfg);
        for ((name, v), o) in got.named().iter().zip(expect) {
            let d = (v - o).abs();
            worst = worst.max(d);
            ensure(d <= 1e-9, || format!("case {case} {name}: {v} vs {o}"))?;
        }
    }

    let r = RobotFrame::<f64>::zeroed(N_BODIES, 0);
    let a = r.translated([0.2, 0.0, 0.0]);
    let t = task_rewards(&BodyStatePair::new(&r, &a).unwrap(), &cfg).map_err(|e| e.to_string())?;
    let expect = 0.8 * (-1.0f64).exp();
    ensure((t.anchor_pos - expect).abs() <= 1e-9, || {
        format!("anchor example {} vs {expect}", t.anchor_pos)
    })?;

    let mut step = ControlStep::<f64>::clean(29);
    step.joint_pos[0] = 3.5;
    step.contact_forces = vec![
        ContactForce {
            body: "torso".into(),
            force: 1.01,
        },
        ContactForce {
            body: "head".into(),
            force: 1.0,
        },
    ];
    let reg = regularization(&step, &cfg).map_err(|e| e.to_string())?;
    ensure(reg.joint_limit == -10.0, || {
        format!("joint limit {}", reg.joint_limit)
    })?;
    ensure(reg.contacts == -0.1, || {
        format!("contacts {}", reg.contacts)
    })?;
    Ok(format!(
        "perfect 5.3, 1000 oracle pairs (max dev {worst:.1e}), anchor example, penalties exact"
    ))
}

fn matrix_oracle(r: &RobotFrame<f64>, a: &RobotFrame<f64>, cfg: &RewardConfig<f64>) -> [f64; 6] {
    let k = |w: f64, s: f64, d2: f64| w * (-d2 / (s * s)).exp();
    let (rp, ap) = (r.body_pos[0], a.body_pos[0]);
    let (rm, am) = (rot_matrix(r.body_quat[0]), rot_matrix(a.body_quat[0]));
    let ang0 = angle_between(r.body_quat[0], a.body_quat[0]);
    let n = r.body_pos.len();
    let (mut pos, mut ori, mut lin, mut angv) = (0.0, 0.0, 0.0, 0.0);
    for i in 1..n {
        let rel =
            |m, p: [f64; 3], o: [f64; 3]| mat_t_vec(m, [p[0] - o[0], p[1] - o[1], p[2] - o[2]]);
        pos += dist_sq(rel(rm, r.body_pos[i], rp), rel(am, a.body_pos[i], ap));
        let m = mat_t_mat(
            mat_t_mat(rm, rot_matrix(r.body_quat[i])),
            mat_t_mat(am, rot_matrix(a.body_quat[i])),
        );
        let ang = ((m[0][0] + m[1][1] + m[2][2] - 1.0) / 2.0)
            .clamp(-1.0, 1.0)
            .acos();
        ori += ang * ang;
    }
    for i in 0..n {
        lin += dist_sq(r.body_lin_vel[i], a.body_lin_vel[i]);
        angv += dist_sq(r.body_ang_vel[i], a.body_ang_vel[i]);
    }
    let (m, nb) = ((n - 1) as f64, n as f64);
    [
        k(cfg.anchor_pos.weight, cfg.anchor_pos.sigma, dist_sq(rp, ap)),
        k(cfg.anchor_ori.weight, cfg.anchor_ori.sigma, ang0 * ang0),
        k(cfg.rel_body_pos.weight, cfg.rel_body_pos.sigma, pos / m),
        k(cfg.rel_body_ori.weight, cfg.rel_body_ori.sigma, ori / m),
        k(cfg.body_lin_vel.weight, cfg.body_lin_vel.sigma, lin / nb),
        k(cfg.body_ang_vel.weight, cfg.body_ang_vel.sigma, angv / nb),
    ]
}

fn observation_suite() -> Check {
    let mut rng = rng(4004);
    let layout = CommandLayout::default();
    let widths: Vec<usize> = offset_table().iter().map(|(_, r)| r.len()).collect();
    ensure(widths == [65, 130, 325, 6, 3, 29, 29, 29], || {
        format!("widths {widths:?}")
    })?;
    let mut worst = 0.0f64;
    for case in 0..300 {
        let n = rng.random_range(1..40);
        let clip = random_clip(&mut rng, "c", n, 1);
        let t = rng.random_range(0..n);
        let q = unit_quat(&mut rng);
        let six = quat_to_6d(q).map_err(|e| e.to_string())?;
        let mut v = |k: usize| {
            (0..k)
                .map(|_| rng.random_range(-3.0..3.0))
                .collect::<Vec<f64>>()
        };
        let p = Proprioception {
            anchor_ori_6d: six.to_vec(),
            base_ang_vel: v(3),
            joint_pos: v(29),
            joint_vel: v(29),
            prev_actions: v(29),
        };
        let obs = build_observation(&clip, t, &p, &layout).map_err(|e| e.to_string())?;
        ensure(obs.len() == 616, || {
            format!("case {case}: length {}", obs.len())
        })?;
        let parts = [
            ("motion_anchor_ori_b", &p.anchor_ori_6d),
            ("base_ang_vel", &p.base_ang_vel),
            ("joint_pos", &p.joint_pos),
            ("joint_vel", &p.joint_vel),
            ("prev_actions", &p.prev_actions),
        ];
        for (name, want) in parts {
            let got = obs.segment(name).unwrap();
            ensure(
                got.iter()
                    .zip(want.iter())
                    .all(|(a, b)| a.to_bits() == b.to_bits()),
                || format!("case {case}: {name} round trip"),
            )?;
        }
        let (c0, c1) = ([six[0], six[1], six[2]], [six[3], six[4], six[5]]);
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        for d in [dot(c0, c0) - 1.0, dot(c1, c1) - 1.0, dot(c0, c1)] {
            worst = worst.max(d.abs());
        }
        ensure(worst <= 1e-9, || {
            format!("case {case}: 6D columns off by {worst:e}")
        })?;
    }
    Ok(format!(
        "300 random observations of 616, bit-exact slices, 6D orthonormality {worst:.1e}"
    ))
}

fn tokenizer_suite() -> Check {
    let mut rng = rng(5005);
    for case in 0..1000 {
        let k = rng.random_range(1..=64);
        let d = rng.random_range(1..=8);
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let q = quantize(
            &Matrix::from_rows(std::slice::from_ref(&z)).unwrap(),
            &Codebook::from_rows(&rows).unwrap(),
        )
        .map_err(|e| e.to_string())?;
        let mut best = (0, f64::MAX);
        for (i, c) in rows.iter().enumerate() {
            let dist: f64 = z.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist < best.1 {
                best = (i, dist);
            }
        }
        ensure(q.indices[0] == best.0, || {
            format!("case {case}: {} vs {}", q.indices[0], best.0)
        })?;
    }

    let w = LossWeights::<f64>::default();
    for case in 0..200 {
        let n = rng.random_range(1..10);
        let fps = rng.random_range(1.0..60.0);
        let commit = rng.random_range(0.0..2.0);
        let mut row = || {
            (0..MOTION_WIDTH)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect::<Vec<f64>>()
        };
        let a: Vec<Vec<f64>> = (0..n).map(|_| row()).collect();
        let b: Vec<Vec<f64>> = (0..n).map(|_| row()).collect();
        let (ta, tb) = (
            MotionTensor::from_rows(&a).unwrap(),
            MotionTensor::from_rows(&b).unwrap(),
        );
        let got = vqvae_loss(&ta, &tb, commit, fps, &w)
            .map_err(|e| e.to_string())?
            .total;
        let l1 = |lo: usize, hi: usize| {
            let s: f64 = (0..n)
                .flat_map(|t| (lo..hi).map(move |c| (t, c)))
                .map(|(t, c)| (a[t][c] - b[t][c]).abs())
                .sum();
            s / (n * (hi - lo)) as f64
        };
        let mut vel = 0.0;
        for t in 1..n {
            for c in 0..MOTION_WIDTH {
                vel += (fps * (a[t][c] - a[t - 1][c]) - fps * (b[t][c] - b[t - 1][c])).abs();
            }
        }
        let vel = if n > 1 {
            vel / ((n - 1) * MOTION_WIDTH) as f64
        } else {
            0.0
        };
        let o = w.lambda_r * l1(0, 69)
            + w.lambda_c * commit
            + w.lambda_v * vel
            + w.lambda_rr * l1(0, 3)
            + w.lambda_p * l1(66, 69);
        ensure((got - o).abs() <= 1e-9, || {
            format!("loss case {case}: {got} vs {o}")
        })?;
        let same = vqvae_loss(&ta, &ta, commit, fps, &w)
            .map_err(|e| e.to_string())?
            .total;
        ensure(same == w.lambda_c * commit, || {
            format!("identical loss {same}")
        })?;
    }
    let defaults = (w.lambda_r, w.lambda_c, w.lambda_v, w.lambda_rr, w.lambda_p);
    ensure(defaults == (1.0, 0.02, 0.10, 0.5, 0.8), || {
        format!("defaults {defaults:?}")
    })?;
    Ok("1000 quantize cases, 200 loss oracle cases, identical-tensor commitment, defaults".into())
}

fn metrics_suite() -> Check {
    let mut rng = rng(6006);
    for case in 0..200 {
        let n = rng.random_range(1..20);
        let base = random_clip(&mut rng, "b", n, 1);
        let r = base.robot_frames().unwrap();
        let mut d = [0.0; 3];
        d[case % 3] = rng.random_range(0.0..1.0);
        let (dj, dv) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        // Offsets added to zero-valued fields so every difference is the
        // offset itself.
        let zero: Vec<RobotFrame<f64>> = vec![RobotFrame::zeroed(N_BODIES, 0); n];
        let a: Vec<RobotFrame<f64>> = zero
            .iter()
            .map(|f| {
                let mut g = f.translated(d);
                g.joint_pos = vec![dj; 29];
                g.joint_vel = vec![dv; 29];
                g
            })
            .collect();
        let p = TrajectoryPair::new(&zero, &a).unwrap();
        let m = (mpjpe(&p), mpjae(&p), mpjve(&p));
        ensure(m == (d[case % 3], dj, dv), || format!("case {case}: {m:?}"))?;
        let same = TrajectoryPair::new(r, r).unwrap();
        ensure(
            (mpjpe(&same), mpjae(&same), mpjve(&same)) == (0.0, 0.0, 0.0),
            || format!("case {case}: identical"),
        )?;
    }

    let clips: Vec<_> = (0..10)
        .map(|k| {
            let n = rng.random_range(1..12);
            let level = rng.random_range(1..=3u8);
            (
                random_clip(&mut rng, &format!("r{k}"), n, level),
                random_clip(&mut rng, "a", n, level),
            )
        })
        .collect();
    let pairs: Vec<LabeledPair<f64>> = clips
        .iter()
        .map(|(r, a)| LabeledPair {
            name: &r.name,
            level: r.difficulty,
            pair: TrajectoryPair::new(r.robot_frames().unwrap(), a.robot_frames().unwrap())
                .unwrap(),
        })
        .collect();
    let report = per_level_report(&pairs, AngleErrorMode::JointAngle);
    let mut flat_p = Vec::new();
    for (r, a) in &clips {
        for (fr, fa) in r
            .robot_frames()
            .unwrap()
            .iter()
            .zip(a.robot_frames().unwrap())
        {
            for b in 0..N_BODIES {
                flat_p.push(dist_sq(fr.body_pos[b], fa.body_pos[b]).sqrt());
            }
        }
    }
    let oracle = flat_p.iter().sum::<f64>() / flat_p.len() as f64;
    ensure((report.overall.mpjpe - oracle).abs() <= 1e-9, || {
        format!("pooled {} vs {oracle}", report.overall.mpjpe)
    })?;
    Ok("200 exact offset cases, identical pairs zero, pooled mean matches flat oracle".into())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/small_run.toml");
    let mut outputs = Vec::new();
    for name in ["first", "second"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mtrack"))
            .args([
                "run-sim",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "-q",
            ])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        let mut bytes = fs::read(out.join("iterations.csv")).map_err(|e| e.to_string())?;
        bytes.extend(fs::read(out.join("clips.csv")).map_err(|e| e.to_string())?);
        outputs.push(bytes);
    }
    ensure(outputs[0] == outputs[1], || {
        "CSV output differs between invocations".into()
    })?;
    Ok(format!(
        "two invocations, {} identical CSV bytes",
        outputs[0].len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("scheduler math", scheduler_math, Duration::from_secs(5)),
        (
            "curriculum dynamics",
            curriculum_dynamics,
            Duration::from_secs(30),
        ),
        (
            "adaptive vs uniform",
            adaptive_vs_uniform,
            Duration::from_secs(120),
        ),
        ("reward suite", reward_suite, Duration::MAX),
        ("observation suite", observation_suite, Duration::MAX),
        ("tokenizer suite", tokenizer_suite, Duration::MAX),
        ("metrics suite", metrics_suite, Duration::MAX),
        ("determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > budget => {
                Err(format!("{detail}; took {took:.2?}, budget {budget:.0?}"))
            }
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} ({took:.2?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} ({took:.2?})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
