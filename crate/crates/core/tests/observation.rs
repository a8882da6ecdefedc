mod common;

use common::*;
use mtrack::observation::{
    build_command, build_observation, offset_table, quat_to_6d, target_frame, CommandLayout,
    Proprioception, OBSERVATION_DIM, TARGET_FRAME_DIM,
};
use proptest::prelude::*;
use rand::Rng;

fn random_proprio(rng: &mut rand_chacha::ChaCha8Rng) -> Proprioception<f64> {
    let q = unit_quat(rng);
    let mut v = |n: usize| {
        (0..n)
            .map(|_| rng.random_range(-3.0..3.0))
            .collect::<Vec<f64>>()
    };
    Proprioception {
        anchor_ori_6d: quat_to_6d(q).unwrap().to_vec(),
        base_ang_vel: v(3),
        joint_pos: v(29),
        joint_vel: v(29),
        prev_actions: v(29),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn layout_and_round_trip(seed in any::<u64>(), n_frames in 1usize..40, t_pick in any::<usize>()) {
        let mut rng = rng(seed);
        let clip = random_clip(&mut rng, "c", n_frames, 1);
        let t = t_pick % n_frames;
        let layout = CommandLayout::default();
        let p = random_proprio(&mut rng);
        let obs = build_observation(&clip, t, &p, &layout).unwrap();
        prop_assert_eq!(obs.len(), OBSERVATION_DIM);
        let widths: Vec<usize> = offset_table().iter().map(|(_, r)| r.len()).collect();
        prop_assert_eq!(widths, vec![65, 130, 325, 6, 3, 29, 29, 29]);

        prop_assert_eq!(obs.segment("motion_anchor_ori_b").unwrap(), &p.anchor_ori_6d[..]);
        prop_assert_eq!(obs.segment("base_ang_vel").unwrap(), &p.base_ang_vel[..]);
        prop_assert_eq!(obs.segment("joint_pos").unwrap(), &p.joint_pos[..]);
        prop_assert_eq!(obs.segment("joint_vel").unwrap(), &p.joint_vel[..]);
        prop_assert_eq!(obs.segment("prev_actions").unwrap(), &p.prev_actions[..]);

        let cmd = build_command(&clip, t, &layout).unwrap();
        prop_assert_eq!(&obs.as_slice()[..520], &cmd[..]);
        let idx = layout.frame_indices(t, n_frames);
        for (slot, chunk) in cmd.chunks_exact(TARGET_FRAME_DIM).enumerate() {
            prop_assert_eq!(chunk, &target_frame(&clip, idx[slot], &layout).unwrap()[..]);
        }
        prop_assert_eq!(obs.long_horizon_rows().len(), 5);
    }

    #[test]
    fn six_d_columns_orthonormal(seed in any::<u64>()) {
        let q = unit_quat(&mut rng(seed));
        let r = quat_to_6d(q).unwrap();
        let (a, b) = ([r[0], r[1], r[2]], [r[3], r[4], r[5]]);
        let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        prop_assert!((dot(a, a) - 1.0).abs() < 1e-9);
        prop_assert!((dot(b, b) - 1.0).abs() < 1e-9);
        prop_assert!(dot(a, b).abs() < 1e-9);
        let m = rot_matrix(q);
        for i in 0..3 {
            prop_assert!((r[i] - m[i][0]).abs() < 1e-12 && (r[3 + i] - m[i][1]).abs() < 1e-12);
        }
    }
}

#[test]
fn target_frame_fields() {
    let mut rng = rng(3);
    let clip = random_clip(&mut rng, "c", 3, 1);
    let f = &clip.robot_frames().unwrap()[1];
    let tf = target_frame(&clip, 1, &CommandLayout::default()).unwrap();
    assert_eq!(&tf[..29], &f.joint_pos[..]);
    assert_eq!(&tf[29..32], &f.body_pos[0]);
    assert_eq!(&tf[32..38], &quat_to_6d(f.body_quat[0]).unwrap());
    assert_eq!(&tf[38..41], &f.body_lin_vel[0]);
    assert_eq!(&tf[41..44], &f.body_ang_vel[0]);
    // head is body 7
    let m = rot_matrix(f.body_quat[0]);
    let d = [0, 1, 2].map(|k| f.body_pos[7][k] - f.body_pos[0][k]);
    let expect = mat_t_vec(m, d);
    for k in 0..3 {
        assert!((tf[44 + k] - expect[k]).abs() < 1e-12);
    }
}

#[test]
fn unknown_key_body_is_rejected() {
    let clip = still_clip("c", 4, 1);
    let mut layout = CommandLayout::default();
    layout.key_bodies[2] = "tail".into();
    let err = build_command(&clip, 0, &layout).unwrap_err();
    assert!(err.to_string().contains("tail"));
}
