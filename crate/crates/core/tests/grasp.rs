mod support;

use grasp_core::camera::PixelCoord;
use grasp_core::geometry::{
    make_primitive, AcceleratedScene, OrientedBox, Pose, Primitive, Scene, SceneObject,
    UnitQuaternion,
};
use grasp_core::grasp::{
    attempt_grasp, closing_sweep, label_view, on_stride, plan_grasp_pose, FailureReason, Finger,
    GraspConfig, GraspPose, GripperModel, LABEL_INDETERMINATE, LABEL_SUCCESS,
};
use grasp_core::render::render_view;
use grasp_core::Error;
use proptest::prelude::*;
use support::*;

fn side_grasp(z: f64, azimuth: f64) -> GraspPose {
    let n = V::new(azimuth.cos(), azimuth.sin(), 0.0);
    let p = n * CYL_RADIUS + V::new(0.0, 0.0, z);
    GraspPose::at(
        PixelCoord::new(0.0, 0.0),
        p,
        n,
        &V::x_axis(),
        &GraspConfig::default(),
    )
    .unwrap()
}

fn canonical() -> AcceleratedScene<f64> {
    AcceleratedScene::build(&canonical_scene(64)).unwrap()
}

#[test]
fn grasp_pose_offsets_and_roll() {
    let g = GraspPose::at(
        PixelCoord::new(0.0, 0.0),
        V::new(0.0, 0.04, 0.15),
        V::new(0.0, 1.0, 0.0),
        &V::x_axis(),
        &GraspConfig::default(),
    )
    .unwrap();
    assert!((g.gripper_pose.position - V::new(0.0, 0.39, 0.15)).norm() < 1e-12);
    assert!((g.approach_axis() - V::new(0.0, -1.0, 0.0)).norm() < 1e-9);
    assert!((g.jaw_axis() - V::x_axis()).norm() < 1e-9);
    assert!((g.staging_pose.position - V::new(0.0, 1.04, 0.15)).norm() < 1e-12);
    assert_eq!(g.staging_distance, 1.0);
}

#[test]
fn equatorial_cylinder_grasp_succeeds_with_both_fingers() {
    let scene = canonical();
    let gripper = GripperModel::default();
    let target = object_triangles(&scene, TARGET);
    // azimuth on a facet center so the mesh and the ideal cylinder share the normal
    let az = std::f64::consts::TAU / 64.0 * 0.5;
    let g = side_grasp(0.15, az);
    let out = attempt_grasp(&scene, &g, &gripper, TARGET);
    assert!(out.success, "{out:?}");
    assert_eq!(out.failure_reason, FailureReason::None);
    for f in [Finger::Left, Finger::Right] {
        assert!(voxel_pad_contacts(&target, &g, &gripper, f) >= gripper.contact_min);
    }
}

#[test]
fn wide_box_exceeds_aperture() {
    let mesh = make_primitive(
        Primitive::Box {
            size: [0.2, 0.2, 0.2],
        },
        4,
        1,
    )
    .unwrap();
    let scene = Scene::new(
        vec![SceneObject {
            mesh,
            pose: Pose::from_translation(V::new(0.0, 0.0, 0.3)),
        }],
        true,
    )
    .unwrap();
    let accel = AcceleratedScene::build(&scene).unwrap();
    let g = GraspPose::at(
        PixelCoord::new(0.0, 0.0),
        V::new(0.0, 0.1, 0.3),
        V::y_axis(),
        &V::x_axis(),
        &GraspConfig::default(),
    )
    .unwrap();
    let out = attempt_grasp(&accel, &g, &GripperModel::default(), 1);
    assert_eq!(out.failure_reason, FailureReason::ApertureExceeded);
    assert!(!out.success);
}

#[test]
fn grasp_at_base_hits_ground() {
    let scene = canonical();
    let g = side_grasp(0.005, 0.3);
    let gripper = GripperModel::default();
    assert!(lowest_body_point(&g, &gripper) < 0.0);
    let out = attempt_grasp(&scene, &g, &gripper, TARGET);
    assert_eq!(out.failure_reason, FailureReason::ExternalCollision);
}

#[test]
fn attempts_are_pure() {
    let scene = canonical();
    let g = side_grasp(0.2, 1.0);
    let gripper = GripperModel::default();
    let first = attempt_grasp(&scene, &g, &gripper, TARGET);
    for _ in 0..5 {
        assert_eq!(attempt_grasp(&scene, &g, &gripper, TARGET), first);
    }
}

#[test]
fn label_support_and_mid_height_center() {
    let scene = canonical();
    let intr = square_intrinsics(64);
    for pose in canonical_poses() {
        let view = render_view(&scene, &pose, &intr);
        let labels = label_view(
            &scene,
            &view,
            &GripperModel::default(),
            &GraspConfig::default(),
            TARGET,
            4,
        )
        .unwrap();
        let mut sampled = 0;
        let mut unsampled = 0;
        for (u, v, &l) in labels.labels.iter_pixels() {
            let on_target = u32::from(*view.segmentation.get(u, v)) == TARGET;
            match (on_target, on_stride(u, v, 4)) {
                (true, true) => {
                    sampled += 1;
                    assert_ne!(l, LABEL_INDETERMINATE);
                }
                (true, false) => {
                    unsampled += 1;
                    assert_eq!(l, LABEL_INDETERMINATE);
                }
                _ => assert_eq!(l, LABEL_INDETERMINATE),
            }
        }
        assert_eq!(labels.attempted, sampled);
        assert_eq!(labels.unsampled_object_pixels, unsampled);
        // the optical axis passes through the cylinder axis at mid-height
        assert_eq!(*view.segmentation.get(32, 32), TARGET as u16);
        assert_eq!(*labels.labels.get(32, 32), LABEL_SUCCESS);
    }
}

fn lowest_body_point(g: &GraspPose, gripper: &GripperModel) -> f64 {
    gripper
        .body_boxes()
        .iter()
        .flat_map(|b| OrientedBox::new(g.gripper_pose.compose(&b.pose), b.half_extents).corners())
        .map(|c| c.z)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn base_adjacent_pixels_collide_with_ground() {
    let scene = canonical();
    let gripper = GripperModel::default();
    let mut grounded = 0;
    for pose in canonical_poses() {
        let view = render_view(&scene, &pose, &square_intrinsics(64));
        let labels =
            label_view(&scene, &view, &gripper, &GraspConfig::default(), TARGET, 4).unwrap();
        for (u, v, o) in labels.outcomes.iter_pixels() {
            let Some(o) = o else { continue };
            let g = plan_grasp_pose(
                PixelCoord::from_index(u, v),
                &view,
                TARGET,
                &GraspConfig::default(),
            )
            .unwrap();
            if lowest_body_point(&g, &gripper) < 0.0 {
                grounded += 1;
                assert_eq!(*labels.labels.get(u, v), 0);
                assert_eq!(
                    o.failure_reason,
                    FailureReason::ExternalCollision,
                    "pixel ({u}, {v})"
                );
            }
        }
    }
    assert!(grounded > 0);
}

#[test]
fn background_only_view_is_all_indeterminate() {
    let scene = canonical();
    let pose =
        grasp_core::geometry::look_at(V::new(0.0, 1.0, 0.5), V::new(0.0, 2.0, 0.6), V::z_axis())
            .unwrap();
    let view = render_view(&scene, &pose, &square_intrinsics(32));
    assert!(view
        .segmentation
        .as_slice()
        .iter()
        .all(|&s| s != TARGET as u16));
    let labels = label_view(
        &scene,
        &view,
        &GripperModel::default(),
        &GraspConfig::default(),
        TARGET,
        1,
    )
    .unwrap();
    assert!(labels
        .labels
        .as_slice()
        .iter()
        .all(|&l| l == LABEL_INDETERMINATE));
    assert!(matches!(
        label_view(
            &scene,
            &view,
            &GripperModel::default(),
            &GraspConfig::default(),
            9,
            1
        ),
        Err(Error::TargetAbsent(9))
    ));
}

#[test]
fn off_object_and_invalid_pixels_rejected() {
    let scene = canonical();
    let view = render_view(&scene, &canonical_poses()[0], &square_intrinsics(64));
    let bg = view
        .segmentation
        .iter_pixels()
        .find(|p| *p.2 == 0)
        .map(|p| (p.0, p.1))
        .unwrap();
    let r = plan_grasp_pose(
        PixelCoord::from_index(bg.0, bg.1),
        &view,
        TARGET,
        &GraspConfig::default(),
    );
    assert!(matches!(r, Err(Error::PixelOffObject { .. })));
    let mut broken = view.clone();
    broken.depth.set(32, 32, 0.0);
    let r = plan_grasp_pose(
        PixelCoord::from_index(32, 32),
        &broken,
        TARGET,
        &GraspConfig::default(),
    );
    assert!(matches!(
        r,
        Err(Error::InvalidPixelGeometry { u: 32, v: 32 })
    ));
}

#[test]
fn sweep_matches_voxel_oracle() {
    let scene = canonical();
    let target = object_triangles(&scene, TARGET);
    let gripper = GripperModel::default();
    let mut checked = 0;
    for pose in canonical_poses() {
        let view = render_view(&scene, &pose, &square_intrinsics(64));
        for v in (0..64).step_by(4) {
            for u in (0..64).step_by(4) {
                let Ok(g) = plan_grasp_pose(
                    PixelCoord::from_index(u, v),
                    &view,
                    TARGET,
                    &GraspConfig::default(),
                ) else {
                    continue;
                };
                let sweep = closing_sweep(&scene, &g, &gripper, TARGET);
                let left =
                    voxel_pad_contacts(&target, &g, &gripper, Finger::Left) >= gripper.contact_min;
                let right =
                    voxel_pad_contacts(&target, &g, &gripper, Finger::Right) >= gripper.contact_min;
                assert_eq!(
                    (sweep.left_contact(), sweep.right_contact()),
                    (left, right),
                    "pixel ({u}, {v})"
                );
                checked += 1;
            }
        }
    }
    assert!(checked >= 20, "{checked}");
}

fn relabel(scene: &Scene<f64>, motion: &Pose<f64>, stride: usize) -> Vec<grasp_core::Grid<i8>> {
    let moved = AcceleratedScene::build(&scene.transformed(motion)).unwrap();
    canonical_poses()
        .iter()
        .map(|p| {
            let view = render_view(&moved, &motion.compose(p), &square_intrinsics(64));
            label_view(
                &moved,
                &view,
                &GripperModel::default(),
                &GraspConfig::default(),
                TARGET,
                stride,
            )
            .unwrap()
            .labels
        })
        .collect()
}

#[test]
fn labels_invariant_under_rigid_motion() {
    let scene = canonical_scene(64);
    let base = relabel(&scene, &Pose::identity(), 8);
    let shifted = relabel(&scene, &Pose::from_translation(V::new(0.3, -0.2, 0.0)), 8);
    let yaw = Pose::new(
        V::zeros(),
        UnitQuaternion::from_axis_angle(&V::z_axis(), 30f64.to_radians()),
    );
    let turned = relabel(&scene, &yaw, 8);
    assert_eq!(base, shifted);
    assert_eq!(base, turned);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sweep_contact_monotone_in_aperture(
        z in 0.02f64..0.28, az in 0.0f64..std::f64::consts::TAU, a in 0.085f64..0.2, extra in 0.0f64..0.1
    ) {
        let scene = canonical();
        let g = side_grasp(z, az);
        let narrow = GripperModel::default().with_aperture(a);
        let wide = GripperModel::default().with_aperture(a + extra);
        let s1 = closing_sweep(&scene, &g, &narrow, TARGET);
        let s2 = closing_sweep(&scene, &g, &wide, TARGET);
        if s1.left_contact() && s1.right_contact() {
            prop_assert!(s2.left_contact() && s2.right_contact());
        }
    }
}
