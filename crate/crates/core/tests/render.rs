mod support;

use grasp_core::camera::Intrinsics;
use grasp_core::geometry::{
    look_at, make_primitive, AcceleratedScene, Pose, Primitive, Ray, Scene, SceneObject,
    UnitQuaternion,
};
use grasp_core::render::render_view;
use support::*;

fn single(kind: Primitive, tess: usize, at: V, ground: bool) -> AcceleratedScene<f64> {
    let mesh = make_primitive(kind, tess, 1).unwrap();
    AcceleratedScene::build(
        &Scene::new(
            vec![SceneObject {
                mesh,
                pose: Pose::from_translation(at),
            }],
            ground,
        )
        .unwrap(),
    )
    .unwrap()
}

#[test]
fn sphere_center_depth() {
    let scene = single(
        Primitive::Sphere { radius: 1.0 },
        256,
        V::new(0.0, 0.0, 2.0),
        false,
    );
    let view = render_view(&scene, &Pose::identity(), &Intrinsics::gripper_camera());
    assert!((view.depth.get(320, 240) - 1.0).abs() < 1e-3);
    assert_eq!(*view.segmentation.get(320, 240), 1);
    view.validate().unwrap();
}

#[test]
fn nothing_in_view_renders_background() {
    let scene = single(
        Primitive::Sphere { radius: 0.5 },
        16,
        V::new(0.0, 0.0, -3.0),
        false,
    );
    let view = render_view(&scene, &Pose::identity(), &square_intrinsics(32));
    assert!(view.depth.as_slice().iter().all(|&z| z == 0.0));
    assert!(view.segmentation.as_slice().iter().all(|&s| s == 0));
    assert!(view.normals.as_slice().iter().all(|n| n.is_zero()));
    view.validate().unwrap();
}

#[test]
fn normals_are_rotated_face_normals() {
    let scene = AcceleratedScene::build(&canonical_scene(32)).unwrap();
    let pose = canonical_poses()[2];
    let view = render_view(&scene, &pose, &square_intrinsics(64));
    let mut hits = 0;
    for (u, v, n) in view.normals.iter_pixels() {
        let Some(hit) = scene.raycast(&view.pixel_ray(u, v)) else {
            assert!(n.is_zero());
            continue;
        };
        hits += 1;
        let expected = pose.inverse_transform_vector(&hit.face_normal);
        assert!((*n - expected).norm() < 1e-9);
        assert_eq!(
            u32::from(*view.segmentation.get(u, v)),
            hit.object_id & 0xffff
        );
    }
    assert!(hits > 0);
    view.validate().unwrap();
}

#[test]
fn fronto_parallel_plane_normals() {
    let scene = single(
        Primitive::Plane { size: [10.0, 10.0] },
        1,
        V::zeros(),
        false,
    );
    // camera 1 m above the plane looking straight down
    let pose = Pose::new(
        V::new(0.0, 0.0, 1.0),
        UnitQuaternion::from_axis_angle(&V::x_axis(), std::f64::consts::PI),
    );
    let view = render_view(&scene, &pose, &square_intrinsics(48));
    for (_, _, n) in view.normals.iter_pixels() {
        assert!((*n - V::new(0.0, 0.0, -1.0)).norm() < 1e-12);
    }
    for (_, _, &z) in view.depth.iter_pixels() {
        assert!((z - 1.0).abs() < 1e-9);
    }
}

#[test]
fn ground_depth_matches_closed_form() {
    let scene = single(
        Primitive::Sphere { radius: 0.05 },
        8,
        V::new(0.0, -50.0, 0.5),
        true,
    );
    let eye = V::new(0.0, 1.0, 0.5);
    let pose = look_at(eye, eye + V::new(0.0, -1.0, 0.0), V::z_axis()).unwrap();
    let intr = Intrinsics::gripper_camera().rescaled(160, 120).unwrap();
    let view = render_view(&scene, &pose, &intr);
    let mut checked = 0;
    for (u, v, &z) in view.depth.iter_pixels() {
        if *view.segmentation.get(u, v) == 1 {
            continue;
        }
        let d = pose.transform_vector(&intr.pixel_direction(u as f64, v as f64));
        if d.z < 0.0 {
            let expected = -eye.z / d.z;
            assert!((z - expected).abs() < 1e-6, "({u}, {v}) {z} vs {expected}");
            checked += 1;
        } else {
            assert_eq!(z, 0.0);
        }
    }
    assert!(checked > 1000);
}

#[test]
fn rendering_is_deterministic() {
    let scene = AcceleratedScene::build(&canonical_scene(64)).unwrap();
    let pose = canonical_poses()[0];
    let a = render_view(&scene, &pose, &square_intrinsics(64));
    let b = render_view(&scene, &pose, &square_intrinsics(64));
    assert_eq!(a, b);
}

#[test]
fn view_ray_hits_rendered_depth() {
    let scene = AcceleratedScene::build(&canonical_scene(64)).unwrap();
    let pose = canonical_poses()[3];
    let view = render_view(&scene, &pose, &square_intrinsics(64));
    let (u, v) = (32, 32);
    let ray: Ray<f64> = view.pixel_ray(u, v);
    let hit = scene.raycast(&ray).unwrap();
    let p_cam = pose.inverse_transform_point(&hit.point);
    assert!((p_cam.z - view.depth.get(u, v)).abs() < 1e-12);
}
