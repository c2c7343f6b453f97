mod support;

use std::fs;
use std::path::Path;

use grasp_core::camera::CameraGridSpec;
use grasp_core::dataset_io::{
    read_gray8_png, read_labels_png, read_view, write_view, DatasetManifest, Pfm, LABELS_FILE,
    MANIFEST_FILE,
};
use grasp_core::grasp::{generate_dataset, on_stride, GenerateOptions, LABEL_INDETERMINATE};
use grasp_core::{Error, Grid};
use support::*;

fn small_options(res: usize, stride: usize) -> GenerateOptions {
    GenerateOptions {
        grid: canonical_grid(),
        look_at_target: V::from(AIM),
        intrinsics: square_intrinsics(res),
        stride,
        ..Default::default()
    }
}

fn all_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().display().to_string(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn small_grid_labels_only_sampled_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&canonical_scene(32), &small_options(64, 8), dir.path()).unwrap();
    assert_eq!(m.views.len(), 4);
    assert_eq!(m.stride, 8);
    for rec in &m.views {
        let loaded = read_view(&dir.path().join(rec.dir())).unwrap();
        let labels = loaded.labels.unwrap().labels;
        let mut attempted = 0;
        for (u, v, &l) in labels.iter_pixels() {
            let sampled =
                on_stride(u, v, 8) && *loaded.view.segmentation.get(u, v) == TARGET as u16;
            assert_eq!(l != LABEL_INDETERMINATE, sampled);
            attempted += usize::from(sampled);
        }
        assert_eq!(rec.attempted_pixels, attempted);
        assert!(attempted > 0);
    }
}

#[test]
fn rerun_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut opts = small_options(32, 4);
    opts.grid.jitter_xy = [-0.03, 0.03];
    opts.grid.jitter_z = [0.0, 0.09];
    generate_dataset(&canonical_scene(32), &opts, a.path()).unwrap();
    generate_dataset(&canonical_scene(32), &opts, b.path()).unwrap();
    let (fa, fb) = (all_files(a.path()), all_files(b.path()));
    assert_eq!(fa.len(), 4 * 6 + 1);
    assert_eq!(fa, fb);
}

#[test]
fn view_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let scene = grasp_core::geometry::AcceleratedScene::build(&canonical_scene(32)).unwrap();
    let view =
        grasp_core::render::render_view(&scene, &canonical_poses()[0], &square_intrinsics(48));
    let labels = grasp_core::grasp::label_view(
        &scene,
        &view,
        &Default::default(),
        &Default::default(),
        TARGET,
        2,
    )
    .unwrap();
    write_view(&view, Some(&labels), TARGET, dir.path()).unwrap();
    let back = read_view(dir.path()).unwrap();
    assert_eq!(back.target_id, TARGET);
    assert_eq!(back.labels.as_ref().unwrap().labels, labels.labels);
    assert_eq!(back.view.segmentation, view.segmentation);
    for (a, b) in back.view.depth.as_slice().iter().zip(view.depth.as_slice()) {
        assert_eq!(a.to_bits(), f64::from(*b as f32).to_bits());
    }
    for (a, b) in back
        .view
        .normals
        .as_slice()
        .iter()
        .zip(view.normals.as_slice())
    {
        for k in 0..3 {
            assert_eq!(a[k], f64::from(b[k] as f32));
        }
    }
    for (a, b) in back.view.rgb.as_slice().iter().zip(view.rgb.as_slice()) {
        for k in 0..3 {
            assert_eq!((a[k] * 255.0).round(), (b[k] * 255.0).round());
        }
    }
    // metadata floats are stored with 9 significant digits
    assert!((back.view.camera_pose.position - view.camera_pose.position).norm() < 1e-8);
    assert!(
        back.view
            .camera_pose
            .orientation
            .distance(&view.camera_pose.orientation)
            < 1e-8
    );
    // a second pass through the files changes nothing
    let dir2 = tempfile::tempdir().unwrap();
    write_view(&back.view, back.labels.as_ref(), TARGET, dir2.path()).unwrap();
    assert_eq!(all_files(dir.path()), all_files(dir2.path()));
}

#[test]
fn depth_value_survives_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.pfm");
    let depth = Grid::from_vec(1, 1, vec![f64::from(0.123_456_79_f32)]).unwrap();
    grasp_core::dataset_io::write_depth_pfm(&path, &depth).unwrap();
    let back = grasp_core::dataset_io::read_depth_pfm(&path).unwrap();
    assert_eq!(
        (*back.get(0, 0) as f32).to_bits(),
        0.123_456_79_f32.to_bits()
    );
}

#[test]
fn label_bytes_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&canonical_scene(32), &small_options(64, 4), dir.path()).unwrap();
    let path = dir.path().join(&m.views[0].labels);
    let bytes = read_gray8_png(&path).unwrap();
    let labels = read_labels_png(&path).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for (b, l) in bytes.as_slice().iter().zip(labels.as_slice()) {
        let expected = match l {
            1 => 255,
            0 => 0,
            _ => 128,
        };
        assert_eq!(*b, expected);
        seen.insert(*l);
    }
    assert!(seen.contains(&1) && seen.contains(&-1));
}

#[test]
fn damaged_datasets_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&canonical_scene(16), &small_options(32, 4), dir.path()).unwrap();
    let view_dir = dir.path().join(m.views[0].dir());

    let depth = view_dir.join("depth.pfm");
    let bytes = fs::read(&depth).unwrap();
    fs::write(&depth, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(
        read_view(&view_dir),
        Err(Error::Malformed { format: "pfm", .. })
    ));
    fs::write(&depth, &bytes).unwrap();

    let labels = view_dir.join(LABELS_FILE);
    let good = fs::read(&labels).unwrap();
    grasp_core::dataset_io::write_gray8_png(&labels, &Grid::new(32, 32, 7)).unwrap();
    assert!(matches!(
        read_view(&view_dir),
        Err(Error::InvalidLabelByte(7))
    ));
    // a label on a background pixel breaks channel support
    let mut off = read_labels_png_bytes(&good);
    let bg = off.iter().position(|&b| b == 128).unwrap();
    off[bg] = 255;
    grasp_core::dataset_io::write_gray8_png(&labels, &Grid::from_vec(32, 32, off).unwrap())
        .unwrap();
    let seg =
        grasp_core::dataset_io::read_segmentation_png(&view_dir.join("segmentation.png")).unwrap();
    if seg.as_slice()[bg] != TARGET as u16 {
        assert!(matches!(
            read_view(&view_dir),
            Err(Error::ChannelSupport(_))
        ));
    }
    fs::write(&labels, &good).unwrap();

    fs::remove_file(view_dir.join("rgb.png")).unwrap();
    let err = DatasetManifest::read(dir.path()).unwrap_err();
    assert!(matches!(err, Error::MissingFile(_)) && err.is_io());
}

fn read_labels_png_bytes(png: &[u8]) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.png");
    fs::write(&p, png).unwrap();
    read_gray8_png(&p).unwrap().into_vec()
}

#[test]
fn full_grid_manifest_has_1000_views() {
    let dir = tempfile::tempdir().unwrap();
    let opts = GenerateOptions {
        grid: CameraGridSpec {
            z_range: [0.05, 0.5],
            ..CameraGridSpec::default()
        },
        intrinsics: square_intrinsics(4),
        stride: 2,
        ..Default::default()
    };
    let m = generate_dataset(&canonical_scene(8), &opts, dir.path()).unwrap();
    assert_eq!(m.views.len(), 1000);
    let back = DatasetManifest::read(dir.path()).unwrap();
    assert_eq!(back.views.len(), 1000);
    assert_eq!(back.grid.seed, 42);
    let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(text.contains("\"prng\""));
    assert!(text.contains("\"view_0999/labels.png\""));
}

#[test]
fn manifest_round_trips_through_pfm_readers() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&canonical_scene(16), &small_options(16, 1), dir.path()).unwrap();
    let pfm = Pfm::read(&dir.path().join(&m.views[0].normals)).unwrap();
    assert_eq!((pfm.width, pfm.height, pfm.channels), (16, 16, 3));
}
