mod common;

use lvmap::eval::{
    accuracy_completeness, build_occupancy, error_plot, evaluate_clouds, occupancy_filter, precision_recall,
    sparsification, ssim_plane, EvalConfig, ObservedCloud, VoxelState,
};
use lvmap::geom::{PointCloud, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> PointCloud {
    PointCloud::from_positions((0..n).map(|_| {
        Vec3::new(rng.random::<f64>() * scale, rng.random::<f64>() * scale, rng.random::<f64>() * 0.2)
    }))
}

#[test]
fn metrics_agree_exactly_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for (n, m) in [(1, 1), (10, 300), (2000, 1500), (700, 2000)] {
        let a = random_cloud(&mut rng, n, 1.0);
        let b = random_cloud(&mut rng, m, 1.1);
        for tau in [0.05, 0.1] {
            let (acc, comp, p, r, f) = common::brute_metrics(&a, &b, tau);
            assert_eq!(accuracy_completeness(&a, &b).unwrap(), (acc, comp));
            assert_eq!(precision_recall(&a, &b, tau).unwrap(), (p, r, f));
        }
    }
}

#[test]
fn translated_plane_has_offset_accuracy() {
    // Plane x = 0 sampled on a jittered grid, shifted 0.1 along its normal.
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let grid: Vec<Vec3> = (0..50)
        .flat_map(|i| (0..50).map(move |j| (i, j)))
        .map(|(i, j)| Vec3::new(0.0, i as f64 * 0.02 + rng.random_range(0.0..0.005), j as f64 * 0.02))
        .collect();
    let reference = PointCloud::from_positions(grid.clone());
    let recon = PointCloud::from_positions(grid.iter().map(|p| p + Vec3::new(0.1, 0.0, 0.0)));
    let (acc, comp) = accuracy_completeness(&recon, &reference).unwrap();
    let oracle = common::brute_metrics(&recon, &reference, 0.05);
    assert_eq!((acc, comp), (oracle.0, oracle.1));
    assert!((acc - 0.1).abs() < 0.005 && (comp - 0.1).abs() < 0.005);
    let (p05, ..) = precision_recall(&recon, &reference, 0.05).unwrap();
    let (p10, ..) = precision_recall(&recon, &reference, 0.1000001).unwrap();
    assert_eq!(p05, 0.0);
    assert_eq!(p10, 1.0);
}

#[test]
fn ssim_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for (w, h) in [(32, 24), (11, 11), (15, 7)] {
        let a: Vec<f64> = (0..w * h).map(|_| rng.random()).collect();
        let b: Vec<f64> = a.iter().map(|v| (v + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0)).collect();
        let got = ssim_plane(&a, &b, w, h).unwrap();
        let want = common::direct_ssim(&a, &b, w, h);
        assert!((got - want).abs() < 1e-6, "{w}×{h}: {got} vs {want}");
    }
}

#[test]
fn worst_ranking_sparsification_matches_hand_computation() {
    let errors = [1.0, 2.0, 3.0, 4.0];
    let u = errors.map(|e| -e);
    let s = sparsification(&errors, &u, 4).unwrap();
    // Mean of remaining errors / 2.5 after removing 0..3 points.
    assert_eq!(s.curve, vec![1.0, 3.0 / 2.5, 3.5 / 2.5, 4.0 / 2.5]);
    assert_eq!(s.oracle, vec![1.0, 2.0 / 2.5, 1.5 / 2.5, 1.0 / 2.5]);
    let hand = ((3.0 - 2.0) + (3.5 - 1.5) + (4.0 - 1.0)) / 2.5 / 4.0;
    assert_eq!(s.ause, hand);
    assert!((s.ause - 0.6).abs() < 1e-15);
}

#[test]
fn error_plot_twelve_points() {
    let errors = [5.0, 1.0, 9.0, 2.0, 7.0, 3.0, 8.0, 4.0, 6.0, 10.0, 11.0, 12.0];
    let unc = [0.5, 0.1, 0.9, 0.2, 0.7, 0.3, 0.8, 0.4, 0.6, 1.0, 1.1, 1.2];
    let p = error_plot(&errors, &unc, 4).unwrap();
    assert_eq!(p, vec![(0.25, 2.0), (0.5, 5.0), (0.75, 8.0), (1.0, 11.0)]);
    for w in p.windows(2) {
        assert!(w[1].1 >= w[0].1);
    }
}

#[test]
fn floating_artefact_in_unknown_space_is_dropped() {
    let origin = Vec3::new(0.0, 0.0, 0.0);
    let wall: Vec<Vec3> = (0..20)
        .flat_map(|i| (0..20).map(move |j| Vec3::new(-0.5 + i as f64 * 0.05, -0.5 + j as f64 * 0.05, 2.0)))
        .collect();
    let grid = build_occupancy(&wall, &vec![origin; wall.len()], 0.05);
    assert_eq!(occupancy_filter(&PointCloud::from_positions(wall.clone()), &grid).len(), wall.len());
    let mut recon = PointCloud::from_positions(wall.clone());
    let artefact = Vec3::new(3.0, 3.0, 1.0);
    recon.points.push(lvmap::geom::CloudPoint::new(artefact, [1.0; 3]));
    assert_eq!(grid.state(&artefact), VoxelState::Unknown);
    let out = occupancy_filter(&recon, &grid);
    assert_eq!(out.len(), wall.len());
}

#[test]
fn hidden_room_is_excluded_from_completeness() {
    let cam = Vec3::new(0.0, 0.0, 0.0);
    let wall: Vec<Vec3> = (0..20)
        .flat_map(|i| (0..20).map(move |j| Vec3::new(-0.5 + i as f64 * 0.05, -0.5 + j as f64 * 0.05, 2.0)))
        .collect();
    let room: Vec<Vec3> = (0..10).map(|i| Vec3::new(-0.2 + i as f64 * 0.05, 0.0, 3.0)).collect();
    let recon = ObservedCloud::new(PointCloud::from_positions(wall.clone()), vec![cam; wall.len()]).unwrap();
    let all: Vec<Vec3> = wall.iter().chain(&room).copied().collect();
    let hidden_origin = Vec3::new(0.0, 0.0, 2.5);
    let origins: Vec<Vec3> = wall.iter().map(|_| cam).chain(room.iter().map(|_| hidden_origin)).collect();
    let reference = ObservedCloud::new(PointCloud::from_positions(all), origins).unwrap();
    let ev = evaluate_clouds(&recon, &reference, &EvalConfig::default()).unwrap();
    assert_eq!(ev.report.n_reference, wall.len());
    assert_eq!(ev.report.completeness, 0.0);
    assert_eq!(ev.report.accuracy, 0.0);

    let far = ObservedCloud::new(PointCloud::from_positions([Vec3::new(50.0, 0.0, 0.0)]), vec![Vec3::new(50.0, 0.0, -1.0)]).unwrap();
    assert!(evaluate_clouds(&far, &reference, &EvalConfig::default()).is_err());
}
