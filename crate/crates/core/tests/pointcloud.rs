mod common;

use ortk_core::pointcloud::{crop_range, grid_dims, voxel_downsample, voxelize, Point, PointCloud, RangeSpec, DEFAULT_RANGE};
use proptest::prelude::*;

use common::*;

#[test]
fn downsample_matches_grouping_oracle() {
    for (seed, leaf) in [(1, 0.05), (2, 0.2), (3, 0.5)] {
        let cloud = random_cloud(&mut rng(seed), 10_000, -3.0, 3.0);
        let got = voxel_downsample(&cloud, leaf).unwrap();
        let groups = oracle_group(&cloud.points, [0.0; 3], [leaf; 3]);
        assert_eq!(got.points.len(), groups.len(), "leaf {leaf}");
        for (p, (_, members)) in got.points.iter().zip(&groups) {
            let n = members.len() as f64;
            let mean = |f: fn(&Point) -> f32| members.iter().map(|&i| f64::from(f(&cloud.points[i]))).sum::<f64>() / n;
            assert!((f64::from(p.x) - mean(|q| q.x)).abs() < 1e-6);
            assert!((f64::from(p.y) - mean(|q| q.y)).abs() < 1e-6);
            assert!((f64::from(p.z) - mean(|q| q.z)).abs() < 1e-6);
            assert!((f64::from(p.intensity) - mean(|q| q.intensity)).abs() < 1e-6);
        }
    }
}

#[test]
fn crop_matches_oracle() {
    let cloud = random_cloud(&mut rng(4), 10_000, -5.0, 5.0);
    for range in [DEFAULT_RANGE, RangeSpec::parse("-1,1,-2,0.5,0,4").unwrap()] {
        let got = crop_range(&cloud, &range);
        let want = oracle_crop(&cloud.points, &range);
        assert_eq!(got.points, want);
    }
}

#[test]
fn crop_is_half_open() {
    let range = RangeSpec::new([0.0; 3], [1.0; 3]).unwrap();
    let cloud = PointCloud::new(
        "edge",
        vec![Point::new(0.0, 0.0, 0.0, 0.0), Point::new(1.0, 0.5, 0.5, 0.0), Point::new(0.5, 0.5, 0.999, 0.0)],
    );
    assert_eq!(crop_range(&cloud, &range).points.len(), 2);
}

#[test]
fn voxelize_matches_bucketing_oracle() {
    let cloud = random_cloud(&mut rng(5), 10_000, -3.5, 3.5);
    for (size, max_pts) in [([0.5; 3], 5), ([0.3, 0.4, 0.7], 32), ([1.0; 3], 1000)] {
        let grid = voxelize(&cloud, size, &DEFAULT_RANGE, max_pts).unwrap();
        let inside = oracle_crop(&cloud.points, &DEFAULT_RANGE);
        let indexed: Vec<usize> = (0..cloud.points.len())
            .filter(|&i| DEFAULT_RANGE.contains(&cloud.points[i]))
            .collect();
        assert_eq!(indexed.len(), inside.len());
        let groups = oracle_group(&inside, DEFAULT_RANGE.min, size);
        assert_eq!(grid.voxels.len(), groups.len());
        for (v, (cell, members)) in grid.voxels.iter().zip(&groups) {
            assert_eq!(v.index.map(|i| i as i64), *cell);
            assert_eq!(v.count, members.len());
            let kept: Vec<Point> = members.iter().take(max_pts).map(|&i| inside[i]).collect();
            assert_eq!(v.points, kept);
            let (lo, hi) = grid.voxel_bounds(v.index);
            for p in &v.points {
                let c = p.xyz();
                for a in 0..3 {
                    assert!(c[a] >= lo[a] - 1e-6 && c[a] < hi[a] + 1e-6);
                }
            }
        }
        assert_eq!(grid.summary().points_in_range, inside.len());
    }
}

#[test]
fn grid_dims_reference() {
    assert_eq!(grid_dims(&DEFAULT_RANGE, [0.05; 3]), [120, 120, 60]);
    let r = RangeSpec::parse("0,1,0,1,0,1").unwrap();
    assert_eq!(grid_dims(&r, [0.3; 3]), [4, 4, 4]);
    assert_eq!(grid_dims(&r, [1.0; 3]), [1, 1, 1]);
    let road = RangeSpec::parse("0,70.4,-40,40,-3,1").unwrap();
    assert_eq!(grid_dims(&road, [0.05, 0.05, 0.1]), [1408, 1600, 40]);
}

#[test]
fn invalid_parameters() {
    let cloud = random_cloud(&mut rng(1), 10, 0.0, 1.0);
    assert!(voxel_downsample(&cloud, 0.0).is_err());
    assert!(voxelize(&cloud, [0.1, -1.0, 0.1], &DEFAULT_RANGE, 5).is_err());
    assert!(voxelize(&cloud, [0.1; 3], &DEFAULT_RANGE, 0).is_err());
    assert!(RangeSpec::parse("1,0,0,1,0,1").is_err());
    assert!(RangeSpec::parse("0,1,0,1").is_err());
}

proptest! {
    #[test]
    fn grid_dims_are_ceilings(extent in prop::array::uniform3(0.1..50.0f64), size in prop::array::uniform3(0.01..3.0f64)) {
        let r = RangeSpec::new([0.0; 3], extent).unwrap();
        let d = grid_dims(&r, size);
        for a in 0..3 {
            prop_assert_eq!(d[a], (extent[a] / size[a]).ceil() as usize);
        }
    }

    #[test]
    fn downsample_never_grows(seed in 0u64..1000, leaf in 0.01..2.0f64) {
        let cloud = random_cloud(&mut rng(seed), 300, -2.0, 2.0);
        let out = voxel_downsample(&cloud, leaf).unwrap();
        prop_assert!(out.points.len() <= cloud.points.len());
        prop_assert!(!out.points.is_empty());
    }
}
