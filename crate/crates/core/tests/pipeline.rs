use poreseg::components::{analyze, Component, Connectivity, StoneReport};
use poreseg::filters::{apply_filter, FilterFamily, FilterSpec};
use poreseg::grid::{FamilyGrid, ParameterGrid, SweepAxis, SweepGrid};
use poreseg::io::{load_binary, load_volume, save_binary, save_volume};
use poreseg::phantom::{add_noise, generate_phantom, NoiseModel, NoiseSpec, PhantomSpec, POROSITY_TOLERANCE};
use poreseg::postprocess::{resolve_stones, StoneAction};
use poreseg::segmentation::{binarize_bins, histogram, unbalanced_otsu_threshold};
use poreseg::selection::{
    calibrate_delta_max, distortion, evaluate_config, grid_search, param_sweep_report, EvalOptions,
};
use poreseg::volume::{BinaryVolume, Dims, Volume};
use poreseg_oracles as oracle;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_load_round_trip(nx in 1usize..6, ny in 1usize..6, nz in 1usize..6, seed in any::<u64>()) {
        let mut rng = oracle::rng(seed);
        let v = oracle::random_volume(&mut rng, Dims::new(nx, ny, nz).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.raw");
        save_volume(&v, &path).unwrap();
        prop_assert_eq!(load_volume(&path).unwrap(), v);
    }

    #[test]
    fn distortion_is_a_scaled_metric(seed in any::<u64>()) {
        let mut rng = oracle::rng(seed);
        let d = Dims::new(4, 3, 2).unwrap();
        let (a, b, c) = (
            oracle::random_volume(&mut rng, d),
            oracle::random_volume(&mut rng, d),
            oracle::random_volume(&mut rng, d),
        );
        let ab = distortion(&a, &b).unwrap();
        prop_assert!((ab - oracle::distortion(&a, &b)).abs() <= 1e-12);
        prop_assert_eq!(ab, distortion(&b, &a).unwrap());
        prop_assert_eq!(distortion(&a, &a).unwrap(), 0.0);
        prop_assert!(ab <= distortion(&a, &c).unwrap() + distortion(&c, &b).unwrap() + 1e-12);
    }
}

#[test]
fn binary_round_trip() {
    let mut rng = oracle::rng(40);
    let b = oracle::random_binary(&mut rng, Dims::new(7, 5, 3).unwrap(), 0.4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.raw");
    save_binary(&b, &path).unwrap();
    assert_eq!(load_binary(&path).unwrap(), b);
}

#[test]
fn slices_enumerate_in_order() {
    let mut rng = oracle::rng(41);
    let v = oracle::random_volume(&mut rng, Dims::new(3, 4, 5).unwrap());
    let slices: Vec<_> = v.slices().collect();
    assert_eq!(slices.len(), 5);
    for (z, s) in slices.iter().enumerate() {
        for y in 0..4 {
            for x in 0..3 {
                assert_eq!(s.get(x, y), v.get(x, y, z));
            }
        }
    }
}

#[test]
fn calibration_is_median_distortion() {
    let mut rng = oracle::rng(42);
    let v = oracle::random_volume(&mut rng, Dims::cube(8).unwrap());
    let filtered = apply_filter(&v, &FilterSpec::Median { h: 3, w: 3 }).unwrap();
    let want = oracle::distortion(&v, &filtered);
    assert!((calibrate_delta_max(&v).unwrap() - want).abs() <= 1e-12);
}

fn noisy_phantom(n: usize, p: f64) -> Volume {
    let clean = generate_phantom(&PhantomSpec {
        dims: Dims::cube(n).unwrap(),
        grain_radius: (4.0, 6.0),
        seed: 3,
        ..PhantomSpec::default()
    })
    .unwrap();
    add_noise(&clean.volume, &NoiseSpec { model: NoiseModel::SaltPepper { p, salt: 255.0, pepper: 0.0 }, seed: 4 })
        .unwrap()
}

#[test]
fn evaluation_composes_its_stages() {
    let v = noisy_phantom(20, 0.01);
    let spec: FilterSpec = "bilateral:h=3,w=3,sigma_s=1,sigma_r=0.3".parse().unwrap();
    let got = evaluate_config(&v, &spec, &EvalOptions::default()).unwrap();

    let filtered = apply_filter(&v, &spec).unwrap();
    let t = unbalanced_otsu_threshold(&histogram(&filtered)).unwrap().t;
    let b = binarize_bins(&filtered, t);
    let parts = oracle::flood_fill_partition(&b, 26);
    let largest = parts.iter().map(|p| p.len()).max().unwrap();
    assert_eq!(got.delta, distortion(&v, &filtered).unwrap());
    assert_eq!(got.threshold_used, t);
    assert_eq!(got.total_stones, parts.len() - 1);
    let singles = parts.iter().filter(|p| p.len() == 1).count() - usize::from(largest == 1);
    assert_eq!(got.one_voxel_stones, singles);
}

#[test]
fn grid_search_enumerates_and_ranks() {
    let v = noisy_phantom(16, 0.01);
    let grid = ParameterGrid {
        families: vec![
            FamilyGrid::new(FilterFamily::Median, vec![vec![1.0, 3.0], vec![1.0, 3.0, 5.0]]).unwrap(),
            FamilyGrid::new(FilterFamily::Guided, vec![vec![3.0, 5.0], vec![0.01, 0.1]]).unwrap(),
        ],
    };
    let opts = EvalOptions::default();
    let delta_max = calibrate_delta_max(&v).unwrap();
    let result = grid_search(&v, &grid, delta_max, &opts).unwrap();
    let points = grid.points().unwrap();
    assert_eq!(result.evaluations.len(), 10);
    for (e, spec) in result.evaluations.iter().zip(&points) {
        assert_eq!(&e.spec, spec);
        assert_eq!(*e, evaluate_config(&v, spec, &opts).unwrap());
    }
    for fw in &result.best_per_family {
        let feasible: Vec<_> =
            result.evaluations.iter().filter(|e| e.spec.family() == fw.family && e.delta <= delta_max).collect();
        match &fw.winner {
            None => assert!(feasible.is_empty()),
            Some(w) => {
                for e in feasible {
                    let key = |e: &poreseg::selection::Evaluation| (e.one_voxel_stones, e.delta, e.total_stones);
                    assert!(key(w) <= key(e));
                }
            }
        }
    }
    let infeasible = grid_search(&v, &grid, 0.0, &opts).unwrap();
    // Only the identity point has zero distortion.
    assert_eq!(infeasible.winner(FilterFamily::Median).unwrap().spec, FilterSpec::IDENTITY);
    assert!(infeasible.winner(FilterFamily::Guided).is_none());
}

#[test]
fn sweep_rows_recompute_per_point() {
    let v = noisy_phantom(14, 0.01);
    let grid = SweepGrid::new(
        "aniso:N=3,lambda=0.1,K=10".parse().unwrap(),
        SweepAxis { name: "lambda".into(), values: vec![0.05, 0.25] },
        SweepAxis { name: "K".into(), values: vec![5.0, 20.0, 40.0] },
    )
    .unwrap();
    let opts = EvalOptions::default();
    let table = param_sweep_report(&v, &grid, &opts).unwrap();
    assert_eq!((table.param1.as_str(), table.param2.as_str()), ("lambda", "K"));
    assert_eq!(table.rows.len(), 6);
    let mut k = 0;
    for lambda in [0.05, 0.25] {
        for kk in [5.0, 20.0, 40.0] {
            let r = table.rows[k];
            let spec = FilterSpec::AnisotropicDiffusion { iterations: 3, lambda, k: kk };
            let e = evaluate_config(&v, &spec, &opts).unwrap();
            assert_eq!((r.param1, r.param2), (lambda, kk));
            assert_eq!((r.delta, r.one_voxel_stones, r.total_stones), (e.delta, e.one_voxel_stones, e.total_stones));
            k += 1;
        }
    }
}

fn component_of(d: Dims, voxels: &[[usize; 3]]) -> BinaryVolume {
    let mut labels = vec![0u8; d.len()];
    for p in voxels {
        labels[d.index(p[0], p[1], p[2])] = 1;
    }
    BinaryVolume::new(d, labels).unwrap()
}

#[test]
fn engineered_stones_follow_the_metric() {
    let d = Dims::new(30, 10, 10).unwrap();
    let mut voxels = Vec::new();
    // Bulk: slab x in 0..5.
    for z in 0..10 {
        for y in 0..10 {
            for x in 0..5 {
                voxels.push([x, y, z]);
            }
        }
    }
    // Single voxel at distance 2 from the slab: d_hat = 2 > 1, removed.
    voxels.push([6, 1, 1]);
    // 2x2x2 cube at distance 2: d_hat = 2 / 2 = 1, attached.
    for z in 4..6 {
        for y in 4..6 {
            for x in 6..8 {
                voxels.push([x, y, z]);
            }
        }
    }
    // 3x3x3 cube at distance 3: d_hat = 1, attached.
    for z in 6..9 {
        for y in 0..3 {
            for x in 7..10 {
                voxels.push([x, y, z]);
            }
        }
    }
    // Single voxel far away: removed.
    voxels.push([25, 8, 8]);
    let b = component_of(d, &voxels);
    let (_, report) = analyze(&b, Connectivity::TwentySix).unwrap();
    let (cleaned, decisions) = resolve_stones(&b, &report, 1.0).unwrap();
    assert_eq!(decisions.len(), 4);
    for dec in &decisions {
        let stone = report.stones.iter().find(|s| s.id == dec.stone_id).unwrap();
        let d_want = oracle::all_pairs_distance(&stone.voxels, &report.bulk.voxels);
        assert!((dec.d - d_want).abs() <= 1e-9);
        let d_hat = d_want / (stone.size() as f64).cbrt();
        assert!((dec.d_hat - d_hat).abs() <= 1e-9);
        let expect = if d_hat > 1.0 + 1e-12 { StoneAction::Remove } else { StoneAction::Attach };
        assert_eq!(dec.action, expect, "stone of size {} at {}", stone.size(), d_want);
    }
    let removed: usize = decisions.iter().filter(|d| d.action == StoneAction::Remove).map(|d| d.size).sum();
    assert_eq!(removed, 2);
    assert_eq!(cleaned.material_count(), b.material_count() - 2);
    // Attached stones stay where they were; nothing new is added.
    for (i, &l) in cleaned.labels().iter().enumerate() {
        assert!(l <= b.labels()[i]);
    }
}

#[test]
fn inconsistent_report_is_rejected() {
    let d = Dims::cube(4).unwrap();
    let b = component_of(d, &[[0, 0, 0], [3, 3, 3]]);
    let bogus = Component {
        id: 2,
        voxels: vec![[2, 2, 2]],
        bbox: poreseg::components::BoundingBox { min: [2; 3], max: [2; 3] },
    };
    let bulk = Component {
        id: 1,
        voxels: vec![[0, 0, 0]],
        bbox: poreseg::components::BoundingBox { min: [0; 3], max: [0; 3] },
    };
    let report = StoneReport::new(vec![bulk, bogus]).unwrap();
    assert!(resolve_stones(&b, &report, 1.0).is_err());
}

#[test]
fn phantom_meets_porosity_and_is_connected() {
    for seed in 0..4 {
        let spec =
            PhantomSpec { dims: Dims::cube(32).unwrap(), grain_radius: (5.0, 8.0), seed, ..PhantomSpec::default() };
        let p = generate_phantom(&spec).unwrap();
        assert!((p.truth.porosity() - spec.target_porosity).abs() <= POROSITY_TOLERANCE);
        assert_eq!(oracle::flood_fill_partition(&p.truth, 26).len(), 1);
        for (i, &x) in p.volume.data().iter().enumerate() {
            let want = if p.truth.is_material(i) { spec.material_intensity } else { spec.pore_intensity };
            assert_eq!(x, want);
        }
    }
}

#[test]
fn clean_phantom_has_no_stones() {
    let spec =
        PhantomSpec { dims: Dims::cube(32).unwrap(), grain_radius: (5.0, 8.0), seed: 8, ..PhantomSpec::default() };
    let p = generate_phantom(&spec).unwrap();
    let e = evaluate_config(&p.volume, &FilterSpec::IDENTITY, &EvalOptions::default()).unwrap();
    assert_eq!((e.total_stones, e.delta), (0, 0.0));
    let (b, _, _) = poreseg::segmentation::segment(&p.volume, Default::default()).unwrap();
    assert_eq!(b, p.truth);
    let noisy = add_noise(
        &p.volume,
        &NoiseSpec { model: NoiseModel::SaltPepper { p: 0.005, salt: 255.0, pepper: 0.0 }, seed: 1 },
    )
    .unwrap();
    assert!(evaluate_config(&noisy, &FilterSpec::IDENTITY, &EvalOptions::default()).unwrap().total_stones > 0);
}

#[test]
fn salt_and_pepper_flip_count_is_binomial() {
    let d = Dims::cube(64).unwrap();
    let v = Volume::filled(d, 128.0).unwrap();
    let p = 0.01;
    let noisy =
        add_noise(&v, &NoiseSpec { model: NoiseModel::SaltPepper { p, salt: 255.0, pepper: 0.0 }, seed: 9 }).unwrap();
    let n = d.len() as f64;
    let flipped = noisy.data().iter().filter(|&&x| x != 128.0).count() as f64;
    let sd = (n * p * (1.0 - p)).sqrt();
    assert!((flipped - n * p).abs() <= 4.0 * sd, "{flipped} flips");
    let salt = noisy.data().iter().filter(|&&x| x == 255.0).count() as f64;
    let sd_half = (n * p / 2.0 * (1.0 - p / 2.0)).sqrt();
    assert!((salt - n * p / 2.0).abs() <= 4.0 * sd_half);
}

#[test]
fn gaussian_noise_has_requested_spread() {
    let d = Dims::cube(32).unwrap();
    let v = Volume::filled(d, 128.0).unwrap();
    let noisy = add_noise(&v, &NoiseSpec { model: NoiseModel::Gaussian { sigma: 8.0 }, seed: 1 }).unwrap();
    let n = d.len() as f64;
    let mean = noisy.data().iter().sum::<f64>() / n;
    let var = noisy.data().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!((mean - 128.0).abs() < 0.2);
    assert!((var.sqrt() - 8.0).abs() < 0.2);
}
