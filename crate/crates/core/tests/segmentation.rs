use poreseg::segmentation::{
    binarize, binarize_bins, histogram, segment, unbalanced_otsu_threshold, Histogram, ThresholdMode, BINS,
};
use poreseg::volume::{BinaryVolume, Dims, Volume};
use poreseg_oracles as oracle;
use proptest::prelude::*;

fn random_counts(rng: &mut rand_chacha::ChaCha8Rng) -> Vec<u64> {
    let counts = oracle::random_counts(rng);
    assert_eq!(counts.len(), BINS);
    counts
}

#[test]
fn histogram_matches_counting_loop() {
    let mut rng = oracle::rng(20);
    for _ in 0..10 {
        let v = oracle::random_volume(&mut rng, Dims::new(11, 7, 5).unwrap());
        assert_eq!(histogram(&v).bins(), &oracle::histogram(&v)[..]);
        assert_eq!(histogram(&v).total(), 385);
    }
}

#[test]
fn histogram_rounds_fractional_intensities() {
    let d = Dims::new(5, 1, 1).unwrap();
    let v = Volume::new(d, vec![0.49, 0.5, 2.5, 254.5, 255.0]).unwrap();
    let h = histogram(&v);
    assert_eq!(h.bins(), &oracle::histogram(&v)[..]);
    assert_eq!((h.bins()[0], h.bins()[1], h.bins()[3], h.bins()[255]), (1, 1, 1, 2));
}

#[test]
fn threshold_equals_exhaustive_sweep() {
    let mut rng = oracle::rng(21);
    for _ in 0..100 {
        let counts = random_counts(&mut rng);
        let got = unbalanced_otsu_threshold(&Histogram::from_counts(&counts).unwrap()).unwrap();
        let (t, j) = oracle::otsu_sweep(&counts).unwrap();
        assert_eq!(got.t, t);
        assert!((got.criterion - j).abs() <= 1e-9 * j.abs().max(1.0));
    }
}

#[test]
fn binarize_counts_match() {
    let mut rng = oracle::rng(22);
    let v = oracle::random_volume(&mut rng, Dims::cube(9).unwrap());
    for t in [0.0, 17.0, 127.0, 254.0, 255.0] {
        let b = binarize(&v, t);
        let above = v.data().iter().filter(|&&x| x > t).count();
        assert_eq!(b.material_count(), above);
        assert_eq!(b.material_count() + b.pore_count(), v.len());
    }
    assert_eq!(binarize(&v, 255.0).material_count(), 0);
}

#[test]
fn threshold_on_two_level_volume_recovers_labels() {
    let d = Dims::cube(6).unwrap();
    let labels: Vec<u8> = (0..d.len()).map(|i| (i % 3 == 0) as u8).collect();
    let data = labels.iter().map(|&l| if l == 1 { 190.0 } else { 40.0 }).collect();
    let v = Volume::new(d, data).unwrap();
    let t = unbalanced_otsu_threshold(&histogram(&v)).unwrap().t;
    assert_eq!(binarize(&v, t as f64), BinaryVolume::new(d, labels).unwrap());
}

#[test]
fn segmentation_classes_follow_histogram_bins() {
    // 60.3 sits in bin 60 with the pore level; a raw comparison against
    // t = 60 would call it material.
    let d = Dims::new(6, 1, 1).unwrap();
    let v = Volume::new(d, vec![60.0, 60.0, 60.3, 200.0, 199.6, 200.0]).unwrap();
    let (b, t, _) = segment(&v, ThresholdMode::Auto).unwrap();
    assert_eq!(t, 60);
    assert_eq!(b.labels(), &[0, 0, 0, 1, 1, 1]);
    assert_eq!(binarize(&v, 60.0).labels(), &[0, 0, 1, 1, 1, 1]);
    let (fixed, _, j) = segment(&v, ThresholdMode::Fixed(199)).unwrap();
    assert_eq!((fixed.labels(), j), (&[0, 0, 0, 1, 1, 1][..], None));
}

proptest! {
    #[test]
    fn bin_binarization_matches_rounded_volume(seed in 0u64..10_000, t in 0u8..=255) {
        let mut rng = oracle::rng(seed);
        let s = oracle::random_slice(&mut rng, 8, 8, 255.0);
        let v = Volume::new(Dims::new(8, 8, 1).unwrap(), s.data.clone()).unwrap();
        let rounded = Volume::new(v.dims(), s.data.iter().map(|x| x.round()).collect()).unwrap();
        prop_assert_eq!(binarize_bins(&v, t), binarize(&rounded, t as f64));
    }

    #[test]
    fn threshold_invariant_under_count_scaling(seed in 0u64..10_000, factor in 2u64..50) {
        let mut rng = oracle::rng(seed);
        let counts = random_counts(&mut rng);
        let scaled: Vec<u64> = counts.iter().map(|c| c * factor).collect();
        let a = unbalanced_otsu_threshold(&Histogram::from_counts(&counts).unwrap()).unwrap();
        let b = unbalanced_otsu_threshold(&Histogram::from_counts(&scaled).unwrap()).unwrap();
        prop_assert_eq!(a.t, b.t);
    }

    #[test]
    fn threshold_attains_maximum(seed in 0u64..10_000) {
        let mut rng = oracle::rng(seed);
        let counts = random_counts(&mut rng);
        let got = unbalanced_otsu_threshold(&Histogram::from_counts(&counts).unwrap()).unwrap();
        for t in 0..255 {
            if let Some(j) = oracle::otsu_criterion(&counts, t) {
                prop_assert!(j <= got.criterion + 1e-9 * got.criterion.abs().max(1.0));
            }
        }
    }
}
