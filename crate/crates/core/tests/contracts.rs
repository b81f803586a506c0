use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wscps::cps::{build_distribution, calibrate, CalibrationScores, ConformityMeasure, PredictiveDistribution};
use wscps::data::{split_sizes, Dataset};
use wscps::eval::{coverage, crps, crps_with_extent, friedman_nemenyi, ks_uniformity, nemenyi_q, pit_histogram};
use wscps::models::{DifficultyEstimator, LinearModel, Predictor};
use wscps::weights::{normalize_weights, NormalizedWeights};

fn constant_model(c: f64, dim: usize) -> Predictor {
    Predictor::Linear(LinearModel {
        intercept: c,
        coefficients: vec![0.0; dim],
    })
}

#[test]
fn calibration_scores() {
    let cal = Dataset::new(1, vec![0.0, 1.0, 2.0], vec![1.0, -2.0, 0.0]).unwrap();
    let cs = calibrate(&constant_model(0.0, 1), &ConformityMeasure::SignedResidual, &cal).unwrap();
    assert_eq!(cs.scores, vec![1.0, -2.0, 0.0]);

    let perfect = Predictor::Linear(LinearModel {
        intercept: 1.0,
        coefficients: vec![2.0],
    });
    let line = Dataset::new(1, vec![0.0, 1.0, 5.0], vec![1.0, 3.0, 11.0]).unwrap();
    let cs = calibrate(&perfect, &ConformityMeasure::SignedResidual, &line).unwrap();
    assert!(cs.scores.iter().all(|&s| s == 0.0));

    let empty_err = Dataset::new(1, vec![], vec![]);
    assert!(empty_err.is_err());
}

#[test]
fn normalized_score_divides_by_difficulty() {
    let mut est = DifficultyEstimator::new(1, 1e-6).unwrap();
    let reference = Dataset::new(1, vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
    est.fit_residuals(&reference, &[2.0, -2.0]).unwrap();
    let measure = ConformityMeasure::NormalizedResidual(est);
    assert_eq!(measure.score(4.0, &[0.3], 7.0).unwrap(), 1.5);
}

#[test]
fn weighted_distribution_shifts_scores_by_prediction() {
    let scores = CalibrationScores {
        scores: vec![0.0, 1.0],
        indices: vec![0, 1],
    };
    let weights = normalize_weights(&[1.0, 3.0], 1.0).unwrap();
    let d = build_distribution(&scores, &weights, &constant_model(5.0, 2), &ConformityMeasure::SignedResidual, &[1.0, 1.0])
        .unwrap();
    assert_eq!(d.values(), &[5.0, 6.0]);
    assert!((d.masses()[0] - 0.2).abs() < 1e-15 && (d.masses()[1] - 0.6).abs() < 1e-15);
    assert!((d.tail_mass() - 0.2).abs() < 1e-15);
    assert_eq!(d.point_prediction(), 5.0);

    let bad = NormalizedWeights::uniform(3);
    assert!(build_distribution(&scores, &bad, &constant_model(0.0, 2), &ConformityMeasure::SignedResidual, &[0.0, 0.0])
        .is_err());
}

/// Walks the atoms from the left accumulating mass, independently of the
/// binary-search implementation.
fn brute_quantile(atoms: &[(f64, f64)], tail: f64, q: f64, tau: f64) -> f64 {
    if q < tau * tail {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0;
    for &(v, p) in atoms {
        acc += p;
        if acc + tau * tail >= q - 1e-15 {
            return v;
        }
    }
    f64::INFINITY
}

#[test]
fn nine_integer_scores_interval_matches_cumulative_walk() {
    let mu = 3.5;
    let atoms: Vec<(f64, f64)> = (-4..=4).map(|s| (mu + s as f64, 0.1)).collect();
    let d = PredictiveDistribution::new(atoms.clone(), 0.1, mu).unwrap();
    let iv = d.interval(0.8, 0.5).unwrap();
    let lower = brute_quantile(&atoms, 0.1, 0.1, 0.5);
    let upper = brute_quantile(&atoms, 0.1, 0.9, 0.5);
    assert_eq!((iv.lower, iv.upper), (lower, upper));
    // the tie-breaking tail share 0.05 lets the extreme scores reach both levels
    assert_eq!((iv.lower - mu, iv.upper - mu), (-4.0, 4.0));
}

#[test]
fn quantiles_match_cumulative_walk_on_random_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let n = rng.random_range(1..15);
        let raw: Vec<f64> = (0..n + 1).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let mut atoms: Vec<(f64, f64)> = (0..n).map(|i| (i as f64 * 1.5 - 4.0, raw[i] / total)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tail = raw[n] / total;
        let d = PredictiveDistribution::new(atoms.clone(), tail, 0.0).unwrap();
        for _ in 0..10 {
            let q = rng.random_range(0.001..0.999);
            let tau = rng.random::<f64>();
            assert_eq!(d.quantile(q, tau).unwrap(), brute_quantile(&atoms, tail, q, tau));
        }
    }
}

/// `Q(y, tau) >= Q(y', tau')` for `y > y'` whenever the atom mass strictly
/// between them covers the tie and tail terms `Q(y', .)` may gain over
/// `Q(y, .)`; in particular when `y'` carries no atom and the gap holds one.
#[test]
fn ordering_across_labels_in_constructive_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let n = rng.random_range(1..10);
        let raw: Vec<f64> = (0..=n).map(|_| rng.random::<f64>() + 0.01).collect();
        let total: f64 = raw.iter().sum();
        let atoms: Vec<(f64, f64)> = (0..n).map(|i| (i as f64, raw[i] / total)).collect();
        let tail = raw[n] / total;
        let d = PredictiveDistribution::new(atoms.clone(), tail, 0.0).unwrap();
        let (a, b) = (rng.random_range(-2..n as i32 + 2), rng.random_range(-2..n as i32 + 2));
        let (ylo, yhi) = (a.min(b) as f64 - 0.5, a.max(b) as f64 - 0.5);
        if ylo == yhi {
            continue;
        }
        let (t, t_prime) = (rng.random::<f64>(), rng.random::<f64>());
        let between: f64 = atoms.iter().filter(|(v, _)| *v > ylo && *v < yhi).map(|(_, p)| p).sum();
        let hi = d.cdf(yhi, t).unwrap();
        let lo = d.cdf(ylo, t_prime).unwrap();
        if between >= (t_prime - t) * tail {
            assert!(hi >= lo - 1e-15, "Q({yhi},{t})={hi} < Q({ylo},{t_prime})={lo}");
        }
        // same tau: always ordered
        assert!(d.cdf(yhi, t).unwrap() >= d.cdf(ylo, t).unwrap());
    }
}

#[test]
fn crps_two_atoms() {
    let d = PredictiveDistribution::new(vec![(0.0, 0.5), (1.0, 0.5)], 0.0, 0.5).unwrap();
    assert!((crps(&d, 0.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
}

/// Midpoint quadrature of `(F(t) - 1{t >= y})^2` where `F` is rebuilt from
/// the atoms by direct summation.
fn quadrature_crps(atoms: &[(f64, f64)], tail: f64, y: f64, tau: f64, lower: f64, upper: f64, cells: usize) -> f64 {
    let h = (upper - lower) / cells as f64;
    let mut total = 0.0;
    for i in 0..cells {
        let t = lower + (i as f64 + 0.5) * h;
        let f = tau * tail + atoms.iter().filter(|(c, _)| *c <= t).map(|(_, p)| p).sum::<f64>();
        let ind = if t >= y { 1.0 } else { 0.0 };
        total += (f - ind) * (f - ind) * h;
    }
    total
}

#[test]
fn crps_matches_quadrature_on_lattice_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let n = rng.random_range(1..8);
        let raw: Vec<f64> = (0..=n).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let atoms: Vec<(f64, f64)> = (0..n)
            .map(|i| (rng.random_range(-200..200) as f64 * 0.01, raw[i] / total))
            .collect();
        let tail = raw[n] / total;
        let d = PredictiveDistribution::new(atoms.clone(), tail, 0.0).unwrap();
        let y = rng.random_range(-250..250) as f64 * 0.01;
        let tau = rng.random::<f64>();
        let extent = 1.0;
        let lo = d.values()[0].min(y) - extent;
        let hi = d.values()[d.len() - 1].max(y) + extent;
        let cells = ((hi - lo) / 0.001).round() as usize;
        let exact = crps_with_extent(&d, y, tau, extent).unwrap().value;
        let numeric = quadrature_crps(&atoms, tail, y, tau, lo, hi, cells);
        assert!((exact - numeric).abs() < 1e-6, "{exact} vs {numeric}");
    }
}

#[test]
fn coverage_examples() {
    let all = wscps::cps::PredictionInterval {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        nominal_coverage: 0.8,
    };
    assert_eq!(coverage(&[all; 3], &[1e300, -4.0, 0.0]).unwrap(), 1.0);
    let unit = wscps::cps::PredictionInterval {
        lower: 0.0,
        upper: 1.0,
        nominal_coverage: 0.8,
    };
    assert_eq!(coverage(&[unit; 2], &[0.5, 2.0]).unwrap(), 0.5);
}

#[test]
fn ks_examples() {
    let single = ks_uniformity(&[0.5], 0.01).unwrap();
    assert_eq!(single.statistic, 0.5);
    let grid: Vec<f64> = (1..=999).map(|i| i as f64 / 1000.0).collect();
    let r = ks_uniformity(&grid, 0.01).unwrap();
    assert!(r.statistic < 0.002 && r.pass);
    let zeros = ks_uniformity(&[0.0; 50], 0.01).unwrap();
    assert_eq!(zeros.statistic, 1.0);
    assert!(!zeros.pass);
    assert!(ks_uniformity(&[-0.1], 0.01).is_err());
}

#[test]
fn histogram_examples() {
    assert_eq!(pit_histogram(&[0.0, 0.5, 0.999], 2).unwrap().counts, vec![1, 2]);
    assert_eq!(pit_histogram(&[0.0, 0.25, 0.999], 2).unwrap().counts, vec![2, 1]);
    assert_eq!(pit_histogram(&[], 4).unwrap().counts, vec![0; 4]);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let u: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
    let h = pit_histogram(&u, 20).unwrap();
    assert!(h.counts.iter().all(|&c| (400..=600).contains(&c)), "{:?}", h.counts);
}

#[test]
fn friedman_examples() {
    let identical: Vec<Vec<f64>> = (0..6).map(|b| vec![b as f64; 4]).collect();
    let s = friedman_nemenyi(&identical, 0.05).unwrap();
    assert_eq!(s.mean_ranks, vec![2.5; 4]);
    assert_eq!(s.friedman_statistic, 0.0);

    let two: Vec<Vec<f64>> = (0..8).map(|b| vec![b as f64, b as f64 + 0.1]).collect();
    assert_eq!(friedman_nemenyi(&two, 0.05).unwrap().mean_ranks, vec![1.0, 2.0]);

    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let rows: Vec<Vec<f64>> = (0..100).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
    let s = friedman_nemenyi(&rows, 0.05).unwrap();
    let q = nemenyi_q(3, 0.05).unwrap();
    assert!((q - 2.343).abs() < 2e-3);
    assert!((s.critical_difference - q * (12.0f64 / 600.0).sqrt()).abs() < 1e-12);
}

#[test]
fn airfoil_split_arithmetic() {
    assert_eq!(split_sizes(1503, (0.25, 0.25, 0.5)).unwrap(), (375, 375, 753));
}
