use perisem::estimator::{empirical_error, estimate_from_parts, CoefficientEstimates};
use perisem::noise::{simulate_coefficient_noise, NoiseParams};
use perisem::risk::analytic_risk;
use perisem::rng::ReplicateStreams;
use perisem::signal::DEFAULT_QUAD_POINTS;
use perisem::stats::mean_se;
use perisem::weights::{pinsker_sequence, Alpha, WeightSequence};
use perisem::{Catalogue, JumpLaw};

const R: u64 = 10_000;

fn replicates(
    theta: &[f64],
    p: &NoiseParams<f64>,
    n: usize,
    j_max: usize,
    seed: u64,
) -> Vec<CoefficientEstimates<f64>> {
    (0..R)
        .map(|r| {
            let mut s = ReplicateStreams::new(seed, r);
            let xi = simulate_coefficient_noise(p, n, j_max, &mut s).unwrap();
            estimate_from_parts(&theta[..j_max], &xi.values, n).unwrap()
        })
        .collect()
}

#[test]
fn estimates_are_unbiased_with_sigma_star_over_n_variance() {
    let p = NoiseParams::new(1.0, 1.0, 1.0, JumpLaw::Rademacher).unwrap();
    let n = 64;
    let j_max = 16;
    let theta = Catalogue::SinePlusParabola.build::<f64>().fourier_coefficients(j_max, DEFAULT_QUAD_POINTS);
    let est = replicates(&theta, &p, n, j_max, 2);
    let target = p.sigma_star() / n as f64;
    for (j, &th) in theta.iter().enumerate() {
        let col: Vec<f64> = est.iter().map(|e| e.values()[j]).collect();
        let m = mean_se(&col);
        assert!((m.mean - th).abs() < 4.0 * m.se, "j={}: {} vs {th}", j + 1, m.mean);
        let sq: Vec<f64> = col.iter().map(|x| (x - th).powi(2)).collect();
        let v = mean_se(&sq);
        let rel_se = v.se / target;
        assert!((v.mean / target - 1.0).abs() < 5.0 * rel_se, "j={}: {}", j + 1, v.mean);
    }
}

#[test]
fn zero_signal_second_moment_is_sigma_star_over_n() {
    let p = NoiseParams::new(0.5, 1.0, 0.5, JumpLaw::StandardGaussian).unwrap();
    let n = 40;
    let est = replicates(&[0.0; 10], &p, n, 10, 9);
    for j in 0..10 {
        let sq: Vec<f64> = est.iter().map(|e| e.values()[j].powi(2)).collect();
        let m = mean_se(&sq);
        assert!((m.mean - p.sigma_star() / n as f64).abs() < 4.0 * m.se);
    }
}

#[test]
fn mise_matches_analytic_risk_for_fixed_weights() {
    let p = NoiseParams::new(1.0, 1.0, 1.0, JumpLaw::Rademacher).unwrap();
    let n = 200;
    let j_tail = 512;
    let theta = Catalogue::Parabola.build::<f64>().fourier_coefficients(j_tail, DEFAULT_QUAD_POINTS);
    let gammas = vec![
        WeightSequence::projection(3),
        WeightSequence::projection(9),
        WeightSequence::new(vec![1.0, 0.5, 0.5, 0.25], None).unwrap(),
        pinsker_sequence(Alpha { beta: 1, t_index: 4, t: 0.5 }, n).unwrap(),
        pinsker_sequence(Alpha { beta: 2, t_index: 10, t: 1.0 }, n).unwrap(),
    ];
    let j_max = gammas.iter().map(|g| g.support_end()).max().unwrap();
    let est = replicates(&theta, &p, n, j_max, 4);
    for g in &gammas {
        let losses: Vec<f64> = est.iter().map(|e| empirical_error(g, e, &theta).unwrap()).collect();
        let m = mean_se(&losses);
        let exact = analytic_risk(g, &theta, p.sigma_star(), n).unwrap();
        assert!((m.mean - exact).abs() < 4.0 * m.se, "{:?}: {} vs {exact}", g.label(), m.mean);
    }
}
