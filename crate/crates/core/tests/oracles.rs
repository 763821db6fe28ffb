use diffcls_core::rng::{stream_rng, Stream};
use diffcls_core::{
    paired_ttest_pvalue, NoiseSchedule, PairedAccumulator, ScoreModel, Sidedness, WorldSpec,
};
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn forward_sampling_is_deterministic() {
    let x0 = [0.5, -1.0, 2.0];
    let draw = |seed| {
        let mut rng = stream_rng(seed, Stream::Episodes, 0);
        (0..50)
            .map(|i| NoiseSchedule::Cosine.sample_forward(&x0, i as f64 / 49.0, &mut rng).unwrap())
            .collect::<Vec<_>>()
    };
    let (a, b) = (draw(11), draw(11));
    for (p, q) in a.iter().zip(&b) {
        assert_eq!(p.time.to_bits(), q.time.to_bits());
        assert!(p.data.iter().zip(&q.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(p.noise_draw.iter().zip(&q.noise_draw).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_ne!(a[1].data, draw(12)[1].data);
}

#[test]
fn recorded_noise_rebuilds_the_observation() {
    let x0 = [1.0, 2.0, -3.0, 0.25];
    let mut rng = stream_rng(5, Stream::Episodes, 0);
    for _ in 0..100 {
        let t: f64 = rng.random();
        let obs = NoiseSchedule::Cosine.sample_forward(&x0, t, &mut rng).unwrap();
        let again = NoiseSchedule::Cosine.noise_with(&x0, t, obs.noise_draw.clone());
        assert_eq!(obs, again);
    }
}

/// Each of 50 perturbed denoisers `x̂ + δ` has a larger mean squared error
/// than the posterior mean, by a one-sided paired t-test at the 1% level.
#[test]
fn posterior_mean_beats_perturbed_denoisers() {
    let world = WorldSpec::new(4, 6, 1.0, 2.0, 21).generate().unwrap();
    let sched = NoiseSchedule::Cosine;
    let mut rng = stream_rng(22, Stream::Episodes, 0);
    const DRAWS: usize = 4000;
    let mut cases = Vec::with_capacity(DRAWS);
    for i in 0..DRAWS {
        let k = i % world.num_classes();
        let x0 = world.sample(k, &mut rng).unwrap().data;
        let t: f64 = rng.random();
        let x_t = sched.sample_forward(&x0, t, &mut rng).unwrap();
        let x_hat = world.posterior_mean(sched, k, &x_t).unwrap();
        cases.push((x0, x_hat));
    }
    for _ in 0..50 {
        let scale: f64 = rng.random_range(0.05..0.5);
        let delta: Vec<f64> = (0..world.dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let mut acc = PairedAccumulator::new();
        for (x0, x_hat) in &cases {
            let oracle: f64 = x0.iter().zip(x_hat).map(|(a, b)| (a - b).powi(2)).sum();
            let perturbed: f64 = x0.iter().zip(x_hat).zip(&delta).map(|((a, b), d)| (a - b - d).powi(2)).sum();
            acc.push(perturbed, oracle);
        }
        assert!(acc.mean() > 0.0);
        let p = paired_ttest_pvalue(&acc, Sidedness::OneSided).unwrap();
        assert!(p < 0.01, "perturbation of scale {scale}: p = {p}");
    }
}

/// Posterior mean by quadrature over one coordinate of the conjugate model.
#[test]
fn posterior_mean_matches_quadrature() {
    let (alpha, sigma, s, mu, xt) = (0.8f64, 0.6f64, 1.3f64, 2.0f64, 0.7f64);
    let density = |x: f64| (-(x - mu).powi(2) / (2.0 * s * s) - (xt - alpha * x).powi(2) / (2.0 * sigma * sigma)).exp();
    let (lo, hi, n) = (mu - 12.0 * s, mu + 12.0 * s, 200_000);
    let h = (hi - lo) / n as f64;
    let (mut z, mut m) = (0.0, 0.0);
    for i in 0..=n {
        let x = lo + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        z += w * density(x);
        m += w * x * density(x);
    }
    let t = (alpha.acos() / std::f64::consts::FRAC_PI_2).clamp(0.0, 1.0);
    let world = diffcls_core::GaussianWorld::new(s, vec![vec![mu], vec![-mu]], 0).unwrap();
    let x_hat = world.denoiser(NoiseSchedule::Cosine).denoise(
        &[xt],
        t,
        &diffcls_core::Condition::new(0, "a").unwrap(),
    );
    assert!((x_hat[0] - m / z).abs() < 1e-9, "{} vs {}", x_hat[0], m / z);
}

/// The nearest-mean rule agrees with the maximum of the full Gaussian
/// log-density, normalizing constants included.
#[test]
fn bayes_rule_matches_brute_force_density() {
    let world = WorldSpec::new(5, 8, 1.7, 1.0, 31).generate().unwrap();
    let mut rng = stream_rng(32, Stream::Dataset, 0);
    let d = world.dim as f64;
    let s2 = world.std * world.std;
    let norm = -0.5 * d * (2.0 * std::f64::consts::PI * s2).ln();
    for i in 0..1000 {
        let x = world.sample(i % 5, &mut rng).unwrap().data;
        let mut best = (0, f64::NEG_INFINITY);
        for (k, mu) in world.means.iter().enumerate() {
            let q: f64 = x.iter().zip(mu).map(|(a, b)| (a - b).powi(2)).sum();
            let logp = norm - q / (2.0 * s2);
            if logp > best.1 {
                best = (k, logp);
            }
        }
        assert_eq!(world.bayes_classify(&x).unwrap(), best.0, "sample {i}");
    }
}
