use mcrisk_core::model::Distribution;
use mcrisk_core::montecarlo::stats;
use mcrisk_core::montecarlo::{sample, substream};
use statrs::distribution::{Beta, ContinuousCDF};
use statrs::function::erf::erfc;

const N: usize = 40_000;

fn draws(dist: &Distribution, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, 3, 11);
    (0..N).map(|_| sample(dist, &mut rng)).collect()
}

fn phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn ks_distance(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = stats::sorted(xs);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sided DKW bound at 99% confidence.
fn dkw99(n: usize) -> f64 {
    ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt()
}

fn all_laws() -> Vec<Distribution> {
    vec![
        Distribution::point(4.5),
        Distribution::discrete(vec![(0.0, 0.7), (3.0, 0.2), (8.0, 0.1)]),
        Distribution::uniform(2.0, 7.0),
        Distribution::triangular(1.0, 2.0, 6.0),
        Distribution::triangular(0.0, 0.0, 3.0),
        Distribution::normal(10.0, 2.0),
        Distribution::normal(1.0, 1.0),
        Distribution::normal(-3.0, 1.0),
        Distribution::pert(2.0, 3.0, 10.0),
        Distribution::pert(5.0, 5.0, 5.0),
    ]
}

#[test]
fn sample_moments_match_declared_moments() {
    for (k, law) in all_laws().into_iter().enumerate() {
        let xs = draws(&law, 100 + k as u64);
        let (m, v) = (law.mean(), law.variance());
        let se = (v / N as f64).sqrt();
        let got = stats::mean(&xs);
        assert!(
            (got - m).abs() <= 5.0 * se + 1e-12,
            "{law}: mean {got} vs {m}"
        );
        if v > 0.0 {
            let sv = stats::variance(&xs);
            assert!((sv / v - 1.0).abs() < 0.05, "{law}: variance {sv} vs {v}");
        } else {
            assert!(xs.iter().all(|&x| x == m));
        }
        let (lo, hi) = law.support();
        assert!(
            xs.iter().all(|&x| x >= lo && x <= hi),
            "{law}: outside support"
        );
    }
}

#[test]
fn continuous_laws_pass_ks() {
    let bound = dkw99(N);
    let cases: Vec<(Distribution, Box<dyn Fn(f64) -> f64>)> = vec![
        (
            Distribution::uniform(2.0, 7.0),
            Box::new(|x| ((x - 2.0) / 5.0).clamp(0.0, 1.0)),
        ),
        (
            Distribution::triangular(1.0, 2.0, 6.0),
            Box::new(|x: f64| {
                if x <= 2.0 {
                    (x - 1.0).powi(2) / (5.0 * 1.0)
                } else {
                    1.0 - (6.0 - x).powi(2) / (5.0 * 4.0)
                }
            }),
        ),
        (
            Distribution::normal(1.0, 1.0),
            Box::new(|x| {
                let p0 = phi(-1.0);
                (phi(x - 1.0) - p0) / (1.0 - p0)
            }),
        ),
        (
            Distribution::normal(-3.0, 1.0),
            Box::new(|x| {
                let p0 = phi(3.0);
                (phi(x + 3.0) - p0) / (1.0 - p0)
            }),
        ),
        (
            Distribution::pert(2.0, 3.0, 10.0),
            Box::new(|x| {
                let b = Beta::new(1.5, 4.5).unwrap();
                b.cdf(((x - 2.0) / 8.0).clamp(0.0, 1.0))
            }),
        ),
    ];
    for (k, (law, cdf)) in cases.into_iter().enumerate() {
        let xs = draws(&law, 500 + k as u64);
        let d = ks_distance(&xs, cdf);
        assert!(d < bound, "{law}: KS {d} >= {bound}");
    }
}

#[test]
fn discrete_frequencies() {
    let law = Distribution::discrete(vec![(0.0, 0.7), (3.0, 0.2), (8.0, 0.1)]);
    let xs = draws(&law, 9);
    for (v, p) in [(0.0, 0.7), (3.0, 0.2), (8.0, 0.1)] {
        let f = xs.iter().filter(|&&x| x == v).count() as f64 / N as f64;
        let se = (p * (1.0 - p) / N as f64).sqrt();
        assert!((f - p).abs() < 5.0 * se, "{v}: {f} vs {p}");
    }
}

#[test]
fn substreams_are_keyed() {
    let law = Distribution::uniform(0.0, 1.0);
    let a: Vec<f64> = (0..8)
        .map(|s| sample(&law, &mut substream(1, 2, s)))
        .collect();
    let b: Vec<f64> = (0..8)
        .rev()
        .map(|s| sample(&law, &mut substream(1, 2, s)))
        .collect();
    assert!(a.iter().eq(b.iter().rev()));
    assert_ne!(a[0], sample(&law, &mut substream(1, 3, 0)));
    assert_ne!(a[0], sample(&law, &mut substream(2, 2, 0)));
}

#[test]
fn text_form_round_trips() {
    for law in all_laws() {
        let back: Distribution = law.to_string().parse().unwrap();
        assert_eq!(back, law);
    }
}
