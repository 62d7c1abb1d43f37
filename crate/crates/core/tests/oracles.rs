//! Values frozen from independent high-precision computations.

use kmt_core::blocking::{check_prop_b1, check_prop_b2, check_prop_imkj, BlockTree};
use kmt_core::conditions::{check_lemma_a1, sakhanenko_lambda, smoothness_mu, symmetric_grid};
use kmt_core::haar::{sample_holder, HaarExpansion, HolderKind};
use kmt_core::law::LatticeGaussianMixture;

fn rademacher() -> LatticeGaussianMixture {
    LatticeGaussianMixture::make_lattice(2.0, -1.0, &[(-1.0, 0.5), (1.0, 0.5)]).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn lambda_star_values() {
    let cases = [
        (rademacher(), 0.567143290409783873),
        (LatticeGaussianMixture::gaussian(1.0).unwrap(), 0.328971652750221113),
        (LatticeGaussianMixture::gaussian(4.0).unwrap(), 0.164485826375110557),
        (rademacher().convolve(&LatticeGaussianMixture::gaussian(1.0).unwrap()).unwrap(), 0.254822679051868220),
    ];
    for (law, expected) in cases {
        let got = sakhanenko_lambda(&law).unwrap().lambda_star;
        assert!(close(got, expected, 1e-9), "{got} vs {expected}");
    }
}

#[test]
fn lambda_star_scaling() {
    for law in [rademacher(), rademacher().convolve(&LatticeGaussianMixture::gaussian(0.5).unwrap()).unwrap()] {
        let base = sakhanenko_lambda(&law).unwrap().lambda_star;
        for c in [0.5, 2.0] {
            let scaled = sakhanenko_lambda(&law.scaled(c).unwrap()).unwrap().lambda_star;
            assert!(close(scaled * c, base, 1e-6));
        }
    }
    let doubled = sakhanenko_lambda(&rademacher().scaled(2.0).unwrap()).unwrap().lambda_star;
    assert!((doubled - 0.2836).abs() < 1e-4);
}

#[test]
fn smoothness_values() {
    let h = [-0.5, -0.25, 0.0, 0.25, 0.5];
    let mixed = rademacher().convolve(&LatticeGaussianMixture::gaussian(1.0).unwrap()).unwrap();
    let mu = smoothness_mu(&mixed, &[0.5], &h).unwrap().mu;
    assert!(close(mu, 1.05462317458060823, 1e-6), "{mu}");
    let g = smoothness_mu(&LatticeGaussianMixture::gaussian(1.0).unwrap(), &[0.5], &h).unwrap().mu;
    assert!(close(g, 0.773388918355616, 1e-6), "{g}");
}

#[test]
fn lemma_a1_at_lambda_star() {
    let three = LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap();
    let skew = LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(-1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)]).unwrap();
    for law in [
        rademacher(),
        three,
        skew,
        LatticeGaussianMixture::gaussian(1.0).unwrap(),
        rademacher().convolve(&LatticeGaussianMixture::gaussian(1.0).unwrap()).unwrap(),
    ] {
        let lambda = sakhanenko_lambda(&law).unwrap().lambda_star;
        let check = check_lemma_a1(&law, lambda, &symmetric_grid(lambda / 3.0, 101)).unwrap();
        assert!(check.verdict && check.worst_slack >= 0.0, "{check:?}");
    }
}

#[test]
fn haar_of_identity_and_sqrt() {
    let e = HaarExpansion::from_fn(|t| t, 6).unwrap();
    assert!((e.c0() - 0.5).abs() < 1e-12);
    assert!((e.coeff(0, 1).unwrap() + 0.25).abs() < 1e-12);

    let f = sample_holder(1.0, 0, HolderKind::Sqrt).unwrap();
    for m in [2u32, 4, 6, 8] {
        let e = f.haar(m).unwrap();
        for (k, _, c) in e.iter() {
            assert!(c.abs() <= 2f64.powf(-1.5) * 2f64.powi(-(k as i32)) + 1e-8);
        }
        let gap = (0..=4096).map(|i| i as f64 / 4096.0).map(|t| (f.eval(t) - e.eval(t).unwrap()).abs()).fold(0.0, f64::max);
        assert!(gap <= 2f64.powf(-(m as f64) / 2.0) + 1e-8, "m = {m}: {gap}");
    }
}

#[test]
fn blocking_alternating_battery() {
    let variances: Vec<f64> = (0..32).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
    let tree = BlockTree::build(&variances, 5).unwrap();
    assert!(check_prop_imkj(&tree));
    let gap = check_prop_b1(&tree, 1.0);
    assert!(gap.worst <= 4.0, "{gap:?}");
    assert!(check_prop_b2(&tree, 8.0).verdict);

    let equal = BlockTree::build(&[1.0; 32], 4).unwrap();
    assert!(check_prop_b2(&equal, 8.0).worst <= 3.0);
}
