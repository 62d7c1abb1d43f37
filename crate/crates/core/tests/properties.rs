use kmt_core::blocking::BlockTree;
use kmt_core::coupling::{direct_sum, run_construction, split, telescoping_sum, CouplingPlan, Scratch, Workspace, SUM_TOLERANCE};
use kmt_core::haar::{haar_inner, sample_holder, DyadicCell, HolderKind};
use kmt_core::law::{ConvolveOptions, LatticeGaussianMixture};
use kmt_core::special::TailProb;
use proptest::prelude::*;

fn lattice_law() -> impl Strategy<Value = LatticeGaussianMixture> {
    (
        prop::collection::vec((-4i32..=4, 0.05f64..1.0), 1..5),
        prop_oneof![Just(0.5), Just(1.0), Just(2.0)],
        -1.0f64..1.0,
        prop_oneof![Just(0.0), 0.1f64..2.0],
    )
        .prop_map(|(atoms, step, origin, var)| {
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            let atoms: Vec<(f64, f64)> = atoms.iter().map(|&(k, w)| (origin + k as f64 * step, w / total)).collect();
            LatticeGaussianMixture::make_lattice(step, origin, &atoms).unwrap().with_gaussian_variance(var).unwrap()
        })
}

fn centered_law() -> impl Strategy<Value = LatticeGaussianMixture> {
    (prop::collection::vec((-3i32..=3, 0.05f64..1.0), 2..5), prop_oneof![Just(0.0), 0.2f64..1.5]).prop_filter_map(
        "degenerate",
        |(atoms, var)| {
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            let mean: f64 = atoms.iter().map(|&(k, w)| k as f64 * w / total).sum();
            let atoms: Vec<(f64, f64)> = atoms.iter().map(|&(k, w)| (k as f64 - mean, w / total)).collect();
            let law = LatticeGaussianMixture::make_lattice(1.0, -mean, &atoms).ok()?.with_gaussian_variance(var).ok()?;
            (law.variance() > 0.05 && law.mean().abs() < 1e-12).then_some(law)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convolution_adds_moments(a in lattice_law(), b in lattice_law()) {
        let c = a.convolve(&b).unwrap();
        let scale = 1.0 + a.variance() + b.variance() + a.mean().abs() + b.mean().abs();
        prop_assert!((c.mean() - a.mean() - b.mean()).abs() <= 1e-10 * scale);
        prop_assert!((c.variance() - a.variance() - b.variance()).abs() <= 1e-10 * scale);
        prop_assert!((c.gaussian_variance() - a.gaussian_variance() - b.gaussian_variance()).abs() <= 1e-15 * scale);
    }

    #[test]
    fn cdf_is_monotone_and_quantile_is_generalized_inverse(d in lattice_law()) {
        let (lo, hi) = (d.mean() - 8.0 * d.sd() - 5.0, d.mean() + 8.0 * d.sd() + 5.0);
        let mut prev = 0.0;
        for i in 0..1000 {
            let c = d.cdf(lo + (hi - lo) * i as f64 / 999.0);
            prop_assert!(c >= prev);
            prev = c;
        }
        let delta = 1e-6 * d.sd().max(1.0);
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            let q = d.quantile(u).unwrap();
            prop_assert!(d.cdf(q) >= u - 1e-12);
            prop_assert!(d.cdf(q - delta) < u);
        }
    }

    #[test]
    fn split_parts_sum_to_the_whole(a in lattice_law(), b in lattice_law(), u in 0.001f64..0.999, pick in 0usize..64) {
        let total = a.convolve(&b).unwrap();
        let s = if total.is_discrete() {
            total.positions()[pick % total.len()]
        } else {
            total.quantile(u).unwrap()
        };
        let (x, y) = split(&a, &b, s, TailProb::from_lower(u), &mut Scratch::new()).unwrap();
        prop_assert!((x + y - s).abs() <= 1e-12 * (1.0 + s.abs()));
        if a.is_discrete() {
            prop_assert!(a.snap(x).is_some());
        }
        if b.is_discrete() {
            prop_assert!(b.snap(y).is_some());
        }
    }

    #[test]
    fn lambda_star_scales_inversely(d in centered_law(), c in prop_oneof![Just(0.5), Just(2.0)]) {
        let base = kmt_core::conditions::sakhanenko_lambda(&d).unwrap().lambda_star;
        let scaled = kmt_core::conditions::sakhanenko_lambda(&d.scaled(c).unwrap()).unwrap().lambda_star;
        prop_assert!((scaled * c - base).abs() <= 1e-6 * base);
    }

    #[test]
    fn haar_functions_are_orthonormal(k1 in 0u32..10, k2 in 0u32..10, a in any::<u64>(), b in any::<u64>()) {
        let c1 = DyadicCell::new(k1, 1 + a % (1 << k1)).unwrap();
        let c2 = DyadicCell::new(k2, 1 + b % (1 << k2)).unwrap();
        let expected = if c1 == c2 { 1.0 } else { 0.0 };
        prop_assert!((haar_inner(c1, c2) - expected).abs() <= 1e-12);
    }

    #[test]
    fn holder_expansion_bounds(seed in any::<u64>(), kind in 0usize..HolderKind::ALL.len(), l in 0.2f64..3.0) {
        let f = sample_holder(l, seed, HolderKind::ALL[kind]).unwrap();
        prop_assert!(f.certificate().passes());
        for m in [2u32, 4, 6, 8] {
            let e = f.haar(m).unwrap();
            prop_assert!(e.c0().abs() <= l / 2.0 + 1e-8);
            for (k, _, c) in e.iter() {
                prop_assert!(c.abs() <= 2f64.powf(-1.5) * l * 2f64.powi(-(k as i32)) + 1e-8);
            }
            let gap = (0..=4096)
                .map(|i| i as f64 / 4096.0)
                .map(|t| (f.eval(t) - e.eval(t).unwrap()).abs())
                .fold(0.0, f64::max);
            prop_assert!(gap <= l * 2f64.powf(-(m as f64) / 2.0) + 1e-8);
        }
    }

    #[test]
    fn blocking_structure(variances in prop::collection::vec(1.0f64..2.0, 9..300)) {
        let n = variances.len();
        let tree = BlockTree::build(&variances, 5).unwrap();
        let top = tree.top();
        prop_assert!(5 << top <= n && n < 5 << (top + 1));
        for level in tree.levels() {
            let total: f64 = level.variances().iter().sum();
            for k in 0..=level.m() {
                let blocks = level.blocks(k);
                prop_assert_eq!(blocks.first().unwrap().start, 1);
                prop_assert_eq!(blocks.last().unwrap().end, level.len() + 1);
                for pair in blocks.windows(2) {
                    prop_assert_eq!(pair[0].end, pair[1].start);
                }
                prop_assert!(blocks.iter().all(|r| r.len() >= 2));
                let sum: f64 = level.block_variances(k).iter().sum();
                prop_assert!((sum - total).abs() <= 1e-10);
            }
            let b = level.b();
            let (lip_b, lip_a) = b.lipschitz();
            prop_assert!(lip_b <= 2.0 + 1e-9 && lip_a <= 2.0 + 1e-9);
            for i in 0..=1000 {
                let t = i as f64 / 1000.0;
                prop_assert!((b.eval(b.inverse(t)) - t).abs() <= 1e-12);
                prop_assert!((b.inverse(b.eval(t)) - t).abs() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn construction_identities(
        kinds in prop::collection::vec(0usize..3, 8..70),
        normals in prop::collection::vec(-4.0f64..4.0, 70),
        coeffs in (-2.0f64..2.0, 0.0f64..15.0),
    ) {
        let rad = LatticeGaussianMixture::make_lattice(2.0, -1.0, &[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let catalog = [
            rad.clone(),
            rad.convolve(&LatticeGaussianMixture::gaussian(0.5).unwrap()).unwrap(),
            LatticeGaussianMixture::gaussian(1.5).unwrap(),
        ];
        let laws: Vec<_> = kinds.iter().map(|&k| catalog[k].clone()).collect();
        let n = laws.len();
        let plan = CouplingPlan::new(laws, 4, ConvolveOptions::default()).unwrap();
        let out = run_construction(&plan, &normals[..n], true, &mut Workspace::new()).unwrap();
        for state in &out.levels {
            prop_assert!(state.sum_defect(plan.tree().level(state.m)) <= SUM_TOLERANCE);
        }
        let f = |t: f64| coeffs.0 * (coeffs.1 * t).cos();
        let gap = direct_sum(&out.x, &out.n, f) - telescoping_sum(plan.tree(), &out.levels, f);
        prop_assert!(gap.abs() <= 1e-9);
        for (x, law) in out.x.iter().zip(plan.laws()) {
            if law.is_discrete() {
                prop_assert!(law.snap(*x).is_some());
            }
        }
    }
}

#[test]
fn discrete_push_forward_reproduces_weights() {
    let d = LatticeGaussianMixture::make_lattice(1.0, 0.0, &[(-2.0, 0.1), (0.0, 0.25), (1.0, 0.4), (3.0, 0.25)]).unwrap();
    let k = 100_000;
    let mut counts = vec![0usize; d.len()];
    for i in 1..=k {
        let q = d.quantile((i as f64 - 0.5) / k as f64).unwrap();
        counts[d.snap(q).unwrap()] += 1;
    }
    for (c, w) in counts.iter().zip(d.weights()) {
        assert!((*c as f64 / k as f64 - w).abs() <= 2.0 / k as f64);
    }
}
