//! Statistical contract of the entry-law catalog: declared moments match
//! empirical ones, and the moment/cumulant maps invert each other.

use proptest::prelude::*;
use wignerlab_core::entry_laws::{
    cumulants_from_moments, moments_from_cumulants, EntryLaw,
};
use wignerlab_core::rng::child_rng;

fn empirical_moments_check(law: &EntryLaw, seed: u64) {
    const N: usize = 1_000_000;
    let mut rng = child_rng(seed, 0);
    let mut sums = [0.0f64; 4];
    for _ in 0..N {
        let x = law.sample(&mut rng);
        let mut p = 1.0;
        for s in sums.iter_mut() {
            p *= x;
            *s += p;
        }
    }
    for (k, s) in sums.iter().enumerate() {
        let order = k + 1;
        let est = s / N as f64;
        let declared = law.moment(order);
        // SE of the empirical k-th moment from the declared higher moments
        let var = law.raw_moment(2 * order as u32) - declared * declared;
        let se = (var / N as f64).sqrt();
        assert!(
            (est - declared).abs() <= 5.0 * se.max(1e-12),
            "{} moment {order}: est {est} declared {declared} se {se}",
            law.name()
        );
    }
}

#[test]
fn gaussian_empirical_moments() {
    empirical_moments_check(&EntryLaw::gaussian(1.0).unwrap(), 101);
    empirical_moments_check(&EntryLaw::gaussian(2.0).unwrap(), 102);
}

#[test]
fn rademacher_empirical_moments() {
    empirical_moments_check(&EntryLaw::rademacher(1.0).unwrap(), 103);
}

#[test]
fn uniform_empirical_moments() {
    empirical_moments_check(&EntryLaw::uniform(1.0).unwrap(), 104);
}

#[test]
fn two_point_empirical_moments() {
    empirical_moments_check(&EntryLaw::two_point(0.25, 1.0).unwrap(), 105);
    empirical_moments_check(&EntryLaw::two_point(0.7, 1.5).unwrap(), 106);
}

#[test]
fn gaussian_sample_mean_concentrates() {
    const N: usize = 1_000_000;
    let law = EntryLaw::gaussian(1.0).unwrap();
    let mut rng = child_rng(7, 3);
    let mut acc = 0.0;
    for _ in 0..N {
        acc += law.sample(&mut rng);
    }
    let mean = acc / N as f64;
    assert!(mean.abs() <= 4.0 / (N as f64).sqrt(), "mean {mean}");
}

proptest! {
    /// moments -> cumulants -> moments is the identity up to order 8
    #[test]
    fn moment_cumulant_round_trip(tail in proptest::collection::vec(-10.0f64..10.0, 7)) {
        let mut moments = vec![0.0];
        moments.extend(tail.iter().cloned());
        // keep the variance positive so the vector is law-like
        moments[1] = moments[1].abs() + 0.1;
        let cums = cumulants_from_moments(&moments).unwrap();
        let back = moments_from_cumulants(&cums);
        for (a, b) in moments.iter().zip(&back) {
            let scale = a.abs().max(1.0);
            prop_assert!((a - b).abs() / scale <= 1e-9, "{a} vs {b}");
        }
    }

    /// cumulants -> moments -> cumulants is the identity up to order 8
    #[test]
    fn cumulant_moment_round_trip(tail in proptest::collection::vec(-10.0f64..10.0, 7)) {
        let mut cums = vec![0.0];
        cums.extend(tail.iter().cloned());
        cums[1] = cums[1].abs() + 0.1;
        let moments = moments_from_cumulants(&cums);
        let back = cumulants_from_moments(&moments).unwrap();
        for (a, b) in cums.iter().zip(&back) {
            let scale = a.abs().max(1.0);
            prop_assert!((a - b).abs() / scale <= 1e-9, "{a} vs {b}");
        }
    }
}
