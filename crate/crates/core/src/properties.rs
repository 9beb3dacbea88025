//! Property tests across modules.

use proptest::prelude::*;

use crate::ensemble::{assemble, breve_bound, sample_entries, standardize_pipeline, EntryLaw, SymmetricMatrix, WignerSpec};
use crate::harness::fit_log_log;
use crate::region::{region_grid, smoothing_bound, BoundSettings, RegionSpec};
use crate::resolvent::{identity_report, IdentityReport, Location};
use crate::semicircle::{cdf, quantile, smoothing_params, stieltjes, stieltjes_at, UpperHalfPoint};
use crate::spectral::{eigenvalues, numerical_rank, Esd, Spectrum};
use crate::{Complex64, Error};

fn law() -> impl Strategy<Value = EntryLaw> {
    prop_oneof![
        Just(EntryLaw::Gaussian),
        Just(EntryLaw::Rademacher),
        Just(EntryLaw::UniformScaled),
        Just(EntryLaw::custom_discrete(vec![-0.5f64.sqrt(), 2f64.sqrt()], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap()),
    ]
}

fn wigner(n: usize, law: EntryLaw, seed: u64) -> (SymmetricMatrix, SymmetricMatrix) {
    let x = sample_entries(&WignerSpec::new(n, law, seed).unwrap()).unwrap();
    let w = assemble(&x);
    (x, w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cdf_is_monotone(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(cdf(lo).unwrap() <= cdf(hi).unwrap());
    }

    #[test]
    fn quantile_inverts_cdf(p in 0.0f64..=1.0) {
        let x = quantile(p).unwrap();
        prop_assert!((-2.0..=2.0).contains(&x));
        prop_assert!((cdf(x).unwrap() - p).abs() <= 1e-10);
    }

    #[test]
    fn stieltjes_solves_its_quadratic(u in -4.0f64..4.0, log_v in -4.0f64..1.0) {
        let z = UpperHalfPoint::new(u, 10f64.powf(log_v)).unwrap();
        let s = stieltjes(z);
        let zc = z.z();
        prop_assert!((s * s + zc * s + 1.0).norm() <= 1e-12);
        prop_assert!(s.im > 0.0 && s.norm() <= 1.0);
        let mirrored = stieltjes(UpperHalfPoint::new(-u, z.v()).unwrap());
        prop_assert!((mirrored + s.conj()).norm() <= 1e-15);
    }

    #[test]
    fn region_grid_is_fixed_by_membership(log_n in 1.2f64..5.0, a0 in 0.5f64..2.0, uc in 1usize..30, vc in 1usize..20) {
        let n = 10f64.powf(log_n) as usize;
        if let Ok(spec) = RegionSpec::for_dimension(n, a0, uc, vc) {
            let grid = region_grid(&spec);
            prop_assert_eq!(grid.len(), uc * vc);
            prop_assert!(grid.iter().all(|&z| spec.contains(z)));
        }
    }

    #[test]
    fn exponent_fit_recovers_power_laws(slope in -2.0f64..0.5, scale in 0.01f64..10.0) {
        let points: Vec<(f64, f64)> = [64.0, 128.0, 256.0, 512.0].iter().map(|&n: &f64| (n, scale * n.powf(slope))).collect();
        let fit = fit_log_log(&points).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!((fit.r2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kolmogorov_distance_ignores_atom_order(mut atoms in prop::collection::vec(-3.0f64..3.0, 1..60), rot in 0usize..60) {
        let sorted = Esd::of_spectrum(&Spectrum::from_unsorted(atoms.clone()).unwrap()).kolmogorov_distance();
        let k = rot % atoms.len();
        atoms.rotate_left(k);
        atoms.reverse();
        let permuted = Esd::of_spectrum(&Spectrum::from_unsorted(atoms).unwrap()).kolmogorov_distance();
        prop_assert_eq!(sorted, permuted);
        prop_assert!(sorted > 0.0);
    }

    #[test]
    fn report_merge_is_order_independent(entries in prop::collection::vec((0usize..4, 0.0f64..1.0, 0u64..5), 1..30)) {
        let names = ["a", "b", "c", "d"];
        let single = |(k, r, seed): (usize, f64, u64)| {
            let mut rep = IdentityReport::new();
            let loc = Location { n: 4, seed, j: None, u: 0.0, v: 1.0 };
            rep.record_identity(names[k], r, loc, 0.5);
            rep
        };
        let mut forward = IdentityReport::new();
        for &e in &entries {
            forward.merge(&single(e));
        }
        let mut backward = IdentityReport::new();
        for &e in entries.iter().rev() {
            backward.merge(&single(e));
        }
        // grouping: merge halves separately, then together
        let mid = entries.len() / 2;
        let (mut left, mut right) = (IdentityReport::new(), IdentityReport::new());
        entries[..mid].iter().for_each(|&e| left.merge(&single(e)));
        entries[mid..].iter().for_each(|&e| right.merge(&single(e)));
        left.merge(&right);
        prop_assert_eq!(&forward, &backward);
        prop_assert_eq!(&forward, &left);
        let max = entries.iter().map(|e| e.1).fold(0.0, f64::max);
        prop_assert_eq!(forward.max_identity_residual(), max);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigenvalues_conserve_trace_and_frobenius(n in 1usize..48, law in law(), seed: u64) {
        let (_, w) = wigner(n, law, seed);
        let s = eigenvalues(&w).unwrap();
        let scale = 1e-10 * n as f64 * (1.0 + w.max_abs());
        prop_assert!((s.values().iter().sum::<f64>() - w.trace()).abs() <= scale);
        let sq: f64 = s.values().iter().map(|x| x * x).sum();
        prop_assert!((sq - w.frobenius_norm().powi(2)).abs() <= scale * (1.0 + sq));
    }

    #[test]
    fn pipeline_leaves_bounded_standardized_laws_alone(n in 1usize..40, seed: u64, bounded in prop::bool::ANY) {
        let (law, c) = if bounded { (EntryLaw::UniformScaled, 2.0) } else { (EntryLaw::Rademacher, 1.5) };
        let (x, _) = wigner(n, law.clone(), seed);
        let st = standardize_pipeline(&x, &law, c).unwrap();
        for (a, b) in st.breve.as_slice().iter().zip(x.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn pipeline_entries_respect_the_law_bound(n in 1usize..64, law in law(), c in 0.3f64..3.0, seed: u64) {
        let (x, _) = wigner(n, law.clone(), seed);
        match standardize_pipeline(&x, &law, c) {
            Ok(st) => {
                let d1 = breve_bound(&law, c, n).unwrap();
                prop_assert!(st.breve.max_abs() <= d1 * (n as f64).powf(0.25) * (1.0 + 1e-12));
            }
            Err(Error::DegenerateTruncation { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn truncation_obeys_rank_inequality(n in 2usize..40, law in law(), c in 0.3f64..2.0, seed: u64) {
        let (x, w) = wigner(n, law, seed);
        let t = c * (n as f64).powf(0.25);
        let hat = x.map(|v| if v.abs() <= t { v } else { 0.0 });
        let rank = numerical_rank(&x.sub(&hat).unwrap()).unwrap();
        let d = Esd::of_spectrum(&eigenvalues(&w).unwrap())
            .sup_distance_with_slack(&Esd::of_spectrum(&eigenvalues(&assemble(&hat)).unwrap()), 1e-12);
        prop_assert!(d <= rank as f64 / n as f64 + 1e-12);
    }

    #[test]
    fn minor_esd_interlaces(n in 2usize..40, law in law(), seed: u64, j in 0usize..40) {
        let (_, w) = wigner(n, law, seed);
        let j = j % n;
        let full = Esd::of_spectrum(&eigenvalues(&w).unwrap());
        let reduced = Esd::with_normalizer(&eigenvalues(&crate::ensemble::minor(&w, &[j]).unwrap()).unwrap(), n);
        prop_assert!(full.sup_distance_with_slack(&reduced, 1e-12) <= 1.0 / n as f64 + 1e-12);
    }

    #[test]
    fn resolvent_identities_hold(n in 2usize..12, law in law(), seed: u64, u in -3.0f64..3.0, log_v in -2.0f64..0.5, pipeline in prop::bool::ANY) {
        let (x, w) = wigner(n, law.clone(), seed);
        let w = if pipeline {
            match standardize_pipeline(&x, &law, 1.0) {
                Ok(st) => assemble(&st.breve),
                Err(_) => w,
            }
        } else {
            w
        };
        let z = UpperHalfPoint::new(u, 10f64.powf(log_v)).unwrap();
        let report = identity_report(&w, &[z], seed, 1.0).unwrap();
        prop_assert!(report.max_identity_residual() <= 1e-9, "{}", report);
        prop_assert_eq!(report.total_violations(), 0, "{}", report);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn bound_terms_are_additive_and_monotone(shift in -0.1f64..0.1, c1 in 0.0f64..3.0, c2 in 0.0f64..3.0, extra in 0.0f64..2.0) {
        let params = smoothing_params(400, 1.0).unwrap();
        let sf = |z: Complex64| stieltjes_at(z - shift);
        let settings = BoundSettings { c1, c2, ..BoundSettings::default() };
        let b = smoothing_bound(&sf, &params, &settings).unwrap();
        prop_assert!(b.total >= 0.0 && b.integral_top >= 0.0 && b.integral_vertical >= 0.0);
        let sum = 2.0 * b.integral_top + b.term_c1v0 + b.term_c2eps + 2.0 * b.integral_vertical;
        prop_assert!((b.total - sum).abs() <= 1e-15 * b.total.max(1.0));
        let larger = smoothing_bound(&sf, &params, &BoundSettings { c1: c1 + extra, c2: c2 + extra, ..settings }).unwrap();
        prop_assert!(larger.total >= b.total);
    }
}
