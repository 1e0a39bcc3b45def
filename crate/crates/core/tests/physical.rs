use flexplan::physical::*;
use flexplan::topology::ChannelIndex;
use proptest::prelude::*;

fn fp() -> FiberParams {
    FiberParams::default()
}

#[test]
fn ase_matches_hand_computation() {
    // 100 km at 0.2 dB/km is 20 dB of gain; nsp 5 dB; photon energy at 192.5 THz.
    let per_span = 99.0 * 10f64.powf(0.5) * 6.626_070_15e-34 * 192.5e12;
    for n in [1u32, 4, 6, 12] {
        let rel = (ase_psd(n, &fp()) - n as f64 * per_span).abs() / (n as f64 * per_span);
        assert!(rel < 1e-12, "n={n} rel={rel}");
    }
}

#[test]
fn snr_best_is_psd_over_ase() {
    let psd = PsdConfig::from_uw_per_ghz(25.0);
    let want = 10.0 * (25e-15 / ase_psd(4, &fp())).log10();
    assert!((snr_best_db(4, &psd, &fp()) - want).abs() < 1e-12);
    assert!((psd.uw_per_ghz() - 25.0).abs() < 1e-12);
}

#[test]
fn xci_prefactor_by_hand() {
    let alpha = 0.2 * std::f64::consts::LN_10 / 10.0;
    let want = 3.0 * 1.3f64.powi(2) / (2.0 * std::f64::consts::PI * alpha * 21.7e-24);
    assert!((fp().xci_prefactor() - want).abs() / want < 1e-12);
}

#[test]
fn xci_rejects_overlap() {
    assert!(xci_efficiency(12.5, 25.0, &fp()).is_err());
    assert!(xci_efficiency(10.0, 25.0, &fp()).is_err());
    assert!(xci_efficiency(12.6, 25.0, &fp()).is_ok());
}

#[test]
fn xci_is_decreasing_and_convex() {
    let e: Vec<f64> = (0..400).map(|i| xci_efficiency(25.5 + i as f64, 25.0, &fp()).unwrap()).collect();
    for w in e.windows(3) {
        assert!(w[1] < w[0]);
        assert!(w[0] - 2.0 * w[1] + w[2] > 0.0);
    }
}

#[test]
fn nli_sums_interferers_weighted_by_shared_spans() {
    let psd = PsdConfig::from_uw_per_ghz(20.0);
    let victim = Placement::new(500.0, 2);
    let it = |c: f64, spans| Interferer {
        placement: Placement::new(c, 2),
        shared_spans: spans,
    };
    let g3 = psd.w_per_hz().powi(3);
    let want = g3 * (3.0 * xci_efficiency(37.5, 25.0, &fp()).unwrap() + 5.0 * xci_efficiency(50.0, 25.0, &fp()).unwrap());
    let got = nli_psd(&victim, 6, &[it(462.5, 3), it(550.0, 5)], &psd, &fp(), 12.5, XciEval::Exact).unwrap();
    assert!((got - want).abs() / want < 1e-12);
    assert!(nli_psd(&victim, 6, &[it(510.0, 1)], &psd, &fp(), 12.5, XciEval::Exact).is_err());
}

#[test]
fn snr_rejects_nonpositive_inputs() {
    assert!(snr_db(0.0, 1.0, 0.0).is_err());
    assert!(snr_db(1.0, 0.0, 0.0).is_err());
    assert!(snr_db(1.0, 1.0, -1.0).is_err());
    assert_eq!(snr_db(10.0, 1.0, 0.0).unwrap(), 10.0);
}

#[test]
fn fit_over_approximates_every_sample() {
    for (bv, bi) in [(2, 2), (2, 4), (4, 2), (6, 6)] {
        let fit = fit_xci_piecewise(bv, bi, 12.5, 750.0, &fp(), 5, 1.0).unwrap();
        assert!(fit.segments.len() <= 5);
        let mut f = fit.f_min;
        while f <= fit.f_max {
            let exact = xci_efficiency(f, bi as f64 * 12.5, &fp()).unwrap();
            assert!(fit.eval(f) >= exact * (1.0 - 1e-9), "({bv},{bi}) at {f}");
            f += 1.0;
        }
        assert!(fit.max_rel_error >= 0.0);
    }
}

#[test]
fn more_segments_tighten_the_fit() {
    let errs: Vec<f64> = [1, 2, 4, 8, 16]
        .iter()
        .map(|&q| fit_xci_piecewise(2, 2, 12.5, 750.0, &fp(), q, 1.0).unwrap().max_rel_error)
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    assert!(errs[4] < errs[0]);
}

#[test]
fn fit_errors() {
    assert_eq!(fit_xci_piecewise(2, 2, 12.5, 750.0, &fp(), 0, 1.0), Err(FitError::ZeroSegments));
    assert!(matches!(fit_xci_piecewise(2, 2, 12.5, 20.0, &fp(), 1, 1.0), Err(FitError::EmptyDomain { .. })));
    assert!(matches!(fit_xci_piecewise(2, 2, 12.5, 27.0, &fp(), 5, 1.0), Err(FitError::TooManySegments { .. })));
}

#[test]
fn fit_table_covers_all_width_pairs() {
    let t = XciFitTable::build(&[2, 4, 2], 12.5, 500.0, &fp(), 3, 1.0, flexplan::Exec::Sequential).unwrap();
    assert_eq!(t.fits.len(), 4);
    assert!(t.get(4, 2).is_some() && t.get(2, 6).is_none());
}

#[test]
fn worst_case_peaks_mid_band() {
    let psd = PsdConfig::default();
    let r = |s| worst_case_ratio(&ChannelIndex::new(s, 2), 60, 2, &psd, &fp(), 12.5);
    assert!(r(30) > r(1));
    assert!(r(30) > r(59));
    assert!((r(1) - r(59)).abs() / r(1) < 1e-12, "band is symmetric");
}

proptest! {
    #[test]
    fn snr_splits_into_best_minus_x(n in 1u32..40, psd_uw in 1.0f64..40.0, nli_ratio in 0.0f64..5.0) {
        let psd = PsdConfig::from_uw_per_ghz(psd_uw);
        let g_ase = ase_psd(n, &fp());
        let snr = snr_db(psd.w_per_hz(), g_ase, nli_ratio * g_ase).unwrap();
        let want = snr_best_db(n, &psd, &fp()) - x_db(g_ase, nli_ratio * g_ase);
        prop_assert!((snr - want).abs() < 1e-9);
    }

    #[test]
    fn fit_is_conservative_anywhere(f in 25.0f64..1000.0, q in 1usize..8) {
        let fit = fit_xci_piecewise(2, 2, 12.5, 1000.0, &fp(), q, 1.0).unwrap();
        // Between samples the chord still lies above a convex curve.
        let exact = xci_efficiency(f.max(25.0 + 1e-6), 25.0, &fp()).unwrap();
        prop_assert!(fit.eval(f) >= exact * (1.0 - 1e-9));
    }
}
