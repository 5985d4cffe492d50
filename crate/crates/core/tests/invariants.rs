use ambc_core::covariance::{
    det_decomposition, eigen_spectrum, sample_covariance, theoretical_covariance, Hypothesis,
};
use ambc_core::detectors::{decide, se_statistic, threshold_for_pfa};
use ambc_core::model::{generate_channels, idask_gate_sequence, synthesize_frame, IdaskRatio, Modulation, SystemConfig};
use ambc_core::theory::{pfa_analytic, pmd_conditional};
use ambc_core::tracy_widom::tw2_cdf;
use ambc_core::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const RATIOS: [(u64, u64); 7] = [(8, 7), (4, 3), (2, 1), (3, 1), (4, 1), (8, 1), (16, 1)];

fn modulation() -> impl Strategy<Value = Modulation> {
    prop_oneof![
        Just(Modulation::Gaussian),
        Just(Modulation::Bpsk),
        Just(Modulation::Qpsk),
        Just(Modulation::Qam16),
    ]
}

prop_compose! {
    fn scenario()(
        antennas in 2usize..9,
        half_len in 4usize..60,
        ratio in 0usize..RATIOS.len(),
        gamma_db in -10.0f64..40.0,
        delta_gamma_db in -40.0f64..0.0,
        noise_var_dbm in -30.0f64..10.0,
        modulation in modulation(),
        seed in any::<u64>(),
    ) -> SystemConfig {
        let (num, den) = RATIOS[ratio];
        // Round 2N up to a multiple of the ratio numerator so 2N/k is an integer.
        let frame_len = (2 * half_len).div_ceil(2 * num as usize) * 2 * num as usize;
        SystemConfig {
            antennas,
            half_len: frame_len / 2,
            idask: IdaskRatio::new(num, den).unwrap(),
            gamma_db,
            delta_gamma_db,
            noise_var_dbm,
            modulation,
            seed,
            ..SystemConfig::default()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gate_has_reflected_len_ones(cfg in scenario()) {
        prop_assert!(cfg.validate().is_ok());
        let on = idask_gate_sequence(&cfg, true).unwrap();
        let off = idask_gate_sequence(&cfg, false).unwrap();
        prop_assert_eq!(on.bits.len(), cfg.frame_len());
        prop_assert_eq!(on.ones() as f64, cfg.frame_len() as f64 / cfg.idask.value());
        prop_assert_eq!(off.ones(), 0);
        // Ones sit at the tail.
        prop_assert!(on.bits.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn determinant_split_is_exact(cfg in scenario()) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let ch = generate_channels(&cfg, &mut rng).unwrap();
        let d = det_decomposition(&cfg, &ch).unwrap();
        let rel = ((d.dominant + d.remainder) - d.exact).abs() / d.exact.abs();
        prop_assert!(rel <= 1e-9, "relative error {rel}");
    }

    #[test]
    fn direct_only_covariance_has_flat_noise_floor(cfg in scenario()) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let ch = generate_channels(&cfg, &mut rng).unwrap();
        let r = theoretical_covariance(&cfg, &ch, Hypothesis::H0).unwrap();
        let spec = eigen_spectrum(&r.r).unwrap();
        let floor = cfg.noise_var();
        for rank in 2..=cfg.antennas {
            let rel = (spec.nth_largest(rank) - floor).abs() / floor;
            prop_assert!(rel <= 1e-8, "rank {rank}: {rel}");
        }
    }

    #[test]
    fn synthesis_is_deterministic(cfg in scenario(), bit in any::<bool>()) {
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let ch = generate_channels(&cfg, &mut rng).unwrap();
            synthesize_frame(&cfg, &ch, bit, &mut rng).unwrap()
        };
        prop_assert_eq!(draw(), draw());
    }

    #[test]
    fn sample_covariance_is_hermitian_psd(cfg in scenario(), bit in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let ch = generate_channels(&cfg, &mut rng).unwrap();
        let frame = synthesize_frame(&cfg, &ch, bit, &mut rng).unwrap();
        let r = sample_covariance(&frame);
        let skew = (&r - r.adjoint()).norm();
        prop_assert!(skew <= 1e-12 * r.norm(), "skew {skew}");
        let spec = eigen_spectrum(&r).unwrap();
        prop_assert!(spec.is_psd());
    }

    #[test]
    fn statistic_ignores_frame_scale(cfg in scenario(), bit in any::<bool>(), log_c in -6.0f64..6.0) {
        prop_assume!(cfg.antennas >= 3);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let ch = generate_channels(&cfg, &mut rng).unwrap();
        let frame = synthesize_frame(&cfg, &ch, bit, &mut rng).unwrap();
        let mut scaled = frame.clone();
        scaled.y *= Complex64::from(10f64.powf(log_c));
        let t = se_statistic(&eigen_spectrum(&sample_covariance(&frame)).unwrap(), cfg.m_index).unwrap();
        let ts = se_statistic(&eigen_spectrum(&sample_covariance(&scaled)).unwrap(), cfg.m_index).unwrap();
        prop_assert!((t - ts).abs() <= 1e-8 * t.abs(), "{t} vs {ts}");
        prop_assert!(t >= 0.0);
    }

    #[test]
    fn decision_is_strictly_above(statistic in 0.0f64..5.0, eta in 0.0f64..5.0) {
        prop_assert_eq!(decide(statistic, eta), statistic > eta);
        prop_assert!(!decide(eta, eta));
    }

    #[test]
    fn tw2_cdf_is_monotone_and_bounded(a in -12.0f64..10.0, b in -12.0f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fl, fh) = (tw2_cdf(lo), tw2_cdf(hi));
        prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
        prop_assert!(fl <= fh, "F({lo}) = {fl} > F({hi}) = {fh}");
    }

    #[test]
    fn threshold_decreases_in_pfa(
        log_p in -4.0f64..-0.01,
        gap in 0.01f64..1.0,
        antennas in 2usize..32,
        half_len in 10usize..400,
    ) {
        let frame_len = 2 * half_len.max(antennas);
        let (p1, p2) = (10f64.powf(log_p - gap), 10f64.powf(log_p));
        let e1 = threshold_for_pfa(p1, antennas, frame_len).unwrap();
        let e2 = threshold_for_pfa(p2, antennas, frame_len).unwrap();
        prop_assert!(e1 > e2, "eta({p1}) = {e1} vs eta({p2}) = {e2}");
    }

    #[test]
    fn pfa_inverts_threshold(p in 1e-4f64..(1.0 - 1e-4), antennas in 2usize..32, half_len in 10usize..400) {
        let frame_len = 2 * half_len.max(antennas);
        let eta = threshold_for_pfa(p, antennas, frame_len).unwrap();
        let back = pfa_analytic(eta, antennas, frame_len).unwrap();
        prop_assert!((back - p).abs() <= 1e-6, "{p} -> {eta} -> {back}");
    }

    #[test]
    fn pmd_falls_with_backscatter_snr(
        eta in 1.2f64..3.0,
        g in 0.5f64..100.0,
        step in 1.0f64..10.0,
        antennas in 2usize..12,
        half_len in 20usize..200,
    ) {
        let frame_len = 2 * half_len;
        let lo = pmd_conditional(eta, g, antennas, frame_len).unwrap();
        let hi = pmd_conditional(eta, (g * step).min(100.0), antennas, frame_len).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi <= lo + 1e-15, "{lo} then {hi}");
    }

    #[test]
    fn energy_split_peaks_at_two(num in 2u64..400, den in 1u64..200) {
        prop_assume!(num > den);
        let k = IdaskRatio::new(num, den).unwrap();
        let best = IdaskRatio::integer(2).unwrap().energy_split();
        prop_assert!(k.energy_split() <= best);
        prop_assert_eq!(best, 0.25);
    }
}
