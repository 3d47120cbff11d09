use qmi_beamforming::hermitian::dot;
use qmi_beamforming::scenario::{
    sample_covariance, scattered_covariance, simulate_snapshots, AngularDensity, ArrayGeometry, ScenarioSpec,
    DEFAULT_GRID_POINTS,
};
use qmi_beamforming::HermitianMatrix;

fn reference() -> ScenarioSpec {
    ScenarioSpec::reference(AngularDensity::Gaussian { center_deg: 30.0, spread_deg: 4.0 }, 10.0)
}

fn densities() -> Vec<AngularDensity> {
    vec![
        AngularDensity::Gaussian { center_deg: 30.0, spread_deg: 4.0 },
        AngularDensity::Gaussian { center_deg: 34.0, spread_deg: 6.0 },
        AngularDensity::Gaussian { center_deg: 30.0, spread_deg: 0.15 },
        AngularDensity::Uniform { center_deg: 10.0, width_deg: 10.0 },
        AngularDensity::TruncatedLaplacian { center_deg: 30.0, scale_rad: 0.1, support_deg: (15.0, 45.0) },
    ]
}

#[test]
fn noise_only_sample_covariance_converges() {
    let mut spec = reference();
    spec.signal.density = AngularDensity::Point { center_deg: 0.0 };
    spec.signal.power_db = -400.0;
    spec.interferers.clear();
    let s = spec.build().unwrap();
    let r = simulate_snapshots(&s, 100_000, 1).unwrap();
    let i = HermitianMatrix::identity(10);
    let rel = r.sub(&i).frob_norm() / i.frob_norm();
    assert!(rel <= 0.05, "relative deviation {rel}");
}

#[test]
fn trace_mean_matches_model() {
    let s = reference().build().unwrap();
    let expect = s.rs.trace() + s.r_in.trace();
    let traces: Vec<f64> = (0..100).map(|seed| simulate_snapshots(&s, 50, seed).unwrap().trace()).collect();
    let mean = traces.iter().sum::<f64>() / 100.0;
    let var = traces.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / 99.0;
    let se = (var / 100.0).sqrt();
    assert!((mean - expect).abs() <= 3.0 * se, "mean {mean}, expected {expect}, se {se}");
}

#[test]
fn components_are_uncorrelated() {
    let s = reference().build().unwrap();
    let t = 20_000;
    let streams = s.simulate_streams(t, 3);
    let n = s.dim();
    // Normalized cross-covariance between signal and interference streams.
    let mut worst = 0.0f64;
    for p in 0..n {
        for q in 0..n {
            let sp: Vec<_> = streams.signal.iter().map(|v| v[p]).collect();
            let iq: Vec<_> = streams.interference.iter().map(|v| v[q]).collect();
            let c = dot(&iq, &sp).norm() / t as f64;
            let scale = (s.rs.get(p, p).re * s.ri.get(q, q).re).sqrt();
            worst = worst.max(c / scale);
        }
    }
    // Standard error of a unit-variance correlation estimate is 1/√T.
    assert!(worst <= 5.0 / (t as f64).sqrt(), "max normalized cross-covariance {worst}");
    let direct = sample_covariance(&streams.observations()).unwrap();
    assert_eq!(direct, simulate_snapshots(&s, t, 3).unwrap());
}

#[test]
fn grid_refinement_is_stable() {
    let g = ArrayGeometry::half_wavelength(10).unwrap();
    for d in densities() {
        let a = scattered_covariance(&d, 0.0, &g, DEFAULT_GRID_POINTS).unwrap();
        let b = scattered_covariance(&d, 0.0, &g, 2 * DEFAULT_GRID_POINTS).unwrap();
        let rel = a.sub(&b).frob_norm() / b.frob_norm();
        assert!(rel <= 1e-6, "{d:?}: {rel}");
    }
}

#[test]
fn covariances_are_psd() {
    let g = ArrayGeometry::half_wavelength(10).unwrap();
    for d in densities() {
        for p in [-10.0, 0.0, 30.0] {
            assert!(scattered_covariance(&d, p, &g, DEFAULT_GRID_POINTS).unwrap().is_psd(1e-10));
        }
    }
    let s = reference().build().unwrap();
    for m in [&s.rs, &s.ri, &s.r_in, &s.rs_hat] {
        assert!(m.is_psd(1e-10));
    }
}
