//! Cross-check between the two bootstrap-probability routes: quadrature
//! against simulated parametric resampling frequencies.

use msboot::engine::parametric_counts;
use msboot::grid::ScaleGrid;
use msboot::region::{OracleConfig, RegionOracle, RegionSpec, SphereOrientation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const B: u64 = 1_000_000;

fn plane_case(spec: RegionSpec, rng: &mut ChaCha8Rng) -> (RegionSpec, Vec<f64>) {
    let (s, a) = match spec {
        RegionSpec::Halfspace => (0.0, 0.0),
        RegionSpec::CurveBoundary { sign, a } => (sign as f64, a),
        RegionSpec::SphereShell { .. } => unreachable!(),
    };
    let u: f64 = rng.random_range(-1.5..1.5);
    let boundary = if s == 0.0 {
        0.0
    } else {
        -s * (a + u * u / 3.0).sqrt()
    };
    let offset: f64 = rng.random_range(-1.5..1.5);
    (spec, vec![u, boundary + offset])
}

#[test]
fn simulated_frequencies_agree_with_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut checked = 0;
    for trial in 0..20u64 {
        let (spec, y) = match trial % 5 {
            0 => plane_case(RegionSpec::Halfspace, &mut rng),
            1 => plane_case(RegionSpec::CurveBoundary { sign: -1, a: 1.0 }, &mut rng),
            2 => plane_case(RegionSpec::CurveBoundary { sign: 1, a: 1.0 }, &mut rng),
            3 => plane_case(RegionSpec::CurveBoundary { sign: -1, a: 0.0 }, &mut rng),
            _ => {
                let theta = 9.0;
                let mut y = vec![0.0; 10];
                y[0] = theta + rng.random_range(-1.5..1.0);
                (
                    RegionSpec::SphereShell {
                        theta,
                        dim: 10,
                        orientation: SphereOrientation::HOutside,
                    },
                    y,
                )
            }
        };
        let sigma2: f64 = rng.random_range(0.35..3.0);
        let oracle = RegionOracle::new(spec, OracleConfig::default()).unwrap();
        let exact = oracle.bootstrap_prob(&y, sigma2).unwrap();
        let grid = ScaleGrid::from_sigma2(&[sigma2]).unwrap();
        let table = parametric_counts(
            &y,
            |point| spec.contains(point).unwrap(),
            &grid,
            B,
            1000 + trial,
        )
        .unwrap();
        let freq = table.rows[0].c as f64 / B as f64;
        let se = (exact * (1.0 - exact) / B as f64).sqrt().max(1e-5);
        assert!(
            (freq - exact).abs() <= 4.0 * se,
            "trial {trial} {spec:?}: freq {freq} vs exact {exact} (4se = {})",
            4.0 * se
        );
        checked += 1;
    }
    assert_eq!(checked, 20);
}
