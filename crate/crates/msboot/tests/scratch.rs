use msboot::region::{simulate_table, OracleConfig, RegionOracle, RegionSpec, RejectionMethod};
use std::time::Instant;

#[test]
#[ignore]
fn print_concave_tables() {
    let methods: Vec<RejectionMethod> = [
        "bp", "au3", "2bp", "2au2", "2au3", "sdbp", "si2", "si3",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect();
    let thetas: Vec<f64> = (0..8).map(|i| 0.5 * i as f64).collect();
    for spec in [RegionSpec::concave_smooth(), RegionSpec::concave_cone()] {
        let t0 = Instant::now();
        let oracle = RegionOracle::new(spec, OracleConfig::default()).unwrap();
        let table = simulate_table(&oracle, &methods, 0.1, &thetas).unwrap();
        println!("=== {spec:?} ({:.1?}) ===", t0.elapsed());
        println!("{}", table.to_tsv());
    }
}

#[test]
#[ignore]
fn print_convex_tables() {
    let methods: Vec<RejectionMethod> = [
        "bp", "au3", "2bp", "2au2", "2au3", "sdbp", "si2", "si3",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect();
    let thetas: Vec<f64> = (0..8).map(|i| 0.5 * i as f64).collect();
    for spec in [RegionSpec::convex_smooth(), RegionSpec::convex_cone()] {
        let t0 = Instant::now();
        let oracle = RegionOracle::new(spec, OracleConfig::default()).unwrap();
        let table = simulate_table(&oracle, &methods, 0.1, &thetas).unwrap();
        println!("=== {spec:?} ({:.1?}) ===", t0.elapsed());
        println!("{}", table.to_tsv());
    }
}
