use std::f64::consts::FRAC_PI_8;

use mdm_core::bench::{phi_grid, BenchConfig};
use mdm_core::circuit::MeasurementStrength;
use mdm_core::datared::{aggregate_runs, efficiency_correct, poisson_errors, reduce_table};
use mdm_core::fidelity::{avg_estimation_fidelity, avg_operation_fidelity};
use mdm_core::montecarlo::{expected_counts, simulate_counts, CountsTable};
use mdm_core::qcore::StateLabel;

#[test]
fn efficiency_correction_undoes_channel_loss() {
    let eta = [0.82, 0.95, 0.77, 1.0];
    for phi in phi_grid(10) {
        let mut cfg = BenchConfig::ideal(phi);
        cfg.eta = eta;
        let corrected = efficiency_correct(&expected_counts(&cfg, 10_000).unwrap(), eta).unwrap();
        let p = reduce_table(&corrected).unwrap();
        let s = MeasurementStrength::from_vbs_angle(phi).unwrap();
        assert!((p.g_avg - avg_estimation_fidelity(s)).abs() < 1e-12);
        assert!((p.f_avg - avg_operation_fidelity(s)).abs() < 1e-12);
    }
}

#[test]
fn lossy_interferometer_at_random_guess_resembles_measured_data() {
    let mut cfg = BenchConfig::ideal(FRAC_PI_8);
    cfg.visibility = 0.96;
    cfg.eta = [0.9, 0.97, 0.93, 1.0];
    cfg.dark_rate = 2e-4;

    let dir = std::env::temp_dir().join(format!("mdm-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut runs = Vec::new();
    for seed in 0..3 {
        let path = dir.join(format!("run{seed}.csv"));
        simulate_counts(&cfg, 200_000, seed).unwrap().write(&path).unwrap();
        let table = efficiency_correct(&CountsTable::read(&path).unwrap(), cfg.eta).unwrap();
        // basis states only leak into ψ⊥ through dark clicks
        for label in [StateLabel::H, StateLabel::V] {
            let row = table.row(label);
            assert!(row.n0_perp() + row.n1_perp() < 1e-3 * row.total());
        }
        runs.push(reduce_table(&table).unwrap());
    }
    std::fs::remove_dir_all(&dir).unwrap();

    let p = aggregate_runs(&runs).unwrap();
    assert_eq!(p.n_runs, 3);
    assert!((p.g_avg - 0.5).abs() < 0.005, "{}", p.g_avg);
    // F_avg = 1 - (1 - V)/3 for the dephasing model
    assert!((p.f_avg - (1.0 - 0.04 / 3.0)).abs() < 0.005, "{}", p.f_avg);
    assert!(p.f_avg < 1.0 && p.g_std > 0.0);
    let (sg, sf) = poisson_errors(&efficiency_correct(&simulate_counts(&cfg, 200_000, 0).unwrap(), cfg.eta).unwrap())
        .unwrap();
    assert!(sg > 0.0 && sf > 0.0 && sg < 0.01 && sf < 0.01);
}
