//! Kernel-smoothed cross-covariance of one long sequence against the
//! closed form, with the curve written as `tau,j,j_prime,value`.

use lfpp::model::{two_group_model, RateDesign};
use lfpp::simulate::simulate_patient;
use lfpp::{
    analytic_cross_covariance, estimate_cross_covariance, seeded_rng, EstimatorConfig, TransferBank, TransferKernel,
};

fn main() -> lfpp::Result<()> {
    let mut rng = seeded_rng(3, 0);
    let bank = TransferBank::random_uniform(5, 2, TransferKernel::Gauss, 0.0, 0.5, &mut rng)?;
    let model = two_group_model(bank, vec![0.1; 5], &[1.0, 1.0], 0.5, RateDesign::Anchored)?;
    let t = 2000.0;
    let seq = simulate_patient(&model, 0, t, 10.0, &mut rng)?;
    let cfg = EstimatorConfig::default().with_bandwidth(EstimatorConfig::scheduled_bandwidth(t, 1.0));
    let estimate = estimate_cross_covariance(&seq, &cfg)?;
    let truth = analytic_cross_covariance(&model, 0, estimate.lags())?;
    println!("{} events, bandwidth {:.3}", seq.total_events(), cfg.bandwidth);
    println!("relative Frobenius error {:.4}", estimate.relative_frobenius_error(&truth)?);
    let m0 = estimate.zero_index();
    println!("V_00(0): estimate {:.4}, closed form {:.4}", estimate.get(m0, 0, 0), truth.get(m0, 0, 0));
    let path = std::env::temp_dir().join("lfpp_curve.csv");
    estimate.write_csv(&path)?;
    println!("curve -> {}", path.display());
    Ok(())
}
