//! Simulate a two-group cohort and look at per-code event counts.

use lfpp::model::{two_group_model, RateDesign};
use lfpp::simulate::{simulate_cohort, ObservationTimes, SimulationPlan};
use lfpp::{seeded_rng, TransferBank, TransferKernel};

fn main() -> lfpp::Result<()> {
    let mut rng = seeded_rng(7, 0);
    let bank = TransferBank::random_uniform(10, 2, TransferKernel::Gauss, 0.0, 0.5, &mut rng)?;
    let model = two_group_model(bank, vec![0.1; 10], &[1.0, 1.0], 0.8, RateDesign::Anchored)?;
    let plan = SimulationPlan {
        model,
        n: 6,
        observation_times: ObservationTimes::Common(100.0),
        seed: 11,
        stratified: true,
        burn_in: None,
    };
    let cohort = simulate_cohort(&plan)?;
    for r in &cohort.records {
        println!(
            "patient {} (group {}): {} events, counts {:?}",
            r.id,
            r.label.as_deref().unwrap_or("?"),
            r.events.total_events(),
            r.events.counts()
        );
    }
    Ok(())
}
