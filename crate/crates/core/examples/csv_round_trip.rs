//! Export a simulated cohort to the event/label CSV formats and read it back.

use lfpp::harness::{ingest_events, write_events_csv, write_labels_csv, ModelGenerator};
use lfpp::simulate::{simulate_cohort, ObservationTimes, SimulationPlan};

fn main() -> lfpp::Result<()> {
    let model = ModelGenerator { d: 6, ..Default::default() }.build(0)?;
    let cohort = simulate_cohort(&SimulationPlan {
        model,
        n: 10,
        observation_times: ObservationTimes::Common(40.0),
        seed: 9,
        stratified: true,
        burn_in: None,
    })?;
    let dir = std::env::temp_dir();
    let (events, labels) = (dir.join("lfpp_events.csv"), dir.join("lfpp_labels.csv"));
    write_events_csv(&cohort, &events)?;
    write_labels_csv(&cohort, &labels)?;
    let back = ingest_events(&events, Some(&labels))?;
    println!("{} patients written and read back; identical: {}", back.len(), back == cohort);
    Ok(())
}
