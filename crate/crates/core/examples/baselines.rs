//! Count and PMI embeddings of the same patients.

use lfpp::baselines::{count_embedding, pmi_embedding, PmiConfig};
use lfpp::model::{two_group_model, RateDesign};
use lfpp::simulate::simulate_patient;
use lfpp::{seeded_rng, TransferBank, TransferKernel};

fn main() -> lfpp::Result<()> {
    let mut rng = seeded_rng(4, 0);
    let bank = TransferBank::random_uniform(8, 2, TransferKernel::Exp4, 0.0, 0.5, &mut rng)?;
    let model = two_group_model(bank, vec![0.1; 8], &[1.0, 1.0], 0.8, RateDesign::Anchored)?;
    let pmi = PmiConfig::default();
    for g in 0..2 {
        let seq = simulate_patient(&model, g, 100.0, 0.0, &mut rng)?;
        println!("group {g}");
        println!("  counts {:?}", count_embedding(&seq).to_features());
        println!("  pmi    {:?}", pmi_embedding(&seq, &pmi)?.values());
    }
    Ok(())
}
