//! Population spectral quantities of a two-group model and the separation
//! bound between their embeddings.

use lfpp::model::{two_group_model, RateDesign};
use lfpp::{seeded_rng, separation_diagnostic, PopulationOracle, TransferBank, TransferKernel};

fn main() -> lfpp::Result<()> {
    let mut rng = seeded_rng(2, 0);
    let bank = TransferBank::random_uniform(20, 2, TransferKernel::Gauss, 0.0, 0.5, &mut rng)?;
    for delta in [0.2, 0.5, 0.8] {
        let model = two_group_model(bank.clone(), vec![0.1; 20], &[1.0, 1.0], delta, RateDesign::Anchored)?;
        let oracle = PopulationOracle::new(&model, 0.1)?;
        let report = separation_diagnostic(&oracle, "0", "1")?;
        println!(
            "delta {delta}: embeddings {:?} vs {:?}, distance {:.4} >= bound {:.4}: {}",
            oracle.embeddings[0].values(),
            oracle.embeddings[1].values(),
            report.left,
            report.right,
            report.holds
        );
    }
    Ok(())
}
