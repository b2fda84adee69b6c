//! Fourier-Eigen embeddings of simulated patients next to the population
//! embedding of their group.

use lfpp::model::{two_group_model, RateDesign};
use lfpp::simulate::{simulate_cohort, ObservationTimes, SimulationPlan};
use lfpp::{
    population_embedding, seeded_rng, EstimatorConfig, FourierEigenEmbedder, SpectralConfig, TransferBank,
    TransferKernel,
};

fn main() -> lfpp::Result<()> {
    let mut rng = seeded_rng(5, 0);
    let bank = TransferBank::random_uniform(10, 2, TransferKernel::Gauss, 0.0, 0.5, &mut rng)?;
    let model = two_group_model(bank, vec![0.1; 10], &[1.0, 1.0], 1.0, RateDesign::Anchored)?;
    let spectral = SpectralConfig { frequency: 0.1, embed_dim: 2 };
    let cohort = simulate_cohort(&SimulationPlan {
        model: model.clone(),
        n: 6,
        observation_times: ObservationTimes::Common(1000.0),
        seed: 1,
        stratified: true,
        burn_in: None,
    })?;
    let embedder = FourierEigenEmbedder::new(EstimatorConfig::default().with_bandwidth(EstimatorConfig::scheduled_bandwidth(1000.0, 1.0)), spectral)?;
    for group in ["0", "1"] {
        let (e, _) = population_embedding(&model, group, spectral.frequency)?;
        println!("group {group} population embedding {:?}", e.values());
    }
    for r in &cohort.records {
        let e = embedder.embed(&r.events)?;
        println!("patient {} (group {}): {:?}", r.id, r.label.as_deref().unwrap_or("?"), e.values());
    }
    Ok(())
}
