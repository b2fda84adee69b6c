//! Logistic regression and spectral-init K-means on Fourier-Eigen
//! embeddings, scored by AUC and adjusted Rand index.

use lfpp::harness::{Embedders, Method, ModelGenerator};
use lfpp::learn::{adjusted_rand_index, auc, kmeans_spectral, predict_score, train_logistic, LogisticConfig};
use lfpp::simulate::{simulate_cohort, ObservationTimes, SimulationPlan};
use lfpp::{Dataset, EstimatorConfig, SpectralConfig};

fn main() -> lfpp::Result<()> {
    let model = ModelGenerator { d: 20, delta: 0.8, ..Default::default() }.build(1)?;
    let cohort = |n, seed| {
        simulate_cohort(&SimulationPlan {
            model: model.clone(),
            n,
            observation_times: ObservationTimes::Common(150.0),
            seed,
            stratified: true,
            burn_in: None,
        })
    };
    let (train, test) = (cohort(100, 1)?, cohort(50, 2)?);
    let positive = |d: &Dataset| d.records.iter().map(|r| r.label.as_deref() == Some("1")).collect::<Vec<_>>();
    let embedders = Embedders::new(EstimatorConfig::default(), SpectralConfig::default(), Default::default())?;
    for method in Method::ALL {
        let x = embedders.features(&train, method)?;
        let fit = train_logistic(&x, &positive(&train), &LogisticConfig::default())?;
        let scores = embedders
            .features(&test, method)?
            .iter()
            .map(|f| predict_score(&fit, f))
            .collect::<lfpp::Result<Vec<_>>>()?;
        let clusters = kmeans_spectral(&x, 2, 0, 300)?;
        let ari = adjusted_rand_index(&positive(&train), &clusters.assignments)?;
        println!("{method:<14} test AUC {:.3}  train ARI {:.3}", auc(&scores, &positive(&test))?, ari);
    }
    Ok(())
}
