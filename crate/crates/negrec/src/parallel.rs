//! Worker-pool drivers for the embarrassingly parallel stages.
//!
//! Per-user and per-simulation streams are derived from their indices, and
//! results are assembled back in index order before any reduction, so N
//! workers produce output bitwise identical to one.

use rayon::prelude::*;

use negrec_core::catalog::Corpus;
use negrec_core::model::ModelParams;
use negrec_core::responsiveness::{
    aggregate_outcomes, run_single_simulation, MeasureConfig, ResponsivenessReport, SimOutcome,
};
use negrec_core::simenv::{simulate_user, BehaviorConfig, Policy, Trajectory};
use negrec_core::CoreError;

use crate::error::AppError;

fn pool(workers: usize) -> Result<rayon::ThreadPool, AppError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| AppError::Usage(format!("cannot build worker pool: {e}")))
}

#[allow(clippy::too_many_arguments)]
pub fn generate_logs_parallel<P: Policy + Sync + ?Sized>(
    corpus: &Corpus,
    policy: &P,
    behavior: &BehaviorConfig,
    num_users: usize,
    length: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<Trajectory>, AppError> {
    if num_users == 0 {
        return Err(CoreError::InvalidArgument("num_users must be >= 1".into()).into());
    }
    if workers <= 1 {
        return Ok(negrec_core::simenv::generate_logs(
            corpus, policy, behavior, num_users, length, seed,
        )?);
    }
    let logs = pool(workers)?.install(|| {
        (0..num_users)
            .into_par_iter()
            .map(|u| simulate_user(corpus, policy, behavior, seed, u, length))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(logs)
}

pub fn measure_parallel(
    params: &ModelParams,
    corpus: &Corpus,
    config: &MeasureConfig,
    workers: usize,
) -> Result<ResponsivenessReport, AppError> {
    if config.num_simulations == 0 {
        return Err(CoreError::InvalidArgument("num_simulations must be >= 1".into()).into());
    }
    if workers <= 1 {
        return Ok(negrec_core::responsiveness::measure_responsiveness(
            params, corpus, config,
        )?);
    }
    let outcomes: Vec<SimOutcome> = pool(workers)?.install(|| {
        (0..config.num_simulations)
            .into_par_iter()
            .map(|i| run_single_simulation(params, corpus, config, i))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(aggregate_outcomes(&outcomes, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use negrec_core::catalog::{generate_corpus, CorpusSpec};
    use negrec_core::model::FeatureConfig;
    use negrec_core::simenv::RandomPolicy;

    #[test]
    fn worker_count_does_not_change_logs() {
        let corpus = generate_corpus(&CorpusSpec::new(40, 4, 4, 8, 0)).unwrap();
        let policy = RandomPolicy {
            num_items: corpus.len(),
            slate_size: 10,
        };
        let behavior = BehaviorConfig::default();
        let one = generate_logs_parallel(&corpus, &policy, &behavior, 24, 12, 3, 1).unwrap();
        let four = generate_logs_parallel(&corpus, &policy, &behavior, 24, 12, 3, 4).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn worker_count_does_not_change_measurement() {
        let corpus = generate_corpus(&CorpusSpec::new(40, 4, 4, 8, 0)).unwrap();
        let features = FeatureConfig {
            use_dislike_feature: true,
            ..FeatureConfig::default()
        };
        let params = ModelParams::init(corpus.len(), 8, 50, features, 5);
        let config = MeasureConfig::new(30, 6, 8, 11);
        let one = measure_parallel(&params, &corpus, &config, 1).unwrap();
        let four = measure_parallel(&params, &corpus, &config, 4).unwrap();
        assert_eq!(one, four);
    }
}
