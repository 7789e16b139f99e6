//! Runs the standard protocol over a grid of separations and prints rejection fractions.

use lcseq::estimators::{BandwidthRule, EstimatorSpec};
use lcseq::simlab::{run_experiment, ExperimentConfig};

fn main() -> lcseq::Result<()> {
    let reps: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(100);
    let mus = vec![0.0, 2.0, 4.0, 6.0, 8.0];
    for estimator in [
        EstimatorSpec::default(),
        EstimatorSpec::Kde {
            bandwidth: BandwidthRule::Silverman,
        },
        EstimatorSpec::Gmm2(Default::default()),
    ] {
        let config = ExperimentConfig {
            estimator,
            ..ExperimentConfig::new(mus.clone(), reps)
        };
        report(&estimator.label(), &config)?;
    }
    for &mu in &mus {
        let config = ExperimentConfig {
            estimator: EstimatorSpec::Oracle { mu },
            ..ExperimentConfig::new(vec![mu], reps)
        };
        report(&format!("ORACLE mu={mu}"), &config)?;
    }
    Ok(())
}

fn report(label: &str, config: &ExperimentConfig) -> lcseq::Result<()> {
    let start = std::time::Instant::now();
    let result = run_experiment(config)?;
    println!("{label} ({:.1?})", start.elapsed());
    for &mu in &config.mu_values {
        let fr: Vec<String> = result
            .summary
            .rows
            .iter()
            .filter(|r| r.mu == mu)
            .map(|r| format!("{:.2}", r.rejection_fraction))
            .collect();
        println!("  mu={mu}: {}", fr.join(" "));
    }
    Ok(())
}
