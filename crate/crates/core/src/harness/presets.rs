//! Named experiment configurations.

use super::config::{
    Algorithm, EnvironmentConfig, ExperimentConfig, HorizonMode, Metric, OracleConfig, SspConfig,
    TuningConfig,
};
use crate::environments::FVariant;
use crate::error::{Error, Result};

pub const PRESETS: [&str; 10] = [
    "exp1",
    "exp2",
    "exp3",
    "exp1-desk",
    "exp2-desk",
    "exp3-desk",
    "example1",
    "hb1-synth",
    "hb2-synth",
    "hb3-synth",
];

pub const DEFAULT_SEED: u64 = 20_240_601;

fn simulated(name: &str, variant: FVariant, desk: bool) -> ExperimentConfig {
    let (m, k, replications, horizons) = if desk {
        (3, 5, 50, vec![2_000, 8_000, 32_000])
    } else {
        (5, 10, 200, vec![100_000, 200_000, 400_000])
    };
    ExperimentConfig {
        name: name.into(),
        seed: DEFAULT_SEED,
        replications,
        horizons,
        mode: HorizonMode::Sweep,
        curve_points: 100,
        algorithms: Algorithm::ALL.to_vec(),
        metric: Metric::Regret,
        tuning: TuningConfig::ProblemIndependent { m: 1.0 },
        oracle: OracleConfig::Exact,
        environment: EnvironmentConfig::UniformRandom {
            m,
            k,
            reward: variant,
        },
    }
}

fn header_bidding(name: &str, ssps: Vec<SspConfig>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seed: DEFAULT_SEED,
        replications: 50,
        horizons: vec![50_000],
        mode: HorizonMode::Curve,
        curve_points: 100,
        algorithms: Algorithm::ALL.to_vec(),
        metric: Metric::Ppr,
        tuning: TuningConfig::ProblemIndependent { m: 1.0 },
        oracle: OracleConfig::MonteCarlo { samples: 2_000 },
        environment: EnvironmentConfig::HeaderBidding {
            k: 15,
            ssps,
            bootstrap_n: 10_000,
        },
    }
}

fn lognormal(first: (f64, f64), second: (f64, f64), cap: f64) -> SspConfig {
    SspConfig::Lognormal { first, second, cap }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    Ok(match name {
        "exp1" => simulated(name, FVariant::F1, false),
        "exp2" => simulated(name, FVariant::F2, false),
        "exp3" => simulated(name, FVariant::F3, false),
        "exp1-desk" => simulated(name, FVariant::F1, true),
        "exp2-desk" => simulated(name, FVariant::F2, true),
        "exp3-desk" => simulated(name, FVariant::F3, true),
        "example1" => ExperimentConfig {
            name: name.into(),
            seed: DEFAULT_SEED,
            replications: 500,
            horizons: vec![100_000],
            mode: HorizonMode::Sweep,
            curve_points: 100,
            algorithms: vec![Algorithm::EtcSlate],
            metric: Metric::Regret,
            tuning: TuningConfig::ProblemDependent {
                delta_min: None,
                m: 1.0,
            },
            oracle: OracleConfig::Exact,
            environment: EnvironmentConfig::Example1,
        },
        // SSPs with different bid levels and spreads.
        "hb1-synth" => header_bidding(
            name,
            vec![
                lognormal((0.0, 0.6), (-0.3, 0.6), 3.0),
                lognormal((0.0, 0.5), (0.0, 0.5), 3.0),
                lognormal((-0.2, 0.7), (0.0, 0.4), 3.0),
                lognormal((0.1, 0.3), (0.0, 0.3), 2.5),
            ],
        ),
        // Four identically distributed SSPs.
        "hb2-synth" => header_bidding(name, vec![lognormal((0.0, 0.5), (0.0, 0.5), 3.0); 4]),
        // Uniform bid lists.
        "hb3-synth" => header_bidding(
            name,
            vec![
                SspConfig::Uniform { first: (0.5, 3.0), second: (0.5, 2.0) },
                SspConfig::Uniform { first: (1.0, 2.0), second: (0.2, 2.5) },
                SspConfig::Uniform { first: (0.1, 4.0), second: (0.1, 1.0) },
                SspConfig::Uniform { first: (1.5, 2.5), second: (1.0, 3.0) },
            ],
        ),
        other => return Err(Error::UnknownPreset(other.into())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid_and_serializable() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.name, name);
            let text = cfg.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg, "{name}");
        }
        assert!(matches!(preset("exp4"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn desk_presets_shrink_the_problem() {
        let cfg = preset("exp1-desk").unwrap();
        assert_eq!(cfg.replications, 50);
        assert_eq!(cfg.horizons, [2_000, 8_000, 32_000]);
        assert!(matches!(
            cfg.environment,
            EnvironmentConfig::UniformRandom { m: 3, k: 5, reward: FVariant::F1 }
        ));
        let full = preset("exp2").unwrap();
        assert_eq!(full.replications, 200);
        assert!(matches!(full.environment, EnvironmentConfig::UniformRandom { m: 5, k: 10, .. }));
    }
}
