use mnl_lab::environment::ScheduleSpec;
use mnl_lab::harness::{
    run_experiment, sweep, CatalogSpec, ExperimentConfig, LearnerSpec, SweepConfig, SweepParameter,
};
use mnl_lab::master::MasterConfig;
use mnl_lab::stats::{mean, std_dev};

fn config(learner: LearnerSpec, horizon: usize, reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        catalog: CatalogSpec {
            n_items: 6,
            capacity: 3,
            payoffs: Some(vec![1.0, 0.9, 0.7, 0.8, 0.6, 0.5]),
        },
        schedule: ScheduleSpec::Piecewise {
            breakpoints: vec![horizon / 3],
            anchors: vec![
                vec![0.8, 0.2, 0.5, 0.1, 0.6, 0.3],
                vec![0.1, 0.9, 0.2, 0.7, 0.3, 0.8],
            ],
        },
        learner,
        horizon,
        replications: reps,
        master_seed: 99,
        output: None,
    }
}

#[test]
fn realized_and_pseudo_regret_differ_by_zero_mean_noise() {
    let cfg = config(LearnerSpec::EpochUcb { c_scale: 1.0 / 192.0 }, 500, 100);
    let (summary, _) = run_experiment(&cfg).unwrap();
    let gaps: Vec<f64> = summary
        .runs
        .iter()
        .map(|r| r.final_realized_regret - r.final_pseudo_regret)
        .collect();
    let se = std_dev(&gaps) / (gaps.len() as f64).sqrt();
    assert!(mean(&gaps).abs() <= 3.0 * se, "mean {} se {se}", mean(&gaps));
}

#[test]
fn master_regret_grows_with_the_number_of_switches() {
    let base = ExperimentConfig {
        catalog: CatalogSpec {
            n_items: 16,
            capacity: 2,
            payoffs: None,
        },
        schedule: ScheduleSpec::Stationary { omega: vec![0.5; 16] },
        learner: LearnerSpec::MasterEpochUcb {
            c_scale: 1.0 / 192.0,
            master: MasterConfig::default(),
        },
        horizon: 4000,
        replications: 10,
        master_seed: 5,
        output: None,
    };
    let report = sweep(&SweepConfig {
        base,
        parameter: SweepParameter::Switches,
        values: vec![1.0, 2.0, 4.0, 8.0],
    })
    .unwrap();
    let means: Vec<f64> = report.rows.iter().map(|r| r.mean_pseudo_regret).collect();
    assert!(means.windows(2).all(|w| w[0] <= w[1]), "{means:?}");
}
