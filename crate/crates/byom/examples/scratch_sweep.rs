use byom::lab::{
    run_interference_suite, EvalReport, LabParams, PairKind, SuiteConfig, SuiteMethod, SuitePlan,
};
use byom::merge::MergeMethod;

fn find<'a>(reports: &'a [EvalReport], method: &str, sweep: f64, seed: u64) -> &'a EvalReport {
    reports
        .iter()
        .find(|r| r.method == method && r.sweep_value == sweep && r.seed == seed)
        .unwrap()
}

fn probe(tag: &str, params: &LabParams) {
    let seeds: Vec<u64> = (0..6).collect();
    // Count sweep at T = 2 and 8 only.
    let cfg = SuiteConfig {
        plan: SuitePlan::TaskCountSweep {
            task_counts: vec![2, 8],
        },
        methods: vec![
            SuiteMethod::SingleTask,
            SuiteMethod::TaskArithmetic,
            SuiteMethod::ByomFft {
                base: MergeMethod::TaskArithmetic,
            },
        ],
        seeds: seeds.clone(),
        keep_ratio: 0.10,
        params: params.clone(),
        ..SuiteConfig::default()
    };
    let reports = run_interference_suite(&cfg).unwrap();
    let mean = |m: &str, t: f64| -> f64 {
        seeds.iter().map(|&s| find(&reports, m, t, s).average_normalized()).sum::<f64>()
            / seeds.len() as f64
    };
    let single_acc = seeds
        .iter()
        .map(|&s| find(&reports, "single_task", 8.0, s).average_accuracy())
        .sum::<f64>()
        / seeds.len() as f64;
    let b_ok = seeds
        .iter()
        .filter(|&&s| {
            [2.0, 8.0].iter().all(|&t| {
                find(&reports, "byom_fft@task_arithmetic", t, s).average_normalized()
                    > find(&reports, "task_arithmetic", t, s).average_normalized()
            })
        })
        .count();

    // Lambda sweep, both pairs, coarse grid.
    let mut gaps = Vec::new();
    for pair in [PairKind::Dissimilar, PairKind::SimilarDisjoint] {
        let cfg = SuiteConfig {
            plan: SuitePlan::LambdaSweep {
                pair,
                lambdas: vec![0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0],
            },
            methods: vec![
                SuiteMethod::SingleTask,
                SuiteMethod::WeightedAverage,
                SuiteMethod::TaskArithmetic,
            ],
            seeds: seeds.clone(),
            params: params.clone(),
            ..SuiteConfig::default()
        };
        let reports = run_interference_suite(&cfg).unwrap();
        let mut pair_gaps = Vec::new();
        for &seed in &seeds {
            let single = find(&reports, "single_task", 0.0, seed).average_accuracy();
            let best = reports
                .iter()
                .filter(|r| {
                    r.seed == seed
                        && (r.method == "weighted_average" || r.method == "task_arithmetic")
                })
                .map(|r| r.average_accuracy())
                .fold(f64::NEG_INFINITY, f64::max);
            pair_gaps.push(single - best);
        }
        gaps.push(pair_gaps);
    }
    let gap_ok: Vec<usize> = gaps
        .iter()
        .map(|g| g.iter().filter(|&&x| x >= 0.05).count())
        .collect();
    let gap_mean: Vec<f64> =
        gaps.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();

    println!(
        "{tag}: single8={single_acc:.3} ta2={:.3} ta8={:.3} by2={:.3} by8={:.3} 7b={b_ok}/6 | gapDis={:.3}({}/6) gapSim={:.3}({}/6)",
        mean("task_arithmetic", 2.0),
        mean("task_arithmetic", 8.0),
        mean("byom_fft@task_arithmetic", 2.0),
        mean("byom_fft@task_arithmetic", 8.0),
        gap_mean[0], gap_ok[0], gap_mean[1], gap_ok[1],
    );
}

fn main() {
    let base = LabParams::default();
    for (tag, noise, sep, ft, lr, pre) in [
        ("G s2.0 n2.4", 2.4f32, 2.0f32, 600usize, 1.0f64, 100usize),
        ("H s3.0 n3.6", 3.6, 3.0, 600, 1.0, 100),
        ("I s4.0 n4.8", 4.8, 4.0, 600, 1.0, 100),
        ("J s3.0 n3.6 lr2", 3.6, 3.0, 600, 2.0, 100),
        ("K s3.0 n3.0", 3.0, 3.0, 600, 1.0, 100),
        ("L s4.0 n4.0", 4.0, 4.0, 600, 1.0, 100),
    ] {
        let params = LabParams {
            noise_scale: noise,
            separation: sep,
            finetune_steps: ft,
            learning_rate: lr,
            pretrain_steps: pre,
            ..base.clone()
        };
        probe(tag, &params);
    }
}
