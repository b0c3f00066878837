use byom::lab::{
    run_interference_suite, LabParams, PairKind, SuiteConfig, SuiteMethod, SuitePlan,
};

fn main() {
    let lambdas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for (tag, noise, pre, ft, lr) in [
        ("n1.4 pre150 ft300 lr0.5", 1.4f32, 150usize, 300usize, 0.5f64),
        ("n1.6 pre150 ft300 lr0.5", 1.6, 150, 300, 0.5),
        ("n1.4 pre50 ft500 lr1.0", 1.4, 50, 500, 1.0),
        ("n1.6 pre50 ft500 lr1.0", 1.6, 50, 500, 1.0),
        ("n1.2 pre50 ft500 lr1.0", 1.2, 50, 500, 1.0),
    ] {
        let params = LabParams {
            noise_scale: noise,
            pretrain_steps: pre,
            finetune_steps: ft,
            learning_rate: lr,
            test_count: 192,
            ..LabParams::default()
        };
        for pair in [PairKind::Dissimilar, PairKind::SimilarDisjoint] {
            let cfg = SuiteConfig {
                plan: SuitePlan::LambdaSweep {
                    pair,
                    lambdas: lambdas.clone(),
                },
                methods: vec![
                    SuiteMethod::SingleTask,
                    SuiteMethod::WeightedAverage,
                    SuiteMethod::TaskArithmetic,
                ],
                seeds: (0..10).collect(),
                params: params.clone(),
                ..SuiteConfig::default()
            };
            let reports = run_interference_suite(&cfg).unwrap();
            let mut ok = 0;
            let mut gaps = Vec::new();
            for seed in 0..10u64 {
                let single = reports
                    .iter()
                    .find(|r| r.method == "single_task" && r.seed == seed)
                    .unwrap()
                    .average_accuracy();
                let best = reports
                    .iter()
                    .filter(|r| {
                        r.seed == seed
                            && (r.method == "weighted_average" || r.method == "task_arithmetic")
                    })
                    .map(|r| r.average_accuracy())
                    .fold(f64::NEG_INFINITY, f64::max);
                let gap = single - best;
                gaps.push(gap);
                if gap >= 0.05 {
                    ok += 1;
                }
            }
            let strs: Vec<String> = gaps.iter().map(|g| format!("{g:.3}")).collect();
            println!("{tag} {pair:?}: {ok}/10  gaps: {}", strs.join(" "));
        }
    }
}
