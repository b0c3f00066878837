use byom::lab::{
    run_interference_suite, LabParams, PairKind, SuiteConfig, SuiteMethod, SuitePlan,
};

fn main() {
    for (tag, noise, sep, ft, lr, pre, tr) in [
        ("full-merge pre150 n0.4 ft300", 0.4f32, 1.0f32, 300usize, 0.5f64, 150usize, 128usize),
        ("full-merge pre150 n0.8 ft300", 0.8, 1.0, 300, 0.5, 150, 128),
        ("full-merge pre150 n1.2 ft300", 1.2, 1.0, 300, 0.5, 150, 128),
        ("full-merge pre50 n1.2 ft600 lr1.5", 1.2, 1.0, 600, 1.5, 50, 128),
    ] {

        let params = LabParams {
            noise_scale: noise,
            separation: sep,
            finetune_steps: ft,
            learning_rate: lr,
            pretrain_steps: pre,
            train_count: tr,
            ..LabParams::default()
        };
        let lambdas: Vec<f64> = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let cfg = SuiteConfig {
            plan: SuitePlan::LambdaSweep {
                pair: PairKind::Dissimilar,
                lambdas: lambdas.clone(),
            },
            methods: vec![
                SuiteMethod::SingleTask,
                SuiteMethod::WeightedAverage,
                SuiteMethod::TaskArithmetic,
            ],
            seeds: (0..6).collect(),
            params,
            ..SuiteConfig::default()
        };
        let reports = run_interference_suite(&cfg).unwrap();
        let avg = |m: &str, l: f64| -> f64 {
            let rs: Vec<f64> = reports
                .iter()
                .filter(|r| r.method == m && (r.sweep_value - l).abs() < 1e-9)
                .map(|r| r.average_accuracy())
                .collect();
            rs.iter().sum::<f64>() / rs.len() as f64
        };
        println!("{tag}: single={:.3}", avg("single_task", 0.0));
        for m in ["weighted_average", "task_arithmetic"] {
            let profile: Vec<String> =
                lambdas.iter().map(|&l| format!("{:.3}", avg(m, l))).collect();
            println!("  {m}: {}", profile.join(" "));
        }
    }
}
