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

fn main() {
    let seeds: Vec<u64> = (0..10).collect();
    let params = LabParams {
        noise_scale: 1.2,
        ..LabParams::default()
    };

    // --- criterion 7 probe: task count sweep ---
    let t0 = std::time::Instant::now();
    let cfg = SuiteConfig {
        plan: SuitePlan::TaskCountSweep {
            task_counts: (2..=8).collect(),
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
    println!("count sweep took {:?}", t0.elapsed());

    let mut a_ok = 0;
    let mut b_ok = 0;
    let mut c_ok = 0;
    for &seed in &seeds {
        let ta2 = find(&reports, "task_arithmetic", 2.0, seed).average_normalized();
        let ta8 = find(&reports, "task_arithmetic", 8.0, seed).average_normalized();
        let by2 = find(&reports, "byom_fft@task_arithmetic", 2.0, seed).average_normalized();
        let by8 = find(&reports, "byom_fft@task_arithmetic", 8.0, seed).average_normalized();
        let a = ta8 < ta2;
        let b = (2..=8).all(|t| {
            find(&reports, "byom_fft@task_arithmetic", t as f64, seed).average_normalized()
                > find(&reports, "task_arithmetic", t as f64, seed).average_normalized()
        });
        let c = (by8 - by2).abs() <= 0.05;
        a_ok += a as u32;
        b_ok += b as u32;
        c_ok += c as u32;
        println!(
            "seed {seed}: ta2={ta2:.3} ta8={ta8:.3} by2={by2:.3} by8={by8:.3}  a={a} b={b} c={c}"
        );
    }
    println!("7a: {a_ok}/10 (need 9)  7b: {b_ok}/10 (need 9)  7c: {c_ok}/10 (need 8)\n");

    // --- criterion 8 probe: lambda sweeps ---
    for pair in [PairKind::Dissimilar, PairKind::SimilarDisjoint] {
        let t0 = std::time::Instant::now();
        let cfg = SuiteConfig {
            plan: SuitePlan::LambdaSweep {
                pair,
                lambdas: (0..=10).map(|i| i as f64 / 10.0).collect(),
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
        let mut ok = 0;
        for &seed in &seeds {
            let single = find(&reports, "single_task", 0.0, seed).average_accuracy();
            let best = reports
                .iter()
                .filter(|r| {
                    r.seed == seed && (r.method == "weighted_average" || r.method == "task_arithmetic")
                })
                .map(|r| r.average_accuracy())
                .fold(f64::NEG_INFINITY, f64::max);
            let gap = single - best;
            let pass = gap >= 0.05;
            ok += pass as u32;
            println!("  {pair:?} seed {seed}: single={single:.3} best_merged={best:.3} gap={gap:.3} {pass}");
        }
        println!("{pair:?}: {ok}/10 (need 9), took {:?}\n", t0.elapsed());
    }

    // --- criterion 9 probe: composability at T=8 ---
    let t0 = std::time::Instant::now();
    let cfg = SuiteConfig {
        plan: SuitePlan::TaskCountSweep {
            task_counts: vec![8],
        },
        methods: vec![
            SuiteMethod::TaskArithmetic,
            SuiteMethod::WeightedAverage,
            SuiteMethod::Ties,
            SuiteMethod::ByomFft {
                base: MergeMethod::TaskArithmetic,
            },
            SuiteMethod::ByomFft {
                base: MergeMethod::WeightedAverage,
            },
            SuiteMethod::ByomFft {
                base: MergeMethod::Ties,
            },
        ],
        seeds: seeds.clone(),
        keep_ratio: 0.10,
        params: params.clone(),
        ..SuiteConfig::default()
    };
    let reports = run_interference_suite(&cfg).unwrap();
    for (bare, byom) in [
        ("task_arithmetic", "byom_fft@task_arithmetic"),
        ("weighted_average", "byom_fft@weighted_average"),
        ("ties", "byom_fft@ties"),
    ] {
        let mut ok = 0;
        for &seed in &seeds {
            let b = find(&reports, bare, 8.0, seed).average_accuracy();
            let y = find(&reports, byom, 8.0, seed).average_accuracy();
            if y > b {
                ok += 1;
            }
        }
        println!("{byom} > {bare}: {ok}/10 (need 8)");
    }
    println!("composability took {:?}", t0.elapsed());
}
