use byom::lab::data::{dissimilar_pair, generate_task};
use byom::lab::mlp::MlpModel;
use byom::lab::rng::mix;
use byom::lab::train::{train, TrainConfig, TrainMode};
use byom::lab::{Dataset, LabParams};

fn build(
    seed: u64,
    params: &LabParams,
) -> (MlpModel, Vec<MlpModel>, Vec<Dataset>, Vec<Dataset>) {
    let (a, b) = dissimilar_pair(mix(seed, 0xFA01), &params.shape());
    let mut trains = Vec::new();
    let mut tests = Vec::new();
    for spec in [&a, &b] {
        let (tr, te) = generate_task(spec).unwrap();
        trains.push(tr);
        tests.push(te);
    }
    let pooled = Dataset::pooled(&trains.iter().collect::<Vec<_>>()).unwrap();
    let init = MlpModel::init(mix(seed, 0x11A7), params.input_dim, params.hidden, params.class_count);
    let theta0 = train(
        &init,
        &pooled,
        &TrainConfig { steps: params.pretrain_steps, learning_rate: params.learning_rate, mode: TrainMode::Full, seed },
    )
    .unwrap()
    .model;
    let singles: Vec<MlpModel> = trains
        .iter()
        .map(|tr| {
            train(
                &theta0,
                tr,
                &TrainConfig { steps: params.finetune_steps, learning_rate: params.learning_rate, mode: TrainMode::Full, seed },
            )
            .unwrap()
            .model
        })
        .collect();
    (theta0, singles, trains, tests)
}

fn main() {
    for (tag, noise, sep, ft, lr, pre, n_train) in [
        ("base n1.5 lr1.5 ft600 pre50 tr128", 1.5f32, 1.0f32, 600usize, 1.5f64, 50usize, 128usize),
        ("small-train tr48", 1.5, 1.0, 600, 1.5, 50, 48),
        ("small-train tr64 n1.2", 1.2, 1.0, 600, 1.5, 50, 64),
        ("tr48 n1.2 lr2 ft800", 1.2, 1.0, 800, 2.0, 50, 48),
        ("tr32 n1.0", 1.0, 1.0, 600, 1.5, 50, 32),
    ] {
        let params = LabParams {
            noise_scale: noise,
            separation: sep,
            finetune_steps: ft,
            learning_rate: lr,
            pretrain_steps: pre,
            train_count: n_train,
            ..LabParams::default()
        };
        let mut own = [0.0f64; 2];
        let mut foreign = [0.0f64; 2];
        let mut zero = [0.0f64; 2];
        let seeds = 6u64;
        for seed in 0..seeds {
            let (theta0, singles, _trains, tests) = build(seed, &params);
            for t in 0..2 {
                let o = singles[t].accuracy(&tests[t]).unwrap();
                // Foreign trunk + own head.
                let f_model = MlpModel {
                    w1: singles[1 - t].w1.clone(),
                    b1: singles[1 - t].b1.clone(),
                    w2: singles[t].w2.clone(),
                    b2: singles[t].b2.clone(),
                };
                let f = f_model.accuracy(&tests[t]).unwrap();
                // Pretrained trunk + own head.
                let z_model = MlpModel {
                    w1: theta0.w1.clone(),
                    b1: theta0.b1.clone(),
                    w2: singles[t].w2.clone(),
                    b2: singles[t].b2.clone(),
                };
                let z = z_model.accuracy(&tests[t]).unwrap();
                own[t] += o;
                foreign[t] += f;
                zero[t] += z;
            }
        }
        let n = seeds as f64;
        println!(
            "{tag}: own=({:.3},{:.3}) foreign=({:.3},{:.3}) theta0trunk=({:.3},{:.3}) penalty_f={:.3} penalty_0={:.3}",
            own[0] / n, own[1] / n,
            foreign[0] / n, foreign[1] / n,
            zero[0] / n, zero[1] / n,
            (own[0] + own[1] - foreign[0] - foreign[1]) / (2.0 * n),
            (own[0] + own[1] - zero[0] - zero[1]) / (2.0 * n),
        );
    }
}
