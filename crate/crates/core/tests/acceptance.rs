//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use backdoor_lab::anomaly::{deviation_matrix, flag_clients, median, rank_groups, WeightGroup};
use backdoor_lab::cli::gradcheck::{run_gradcheck, Preset};
use backdoor_lab::cli::run::{run_to_dir, RunOutput, DEVIATIONS_FILE, ROUNDS_FILE};
use backdoor_lab::data::cifar::{self, batch_file_len, load_batch};
use backdoor_lab::data::{
    gen_synthetic, inject_backdoor, partition, BackdoorSpec, PartitionPlan, PartitionScheme, Rate,
    Trigger, TriggerPattern,
};
use backdoor_lab::fl::{
    fedavg_aggregate, init_server_model, prepare_clients, run_local_training, RoundRecord,
};
use backdoor_lab::nn::{
    backward, batch_gradient, forward, Activation, Architecture, LayerKind, LayerSpec, LossKind,
    ModelParams,
};
use backdoor_lab::{ExperimentConfig, Result, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAD_TOLERANCE: f64 = 1e-4;
const GRAD_SEEDS: u64 = 5;
const GRAD_MAX_PARAMS: usize = 5_000;
const GRAD_BUDGET: Duration = Duration::from_secs(30);

const OUTPUT_BIAS_EXPECTED: f64 = -0.125;
const OUTPUT_BIAS_TOLERANCE: f64 = 1e-12;

const FEDAVG_TOLERANCE: f64 = 1e-15;
const FEDAVG_MODELS: u64 = 10;

const DOMINANCE_FACTOR: f64 = 2.0;
const FLAG_FACTOR: f64 = 3.0;
const FLAG_ROUNDS: [usize; 2] = [1, 2];
const CONVERGENCE_ROUND: usize = 20;
const CONVERGENCE_FACTOR: f64 = 1.5;
const CENTRAL_BUDGET: Duration = Duration::from_secs(300);

const HALF_MALICIOUS: [usize; 5] = [0, 1, 2, 3, 4];

const LEARNING_RATES: [f64; 3] = [0.1, 0.01, 0.001];

const PERSISTENCE_ROUNDS: std::ops::RangeInclusive<usize> = 5..=25;

const CIFAR_BATCH_BYTES: usize = 30_730_000;
const PARTITION_SEEDS: u64 = 100;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn desk_config(out: &Path) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk.toml");
    let mut cfg = ExperimentConfig::load(&path).expect("desk config loads");
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn final_bias(record: &RoundRecord) -> (WeightGroup, Vec<f64>) {
    let g = WeightGroup::bias(record.deviations.final_layer());
    (g, record.deviations.column(g).expect("final bias column"))
}

/// Malicious values and the median of the benign values of the final-layer
/// bias column.
fn split_column(record: &RoundRecord, malicious: &BTreeSet<usize>) -> (Vec<f64>, f64, Vec<f64>) {
    let (_, col) = final_bias(record);
    let clients = record.deviations.clients();
    let mal: Vec<f64> = clients
        .iter()
        .zip(&col)
        .filter(|(c, _)| malicious.contains(c))
        .map(|(_, v)| *v)
        .collect();
    let benign: Vec<f64> = clients
        .iter()
        .zip(&col)
        .filter(|(c, _)| !malicious.contains(c))
        .map(|(_, v)| *v)
        .collect();
    (mal, median(&benign), benign)
}

fn gradient_correctness() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut max_params = 0;
    for preset in [Preset::Mlp, Preset::Cnn] {
        for (_, arch, _) in backdoor_lab::cli::gradcheck::cases(preset)? {
            max_params = max_params.max(arch.num_params());
            if arch.input_shape()[1..] != [8, 8] {
                return Ok(Outcome::new(
                    false,
                    format!("input shape {:?}", arch.input_shape()),
                ));
            }
        }
        for seed in 0..GRAD_SEEDS {
            worst = worst.max(run_gradcheck(preset, seed, None)?.max_relative_error());
        }
    }
    let elapsed = start.elapsed();
    Ok(Outcome::new(
        worst < GRAD_TOLERANCE && max_params <= GRAD_MAX_PARAMS && elapsed < GRAD_BUDGET,
        format!(
            "max relative error {worst:.3e} (< {GRAD_TOLERANCE:.0e}), largest net {max_params} params, {:.2}s",
            elapsed.as_secs_f64()
        ),
    ))
}

/// Compares every dense weight gradient with bias gradient × input
/// activation on a single sample. Returns the outcome and the number of
/// elements compared.
fn dense_factorization_holds(arch: &Architecture, seed: u64) -> Result<(bool, usize)> {
    let model = ModelParams::init(arch, seed);
    let (x, y) = backdoor_lab::cli::gradcheck::random_batch(arch, 1, seed + 100);
    let (_, cache) = forward(&model, arch, &x)?;
    let grads = backward(&model, arch, &cache, &y, LossKind::CrossEntropy)?;
    let mut slot = 0;
    let mut checked = 0;
    for (idx, spec) in arch.layers().iter().enumerate() {
        if !spec.kind.is_trainable() {
            continue;
        }
        if let LayerKind::Dense { units } = spec.kind {
            let input: &[f64] = if idx == 0 {
                cache.input().data()
            } else {
                cache.output(idx - 1).data()
            };
            let g = &grads.layers[slot];
            for (i, &o) in input.iter().enumerate() {
                for j in 0..units {
                    if g.weights.data()[i * units + j] != g.bias.data()[j] * o {
                        return Ok((false, checked));
                    }
                    checked += 1;
                }
            }
        }
        slot += 1;
    }
    Ok((true, checked))
}

fn bias_factorization() -> Result<Outcome> {
    let mut checked = 0;
    for seed in 0..3 {
        for arch in [
            Architecture::mlp(
                vec![3, 8, 8],
                &[16, 8],
                Activation::Sigmoid,
                3,
                Activation::Softmax,
            )?,
            Architecture::cnn(vec![3, 8, 8], 4, 16, 3)?,
        ] {
            let (ok, n) = dense_factorization_holds(&arch, seed)?;
            if !ok {
                return Ok(Outcome::new(
                    false,
                    format!("weight gradient != bias gradient x input (seed {seed})"),
                ));
            }
            checked += n;
        }
    }

    let arch = Architecture::new(
        vec![2],
        vec![
            LayerSpec::dense(2, Activation::Sigmoid),
            LayerSpec::dense(1, Activation::Sigmoid),
        ],
    )?;
    let model = ModelParams::zeros(&arch);
    let x = Tensor::from_rows(&[vec![0.3, -0.7]])?;
    let y = Tensor::from_rows(&[vec![1.0]])?;
    let (_, cache) = forward(&model, &arch, &x)?;
    let grads = backward(&model, &arch, &cache, &y, LossKind::Mse)?;
    let got = grads.layers[1].bias.data()[0];
    Ok(Outcome::new(
        checked > 0 && (got - OUTPUT_BIAS_EXPECTED).abs() <= OUTPUT_BIAS_TOLERANCE,
        format!("{checked} weight elements equal bias x input exactly; zero-init output bias gradient {got}"),
    ))
}

fn fedavg_oracle() -> Result<Outcome> {
    let arch = Architecture::cnn(vec![3, 8, 8], 4, 16, 10)?;
    let models: Vec<ModelParams> = (0..FEDAVG_MODELS)
        .map(|s| {
            let mut m = ModelParams::init(&arch, 1000 + s);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            for l in &mut m.layers {
                let values: Vec<f64> = (0..l.bias.len())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                l.bias = Tensor::new(l.bias.shape().to_vec(), values).expect("bias shape");
            }
            m
        })
        .collect();
    let flat: Vec<Vec<f64>> = models.iter().map(ModelParams::flatten).collect();
    let n = flat[0].len();
    let oracle: Vec<f64> = (0..n)
        .map(|i| flat.iter().map(|f| f[i]).sum::<f64>() / flat.len() as f64)
        .collect();
    let got = fedavg_aggregate(&models)?.flatten();
    let worst = got
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let same = vec![models[3].clone(); FEDAVG_MODELS as usize];
    let identity = fedavg_aggregate(&same)? == models[3];
    Ok(Outcome::new(
        worst <= FEDAVG_TOLERANCE && identity,
        format!("max |fedavg - flat mean| {worst:.3e} over {n} params; identical models -> identity: {identity}"),
    ))
}

struct CentralRun {
    first: RunOutput,
    second_dir: PathBuf,
    elapsed: Duration,
}

fn central_finding(run: &CentralRun) -> Result<Outcome> {
    let malicious: BTreeSet<usize> = [0].into();
    let records = &run.first.records;
    let r1 = &records[0];
    let (mal, benign_median, benign) = split_column(r1, &malicious);
    let top_benign = benign.iter().copied().fold(f64::MIN, f64::max);
    let a = mal[0] > top_benign && mal[0] >= DOMINANCE_FACTOR * benign_median;

    let (final_bias_group, _) = final_bias(r1);
    let top = rank_groups(&r1.deviations)?[0].group;
    let b = top == final_bias_group;

    let mut flagged = Vec::new();
    for round in FLAG_ROUNDS {
        flagged.push(flag_clients(
            &records[round - 1].deviations,
            final_bias_group,
            FLAG_FACTOR,
        )?);
    }
    let c = flagged.iter().all(|f| *f == malicious);

    let (mal20, median20, _) = split_column(&records[CONVERGENCE_ROUND - 1], &malicious);
    let d = mal20[0] <= CONVERGENCE_FACTOR * median20;

    let on_time = run.elapsed < CENTRAL_BUDGET;
    let mark = |ok: bool| if ok { "ok" } else { "FAILED" };
    Ok(Outcome::new(
        a && b && c && d && on_time,
        format!(
            "(a) round-1 malicious/benign median {:.2}, above benign max {:.4}: {}; (b) top group {top}: {}; \
             (c) flagged {flagged:?}: {}; (d) round-{CONVERGENCE_ROUND} ratio {:.2}: {}; {:.1}s",
            mal[0] / benign_median,
            top_benign,
            mark(a),
            mark(b),
            mark(c),
            mal20[0] / median20,
            mark(d),
            run.elapsed.as_secs_f64()
        ),
    ))
}

fn half_malicious(out: &Path) -> Result<Outcome> {
    let mut cfg = desk_config(out);
    cfg.federation.malicious_clients = HALF_MALICIOUS.into_iter().collect();
    let malicious = cfg.federation.malicious_clients.clone();
    let run = run_to_dir(&cfg)?;
    let mut mismatched = 0;
    for r in &run.records {
        let (g, _) = final_bias(r);
        if flag_clients(&r.deviations, g, FLAG_FACTOR)? != malicious {
            mismatched += 1;
        }
    }
    let total = run.records.len();
    Ok(Outcome::new(
        2 * mismatched > total,
        format!(
            "flagged set differs from the {} malicious clients in {mismatched}/{total} rounds",
            malicious.len()
        ),
    ))
}

/// Checks `|local - joint| = α·|g|` for every parameter, up to the rounding
/// of the step and of the subtraction, then the same for each group maximum
/// as reported by the deviation matrix.
fn learning_rate_proportionality(out: &Path) -> Result<Outcome> {
    let cfg = desk_config(out);
    let data = cfg.load_data()?;
    let mut fl = cfg.fl_config()?;
    fl.local_epochs = 1;
    let (clients, _) = prepare_clients(&fl, &data, &cfg.backdoor)?;
    let client = &clients[0];
    fl.batch_size = client.data.len();
    let joint = init_server_model(&fl, &data.server)?;
    let targets = client.data.one_hot(fl.architecture.output_width())?;
    let (_, grads) = batch_gradient(
        &joint,
        &fl.architecture,
        client.data.images(),
        &targets,
        fl.loss,
    )?;
    let groups = WeightGroup::all(fl.architecture.num_trainable());

    let mut worst_slack: f64 = 0.0;
    let mut holds = true;
    let mut group_max: Vec<Vec<f64>> = Vec::new();
    for alpha in LEARNING_RATES {
        fl.learning_rate = alpha;
        let local = run_local_training(&joint, client, &fl, 1)?;
        let matrix =
            deviation_matrix(&BTreeMap::from([(client.client_id, local.clone())]), &joint)?;
        let mut maxima = Vec::new();
        for &group in &groups {
            let (l, j, g) = (
                group.select(&local.layers)?.data(),
                group.select(&joint.layers)?.data(),
                group.select(&grads.layers)?.data(),
            );
            let mut expected_max: f64 = 0.0;
            let mut bound_max: f64 = 0.0;
            for ((wl, wj), gi) in l.iter().zip(j).zip(g) {
                let dev = (wl - wj).abs();
                let expected = alpha * gi.abs();
                let bound = f64::EPSILON * (expected + wl.abs() + dev);
                holds &= (dev - expected).abs() <= bound;
                if bound > 0.0 {
                    worst_slack = worst_slack.max((dev - expected).abs() / bound);
                }
                expected_max = expected_max.max(expected);
                bound_max = bound_max.max(bound);
            }
            let reported = matrix.get(client.client_id, group).unwrap_or(f64::NAN);
            holds &= (reported - expected_max).abs() <= bound_max;
            maxima.push(reported);
        }
        group_max.push(maxima);
    }

    let ratios: Vec<String> = (1..LEARNING_RATES.len())
        .map(|i| {
            let scale = LEARNING_RATES[0] / LEARNING_RATES[i];
            let worst = group_max[0]
                .iter()
                .zip(&group_max[i])
                .filter(|(_, lo)| **lo > 0.0)
                .map(|(hi, lo)| (hi / (scale * lo) - 1.0).abs())
                .fold(0.0, f64::max);
            format!("{scale:.0}x to within {worst:.1e}")
        })
        .collect();
    Ok(Outcome::new(
        holds,
        format!(
            "|local - joint| = lr*|gradient| for every parameter and group maximum \
             (worst {worst_slack:.2} of the rounding bound); group deviations at lr {} are {}",
            LEARNING_RATES[0],
            ratios.join(" and ")
        ),
    ))
}

fn coefficient_of_variation(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    var.sqrt() / mean
}

fn malicious_series(records: &[RoundRecord]) -> Vec<f64> {
    let malicious: BTreeSet<usize> = [0].into();
    records
        .iter()
        .filter(|r| PERSISTENCE_ROUNDS.contains(&r.round_index))
        .map(|r| split_column(r, &malicious).0[0])
        .collect()
}

fn malicious_rate_persistence(base: &RunOutput, out: &Path) -> Result<Outcome> {
    let mut full = desk_config(&out.join("full"));
    full.backdoor.malicious_rate = Rate::new(1, 1)?;
    let mut faint = desk_config(&out.join("faint"));
    faint.backdoor.malicious_rate = Rate::new(1, 50)?;
    let full = run_to_dir(&full)?;
    let faint = run_to_dir(&faint)?;

    let cv_third = coefficient_of_variation(&malicious_series(&base.records));
    let cv_full = coefficient_of_variation(&malicious_series(&full.records));
    let malicious: BTreeSet<usize> = [0].into();
    let r1_third = split_column(&base.records[0], &malicious).0[0];
    let r1_faint = split_column(&faint.records[0], &malicious).0[0];
    Ok(Outcome::new(
        cv_full < cv_third && r1_faint < r1_third,
        format!(
            "CV over rounds 5-25: rate 1/1 {cv_full:.3} vs rate 1/3 {cv_third:.3}; \
             round-1 deviation: rate 1/50 {r1_faint:.4} vs rate 1/3 {r1_third:.4}"
        ),
    ))
}

fn cifar_batch_size(dir: &Path) -> Result<String> {
    assert_eq!(batch_file_len(cifar::RECORDS_PER_BATCH), CIFAR_BATCH_BYTES);
    let mut bytes = vec![0u8; CIFAR_BATCH_BYTES];
    for (i, rec) in bytes.chunks_exact_mut(cifar::RECORD_BYTES).enumerate() {
        rec[0] = (i % 10) as u8;
        rec[1] = 255;
    }
    let path = dir.join("data_batch_1.bin");
    std::fs::write(&path, &bytes)?;
    let on_disk = std::fs::metadata(&path)?.len() as usize;
    let ds = load_batch(&path)?;
    let decoded =
        ds.len() == cifar::RECORDS_PER_BATCH && ds.labels()[13] == 3 && ds.sample(0)[0] == 1.0;
    std::fs::write(&path, &bytes[..CIFAR_BATCH_BYTES - 1])?;
    let truncated_rejected = load_batch(&path).is_err();
    if on_disk != CIFAR_BATCH_BYTES || !decoded || !truncated_rejected {
        return Err(backdoor_lab::Error::InvalidArgument(format!(
            "batch file: {on_disk} bytes, decoded {decoded}, truncated rejected {truncated_rejected}"
        )));
    }
    Ok(format!(
        "{on_disk}-byte batch decodes to {} records",
        ds.len()
    ))
}

fn partition_cover() -> Result<String> {
    let ds = gen_synthetic(10, 30, &[1, 4, 4], 7)?;
    for seed in 0..PARTITION_SEEDS {
        let scheme = if seed % 2 == 0 {
            PartitionScheme::Dirichlet {
                beta: 0.1 + (seed % 7) as f64,
            }
        } else {
            PartitionScheme::Sharded {
                shards_per_client: 1 + (seed % 3) as usize,
            }
        };
        let plan = PartitionPlan {
            scheme,
            num_clients: 2 + (seed % 9) as usize,
            server_share: (seed % 4) as f64 * 0.05,
            seed,
        };
        let p = partition(&ds, &plan)?;
        let mut all: Vec<usize> = p.server_indices.clone();
        for c in &p.client_indices {
            all.extend(c);
        }
        all.sort_unstable();
        if all != (0..ds.len()).collect::<Vec<_>>() {
            return Err(backdoor_lab::Error::InvalidArgument(format!(
                "seed {seed}: partition is not a disjoint cover"
            )));
        }
    }
    Ok(format!("{PARTITION_SEEDS} seeds give disjoint covers"))
}

fn trigger_properties() -> Result<String> {
    let shape = [3, 8, 8];
    let ds = gen_synthetic(3, 10, &shape, 3)?;
    let triggers = [
        Trigger::default(),
        Trigger {
            row: 5,
            col: 2,
            height: 2,
            width: 4,
            fill: 0.25,
            pattern: TriggerPattern::Checkerboard,
        },
    ];
    for t in triggers {
        for i in 0..ds.len() {
            let clean = ds.sample(i).to_vec();
            let mut once = clean.clone();
            t.apply(&mut once, &shape);
            let mut twice = once.clone();
            t.apply(&mut twice, &shape);
            if once != twice {
                return Err(backdoor_lab::Error::InvalidArgument(
                    "trigger is not idempotent".into(),
                ));
            }
            for (k, (a, b)) in clean.iter().zip(&once).enumerate() {
                let (y, x) = ((k / 8) % 8, k % 8);
                if !t.contains(y, x) && a != b {
                    return Err(backdoor_lab::Error::InvalidArgument(format!(
                        "trigger changed pixel ({y}, {x}) outside its patch"
                    )));
                }
            }
        }
    }
    Ok("trigger is local and idempotent".into())
}

fn two_client_rate() -> Result<String> {
    let spec = BackdoorSpec::default();
    let per_client = spec.malicious_rate.split(2);
    if per_client != Rate::new(1, 6)? {
        return Err(backdoor_lab::Error::InvalidArgument(format!(
            "1/3 split over 2 clients gave {per_client}"
        )));
    }
    let ds = gen_synthetic(10, 30, &[3, 8, 8], 5)?;
    let even: Vec<usize> = (0..ds.len()).step_by(2).collect();
    let odd: Vec<usize> = (1..ds.len()).step_by(2).collect();
    let clients = [ds.subset(&even), ds.subset(&odd)];
    let poisoned = inject_backdoor(&clients, &spec, &[0, 1], 11)?;
    let mut shares = Vec::new();
    for (id, idx) in &poisoned.malicious_indices {
        let share = idx.len() as f64 / poisoned.datasets[*id].len() as f64;
        if (share - 1.0 / 6.0).abs() > 0.5 / poisoned.datasets[*id].len() as f64 {
            return Err(backdoor_lab::Error::InvalidArgument(format!(
                "client {id} poisoned share {share}"
            )));
        }
        shares.push(format!("{share:.4}"));
    }
    Ok(format!(
        "1/3 over 2 clients -> {per_client} each (realized {})",
        shares.join(", ")
    ))
}

fn data_pipeline(dir: &Path) -> Result<Outcome> {
    let parts = [
        cifar_batch_size(dir),
        partition_cover(),
        trigger_properties(),
        two_client_rate(),
    ];
    let passed = parts.iter().all(|p| p.is_ok());
    let detail = parts
        .into_iter()
        .map(|p| p.unwrap_or_else(|e| format!("FAILED: {e}")))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome::new(passed, detail))
}

fn determinism(run: &CentralRun) -> Result<Outcome> {
    let mut identical = true;
    for name in [ROUNDS_FILE, DEVIATIONS_FILE] {
        let a = std::fs::read(run.first.dir.join(name))?;
        let b = std::fs::read(run.second_dir.join(name))?;
        identical &= !a.is_empty() && a == b;
    }
    Ok(Outcome::new(
        identical,
        format!("{ROUNDS_FILE} and {DEVIATIONS_FILE} byte-identical across two runs: {identical}"),
    ))
}

fn report(id: usize, name: &str, outcome: Result<Outcome>) -> bool {
    let (passed, detail) = match outcome {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "{} {id} {name}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    passed
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut results = Vec::new();

    results.push(report(1, "gradient correctness", gradient_correctness()));
    results.push(report(2, "bias factorization", bias_factorization()));
    results.push(report(3, "fedavg oracle", fedavg_oracle()));

    let start = Instant::now();
    let central = run_to_dir(&desk_config(&tmp.path().join("desk_a"))).map(|first| CentralRun {
        first,
        second_dir: tmp.path().join("desk_b"),
        elapsed: start.elapsed(),
    });
    match central {
        Ok(run) => {
            results.push(report(4, "central finding", central_finding(&run)));
            results.push(report(
                5,
                "half malicious",
                half_malicious(&tmp.path().join("half")),
            ));
            results.push(report(
                6,
                "learning-rate proportionality",
                learning_rate_proportionality(&tmp.path().join("lr")),
            ));
            results.push(report(
                7,
                "malicious-rate persistence",
                malicious_rate_persistence(&run.first, &tmp.path().join("rate")),
            ));
            results.push(report(8, "data pipeline", data_pipeline(tmp.path())));
            let second = run_to_dir(&desk_config(&run.second_dir));
            results.push(report(
                9,
                "determinism",
                second.and_then(|_| determinism(&run)),
            ));
        }
        Err(e) => {
            for (id, name) in [
                (4, "central finding"),
                (7, "malicious-rate persistence"),
                (9, "determinism"),
            ] {
                results.push(report(
                    id,
                    name,
                    Err(backdoor_lab::Error::InvalidArgument(format!(
                        "desk run: {e}"
                    ))),
                ));
            }
            results.push(report(
                5,
                "half malicious",
                half_malicious(&tmp.path().join("half")),
            ));
            results.push(report(
                6,
                "learning-rate proportionality",
                learning_rate_proportionality(&tmp.path().join("lr")),
            ));
            results.push(report(8, "data pipeline", data_pipeline(tmp.path())));
        }
    }

    let failed = results.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
