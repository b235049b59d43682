use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsad_cli::commands::ablation_table;
use tsad_cli::pipeline::Variant;
use tsad_cli::{Cli, RunConfig};
use tsad_core::{
    auroc, detrend, generate_synthetic, kld_shift, make_windows, masked_loss, oracle_threshold,
    percentile_threshold, point_adjust, retrend, train_offline, Autoencoder, Config, Dataset,
    EvalReport, Matrix, ModelDims, Scaler, State, SyntheticSpec, ThresholdSpec, TrainConfig, Trend,
    Window,
};
use tsad_suite::{run_all, Criterion, Verdict};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    (rng.random::<f64>() * 2.0 - 1.0) * scale
}

fn random_window(rng: &mut ChaCha8Rng, w: usize, f: usize, scale: f64) -> Window<f64> {
    let data = (0..w * f).map(|_| uniform(rng, scale)).collect();
    Window::new(Matrix::from_vec(w, f, data).unwrap(), w - 1)
}

fn randomize(m: &mut Autoencoder, rng: &mut ChaCha8Rng) {
    for p in m.params_mut().iter_mut() {
        *p = uniform(rng, 1.0);
    }
}

fn bits(m: &Autoencoder) -> Vec<u64> {
    m.params().iter().map(|p| p.to_bits()).collect()
}

// ---------------------------------------------------------------- 1

const FD_EPS: f64 = 1e-4;
const FD_REL: f64 = 1e-4;
const FD_ABS: f64 = 1e-7;

fn loss_at(m: &Autoencoder, x: &Window<f64>, mask: &[bool]) -> f64 {
    masked_loss(x, &m.forward(x).unwrap(), mask).unwrap().0
}

/// Smallest |pre-activation| over the hidden ReLUs, by a separate forward
/// pass; finite differences are not an oracle across a kink.
fn kink_margin(m: &Autoencoder, x: &Window<f64>) -> f64 {
    let layers = &m.params().layers;
    let mut a = x.data.as_slice().to_vec();
    let mut margin = f64::INFINITY;
    for (k, l) in layers.iter().enumerate() {
        let z: Vec<f64> = (0..l.outputs)
            .map(|o| {
                l.bias[o]
                    + (0..l.inputs)
                        .map(|i| l.weights[o * l.inputs + i] * a[i])
                        .sum::<f64>()
            })
            .collect();
        if k + 1 < layers.len() {
            margin = z.iter().fold(margin, |acc, v| acc.min(v.abs()));
        }
        a = z.into_iter().map(|v| v.max(0.0)).collect();
    }
    margin
}

fn gradient_oracle() -> Verdict {
    let mut rng = rng(1);
    let (mut cases, mut params, mut worst) = (0, 0, 0.0f64);
    while cases < 100 {
        let dims = ModelDims::new(
            rng.random_range(1..=6),
            rng.random_range(1..=3),
            rng.random_range(1..=8),
            rng.random_range(1..=3),
        )
        .unwrap();
        if dims.param_count() > 131 {
            continue;
        }
        let mut m = Autoencoder::new(dims, rng.random());
        randomize(&mut m, &mut rng);
        let x = random_window(&mut rng, dims.window, dims.features, 1.5);
        if kink_margin(&m, &x) < 1e-3 {
            continue;
        }
        let mask: Vec<bool> = (0..dims.window).map(|_| rng.random_bool(0.3)).collect();
        let (_, grads) = m.gradients(&x, &mask).unwrap();
        for (k, &analytic) in grads.iter().enumerate() {
            let mut plus = m.clone();
            *plus.params_mut().iter_mut().nth(k).unwrap() += FD_EPS;
            let mut minus = m.clone();
            *minus.params_mut().iter_mut().nth(k).unwrap() -= FD_EPS;
            let numeric = (loss_at(&plus, &x, &mask) - loss_at(&minus, &x, &mask)) / (2.0 * FD_EPS);
            let allowed = FD_REL * analytic.abs().max(numeric.abs()) + FD_ABS;
            worst = worst.max((analytic - numeric).abs() / allowed);
        }
        params += dims.param_count();
        cases += 1;
    }
    Verdict::new(
        worst <= 1.0,
        format!("{cases} nets, {params} parameters, worst error {worst:.3} of tolerance"),
    )
}

// ---------------------------------------------------------------- 2

fn masked_update_inertness() -> Verdict {
    let mut rng = rng(2);
    let mut failures = Vec::new();
    for case in 0..50 {
        let w = rng.random_range(1..=6);
        let f = rng.random_range(1..=3);
        let dims = ModelDims::new(w, f, rng.random_range(1..=8), rng.random_range(1..=3)).unwrap();
        let mut m = Autoencoder::new(dims, rng.random());
        randomize(&mut m, &mut rng);
        let x = random_window(&mut rng, w, f, 2.0);
        let before = bits(&m);

        let all = vec![true; w];
        let (loss, grads) = m.gradients(&x, &all).unwrap();
        let mut stepped = m.clone();
        stepped.sgd_step(&grads, 0.1).unwrap();
        let other = random_window(&mut rng, w, f, 5.0);
        let (loss_other, grads_other) = m.gradients(&other, &all).unwrap();
        if loss != 0.0 || loss_other != 0.0 {
            failures.push(format!(
                "case {case}: loss {loss}, {loss_other} with every row masked"
            ));
        }
        if grads.iter().chain(grads_other.iter()).any(|g| *g != 0.0) {
            failures.push(format!(
                "case {case}: nonzero gradient with every row masked"
            ));
        }
        if bits(&stepped) != before {
            failures.push(format!(
                "case {case}: parameters moved with every row masked"
            ));
        }

        let mask: Vec<bool> = (0..w).map(|_| rng.random_bool(0.5)).collect();
        let mut target = x.clone();
        for (i, &masked) in mask.iter().enumerate() {
            if masked {
                for v in target.data.row_mut(i) {
                    *v += uniform(&mut rng, 10.0);
                }
            }
        }
        let (l1, g1) = m.gradients_against(&x, &x, &mask).unwrap();
        let (l2, g2) = m.gradients_against(&x, &target, &mask).unwrap();
        let (mut a, mut b) = (m.clone(), m.clone());
        a.sgd_step(&g1, 0.1).unwrap();
        b.sgd_step(&g2, 0.1).unwrap();
        if l1.to_bits() != l2.to_bits() || g1 != g2 || bits(&a) != bits(&b) {
            failures.push(format!(
                "case {case}: perturbing masked rows changed the update"
            ));
        }
    }
    Verdict::new(
        failures.is_empty(),
        if failures.is_empty() {
            "50 cases, all bitwise inert".to_string()
        } else {
            failures.join("; ")
        },
    )
}

// ---------------------------------------------------------------- 3

fn window_of(rows: &[Vec<f64>], end: usize) -> Window<f64> {
    Window::new(Matrix::from_rows(rows).unwrap(), end)
}

fn ema_algebra() -> Verdict {
    let mut rng = rng(3);
    let mut problems = Vec::new();

    // Convex combination of the previous trend and the window mean.
    for case in 0..500 {
        let (w, f) = (rng.random_range(1..=8), rng.random_range(1..=3));
        let gamma = rng.random::<f64>();
        let mu0: Vec<f64> = (0..f).map(|_| uniform(&mut rng, 10.0)).collect();
        let x = random_window(&mut rng, w, f, 10.0);
        let mut trend = Trend::from_mu(mu0.clone(), gamma).unwrap();
        let mu = trend.update(&x).unwrap().to_vec();
        for j in 0..f {
            let mean = (0..w).map(|i| x.data.get(i, j)).sum::<f64>() / w as f64;
            let (lo, hi) = (mu0[j].min(mean), mu0[j].max(mean));
            let slack = 1e-12 * hi.abs().max(lo.abs()).max(1.0);
            if mu[j] < lo - slack || mu[j] > hi + slack {
                problems.push(format!("convexity case {case}"));
            }
        }
    }

    // Endpoints.
    for _ in 0..200 {
        let (w, f) = (rng.random_range(1..=8), rng.random_range(1..=3));
        let mu0: Vec<f64> = (0..f).map(|_| uniform(&mut rng, 10.0)).collect();
        let x = random_window(&mut rng, w, f, 10.0);
        let mut keep = Trend::from_mu(mu0.clone(), 1.0).unwrap();
        if keep.update(&x).unwrap() != mu0.as_slice() {
            problems.push("gamma = 1 moved the trend".into());
        }
        let mut follow = Trend::from_mu(mu0.clone(), 0.0).unwrap();
        let mu = follow.update(&x).unwrap();
        for (j, &m) in mu.iter().enumerate() {
            let mean = (0..w).map(|i| x.data.get(i, j)).sum::<f64>() / w as f64;
            if (m - mean).abs() > 1e-12 * mean.abs().max(1.0) {
                problems.push("gamma = 0 did not adopt the window mean".into());
            }
        }
    }

    // Shift equivariance. Dyadic data, power-of-two windows and dyadic
    // gammas keep every operation exact, so the comparison is bitwise.
    let mut shift_runs = 0;
    for &gamma in &[0.0, 0.5, 0.75, 1.0] {
        for &w in &[1usize, 2, 4, 8] {
            for _ in 0..10 {
                let f = rng.random_range(1..=3);
                let c: Vec<f64> = (0..f)
                    .map(|_| f64::from(rng.random_range(-64i32..=64)) / 4.0)
                    .collect();
                let mu0: Vec<f64> = (0..f)
                    .map(|_| f64::from(rng.random_range(-64i32..=64)) / 8.0)
                    .collect();
                let mut plain = Trend::from_mu(mu0.clone(), gamma).unwrap();
                let shifted_mu0 = mu0.iter().zip(&c).map(|(m, c)| m + c).collect();
                let mut shifted = Trend::from_mu(shifted_mu0, gamma).unwrap();
                for k in 0..10 {
                    let rows: Vec<Vec<f64>> = (0..w)
                        .map(|_| {
                            (0..f)
                                .map(|_| f64::from(rng.random_range(-256i32..=256)) / 16.0)
                                .collect()
                        })
                        .collect();
                    let moved: Vec<Vec<f64>> = rows
                        .iter()
                        .map(|r| r.iter().zip(&c).map(|(v, c)| v + c).collect())
                        .collect();
                    let (x, y) = (
                        window_of(&rows, k * w + w - 1),
                        window_of(&moved, k * w + w - 1),
                    );
                    let a = plain.update(&x).unwrap().to_vec();
                    let b = shifted.update(&y).unwrap().to_vec();
                    let expected: Vec<f64> = a.iter().zip(&c).map(|(m, c)| m + c).collect();
                    if b.iter()
                        .zip(&expected)
                        .any(|(p, q)| p.to_bits() != q.to_bits())
                    {
                        problems.push(format!("shifted trend off at gamma {gamma}, w {w}"));
                    }
                    let (dx, dy) = (detrend(&x, &a).unwrap(), detrend(&y, &b).unwrap());
                    if dx
                        .data
                        .as_slice()
                        .iter()
                        .zip(dy.data.as_slice())
                        .any(|(p, q)| p.to_bits() != q.to_bits())
                    {
                        problems.push(format!("detrended windows differ at gamma {gamma}, w {w}"));
                    }
                }
                shift_runs += 1;
            }
        }
    }

    // Same property at the default gamma, where rounding is unavoidable.
    let mut approx_worst = 0.0f64;
    for _ in 0..100 {
        let c = uniform(&mut rng, 10.0);
        let mut plain = Trend::from_mu(vec![0.3], 0.9).unwrap();
        let mut shifted = Trend::from_mu(vec![0.3 + c], 0.9).unwrap();
        for k in 0..50 {
            let x = random_window(&mut rng, 5, 1, 3.0);
            let y = Window::new(x.data.map(|v| v + c), k);
            let a = plain.update(&x).unwrap()[0];
            let b = shifted.update(&y).unwrap()[0];
            approx_worst = approx_worst.max((b - (a + c)).abs());
        }
    }
    if approx_worst > 1e-12 {
        problems.push(format!("gamma 0.9 shift error {approx_worst:e}"));
    }

    // detrend then retrend is the identity.
    let mut inverse_worst = 0.0f64;
    for _ in 0..500 {
        let (w, f) = (rng.random_range(1..=8), rng.random_range(1..=4));
        let x = random_window(&mut rng, w, f, 100.0);
        let mu: Vec<f64> = (0..f).map(|_| uniform(&mut rng, 100.0)).collect();
        let back = retrend(&detrend(&x, &mu).unwrap(), &mu).unwrap();
        for (a, b) in x.data.as_slice().iter().zip(back.data.as_slice()) {
            inverse_worst = inverse_worst.max((a - b).abs());
        }
    }
    if inverse_worst > 1e-12 {
        problems.push(format!("detrend/retrend error {inverse_worst:e}"));
    }

    problems.dedup();
    Verdict::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "convexity, endpoints, {shift_runs} bitwise shift runs, gamma 0.9 shift error {approx_worst:.1e}, inverse error {inverse_worst:.1e}"
            )
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------- 4

/// Point adjustment by enumerating every maximal labeled segment `[i, j]`.
fn point_adjust_brute(preds: &[bool], labels: &[bool]) -> Vec<bool> {
    let n = labels.len();
    let mut out = preds.to_vec();
    for i in 0..n {
        for j in i..n {
            let inside = labels[i..=j].iter().all(|&l| l);
            let maximal = (i == 0 || !labels[i - 1]) && (j + 1 == n || !labels[j + 1]);
            if inside && maximal && preds[i..=j].iter().any(|&p| p) {
                out[i..=j].iter_mut().for_each(|p| *p = true);
            }
        }
    }
    out
}

/// AUROC by counting every positive/negative pair, halves for ties.
fn auroc_pairs(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut doubled, mut pairs) = (0u64, 0u64);
    for (s, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
        for (t, _) in scores.iter().zip(labels).filter(|(_, &l)| !l) {
            doubled += if s > t {
                2
            } else if s == t {
                1
            } else {
                0
            };
            pairs += 1;
        }
    }
    doubled as f64 / (2 * pairs) as f64
}

/// F1 as the exact fraction `2tp / (2tp + fp + fn)`.
fn f1_fraction(scores: &[f64], labels: &[bool], tau: f64) -> (u64, u64) {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s > tau, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    (2 * tp, (2 * tp + fp + fn_).max(1))
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    let mut labels = Vec::with_capacity(n);
    let mut on = false;
    for _ in 0..n {
        if rng.random_bool(0.2) {
            on = !on;
        }
        labels.push(on);
    }
    labels
}

fn metric_oracles() -> Verdict {
    let mut rng = rng(4);
    let mut problems = Vec::new();
    let mut auroc_worst = 0.0f64;
    for case in 0..200 {
        let n = rng.random_range(2..=200);
        let mut labels = random_labels(&mut rng, n);
        labels[rng.random_range(0..n)] = true;
        let mut j = rng.random_range(0..n);
        while labels.iter().all(|&l| l) {
            labels[j] = false;
            j = (j + 1) % n;
        }
        let levels = rng.random_range(2..=40);
        let scores: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..levels)) / 7.0)
            .collect();
        let preds: Vec<bool> = (0..n).map(|_| rng.random_bool(0.25)).collect();

        if point_adjust(&preds, &labels).unwrap() != point_adjust_brute(&preds, &labels) {
            problems.push(format!("point adjust case {case}"));
        }

        let err = (auroc(&scores, &labels).unwrap() - auroc_pairs(&scores, &labels)).abs();
        auroc_worst = auroc_worst.max(err);

        let (tau, _) = oracle_threshold(&scores, &labels).unwrap();
        let (num, den) = f1_fraction(&scores, &labels, tau);
        let mut candidates: Vec<f64> = scores.clone();
        candidates.push(f64::NEG_INFINITY);
        let best = candidates
            .iter()
            .map(|&t| f1_fraction(&scores, &labels, t))
            .fold((0, 1), |b, c| if c.0 * b.1 > b.0 * c.1 { c } else { b });
        if num * best.1 != best.0 * den {
            problems.push(format!(
                "oracle case {case}: {num}/{den} vs best {}/{}",
                best.0, best.1
            ));
        }

        let tau = scores[rng.random_range(0..n)];
        let report =
            EvalReport::evaluate(&scores, &labels, tau, ThresholdSpec::Fixed(tau)).unwrap();
        if report.f1_pa < report.f1 {
            problems.push(format!("F1-PA below F1 in case {case}"));
        }
    }
    if auroc_worst > 1e-9 {
        problems.push(format!("AUROC error {auroc_worst:e}"));
    }
    Verdict::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!("200 instances; AUROC max error {auroc_worst:.1e}")
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------- 5

fn scaled_synthetic() -> (Dataset, Dataset) {
    let (train, test) = generate_synthetic::<f64>(&SyntheticSpec::default()).unwrap();
    let scaler = Scaler::fit(&train).unwrap();
    (scaler.apply(&train).unwrap(), scaler.apply(&test).unwrap())
}

fn stream(
    model: &Autoencoder,
    train: &Dataset,
    test: &Dataset,
    cfg: Config,
    stride: usize,
) -> tsad_core::Stream {
    State::new(model.clone(), train, cfg)
        .unwrap()
        .run_stream(test, stride)
        .unwrap()
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn ablation_degeneracies() -> Verdict {
    let (train, test) = scaled_synthetic();
    let dims = ModelDims::new(5, 1, 4, 2).unwrap();
    let windows = make_windows(&train, 5, 1).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let trained = train_offline(Autoencoder::new(dims, 0), &windows, &cfg).unwrap();
    let tau = percentile_threshold(&trained.flat_scores(), 99.0).unwrap();
    let model = trained.model;
    let mut problems = Vec::new();
    let mut checks = 0;

    for stride in [5usize, 3, 1] {
        // Frozen window-by-window inference with the same row assembly.
        let mut offline = Vec::new();
        for (k, x) in make_windows(&test, 5, stride).unwrap().iter().enumerate() {
            let s = model.score_window(x).unwrap();
            offline.extend_from_slice(&s[if k == 0 { 0 } else { 5 - stride }..]);
        }
        let base = Config {
            gamma: 0.9,
            eta: 0.005,
            tau,
            window: 5,
            use_detrend: false,
            use_tta: false,
        };
        let plain = stream(&model, &train, &test, base, stride);
        let preds_ok = plain
            .preds
            .iter()
            .zip(&offline)
            .all(|(&p, &s)| p == (s > tau));
        if !same_bits(&plain.scores, &offline) || !preds_ok {
            problems.push(format!(
                "plain stream differs from offline inference at stride {stride}"
            ));
        }
        checks += 1;

        for detrend in [false, true] {
            let off = Config {
                use_detrend: detrend,
                ..base
            };
            let frozen = Config {
                use_tta: true,
                eta: 0.0,
                ..off
            };
            let mut a = State::new(model.clone(), &train, off).unwrap();
            let mut b = State::new(model.clone(), &train, frozen).unwrap();
            let (ra, rb) = (
                a.run_stream(&test, stride).unwrap(),
                b.run_stream(&test, stride).unwrap(),
            );
            let trend_same = ra
                .trend_trace
                .iter()
                .zip(&rb.trend_trace)
                .all(|(x, y)| same_bits(x, y));
            if !same_bits(&ra.scores, &rb.scores)
                || ra.preds != rb.preds
                || !trend_same
                || bits(&a.model) != bits(&b.model)
            {
                problems.push(format!(
                    "zero-rate adaptation differs (detrend {detrend}, stride {stride})"
                ));
            }
            checks += 1;
        }
    }
    Verdict::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{checks} full-stream comparisons, all bitwise equal")
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------- 6

fn trend_shift_experiment() -> Verdict {
    let cfg = RunConfig::default();
    let table = ablation_table(&cfg).unwrap();
    let mean = |v: Variant,
                metric: fn(
        &tsad_cli::commands::AblationRow,
    ) -> Option<tsad_cli::commands::MeanStd>| {
        metric(table.row(v)).expect("labeled synthetic data").mean
    };
    let [none, dt, tta, both] = Variant::ALL;
    let f1 = |v| mean(v, |r| r.f1);
    let auc = |v| mean(v, |r| r.auroc);
    let fp = |v| mean(v, |r| r.post_shift_fp);

    let gain = f1(both) - f1(none);
    let a = gain >= 0.15;
    let b = [none, dt, tta].iter().all(|&v| auc(both) >= auc(v));
    let c = fp(both) <= 0.25 * fp(none);
    let detail = format!(
        "(a) {} F1 gain {gain:.4} (need >= 0.15; none {:.4}, DT {:.4}, TTA {:.4}, DT+TTA {:.4}); \
         (b) {} AUROC none {:.6}, DT {:.6}, TTA {:.6}, DT+TTA {:.6}; \
         (c) {} post-shift FP {:.1} vs {:.1} ({:.1}%)",
        if a { "pass" } else { "fail" },
        f1(none),
        f1(dt),
        f1(tta),
        f1(both),
        if b { "pass" } else { "fail" },
        auc(none),
        auc(dt),
        auc(tta),
        auc(both),
        if c { "pass" } else { "fail" },
        fp(both),
        fp(none),
        100.0 * fp(both) / fp(none),
    );
    Verdict::new(a && b && c, detail)
}

// ---------------------------------------------------------------- 7

fn snapshot(dir: &Path, into: &mut BTreeMap<String, Vec<u8>>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            snapshot(&path, into);
        } else {
            into.insert(path.display().to_string(), fs::read(&path).unwrap());
        }
    }
}

fn run_commands(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let p = |s: &str| root.join(s).display().to_string();
    let invocations: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--out".into(), p("data")],
        vec![
            "train".into(),
            "--train".into(),
            p("data/train.csv"),
            "--out".into(),
            p("run"),
        ],
        vec![
            "detect".into(),
            "--train".into(),
            p("data/train.csv"),
            "--test".into(),
            p("data/test.csv"),
            "--out".into(),
            p("run"),
        ],
        vec![
            "evaluate".into(),
            "--scores".into(),
            p("run/scores.csv"),
            "--train-scores".into(),
            p("run/train_scores.csv"),
            "--out".into(),
            p("eval"),
        ],
        vec![
            "evaluate".into(),
            "--scores".into(),
            p("run/scores.csv"),
            "--threshold".into(),
            "oracle".into(),
            "--out".into(),
            p("oracle"),
        ],
        vec!["ablate".into(), "--out".into(), p("ablate")],
    ];
    for args in invocations {
        let cli =
            Cli::try_parse_from(std::iter::once("tsad".to_string()).chain(args.clone())).unwrap();
        tsad_cli::run(cli, &mut std::io::sink(), &mut std::io::sink())
            .unwrap_or_else(|e| panic!("{args:?}: {e:#}"));
    }
    let mut files = BTreeMap::new();
    snapshot(root, &mut files);
    files
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("work");
    let first = run_commands(&root);
    fs::remove_dir_all(&root).unwrap();
    let second = run_commands(&root);
    let differing: Vec<&String> = first
        .iter()
        .filter(|(k, v)| second.get(*k) != Some(v))
        .map(|(k, _)| k)
        .collect();
    let same_set = first.keys().eq(second.keys());
    Verdict::new(
        same_set && differing.is_empty(),
        if same_set && differing.is_empty() {
            format!("{} output files identical across reruns", first.len())
        } else {
            format!("differing outputs: {differing:?}")
        },
    )
}

// ---------------------------------------------------------------- 8

fn kld_diagnostic() -> Verdict {
    let spec = SyntheticSpec::default();
    let (train, test) = generate_synthetic::<f64>(&spec).unwrap();
    let mut rng = rng(8);
    let mut self_zero = kld_shift(&train, &train, 50).unwrap().total == 0.0
        && kld_shift(&test, &test, 50).unwrap().total == 0.0;
    for _ in 0..50 {
        let (n, f) = (rng.random_range(1..300), rng.random_range(1..=4));
        let values = (0..n * f).map(|_| uniform(&mut rng, 5.0)).collect();
        let x = Dataset::unnamed(Matrix::from_vec(n, f, values).unwrap(), None).unwrap();
        let bins = rng.random_range(2..=64);
        let r = kld_shift(&x, &x, bins).unwrap();
        self_zero &= r.total == 0.0 && r.per_feature.iter().all(|&v| v == 0.0);
    }
    let pre = kld_shift(&train, &test.slice(0, spec.shift_at).unwrap(), 50)
        .unwrap()
        .total;
    let post = kld_shift(&train, &test.slice(spec.shift_at, test.len()).unwrap(), 50)
        .unwrap()
        .total;
    Verdict::new(
        self_zero && post > pre,
        format!(
            "kld(x, x) == 0 {}; pre-shift {pre:.4} vs post-shift {post:.4}",
            if self_zero { "holds" } else { "violated" }
        ),
    )
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            id: 1,
            name: "gradient oracle",
            budget: Some(secs(10)),
            check: gradient_oracle,
        },
        Criterion {
            id: 2,
            name: "masked-update inertness",
            budget: None,
            check: masked_update_inertness,
        },
        Criterion {
            id: 3,
            name: "EMA algebra",
            budget: None,
            check: ema_algebra,
        },
        Criterion {
            id: 4,
            name: "metric oracles",
            budget: Some(secs(30)),
            check: metric_oracles,
        },
        Criterion {
            id: 5,
            name: "ablation degeneracies",
            budget: None,
            check: ablation_degeneracies,
        },
        Criterion {
            id: 6,
            name: "trend-shift experiment",
            budget: Some(secs(300)),
            check: trend_shift_experiment,
        },
        Criterion {
            id: 7,
            name: "determinism",
            budget: None,
            check: determinism,
        },
        Criterion {
            id: 8,
            name: "KLD diagnostic",
            budget: None,
            check: kld_diagnostic,
        },
    ];
    if run_all(&criteria) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
