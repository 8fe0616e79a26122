//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use mval::bench::stats::{paired_t_statistic, paired_t_test, Outcome};
use mval::bench::{aggregate, run_experiment, write_results, ExperimentConfig, Summary};
use mval::data::load_dataset;
use mval::linmodels::{
    logistic_objective, predict_proba, sigmoid, solve_svm_dual, svm_primal_objective,
    svm_pseudo_proba, train, train_logreg,
};
use mval::rim::{
    apply_weights_binary, build_binary_rims, build_multiclass_rims, current_weights, Trainer,
};
use mval::strategies::{select, select_traced};
use mval::variance::{binary_scores, v1_binary, v1_multiclass, v2_binary, v2_multiclass};
use mval::{
    ActiveState, BinaryRims, Components, Dataset, Format, Matrix, ModelKind, MulticlassRims,
    StrategyName, StrategySpec, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

type Check = Result<String, String>;

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("1 variance oracle equivalence", variance_oracles),
        (
            "2 binary/multiclass consistency",
            binary_multiclass_consistency,
        ),
        ("3 solver correctness", solver_correctness),
        ("4 strategy oracle", strategy_oracle),
        ("5 homogeneity, equivariance, replay", invariances),
        ("6 desk suite: mval vs random", desk_mval_vs_random),
        ("7 desk suite: ablation ordering", desk_ablation),
        ("8 svm path", svm_path),
        ("9 paired t-test", t_test),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn naive_var(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

fn variance_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=10);
        let k = rng.gen_range(2..=4);

        let p = random_matrix(&mut rng, n, n);
        let q = random_matrix(&mut rng, n, n);
        let rims = BinaryRims {
            p: Matrix::from_rows(&p),
            n: Matrix::from_rows(&q),
            weights: vec![1.0; n],
            weighted: false,
            retrainings: 0,
        };
        let (v1, v2) = (v1_binary(&rims).unwrap(), v2_binary(&rims).unwrap());
        for j in 0..n {
            let mut col: Vec<f64> = p.iter().map(|r| r[j]).collect();
            col.extend(q.iter().map(|r| r[j]));
            worst = worst.max((v1[j] - naive_var(&col)).abs());
            let row: Vec<f64> = (0..n).map(|c| p[j][c] - q[j][c]).collect();
            worst = worst.max((v2[j] - naive_var(&row)).abs());
        }

        // tensors[kk][i][j][l]
        let tensors: Vec<Vec<Vec<Vec<f64>>>> = (0..k)
            .map(|_| (0..n).map(|_| random_matrix(&mut rng, n, k)).collect())
            .collect();
        let flat: Vec<Vec<f64>> = tensors
            .iter()
            .map(|t| {
                t.iter()
                    .flat_map(|rows| rows.iter().flat_map(|r| r.iter().copied()))
                    .collect()
            })
            .collect();
        let mc = MulticlassRims {
            r: flat,
            n,
            n_classes: k,
            weights: vec![1.0; n],
            weighted: false,
            retrainings: 0,
        };
        let (m1, m2) = (v1_multiclass(&mc).unwrap(), v2_multiclass(&mc).unwrap());
        for j in 0..n {
            let mut acc = 0.0;
            for l in 0..k {
                let mut entries = Vec::new();
                for t in &tensors {
                    for row in t {
                        entries.push(row[j][l]);
                    }
                }
                acc += naive_var(&entries);
            }
            worst = worst.max((m1[j] - acc / k as f64).abs());
        }
        for i in 0..n {
            let mut acc = 0.0;
            for l in 0..k {
                let mut entries = Vec::new();
                for kk in 0..k {
                    let next = (kk + 1) % k;
                    for j in 0..n {
                        entries.push(tensors[kk][i][j][l] - tensors[next][i][j][l]);
                    }
                }
                acc += naive_var(&entries);
            }
            worst = worst.max((m2[i] - acc / k as f64).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-12, || {
        format!("max abs deviation {worst:e} > 1e-12")
    })?;
    ensure(secs < 5.0, || format!("took {secs:.2}s (limit 5s)"))?;
    Ok(format!("200 instances, max abs deviation {worst:.1e}"))
}

fn random_dataset(rng: &mut ChaCha8Rng, m: usize, d: usize, k: usize) -> Dataset<f64> {
    let labels: Vec<usize> = (0..m)
        .map(|i| if i < k { i } else { rng.gen_range(0..k) })
        .collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| {
            (0..d)
                .map(|c| rng.gen_range(-1.0..1.0) + if c % k == y { 0.8 } else { 0.0 })
                .collect()
        })
        .collect();
    Dataset::new("random", Matrix::from_rows(&rows), labels, k).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, ds: &Dataset<f64>, n_labeled: usize) -> ActiveState {
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    // one of each class first, then random extras
    let mut labeled: Vec<usize> = (0..ds.n_classes())
        .map(|c| idx.iter().position(|&i| ds.label(i) == c).unwrap())
        .collect();
    idx.retain(|i| !labeled.contains(i));
    while labeled.len() < n_labeled {
        labeled.push(idx.remove(rng.gen_range(0..idx.len())));
    }
    ActiveState::new(labeled, idx).unwrap()
}

fn binary_multiclass_consistency() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trainer = Trainer::new(ModelKind::Logreg, TrainConfig::logreg());
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = rng.gen_range(8..=16);
        let d = rng.gen_range(1..=3);
        let ds = random_dataset(&mut rng, m, d, 2);
        let n_lab = rng.gen_range(2..=4);
        let st = random_state(&mut rng, &ds, n_lab);
        let b = build_binary_rims(&ds, &st, &trainer).map_err(|e| e.to_string())?;
        let mc = build_multiclass_rims(&ds, &st, &trainer).map_err(|e| e.to_string())?;
        let n = b.pool_size();
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((mc.get(1, i, j, 1) - b.p[(i, j)]).abs());
            }
        }
        let (vb, vm) = (v1_binary(&b).unwrap(), v1_multiclass(&mc).unwrap());
        for j in 0..n {
            worst = worst.max((vb[j] - vm[j]).abs());
        }
    }
    ensure(worst <= 1e-10, || {
        format!("max deviation {worst:e} > 1e-10")
    })?;
    Ok(format!("50 states, max deviation {worst:.1e}"))
}

/// Minimises the SVM dual by accelerated projected gradient; returns the
/// primal optimum value via strong duality.
fn svm_dual_oracle(x: &Matrix<f64>, y: &[usize], c: f64) -> f64 {
    let m = x.rows();
    let s: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let q: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    s[i] * s[j]
                        * x.row(i)
                            .iter()
                            .zip(x.row(j))
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                })
                .collect()
        })
        .collect();
    let lip = (0..m).map(|i| q[i][i]).sum::<f64>().max(1e-12);
    let project = |v: &[f64]| -> Vec<f64> {
        let at = |mu: f64| -> (Vec<f64>, f64) {
            let a: Vec<f64> = v
                .iter()
                .zip(&s)
                .map(|(vi, si)| (vi - mu * si).clamp(0.0, c))
                .collect();
            let bal = a.iter().zip(&s).map(|(ai, si)| ai * si).sum();
            (a, bal)
        };
        let (mut lo, mut hi) = (-1e6, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).1 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi)).0
    };
    let dual = |a: &[f64]| -> f64 {
        let quad: f64 = (0..m)
            .map(|i| a[i] * (0..m).map(|j| q[i][j] * a[j]).sum::<f64>())
            .sum();
        0.5 * quad - a.iter().sum::<f64>()
    };
    let mut a = vec![0.0; m];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let g: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| q[i][j] * z[j]).sum::<f64>() - 1.0)
            .collect();
        let step: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi / lip).collect();
        let next = project(&step);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next
            .iter()
            .zip(&a)
            .map(|(n, o)| n + (t - 1.0) / t_next * (n - o))
            .collect();
        a = next;
        t = t_next;
    }
    -dual(&a)
}

fn solver_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut worst_fd = 0.0f64;
    for _ in 0..30 {
        let k = rng.gen_range(2..=4);
        let d = rng.gen_range(1..=4);
        let ds = random_dataset(&mut rng, 12, d, k);
        let blocks = if k == 2 { 1 } else { k };
        let params: Vec<f64> = (0..blocks * (d + 1))
            .map(|_| rng.gen_range(-1.5..1.5))
            .collect();
        let (_, grad) = logistic_objective(&params, ds.features(), ds.labels(), k, 3.0);
        for p in 0..params.len() {
            let h = 1e-5;
            let mut up = params.clone();
            let mut down = params.clone();
            up[p] += h;
            down[p] -= h;
            let fd = (logistic_objective(&up, ds.features(), ds.labels(), k, 3.0).0
                - logistic_objective(&down, ds.features(), ds.labels(), k, 3.0).0)
                / (2.0 * h);
            worst_fd = worst_fd.max((fd - grad[p]).abs() / grad[p].abs().max(1.0));
        }
    }
    ensure(worst_fd <= 1e-4, || {
        format!("finite-difference relative error {worst_fd:e}")
    })?;

    let mut worst_grad = 0.0f64;
    for t in 0..10 {
        let k = 2 + t % 3;
        let (m, d) = (rng.gen_range(10..=30), rng.gen_range(1..=4));
        let ds = random_dataset(&mut rng, m, d, k);
        let model = train_logreg(ds.features(), ds.labels(), k, &TrainConfig::logreg())
            .map_err(|e| e.to_string())?;
        let params: Vec<f64> = (0..model.weights.rows())
            .flat_map(|r| {
                model
                    .weights
                    .row(r)
                    .iter()
                    .copied()
                    .chain([model.intercepts[r]])
                    .collect::<Vec<_>>()
            })
            .collect();
        let (_, grad) = logistic_objective(&params, ds.features(), ds.labels(), k, 100.0);
        worst_grad = worst_grad.max(grad.iter().map(|g| g * g).sum::<f64>().sqrt());
    }
    ensure(worst_grad < 1e-6, || {
        format!("trained gradient norm {worst_grad:e}")
    })?;

    let mut worst_gap = 0.0f64;
    for _ in 0..10 {
        let (m, d) = (rng.gen_range(6..=14), rng.gen_range(1..=3));
        let ds = random_dataset(&mut rng, m, d, 2);
        let c = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
        let cfg = TrainConfig::svm().with_c(c);
        let sol = solve_svm_dual(ds.features(), ds.labels(), &cfg).map_err(|e| e.to_string())?;
        ensure(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)), || {
            "multiplier outside [0, C]".into()
        })?;
        let ours = svm_primal_objective(&sol.w, sol.b, ds.features(), ds.labels(), c);
        let oracle = svm_dual_oracle(ds.features(), ds.labels(), c);
        worst_gap = worst_gap.max((ours - oracle).abs() / oracle.abs().max(1.0));
    }
    ensure(worst_gap <= 1e-3, || {
        format!("svm primal vs oracle relative gap {worst_gap:e}")
    })?;

    Ok(format!(
        "fd {worst_fd:.1e}, grad norm {worst_grad:.1e}, svm gap {worst_gap:.1e}"
    ))
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|v| -v * v.ln()).sum()
}

/// Posteriors of every pool row after training on `labeled + (candidate, y)`.
fn retrained(ds: &Dataset<f64>, st: &ActiveState, candidate: usize, y: usize) -> Matrix<f64> {
    let mut rows: Vec<Vec<f64>> = st.labeled().iter().map(|&i| ds.row(i).to_vec()).collect();
    let mut labels: Vec<usize> = st.labeled().iter().map(|&i| ds.label(i)).collect();
    rows.push(ds.row(candidate).to_vec());
    labels.push(y);
    let model = train(
        ModelKind::Logreg,
        &Matrix::from_rows(&rows),
        &labels,
        2,
        &TrainConfig::logreg(),
    )
    .unwrap();
    predict_proba(&model, &ds.features().select_rows(st.unlabeled())).unwrap()
}

fn first_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

fn strategy_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = TrainConfig::logreg();
    for case in 0..20 {
        let n = rng.gen_range(2..=6);
        let n_lab = rng.gen_range(2..=4);
        let d = rng.gen_range(1..=3);
        let ds = random_dataset(&mut rng, n + n_lab, d, 2);
        let st = random_state(&mut rng, &ds, n_lab);
        let pool = st.unlabeled().to_vec();

        let lab_rows: Vec<Vec<f64>> = st.labeled().iter().map(|&i| ds.row(i).to_vec()).collect();
        let lab_y: Vec<usize> = st.labeled().iter().map(|&i| ds.label(i)).collect();
        let current = train(
            ModelKind::Logreg,
            &Matrix::from_rows(&lab_rows),
            &lab_y,
            2,
            &cfg,
        )
        .unwrap();
        let now = predict_proba(&current, &ds.features().select_rows(&pool)).unwrap();
        let e: Vec<f64> = (0..n).map(|j| entropy(now.row(j))).collect();

        let mut p = vec![vec![0.0; n]; n];
        let mut q = vec![vec![0.0; n]; n];
        let mut risk = vec![0.0; n];
        for i in 0..n {
            for y in 0..2 {
                let post = retrained(&ds, &st, pool[i], y);
                for j in 0..n {
                    let target = if y == 1 { &mut p } else { &mut q };
                    target[i][j] = post[(j, 1)] * e[j];
                }
                let err: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| 1.0 - post[(j, 0)].max(post[(j, 1)]))
                    .sum();
                risk[i] += now[(i, y)] * err;
            }
        }
        let fused: Vec<f64> = (0..n)
            .map(|c| {
                let mut col: Vec<f64> = p.iter().map(|r| r[c]).collect();
                col.extend(q.iter().map(|r| r[c]));
                let diff: Vec<f64> = (0..n).map(|j| p[c][j] - q[c][j]).collect();
                naive_var(&col) * naive_var(&diff)
            })
            .collect();
        let want_mval = pool[first_argmax(&fused)];
        let neg: Vec<f64> = risk.iter().map(|r| -r).collect();
        let want_eer = pool[first_argmax(&neg)];

        let got_mval = select(&StrategySpec::mval(ModelKind::Logreg), &ds, &st, &cfg)
            .map_err(|e| e.to_string())?;
        let got_eer = select(
            &StrategySpec::new(StrategyName::Eer, ModelKind::Logreg),
            &ds,
            &st,
            &cfg,
        )
        .map_err(|e| e.to_string())?;
        ensure(got_mval == want_mval, || {
            format!("case {case}: mval picked {got_mval}, enumeration {want_mval}")
        })?;
        ensure(got_eer == want_eer, || {
            format!("case {case}: eer picked {got_eer}, enumeration {want_eer}")
        })?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1}s (limit 120s)"))?;
    Ok("20 pools, mval and eer agree with enumeration".into())
}

fn invariances() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = TrainConfig::logreg();
    let trainer = Trainer::new(ModelKind::Logreg, cfg);

    // weight scaling
    let mut worst_rel = 0.0f64;
    for _ in 0..10 {
        let ds = random_dataset(&mut rng, 14, 2, 2);
        let st = random_state(&mut rng, &ds, 3);
        let rims = build_binary_rims(&ds, &st, &trainer).map_err(|e| e.to_string())?;
        let model = trainer.fit_labeled(&ds, &st).map_err(|e| e.to_string())?;
        let e = current_weights(&model, &ds.features().select_rows(st.unlabeled()))
            .map_err(|e| e.to_string())?;
        let lambda = 3.7;
        let scaled: Vec<f64> = e.iter().map(|v| v * lambda).collect();
        let base = binary_scores(&apply_weights_binary(rims.clone(), &e).unwrap()).unwrap();
        let up = binary_scores(&apply_weights_binary(rims, &scaled).unwrap()).unwrap();
        for (a, b) in base.fused.iter().zip(&up.fused) {
            let want = a * lambda.powi(4);
            worst_rel = worst_rel.max((b - want).abs() / want.abs().max(f64::MIN_POSITIVE));
        }
        ensure(
            base.select(Components::Fused) == up.select(Components::Fused),
            || "argmax moved under scaling".into(),
        )?;
    }
    ensure(worst_rel <= 1e-9, || {
        format!("lambda^4 relative error {worst_rel:e}")
    })?;

    // pool permutation
    for _ in 0..5 {
        let ds = random_dataset(&mut rng, 12, 2, 2);
        let st = random_state(&mut rng, &ds, 3);
        let m = ds.len();
        let mut perm: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        // new row r holds old row perm[r]
        let mut inverse = vec![0; m];
        for (r, &old) in perm.iter().enumerate() {
            inverse[old] = r;
        }
        let rows: Vec<Vec<f64>> = perm.iter().map(|&o| ds.row(o).to_vec()).collect();
        let labels: Vec<usize> = perm.iter().map(|&o| ds.label(o)).collect();
        let pds = Dataset::new("perm", Matrix::from_rows(&rows), labels, 2).unwrap();
        let pst = ActiveState::new(
            st.labeled().iter().map(|&i| inverse[i]).collect(),
            st.unlabeled().iter().map(|&i| inverse[i]).collect(),
        )
        .unwrap();
        let spec = StrategySpec::mval(ModelKind::Logreg);
        let a = select_traced(&spec, &ds, &st, &cfg, true).map_err(|e| e.to_string())?;
        let b = select_traced(&spec, &pds, &pst, &cfg, true).map_err(|e| e.to_string())?;
        ensure(inverse[a.index] == b.index, || {
            "selection not equivariant".into()
        })?;
        let (sa, sb) = (a.trace.unwrap().scores, b.trace.unwrap().scores);
        for (pos, &row) in st.unlabeled().iter().enumerate() {
            let ppos = pst
                .unlabeled()
                .iter()
                .position(|&r| r == inverse[row])
                .unwrap();
            ensure(
                (sa.fused[pos] - sb.fused[ppos]).abs()
                    <= 1e-12 * sa.fused[pos].abs().max(1e-300) + 1e-18,
                || "scores not equivariant".into(),
            )?;
        }
    }

    // replay
    let ds = load("wine_1vs2")?;
    let cfg = ExperimentConfig {
        strategies: vec![
            StrategySpec::mval(ModelKind::Logreg),
            StrategySpec::new(StrategyName::Random, ModelKind::Logreg),
            StrategySpec::new(StrategyName::Ueer, ModelKind::Logreg),
        ],
        budget: 8,
        reps: 3,
        base_seed: 17,
        reference: Some("random".into()),
        ..Default::default()
    };
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut recs = run_experiment(&cfg, std::slice::from_ref(&ds));
        recs.iter_mut().for_each(|r| r.wall_time_secs = 0.0);
        let summary = aggregate(&recs, cfg.reference.as_deref(), cfg.alpha);
        write_results(dir.path(), &cfg, &recs, &summary).map_err(|e| e.to_string())?;
        let mut files = BTreeMap::new();
        for rel in [
            "records.json",
            "summary.json",
            "curves/wine_1vs2__mval.csv",
            "curves/wine_1vs2__random.csv",
        ] {
            files.insert(
                rel,
                std::fs::read(dir.path().join(rel)).map_err(|e| e.to_string())?,
            );
        }
        outputs.push(files);
    }
    ensure(outputs[0] == outputs[1], || "replay output differs".into())?;
    Ok(format!(
        "lambda^4 rel err {worst_rel:.1e}, permutation equivariant, replay byte-identical"
    ))
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn load(name: &str) -> Result<Dataset<f64>, String> {
    load_dataset(&data_dir().join(format!("{name}.libsvm")), Format::Libsvm)
        .map_err(|e| format!("{name}: {e}"))
}

const DESK: [&str; 5] = [
    "wdbc",
    "iris_versicolor_virginica",
    "wine_1vs2",
    "digits_3vs5",
    "digits_7vs9",
];

fn desk_summary() -> Result<&'static Summary, String> {
    static CELL: std::sync::OnceLock<Result<Summary, String>> = std::sync::OnceLock::new();
    CELL.get_or_init(|| {
        let datasets = DESK
            .iter()
            .map(|n| load(n))
            .collect::<Result<Vec<_>, _>>()?;
        let strategies = [
            "mval",
            "random",
            "mval:v1",
            "mval:v2",
            "mval:unweighted",
            "mval:v1:unweighted",
            "mval:v2:unweighted",
        ]
        .iter()
        .map(|s| StrategySpec::parse(s, ModelKind::Logreg).unwrap())
        .collect();
        let cfg = ExperimentConfig {
            strategies,
            budget: 50,
            reps: 10,
            base_seed: 2024,
            reg_c: Some(100.0),
            reference: Some("random".into()),
            ..Default::default()
        };
        let recs = run_experiment(&cfg, &datasets);
        if let Some(bad) = recs.iter().find(|r| !r.ok()) {
            return Err(format!(
                "{} / {} failed: {:?}",
                bad.dataset, bad.strategy, bad.error
            ));
        }
        Ok(aggregate(&recs, Some("random"), 0.05))
    })
    .as_ref()
    .map_err(Clone::clone)
}

fn per_dataset(s: &Summary, strategy: &str) -> BTreeMap<String, f64> {
    s.per_dataset
        .iter()
        .filter(|r| r.strategy == strategy)
        .map(|r| (r.dataset.clone(), r.mean_alc))
        .collect()
}

fn desk_mval_vs_random() -> Check {
    let s = desk_summary()?;
    let mval = per_dataset(s, "mval");
    let rs = per_dataset(s, "random");
    let ahead = mval.iter().filter(|(d, a)| **a >= rs[*d]).count();
    let wtl = s
        .strategies
        .iter()
        .find(|x| x.strategy == "mval")
        .and_then(|x| x.vs_reference)
        .unwrap();
    let share = ahead as f64 / mval.len() as f64;
    let detail = format!(
        "mval >= random on {ahead}/{} datasets, W/T/L {}/{}/{}",
        mval.len(),
        wtl.wins,
        wtl.ties,
        wtl.losses
    );
    ensure(mval.len() >= 4 && share >= 0.8 && wtl.losses == 0, || {
        detail.clone()
    })?;
    Ok(detail)
}

fn desk_ablation() -> Check {
    let s = desk_summary()?;
    let mean = |name: &str| {
        s.strategies
            .iter()
            .find(|x| x.strategy == name)
            .unwrap()
            .mean_alc
    };
    let (fused, v1, v2) = (mean("mval"), mean("mval:v1"), mean("mval:v2"));
    let mut detail = format!("mean alc fused {fused:.4}, v1 {v1:.4}, v2 {v2:.4}");
    let mut ok = fused >= v1 && fused >= v2;
    for (w, u) in [
        ("mval", "mval:unweighted"),
        ("mval:v1", "mval:v1:unweighted"),
        ("mval:v2", "mval:v2:unweighted"),
    ] {
        let (a, b) = (per_dataset(s, w), per_dataset(s, u));
        let better = a.iter().filter(|(d, v)| **v >= b[*d]).count();
        ok &= 2 * better > a.len();
        detail.push_str(&format!("; {w} >= {u} on {better}/{}", a.len()));
    }
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

fn svm_path() -> Check {
    ensure(
        svm_pseudo_proba(0.0f64) == 0.5 && svm_pseudo_proba(0.0f32) == 0.5,
        || "sigmoid(0) != 0.5".into(),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let f: f64 = rng.gen_range(-50.0..50.0);
        ensure(sigmoid(f) + sigmoid(-f) == 1.0, || {
            format!("symmetry fails at {f}")
        })?;
        let g = f as f32;
        ensure(sigmoid(g) + sigmoid(-g) == 1.0, || {
            format!("f32 symmetry fails at {g}")
        })?;
    }

    let datasets = ["wine_1vs2", "iris_versicolor_virginica"]
        .iter()
        .map(|n| load(n))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = ExperimentConfig {
        strategies: vec![
            StrategySpec::mval(ModelKind::Svm),
            StrategySpec::new(StrategyName::Random, ModelKind::Svm),
        ],
        classifier: ModelKind::Svm,
        budget: 50,
        reps: 10,
        base_seed: 2024,
        reg_c: Some(10.0),
        ..Default::default()
    };
    let recs = run_experiment(&cfg, &datasets);
    if let Some(bad) = recs.iter().find(|r| !r.ok()) {
        return Err(format!(
            "{} / {} failed: {:?}",
            bad.dataset, bad.strategy, bad.error
        ));
    }
    let s = aggregate(&recs, Some("random"), 0.05);
    let (mval, rs) = (per_dataset(&s, "mval"), per_dataset(&s, "random"));
    let detail = mval
        .iter()
        .map(|(d, a)| format!("{d} {a:.4} vs {:.4}", rs[d]))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(mval.iter().all(|(d, a)| *a >= rs[d]), || detail.clone())?;
    Ok(format!("sigmoid identities exact; {detail}"))
}

fn t_test() -> Check {
    let a = [0.9, 0.91, 0.89, 0.92, 0.9];
    let b = [0.85, 0.86, 0.84, 0.87, 0.85];
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / 5.0;
    let sd = naive_var(&d).sqrt();
    let t_oracle = mean / (sd / 5f64.sqrt());
    let crit = StudentsT::new(0.0, 1.0, 4.0).unwrap().inverse_cdf(0.975);
    ensure((crit - 2.776).abs() < 1e-3, || {
        format!("critical value {crit}")
    })?;
    let t = paired_t_statistic(&a, &b);
    ensure(
        t == t_oracle
            || (t.is_infinite() && t_oracle.is_infinite())
            || ((t - t_oracle) / t_oracle).abs() < 1e-12,
        || format!("t {t} vs oracle {t_oracle}"),
    )?;
    ensure(t_oracle.abs() > crit, || {
        "oracle says not significant".into()
    })?;
    ensure(paired_t_test(&a, &b, 0.05) == Ok(Outcome::AWins), || {
        "example not a_wins".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut counts = [0usize; 3];
    for _ in 0..100 {
        let n = rng.gen_range(2..=12);
        let shift = rng.gen_range(-0.1..0.1);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v + shift + rng.gen_range(-0.05..0.05))
            .collect();
        let ab = paired_t_test(&x, &y, 0.05).map_err(|e| e.to_string())?;
        let ba = paired_t_test(&y, &x, 0.05).map_err(|e| e.to_string())?;
        ensure(ab == ba.swapped(), || {
            format!("not antisymmetric: {ab:?} vs {ba:?}")
        })?;
        counts[ab as usize] += 1;
    }
    Ok(format!(
        "t = {t:.3e} > {crit:.3}; 100 pairs antisymmetric (a/tie/b = {counts:?})"
    ))
}
