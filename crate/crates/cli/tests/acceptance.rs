//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any fail.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use oclust_core::divergence::bin_counts;
use oclust_core::special::{beta_cdf, ks_pvalue, ks_statistic};
use oclust_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn normal_rows(rng: &mut ChaCha8Rng, n: usize, p: usize, offset: &[f64], spread: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..p).map(|d| offset[d] + spread * rng.sample::<f64, _>(StandardNormal)).collect()).collect()
}

fn random_spd(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    &a * a.transpose() / p as f64 + DMatrix::identity(p, p) * 0.3
}

/// Delta formula against two direct evaluations of the hard-assignment log-likelihood.
fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for inst in 0..200 {
        let g = [1, 2, 3][inst % 3];
        let p = [1, 2, 5][(inst / 3) % 3];
        let per_max = 100 / g;
        let sizes: Vec<usize> = (0..g).map(|_| rng.random_range(p + 2..=per_max)).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (h, &size) in sizes.iter().enumerate() {
            let centre: Vec<f64> = (0..p).map(|_| rng.random_range(-10.0..10.0)).collect();
            let spread = rng.random_range(0.5..3.0);
            rows.extend(normal_rows(&mut rng, size, p, &centre, spread));
            labels.extend(std::iter::repeat(h).take(size));
        }
        let data = DataMatrix::from_rows(&rows).unwrap();
        let labels = HardAssignment::new(labels, g).unwrap();
        let stats = cluster_stats(&data, &labels).unwrap();
        let model = MixtureModel::new(
            stats.clusters.iter().map(|s| s.proportion).collect(),
            stats.clusters.iter().map(|s| GaussianParams::new(s.mean.clone(), s.cov.clone()).unwrap()).collect(),
        )
        .unwrap();
        let full = approx_log_likelihood(&data, &model, &labels).unwrap();
        for j in 0..data.n() {
            let sub = approx_log_likelihood(&data.without_row(j).unwrap(), &model, &labels.without_row(j)).unwrap();
            let h = labels.labels()[j];
            let delta = delta_formula(data.row(j), &stats.clusters[h]).unwrap();
            worst = worst.max(((sub - full) - delta).abs());
            checked += 1;
        }
    }
    outcome(worst <= 1e-9, format!("max |error| {worst:.2e} over {checked} deltas in 200 instances (tol 1e-9)"))
}

/// Exact downdate against recomputation; approximate downdate gap shrinking with cluster size.
fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(3..60);
        let p = rng.random_range(1..6);
        let centre: Vec<f64> = (0..p).map(|_| rng.random_range(-5.0..5.0)).collect();
        let data = DataMatrix::from_rows(&normal_rows(&mut rng, n, p, &centre, 1.5)).unwrap();
        let labels = HardAssignment::new(vec![0; n], 1).unwrap();
        let stat = &cluster_stats(&data, &labels).unwrap().clusters[0];
        let j = rng.random_range(0..n);
        let (mean, cov) = downdate_stats(stat, data.row(j), DowndateVariant::Exact).unwrap();
        let rest = data.without_row(j).unwrap();
        let brute = &cluster_stats(&rest, &HardAssignment::new(vec![0; n - 1], 1).unwrap()).unwrap().clusters[0];
        worst = worst.max((mean - &brute.mean).amax()).max((cov - &brute.cov).amax());
    }

    let mut gaps = Vec::new();
    for n in [10usize, 100, 1000] {
        let mut total = 0.0;
        for seed in 0..50u64 {
            let mut r = ChaCha8Rng::seed_from_u64(10_000 + seed);
            let data = DataMatrix::from_rows(&normal_rows(&mut r, n, 3, &[0.0; 3], 1.0)).unwrap();
            let stat = &cluster_stats(&data, &HardAssignment::new(vec![0; n], 1).unwrap()).unwrap().clusters[0];
            let (_, a) = downdate_stats(stat, data.row(0), DowndateVariant::Approx).unwrap();
            let (_, e) = downdate_stats(stat, data.row(0), DowndateVariant::Exact).unwrap();
            total += (a - e).amax();
        }
        gaps.push(total / 50.0);
    }
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    outcome(
        worst <= 1e-12 && shrinking,
        format!("exact downdate max |error| {worst:.2e} over 500 clusters; approx gap by n_h 10/100/1000: {:.2e} {:.2e} {:.2e}", gaps[0], gaps[1], gaps[2]),
    )
}

/// Frozen deltas of one Gaussian cluster follow the scaled beta law.
fn criterion_3() -> Outcome {
    let (n, p) = (200usize, 2usize);
    let (a, b) = (p as f64 / 2.0, (n - p - 1) as f64 / 2.0);
    let mut passes = 0;
    let mut pooled = Vec::with_capacity(100 * n);
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + trial);
        let data = DataMatrix::from_rows(&normal_rows(&mut rng, n, p, &[1.0, -2.0], 2.0)).unwrap();
        let labels = HardAssignment::new(vec![0; n], 1).unwrap();
        let stats = cluster_stats(&data, &labels).unwrap();
        let comp = ReferenceMixture::from_stats(&stats).unwrap().components()[0];
        let expected_scale = 2.0 * n as f64 / ((n - 1) as f64).powi(2);
        assert!((comp.scale - expected_scale).abs() < 1e-15);
        let scaled: Vec<f64> = frozen_deltas(&data, &labels).unwrap().iter().map(|y| comp.scale * (y - comp.shift)).collect();
        let d = ks_statistic(&scaled, |x| beta_cdf(x, a, b));
        if ks_pvalue(d, n) > 0.01 {
            passes += 1;
        }
        pooled.extend(scaled);
    }
    let m = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / m;
    let sd = (pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let target = p as f64 / (n - 1) as f64;
    let se = sd / m.sqrt();
    let mean_ok = (mean - target).abs() <= 3.0 * se;
    outcome(
        passes >= 90 && mean_ok,
        format!("KS passes at 0.01: {passes}/100 (need 90); mean {mean:.6} vs {target:.6} (3 SE = {:.2e})", 3.0 * se),
    )
}

/// Population-parameter deltas follow the shifted gamma law.
fn criterion_4() -> Outcome {
    let (n, p) = (5000usize, 3usize);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sigma = random_spd(&mut rng, p);
    let mu = DVector::from_vec(vec![2.0, -1.0, 0.5]);
    let params = GaussianParams::new(mu.clone(), sigma.clone()).unwrap();
    let model = MixtureModel::new(vec![1.0], vec![params.clone()]).unwrap();
    let mut values = Vec::with_capacity(n * p);
    let mut x = vec![0.0; p];
    for _ in 0..n {
        let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        params.factor().mul_lower(&z, &mut x);
        values.extend(x.iter().zip(mu.iter()).map(|(a, b)| a + b));
    }
    let data = DataMatrix::new(n, p, values).unwrap();
    let labels = HardAssignment::new(vec![0; n], 1).unwrap();
    let c = GammaReference::from_population(&model).unwrap().components[0].shift;
    let w: Vec<f64> = population_deltas(&data, &model, &labels).unwrap().iter().map(|y| y - c).collect();
    let mean = w.iter().sum::<f64>() / n as f64;
    let sd = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let se = sd / (n as f64).sqrt();
    outcome((mean - 1.5).abs() <= 3.0 * se, format!("mean of y - c = {mean:.4} vs 1.5 (3 SE = {:.4})", 3.0 * se))
}

fn random_reference(rng: &mut ChaCha8Rng) -> ReferenceMixture {
    let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let comps = raw
        .iter()
        .map(|w| {
            let n = rng.random_range(20..200);
            let p = rng.random_range(2..5);
            BetaComponent::for_cluster(n, p, w / total, rng.random_range(-3.0..3.0)).unwrap()
        })
        .collect();
    ReferenceMixture::new(comps).unwrap()
}

/// Draws from the reference by choosing a component, then a beta variate.
fn sample_reference(rng: &mut ChaCha8Rng, r: &ReferenceMixture, m: usize) -> Vec<f64> {
    let betas: Vec<Beta<f64>> = r.components().iter().map(|c| Beta::new(c.alpha, c.beta).unwrap()).collect();
    (0..m)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut k = r.components().len() - 1;
            for (i, c) in r.components().iter().enumerate() {
                acc += c.weight;
                if u < acc {
                    k = i;
                    break;
                }
            }
            let c = &r.components()[k];
            c.shift + betas[k].sample(rng) / c.scale
        })
        .collect()
}

/// KL estimator: self-divergence, point mass, nonnegativity.
fn criterion_5() -> Outcome {
    let m = 10_000;
    let bins = (m as f64).sqrt().ceil() as usize;
    let mut worst_self = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let r = random_reference(&mut rng);
        let samples = sample_reference(&mut rng, &r, m);
        let scheme = build_bins(&r, bins, BinMethod::EqualProbability).unwrap();
        worst_self = worst_self.max(kl_divergence(&samples, &scheme).unwrap().value);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = random_reference(&mut rng);
    let four = build_bins(&r, 4, BinMethod::EqualProbability).unwrap();
    let inside = 0.5 * (four.edges()[1] + four.edges()[2]);
    let point = kl_divergence(&vec![inside; 250], &four).unwrap().value;
    let point_ok = point == 4f64.ln();

    let mut min_kl = f64::INFINITY;
    for _ in 0..1000 {
        let r = random_reference(&mut rng);
        let b = rng.random_range(2..50);
        let scheme = build_bins(&r, b, BinMethod::EqualProbability).unwrap();
        let (lo, hi) = r.support();
        let k = rng.random_range(1..200);
        let samples: Vec<f64> = (0..k).map(|_| rng.random_range(lo - 1.0..hi + 1.0)).collect();
        let kl = kl_divergence(&samples, &scheme).unwrap().value;
        let (counts, _) = bin_counts(&samples, &scheme);
        assert_eq!(counts.iter().sum::<usize>(), k);
        min_kl = min_kl.min(kl);
    }
    outcome(
        worst_self < 0.01 && point_ok && min_kl >= -1e-12,
        format!("max self-divergence {worst_self:.5} (20 seeds, B = {bins}); point mass {point:.15} vs ln 4; min over 1000 random inputs {min_kl:.2e}"),
    )
}

/// Relative gap between hard-assignment and mixture log-likelihood by separation, p = 2.
fn criterion_6() -> Outcome {
    let grid = [-0.9, -0.5, 0.0, 0.5];
    let mut gaps = Vec::new();
    for &t in &grid {
        match separation_experiment(2, t, 20, 6) {
            Ok(r) => gaps.push(r.relative_gap),
            Err(e) => return outcome(false, format!("J* = {t}: {e}")),
        }
    }
    let bands = gaps[3] < 1e-6 && (0.002..=0.02).contains(&gaps[2]) && (0.05..=0.20).contains(&gaps[0]);
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        bands && monotone,
        format!(
            "mean gap at J* -0.9/-0.5/0/0.5 (20 replicates): {:.3e} {:.3e} {:.3e} {:.3e}; monotone {monotone}",
            gaps[0], gaps[1], gaps[2], gaps[3]
        ),
    )
}

struct TableRun {
    alpha_hat: f64,
    misclassification: f64,
    early_kl: f64,
    late_kl: f64,
}

fn table_runs() -> Vec<TableRun> {
    (1..=10u64)
        .map(|seed| {
            let ds = gen_dataset(&SimModelSpec::new(SimModel::I, 2, Proportions::Equal, 450, 50, seed)).unwrap();
            let cfg = OclustConfig {
                max_outliers: Some(63),
                fit: FitConfig { seed, ..FitConfig::default() },
                ..OclustConfig::new(3)
            };
            let r = oclust_run(&ds.data, &cfg).unwrap();
            let kl = r.kl_trace();
            TableRun {
                alpha_hat: r.alpha_hat,
                misclassification: classify_errors(&r, &ds.outlier_mask).unwrap().misclassification,
                early_kl: kl[0..=40].iter().sum::<f64>() / 41.0,
                late_kl: kl[45..=55].iter().sum::<f64>() / 11.0,
            }
        })
        .collect()
}

fn criterion_7(runs: &[TableRun]) -> Outcome {
    let mean = runs.iter().map(|r| r.alpha_hat).sum::<f64>() / runs.len() as f64;
    let each: Vec<String> = runs.iter().map(|r| format!("{:.3}", r.alpha_hat)).collect();
    outcome((mean - 0.10).abs() <= 0.02, format!("mean alpha_hat {mean:.4} (target 0.10 ± 0.02); per seed [{}]", each.join(" ")))
}

fn criterion_8(runs: &[TableRun]) -> Outcome {
    let mean = runs.iter().map(|r| r.misclassification).sum::<f64>() / runs.len() as f64;
    outcome(mean <= 0.02, format!("mean misclassification {mean:.4} (need <= 0.02)"))
}

fn criterion_9(runs: &[TableRun]) -> Outcome {
    let hits = runs.iter().filter(|r| r.early_kl > r.late_kl).count();
    outcome(hits >= 8, format!("mean KL over m 0..=40 above m 45..=55 in {hits}/10 seeds (need 8)"))
}

fn oclust_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_oclust"))
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(oclust_bin()).args(args).output().expect("spawn oclust");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

/// Each command twice with the same flags into separate directories; compare every byte.
fn criterion_10() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let dir = root.path().join(format!("rep{k}"));
        std::fs::create_dir_all(&dir).unwrap();
        let s = |p: &str| dir.join(p).to_string_lossy().into_owned();
        // The input path must be the same in both runs since it is echoed in the manifest.
        let data = root.path().join("data.csv").to_string_lossy().into_owned();
        let sim = run_cli(&["simulate", "--model", "II", "--dim", "2", "--n-good", "150", "--n-out", "15", "--seed", "9", "--out", &s("sim.csv")]);
        std::fs::copy(s("sim.csv"), &data).unwrap();
        let run = run_cli(&["oclust", &data, "-g", "3", "-F", "20", "--seed", "4", "--out", &s("run")]);
        let sep = run_cli(&["separation-study", "--dims", "2", "--grid", "0.5,-0.2", "--replicates", "2", "--seed", "3", "--out", &s("sep.csv")]);
        let score = run_cli(&["score", "--pred", &s("run/labels.csv"), "--truth", &data]);
        let codes = [sim.0, run.0, sep.0, score.0];
        if codes.iter().any(|&c| c != 0) {
            return outcome(false, format!("non-zero exit codes {codes:?}"));
        }
        let mut files = read_all(&dir);
        files.extend(read_all(&dir.join("run")).into_iter().map(|(n, b)| (format!("run/{n}"), b)));
        files.push(("score.stdout".into(), score.1));
        outputs.push(files);
    }
    let names: Vec<&str> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
    let identical = outputs[0] == outputs[1];
    outcome(identical, format!("{} outputs compared across reruns: {}", names.len(), names.join(", ")))
}

fn main() {
    // Honour a name filter like the default harness so `cargo test <name>` skips this suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    if std::env::args().any(|a| a == "--list") {
        return;
    }

    let mut failures = 0;
    let mut report = |id: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} [{verdict}] {name}: {} ({:.1} s)", o.detail, t.elapsed().as_secs_f64());
        if !o.pass {
            failures += 1;
        }
    };
    report(1, "delta formula", &criterion_1);
    report(2, "downdate", &criterion_2);
    report(3, "beta law", &criterion_3);
    report(4, "gamma law", &criterion_4);
    report(5, "KL estimator", &criterion_5);
    report(6, "separation gap", &criterion_6);
    let t = Instant::now();
    let runs = table_runs();
    println!("             (10 trimming runs on Model I took {:.1} s)", t.elapsed().as_secs_f64());
    report(7, "outlier proportion", &|| criterion_7(&runs));
    report(8, "misclassification", &|| criterion_8(&runs));
    report(9, "trace shape", &|| criterion_9(&runs));
    report(10, "determinism", &criterion_10);

    if failures > 0 {
        println!("{failures} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
