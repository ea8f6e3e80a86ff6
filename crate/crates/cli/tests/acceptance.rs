//! End-to-end acceptance suite: one PASS/FAIL line per criterion, each
//! including its runtime budget. Exits nonzero if any criterion fails.

#[path = "../../core/tests/common/oracle.rs"]
#[allow(dead_code)]
mod oracle;

use std::f64::consts::{FRAC_PI_2, LN_2, PI, SQRT_2};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use laplace_qmle::{
    al_log_density, bessel_bound_constant, bessel_k, estimate, q_t, sample_innovations,
    theta2_membership, truncation_decay, ArArch, BesselOrder, DiagArch, InnovationSpec,
    OptimizerConfig, ParamBox, SeriesMatrix, Var,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_laplace-qmle");

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn c1_bessel_oracles() -> Outcome {
    let half = BesselOrder::new(0.5).unwrap();
    let closed = log_grid(1e-3, 50.0, 200)
        .into_iter()
        .map(|u| {
            let exact = (PI / (2.0 * u)).sqrt() * (-u).exp();
            ((bessel_k(half, u).unwrap() - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    let mut quad: f64 = 0.0;
    for v in [0.0, -0.5, -1.0, -2.0, 0.5] {
        let order = BesselOrder::new(v).unwrap();
        for u in log_grid(0.01, 30.0, 60) {
            let want = oracle::bessel_k(v, u);
            quad = quad.max(((bessel_k(order, u).unwrap() - want) / want).abs());
        }
    }
    outcome(
        closed <= 1e-10 && quad <= 1e-8,
        format!(
            "closed-form rel err {closed:.2e} (<= 1e-10), quadrature rel err {quad:.2e} (<= 1e-8)"
        ),
    )
}

fn c2_power_bound() -> Outcome {
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for v in [-0.5, -1.0, -1.5, -2.0] {
        let a = bessel_bound_constant(v).unwrap();
        let order = BesselOrder::new(v).unwrap();
        for u in log_grid(1e-3, 10.0, 200) {
            let ratio = bessel_k(order, u).unwrap() / (a * u.powf(v));
            if ratio > 1.0 {
                violations += 1;
            }
            tightest = tightest.min(1.0 - ratio);
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over 800 points, smallest slack {tightest:.2e}"),
    )
}

fn c3_density() -> Outcome {
    let s1 = InnovationSpec::new(1, 0).unwrap();
    let pointwise = (0..=1600)
        .map(|i| {
            let z = -8.0 + i as f64 * 0.01;
            let d = al_log_density(s1, &[z]).unwrap().log_density.exp();
            (d - (-SQRT_2 * z.abs()).exp() / SQRT_2).abs()
        })
        .fold(0.0, f64::max);
    let f1 = |z: f64| al_log_density(s1, &[z]).unwrap().log_density.exp();
    let mass1 = oracle::integrate(f1, -40.0, 0.0, 1e-14) + oracle::integrate(f1, 0.0, 40.0, 1e-14);
    let s2 = InnovationSpec::new(2, 0).unwrap();
    // polar form with r = e^s
    let f2 = |s: f64| {
        let r = s.exp();
        2.0 * PI * r * r * al_log_density(s2, &[r, 0.0]).unwrap().log_density.exp()
    };
    let mass2 = oracle::integrate(f2, -40.0, 4.0, 1e-14);
    outcome(
        pointwise <= 1e-8 && (mass1 - 1.0).abs() <= 1e-6 && (mass2 - 1.0).abs() <= 1e-3,
        format!(
            "pointwise {pointwise:.2e} (<= 1e-8), |mass-1| p=1 {:.2e} (<= 1e-6), p=2 {:.2e} (<= 1e-3)",
            (mass1 - 1.0).abs(),
            (mass2 - 1.0).abs()
        ),
    )
}

fn excess_kurtosis(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

fn c4_sampler() -> Outcome {
    let draws = 1_000_000;
    let z = sample_innovations(InnovationSpec::new(2, 2024).unwrap(), draws).unwrap();
    let mean = z.column_means().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c = z.covariance();
    let cov = [c[0] - 1.0, c[1], c[2], c[3] - 1.0]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let z1 = sample_innovations(InnovationSpec::new(1, 2025).unwrap(), draws).unwrap();
    let k1 = excess_kurtosis(z1.as_slice());
    let k2 = excess_kurtosis(&z.rows().map(|r| r[0]).collect::<Vec<_>>());
    let kurt = (k1 - 3.0).abs().max((k2 - 3.0).abs());
    outcome(
        mean < 0.01 && cov < 0.02 && kurt <= 0.15,
        format!("max|mean| {mean:.4}, max|cov-I| {cov:.4}, excess kurtosis p=1 {k1:.3}, p=2 marginal {k2:.3}"),
    )
}

fn c5_collapse() -> Outcome {
    let fam = ArArch::new(1, true).unwrap();
    let konst = 0.5 * FRAC_PI_2.ln() - 0.25 * LN_2;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let theta = [
            rng.random_range(-3.0..3.0),
            rng.random_range(-0.99..0.99),
            rng.random_range(0.01..10.0),
            rng.random_range(0.0..0.99),
        ];
        let past = [rng.random_range(-10.0..10.0)];
        let x = [rng.random_range(-10.0..10.0)];
        let h: f64 = theta[2] + theta[3] * past[0] * past[0];
        let e: f64 = x[0] - theta[0] - theta[1] * past[0];
        let want = konst - (2.0 * e * e / h).sqrt() - 0.5 * h.ln();
        worst = worst.max((q_t(&fam, &theta, &past, &x).unwrap().q - want).abs());
    }
    outcome(
        worst <= 1e-10,
        format!("max deviation {worst:.2e} over 10^4 inputs (<= 1e-10)"),
    )
}

fn c6_median() -> Outcome {
    let fam = Var::new(1, 1, true).unwrap();
    let n = 2001;
    let z = sample_innovations(InnovationSpec::new(1, 404).unwrap(), n).unwrap();
    let data: Vec<f64> = z.as_slice().iter().map(|v| 2.0 + v.abs().powi(3)).collect();
    let mut sorted = data.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[n / 2];
    let series = SeriesMatrix::new(1, data).unwrap();
    let bounds = ParamBox::new(vec![-10.0, 0.0, 1.0], vec![10.0, 0.0, 1.0]).unwrap();
    let cfg = OptimizerConfig::default();
    let r = estimate(&fam, &series, &bounds, &cfg).unwrap();
    let err = (r.theta_hat.coords()[0] - median).abs();
    outcome(
        err < 10.0 * cfg.xtol,
        format!(
            "|ĉ - median| = {err:.2e} (< {:.0e}), mean - median = {:.3}",
            10.0 * cfg.xtol,
            series.column_means()[0] - median
        ),
    )
}

fn run_bin(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

struct McRun {
    label: &'static str,
    args: Vec<String>,
    final_limit: f64,
}

fn mc_runs() -> Vec<McRun> {
    let shared = |family: &str, p: &str, theta0: &str, n: &str| -> Vec<String> {
        [
            "mc-consistency",
            "--family",
            family,
            "--p",
            p,
            "--theta0",
            theta0,
            "--n",
            n,
            "--reps",
            "50",
            "--seed",
            "1",
        ]
        .map(String::from)
        .to_vec()
    };
    vec![
        McRun {
            label: "var1",
            args: shared("var1", "2", "0.4,0.1,-0.1,0.3,1.0,0.3,0.8", "250,1000,4000"),
            final_limit: 0.05,
        },
        McRun {
            label: "arch1",
            args: shared("arch1", "1", "1.0,0.3", "500,2000,8000"),
            final_limit: 0.08,
        },
    ]
}

fn medians(summary_path: &Path) -> (Vec<f64>, bool) {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(summary_path).unwrap()).unwrap();
    let m = v["summaries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["median"].as_f64().unwrap_or(f64::NAN))
        .collect();
    (m, v["verdict"].as_bool().unwrap())
}

fn c7_consistency(root: &Path) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for run in mc_runs() {
        let dir = root.join(run.label);
        let mut args = run.args.clone();
        args.extend([
            "--threads".into(),
            "1".into(),
            "--out-dir".into(),
            dir.to_string_lossy().into(),
        ]);
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, stderr) = run_bin(&args);
        if code != 0 && code != 1 {
            passed = false;
            parts.push(format!("{}: exit {code}: {}", run.label, stderr.trim()));
            continue;
        }
        let (m, verdict) = medians(&dir.join("mc-summary.json"));
        let decreasing = m.windows(2).all(|w| w[1] < w[0]);
        let last = *m.last().unwrap();
        let ok = verdict && decreasing && last < run.final_limit && (code == 0) == verdict;
        passed &= ok;
        parts.push(format!(
            "{}: medians [{}], final < {}: {}",
            run.label,
            m.iter()
                .map(|x| format!("{x:.4}"))
                .collect::<Vec<_>>()
                .join(", "),
            run.final_limit,
            last < run.final_limit
        ));
    }
    outcome(passed, parts.join("; "))
}

fn c8_truncation() -> Outcome {
    let fam = Var::new(2, 1, false).unwrap();
    let theta0 = [0.4, 0.1, -0.1, 0.3, 1.0, 0.3, 0.8];
    let pts = truncation_decay(&fam, &theta0, &[100, 1000, 10000], 8, 500).unwrap();
    let decreasing = pts.windows(2).all(|w| w[1].mean_diff < w[0].mean_diff);
    // with q = 1 the gap is exactly one term, so the bound holds with equality
    // up to rounding in the two sums
    let bounded = pts.iter().all(|p| p.mean_diff <= p.bound * (1.0 + 1e-9));
    outcome(
        decreasing && bounded,
        format!(
            "mean_diff [{}], bound [{}]",
            pts.iter()
                .map(|p| format!("{:.3e}", p.mean_diff))
                .collect::<Vec<_>>()
                .join(", "),
            pts.iter()
                .map(|p| format!("{:.3e}", p.bound))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn c9_theta2() -> Outcome {
    let var = Var::new(2, 1, false).unwrap();
    let arch = DiagArch::new(2, 1).unwrap();
    let cases: [(&dyn laplace_qmle::ModelFamily, Vec<f64>, f64, bool); 3] = [
        (&var, vec![0.3, 0.0, 0.0, 0.3, 1.0, 0.0, 1.0], 0.7, true),
        (
            &arch,
            vec![1.0, 1.0, 0.2, 0.2],
            1.0 - SQRT_2 * 0.2f64.sqrt(),
            true,
        ),
        (
            &var,
            vec![1.05, 0.0, 0.0, 1.05, 1.0, 0.0, 1.0],
            -0.05,
            false,
        ),
    ];
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for (fam, theta, margin, member) in &cases {
        let r = theta2_membership(*fam, theta).unwrap();
        passed &= r.member == *member;
        worst = worst.max((r.margin - margin).abs());
    }
    outcome(
        passed && worst <= 1e-12,
        format!("flags match: {passed}, max margin error {worst:.1e}"),
    )
}

fn c10_determinism(root: &Path) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for run in mc_runs() {
        let first = root.join(run.label);
        let manifest = first.join("run-manifest.json");
        if !manifest.exists() {
            return outcome(
                false,
                format!("{}: no manifest from the first run", run.label),
            );
        }
        let second = root.join(format!("{}-rerun", run.label));
        let (code, stderr) = run_bin(&[
            "mc-consistency",
            "--config",
            manifest.to_str().unwrap(),
            "--threads",
            "3",
            "--out-dir",
            second.to_str().unwrap(),
        ]);
        let same = |name: &str| {
            std::fs::read(first.join(name)).ok() == std::fs::read(second.join(name)).ok()
        };
        let ok = (code == 0 || code == 1) && same("mc.csv") && same("mc-summary.json");
        if !ok && !stderr.is_empty() {
            parts.push(stderr.trim().to_owned());
        }
        passed &= ok;
        parts.push(format!(
            "{}: 1 vs 3 threads byte-identical: {ok}",
            run.label
        ));
    }
    outcome(passed, parts.join("; "))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    type Criterion<'a> = (u32, &'a str, Duration, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            1,
            "Bessel closed-form and quadrature oracles",
            Duration::from_secs(5),
            Box::new(c1_bessel_oracles),
        ),
        (
            2,
            "power bound on K_v",
            Duration::from_secs(2),
            Box::new(c2_power_bound),
        ),
        (
            3,
            "density validity",
            Duration::from_secs(10),
            Box::new(c3_density),
        ),
        (
            4,
            "sampler standardization",
            Duration::from_secs(10),
            Box::new(c4_sampler),
        ),
        (
            5,
            "univariate likelihood collapse",
            Duration::from_secs(2),
            Box::new(c5_collapse),
        ),
        (
            6,
            "median oracle",
            Duration::from_secs(5),
            Box::new(c6_median),
        ),
        (
            7,
            "empirical strong consistency",
            Duration::from_secs(600),
            Box::new(|| c7_consistency(root)),
        ),
        (
            8,
            "truncation decay",
            Duration::from_secs(30),
            Box::new(c8_truncation),
        ),
        (
            9,
            "Θ(2) worked examples",
            Duration::from_secs(1),
            Box::new(c9_theta2),
        ),
        (
            10,
            "determinism across thread counts",
            Duration::MAX,
            Box::new(|| c10_determinism(root)),
        ),
    ];
    let mut failures = 0;
    for (id, name, budget, run) in &criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_budget = elapsed < *budget;
        let passed = out.passed && in_budget;
        failures += usize::from(!passed);
        let budget_note = if *budget == Duration::MAX {
            String::new()
        } else {
            format!(" / budget {:.0} s", budget.as_secs_f64())
        };
        println!(
            "{} criterion {id:>2} ({name}): {} [{:.2} s{budget_note}]",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
