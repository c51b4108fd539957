//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible under `--nocapture`). Criterion 8 is slow (tens of minutes) and
//! ignored by default; run it with `cargo test -p psurr --test acceptance
//! -- --ignored`.

use std::path::{Path, PathBuf};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use psurr_core::envs::{evaluate_policy, EnvName};
use psurr_core::policy::{Policy, PolicyConfig};
use psurr_core::ratio::{
    pe_divergence_mc, ratio_thresholds, regularization_gain, relative_ratio, rpe_divergence_mc,
};
use psurr_core::scalar::Sign;
use psurr_core::surrogate::{evaluate, evaluate_rpe, SurrogateSpec};
use psurr_core::trainer::{train, TrainerConfig};

fn fresh_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_psurr"))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

const EPSILONS: [f64; 3] = [0.1, 0.2, 0.3];
const BETAS: [f64; 4] = [0.1, 0.3, 0.5, 0.7];
const ADVANTAGES: [f64; 4] = [0.5, -0.5, 2.0, -2.0];

/// Criterion 1: the divergence-regularized effective advantage vanishes at
/// the raw-ratio threshold for every grid combination, and the sign
/// resolution is certified by negative controls.
#[test]
fn criterion_01_vertex_identity_and_sign_controls() {
    for eps in EPSILONS {
        for beta in BETAS {
            for adv in ADVANTAGES {
                let sigma = Sign::of_advantage(adv);
                let (_, rho_eps) = ratio_thresholds(eps, beta, sigma).unwrap();
                let spec = SurrogateSpec::ppo_rpe(eps, beta);
                let eval = evaluate_rpe(rho_eps, adv, &spec).unwrap();
                assert!(
                    eval.effective_advantage.abs() <= 1e-10 * adv.abs(),
                    "vertex identity failed at eps={eps} beta={beta} A={adv}: {}",
                    eval.effective_advantage
                );

                // Negative control A: flipping the sign inside the
                // derivative brace (while keeping the correct gain) must
                // break the vertex identity.
                let gain = regularization_gain(adv, eps, beta, sigma).unwrap();
                let w = 1.0 + beta * (rho_eps - 1.0);
                let rb = rho_eps / w;
                let brace_minus = beta * (rb - 1.0) - 2.0 * (1.0 - beta) / w;
                let mixed = adv - gain * (rb - 1.0) * brace_minus;
                assert!(
                    mixed.abs() > 1e-3 * adv.abs(),
                    "minus-sign brace must break the vertex identity, got {mixed}"
                );
            }
        }
    }

    // Negative control B: flipping the signs in BOTH braces (derivative
    // brace and gain bracket). The two flips cancel exactly at the vertex
    // (numer/denom = A there), so the vertex alone cannot distinguish this
    // variant; what it fails is gradient-loss consistency, checked at
    // rho = 2.
    let (eps, beta, adv) = (0.1, 0.5, 1.0);
    let both_flipped_at = |rho: f64| -> f64 {
        let s: f64 = 1.0;
        let w = 1.0 + beta * (rho - 1.0);
        let rb = rho / w;
        let denom = s * eps * (beta * s * eps - 2.0 * (1.0 - beta * (1.0 + s * eps)));
        let numer = adv * (rb - 1.0) * (beta * (rb - 1.0) - 2.0 * (1.0 - beta) / w);
        adv - numer / denom
    };
    let sigma = Sign::Plus;
    let (_, rho_eps) = ratio_thresholds(eps, beta, sigma).unwrap();
    assert!(
        both_flipped_at(rho_eps).abs() < 1e-10,
        "the double sign flip cancels at the vertex; if this starts failing, \
         the negative control below needs rethinking"
    );
    let spec = SurrogateSpec::ppo_rpe(eps, beta);
    let h = 1e-6;
    let rho = 2.0;
    let fd = (evaluate_rpe(rho + h, adv, &spec).unwrap().loss_term
        - evaluate_rpe(rho - h, adv, &spec).unwrap().loss_term)
        / (2.0 * h);
    let flipped_dloss = -both_flipped_at(rho);
    let rel = (fd - flipped_dloss).abs() / fd.abs().max(flipped_dloss.abs());
    assert!(
        rel > 1e-2,
        "the double-minus variant should NOT match the loss derivative, rel diff {rel}"
    );
    // and the implemented derivative does match
    let implemented = evaluate_rpe(rho, adv, &spec).unwrap().dloss_drho;
    assert!((fd - implemented).abs() / fd.abs() < 1e-6);

    println!("ACCEPTANCE 1 (vertex identity + sign negative controls): PASS");
}

/// Criterion 2: analytic dloss/drho matches central finite differences for
/// all three variants over 500 grid points, relative error < 1e-6.
#[test]
fn criterion_02_gradient_loss_consistency() {
    let specs: [(SurrogateSpec<f64>, &[f64]); 3] = [
        (SurrogateSpec::ppo_clip(0.1), &[0.9, 1.1]),
        (SurrogateSpec::ppo_rb(0.1, 0.3), &[0.9, 1.1]),
        (SurrogateSpec::ppo_rpe(0.1, 0.5), &[]),
    ];
    let h = 1e-6;
    let n = 500;
    let mut checked = 0usize;
    for (spec, kinks) in &specs {
        for adv in [1.0, -1.0] {
            for i in 0..n {
                let rho = 0.2 + i as f64 * (3.0 - 0.2) / (n - 1) as f64;
                if kinks.iter().any(|k| (rho - k).abs() < 1e-4) {
                    continue;
                }
                let analytic = evaluate(rho, adv, spec).unwrap().dloss_drho;
                let fd = (evaluate(rho + h, adv, spec).unwrap().loss_term
                    - evaluate(rho - h, adv, spec).unwrap().loss_term)
                    / (2.0 * h);
                let denom = analytic.abs().max(fd.abs()).max(1e-12);
                let rel = (analytic - fd).abs() / denom;
                assert!(
                    rel < 1e-6,
                    "{:?} A={adv} rho={rho}: analytic {analytic} vs fd {fd} (rel {rel})",
                    spec.variant
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 2900, "kink windows should exclude only a handful of points");
    println!("ACCEPTANCE 2 (gradient-loss consistency, {checked} points): PASS");
}

/// Criterion 3: relative-ratio symmetry at beta = 0.5 over 10^4 log-uniform
/// ratios in [1e-3, 1e3].
#[test]
fn criterion_03_beta_half_symmetry() {
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let exp: f64 = rng.random_range(-3.0..=3.0);
        let rho = 10f64.powf(exp);
        let sum = relative_ratio(rho, 0.5).unwrap() + relative_ratio(1.0 / rho, 0.5).unwrap();
        assert!((sum - 2.0).abs() < 1e-12, "rho={rho}: sum={sum}");
    }
    println!("ACCEPTANCE 3 (beta=0.5 symmetry): PASS");
}

/// Criterion 4: divergence estimator properties.
#[test]
fn criterion_04_divergence_properties() {
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    for trial in 0..200 {
        let len = rng.random_range(1..=50);
        let rhos: Vec<f64> =
            (0..len).map(|_| 10f64.powf(rng.random_range(-2.0..=2.0))).collect();
        let beta: f64 = rng.random_range(0.0..=1.0);
        assert!(pe_divergence_mc(&rhos).unwrap() >= 0.0, "trial {trial}");
        assert!(rpe_divergence_mc(&rhos, beta).unwrap() >= 0.0, "trial {trial}");

        let pe = pe_divergence_mc(&rhos).unwrap();
        let rpe0 = rpe_divergence_mc(&rhos, 0.0).unwrap();
        assert_eq!(pe.to_bits(), rpe0.to_bits(), "beta=0 must equal PE bit-for-bit");
    }
    let ones = vec![1.0f64; 100];
    assert_eq!(pe_divergence_mc(&ones).unwrap(), 0.0);
    assert_eq!(rpe_divergence_mc(&ones, 0.5).unwrap(), 0.0);
    println!("ACCEPTANCE 4 (divergence properties): PASS");
}

/// Criterion 5: asymmetric raw thresholds at (eps, beta) = (0.1, 0.5).
#[test]
fn criterion_05_threshold_asymmetry() {
    let (rb_pos, r_pos): (f64, f64) = ratio_thresholds(0.1, 0.5, Sign::Plus).unwrap();
    let (rb_neg, r_neg): (f64, f64) = ratio_thresholds(0.1, 0.5, Sign::Minus).unwrap();
    assert!((r_pos - 11.0 / 9.0).abs() < 1e-12, "{r_pos}");
    assert!((r_neg - 9.0 / 11.0).abs() < 1e-12, "{r_neg}");
    assert!((rb_pos - 1.1).abs() < 1e-12);
    assert!((rb_neg - 0.9).abs() < 1e-12);
    assert!((relative_ratio(r_pos, 0.5).unwrap() - 1.1).abs() < 1e-12);
    assert!((relative_ratio(r_neg, 0.5).unwrap() - 0.9).abs() < 1e-12);
    println!("ACCEPTANCE 5 (threshold asymmetry): PASS");
}

/// Criterion 6: policy-gradient correctness (finite differences) and exact
/// density normalization in 1-D.
#[test]
fn criterion_06_policy_gradient_correctness() {
    for fixture in 0..5u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(600 + fixture);
        let policy = Policy::<f64>::new(
            3,
            2,
            &PolicyConfig { hidden: vec![8, 6], ..Default::default() },
            &mut rng,
        )
        .unwrap();
        let state: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
        let action: Vec<f64> = (0..2).map(|_| rng.random_range(-0.9..0.9)).collect();
        let (_, analytic) = policy.grad_log_prob(&state, &action).unwrap();
        let flat = policy.flatten();
        let h = 1e-5;
        for j in 0..flat.len() {
            let lp = |p: f64| {
                let mut q = policy.clone();
                let mut f = flat.clone();
                f[j] = p;
                q.set_from_flat(&f).unwrap();
                q.log_prob_state(&state, &action).unwrap()
            };
            let fd = (lp(flat[j] + h) - lp(flat[j] - h)) / (2.0 * h);
            let denom = analytic[j].abs().max(fd.abs()).max(1e-4);
            assert!(
                (analytic[j] - fd).abs() / denom < 1e-4,
                "fixture {fixture} param {j}: {} vs {fd}",
                analytic[j]
            );
        }
    }

    // 1-D normalization: Simpson over the squashed support.
    let mut rng = ChaCha12Rng::seed_from_u64(606);
    let policy = Policy::<f64>::new(
        1,
        1,
        &PolicyConfig { hidden: vec![], ..Default::default() },
        &mut rng,
    )
    .unwrap();
    let head = psurr_core::policy::GaussianHead { mean: vec![-0.2], log_std: vec![0.1] };
    let n = 200_000usize;
    let (lo, hi) = (-1.0 + 1e-12, 1.0 - 1e-12);
    let step = (hi - lo) / n as f64;
    let dens = |a: f64| policy.log_prob(&head, &[a]).unwrap().exp();
    let mut acc = dens(lo) + dens(hi);
    for i in 1..n {
        acc += dens(lo + i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = acc * step / 3.0;
    assert!((integral - 1.0).abs() < 1e-3, "density integral {integral}");
    println!("ACCEPTANCE 6 (policy gradient + normalization): PASS");
}

fn bandit_config(spec: SurrogateSpec<f64>, seed: u64) -> TrainerConfig<f64> {
    let mut config = TrainerConfig::new(EnvName::Bandit2, spec);
    config.rollout_len = 256;
    config.minibatch_size = 64;
    config.epochs_per_rollout = 4;
    config.total_steps = 20_000;
    config.policy.hidden = vec![32];
    config.seed = seed;
    config.eval_every = 0;
    config
}

/// Probability the trained policy picks the positive (better) arm,
/// estimated from 4000 seeded draws.
fn positive_arm_probability(policy: &Policy<f64>) -> f64 {
    let head = policy.forward(&[0.0]).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(0x0A11);
    let n = 4000;
    let mut hits = 0usize;
    for _ in 0..n {
        let (action, _) = policy.sample(&head, &mut rng);
        if action[0] > 0.0 {
            hits += 1;
        }
    }
    hits as f64 / n as f64
}

/// Criterion 7: every variant solves the two-armed bandit within 20k steps
/// (median over 5 seeds of the probability of picking the better arm > 0.9).
#[test]
fn criterion_07_bandit_convergence() {
    let specs = [
        ("ppo_clip", SurrogateSpec::ppo_clip(0.1)),
        ("ppo_rb", SurrogateSpec::ppo_rb(0.1, 0.3)),
        ("ppo_rpe", SurrogateSpec::ppo_rpe(0.1, 0.5)),
    ];
    for (name, spec) in specs {
        let mut probs = Vec::new();
        for seed in 0..5u64 {
            let outcome = train(&bandit_config(spec, seed)).unwrap();
            probs.push(positive_arm_probability(&outcome.policy));
        }
        let med = median(&mut probs);
        assert!(
            med > 0.9,
            "{name}: median positive-arm probability {med} (per seed: {probs:?})"
        );
        println!("  {name}: median positive-arm probability {med:.4}");
    }
    println!("ACCEPTANCE 7 (bandit convergence oracle): PASS");
}

/// Desk-scale swing-up settings: a short effective horizon (gamma 0.9), a
/// fast-tracking Polyak target, broad initial exploration, and few epochs
/// per rollout so ratios stay near one between baseline refreshes.
fn pendulum_config(spec: SurrogateSpec<f64>, seed: u64) -> TrainerConfig<f64> {
    let mut config = TrainerConfig::new(EnvName::Pendulum, spec);
    config.rollout_len = 1024;
    config.minibatch_size = 64;
    config.epochs_per_rollout = 4;
    config.total_steps = 150_000;
    config.learning_rate = 1e-3;
    config.gae.gamma = 0.9;
    config.gae.polyak_tau = 0.9;
    config.policy.hidden = vec![64, 64];
    config.policy.init_log_std = 0.0;
    config.seed = seed;
    config.eval_every = 0;
    config.adv_normalize = true;
    config
}

/// Criterion 8 (slow; excluded from the default fast suite): desk-scale
/// pendulum learning. PPO-RPE's median eval return must be no worse than
/// PPO-clip's minus 10% of PPO-clip's improvement over a random policy, and
/// PPO-RPE must regularize more than PPO-clip over training.
#[test]
#[ignore = "slow: 10 training runs of 150k steps (tens of minutes)"]
fn criterion_08_pendulum_desk_scale() {
    const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
    let eval_episodes = 50;

    let mut random_medians = Vec::new();
    for seed in SEEDS {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let policy = Policy::<f64>::new(
            3,
            1,
            &PolicyConfig { hidden: vec![64, 64], ..Default::default() },
            &mut rng,
        )
        .unwrap();
        let stats = evaluate_policy(EnvName::Pendulum, &policy, eval_episodes, 9000 + seed).unwrap();
        random_medians.push(stats.median);
    }
    let m_random = median(&mut random_medians);

    let mut results: Vec<(&str, f64, f64)> = Vec::new();
    for (name, spec) in [
        ("ppo_clip", SurrogateSpec::ppo_clip(0.1)),
        ("ppo_rpe", SurrogateSpec::ppo_rpe(0.1, 0.5)),
    ] {
        let mut medians = Vec::new();
        let mut reg_amounts = Vec::new();
        for seed in SEEDS {
            let outcome = train(&pendulum_config(spec, seed)).unwrap();
            let stats =
                evaluate_policy(EnvName::Pendulum, &outcome.policy, eval_episodes, 7000 + seed)
                    .unwrap();
            medians.push(stats.median);
            let mean_reg: f64 = outcome
                .metrics
                .iter()
                .map(|m| m.mean_reg_amount)
                .sum::<f64>()
                / outcome.metrics.len() as f64;
            reg_amounts.push(mean_reg);
            println!("  {name} seed {seed}: eval median {:.1}, mean reg {:.5}", stats.median, mean_reg);
        }
        results.push((name, median(&mut medians), median(&mut reg_amounts)));
    }

    let (_, m_clip, reg_clip) = results[0];
    let (_, m_rpe, reg_rpe) = results[1];
    println!("  medians: random {m_random:.1}, ppo_clip {m_clip:.1}, ppo_rpe {m_rpe:.1}");
    println!("  mean regularization: ppo_clip {reg_clip:.5}, ppo_rpe {reg_rpe:.5}");

    let improvement = m_clip - m_random;
    assert!(
        improvement > 0.0,
        "ppo_clip failed to improve over a random policy ({m_clip} vs {m_random})"
    );
    assert!(
        m_rpe >= m_clip - 0.1 * improvement,
        "ppo_rpe median {m_rpe} worse than ppo_clip {m_clip} minus 10% of its improvement \
         {improvement} over random {m_random}"
    );
    assert!(
        reg_rpe > reg_clip,
        "ppo_rpe should regularize more than ppo_clip ({reg_rpe} vs {reg_clip})"
    );
    println!("ACCEPTANCE 8 (desk-scale pendulum learning): PASS");
}

/// Criterion 9: exported curves have the clipped-flat and single-vertex
/// structure.
#[test]
fn criterion_09_curve_export_fidelity() {
    let dir = fresh_dir("accept_curves");
    let status = bin()
        .args(["curves", "--epsilon", "0.1", "--beta", "0.5", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());

    let parse = |name: &str| -> Vec<(f64, f64, f64)> {
        std::fs::read_to_string(dir.join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|line| {
                let cells: Vec<f64> =
                    line.split(',').map(|c| c.parse().unwrap()).collect();
                (cells[0], cells[1], cells[2])
            })
            .collect()
    };

    // PPO sigma=+1: zero slope everywhere beyond 1 + eps.
    let clip = parse("curve_ppo_clip_pos.csv");
    assert_eq!(clip.len(), 600);
    let mut beyond = 0;
    for (rho, _, dloss) in &clip {
        if *rho > 1.1 {
            assert_eq!(*dloss, 0.0, "clipped slope must be exactly zero at rho={rho}");
            beyond += 1;
        }
    }
    assert!(beyond > 300, "grid should cover the clipped region");

    // PPO-RPE: exactly one sign change per sigma, bracketing the raw
    // threshold.
    for (name, vertex) in
        [("curve_ppo_rpe_pos.csv", 11.0 / 9.0), ("curve_ppo_rpe_neg.csv", 9.0 / 11.0)]
    {
        let rows = parse(name);
        let mut changes = Vec::new();
        for pair in rows.windows(2) {
            let (r0, _, d0) = pair[0];
            let (r1, _, d1) = pair[1];
            if d0.signum() != d1.signum() {
                changes.push((r0, r1));
            }
        }
        assert_eq!(changes.len(), 1, "{name}: expected exactly one sign change, got {changes:?}");
        let (lo, hi) = changes[0];
        assert!(lo < vertex && vertex < hi, "{name}: vertex {vertex} not in ({lo}, {hi})");
    }
    println!("ACCEPTANCE 9 (curve export fidelity): PASS");
}

/// Criterion 10: two identical train invocations produce byte-identical
/// metrics CSVs.
#[test]
fn criterion_10_train_determinism() {
    let dir = fresh_dir("accept_determinism");
    let config_path = dir.join("config.json");
    std::fs::write(
        &config_path,
        r#"{
  "env": "bandit2",
  "variant": "ppo_rpe",
  "total_steps": 2000,
  "rollout_len": 100,
  "minibatch_size": 50,
  "epochs_per_rollout": 4,
  "hidden": [16],
  "eval_every": 1000,
  "eval_episodes": 10,
  "seed": 13
}"#,
    )
    .unwrap();
    for out in ["a", "b"] {
        let status = bin()
            .args(["train", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(dir.join(out))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir.join("a/metrics.csv")).unwrap();
    let b = std::fs::read(dir.join("b/metrics.csv")).unwrap();
    assert_eq!(a, b, "metrics CSVs must be byte-identical");
    let ea = std::fs::read(dir.join("a/evals.csv")).unwrap();
    let eb = std::fs::read(dir.join("b/evals.csv")).unwrap();
    assert_eq!(ea, eb);
    println!("ACCEPTANCE 10 (train determinism): PASS");
}
