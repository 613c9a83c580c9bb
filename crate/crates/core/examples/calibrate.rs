//! Scratch calibration harness: measures accept-test margins and end-to-end
//! recovery quality on the benchmark instances. Not part of the test suite.

use ngca_core::deflation::{full_alg, FullConfig};
use ngca_core::descent::DescentConfig;
use ngca_core::entropy::{default_config, relative_entropy_averaged};
use ngca_core::instance::{draw_samples, synthesize_instance};
use ngca_core::laws::NonGaussianLaw;
use ngca_core::sample::isotropize;
use ngca_core::subspace::{orthogonal_complement, orthonormalize, random_unit_vector, subspace_distance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(String::as_str).unwrap_or("all");

    if what == "all" || what == "noise" {
        estimator_noise();
    }
    if what == "all" || what == "gauss" {
        pure_gaussian();
    }
    if what == "all" || what == "nogauss" {
        no_gaussian();
    }
    if what == "all" || what == "flagship" {
        flagship(args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3));
    }
    if what == "profile" {
        entropy_profile();
    }
}

fn entropy_profile() {
    // S-hat along the geodesic from a planted uniform axis toward Γ, vs the
    // small-angle theory S ≈ κ₄²·sin⁸θ/48 = 0.03·sin⁸θ.
    println!("== entropy profile along leak angle (flagship-like, N=2e5) ==");
    let mut rng = ChaCha8Rng::seed_from_u64(8000);
    let laws = vec![NonGaussianLaw::uniform(), NonGaussianLaw::uniform()];
    let inst = synthesize_instance(8, 6, laws, 4, &mut rng).unwrap();
    let raw = draw_samples(&inst, 200_000, 8001);
    let (iso, _) = isotropize(&raw).unwrap();
    let cfg = default_config(iso.len(), 1.0, 0.1);
    let axis: Vec<f64> = (0..8).map(|i| inst.rotation()[[i, 6]]).collect();
    let gdir: Vec<f64> = (0..8).map(|i| inst.rotation()[[i, 0]]).collect();
    for sin_theta in [1.0, 0.8, 0.6, 0.5, 0.4, 0.2, 0.0f64] {
        let cos_theta = (1.0 - sin_theta * sin_theta).sqrt();
        let dir: Vec<f64> = axis
            .iter()
            .zip(&gdir)
            .map(|(a, g)| sin_theta * a + cos_theta * g)
            .collect();
        let m = ngca_core::sample::marginal_unnormalized(&iso, &dir).unwrap();
        let est = relative_entropy_averaged(&m, &cfg, 3).unwrap();
        println!(
            "  sinθ = {sin_theta:.1}: S-hat = {:+.5}, theory ≈ {:+.5}",
            est.value,
            0.03 * sin_theta.powi(8)
        );
    }
}

fn estimator_noise() {
    println!("== entropy estimator on Gaussian data (N = 2e5) ==");
    let n_samples = 200_000;
    let cfg = default_config(n_samples, 1.0, 0.1);
    let mut vals = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let samples: Vec<f64> = (0..n_samples).map(|_| rng.sample(StandardNormal)).collect();
        let est = relative_entropy_averaged(&samples, &cfg, 3).unwrap();
        vals.push(est.value);
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64).sqrt();
    println!("  S-hat mean {mean:.5}, sd {sd:.5}, max {:.5}", vals.iter().cloned().fold(f64::MIN, f64::max));

    println!("== gradient norm on Gaussian data (n=8, N=2e5) ==");
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let data = ndarray::Array2::from_shape_fn((n_samples, 8), |_| rng.sample(StandardNormal));
    let s = ngca_core::sample::SampleSet::new(data, 777);
    let dcfg = DescentConfig::for_samples(n_samples, 1.0);
    for _ in 0..5 {
        let u = random_unit_vector(&mut rng, 8);
        let g = ngca_core::descent::estimate_gradient(&s, &u, &dcfg).unwrap();
        let norm: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        println!("  ||grad|| = {norm:.5}");
    }
}

fn pure_gaussian() {
    println!("== pure-Gaussian instance n=4, N=1e5, default config ==");
    for seed in 0..5u64 {
        let t0 = std::time::Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let inst = synthesize_instance(4, 4, vec![], 4, &mut rng).unwrap();
        let raw = draw_samples(&inst, 100_000, 3000 + seed);
        let (iso, _) = isotropize(&raw).unwrap();
        let cfg = FullConfig::for_samples(iso.len(), 0.5, 1.0, 4);
        let res = full_alg(&iso, &cfg, &mut rng).unwrap();
        println!(
            "  seed {seed}: found {} of 4, levels: {:?}  ({:.1} s)",
            res.gaussian_directions.len(),
            res.levels
                .iter()
                .map(|l| format!("S={:.4} g={:.4} r={}", l.final_entropy, l.final_grad_norm, l.restarts_used))
                .collect::<Vec<_>>(),
            t0.elapsed().as_secs_f64()
        );
    }
}

fn no_gaussian() {
    println!("== no-Gaussian instance q=3 uniforms, N=2e5, default config ==");
    for seed in 0..5u64 {
        let t0 = std::time::Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let laws = vec![NonGaussianLaw::uniform(); 3];
        let inst = synthesize_instance(3, 0, laws, 4, &mut rng).unwrap();
        let raw = draw_samples(&inst, 200_000, 5000 + seed);
        let (iso, _) = isotropize(&raw).unwrap();
        let cfg = FullConfig::for_samples(iso.len(), inst.moment_gap().unwrap(), 1.0, 4);
        let res = full_alg(&iso, &cfg, &mut rng).unwrap();
        println!(
            "  seed {seed}: found {} (want 0), level-0 entropy {:.4}, restarts {} ({:.1} s)",
            res.gaussian_directions.len(),
            res.levels[0].final_entropy,
            res.levels[0].restarts_used,
            t0.elapsed().as_secs_f64()
        );
    }
}

fn flagship(seeds: u64) {
    let h: f64 = std::env::var("CAL_H").ok().and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let eta: f64 = std::env::var("CAL_ETA").ok().and_then(|s| s.parse().ok()).unwrap_or(0.25);
    let iters: usize =
        std::env::var("CAL_ITERS").ok().and_then(|s| s.parse().ok()).unwrap_or(400);
    let tang = std::env::var("CAL_TANGENTIAL").is_ok();
    let eps1: f64 = std::env::var("CAL_EPS1").ok().and_then(|s| s.parse().ok()).unwrap_or(0.01);
    println!(
        "== flagship n=8 p=6 q=2 uniforms, N=2e5 (h={h}, eta={eta}, iters={iters}, tangential={tang}, eps1={eps1}) =="
    );
    for seed in 0..seeds {
        let t0 = std::time::Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(6000 + seed);
        let laws = vec![NonGaussianLaw::uniform(), NonGaussianLaw::uniform()];
        let inst = synthesize_instance(8, 6, laws, 4, &mut rng).unwrap();
        let raw = draw_samples(&inst, 200_000, 7000 + seed);
        let (iso, _) = isotropize(&raw).unwrap();
        let mut cfg = FullConfig::for_samples(iso.len(), inst.moment_gap().unwrap(), 1.0, 4);
        cfg.descent.fd_step_h = h;
        cfg.descent.eta = eta;
        cfg.descent.max_iters = iters;
        cfg.descent.accept_tangential = tang;
        cfg.descent.eps1 = eps1;
        let res = full_alg(&iso, &cfg, &mut rng).unwrap();
        let found = res.gaussian_directions.len();
        let d = if found == 6 {
            let v = orthonormalize(
                &res.gaussian_directions.iter().map(|u| u.coords().to_vec()).collect::<Vec<_>>(),
            )
            .unwrap();
            let vperp = orthogonal_complement(&v);
            subspace_distance(&vperp, &inst.gamma_perp()).ok()
        } else {
            None
        };
        // Per-direction leakage into the true non-Gaussian subspace.
        let leaks: Vec<String> = res
            .gaussian_directions
            .iter()
            .map(|u| {
                let p = ngca_core::subspace::project(&inst.gamma_perp(), u.coords()).unwrap();
                format!("{:.2}", p.iter().map(|x| x * x).sum::<f64>().sqrt())
            })
            .collect();
        println!(
            "  seed {seed}: found {found} of 6, d = {:?}, leakages {:?} ({:.1} s)",
            d,
            leaks,
            t0.elapsed().as_secs_f64()
        );
    }
}
