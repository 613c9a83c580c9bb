//! Seeded property suites runnable from the CLI: structural identities and
//! statistical laws checked at desk scale, one pass/fail line per suite.

use ngca_core::cumulant::equivariance_defect;
use ngca_core::entropy::{
    analytic_relative_entropy, default_config, relative_entropy_averaged,
    scaled_gaussian_relative_entropy_quadrature, AnalyticTarget,
};
use ngca_core::instance::{draw_samples, synthesize_instance};
use ngca_core::laws::{menu, NonGaussianLaw};
use ngca_core::moments::{empirical_moments, gaussian_moment, moment_mixing};
use ngca_core::sample::isotropize;
use ngca_core::subspace::{
    cap_probability, check_perturbation_bound, orthogonal_complement, project, random_subspace,
    random_unit_vector, subspace_distance, UnitVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct SuiteResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub const SUITE_NAMES: [&str; 6] = [
    "subspace_metric",
    "entropy_scaling",
    "moment_mixing",
    "perturbation_bound",
    "spherical_concentration",
    "cumulant_equivariance",
];

pub fn run_suite(name: &str) -> Option<SuiteResult> {
    match name {
        "subspace_metric" => Some(subspace_metric()),
        "entropy_scaling" => Some(entropy_scaling()),
        "moment_mixing" => Some(moment_mixing_suite()),
        "perturbation_bound" => Some(perturbation_bound()),
        "spherical_concentration" => Some(spherical_concentration()),
        "cumulant_equivariance" => Some(cumulant_equivariance()),
        _ => None,
    }
}

pub fn run_all() -> Vec<SuiteResult> {
    SUITE_NAMES.iter().map(|n| run_suite(n).expect("known suite")).collect()
}

fn subspace_metric() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11_000);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = random_subspace(&mut rng, 6, 3);
        let b = random_subspace(&mut rng, 6, 3);
        let c = random_subspace(&mut rng, 6, 3);
        let dab = subspace_distance(&a, &b).unwrap();
        worst = worst.max((dab - subspace_distance(&b, &a).unwrap()).abs());
        worst = worst.max(
            (dab - subspace_distance(&orthogonal_complement(&a), &orthogonal_complement(&b))
                .unwrap())
            .abs(),
        );
        let slack = dab
            - subspace_distance(&a, &c).unwrap()
            - subspace_distance(&c, &b).unwrap();
        worst = worst.max(slack.max(0.0));
        let p = a.projector();
        let pp = p.dot(&p);
        for i in 0..6 {
            for j in 0..6 {
                worst = worst.max((p[[i, j]] - pp[[i, j]]).abs());
                worst = worst.max((p[[i, j]] - p[[j, i]]).abs());
            }
        }
    }
    SuiteResult {
        name: "subspace_metric",
        pass: worst <= 1e-9,
        detail: format!("worst deviation {worst:.2e} over 100 triples"),
    }
}

fn entropy_scaling() -> SuiteResult {
    let mut worst_analytic = 0.0f64;
    for lambda in [0.5, 1.0, 2.0] {
        let closed =
            analytic_relative_entropy(AnalyticTarget::ScaledGaussian(lambda)).unwrap();
        let quadded = scaled_gaussian_relative_entropy_quadrature(lambda).unwrap();
        worst_analytic = worst_analytic.max((closed - quadded).abs());
    }
    let n = 100_000;
    let cfg = default_config(n, 1.0, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(12_000);
    let base: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let s_base = relative_entropy_averaged(&base, &cfg, 1).unwrap().value;
    let mut worst_emp = 0.0f64;
    for lambda in [0.8f64, 1.25] {
        let scaled: Vec<f64> = base.iter().map(|x| lambda * x).collect();
        let s = relative_entropy_averaged(&scaled, &cfg, 1).unwrap().value;
        let expect = -lambda.ln() + (lambda * lambda - 1.0) / 2.0;
        worst_emp = worst_emp.max(((s - s_base) - expect).abs());
    }
    SuiteResult {
        name: "entropy_scaling",
        pass: worst_analytic <= 1e-6 && worst_emp <= 0.05,
        detail: format!(
            "analytic disagreement {worst_analytic:.2e} (tol 1e-6), estimator {worst_emp:.4} (tol 0.05)"
        ),
    }
}

fn moment_mixing_suite() -> SuiteResult {
    let n = 200_000;
    let mut checked = 0;
    let mut failed = 0;
    for (li, law) in menu().into_iter().enumerate() {
        let moments: Vec<f64> = (1..=4).map(|k| law.moment(k)).collect();
        for (ti, &t) in [0.2, 0.5, 0.8].iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(13_000 + 10 * li as u64 + ti as u64);
            let keep = (1.0f64 - t * t).sqrt();
            let draws: Vec<f64> = (0..n)
                .map(|_| {
                    let y = law.sample(&mut rng);
                    let z: f64 = rng.sample(StandardNormal);
                    t * y + keep * z
                })
                .collect();
            let mv = empirical_moments(&draws, 4);
            for k in [3usize, 4] {
                checked += 1;
                let predicted = moment_mixing(&moments, t, k);
                let measured = mv.value(k) - gaussian_moment(k);
                if (measured - predicted).abs() > 4.0 * mv.std_error(k) {
                    failed += 1;
                }
            }
        }
    }
    SuiteResult {
        name: "moment_mixing",
        pass: failed == 0,
        detail: format!("{}/{checked} law×order×noise combinations within 4 SE", checked - failed),
    }
}

fn perturbation_bound() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(14_000);
    let mut held = 0;
    let mut trials = 0;
    for &k in &[2usize, 5] {
        for &n in &[8usize, 16] {
            for &eps in &[1e-3f64, 1e-5] {
                for _ in 0..25 {
                    trials += 1;
                    let lam_space = random_subspace(&mut rng, n, k);
                    let lambdas: Vec<UnitVector> = lam_space
                        .basis_columns()
                        .iter()
                        .map(|c| UnitVector::new(c.clone()).unwrap())
                        .collect();
                    let gammas: Vec<UnitVector> = lambdas
                        .iter()
                        .map(|l| {
                            let noise = random_unit_vector(&mut rng, n);
                            let along: f64 = noise
                                .coords()
                                .iter()
                                .zip(l.coords())
                                .map(|(a, b)| a * b)
                                .sum();
                            let mut w: Vec<f64> = noise
                                .coords()
                                .iter()
                                .zip(l.coords())
                                .map(|(a, b)| a - along * b)
                                .collect();
                            let wn: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                            w.iter_mut().for_each(|x| *x /= wn);
                            let c: f64 = 1.0 - eps;
                            let s = (1.0 - c * c).sqrt();
                            UnitVector::normalized(
                                l.coords().iter().zip(&w).map(|(a, b)| c * a + s * b).collect(),
                            )
                            .unwrap()
                        })
                        .collect();
                    if check_perturbation_bound(&lambdas, &gammas).unwrap().holds {
                        held += 1;
                    }
                }
            }
        }
    }
    SuiteResult {
        name: "perturbation_bound",
        pass: held == trials,
        detail: format!("{held}/{trials} seeded trials hold"),
    }
}

fn spherical_concentration() -> SuiteResult {
    let n = 20;
    let alpha = 1.0 / (n * n) as f64;
    let bound = cap_probability(n, alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(15_000);
    let v1 = random_unit_vector(&mut rng, n);
    let v2 = random_subspace(&mut rng, n, n / 2);
    let draws = 100_000;
    let mut ratio_hits = 0u64;
    let mut plain_hits = 0u64;
    for _ in 0..draws {
        let r = random_unit_vector(&mut rng, n);
        let p1: f64 = r.coords().iter().zip(v1.coords()).map(|(a, b)| a * b).sum();
        let p2 = project(&v2, r.coords()).unwrap();
        let p2n: f64 = p2.iter().map(|x| x * x).sum::<f64>().sqrt();
        if p1.abs() >= alpha * p2n {
            ratio_hits += 1;
        }
        if p1.abs() >= alpha {
            plain_hits += 1;
        }
    }
    let ratio_emp = ratio_hits as f64 / draws as f64;
    let plain_emp = plain_hits as f64 / draws as f64;
    // The exact 1-D cap volume is the minimizing case: the projection-ratio
    // probability must dominate it; the plain 1-D fraction matches it up to
    // binomial error.
    let se = (bound * (1.0 - bound) / draws as f64).sqrt();
    let pass = ratio_emp >= bound && plain_emp >= bound - 4.0 * se;
    SuiteResult {
        name: "spherical_concentration",
        pass,
        detail: format!(
            "ratio {ratio_emp:.5} >= cap bound {bound:.5}; plain {plain_emp:.5} within 4 SE ({se:.1e})"
        ),
    }
}

fn cumulant_equivariance() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(16_000);
    let inst = synthesize_instance(4, 3, vec![NonGaussianLaw::uniform()], 4, &mut rng).unwrap();
    let raw = draw_samples(&inst, 100_000, 16_001);
    let (iso, _) = isotropize(&raw).unwrap();
    let q_space = random_subspace(&mut rng, 4, 4);
    let q = q_space.basis_matrix();
    let defect = equivariance_defect(&iso, &q, &[3, 4]).unwrap();
    let budget = 8.0 * 16.0 / (iso.len() as f64).sqrt();
    SuiteResult {
        name: "cumulant_equivariance",
        pass: defect <= budget,
        detail: format!("gram conjugation defect {defect:.2e} within budget {budget:.2e}"),
    }
}
