// Temporary calibration probe for the acceptance-criteria instances.

use ccd_core::harness::{blocky_truth, estimate_condition, make_noise, relative_error, spikes_truth, NoiseSpec};
use ccd_core::linalg;
use ccd_core::operators::*;
use ccd_core::solvers::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

fn random_dense(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> DenseOperator {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    dense_operator(rows, cols, data).unwrap()
}

fn main() {
    // ---- Criterion 1/2/4 instance ----
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(1001);
    let a = random_dense(&mut rng, 40, 30);
    let b = diff1d(30).unwrap();
    let d: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let oracle_opts = SolveOptions::default().with_max_iters(100_000).with_tol(1e-12);
    let oracle = admm_exact(&a, &b, &d, 1.0, 1.0, &oracle_opts).unwrap();
    println!(
        "oracle: iters={} stop={:?} time={:?}",
        oracle.state.iteration,
        oracle.record.stop,
        t0.elapsed()
    );

    let t1 = Instant::now();
    let ccd_opts = SolveOptions::default().with_max_iters(500).with_tol(0.0);
    let ccd = ccd_solve(&a, &b, &d, 1.0, 1.0, &ccd_opts).unwrap();
    let err = linalg::dist2(ccd.u(), oracle.u()) / linalg::norm2(oracle.u());
    println!("C1: ccd-vs-oracle err={err:.3e} time={:?}", t1.elapsed());

    // Lyapunov from oracle z*, b*
    let hist_opts = SolveOptions::default().with_max_iters(200).with_tol(0.0).with_history();
    let admm200 = admm_exact(&a, &b, &d, 1.0, 1.0, &hist_opts).unwrap();
    let zs = &oracle.state.z;
    let bs = &oracle.state.b;
    let lyap = |z: &[f64], bb: &[f64]| -> f64 {
        linalg::dist2(z, zs).powi(2) + linalg::dist2(bb, bs).powi(2)
    };
    let mut prev = lyap(&vec![0.0; 29], &vec![0.0; 29]);
    let l0 = prev;
    let mut worst = 0.0f64;
    for snap in &admm200.history {
        let cur = lyap(&snap.z, &snap.b);
        worst = worst.max(cur - prev);
        prev = cur;
    }
    println!("C2: worst increase={worst:.3e} allowed={:.3e}", 1e-10 * l0);

    // C4: lmccd m=500 vs ccd per-iteration
    let opts500 = SolveOptions::default().with_max_iters(500).with_tol(0.0).with_history();
    let full = ccd_solve(&a, &b, &d, 1.0, 1.0, &opts500).unwrap();
    let lim = lmccd_solve(&a, &b, &d, 1.0, 1.0, 500, &opts500).unwrap();
    let mut worst4 = 0.0f64;
    for (sf, sl) in full.history.iter().zip(&lim.history) {
        let e = linalg::dist2(&sf.u, &sl.u) / linalg::norm2(&sf.u).max(1e-300);
        worst4 = worst4.max(e);
    }
    println!("C4: worst per-iteration deviation={worst4:.3e}");

    // ---- Criterion 5: denoising parity ----
    let t5 = Instant::now();
    let n_side = 64;
    let truth = blocky_truth(n_side).unwrap();
    let noise = make_noise(
        &[n_side, n_side],
        &NoiseSpec { sigma_rel: 0.15, mute_fraction: 0.25, seed: 42 },
        &truth,
    )
    .unwrap();
    let dvec: Vec<f64> = truth.iter().zip(&noise).map(|(t, n)| t + n).collect();
    let a_id = IdentityOperator::new(n_side * n_side);
    let grad = grad2d_aniso(n_side, n_side).unwrap();
    let opts5 = SolveOptions::default()
        .with_max_iters(1_000_000)
        .with_tol(0.0)
        .with_budget(100)
        .with_truth(truth.clone());
    let lm = lmccd_solve(&a_id, &grad, &dvec, 10.0, 1.0, 50, &opts5).unwrap();
    let rc = rcg_solve(&a_id, &grad, &dvec, 10.0, 1.0, 1, &opts5).unwrap();
    let e_lm = relative_error(lm.u(), &truth).unwrap();
    let e_rc = relative_error(rc.u(), &truth).unwrap();
    println!(
        "C5: lmccd iters={} err={e_lm:.4}; rcg iters={} err={e_rc:.4}; |diff|={:.4} vs allowed {:.4}; time={:?}",
        lm.state.iteration,
        rc.state.iteration,
        (e_lm - e_rc).abs(),
        0.05 * e_rc,
        t5.elapsed()
    );
    println!("    noisy rel err={:.4}", relative_error(&dvec, &truth).unwrap());

    // ---- Criterion 6: spikes ordering ----
    let t6 = Instant::now();
    let n = 500;
    let truth = spikes_truth(n).unwrap();
    let kern = dilat1d_kernel(n, n, 0.1, 2.0, 1e-2).unwrap();
    let clean = kern.apply_vec(&truth);
    let noise = make_noise(
        &[n],
        &NoiseSpec { sigma_rel: 0.15, mute_fraction: 0.2, seed: 42 },
        &clean,
    )
    .unwrap();
    let dvec: Vec<f64> = clean.iter().zip(&noise).map(|(c, n)| c + n).collect();
    let b_id = IdentityOperator::new(n);
    let opts6 = SolveOptions::default()
        .with_max_iters(1_000_000)
        .with_tol(0.0)
        .with_budget(100)
        .with_truth(truth.clone());
    let alpha = 1e4;
    let lambda = 0.05;
    let lm = lmccd_solve(&kern, &b_id, &dvec, alpha, lambda, 100, &opts6).unwrap();
    let e_lm = relative_error(lm.u(), &truth).unwrap();
    print!("C6: lmccd={e_lm:.4}");
    for ncg in [1, 5, 10] {
        let rc = rcg_solve(&kern, &b_id, &dvec, alpha, lambda, ncg, &opts6).unwrap();
        print!(" rcg{}={:.4}(it{})", ncg, relative_error(rc.u(), &truth).unwrap(), rc.state.iteration);
    }
    let fi = fista_solve(&kern, &dvec, alpha, None, &opts6).unwrap();
    println!(
        " fista={:.4}(it{},gamma={:.3e}) time={:?}",
        relative_error(fi.u(), &truth).unwrap(),
        fi.state.iteration,
        default_prox_step(&kern, alpha),
        t6.elapsed()
    );
    // support recovery
    let maxu = linalg::max_abs(lm.u());
    let sup: Vec<usize> = lm
        .u()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v.abs() > 0.1 * maxu)
        .map(|(i, _)| i)
        .collect();
    println!("    lmccd support (|u| > 10% max): {sup:?}");

    // ---- Criterion 7: condition trend ----
    let t7 = Instant::now();
    let a_id = IdentityOperator::new(32 * 32);
    let grad = grad2d_aniso(32, 32).unwrap();
    let mut prev_k = 0.0;
    for lam in [1.0, 1e2, 1e3, 1e4] {
        let f = stack(
            &a_id as &dyn LinearOperator,
            &grad as &dyn LinearOperator,
            10.0,
            lam,
        )
        .unwrap();
        let est = estimate_condition(&f, 300).unwrap();
        println!(
            "C7: lambda={lam:>7}: kappa_normal={:.4} kappa_op={:.4} (monotone ok: {})",
            est.kappa_normal(),
            est.kappa_operator(),
            est.kappa_normal() >= prev_k
        );
        prev_k = est.kappa_normal();
    }
    println!("C7 time={:?}", t7.elapsed());
}
