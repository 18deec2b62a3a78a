//! Acceptance gate: one test per shipping criterion, each printing a single
//! verdict line so `cargo test --test acceptance -- --nocapture` reads as a
//! checklist. A failing criterion prints its line first and then panics with
//! the same detail.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qevo::ansatz::{build_ansatz, AnsatzSpec, Entangler};
use qevo::dense::{hamiltonian_matrix, hermitian_eigen};
use qevo::diagnostics::{ground_space, overlap, page_entropy, reduced_density, renyi2};
use qevo::evolve::{initial_parameters, run, EvolutionConfig, InitMode};
use qevo::landscape::{
    argmin3, argmin5, fit3, fit5, iterate, scan, CostFunction, FnCost, IterateConfig,
    LandscapeOrder, Sinusoid3, Sinusoid5, VqeCost,
};
use qevo::models::{
    build_heisenberg, build_syk, random_regular_graph, syk_coupling_variance, HeisenbergSpec,
    RegularGraph, SykSpec,
};
use qevo::sim::{run_circuit, ParameterVector, StateVector};
use qevo::synth::{synthesize, TargetUnitary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;
use std::any::Any;
use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI, TAU};
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

/// Runs one criterion body, prints its verdict line, and re-raises any
/// failure so the test itself still goes red.
fn criterion(id: &str, name: &str, body: impl FnOnce() -> Result<String, String>) {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed().as_secs_f64();
    let (verdict, detail) = match &outcome {
        Ok(Ok(d)) => ("PASS", d.clone()),
        Ok(Err(d)) => ("FAIL", d.clone()),
        Err(cause) => ("FAIL", panic_text(&**cause)),
    };
    println!("acceptance criterion {id} ({name}): {verdict} [{elapsed:.1}s] {detail}");
    match outcome {
        Ok(Ok(_)) => {}
        Ok(Err(d)) => panic!("criterion {id} failed: {d}"),
        Err(cause) => panic::resume_unwind(cause),
    }
}

fn panic_text(cause: &(dyn Any + Send)) -> String {
    if let Some(s) = cause.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = cause.downcast_ref::<String>() {
        s.clone()
    } else {
        "panicked".into()
    }
}

/// Ginibre matrix through QR, with R's diagonal phases folded back into Q so
/// the distribution is exactly Haar.
fn haar_unitary(n_qubits: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let d = 1 << n_qubits;
    let g = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let ph = r[(j, j)] / r[(j, j)].norm();
        for i in 0..d {
            q[(i, j)] *= ph.conj();
        }
    }
    q
}

fn ring_or_edge(n: usize) -> RegularGraph {
    if n == 2 {
        RegularGraph::from_edges(2, vec![(0, 1)]).unwrap()
    } else {
        RegularGraph::ring(n).unwrap()
    }
}

/// Random spin instance and ansatz for the cross-section checks; `k` walks
/// the qubit counts 2..4 and layer depths 1..3.
fn random_cost(k: usize, entangler: Entangler, rng: &mut ChaCha8Rng) -> VqeCost {
    let n = 2 + k % 3;
    let layers = 1 + (k / 3) % 3;
    let j = rng.gen_range(-1.5..1.5);
    let h_z = rng.gen_range(-1.0..1.0);
    let h = build_heisenberg(&HeisenbergSpec::new(ring_or_edge(n), j, h_z)).unwrap();
    let circuit = build_ansatz(&AnsatzSpec::new(n, layers, entangler)).unwrap();
    VqeCost::new(circuit, h).unwrap()
}

fn random_angles(l: usize, rng: &mut ChaCha8Rng) -> ParameterVector {
    ParameterVector::new((0..l).map(|_| rng.gen::<f64>() * TAU).collect())
}

fn mask_to_subset(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|q| (mask >> q) & 1 == 1).collect()
}

#[test]
fn criterion_01_rotation_cross_sections_match_dense_scans() {
    criterion("01", "rotation cross-sections from three points", || {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst: f64 = 0.0;
        for k in 0..20 {
            let cost = random_cost(k, Entangler::CnotChain, &mut rng);
            let params = random_angles(cost.n_params(), &mut rng);
            let i = rng.gen_range(0..cost.n_params());
            let f0 = cost.evaluate(&params).unwrap();
            let model = fit3(&cost, &params, i, f0).unwrap();
            for (theta, y) in scan(&cost, &params, i, 64).unwrap() {
                worst = worst.max((y - model.value(theta)).abs());
            }
        }
        if worst < 1e-9 {
            Ok(format!("max residual {worst:.2e} over 20 instances, 64 scan points each"))
        } else {
            Err(format!("max residual {worst:.2e} reaches 1e-9"))
        }
    });
}

#[test]
fn criterion_02_controlled_rotation_cross_sections_match_dense_scans() {
    criterion("02", "two-frequency cross-sections from five points", || {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let mut worst: f64 = 0.0;
        for k in 0..20 {
            let cost = random_cost(k, Entangler::CryChain, &mut rng);
            let params = random_angles(cost.n_params(), &mut rng);
            let i = rng.gen_range(0..cost.n_params());
            let f0 = cost.evaluate(&params).unwrap();
            let model = fit5(&cost, &params, i, f0).unwrap();
            for (theta, y) in scan(&cost, &params, i, 64).unwrap() {
                worst = worst.max((y - model.value(theta)).abs());
            }
        }
        if worst < 1e-9 {
            Ok(format!("max residual {worst:.2e} over 20 instances, 64 scan points each"))
        } else {
            Err(format!("max residual {worst:.2e} reaches 1e-9"))
        }
    });
}

#[test]
fn criterion_03_closed_form_minima_beat_dense_grids() {
    criterion("03", "closed-form coordinate minima", || {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let mut excess3 = f64::NEG_INFINITY;
        for _ in 0..100 {
            let m = Sinusoid3 {
                kappa: rng.gen_range(0.0..2.0),
                xi: rng.gen::<f64>() * TAU,
                c: rng.gen_range(-1.0..1.0),
            };
            let p = argmin3(&m, rng.gen::<f64>() * TAU);
            let grid = (0..10_000)
                .map(|t| m.value(TAU * t as f64 / 1e4))
                .fold(f64::INFINITY, f64::min);
            excess3 = excess3.max(m.value(p) - grid);
        }
        let mut excess5 = f64::NEG_INFINITY;
        for _ in 0..100 {
            let m = Sinusoid5 {
                kappa: rng.gen_range(0.0..2.0),
                xi: rng.gen::<f64>() * TAU,
                gamma: rng.gen_range(0.0..2.0),
                phi: rng.gen::<f64>() * TAU,
                c: rng.gen_range(-1.0..1.0),
            };
            let p = argmin5(&m, rng.gen::<f64>() * TAU);
            let grid = (0..100_000)
                .map(|t| m.value(TAU * t as f64 / 1e5))
                .fold(f64::INFINITY, f64::min);
            excess5 = excess5.max(m.value(p) - grid);
        }
        if excess3 < 1e-9 && excess5 < 1e-9 {
            Ok(format!(
                "worst excess over grid minima {excess3:.2e} (one frequency), {excess5:.2e} (two)"
            ))
        } else {
            Err(format!(
                "argmin misses the grid minimum: {excess3:.2e} (one frequency), {excess5:.2e} (two)"
            ))
        }
    });
}

#[test]
fn criterion_04_optimizer_steps_never_increase_the_cost() {
    criterion("04", "per-step monotone descent", || {
        let mut violations = 0u64;
        let mut steps = 0u64;
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
            let h_z = rng.gen_range(-1.0..1.0);
            let h = build_heisenberg(&HeisenbergSpec::new(
                RegularGraph::ring(4).unwrap(),
                1.0,
                h_z,
            ))
            .unwrap();
            let circuit = build_ansatz(&AnsatzSpec::new(4, 4, Entangler::CnotChain)).unwrap();
            let cost = VqeCost::new(circuit, h).unwrap();
            let mut params = initial_parameters(seed, 0, cost.n_params(), InitMode::Random);
            let mut best = cost.evaluate(&params).unwrap();
            let icfg = IterateConfig { subset_size: 8, line_samples: 32 };
            for _ in 0..500 {
                let step = iterate(&cost, &params, best, &icfg, &mut rng).unwrap();
                if step.cost > best {
                    violations += 1;
                }
                params = step.params;
                best = step.cost;
                steps += 1;
            }
        }
        if violations == 0 {
            Ok(format!("0 increases over {steps} steps in 10 seeded runs"))
        } else {
            Err(format!("{violations} cost increases over {steps} steps"))
        }
    });
}

/// Sinusoidal test cost with nearest-neighbor products: cross-sections stay
/// inside the fitted frequency set while the coupling keeps coordinates from
/// ever going flat, so every step pays the full sample price.
fn rugged_cost(
    order: LandscapeOrder,
    l: usize,
    seed: u64,
) -> FnCost<impl Fn(&ParameterVector) -> f64 + Sync> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..l).map(|_| rng.gen_range(0.5..1.5)).collect();
    let phi: Vec<f64> = (0..l).map(|_| rng.gen::<f64>() * TAU).collect();
    let b: Vec<f64> = (0..l).map(|_| rng.gen_range(0.2..0.4)).collect();
    let with_single = matches!(order, LandscapeOrder::Five);
    FnCost::new(l, order, move |p| {
        let mut v = 0.0;
        for i in 0..l {
            let t = p.get(i);
            let u = p.get((i + 1) % l);
            v += a[i] * (2.0 * t + phi[i]).sin();
            v += b[i] * (2.0 * t + phi[i]).sin() * (2.0 * u).cos();
            if with_single {
                v += 0.5 * a[i] * (t + phi[i]).sin();
            }
        }
        v
    })
}

#[test]
fn criterion_05_evaluation_counts_are_exact() {
    criterion("05", "evaluation accounting", || {
        let l = 30usize;
        let m = 6usize;
        let s = 16usize;
        let mut audited = 0u64;
        for (order, per_coord) in [(LandscapeOrder::Three, 2u64), (LandscapeOrder::Five, 4u64)] {
            let expected = per_coord * m as u64 + (s as u64 - 1);
            for seed in 0..3u64 {
                let cost = rugged_cost(order, l, 500 + seed);
                let mut rng = ChaCha8Rng::seed_from_u64(550 + seed);
                let mut params = initial_parameters(seed, 0, l, InitMode::Random);
                let mut best = cost.evaluate(&params).unwrap();
                let icfg = IterateConfig { subset_size: m, line_samples: s };
                for _ in 0..300 {
                    let before = cost.counter().get();
                    let step = iterate(&cost, &params, best, &icfg, &mut rng).unwrap();
                    let delta = cost.counter().get() - before;
                    if delta != expected || step.evaluations != delta {
                        return Err(format!(
                            "a step consumed {delta} evaluations and reported {}, expected {expected}",
                            step.evaluations
                        ));
                    }
                    params = step.params;
                    best = step.cost;
                    audited += 1;
                }
            }
            let cost = rugged_cost(order, l, 900);
            let cfg = EvolutionConfig {
                n_agents: 3,
                episode_length: 20,
                subset_size: m,
                line_samples: s,
                landscape_order: order,
                max_evaluations: 30_000,
                master_seed: 4,
                init: InitMode::Random,
                ..EvolutionConfig::default()
            };
            let res = run(&cost, &cfg, None).unwrap();
            if res.evaluations_used != cost.counter().get() {
                return Err(format!(
                    "driver ledger {} disagrees with the counter {}",
                    res.evaluations_used,
                    cost.counter().get()
                ));
            }
        }
        Ok(format!(
            "{audited} steps matched 2M+S-1 / 4M+S-1 exactly; full-run ledgers match the counters"
        ))
    });
}

#[test]
fn criterion_06_small_ring_ground_state_recovery() {
    criterion("06", "four-qubit ring ground state", || {
        let h = build_heisenberg(&HeisenbergSpec::new(RegularGraph::ring(4).unwrap(), 1.0, 0.0))
            .unwrap();
        let e0 = ground_space(&h, None).unwrap().energy();
        let circuit = build_ansatz(&AnsatzSpec::new(4, 8, Entangler::CnotChain)).unwrap();
        let cost = VqeCost::new(circuit, h).unwrap();
        let cfg = EvolutionConfig {
            n_agents: 1,
            episode_length: 500,
            subset_size: 8,
            line_samples: 32,
            landscape_order: LandscapeOrder::Three,
            max_evaluations: 200_000,
            target_cost: Some(e0 + 1e-4),
            master_seed: 0,
            init: InitMode::Random,
            ..EvolutionConfig::default()
        };
        let res = run(&cost, &cfg, None).unwrap();
        let err = (res.best_cost - e0).abs();
        if err <= 1e-4 && res.evaluations_used <= 200_000 {
            Ok(format!(
                "|E - E0| = {err:.2e} after {} evaluations (E0 = {e0})",
                res.evaluations_used
            ))
        } else {
            Err(format!(
                "|E - E0| = {err:.2e} after {} of 200000 evaluations (E0 = {e0})",
                res.evaluations_used
            ))
        }
    });
}

#[test]
fn criterion_07_six_qubit_recovery_by_overlap() {
    criterion("07", "six-qubit cubic-graph ground-state overlap", || {
        let graph = random_regular_graph(6, 3, 1).unwrap();
        let h = build_heisenberg(&HeisenbergSpec::new(graph, 1.0, 1.0)).unwrap();
        let gs = ground_space(&h, None).unwrap();
        let circuit = build_ansatz(&AnsatzSpec::new(6, 20, Entangler::CnotChain)).unwrap();
        let cost = VqeCost::new(circuit, h).unwrap();
        let cfg = EvolutionConfig {
            n_agents: 8,
            episode_length: 200,
            max_evaluations: 2_000_000,
            target_cost: Some(gs.energy() + 1e-3),
            master_seed: 1,
            init: InitMode::Random,
            ..EvolutionConfig::default()
        };
        let res = run(&cost, &cfg, None).unwrap();
        let state = cost.state(&ParameterVector::new(res.best_params.clone())).unwrap();
        let m = overlap(&state, &gs).unwrap();
        if m >= 0.99 && res.evaluations_used <= 2_000_000 {
            Ok(format!("overlap {m:.6} after {} evaluations", res.evaluations_used))
        } else {
            Err(format!(
                "overlap {m:.6} after {} evaluations (need 0.99 within 2000000)",
                res.evaluations_used
            ))
        }
    });
}

#[test]
fn criterion_08a_four_qubit_syk_spectrum_pairing() {
    criterion("08a", "SYK spectrum pairing at four qubits", || {
        let h = build_syk(&SykSpec::new(4, 11)).unwrap();
        let (eigs, _) = hermitian_eigen(&hamiltonian_matrix(&h)).unwrap();
        let worst = eigs.chunks_exact(2).map(|p| p[1] - p[0]).fold(0.0f64, f64::max);
        if worst <= 1e-8 {
            Ok(format!("all 8 level pairs closed to {worst:.2e}"))
        } else {
            Err(format!(
                "levels do not pair: largest intra-pair split {worst:.2e}; the four-qubit dense \
                 spectrum is generically simple, pairing appears from five qubits up (covered \
                 by the model-level tests)"
            ))
        }
    });
}

#[test]
fn criterion_08b_four_qubit_syk_ground_state_energy() {
    criterion("08b", "SYK ground-state energy", || {
        let h = build_syk(&SykSpec::new(4, 11)).unwrap();
        let e0 = ground_space(&h, None).unwrap().energy();
        let circuit = build_ansatz(&AnsatzSpec::new(4, 8, Entangler::CnotChain)).unwrap();
        let cost = VqeCost::new(circuit, h).unwrap();
        let cfg = EvolutionConfig {
            n_agents: 4,
            episode_length: 100,
            max_evaluations: 300_000,
            target_cost: Some(e0 + 5e-3),
            master_seed: 1,
            init: InitMode::Random,
            ..EvolutionConfig::default()
        };
        let res = run(&cost, &cfg, None).unwrap();
        let err = (res.best_cost - e0).abs();
        if err <= 1e-2 {
            Ok(format!(
                "|E - E0| = {err:.2e} after {} evaluations (E0 = {e0:.6})",
                res.evaluations_used
            ))
        } else {
            Err(format!(
                "|E - E0| = {err:.2e} after {} evaluations (E0 = {e0:.6})",
                res.evaluations_used
            ))
        }
    });
}

#[test]
fn criterion_08c_syk_coupling_variance() {
    criterion("08c", "SYK coupling variance", || {
        let sigma2 = syk_coupling_variance(4, 1.0);
        // Pauli collapse contributes only a +-1 sign and the normal is
        // symmetric, so term weights share the coupling distribution.
        let mut draws = Vec::new();
        for seed in 0..1430u64 {
            let h = build_syk(&SykSpec::new(4, seed)).unwrap();
            draws.extend(h.terms().iter().map(|t| t.weight()));
        }
        let m = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / m;
        let s2 = draws.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / (m - 1.0);
        let se = sigma2 * (2.0 / (m - 1.0)).sqrt();
        let pull = (s2 - sigma2).abs() / se;
        if draws.len() >= 100_000 && pull <= 3.0 {
            Ok(format!(
                "sample variance {s2:.5} vs {sigma2:.5} over {} draws ({pull:.2} standard errors)",
                draws.len()
            ))
        } else {
            Err(format!(
                "sample variance {s2:.5} vs {sigma2:.5} over {} draws ({pull:.2} standard errors)",
                draws.len()
            ))
        }
    });
}

fn random_product_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let qubits: Vec<[Complex64; 2]> = (0..n)
        .map(|_| {
            let polar = rng.gen::<f64>() * PI;
            let rel = rng.gen::<f64>() * TAU;
            [
                Complex64::new((polar / 2.0).cos(), 0.0),
                Complex64::from_polar((polar / 2.0).sin(), rel),
            ]
        })
        .collect();
    let amps = (0..1usize << n)
        .map(|idx| (0..n).map(|q| qubits[q][(idx >> q) & 1]).product())
        .collect();
    StateVector::from_amplitudes(n, amps).unwrap()
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let mut amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amplitudes(n, amps).unwrap()
}

/// Partial trace written out as the explicit sum over environment basis
/// states, assembled by bit placement; the library never sees this path.
fn oracle_rho(state: &StateVector, subset: &[usize]) -> DMatrix<Complex64> {
    let n = state.n_qubits();
    let comp: Vec<usize> = (0..n).filter(|q| !subset.contains(q)).collect();
    let da = 1usize << subset.len();
    let db = 1usize << comp.len();
    let amps = state.amplitudes();
    let place = |bits: usize, at: &[usize]| -> usize {
        at.iter().enumerate().fold(0, |acc, (k, &q)| acc | (((bits >> k) & 1) << q))
    };
    DMatrix::from_fn(da, da, |r, s| {
        (0..db)
            .map(|e| {
                amps[place(r, subset) | place(e, &comp)]
                    * amps[place(s, subset) | place(e, &comp)].conj()
            })
            .sum()
    })
}

#[test]
fn criterion_09_entropy_suite() {
    criterion("09", "entropy diagnostics", || {
        let mut rng = ChaCha8Rng::seed_from_u64(900);

        let mut worst_product: f64 = 0.0;
        for _ in 0..5 {
            let state = random_product_state(4, &mut rng);
            for mask in 1usize..16 {
                worst_product =
                    worst_product.max(renyi2(&state, &mask_to_subset(mask)).unwrap());
            }
        }
        if worst_product > 1e-12 {
            return Err(format!("a product state carried S2 = {worst_product:.2e}"));
        }

        // one shared bit: every proper cut of a Bell or GHZ state is ln 2
        let bell = StateVector::from_amplitudes(
            2,
            vec![
                Complex64::new(FRAC_1_SQRT_2, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(FRAC_1_SQRT_2, 0.0),
            ],
        )
        .unwrap();
        let mut worst_cat: f64 = 0.0;
        for mask in [1usize, 2] {
            worst_cat =
                worst_cat.max((renyi2(&bell, &mask_to_subset(mask)).unwrap() - LN_2).abs());
        }
        let mut ghz_amps = vec![Complex64::new(0.0, 0.0); 16];
        ghz_amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        ghz_amps[15] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let ghz = StateVector::from_amplitudes(4, ghz_amps).unwrap();
        for mask in 1usize..15 {
            worst_cat =
                worst_cat.max((renyi2(&ghz, &mask_to_subset(mask)).unwrap() - LN_2).abs());
        }
        if worst_cat > 1e-12 {
            return Err(format!("a cat-state cut missed ln 2 by {worst_cat:.2e}"));
        }

        let page = page_entropy(1, 2).unwrap();
        if page != LN_2 - 0.5 {
            return Err(format!("half-of-two-qubits bound {page} differs from ln 2 - 1/2"));
        }

        let mut worst_rho: f64 = 0.0;
        let mut worst_s2: f64 = 0.0;
        for _ in 0..5 {
            let state = random_state(4, &mut rng);
            for mask in 1usize..16 {
                let subset = mask_to_subset(mask);
                let rho = reduced_density(&state, &subset).unwrap();
                let oracle = oracle_rho(&state, &subset);
                worst_rho = worst_rho.max(
                    (rho.matrix() - &oracle).iter().map(|e| e.norm()).fold(0.0, f64::max),
                );
                let purity: f64 = oracle.iter().map(|e| e.norm_sqr()).sum();
                worst_s2 = worst_s2.max(
                    (renyi2(&state, &subset).unwrap() - (-purity.ln()).max(0.0)).abs(),
                );
            }
        }
        if worst_rho > 1e-12 || worst_s2 > 1e-12 {
            return Err(format!(
                "partial-trace oracle disagrees: matrix gap {worst_rho:.2e}, entropy gap {worst_s2:.2e}"
            ));
        }

        Ok(format!(
            "product cuts <= {worst_product:.1e}; cat cuts at ln 2 within {worst_cat:.1e}; \
             oracle gaps {worst_rho:.1e} / {worst_s2:.1e}"
        ))
    });
}

#[test]
fn criterion_10_three_layer_synthesis_of_haar_targets() {
    criterion("10", "two-qubit synthesis with three entangling layers", || {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut worst: f64 = 0.0;
        let mut missed = 0usize;
        for _ in 0..10 {
            let target = TargetUnitary::new(haar_unitary(2, &mut rng)).unwrap();
            let spec = AnsatzSpec::new(2, 3, Entangler::CnotChain);
            let cfg = EvolutionConfig {
                n_agents: 64,
                episode_length: 30,
                max_evaluations: 150_000,
                master_seed: 5,
                init: InitMode::Random,
                ..EvolutionConfig::default()
            };
            let report = synthesize(&target, &spec, &cfg, 1e-3).unwrap();
            worst = worst.max(report.final_cost);
            if report.final_cost >= 1e-8 {
                missed += 1;
            }
        }
        if missed == 0 {
            Ok(format!("all 10 targets below 1e-8, worst {worst:.2e}"))
        } else {
            Err(format!(
                "{missed} of 10 targets floor out (worst {worst:.2e}): each layer places its \
                 rotations before the entangler, so a three-layer chain ends in a bare CNOT \
                 and offers only three local layers against a generic target; the four-layer \
                 companion test lands every target below 1e-8"
            ))
        }
    });
}

/// Companion to the three-layer gate: one more layer restores local freedom
/// after the final entangler and every Haar target lands.
#[test]
fn four_layer_synthesis_reaches_machine_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let target = TargetUnitary::new(haar_unitary(2, &mut rng)).unwrap();
        let spec = AnsatzSpec::new(2, 4, Entangler::CnotChain);
        let cfg = EvolutionConfig {
            n_agents: 64,
            episode_length: 30,
            max_evaluations: 400_000,
            master_seed: 5,
            init: InitMode::Random,
            ..EvolutionConfig::default()
        };
        let report = synthesize(&target, &spec, &cfg, 1e-3).unwrap();
        worst = worst.max(report.final_cost);
    }
    println!("supplementary four-layer synthesis: worst {worst:.2e} across 10 targets");
    assert!(worst < 1e-8, "four-layer synthesis floor {worst:.2e}");
}

#[test]
fn criterion_11_zero_angles_mean_zero_entanglement() {
    criterion("11", "zero-angle circuits stay unentangled", || {
        let mut worst: f64 = 0.0;
        let mut cuts = 0u64;
        for n in 2..=5usize {
            for entangler in [Entangler::CnotChain, Entangler::CryChain] {
                for layers in [1usize, 3] {
                    let circuit = build_ansatz(&AnsatzSpec::new(n, layers, entangler)).unwrap();
                    let state = run_circuit(
                        &circuit,
                        &ParameterVector::zeros(circuit.n_params()),
                        &StateVector::zero_state(n),
                    )
                    .unwrap();
                    for mask in 1usize..1 << n {
                        worst = worst.max(renyi2(&state, &mask_to_subset(mask)).unwrap());
                        cuts += 1;
                    }
                }
            }
        }
        if worst <= 1e-12 {
            Ok(format!("S2 <= {worst:.1e} across {cuts} cuts of 16 circuits"))
        } else {
            Err(format!("a zero-angle circuit carried S2 = {worst:.2e}"))
        }
    });
}

#[test]
fn criterion_12_byte_identical_reruns() {
    criterion("12", "byte-identical reruns across thread counts", || {
        let dir = tempfile::TempDir::new().unwrap();
        let config = json!({
            "mode": "vqe",
            "model": {
                "kind": "heisenberg",
                "n_qubits": 4,
                "graph": {"kind": "ring"},
                "j": 1.0,
                "h_z": 0.5
            },
            "ansatz": {"n_qubits": 4, "layers": 4, "entangler": "cnot_chain"},
            "init": "random",
            "optimizer": {"n_agents": 4, "episode_length": 50, "max_evaluations": 30000, "master_seed": 7},
            "diagnostics": {"overlap": true, "record_every": 1}
        });
        let cfg_path = dir.path().join("run.json");
        std::fs::write(&cfg_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
        let mut artifacts: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
        for (label, threads) in [("a", None), ("b", None), ("c", Some("1")), ("d", Some("4"))] {
            let out = dir.path().join(label);
            let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_qevo"));
            cmd.args(["vqe", "--config", cfg_path.to_str().unwrap()]);
            cmd.args(["--out", out.to_str().unwrap()]);
            if let Some(t) = threads {
                cmd.args(["--threads", t]);
            }
            let output = cmd.output().unwrap();
            if !output.status.success() {
                return Err(format!(
                    "run {label} failed: {}",
                    String::from_utf8_lossy(&output.stderr)
                ));
            }
            artifacts.push((
                std::fs::read(out.join("trace.csv")).unwrap(),
                std::fs::read(out.join("summary.json")).unwrap(),
            ));
        }
        if artifacts.iter().all(|a| a.0 == artifacts[0].0 && a.1 == artifacts[0].1) {
            Ok(format!(
                "4 runs (repeat, --threads 1, --threads 4) agree byte for byte; trace is {} bytes",
                artifacts[0].0.len()
            ))
        } else {
            Err("trace.csv or summary.json differ between identically seeded runs".into())
        }
    });
}

#[test]
#[ignore = "scaling run over millions of evaluations; opt in with --ignored"]
fn criterion_13_ten_qubit_deep_circuit_recovery() {
    criterion("13", "ten-qubit deep-circuit recovery", || {
        let graph = random_regular_graph(10, 3, 13).unwrap();
        let h = build_heisenberg(&HeisenbergSpec::new(graph, 1.0, 1.0)).unwrap();
        let gs = ground_space(&h, None).unwrap();
        let circuit = build_ansatz(&AnsatzSpec::new(10, 100, Entangler::CnotChain)).unwrap();
        let cost = VqeCost::new(circuit, h).unwrap();
        let cfg = EvolutionConfig {
            n_agents: 1,
            episode_length: 500,
            subset_size: 64,
            line_samples: 32,
            max_evaluations: 10_000_000,
            target_cost: Some(gs.energy() + 1e-3),
            master_seed: 2,
            init: InitMode::Random,
            ..EvolutionConfig::default()
        };
        let res = run(&cost, &cfg, None).unwrap();
        let monotone = res.trace.windows(2).all(|w| w[1].best_cost <= w[0].best_cost);
        let state = cost.state(&ParameterVector::new(res.best_params.clone())).unwrap();
        let m = overlap(&state, &gs).unwrap();
        if monotone && m > 0.9 && res.evaluations_used <= 10_000_000 {
            Ok(format!(
                "overlap {m:.4} after {} evaluations, monotone trace",
                res.evaluations_used
            ))
        } else {
            Err(format!(
                "overlap {m:.4}, monotone {monotone}, {} evaluations",
                res.evaluations_used
            ))
        }
    });
}
