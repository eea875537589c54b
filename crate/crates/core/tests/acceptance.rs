//! Acceptance gate: fourteen end-to-end criteria with fixed tolerances. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rydgate::cavity::{
    blockade_radius, conditional_phase, cooperativity_chain, fit_spectrum, forster_gamma_estimate,
    storage_retrieval_efficiency, synthetic_spectrum, transverse_factor, EitParams, FitStage, NoiseModel,
};
use rydgate::gate::{
    fidelities_from_xi, truth_table_from_counts, xi_model, GateParams, PhysicalDecomposition, TruthBasis,
};
use rydgate::ghz::{
    coincidence_rates, ghz_closed_forms, monte_carlo_ghz, two_photon_rate, GhzMonteCarloOptions,
};
use rydgate::linalg::{self, c, CMatrix};
use rydgate::preset::Preset;
use rydgate::quantum::{
    cphase_unitary, haar_random_ket, pauli_product_basis, product_labels, Polarization,
};
use rydgate::sim::plan::{cphase_truth_plan, tomography_plan};
use rydgate::sim::{run, SimConfig, SourceMode};
use rydgate::tomography::{
    average_efficiency, beta_tensor, chi_of_kraus, efficiency_matrix_from_measurements, gate_adapted_basis,
    harmonic_mean_efficiency, process_tomography, EfficiencyMatrix, PairSource, StateCalibration,
};
use rydgate::units::{mhz_to_angular, rate_from_time_us, us_to_s};
use rydgate::{rng, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn c1_cavity(p: &Preset) -> Result<Outcome> {
    let cav = p.cavity()?;
    let r_in = cav.r_in_sq;
    let empty = cav.empty_reflection().powi(2);
    check(
        within(r_in, 0.9825, 5e-4) && within(empty, 0.932, 2e-3),
        format!("|r_in|² = {r_in:.5}, |ℛ_empty|² = {empty:.4}"),
    )
}

fn c2_storage(p: &Preset) -> Result<Outcome> {
    let (cc, kin) = (p.scalar("storage.cooperativity")?, p.scalar("cavity.kappa_in_ratio")?);
    let t = us_to_s(p.scalar("storage.time")?);
    let e = storage_retrieval_efficiency(cc, kin, rate_from_time_us(p.scalar("storage.coherence_time")?), t)?;
    let e0 = storage_retrieval_efficiency(cc, kin, 0.0, t)?;
    check(within(e, 0.661, 2e-3) && within(e0, 0.880, 2e-3), format!("η_sr = {e:.4}, γ_rg = 0: {e0:.4}"))
}

fn c3_phase(p: &Preset) -> Result<Outcome> {
    let d = conditional_phase(&p.eit()?, &p.reflection_model()?)?;
    check(within(d, PI, 1e-6), format!("|Δ arg ℛ| − π = {:.2e}", d - PI))
}

fn c4_spectrum_fit(p: &Preset) -> Result<Outcome> {
    let model = p.reflection_model()?;
    let grid: Vec<f64> = (0..41).map(|k| mhz_to_angular(-30.0 + 1.5 * k as f64)).collect();
    let noise = NoiseModel { intensity_sigma: 0.01, phase_sigma: 0.02 };
    let truth = p.eit()?;
    let absorption = EitParams { omega: 0.0, ..truth };
    let pts = synthetic_spectrum(&absorption, &model, &grid, &noise, &mut rng::stream(4, &[0]))?;
    let fit_a = fit_spectrum(&pts, &FitStage::Absorption.free(), &EitParams { cooperativity: 15.0, ..absorption }, &model)?;
    let pts = synthetic_spectrum(&truth, &model, &grid, &noise, &mut rng::stream(4, &[1]))?;
    let guess = EitParams { omega: mhz_to_angular(35.0), gamma_rg: rate_from_time_us(0.3), ..truth };
    let fit_e = fit_spectrum(&pts, &FitStage::Eit.free(), &guess, &model)?;
    let c_true = truth.cooperativity;
    let o_true = p.scalar("eit.omega")?;
    let t_true = p.scalar("eit.coherence_time")?;
    let (cv, ce) = (fit_a.values[0], fit_a.errors[0]);
    let (ov, oe) = (fit_e.values[0], fit_e.errors[0]);
    let (tv, te) = (fit_e.values[1], fit_e.errors[1]);
    let recovered = (cv - c_true).abs() <= 2.0 * ce && (ov - o_true).abs() <= 2.0 * oe && (tv - t_true).abs() <= 2.0 * te;
    // "Of order": within a factor of ten of the published uncertainties.
    let ratio_c = ce / p.scalar("eit.cooperativity_err")?;
    let ratio_o = oe / p.scalar("eit.omega_err")?;
    let order = (0.1..=10.0).contains(&ratio_c) && (0.1..=10.0).contains(&ratio_o);
    check(
        recovered && order,
        format!(
            "C = {cv:.3} ± {ce:.3}, Ω/2π = {ov:.3} ± {oe:.3} MHz, 1/γ_rg = {tv:.4} ± {te:.4} µs; SE ratios {ratio_c:.2}, {ratio_o:.2}"
        ),
    )
}

fn c5_model_fidelities(p: &Preset) -> Result<Outcome> {
    let g = p.gate()?;
    let f = fidelities_from_xi(&xi_model(&g)?).process;
    let fv = fidelities_from_xi(&xi_model(&GateParams { v_c: 1.0, v_t: 1.0, ..g.clone() })?).process;
    let fe = fidelities_from_xi(&xi_model(&GateParams { eta: [0.5; 4], ..g })?).process;
    check(
        within(f, 0.786, 5e-3) && within(fv, 0.945, 5e-3) && within(fe, 0.828, 5e-3),
        format!("F = {f:.4}, V = 1: {fv:.4}, equal η: {fe:.4}"),
    )
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn c6_efficiencies(p: &Preset) -> Result<Outcome> {
    let m = mean(&p.vector("gate.eta")?);
    let alt = mean(&p.vector("gate.eta_alternate")?);
    let h = harmonic_mean_efficiency(&p.vector("efficiency.harmonic_inputs")?)?;
    check(
        within(m, 0.417, 1e-12) && within(alt, 0.395, 5e-4) && within(h, 0.0116, 5e-4),
        format!("mean = {m:.4}, alternate = {alt:.5}, harmonic = {h:.5}"),
    )
}

fn c7_beta() -> Result<Outcome> {
    let basis = Arc::new(pauli_product_basis(2, true));
    let beta = beta_tensor(basis.clone())?;
    let err = beta.self_inverse_error();
    let id = chi_of_kraus(&[linalg::identity(4)], basis)?;
    let chi11 = id.entries()[(0, 0)];
    let off_id = (linalg::max_abs_diff(id.entries(), &CMatrix::from_fn(16, 16, |i, j| {
        if i == 0 && j == 0 { chi11 } else { c(0.0, 0.0) }
    })))
    .max((chi11 - c(4.0, 0.0)).norm());
    let u = cphase_unitary();
    let adapted = chi_of_kraus(&[u.matrix().clone()], Arc::new(gate_adapted_basis(&u)))?;
    let mut delta = CMatrix::zeros(16, 16);
    delta[(0, 0)] = c(1.0, 0.0);
    let dev = linalg::max_abs_diff(adapted.entries(), &delta);
    check(
        err < 1e-9 && off_id < 1e-12 && dev < 1e-10,
        format!("β self-inverse error {err:.1e}, identity χ₁₁ = {:.3}, CPHASE deviation from δ₁₁ {dev:.1e}", chi11.re),
    )
}

fn random_theta<R: Rng>(r: &mut R) -> EfficiencyMatrix {
    let g = CMatrix::from_fn(4, 4, |_, _| c(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
    let h = &g * g.adjoint();
    let top = linalg::eigvalsh(&h).into_iter().fold(0.0f64, f64::max);
    EfficiencyMatrix::new(h / c(top, 0.0)).expect("valid Θ")
}

fn c8_haar() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for k in 0..5u64 {
        let mut r = rng::stream(8, &[k]);
        let theta = random_theta(&mut r);
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let e = theta.efficiency(haar_random_ket(4, &mut r).projector().matrix());
            s += e;
            s2 += e * e;
        }
        let m = s / n as f64;
        let se = ((s2 / n as f64 - m * m) / n as f64).sqrt();
        worst = worst.max((m - average_efficiency(&theta)).abs() / se);
    }
    check(worst <= 4.0, format!("largest deviation {worst:.2} standard errors over 5 Θ"))
}

fn c9_efficiency_tomography() -> Result<Outcome> {
    let mut r = rng::stream(9, &[]);
    let theta = random_theta(&mut r);
    let inputs = product_labels(2, &[Polarization::H, Polarization::V, Polarization::D, Polarization::R]);
    let values: Vec<(CMatrix, f64)> = inputs
        .iter()
        .map(|l| {
            let rho = l.ket().projector().into_matrix();
            let e = theta.efficiency(&rho);
            (rho, e)
        })
        .collect();
    let back = efficiency_matrix_from_measurements(&values)?;
    let err = linalg::max_abs_diff(back.entries(), theta.entries());
    check(err < 1e-9, format!("max |ΔΘ| = {err:.1e} from 16 product-state inputs"))
}

fn c10_pipeline(p: &Preset) -> Result<Outcome> {
    let gate = p.gate()?;
    let eta_d = p.scalar("rates.eta_d")?;
    let mut cfg = SimConfig {
        source: SourceMode::ExactlyOne,
        n_targets: 1,
        gate: gate.clone(),
        phase_noise: Default::default(),
        shared_target_phase: false,
        target_rotation: false,
        detection_efficiency: eta_d,
        dark_count_rate: 0.0,
        shots: 100_000,
        seed: 10,
        plan: tomography_plan(),
    };
    let counts = run(&cfg)?;
    let cal = StateCalibration { detection_efficiency: eta_d, source: PairSource::ExactlyOne };
    let report = process_tomography(&counts, &cal, &cphase_unitary())?;
    let model = fidelities_from_xi(&xi_model(&gate)?).process;
    cfg.plan = cphase_truth_plan();
    cfg.seed = 11;
    let truth = truth_table_from_counts(&run(&cfg)?, TruthBasis::Cphase)?.fidelity();
    check(
        within(report.fidelity_ps, model, 0.02) && within(report.eta_bar_theta, 0.417, 0.01) && truth >= 0.999,
        format!(
            "F^ps_pro = {:.4} (model {model:.4}), η̄ = {:.4}, CPHASE truth table {truth:.5}",
            report.fidelity_ps, report.eta_bar_theta
        ),
    )
}

fn c11_ghz(p: &Preset) -> Result<Outcome> {
    let mut sets: Vec<(GateParams, f64)> = vec![(p.gate_physical()?, p.scalar("ghz.v_c_eff")?)];
    let mut r = rng::stream(11, &[]);
    for _ in 0..20 {
        let eta_sr = r.random_range(0.2..1.0);
        let phys = PhysicalDecomposition {
            eta_sr,
            eta_f: r.random_range(0.2..1.0),
            r_sq: r.random_range(0.3..1.0),
            eta_srt_rb_sq: eta_sr * r.random_range(0.1..1.0),
        };
        let g = GateParams::from_physical(phys, r.random_range(0.3..1.0), r.random_range(0.3..1.0))?;
        let vc = r.random_range(0.3..1.0);
        sets.push((g, vc));
    }
    let mut comparisons = 0;
    let mut misses = Vec::new();
    let mut worst_z = 0.0f64;
    let mut bell_dev = 0.0f64;
    for (si, (g, vc)) in sets.iter().enumerate() {
        for n in 2..=6 {
            let cf = ghz_closed_forms(g, *vc, n)?;
            let mc = monte_carlo_ghz(g, *vc, n, 100_000, rng::derive_seed(11, &[si as u64, n as u64]), GhzMonteCarloOptions::default())?;
            let pairs = [
                ("p_H", mc.estimate.p_h, cf.p_h, mc.p_h_err),
                ("p_V", mc.estimate.p_v, cf.p_v, mc.p_v_err),
                ("η_N", mc.estimate.eta_n, cf.eta_n, mc.eta_n_err),
                ("𝒞_N", mc.estimate.coherence, cf.coherence, mc.coherence_err),
            ];
            for (name, est, exact, err) in pairs {
                comparisons += 1;
                let d = (est - exact).abs();
                if err > 0.0 {
                    worst_z = worst_z.max(d / err);
                }
                if d > 3.0 * err + 1e-12 {
                    misses.push(format!("set {si} N={n} {name}: {:.2}σ", d / err));
                }
            }
        }
        let two = ghz_closed_forms(g, g.v_c, 2)?;
        bell_dev = bell_dev.max((two.summary().fidelity - fidelities_from_xi(&xi_model(g)?).bell).abs());
    }
    check(
        misses.is_empty() && bell_dev < 1e-9,
        format!(
            "{comparisons} comparisons, largest |Δ|/σ = {worst_z:.2}, outside 3σ: [{}]; N=2 vs Bell fidelity {bell_dev:.1e}",
            misses.join(", ")
        ),
    )
}

fn c12_rates(p: &Preset) -> Result<Outcome> {
    let t = two_photon_rate(
        p.scalar("rates.mean_control")?,
        p.scalar("rates.mean_target")?,
        p.scalar("gate.eta_bar")?,
        p.scalar("rates.eta_d")?,
        p.scalar("rates.repetition_rate")?,
    )?;
    let measured = p.vector("rates.measured")?;
    let predicted = coincidence_rates(&p.rates()?, 1..=5)?;
    let mut ok = within(t.per_pair, 560.0, 15.0) && within(t.per_experiment, 10.0, 0.5);
    let mut rel = Vec::new();
    for ((n, r), m) in predicted.iter().zip(&measured) {
        let d = (r - m).abs() / m;
        ok &= d <= if *n <= 3 { 0.15 } else { 0.30 };
        rel.push(format!("R{n} {r:.3} ({:+.0}%)", 100.0 * (r - m) / m));
    }
    check(ok, format!("{:.1} /s per pair, {:.2} /s; {}", t.per_pair, t.per_experiment, rel.join(", ")))
}

fn c13_blockade(p: &Preset) -> Result<Outcome> {
    let gamma_rg = rate_from_time_us(p.scalar("eit.coherence_time")?);
    let inv_ns = 1e9 / forster_gamma_estimate(gamma_rg, &p.polarizabilities()?)?;
    let r = blockade_radius(
        &p.blockade()?,
        p.scalar("eit.cooperativity")?,
        mhz_to_angular(p.scalar("eit.omega")?),
        p.gamma_e()?,
    )?;
    let r_um = r * 1e6;
    check(within(inv_ns, 25.0, 1.0) && (6.0..=8.0).contains(&r_um), format!("1/γ_F = {inv_ns:.2} ns, R_block = {r_um:.2} µm"))
}

fn c14_coupling(p: &Preset) -> Result<Outcome> {
    let f = transverse_factor(p.scalar("coupling.sigma_x")?, p.scalar("coupling.sigma_y")?, p.scalar("coupling.waist")?);
    let rep = cooperativity_chain(
        mhz_to_angular(p.scalar("coupling.g")?),
        mhz_to_angular(p.scalar("coupling.kappa")?),
        mhz_to_angular(p.scalar("coupling.gamma")?),
        p.scalar("coupling.atom_number")?,
        f,
    )?;
    let rounds = |x: f64, to: f64| ((x * 10.0).round() / 10.0 - to).abs() < 1e-9;
    let quoted = rep.c_max.trunc() == p.scalar("coupling.c_max")? && rep.c_estimate.trunc() == p.scalar("coupling.c_estimate")?;
    check(
        within(f, 0.54, 0.01)
            && within(rep.single_atom_cooperativity, 0.145, 0.002)
            && rounds(rep.c_max, 37.7)
            && rounds(rep.c_estimate, 20.4)
            && quoted,
        format!(
            "factor {f:.4}, C₁ = {:.4}, C = {:.2} → {:.2}",
            rep.single_atom_cooperativity, rep.c_max, rep.c_estimate
        ),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Result<Outcome> + 'a>);

fn main() -> ExitCode {
    let preset = Preset::paper();
    let p = &preset;
    let criteria: Vec<Criterion> = vec![
        ("cavity bookkeeping", Box::new(|| c1_cavity(p))),
        ("storage/retrieval efficiency", Box::new(|| c2_storage(p))),
        ("conditional phase", Box::new(|| c3_phase(p))),
        ("spectrum-fit round trip", Box::new(|| c4_spectrum_fit(p))),
        ("model fidelities", Box::new(|| c5_model_fidelities(p))),
        ("efficiency figures", Box::new(|| c6_efficiencies(p))),
        ("β machinery", Box::new(c7_beta)),
        ("Haar average efficiency", Box::new(c8_haar)),
        ("efficiency-tomography round trip", Box::new(c9_efficiency_tomography)),
        ("end-to-end pipeline", Box::new(|| c10_pipeline(p))),
        ("GHZ closed forms vs Monte Carlo", Box::new(|| c11_ghz(p))),
        ("coincidence rates", Box::new(|| c12_rates(p))),
        ("blockade", Box::new(|| c13_blockade(p))),
        ("coupling chain", Box::new(|| c14_coupling(p))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("{} {:>2} {name}: {detail} [{:.1} s]", if pass { "PASS" } else { "FAIL" }, i + 1, secs);
        if !pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
