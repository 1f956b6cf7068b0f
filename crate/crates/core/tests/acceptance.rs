//! Acceptance suite: every criterion prints one pass/fail line with the
//! measured quantities. Heavy criteria serialize on a lock so their
//! runtime caps are measured without interference.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use latticeq::analysis::{borel_scaling_check, combes_thomas_check, spectral_distance};
use latticeq::eigenfunctions::{
    boundary_growth_check, commutator_remainder, growth_profile, make_trimmed_transverse_wave,
    make_trimmed_wave, symmetric_free_solution_1d, tabulate, trimmed_sine_factor,
    validate_generalized_eigenfunction, Evaluator,
};
use latticeq::lattice::{box_sites, for_each_sphere_site, Grid, LatticeBox, TrimPattern};
use latticeq::numerics::{dense_eig, evolve, green_column, resolvent_apply, WaveState};
use latticeq::operator::{assemble, PotentialSpec, SparseHamiltonian};
use latticeq::transport::{
    abel_moment, cesaro_moment, delocalization_certificate, fit_transport_exponent,
    moment_series, moment_via_resolvent, resolvent_lower_bound_check, Containment, GrowthWeight,
    MomentOptions, Route,
};

static HEAVY: Mutex<()> = Mutex::new(());

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {detail}");
}

fn trusted(overrides: impl FnOnce(&mut MomentOptions)) -> MomentOptions {
    let mut o = MomentOptions { containment: Containment::Trusted, ..Default::default() };
    overrides(&mut o);
    o
}

/// Criterion 1: Abel and resolvent routes agree to 1e-3 relative on a
/// 201-site disordered chain at q = 2, T = 5, within 60 s.
#[test]
fn criterion_01_moment_resolvent_identity() {
    let _lock = HEAVY.lock().unwrap();
    let start = Instant::now();
    let b = LatticeBox::centered(1, 100).unwrap();
    let pot = PotentialSpec::iid_uniform(2.0, 20260107, 0, TrimPattern::full(1)).unwrap();
    let h = assemble(&b, &pot).unwrap();
    let w = GrowthWeight::power(2.0, vec![0]).unwrap();
    let opts = trusted(|o| {
        o.time_tol = 1e-7;
        o.time_quad_rel = 2e-5;
        o.evolve_tol = 1e-9;
        o.solve_tol = 1e-10;
        o.energy_quad_rel = 2e-5;
    });
    let t = 5.0;
    let a = abel_moment(&h, &w, &[0], t, &opts).unwrap();
    let r = moment_via_resolvent(&h, &w, &[0], t, &opts).unwrap();
    let rel = (a.value - r.value).abs() / r.value.abs();
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "criterion 1 (moment-resolvent identity)",
        rel <= 1e-3 && elapsed <= 60.0,
        &format!("abel {} vs resolvent {}, rel {rel:.2e}, {elapsed:.1} s", a.value, r.value),
    );
}

/// Criterion 2: constant weight gives 1 ± 1e-6 on all three routes for
/// five random systems.
#[test]
fn criterion_02_normalization_all_routes() {
    let systems: Vec<SparseHamiltonian> = vec![
        (1usize, 15i64, 2.0f64, 1u64),
        (1, 22, 5.0, 2),
        (2, 4, 3.0, 3),
        (2, 5, 1.0, 4),
        (1, 30, 8.0, 5),
    ]
    .into_iter()
    .map(|(d, l, wd, seed)| {
        let b = LatticeBox::centered(d, l).unwrap();
        let p = PotentialSpec::iid_uniform(wd, seed, 0, TrimPattern::full(d)).unwrap();
        assemble(&b, &p).unwrap()
    })
    .collect();
    let w = GrowthWeight::constant_one();
    let opts = trusted(|o| {
        o.time_tol = 1e-9;
        o.time_quad_rel = 1e-8;
        o.evolve_tol = 1e-10;
        o.energy_quad_rel = 1e-7;
        o.solve_tol = 1e-10;
    });
    let mut worst: f64 = 0.0;
    for (i, h) in systems.iter().enumerate() {
        let t = 2.0 + i as f64;
        let base = vec![0i64; h.dim()];
        let a = abel_moment(h, &w, &base, t, &opts).unwrap();
        let c = cesaro_moment(h, &w, &base, t, &opts).unwrap();
        let r = moment_via_resolvent(h, &w, &base, t, &opts).unwrap();
        for v in [a.value, c.value, r.value] {
            worst = worst.max((v - 1.0).abs());
        }
    }
    report(
        "criterion 2 (normalization, 3 routes x 5 systems)",
        worst <= 1e-6,
        &format!("max |value - 1| = {worst:.2e}"),
    );
}

/// Criterion 3: exponential decay bound with c = 1/24 on the free 61 x 61
/// box at z = 4.5 (delta = 0.5), 100% of interior pairs, within 120 s.
#[test]
fn criterion_03_combes_thomas_2d() {
    let _lock = HEAVY.lock().unwrap();
    let start = Instant::now();
    let b = LatticeBox::centered(2, 30).unwrap(); // 61 x 61
    let h = assemble(&b, &PotentialSpec::zero(2)).unwrap();
    let z = Complex64::new(4.5, 0.0);
    let delta = spectral_distance(&h, z, None).unwrap();
    assert!((delta - 0.5).abs() < 1e-12);
    let rep = combes_thomas_check(&h, z, &[0, 0], delta, 1e-10).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let c_expected = 1.0 / 24.0;
    report(
        "criterion 3 (exponential Green decay, d=2)",
        rep.violations.is_empty()
            && (rep.c_used - c_expected).abs() < 1e-15
            && rep.fitted_rate >= rep.c_used * delta
            && elapsed <= 120.0,
        &format!(
            "violations {}, fitted rate {:.3} vs bound rate {:.4}, {elapsed:.1} s",
            rep.violations.len(),
            rep.fitted_rate,
            rep.c_used * delta
        ),
    );
}

/// Criterion 4: twenty random trimmed plane waves in d = 3 have interior
/// residual <= 1e-10 and vanish on the sublattice to 1e-14.
#[test]
fn criterion_04_trimmed_wave_validity() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut max_residual: f64 = 0.0;
    let mut max_on_gamma: f64 = 0.0;
    for case in 0..20u64 {
        let d1 = rng.gen_range(1..=3usize);
        let d2 = 3 - d1;
        let rho: Vec<i64> = (0..d1).map(|_| rng.gen_range(2..=5i64)).collect();
        let pattern = TrimPattern::trimmed(rho.clone(), d2).unwrap();
        let k: Vec<i64> = rho.iter().map(|&p| rng.gen_range(1..p)).collect();
        let kappa: Vec<f64> = (0..d2).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let wave = make_trimmed_wave(&pattern, &k, &kappa).unwrap();
        let b = LatticeBox::centered(3, 7).unwrap();
        let pot = PotentialSpec::iid_uniform(5.0, 7000 + case, 0, pattern.clone()).unwrap();
        let h = assemble(&b, &pot).unwrap();
        max_residual = max_residual.max(validate_generalized_eigenfunction(&h, &wave, wave.energy()));
        for site in box_sites(&b) {
            if latticeq::lattice::gamma_contains(&pattern, &site) {
                max_on_gamma = max_on_gamma.max(wave.value(&site).norm());
            }
        }
    }
    report(
        "criterion 4 (trimmed eigenfunction validity, 20 configs)",
        max_residual <= 1e-10 && max_on_gamma <= 1e-14,
        &format!("max residual {max_residual:.2e}, max |psi| on sublattice {max_on_gamma:.2e}"),
    );
}

/// Tabulated composite wave: sine factor times a transverse solution
/// cached on the free-axes plane.
struct CompositeWave {
    rho: i64,
    k: i64,
    table: latticeq::eigenfunctions::TabulatedWave,
}

impl Evaluator for CompositeWave {
    fn value(&self, site: &[i64]) -> Complex64 {
        let s = trimmed_sine_factor(self.k, self.rho, site[0]);
        if s == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        s * self.table.value(&site[1..])
    }
}

fn composite_wave(free_energy: f64, resolution: usize, plane_half: i64) -> (CompositeWave, f64) {
    let pattern = TrimPattern::trimmed(vec![2], 2).unwrap();
    let wave = make_trimmed_transverse_wave(&pattern, &[1], free_energy, resolution).unwrap();
    let energy = wave.energy();
    let plane = Grid::new(vec![-plane_half, -plane_half], vec![plane_half, plane_half]).unwrap();
    let table = tabulate(wave.transverse(), &plane);
    (CompositeWave { rho: 2, k: 1, table }, energy)
}

/// Criterion 5: fitted growth exponent nu within 0.1 of d1 + 1 - q for
/// q in {1.25, 1.5, 1.75} on boxes up to L = 200 (d = 3, rho = (2)).
#[test]
fn criterion_05_growth_profile_exponents() {
    let _lock = HEAVY.lock().unwrap();
    let (wave, _energy) = composite_wave(0.5, 256, 202);
    let base = vec![1i64, 0, 0];
    let mut detail = String::new();
    let mut ok = true;
    for q in [1.25, 1.5, 1.75] {
        let weight = GrowthWeight::power(q, base.clone()).unwrap();
        let profile = growth_profile(&wave, &weight, &base, 200).unwrap();
        let expected = 2.0 - q;
        let err = (profile.fitted_nu - expected).abs();
        ok &= err <= 0.1;
        detail.push_str(&format!(
            "q={q}: nu {:.3} (expect {expected:.2}, residual {:.3}); ",
            profile.fitted_nu, profile.fit_residual
        ));
    }
    report("criterion 5 (growth profile exponents)", ok, detail.trim_end());
}

/// Criterion 6: the measured weighted resolvent sum exceeds the
/// certificate bound at eps in {0.1, 0.05, 0.025}, alpha = 1.05, on the
/// trimmed model with disorder width 4.
#[test]
fn criterion_06_resolvent_lower_bound() {
    let _lock = HEAVY.lock().unwrap();
    let (wave, energy) = composite_wave(0.5, 128, 122);
    let base = vec![1i64, 0, 0];
    let q = 3.0; // d1 + 2: bounded weighted sums, nu ~ 0
    let weight = GrowthWeight::power(q, base.clone()).unwrap();
    let profile = growth_profile(&wave, &weight, &base, 120).unwrap();
    let psi0 = wave.value(&base).norm();
    let cert = delocalization_certificate(&profile, psi0, 1.05).unwrap();

    let pattern = TrimPattern::trimmed(vec![2], 2).unwrap();
    let boxref = LatticeBox::new(base.clone(), 51).unwrap();
    let pot = PotentialSpec::iid_uniform(4.0, 606, 0, pattern).unwrap();
    let h = assemble(&boxref, &pot).unwrap();
    let residual = validate_generalized_eigenfunction(&h, &wave, energy);
    assert!(residual < 1e-9, "wave residual {residual}");

    let opts = trusted(|o| o.solve_tol = 1e-6);
    let mut ok = true;
    let mut detail = format!("nu {:.3}, A {:.2}; ", cert.nu, cert.a);
    for eps in [0.1, 0.05, 0.025] {
        let check =
            resolvent_lower_bound_check(&h, &weight, &wave, energy, &base, &cert, eps, &opts)
                .unwrap();
        ok &= check.ok;
        detail.push_str(&format!(
            "eps={eps}: lhs {:.3e} vs rhs {:.3e} (window {}); ",
            check.lhs, check.rhs, check.window_radius
        ));
    }
    report("criterion 6 (resolvent lower bound)", ok, detail.trim_end());
}

/// Criterion 7: trimmed model in d = 3 (rho = (2), W = 8, q = 3) shows
/// fitted moment slope >= 0.7 over T in [5, 50] for each of five
/// realizations, within 30 minutes total.
#[test]
fn criterion_07_dynamical_delocalization() {
    let _lock = HEAVY.lock().unwrap();
    let start = Instant::now();
    let pattern = TrimPattern::trimmed(vec![2], 2).unwrap();
    let base = vec![1i64, 0, 0];
    // box radius from the containment precondition: horizon
    // t* = 50 ln(1/0.5), per-axis wavefront speed 2, ring width 5
    let time_tol = 0.5f64;
    let t_star = 50.0 * (1.0 / time_tol).ln();
    let radius = 5 + (2.0 * t_star).ceil() as i64 + 1;
    let boxref = LatticeBox::new(base.clone(), radius).unwrap();
    let weight = GrowthWeight::power(3.0, base.clone()).unwrap();
    let t_grid: Vec<f64> = (0..8)
        .map(|i| 5.0 * (50.0f64 / 5.0).powf(i as f64 / 7.0))
        .collect();
    let opts = MomentOptions {
        time_tol,
        evolve_tol: 1e-6,
        time_quad_rel: 0.08,
        containment: Containment::Enforce,
        wavefront_speed: Some(2.0),
        ..Default::default()
    };
    let mut ok = true;
    let mut detail = format!("box radius {radius}; slopes: ");
    for realization in 0..5u64 {
        let pot = PotentialSpec::iid_uniform(8.0, 707, realization, pattern.clone()).unwrap();
        let h = assemble(&boxref, &pot).unwrap();
        let series = moment_series(&h, &weight, &base, &t_grid, Route::Abel, &opts).unwrap();
        let vals: Vec<f64> = series.values.iter().map(|v| v.value).collect();
        let fit = fit_transport_exponent(&t_grid, &vals, (5.0, 50.0)).unwrap();
        ok &= fit.slope >= 0.7;
        detail.push_str(&format!("{:.2} ", fit.slope));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed <= 1800.0;
    detail.push_str(&format!("({elapsed:.0} s)"));
    report("criterion 7 (dynamical delocalization, d=3 trimmed)", ok, &detail);
}

/// Criterion 8: the fully disordered chain at W = 10 shows fitted slope
/// <= 0.1 over T in [50, 500] for each of five realizations.
#[test]
fn criterion_08_localization_contrast() {
    let _lock = HEAVY.lock().unwrap();
    let boxref = LatticeBox::centered(1, 1000).unwrap(); // 2001 sites
    let weight = GrowthWeight::power(2.0, vec![0]).unwrap();
    let t_grid: Vec<f64> = (0..8)
        .map(|i| 50.0 * (500.0f64 / 50.0).powf(i as f64 / 7.0))
        .collect();
    let opts = MomentOptions {
        time_tol: 1e-3,
        time_quad_rel: 0.02,
        containment: Containment::Enforce,
        ..Default::default()
    };
    let mut ok = true;
    let mut detail = String::from("slopes: ");
    for realization in 0..5u64 {
        let pot =
            PotentialSpec::iid_uniform(10.0, 808, realization, TrimPattern::full(1)).unwrap();
        let h = assemble(&boxref, &pot).unwrap();
        let series = moment_series(&h, &weight, &[0], &t_grid, Route::Abel, &opts).unwrap();
        let vals: Vec<f64> = series.values.iter().map(|v| v.value).collect();
        let fit = fit_transport_exponent(&t_grid, &vals, (50.0, 500.0)).unwrap();
        ok &= fit.slope <= 0.1;
        detail.push_str(&format!("{:.3} ", fit.slope));
    }
    report("criterion 8 (1-d localization contrast)", ok, detail.trim_end());
}

/// Criterion 9: the transfer-matrix solution at E = 2.5 outside the free
/// spectrum satisfies the enlarged-shell growth bound for L in [5, 40].
#[test]
fn criterion_09_outside_spectrum_growth() {
    let e = 2.5;
    let delta = 0.5;
    let sol = symmetric_free_solution_1d(e, 45);
    // validated first: exact solution of the free recurrence
    let b = LatticeBox::centered(1, 44).unwrap();
    let h = assemble(&b, &PotentialSpec::zero(1)).unwrap();
    let residual = validate_generalized_eigenfunction(&h, &sol, e);
    let scale: f64 = (0..=44).map(|n| sol.value(&[n]).norm()).fold(0.0, f64::max);
    assert!(residual <= 1e-12 * scale);
    let rep = boundary_growth_check(&sol, e, delta, 1, &[0], 5..=40).unwrap();
    let all_ok = rep.rows.iter().all(|r| r.ok);
    let min_margin = rep
        .rows
        .iter()
        .map(|r| r.ratio / r.threshold)
        .fold(f64::INFINITY, f64::min);
    report(
        "criterion 9 (outside-spectrum growth)",
        all_ok,
        &format!("all L in [5,40], min ratio/threshold {min_margin:.2e}"),
    );
}

/// Criterion 10: the Borel product inequality holds at every grid node for
/// the two listed constructions.
#[test]
fn criterion_10_borel_scaling_grid() {
    let gammas = [0.3, 0.5, 0.7];
    let alphas = [1.1, 1.5];
    let epsilons = [0.1, 0.05, 0.02];

    // construction (a): free chain at E = 0, plane-wave real part shifted
    // so |psi| = 1 everywhere and psi(0) = 1
    let b = LatticeBox::centered(1, 2000).unwrap();
    let h = assemble(&b, &PotentialSpec::zero(1)).unwrap();
    let wave_a = |site: &[i64]| {
        Complex64::new(
            (2.0f64).sqrt() * (PI * site[0] as f64 / 2.0 - PI / 4.0).cos(),
            0.0,
        )
    };
    let rep_a =
        borel_scaling_check(&h, &wave_a, 0.0, &[0], &gammas, &alphas, &epsilons, 1e-10).unwrap();
    let ok_a = rep_a.rows.iter().all(|r| r.ok);
    let margin_a = rep_a
        .rows
        .iter()
        .map(|r| r.product_margin)
        .fold(f64::INFINITY, f64::min);

    // construction (b): l2 bound state of a potential well, probed at an
    // exact finite-box eigenvalue
    let bw = LatticeBox::centered(1, 500).unwrap();
    let mut well = BTreeMap::new();
    for n in -2..=2i64 {
        well.insert(vec![n], -3.0);
    }
    let pot = PotentialSpec::table(well, TrimPattern::full(1)).unwrap();
    let hw = assemble(&bw, &pot).unwrap();
    let eig = dense_eig(&hw, 6000).unwrap();
    let e0 = eig.values[0];
    assert!(e0 < -4.0, "ground state {e0} should sit below the free band");
    let ground: Vec<f64> = eig.vectors.column(0).iter().copied().collect();
    let grid = hw.grid().clone();
    let wave_b = move |site: &[i64]| match grid.index_of(site) {
        Some(i) => Complex64::new(ground[i], 0.0),
        None => Complex64::new(0.0, 0.0),
    };
    let rep_b =
        borel_scaling_check(&hw, &wave_b, e0, &[0], &gammas, &alphas, &epsilons, 1e-10).unwrap();
    let ok_b = rep_b.rows.iter().all(|r| r.ok);
    // part (2) trend: eps^{1-gamma} Im G stays bounded away from zero for
    // the l2 eigenfunction (Im G ~ |psi(n)|^2 / eps at the eigenvalue)
    let trend_ok = rep_b
        .rows
        .iter()
        .filter(|r| (r.gamma - 0.5).abs() < 1e-12 && (r.alpha - 1.1).abs() < 1e-12)
        .all(|r| r.eps.powf(1.0 - r.gamma) * r.im_g > 0.1 * rep_b.psi_sq);

    report(
        "criterion 10 (Borel scaling grid)",
        ok_a && ok_b && trend_ok,
        &format!(
            "free wave min margin {margin_a:.3}, bound state all nodes {}, trend {}",
            ok_b, trend_ok
        ),
    );
}

/// Criterion 11: Cesàro <= e * Abel on every tested system; the misprinted
/// 1/e form is logged as the documented discrepancy.
#[test]
fn criterion_11_abel_cesaro_comparison() {
    let opts = trusted(|o| o.time_quad_rel = 1e-5);
    let mut cases: Vec<(SparseHamiltonian, GrowthWeight, f64)> = Vec::new();
    // two-site oscillator with the table weight
    let h2 = SparseHamiltonian::on_range(vec![0], vec![1], vec![0.0, 0.0]).unwrap();
    let mut tv = BTreeMap::new();
    tv.insert(vec![0], 0.0);
    tv.insert(vec![1], 1.0);
    cases.push((h2, GrowthWeight::table(tv, 2.0, 0.5).unwrap(), 4.0));
    // disordered chains and a 2-d block, power and constant weights
    for (seed, t) in [(1u64, 1.0f64), (2, 3.0), (3, 8.0)] {
        let b = LatticeBox::centered(1, 30).unwrap();
        let p = PotentialSpec::iid_uniform(3.0, seed, 0, TrimPattern::full(1)).unwrap();
        let h = assemble(&b, &p).unwrap();
        cases.push((h, GrowthWeight::power(2.0, vec![0]).unwrap(), t));
    }
    for seed in [4u64, 5] {
        let b = LatticeBox::centered(2, 5).unwrap();
        let p = PotentialSpec::iid_uniform(2.0, seed, 0, TrimPattern::full(2)).unwrap();
        let h = assemble(&b, &p).unwrap();
        cases.push((h, GrowthWeight::constant_one(), 5.0));
    }
    // trimmed chain
    let bt = LatticeBox::centered(1, 40).unwrap();
    let pat = TrimPattern::trimmed(vec![2], 0).unwrap();
    let pt = PotentialSpec::iid_uniform(4.0, 6, 0, pat).unwrap();
    let ht = assemble(&bt, &pt).unwrap();
    cases.push((ht, GrowthWeight::power(1.5, vec![0]).unwrap(), 6.0));

    let mut ok = true;
    let mut printed_form_violated = false;
    let mut worst_ratio: f64 = 0.0;
    for (i, (h, w, t)) in cases.iter().enumerate() {
        let base = vec![0i64; h.dim()];
        let a = abel_moment(h, w, &base, *t, &opts).unwrap();
        let c = cesaro_moment(h, w, &base, *t, &opts).unwrap();
        let slack = 3.0 * (a.quad_err + c.quad_err);
        ok &= c.value <= std::f64::consts::E * a.value + slack;
        if c.value > a.value / std::f64::consts::E + slack {
            printed_form_violated = true;
        }
        if a.value > 0.0 {
            worst_ratio = worst_ratio.max(c.value / a.value);
        }
        let _ = i;
    }
    if printed_form_violated {
        println!(
            "[acceptance] criterion 11 note: the 1/e-form comparison constant is violated \
             on these systems, as documented; the derivable constant e holds"
        );
    }
    report(
        "criterion 11 (Cesaro <= e * Abel)",
        ok && printed_form_violated,
        &format!("max Cesaro/Abel ratio {worst_ratio:.3} <= e"),
    );
}

/// Criterion 12a: propagator unitarity and composition on 100 random
/// small systems.
#[test]
fn criterion_12a_propagator_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(1201);
    let tol = 1e-9;
    let mut worst_norm: f64 = 0.0;
    let mut worst_comp: f64 = 0.0;
    for case in 0..100u64 {
        let d = 1 + (case % 2) as usize;
        let l = if d == 1 { rng.gen_range(8..40i64) } else { rng.gen_range(2..6i64) };
        let width = rng.gen_range(0.5..6.0);
        let b = LatticeBox::centered(d, l).unwrap();
        let p = PotentialSpec::iid_uniform(width, 9000 + case, 0, TrimPattern::full(d)).unwrap();
        let h = assemble(&b, &p).unwrap();
        let n = h.site_count();
        let data: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let psi0 = WaveState::new(h.grid().clone(), data);
        let norm0 = psi0.norm();
        let t1 = rng.gen_range(0.3..2.5);
        let t2 = rng.gen_range(0.3..2.5);
        let once = evolve(&h, &psi0, t1 + t2, tol).unwrap();
        worst_norm = worst_norm.max((once.norm() - norm0).abs() / norm0);
        let mid = evolve(&h, &psi0, t1, tol).unwrap();
        let twice = evolve(&h, &mid, t2, tol).unwrap();
        let diff: f64 = once
            .data
            .iter()
            .zip(&twice.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst_comp = worst_comp.max(diff / norm0);
    }
    report(
        "criterion 12a (unitarity and composition, 100 cases)",
        worst_norm <= 1e-9 && worst_comp <= 2.0 * tol,
        &format!("max norm drift {worst_norm:.2e}, max composition gap {worst_comp:.2e}"),
    );
}

/// Criterion 12b: remainder support and l1 bound on 100 random evaluators.
#[test]
fn criterion_12b_remainder_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(1202);
    for case in 0..100usize {
        let d = 1 + case % 3;
        let l = rng.gen_range(2..5i64);
        let b = LatticeBox::centered(d, l).unwrap();
        let big = LatticeBox::centered(d, l + 1).unwrap();
        let table: BTreeMap<Vec<i64>, Complex64> = box_sites(&big)
            .into_iter()
            .map(|s| (s, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let psi = |site: &[i64]| table.get(site).copied().unwrap_or_default();
        let r = commutator_remainder(&psi, &b);
        for (site, _) in &r {
            let dist = b.sup_dist(site);
            assert!(dist == l || dist == l + 1, "support violation at {site:?}");
        }
        let r_mass: f64 = r.iter().map(|(_, v)| v.norm()).sum();
        let mut shell_mass = 0.0;
        for rad in [l, l + 1] {
            for_each_sphere_site(b.center(), rad, |s| shell_mass += psi(s).norm());
        }
        assert!(r_mass <= d as f64 * shell_mass + 1e-12);
    }
    report("criterion 12b (remainder support and l1 bound, 100 cases)", true, "all held");
}

/// Criterion 12c: eigen-relation reconstruction through the resolvent on
/// 100 random validated waves.
#[test]
fn criterion_12c_eigen_relation_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(1203);
    let mut worst: f64 = 0.0;
    for case in 0..100u64 {
        let d = 1 + (case % 2) as usize;
        let (big_l, chi_l) = if d == 1 { (24i64, 16i64) } else { (8, 5) };
        let big = LatticeBox::centered(d, big_l).unwrap();
        let pattern = TrimPattern::trimmed(vec![rng.gen_range(2..4i64)], d - 1).unwrap();
        let pot =
            PotentialSpec::iid_uniform(3.0, 12000 + case, 0, pattern.clone()).unwrap();
        let h = assemble(&big, &pot).unwrap();
        let rho0 = pattern.rho()[0];
        let k = rng.gen_range(1..rho0);
        let kappa: Vec<f64> = (0..d - 1).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let wave = make_trimmed_wave(&pattern, &[k], &kappa).unwrap();
        let e = wave.energy();
        let z = Complex64::new(e, rng.gen_range(0.2..0.6));
        let n = h.site_count();
        let small = LatticeBox::centered(d, chi_l).unwrap();
        let mut chi_psi = vec![Complex64::default(); n];
        for i in 0..n {
            let site = h.grid().site_at(i);
            if small.sup_dist(&site) <= chi_l {
                chi_psi[i] = wave.value(&site);
            }
        }
        let (g_chi, _) = resolvent_apply(&h, z, &chi_psi, 1e-11).unwrap();
        let mut r_vec = vec![Complex64::default(); n];
        for (site, v) in commutator_remainder(&wave, &small) {
            if let Some(i) = h.grid().index_of(&site) {
                r_vec[i] = v;
            }
        }
        let (g_r, _) = resolvent_apply(&h, z, &r_vec, 1e-11).unwrap();
        for i in 0..n {
            let site = h.grid().site_at(i);
            if small.sup_dist(&site) <= chi_l - 1 {
                let recon = (Complex64::new(e, 0.0) - z) * g_chi[i] + g_r[i];
                worst = worst.max((recon - wave.value(&site)).norm());
            }
        }
    }
    report(
        "criterion 12c (eigen-relation reconstruction, 100 cases)",
        worst <= 1e-8,
        &format!("max reconstruction error {worst:.2e}"),
    );
}

/// Criterion 12d: Green columns match the dense spectral sum on 100
/// random dense-capable systems.
#[test]
fn criterion_12d_green_eig_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(1204);
    let mut worst: f64 = 0.0;
    for case in 0..100u64 {
        let d = 1 + (case % 2) as usize;
        let l = if d == 1 { rng.gen_range(10..60i64) } else { rng.gen_range(2..5i64) };
        let b = LatticeBox::centered(d, l).unwrap();
        let p = PotentialSpec::iid_uniform(
            rng.gen_range(0.5..5.0),
            15000 + case,
            0,
            TrimPattern::full(d),
        )
        .unwrap();
        let h = assemble(&b, &p).unwrap();
        let eig = dense_eig(&h, 6000).unwrap();
        let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.05..0.5));
        let src = vec![0i64; d];
        let col = green_column(&h, z, &src, 1e-11).unwrap();
        let i0 = h.grid().index_of(&src).unwrap();
        // compare on a deterministic subsample of sites
        for i in (0..h.site_count()).step_by(7) {
            let mut s = Complex64::default();
            for j in 0..h.site_count() {
                let vj = eig.vectors.column(j);
                s += vj[i] * vj[i0] / (Complex64::new(eig.values[j], 0.0) - z);
            }
            worst = worst.max((s - col.values[i]).norm());
        }
    }
    report(
        "criterion 12d (Green/eig consistency, 100 cases)",
        worst <= 1e-8,
        &format!("max entry difference {worst:.2e}"),
    );
}
