//! Inequality verifiers: exponential off-spectrum decay of Green's
//! functions, Borel-transform scaling of the diagonal resolvent against
//! local eigenfunction mass, and the localization/delocalization contrast
//! between trimmed and fully disordered models.

use num_complex::Complex64;

use crate::eigenfunctions::Evaluator;
use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, TrimPattern};
use crate::numerics::{dense_eig, green_column_with, GreenOptions};
use crate::operator::{assemble, PotentialSpec, SparseHamiltonian};
use crate::par;
use crate::transport::{
    fit_transport_exponent, moment_series, GrowthWeight, MomentOptions, Route,
};

/// Distance from a (possibly complex) shift to the spectrum: exact via
/// dense diagonalization below the cap, otherwise the conservative
/// distance to the spectral window.
pub fn spectral_distance(h: &SparseHamiltonian, z: Complex64, dense_cap: Option<usize>) -> Result<f64> {
    if let Some(cap) = dense_cap {
        if h.site_count() <= cap {
            let eig = dense_eig(h, cap)?;
            return Ok(eig
                .values
                .iter()
                .map(|&l| (Complex64::new(l, 0.0) - z).norm())
                .fold(f64::INFINITY, f64::min));
        }
    }
    let (lo, hi) = h.spectrum_window();
    let dx = if z.re < lo {
        lo - z.re
    } else if z.re > hi {
        z.re - hi
    } else {
        0.0
    };
    Ok((dx * dx + z.im * z.im).sqrt())
}

/// Exponential-decay report for one resolvent column.
#[derive(Debug, Clone)]
pub struct CombesThomasReport {
    pub z: Complex64,
    pub delta: f64,
    pub c_used: f64,
    /// (sup-distance, max |G| over interior sites at that distance, threshold)
    pub per_distance: Vec<(i64, f64, f64)>,
    /// least-squares decay rate of max |G| on the interior distances
    pub fitted_rate: f64,
    /// interior sites violating the bound (empty when the estimate holds)
    pub violations: Vec<Vec<i64>>,
    /// sites this close to the box boundary are excluded from the fit
    pub interior_margin: i64,
}

/// Check |G_z(n0, m)| <= (2/delta) e^{-c delta |n0 - m|} with
/// c = 1/(12 d max(1, delta)) over the interior of the box.
pub fn combes_thomas_check(
    h: &SparseHamiltonian,
    z: Complex64,
    n0: &[i64],
    delta: f64,
    solve_tol: f64,
) -> Result<CombesThomasReport> {
    if !(delta > 0.0) {
        return Err(Error::domain(format!(
            "shift must be separated from the spectrum; got distance {delta}"
        )));
    }
    let d = h.dim();
    let c = 1.0 / (12.0 * d as f64 * delta.max(1.0));
    let col = green_column_with(h, z, n0, solve_tol, &GreenOptions::default())?;
    // worst-case entrywise error of the column from the solve residual
    let slack = col.residual_norm / delta + 1e-14;

    let grid = h.grid();
    let interior_margin = 3i64;
    let mut max_dist = 0i64;
    for a in 0..d {
        max_dist = max_dist.max((n0[a] - grid.lo()[a]).max(grid.hi()[a] - n0[a]));
    }
    let mut per_distance: Vec<(i64, f64, f64)> = Vec::new();
    let mut violations = Vec::new();
    let mut by_dist: Vec<f64> = vec![-1.0; (max_dist + 1) as usize];
    for i in 0..grid.len() {
        let site = grid.site_at(i);
        let interior = (0..d).all(|a| {
            site[a] - grid.lo()[a] >= interior_margin && grid.hi()[a] - site[a] >= interior_margin
        });
        if !interior {
            continue;
        }
        let s: i64 = site
            .iter()
            .zip(n0)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0);
        let g = col.values[i].norm();
        if g > by_dist[s as usize] {
            by_dist[s as usize] = g;
        }
        let threshold = 2.0 / delta * (-c * delta * s as f64).exp();
        if g > threshold + slack {
            violations.push(site);
        }
    }
    let mut fit_pts = Vec::new();
    for (s, &g) in by_dist.iter().enumerate() {
        if g < 0.0 {
            continue;
        }
        let threshold = 2.0 / delta * (-c * delta * s as f64).exp();
        per_distance.push((s as i64, g, threshold));
        if s >= 1 && g > 1e-13 {
            fit_pts.push((s as f64, -(g.ln())));
        }
    }
    let fitted_rate = if fit_pts.len() >= 3 {
        crate::eigenfunctions::least_squares(&fit_pts).0
    } else {
        f64::NAN
    };
    Ok(CombesThomasReport {
        z,
        delta,
        c_used: c,
        per_distance,
        fitted_rate,
        violations,
        interior_margin,
    })
}

/// One grid node of the Borel scaling check.
#[derive(Debug, Clone)]
pub struct BorelRow {
    pub gamma: f64,
    pub alpha: f64,
    pub eps: f64,
    pub window_radius: i64,
    /// Im G_{E + i eps}(n, n); positive by the Herglotz property
    pub im_g: f64,
    /// eps^gamma Im G
    pub lhs_factor: f64,
    /// eps^{1-gamma} sum of |psi|^2 over the window
    pub rhs_factor: f64,
    /// lhs_factor * rhs_factor - |psi(n)|^2
    pub product_margin: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct BorelScalingReport {
    pub site: Vec<i64>,
    pub energy: f64,
    pub psi_sq: f64,
    pub rows: Vec<BorelRow>,
}

/// Verify |psi(n)|^2 <= [eps^g Im G(n,n)] [eps^{1-g} sum_{|m-n| <= floor(eps^{-a})} |psi(m)|^2]
/// over the requested gamma, alpha, eps grids.
pub fn borel_scaling_check(
    h: &SparseHamiltonian,
    eval: &dyn Evaluator,
    energy: f64,
    site: &[i64],
    gammas: &[f64],
    alphas: &[f64],
    epsilons: &[f64],
    solve_tol: f64,
) -> Result<BorelScalingReport> {
    let psi_sq = eval.value(site).norm_sqr();
    if psi_sq == 0.0 {
        return Err(Error::domain("the evaluator must not vanish at the probe site"));
    }
    let grid = h.grid();
    let idx = grid
        .index_of(site)
        .ok_or_else(|| Error::config(format!("probe site {site:?} is outside the box")))?;
    // the largest window must fit the box
    let eps_min = epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let alpha_max = alphas.iter().copied().fold(0.0f64, f64::max);
    let needed = eps_min.powf(-alpha_max).floor() as i64;
    let fit = (0..grid.dim())
        .map(|a| (site[a] - grid.lo()[a]).min(grid.hi()[a] - site[a]))
        .min()
        .unwrap_or(0);
    if needed > fit {
        return Err(Error::config(format!(
            "window radius {needed} at the smallest eps exceeds the box margin {fit}"
        )));
    }

    // diagonal Green values, one solve per eps
    let mut diag_g = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let col = green_column_with(
            h,
            Complex64::new(energy, eps),
            site,
            solve_tol,
            &GreenOptions::default(),
        )?;
        diag_g.push((eps, col.values[idx], col.residual_norm));
    }

    // cumulative window sums of |psi|^2 by sup radius
    let window_sums: Vec<f64> = {
        let sums = par::map_indexed((needed + 1) as usize, |r| {
            let mut s = 0.0;
            crate::lattice::for_each_sphere_site(site, r as i64, |m| {
                s += eval.value(m).norm_sqr();
            });
            s
        });
        sums.iter()
            .scan(0.0, |acc, &s| {
                *acc += s;
                Some(*acc)
            })
            .collect()
    };

    let mut rows = Vec::new();
    for &(eps, g, res) in &diag_g {
        let im_g = g.im;
        if im_g <= 0.0 {
            return Err(Error::Numeric {
                what: "borel scaling",
                details: format!("Im G = {im_g} at eps = {eps} violates the Herglotz property"),
            });
        }
        for &alpha in alphas {
            let window_radius = eps.powf(-alpha).floor() as i64;
            let psi_window = window_sums[window_radius as usize];
            for &gamma in gammas {
                let lhs_factor = eps.powf(gamma) * im_g;
                let rhs_factor = eps.powf(1.0 - gamma) * psi_window;
                let product = lhs_factor * rhs_factor;
                // solver slack: first-order effect of the residual on Im G
                let slack = 2.0 * res * eps * psi_window + 1e-13 * psi_sq;
                rows.push(BorelRow {
                    gamma,
                    alpha,
                    eps,
                    window_radius,
                    im_g,
                    lhs_factor,
                    rhs_factor,
                    product_margin: product - psi_sq,
                    ok: product + slack >= psi_sq,
                });
            }
        }
    }
    Ok(BorelScalingReport { site: site.to_vec(), energy, psi_sq, rows })
}

/// Model entry of the contrast experiment.
#[derive(Debug, Clone)]
pub struct ContrastModel {
    pub label: String,
    pub boxref: LatticeBox,
    pub pattern: TrimPattern,
    pub disorder_width: f64,
    pub seed: u64,
    pub base: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct ContrastRow {
    pub label: String,
    pub realization: u64,
    pub slope: f64,
    pub fit_residual: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ContrastReport {
    pub q: f64,
    pub t_grid: Vec<f64>,
    pub rows: Vec<ContrastRow>,
    pub delocalized_threshold: f64,
    pub localized_threshold: f64,
    /// every trimmed-model realization cleared the delocalization threshold
    pub trimmed_delocalized: bool,
    /// every full-disorder realization stayed below the localization threshold
    pub reference_localized: bool,
}

/// Fit per-realization transport exponents for a trimmed model and a
/// fully disordered reference, and flag the expected contrast.
#[allow(clippy::too_many_arguments)]
pub fn localization_contrast_report(
    trimmed: &ContrastModel,
    reference: &ContrastModel,
    q: f64,
    t_grid: &[f64],
    realizations: u64,
    thresholds: (f64, f64),
    fit_window: (f64, f64),
    opts: &MomentOptions,
) -> Result<ContrastReport> {
    let mut rows = Vec::new();
    for model in [trimmed, reference] {
        let weight = GrowthWeight::power(q, model.base.clone())?;
        for r in 0..realizations {
            let pot = PotentialSpec::iid_uniform(
                model.disorder_width,
                model.seed,
                r,
                model.pattern.clone(),
            )?;
            let h = assemble(&model.boxref, &pot)?;
            let series = moment_series(&h, &weight, &model.base, t_grid, Route::Abel, opts)?;
            let vals: Vec<f64> = series.values.iter().map(|v| v.value).collect();
            let fit = fit_transport_exponent(t_grid, &vals, fit_window)?;
            rows.push(ContrastRow {
                label: model.label.clone(),
                realization: r,
                slope: fit.slope,
                fit_residual: fit.residual,
                values: vals,
            });
        }
    }
    let (deloc, loc) = thresholds;
    let trimmed_delocalized = rows
        .iter()
        .filter(|r| r.label == trimmed.label)
        .all(|r| r.slope >= deloc);
    let reference_localized = rows
        .iter()
        .filter(|r| r.label == reference.label)
        .all(|r| r.slope <= loc);
    Ok(ContrastReport {
        q,
        t_grid: t_grid.to_vec(),
        rows,
        delocalized_threshold: deloc,
        localized_threshold: loc,
        trimmed_delocalized,
        reference_localized,
    })
}
