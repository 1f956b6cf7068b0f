//! Transport moments in three formulations and their certificates.
//!
//! The Abel route damps the time average exponentially, the Cesàro route
//! averages over a flat window, and the resolvent route integrates
//! weighted Green's-function columns over the energy line at
//! eps = 1/(2T). On a finite box the Abel and resolvent formulations are
//! two exact routes to the same number, which makes their agreement a
//! strong end-to-end check. Each value carries two error fields: the
//! quadrature error of its own route, and the modeling error from
//! truncating the infinite lattice to a box (wavefront containment).

use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::eigenfunctions::{commutator_remainder, Evaluator, GrowthProfile};
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::numerics::quad::{gauss_legendre, simpson_with_error};
use crate::numerics::{green_column_with, GreenOptions, Propagator, WaveState};
use crate::operator::SparseHamiltonian;
use crate::par;

/// Weight function phi measuring spatial growth. `<m>` denotes
/// sqrt(1 + |m|^2) with the sup norm.
#[derive(Debug, Clone)]
pub enum GrowthWeight {
    /// phi(n) = <n - base>^q
    Power { q: f64, base: Vec<i64> },
    ConstantOne,
    /// Explicit table with a subexponential certificate
    /// phi(n) <= c * exp(|n|^beta); sites off the table read as 1.
    Table { values: BTreeMap<Vec<i64>, f64>, cert_c: f64, cert_beta: f64 },
}

impl GrowthWeight {
    pub fn power(q: f64, base: Vec<i64>) -> Result<Self> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::config(format!("weight exponent must be >= 0, got {q}")));
        }
        Ok(GrowthWeight::Power { q, base })
    }

    pub fn constant_one() -> Self {
        GrowthWeight::ConstantOne
    }

    pub fn table(values: BTreeMap<Vec<i64>, f64>, cert_c: f64, cert_beta: f64) -> Result<Self> {
        if !(cert_beta < 1.0) {
            return Err(Error::config(format!(
                "subexponential certificate requires beta < 1, got {cert_beta}"
            )));
        }
        if !(cert_c > 0.0) {
            return Err(Error::config("certificate constant must be positive"));
        }
        for (site, &v) in &values {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!("weight value {v} at {site:?} is invalid")));
            }
            let sup = site.iter().map(|c| c.abs()).max().unwrap_or(0) as f64;
            if v > cert_c * sup.powf(cert_beta).exp() * (1.0 + 1e-12) {
                return Err(Error::config(format!(
                    "table weight at {site:?} violates its subexponential certificate"
                )));
            }
        }
        Ok(GrowthWeight::Table { values, cert_c, cert_beta })
    }

    pub fn value(&self, site: &[i64]) -> f64 {
        match self {
            GrowthWeight::Power { q, base } => {
                let sup = site
                    .iter()
                    .zip(base)
                    .map(|(a, b)| (a - b).abs())
                    .max()
                    .unwrap_or(0) as f64;
                (1.0 + sup * sup).powf(q / 2.0)
            }
            GrowthWeight::ConstantOne => 1.0,
            GrowthWeight::Table { values, .. } => values.get(site).copied().unwrap_or(1.0),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GrowthWeight::Power { q, base } => format!("power(q={q}, base={base:?})"),
            GrowthWeight::ConstantOne => "constant_one".to_string(),
            GrowthWeight::Table { values, .. } => format!("table({} sites)", values.len()),
        }
    }

    /// Materialize on every site of a grid.
    pub fn on_grid(&self, grid: &crate::lattice::Grid) -> Vec<f64> {
        let g = grid.clone();
        par::map_indexed(grid.len(), move |i| self.value(&g.site_at(i)))
    }
}

/// Moment route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Abel,
    Cesaro,
    Resolvent,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Abel => "abel",
            Route::Cesaro => "cesaro",
            Route::Resolvent => "resolvent",
        }
    }
}

/// Whether the wavefront-containment precondition is enforced at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    /// Abort with the minimal safe radius when the boundary-ring mass
    /// exceeds the tolerance before the horizon.
    Enforce,
    /// Caller vouches that the finite system is the object of study
    /// (closed reference systems, oracle tests).
    Trusted,
}

#[derive(Debug, Clone)]
pub struct MomentOptions {
    /// Tail tolerance: horizon t* = T ln(1/time_tol) and the boundary-mass
    /// threshold of the containment check.
    pub time_tol: f64,
    /// Chebyshev propagation accuracy per step.
    pub evolve_tol: f64,
    /// Target relative quadrature error of the time routes; the recording
    /// step is halved until the Richardson estimate meets it.
    pub time_quad_rel: f64,
    /// Green-column residual tolerance of the resolvent route.
    pub solve_tol: f64,
    /// Target relative quadrature error of the energy integral.
    pub energy_quad_rel: f64,
    pub containment: Containment,
    /// Per-unit-time wavefront speed used for the suggested safe radius.
    pub wavefront_speed: Option<f64>,
    /// Initial recording step; `None` picks 2.5 / spectral width.
    pub dt: Option<f64>,
    pub dense_cap: usize,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            time_tol: 1e-6,
            evolve_tol: 1e-8,
            time_quad_rel: 1e-4,
            solve_tol: 1e-8,
            energy_quad_rel: 1e-4,
            containment: Containment::Enforce,
            wavefront_speed: None,
            dt: None,
            dense_cap: crate::numerics::DEFAULT_DENSE_CAP,
        }
    }
}

/// One moment value with its two error fields.
#[derive(Debug, Clone, Copy)]
pub struct MomentValue {
    pub value: f64,
    /// quadrature/truncation error of the route itself (comparable across
    /// routes on the same finite system)
    pub quad_err: f64,
    /// finite-box modeling error (containment leakage)
    pub model_err: f64,
}

/// Moment values over a T grid with provenance.
#[derive(Debug, Clone)]
pub struct MomentSeries {
    pub base: Vec<i64>,
    pub weight: GrowthWeight,
    pub t_grid: Vec<f64>,
    pub values: Vec<MomentValue>,
    pub route: Route,
    pub meta: MomentMeta,
}

#[derive(Debug, Clone, Default)]
pub struct MomentMeta {
    pub t_max: f64,
    pub dt: f64,
    pub energy_nodes: usize,
    pub box_radius: i64,
    pub boundary_mass_max: f64,
}

/// Time record of w(t) = <psi_t, phi(X) psi_t> on a uniform grid.
#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub dt: f64,
    pub values: Vec<f64>,
    pub phi_max: f64,
    pub boundary_mass_max: f64,
    pub containment_tol: f64,
}

impl EvolutionRecord {
    pub fn t_max(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }
}

/// Suggested minimal safe box radius for dynamics from a site at sup-norm
/// offset `base_offset` from the box center, up to time `t_star`.
pub fn minimal_safe_radius(base_offset: i64, t_star: f64, speed: f64) -> i64 {
    base_offset + 5 + (speed * t_star).ceil() as i64
}

/// Evolve delta_k and record the weighted observable on a uniform grid up
/// to `t_max`, monitoring the boundary-ring mass.
pub fn record_observable(
    h: &SparseHamiltonian,
    weight: &GrowthWeight,
    k: &[i64],
    t_max: f64,
    dt: f64,
    opts: &MomentOptions,
) -> Result<EvolutionRecord> {
    let grid = h.grid();
    let k_idx = grid
        .index_of(k)
        .ok_or_else(|| Error::config(format!("base site {k:?} is outside the box")))?;
    let phi = weight.on_grid(grid);
    let phi_max = phi.iter().fold(0.0f64, |m, &v| m.max(v));

    // boundary ring: sites within distance 5 of the grid boundary
    let ring: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            (0..grid.dim()).any(|a| {
                let c = grid.coord(i, a);
                c - grid.lo()[a] < 5 || grid.hi()[a] - c < 5
            })
        })
        .collect();
    let ring_is_everything = ring.len() == grid.len();

    let steps = (t_max / dt).ceil() as usize;
    let mut psi = WaveState::zero(grid.clone());
    psi.data[k_idx] = Complex64::new(1.0, 0.0);
    let mut prop = Propagator::new(h, opts.evolve_tol)?;

    let mut values = Vec::with_capacity(steps + 1);
    let mut boundary_mass_max = 0.0f64;
    for step in 0..=steps {
        let t = step as f64 * dt;
        if step > 0 {
            prop.step(&mut psi, dt)?;
        }
        let w: f64 = phi
            .iter()
            .zip(&psi.data)
            .map(|(p, a)| p * a.norm_sqr())
            .sum();
        values.push(w);
        if opts.containment == Containment::Enforce && !ring_is_everything {
            let mass: f64 = ring.iter().map(|&i| psi.data[i].norm_sqr()).sum();
            boundary_mass_max = boundary_mass_max.max(mass);
            if mass > opts.time_tol {
                let speed = opts
                    .wavefront_speed
                    .unwrap_or(2.0 * grid.dim() as f64);
                let base_offset = (0..grid.dim())
                    .map(|a| {
                        let mid = (grid.lo()[a] + grid.hi()[a]) / 2;
                        (k[a] - mid).abs()
                    })
                    .max()
                    .unwrap_or(0);
                return Err(Error::Containment {
                    t,
                    boundary_mass: mass,
                    tol: opts.time_tol,
                    minimal_safe_radius: minimal_safe_radius(base_offset, t_max, speed),
                });
            }
        }
    }
    Ok(EvolutionRecord {
        dt,
        values,
        phi_max,
        boundary_mass_max,
        containment_tol: opts.time_tol,
    })
}

/// Abel moment from a record:
/// (1/T) ∫_0^∞ e^{-t/T} w(t) dt, truncated at t* = T ln(1/time_tol) with a
/// constant-extension tail and its uncertainty folded into the error.
pub fn abel_from_record(rec: &EvolutionRecord, t: f64, time_tol: f64) -> Result<MomentValue> {
    let t_star = t * (1.0 / time_tol).ln();
    let idx = ((t_star / rec.dt).floor() as usize).min(rec.values.len() - 1);
    if (idx as f64) * rec.dt < t_star - rec.dt * 1.5 {
        return Err(Error::config(format!(
            "record reaches t = {:.2} but the horizon for T = {t} is {t_star:.2}",
            rec.t_max()
        )));
    }
    let t_end = idx as f64 * rec.dt;
    let samples: Vec<f64> = rec.values[..=idx]
        .iter()
        .enumerate()
        .map(|(i, &w)| (-(i as f64) * rec.dt / t).exp() * w / t)
        .collect();
    let (integral, qerr) = simpson_with_error(&samples, rec.dt);
    let damp_end = (-t_end / t).exp();
    let w_end = rec.values[idx];
    let tail = damp_end * w_end;
    // the true tail lies between 0 and phi_max; its distance to the
    // constant extension is bounded by the larger deviation
    let tail_err = damp_end * (rec.phi_max - w_end).max(w_end).max(0.0);
    let model_err = rec.boundary_mass_max * rec.phi_max;
    Ok(MomentValue { value: integral + tail, quad_err: qerr + tail_err, model_err })
}

/// Cesàro moment from a record: (1/T) ∫_0^T w(t) dt. The final partial
/// interval is handled by linear interpolation of the record.
pub fn cesaro_from_record(rec: &EvolutionRecord, t: f64) -> Result<MomentValue> {
    let idx = (t / rec.dt).floor() as usize;
    let frac = t / rec.dt - idx as f64;
    if idx + 1 >= rec.values.len() && frac > 1e-12 {
        return Err(Error::config(format!(
            "record reaches t = {:.2} but the Cesàro window needs {t}",
            rec.t_max()
        )));
    }
    if idx < 2 {
        return Err(Error::config("Cesàro window shorter than two recording steps"));
    }
    let (integral, qerr) = simpson_with_error(&rec.values[..=idx], rec.dt);
    let (partial, endpoint_err) = if frac > 1e-12 {
        let w0 = rec.values[idx];
        let w1 = rec.values[idx + 1];
        let wt = w0 + frac * (w1 - w0);
        let second = if idx >= 1 {
            (rec.values[idx + 1] - 2.0 * rec.values[idx] + rec.values[idx - 1]).abs()
        } else {
            (w1 - w0).abs()
        };
        (0.5 * (w0 + wt) * frac * rec.dt, second * rec.dt)
    } else {
        (0.0, 0.0)
    };
    let model_err = rec.boundary_mass_max * rec.phi_max;
    Ok(MomentValue {
        value: (integral + partial) / t,
        quad_err: (qerr + endpoint_err) / t,
        model_err,
    })
}

fn auto_dt(h: &SparseHamiltonian) -> f64 {
    let (lo, hi) = h.gershgorin_window();
    2.5 / (hi - lo).max(1e-6)
}

fn time_route_record(
    h: &SparseHamiltonian,
    weight: &GrowthWeight,
    k: &[i64],
    t_max: f64,
    dt_cap: f64,
    eval: impl Fn(&EvolutionRecord) -> Result<Vec<MomentValue>>,
    opts: &MomentOptions,
) -> Result<(EvolutionRecord, Vec<MomentValue>)> {
    if !(opts.time_tol > 0.0 && opts.time_tol < 1.0) {
        return Err(Error::config(format!(
            "time tolerance must be in (0,1), got {}",
            opts.time_tol
        )));
    }
    let mut dt = opts.dt.unwrap_or_else(|| auto_dt(h)).min(dt_cap);
    let mut rec = record_observable(h, weight, k, t_max, dt, opts)?;
    let mut vals = eval(&rec)?;
    for _ in 0..6 {
        let worst = vals
            .iter()
            .map(|v| v.quad_err / v.value.abs().max(1e-300))
            .fold(0.0f64, f64::max);
        if worst <= opts.time_quad_rel {
            break;
        }
        dt *= 0.5;
        rec = record_observable(h, weight, k, t_max, dt, opts)?;
        vals = eval(&rec)?;
    }
    Ok((rec, vals))
}

/// Abel-averaged moment at a single T.
pub fn abel_moment(
    h: &SparseHamiltonian,
    weight: &GrowthWeight,
    k: &[i64],
    t: f64,
    opts: &MomentOptions,
) -> Result<MomentValue> {
    let t_max = t * (1.0 / opts.time_tol).ln();
    let (_, vals) = time_route_record(
        h,
        weight,
        k,
        t_max,
        t_max / 12.0,
        |rec| Ok(vec![abel_from_record(rec, t, opts.time_tol)?]),
        opts,
    )?;
    Ok(vals[0])
}

/// Cesàro moment at a single T.
pub fn cesaro_moment(
    h: &SparseHamiltonian,
    weight: &GrowthWeight,
    k: &[i64],
    t: f64,
    opts: &MomentOptions,
) -> Result<MomentValue> {
    let (_, vals) = time_route_record(
        h,
        weight,
        k,
        t,
        t / 12.0,
        |rec| Ok(vec![cesaro_from_record(rec, t)?]),
        opts,
    )?;
    Ok(vals[0])
}

/// Weighted resolvent-column sum S(E) = Σ_n phi(n) |G_{E+i eps}(k, n)|^2.
fn weighted_column_sum(
    h: &SparseHamiltonian,
    phi: &[f64],
    k: &[i64],
    e: f64,
    eps: f64,
    opts: &MomentOptions,
) -> Result<f64> {
    let gopts = GreenOptions { dense_cap: opts.dense_cap, ..Default::default() };
    let col = green_column_with(h, Complex64::new(e, eps), k, opts.solve_tol, &gopts)
        .map_err(|err| match err {
            Error::Numeric { what, details } => Error::Numeric {
                what,
                details: format!("at E = {e}: {details}"),
            },
            other => other,
        })?;
    Ok(col
        .values
        .iter()
        .zip(phi)
        .map(|(g, p)| p * g.norm_sqr())
        .sum())
}

/// Moment via the resolvent identity:
/// (1/2 pi T) ∫_R Σ_n phi(n) |(H - E - i/(2T))^{-1}(k, n)|^2 dE,
/// integrated over the whole line through a tangent substitution with
/// panel-doubling Gauss–Legendre quadrature.
pub fn moment_via_resolvent(
    h: &SparseHamiltonian,
    weight: &GrowthWeight,
    k: &[i64],
    t: f64,
    opts: &MomentOptions,
) -> Result<MomentValue> {
    let eps = 1.0 / (2.0 * t);
    let phi = weight.on_grid(h.grid());
    let (lo, hi) = h.spectrum_window();
    let center = 0.5 * (lo + hi);
    let scale = 0.5 * (hi - lo) + 1.0;

    // E = center + scale * tan(u) maps u in (-pi/2, pi/2) onto the line;
    // the integrand decays like 1/E^2, so the u-integrand is bounded.
    let (gl_nodes, gl_weights) = gauss_legendre(12);
    let integrate = |panels: usize| -> Result<f64> {
        let width = std::f64::consts::PI / panels as f64;
        let mut nodes = Vec::with_capacity(panels * gl_nodes.len());
        for p in 0..panels {
            let ua = -std::f64::consts::FRAC_PI_2 + p as f64 * width;
            for (x, w) in gl_nodes.iter().zip(&gl_weights) {
                let u = ua + 0.5 * width * (x + 1.0);
                nodes.push((u, 0.5 * width * w));
            }
        }
        let parts = par::map_slice(&nodes, |&(u, w)| {
            let e = center + scale * u.tan();
            let sec2 = 1.0 / (u.cos() * u.cos());
            weighted_column_sum(h, &phi, k, e, eps, opts).map(|s| w * s * scale * sec2)
        });
        let mut total = 0.0;
        for p in parts {
            total += p?;
        }
        Ok(total / (2.0 * std::f64::consts::PI * t))
    };

    // panel count starts at the resonance-resolving scale and doubles
    // until the value stabilizes
    let mut panels = (((hi - lo) / eps / 10.0).ceil() as usize).clamp(8, 192);
    let mut prev = integrate(panels)?;
    let mut nodes_used = panels * gl_nodes.len();
    for _ in 0..5 {
        panels *= 2;
        let cur = integrate(panels)?;
        nodes_used += panels * gl_nodes.len();
        let err = (cur - prev).abs();
        if err <= opts.energy_quad_rel * cur.abs() {
            return Ok(MomentValue { value: cur, quad_err: err, model_err: 0.0 });
        }
        prev = cur;
    }
    let final_panels = panels * 2;
    let cur = integrate(final_panels)?;
    let err = (cur - prev).abs();
    let _ = nodes_used;
    Ok(MomentValue { value: cur, quad_err: err, model_err: 0.0 })
}

/// Moment series over a T grid; the time routes share one evolution record.
pub fn moment_series(
    h: &SparseHamiltonian,
    weight: &GrowthWeight,
    k: &[i64],
    t_grid: &[f64],
    route: Route,
    opts: &MomentOptions,
) -> Result<MomentSeries> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= 0.0 {
        return Err(Error::config("T grid must be positive and strictly ascending"));
    }
    let t_top = *t_grid.last().unwrap();
    let meta_radius = {
        let g = h.grid();
        (0..g.dim()).map(|a| (g.hi()[a] - g.lo()[a]) / 2).max().unwrap_or(0)
    };
    match route {
        Route::Abel | Route::Cesaro => {
            let horizon = match route {
                Route::Abel => t_top * (1.0 / opts.time_tol).ln(),
                _ => t_top,
            };
            let dt_cap = match route {
                Route::Abel => t_grid[0] * (1.0 / opts.time_tol).ln() / 12.0,
                _ => t_grid[0] / 12.0,
            };
            let (rec, values) = time_route_record(
                h,
                weight,
                k,
                horizon,
                dt_cap,
                |rec| {
                    t_grid
                        .iter()
                        .map(|&t| match route {
                            Route::Abel => abel_from_record(rec, t, opts.time_tol),
                            _ => cesaro_from_record(rec, t),
                        })
                        .collect()
                },
                opts,
            )?;
            Ok(MomentSeries {
                base: k.to_vec(),
                weight: weight.clone(),
                t_grid: t_grid.to_vec(),
                values,
                route,
                meta: MomentMeta {
                    t_max: rec.t_max(),
                    dt: rec.dt,
                    energy_nodes: 0,
                    box_radius: meta_radius,
                    boundary_mass_max: rec.boundary_mass_max,
                },
            })
        }
        Route::Resolvent => {
            let values: Result<Vec<MomentValue>> = t_grid
                .iter()
                .map(|&t| moment_via_resolvent(h, weight, k, t, opts))
                .collect();
            Ok(MomentSeries {
                base: k.to_vec(),
                weight: weight.clone(),
                t_grid: t_grid.to_vec(),
                values: values?,
                route,
                meta: MomentMeta {
                    t_max: 0.0,
                    dt: 0.0,
                    energy_nodes: 0,
                    box_radius: meta_radius,
                    boundary_mass_max: 0.0,
                },
            })
        }
    }
}

/// Least-squares exponent of a moment series over a T window.
#[derive(Debug, Clone, Copy)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub points: usize,
}

pub fn fit_transport_exponent(
    t_grid: &[f64],
    values: &[f64],
    window: (f64, f64),
) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= window.0 && t <= window.1)
        .map(|(&t, &v)| {
            if v <= 0.0 {
                Err(Error::domain(format!("nonpositive moment value {v} at T = {t}")))
            } else {
                Ok((t.ln(), v.ln()))
            }
        })
        .collect::<Result<_>>()?;
    if pts.len() < 5 {
        return Err(Error::config(format!(
            "exponent fit needs at least 5 grid points in the window, got {}",
            pts.len()
        )));
    }
    let (slope, intercept, rms) = crate::eigenfunctions::least_squares(&pts);
    Ok(ExponentFit { slope, intercept, residual: rms, points: pts.len() })
}

/// Lower-bound certificate built from a growth profile: the moment must
/// exceed (2T)^{1 - alpha nu} |psi(n0)|^2 / (4A) and the weighted
/// resolvent sum must exceed eps^{alpha nu - 1} |psi(n0)|^2 / (4A).
#[derive(Debug, Clone, Copy)]
pub struct DelocalizationCertificate {
    pub alpha: f64,
    pub nu: f64,
    pub a: f64,
    pub amplitude: f64,
}

pub fn delocalization_certificate(
    profile: &GrowthProfile,
    psi_at_base: f64,
    alpha: f64,
) -> Result<DelocalizationCertificate> {
    if !(alpha > 1.0) {
        return Err(Error::config(format!("certificate requires alpha > 1, got {alpha}")));
    }
    if profile.fitted_nu >= 1.0 {
        return Err(Error::domain(format!(
            "certificate unavailable: fitted nu = {} is not below 1",
            profile.fitted_nu
        )));
    }
    if psi_at_base == 0.0 {
        return Err(Error::domain("certificate requires psi(n0) != 0"));
    }
    Ok(DelocalizationCertificate {
        alpha,
        nu: profile.fitted_nu,
        a: profile.fitted_a,
        amplitude: psi_at_base * psi_at_base / (4.0 * profile.fitted_a),
    })
}

impl DelocalizationCertificate {
    /// Predicted moment lower bound at time T.
    pub fn moment_bound(&self, t: f64) -> f64 {
        (2.0 * t).powf(1.0 - self.alpha * self.nu) * self.amplitude
    }

    /// Predicted weighted resolvent-sum lower bound at eps = 1/(2T):
    /// eps Σ phi |G|^2 >= eps^{alpha nu - 1} amplitude.
    pub fn resolvent_bound(&self, eps: f64) -> f64 {
        eps.powf(self.alpha * self.nu - 1.0) * self.amplitude
    }
}

/// Measured side of the resolvent lower bound at one eps, with the
/// boundary-term gate from the derivation evaluated alongside.
#[derive(Debug, Clone)]
pub struct ResolventBoundCheck {
    pub eps: f64,
    /// eps * Σ phi |G_{E+i eps}(n0, ·)|^2 over the box
    pub lhs: f64,
    /// certificate bound eps^{alpha nu - 1} |psi(n0)|^2 / (4A)
    pub rhs: f64,
    /// chi-window radius floor(eps^{-alpha})
    pub window_radius: i64,
    /// boundary term S(L) = Σ_{enlarged shell} |G(n0, m)| |R(m)|
    pub s_boundary: f64,
    /// S(L) <= |psi(n0)| / 2, the smallness gate of the derivation
    pub s_gate_ok: bool,
    pub ok: bool,
}

/// Evaluate the measured weighted resolvent sum at z = E + i eps against a
/// certificate. The wave evaluator supplies the remainder term on the
/// window shell; the Green column must cover the window with margin.
pub fn resolvent_lower_bound_check(
    h: &SparseHamiltonian,
    weight: &GrowthWeight,
    wave: &dyn Evaluator,
    energy: f64,
    base: &[i64],
    cert: &DelocalizationCertificate,
    eps: f64,
    opts: &MomentOptions,
) -> Result<ResolventBoundCheck> {
    let window_radius = eps.powf(-cert.alpha).floor() as i64;
    let grid = h.grid();
    let max_fit = (0..grid.dim())
        .map(|a| (base[a] - grid.lo()[a]).min(grid.hi()[a] - base[a]))
        .min()
        .unwrap_or(0);
    if window_radius + 2 > max_fit {
        return Err(Error::config(format!(
            "chi window radius {window_radius} does not fit the box (margin {max_fit})"
        )));
    }
    let phi = weight.on_grid(grid);
    let gopts = GreenOptions { dense_cap: opts.dense_cap, ..Default::default() };
    let col = green_column_with(h, Complex64::new(energy, eps), base, opts.solve_tol, &gopts)?;
    let lhs = eps
        * col
            .values
            .iter()
            .zip(&phi)
            .map(|(g, p)| p * g.norm_sqr())
            .sum::<f64>();
    let window = LatticeBox::new(base.to_vec(), window_radius)?;
    let mut s_boundary = 0.0;
    for (site, r) in commutator_remainder(wave, &window) {
        if let Some(i) = grid.index_of(&site) {
            s_boundary += col.values[i].norm() * r.norm();
        }
    }
    let psi0 = wave.value(base).norm();
    Ok(ResolventBoundCheck {
        eps,
        lhs,
        rhs: cert.resolvent_bound(eps),
        window_radius,
        s_boundary,
        s_gate_ok: s_boundary <= 0.5 * psi0,
        ok: lhs >= cert.resolvent_bound(eps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeBox, TrimPattern};
    use crate::operator::{assemble, PotentialSpec, SparseHamiltonian};

    fn two_site() -> SparseHamiltonian {
        SparseHamiltonian::on_range(vec![0], vec![1], vec![0.0, 0.0]).unwrap()
    }

    fn trusted() -> MomentOptions {
        MomentOptions { containment: Containment::Trusted, ..Default::default() }
    }

    #[test]
    fn weight_values() {
        let w = GrowthWeight::power(2.0, vec![0, 0]).unwrap();
        assert_eq!(w.value(&[0, 0]), 1.0);
        assert_eq!(w.value(&[3, -4]), 17.0); // 1 + 4^2
        assert_eq!(GrowthWeight::constant_one().value(&[9, 9]), 1.0);
        assert!(GrowthWeight::power(-1.0, vec![0]).is_err());
    }

    #[test]
    fn weight_table_certificate() {
        let mut t = BTreeMap::new();
        t.insert(vec![0], 1.0);
        t.insert(vec![10], 5.0);
        assert!(GrowthWeight::table(t.clone(), 10.0, 0.5).is_ok());
        t.insert(vec![2], 1e6);
        assert!(GrowthWeight::table(t, 10.0, 0.5).is_err());
        let mut neg = BTreeMap::new();
        neg.insert(vec![0], -1.0);
        assert!(GrowthWeight::table(neg, 10.0, 0.5).is_err());
    }

    #[test]
    fn two_site_abel_oracle() {
        // phi = (0, 1), psi_0 = delta_0:
        // (1/T) ∫ e^{-t/T} sin^2 t dt = 2T^2 / (1 + 4T^2)
        let h = two_site();
        let mut tv = BTreeMap::new();
        tv.insert(vec![0], 0.0);
        tv.insert(vec![1], 1.0);
        let w = GrowthWeight::table(tv, 2.0, 0.5).unwrap();
        for &t in &[0.5, 2.0, 7.0] {
            let m = abel_moment(&h, &w, &[0], t, &trusted()).unwrap();
            let exact = 2.0 * t * t / (1.0 + 4.0 * t * t);
            assert!(
                (m.value - exact).abs() <= (1e-6f64).max(3.0 * m.quad_err),
                "T = {t}: {} vs {exact} (err {})",
                m.value,
                m.quad_err
            );
        }
    }

    #[test]
    fn two_site_cesaro_oracle() {
        // (1/T) ∫_0^T sin^2 t dt = 1/2 - sin(2T)/(4T)
        let h = two_site();
        let mut tv = BTreeMap::new();
        tv.insert(vec![0], 0.0);
        tv.insert(vec![1], 1.0);
        let w = GrowthWeight::table(tv, 2.0, 0.5).unwrap();
        for &t in &[1.0, 3.7, 12.0] {
            let m = cesaro_moment(&h, &w, &[0], t, &trusted()).unwrap();
            let exact = 0.5 - (2.0 * t).sin() / (4.0 * t);
            assert!(
                (m.value - exact).abs() <= (1e-6f64).max(3.0 * m.quad_err),
                "T = {t}: {} vs {exact}",
                m.value
            );
        }
    }

    #[test]
    fn constant_weight_normalization_all_routes() {
        let b = LatticeBox::centered(1, 12).unwrap();
        let p = PotentialSpec::iid_uniform(2.0, 4, 0, TrimPattern::full(1)).unwrap();
        let h = assemble(&b, &p).unwrap();
        let w = GrowthWeight::constant_one();
        let t = 3.0;
        let opts = MomentOptions {
            containment: Containment::Trusted,
            time_tol: 1e-9,
            time_quad_rel: 1e-8,
            energy_quad_rel: 1e-7,
            ..Default::default()
        };
        let a = abel_moment(&h, &w, &[0], t, &opts).unwrap();
        assert!((a.value - 1.0).abs() < 1e-6, "abel {}", a.value);
        let c = cesaro_moment(&h, &w, &[0], t, &opts).unwrap();
        assert!((c.value - 1.0).abs() < 1e-6, "cesaro {}", c.value);
        let r = moment_via_resolvent(&h, &w, &[0], t, &opts).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6, "resolvent {}", r.value);
    }

    #[test]
    fn abel_matches_resolvent_on_random_chain() {
        let b = LatticeBox::centered(1, 40).unwrap();
        let p = PotentialSpec::iid_uniform(2.5, 11, 0, TrimPattern::full(1)).unwrap();
        let h = assemble(&b, &p).unwrap();
        let w = GrowthWeight::power(2.0, vec![0]).unwrap();
        let t = 2.0;
        let opts = trusted();
        let a = abel_moment(&h, &w, &[0], t, &opts).unwrap();
        let r = moment_via_resolvent(&h, &w, &[0], t, &opts).unwrap();
        let diff = (a.value - r.value).abs();
        let budget = a.quad_err + r.quad_err;
        assert!(
            diff <= budget.max(1e-3 * a.value.abs()),
            "routes disagree: {} vs {} (budget {budget})",
            a.value,
            r.value
        );
    }

    #[test]
    fn small_t_route_agreement() {
        // the identity is exact in T, including T below one
        let b = LatticeBox::centered(1, 25).unwrap();
        let p = PotentialSpec::iid_uniform(1.5, 29, 0, TrimPattern::full(1)).unwrap();
        let h = assemble(&b, &p).unwrap();
        let w = GrowthWeight::power(2.0, vec![0]).unwrap();
        let opts = trusted();
        let t = 0.2;
        let a = abel_moment(&h, &w, &[0], t, &opts).unwrap();
        let r = moment_via_resolvent(&h, &w, &[0], t, &opts).unwrap();
        let diff = (a.value - r.value).abs();
        assert!(diff <= (a.quad_err + r.quad_err).max(1e-3 * a.value), "{} vs {}", a.value, r.value);
    }

    #[test]
    fn abel_dominates_cesaro() {
        // M <= e * Abel on every tested system
        let b = LatticeBox::centered(1, 30).unwrap();
        for seed in 0..4u64 {
            let p = PotentialSpec::iid_uniform(3.0, seed, 0, TrimPattern::full(1)).unwrap();
            let h = assemble(&b, &p).unwrap();
            let w = GrowthWeight::power(2.0, vec![0]).unwrap();
            for &t in &[1.0, 5.0] {
                let opts = trusted();
                let a = abel_moment(&h, &w, &[0], t, &opts).unwrap();
                let c = cesaro_moment(&h, &w, &[0], t, &opts).unwrap();
                let slack = 3.0 * (a.quad_err + c.quad_err);
                assert!(
                    c.value <= std::f64::consts::E * a.value + slack,
                    "seed {seed}, T {t}: cesaro {} vs e*abel {}",
                    c.value,
                    std::f64::consts::E * a.value
                );
            }
        }
    }

    #[test]
    fn weight_dominance_monotonicity() {
        let b = LatticeBox::centered(1, 20).unwrap();
        let p = PotentialSpec::iid_uniform(2.0, 8, 0, TrimPattern::full(1)).unwrap();
        let h = assemble(&b, &p).unwrap();
        let w1 = GrowthWeight::power(1.0, vec![0]).unwrap();
        let w2 = GrowthWeight::power(2.0, vec![0]).unwrap();
        let opts = trusted();
        let m1 = abel_moment(&h, &w1, &[0], 3.0, &opts).unwrap();
        let m2 = abel_moment(&h, &w2, &[0], 3.0, &opts).unwrap();
        assert!(m1.value <= m2.value + m1.quad_err + m2.quad_err);
    }

    #[test]
    fn containment_triggers_on_small_box() {
        // free chain spreads ballistically; a short box must trip the check
        let b = LatticeBox::centered(1, 20).unwrap();
        let h = assemble(&b, &PotentialSpec::zero(1)).unwrap();
        let w = GrowthWeight::power(2.0, vec![0]).unwrap();
        let opts = MomentOptions { time_tol: 1e-4, ..Default::default() };
        match abel_moment(&h, &w, &[0], 20.0, &opts) {
            Err(Error::Containment { minimal_safe_radius, .. }) => {
                assert!(minimal_safe_radius > 20);
            }
            other => panic!("expected containment violation, got {other:?}"),
        }
    }

    #[test]
    fn exponent_fit_examples() {
        let t: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let linear: Vec<f64> = t.iter().map(|x| 3.0 * x).collect();
        let f = fit_transport_exponent(&t, &linear, (1.0, 20.0)).unwrap();
        assert!((f.slope - 1.0).abs() < 0.01);
        let flat: Vec<f64> = t.iter().map(|_| 2.2).collect();
        let f = fit_transport_exponent(&t, &flat, (1.0, 20.0)).unwrap();
        assert!(f.slope.abs() < 0.01);
        let bad: Vec<f64> = t.iter().map(|_| -1.0).collect();
        assert!(fit_transport_exponent(&t, &bad, (1.0, 20.0)).is_err());
        assert!(fit_transport_exponent(&t[..3], &linear[..3], (1.0, 3.0)).is_err());
    }

    #[test]
    fn free_chain_ballistic_exponent() {
        // free 1-d lattice, q = 2: the mean-square displacement is 2t^2, so
        // the Abel moment is 4T^2 and the fitted slope is 2
        let b = LatticeBox::centered(1, 250).unwrap();
        let h = assemble(&b, &PotentialSpec::zero(1)).unwrap();
        let w = GrowthWeight::power(2.0, vec![0]).unwrap();
        let t_grid: Vec<f64> = vec![2.0, 3.0, 4.5, 6.5, 9.0, 12.0];
        let opts = MomentOptions { time_tol: 1e-4, ..Default::default() };
        let series = moment_series(&h, &w, &[0], &t_grid, Route::Abel, &opts).unwrap();
        let vals: Vec<f64> = series.values.iter().map(|v| v.value).collect();
        // check the closed form at one point
        let idx = 2;
        let expect = 4.0 * t_grid[idx] * t_grid[idx];
        assert!(
            (vals[idx] - expect).abs() / expect < 0.02,
            "{} vs {expect}",
            vals[idx]
        );
        let fit = fit_transport_exponent(&t_grid, &vals, (2.0, 12.0)).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.05, "slope {}", fit.slope);
    }

    #[test]
    fn certificate_shapes() {
        use crate::eigenfunctions::GrowthProfile;
        let profile = GrowthProfile {
            base: vec![0],
            radii: vec![1, 2],
            shell_l1: vec![1.0, 1.0],
            weighted_box: vec![1.0, 1.0],
            fitted_a: 2.0,
            fitted_nu: 0.0,
            raw_slope: 0.0,
            fit_residual: 0.0,
        };
        let cert = delocalization_certificate(&profile, 1.0, 1.05).unwrap();
        // nu = 0: bound is linear in T with amplitude |psi|^2/(4A)
        let t = 7.0;
        assert!((cert.moment_bound(t) - 2.0 * t / 8.0).abs() < 1e-12);
        assert!((cert.resolvent_bound(1.0 / (2.0 * t)) - 2.0 * t / 8.0).abs() < 1e-12);
        assert!(delocalization_certificate(&profile, 0.0, 1.05).is_err());
        assert!(delocalization_certificate(&profile, 1.0, 1.0).is_err());
    }
}
