//! Chebyshev expansion of the unitary propagator exp(-itH).
//!
//! H is rescaled to S = (H - b)/a with spectrum inside [-1, 1]; then
//! exp(-itH) = exp(-itb) Σ_k (2 - δ_k0) (-i)^k J_k(at) T_k(S). The Bessel
//! tail gives a certified truncation bound: the expansion error in l2 norm
//! is at most the sum of the dropped |J_k|, since ||T_k(S)|| <= 1.

use num_complex::Complex64;

use super::WaveState;
use crate::error::{Error, Result};
use crate::operator::SparseHamiltonian;

/// Evolve a state by time `t` with relative accuracy `tol`.
pub fn evolve(h: &SparseHamiltonian, psi0: &WaveState, t: f64, tol: f64) -> Result<WaveState> {
    let mut prop = Propagator::new(h, tol)?;
    let mut psi = psi0.clone();
    prop.step(&mut psi, t)?;
    Ok(psi)
}

/// Reusable propagator: owns scratch buffers and caches the expansion
/// coefficients for a repeated time step.
pub struct Propagator<'a> {
    h: &'a SparseHamiltonian,
    half_width: f64,
    center: f64,
    tol: f64,
    cache_tau: f64,
    cache_coeffs: Vec<Complex64>,
    t_prev: Vec<Complex64>,
    t_cur: Vec<Complex64>,
    t_next: Vec<Complex64>,
}

impl<'a> Propagator<'a> {
    pub fn new(h: &'a SparseHamiltonian, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::config(format!("propagation tolerance must be in (0,1), got {tol}")));
        }
        let (lo, hi) = h.gershgorin_window();
        // small margin keeps the scaled spectrum strictly inside [-1, 1]
        let half_width = (0.5 * (hi - lo) * (1.0 + 1e-9)).max(1e-12);
        let center = 0.5 * (hi + lo);
        let n = h.site_count();
        Ok(Propagator {
            h,
            half_width,
            center,
            tol,
            cache_tau: f64::NAN,
            cache_coeffs: Vec::new(),
            t_prev: vec![Complex64::default(); n],
            t_cur: vec![Complex64::default(); n],
            t_next: vec![Complex64::default(); n],
        })
    }

    /// In-place step: psi <- exp(-i dt H) psi to within `tol * ||psi||`.
    pub fn step(&mut self, psi: &mut WaveState, dt: f64) -> Result<()> {
        if dt < 0.0 {
            return Err(Error::config(format!("time step must be >= 0, got {dt}")));
        }
        if dt == 0.0 {
            return Ok(());
        }
        let tau = self.half_width * dt;
        if tau != self.cache_tau {
            self.cache_coeffs = expansion_coefficients(tau, self.tol)?;
            self.cache_tau = tau;
        }
        let phase = Complex64::from_polar(1.0, -self.center * dt);
        let coeffs = &self.cache_coeffs;
        let n = psi.data.len();
        let x = &psi.data;

        // T_0 psi = psi, T_1 psi = S psi
        self.t_prev.copy_from_slice(x);
        self.h.apply_fused(
            x,
            None,
            Complex64::new(self.center, 0.0),
            Complex64::new(1.0 / self.half_width, 0.0),
            &mut self.t_cur,
        );
        let mut acc: Vec<Complex64> = (0..n).map(|i| coeffs[0] * self.t_prev[i]).collect();
        if coeffs.len() > 1 {
            for i in 0..n {
                acc[i] += coeffs[1] * self.t_cur[i];
            }
        }
        for c in coeffs.iter().skip(2) {
            self.h.apply_fused(
                &self.t_cur,
                Some(&self.t_prev),
                Complex64::new(self.center, 0.0),
                Complex64::new(2.0 / self.half_width, 0.0),
                &mut self.t_next,
            );
            for i in 0..n {
                acc[i] += c * self.t_next[i];
            }
            std::mem::swap(&mut self.t_prev, &mut self.t_cur);
            std::mem::swap(&mut self.t_cur, &mut self.t_next);
        }
        for (p, a) in psi.data.iter_mut().zip(&acc) {
            *p = phase * a;
        }
        if !psi.is_finite() {
            return Err(Error::Numeric {
                what: "chebyshev propagation",
                details: format!(
                    "non-finite amplitudes after step dt = {dt} (order {})",
                    coeffs.len()
                ),
            });
        }
        Ok(())
    }
}

/// Coefficients (2 - δ_k0)(-i)^k J_k(tau) truncated so the dropped Bessel
/// tail is below tol/2.
fn expansion_coefficients(tau: f64, tol: f64) -> Result<Vec<Complex64>> {
    let bessel = bessel_j_sequence(tau, tol * 0.05)?;
    // cut once the remaining tail inside the computed window is negligible
    let mut tail = vec![0.0f64; bessel.len() + 1];
    for k in (0..bessel.len()).rev() {
        tail[k] = tail[k + 1] + bessel[k].abs();
    }
    let mut cut = bessel.len();
    for k in 1..bessel.len() {
        if 2.0 * tail[k] <= 0.5 * tol {
            cut = k;
            break;
        }
    }
    let mut coeffs = Vec::with_capacity(cut);
    for (k, &jk) in bessel.iter().take(cut).enumerate() {
        let ik = match k % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
        let w = if k == 0 { 1.0 } else { 2.0 };
        coeffs.push(ik * (w * jk));
    }
    Ok(coeffs)
}

/// J_0(x) … J_K(x) by Miller's backward recurrence, K chosen so the
/// neglected orders are below `floor`.
fn bessel_j_sequence(x: f64, floor: f64) -> Result<Vec<f64>> {
    assert!(x >= 0.0);
    if x == 0.0 {
        return Ok(vec![1.0]);
    }
    // beyond k ~ x the Bessel values decay superexponentially; this start
    // order leaves a comfortable margin for the requested floor
    let margin = (18.0 + 2.2 * x.powf(1.0 / 3.0) * (1.0 / floor.max(1e-300)).ln().powf(0.65))
        .ceil() as usize;
    let kmax = x.ceil() as usize + margin;
    let start = kmax + 20;
    let mut js = vec![0.0f64; start + 2];
    js[start + 1] = 0.0;
    js[start] = 1e-300;
    for k in (1..=start).rev() {
        js[k - 1] = (2.0 * k as f64 / x) * js[k] - js[k + 1];
        if js[k - 1].abs() > 1e260 {
            let s = 1e-260;
            for v in js[k - 1..].iter_mut() {
                *v *= s;
            }
        }
    }
    // normalization: J_0 + 2 Σ J_{2k} = 1
    let mut norm = js[0];
    let mut k = 2;
    while k <= start {
        norm += 2.0 * js[k];
        k += 2;
    }
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Numeric {
            what: "bessel recurrence",
            details: format!("normalization failed at x = {x}"),
        });
    }
    let inv = 1.0 / norm;
    js.truncate(kmax + 1);
    for v in js.iter_mut() {
        *v *= inv;
    }
    Ok(js)
}
