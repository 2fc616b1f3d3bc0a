//! The correlated spectral density J(ω), its time-domain memory kernel
//! h(t), and the dispersion integrals of J below the band edge.
//!
//! All three share one structure: entry (j, l) depends on the emitter pair
//! only through the propagation delay φ_jl = |φ_j − φ_l|,
//!
//! ```text
//! J_jl(ω) = α ω e^{-ω/ν} cos(ω φ_jl),                    ω ≥ 0,
//! h_jl(t) = ∫₀^∞ J_jl(ω) e^{-iωt} dω                     (closed form below),
//! M_jl(ϖ) = ∫₀^∞ J_jl(ω) (ω − ϖ)^{-p} dω,   p ∈ {1, 2},  ϖ < 0.
//! ```
//!
//! The kernel integral evaluates in closed form,
//! h_jl(t) = (α/2)·[(1/ν + i(t+φ))⁻² + (1/ν + i(t−φ))⁻²], which is what the
//! Volterra solver uses; adaptive quadrature of the defining integral is kept
//! for tests. The dispersion integrals have no elementary closed form and go
//! through [`crate::quad`]. The Laplace transform of the kernel relates to
//! the first-order dispersion integral by h̃(-iϖ) = -i·M(ϖ).

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::params::DimensionlessModel;
use crate::quad;
use crate::{Error, Result};

/// Frequency integrals run over [0, OMEGA_MAX_FACTOR·ν]; the integrand is
/// suppressed by e^{-60} ≈ 1e-26 at the upper end.
pub const OMEGA_MAX_FACTOR: f64 = 60.0;

/// Absolute tolerance for the dispersion integrals, in units of Δ.
pub const DISPERSION_ABS_TOL: f64 = 1e-10;

const MAX_PANELS: usize = 20_000;

/// Spectral-density matrix J(ω); real, symmetric, positive semidefinite.
pub fn spectral_density(model: &DimensionlessModel, omega: f64) -> Result<Array2<f64>> {
    if omega < 0.0 || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "spectral density is defined for ω ≥ 0, got {omega}"
        )));
    }
    let n = model.n_emitters();
    let alpha = model.coupling();
    let envelope = alpha * omega * (-omega / model.cutoff()).exp();
    let mut j = Array2::<f64>::zeros((n, n));
    for a in 0..n {
        for b in a..n {
            let value = envelope * (omega * model.delay_between(a, b)).cos();
            j[(a, b)] = value;
            j[(b, a)] = value;
        }
    }
    Ok(j)
}

/// Entrywise derivative dJ/dω, used to tame the principal-value integrand of
/// the Markov Lamb shift.
pub(crate) fn spectral_density_derivative(
    model: &DimensionlessModel,
    omega: f64,
) -> Array2<f64> {
    let n = model.n_emitters();
    let alpha = model.coupling();
    let nu = model.cutoff();
    let damp = (-omega / nu).exp();
    let mut d = Array2::<f64>::zeros((n, n));
    for a in 0..n {
        for b in a..n {
            let phi = model.delay_between(a, b);
            let value = alpha
                * damp
                * ((omega * phi).cos() * (1.0 - omega / nu) - omega * phi * (omega * phi).sin());
            d[(a, b)] = value;
            d[(b, a)] = value;
        }
    }
    d
}

/// Memory kernel h(t) in closed form.
pub fn memory_kernel(model: &DimensionlessModel, t: f64) -> Result<Array2<C64>> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::Domain(format!(
            "memory kernel is defined for t ≥ 0, got {t}"
        )));
    }
    let n = model.n_emitters();
    let alpha = model.coupling();
    let inv_nu = 1.0 / model.cutoff();
    let mut h = Array2::<C64>::zeros((n, n));
    for a in 0..n {
        for b in a..n {
            let phi = model.delay_between(a, b);
            let plus = C64::new(inv_nu, t + phi);
            let minus = C64::new(inv_nu, t - phi);
            let value = 0.5 * alpha * ((plus * plus).inv() + (minus * minus).inv());
            h[(a, b)] = value;
            h[(b, a)] = value;
        }
    }
    Ok(h)
}

/// Memory kernel by adaptive quadrature of its defining integral. Slow;
/// exists so tests can check the closed form against an independent route.
pub fn memory_kernel_quadrature(model: &DimensionlessModel, t: f64) -> Result<Array2<C64>> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::Domain(format!(
            "memory kernel is defined for t ≥ 0, got {t}"
        )));
    }
    let n = model.n_emitters();
    let alpha = model.coupling();
    let nu = model.cutoff();
    let omega_max = OMEGA_MAX_FACTOR * nu;
    let mut h = Array2::<C64>::zeros((n, n));
    for a in 0..n {
        for b in a..n {
            let phi = model.delay_between(a, b);
            let envelope = move |w: f64| alpha * w * (-w / nu).exp() * (w * phi).cos();
            let re = quad::integrate(
                |w| envelope(w) * (w * t).cos(),
                0.0,
                omega_max,
                1e-15,
                1e-13,
                80_000,
            );
            let im = quad::integrate(
                |w| -envelope(w) * (w * t).sin(),
                0.0,
                omega_max,
                1e-15,
                1e-13,
                80_000,
            );
            let value = C64::new(re.value, im.value);
            h[(a, b)] = value;
            h[(b, a)] = value;
        }
    }
    Ok(h)
}

/// Order of a below-band dispersion integral: first order appears in the
/// bound-state condition, second order in the residue weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionOrder {
    First,
    Second,
}

/// Dispersion integral M(ϖ) (or its ϖ-derivative M₂ for
/// [`DispersionOrder::Second`]) for a frequency ϖ strictly below the band
/// edge at 0.
pub fn dispersion_integral(
    model: &DimensionlessModel,
    varpi: f64,
    order: DispersionOrder,
) -> Result<Array2<f64>> {
    if varpi >= 0.0 || !varpi.is_finite() {
        return Err(Error::Domain(format!(
            "dispersion integral is defined for ϖ < 0 (below the band edge), got {varpi}"
        )));
    }
    let n = model.n_emitters();
    let alpha = model.coupling();
    let nu = model.cutoff();
    let omega_max = OMEGA_MAX_FACTOR * nu;
    // The integrand develops structure on the scale |ϖ| near the band edge;
    // seed the subdivision there.
    let scale = varpi.abs();
    let breaks = [scale, 10.0 * scale, 100.0 * scale, 1.0, nu];
    let mut m = Array2::<f64>::zeros((n, n));
    for a in 0..n {
        for b in a..n {
            let phi = model.delay_between(a, b);
            let f = |w: f64| {
                let num = alpha * w * (-w / nu).exp() * (w * phi).cos();
                match order {
                    DispersionOrder::First => num / (w - varpi),
                    DispersionOrder::Second => num / ((w - varpi) * (w - varpi)),
                }
            };
            let r = quad::integrate_with_breaks(
                f,
                0.0,
                omega_max,
                DISPERSION_ABS_TOL,
                1e-12,
                &breaks,
                MAX_PANELS,
            );
            m[(a, b)] = r.value;
            m[(b, a)] = r.value;
        }
    }
    Ok(m)
}


#[cfg(test)]
mod tests {
    use super::test_util::SplitMix64;
    use super::*;
    use crate::linalg::sym_eigen;
    use crate::params::DimensionlessModel;

    fn reference_two() -> DimensionlessModel {
        DimensionlessModel::uniform(0.190, 7.0, 1.0, 2, 0.289).unwrap()
    }

    #[test]
    fn density_vanishes_at_zero_frequency() {
        let j = spectral_density(&reference_two(), 0.0).unwrap();
        assert!(j.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn density_single_emitter_value() {
        let m = DimensionlessModel::uniform(0.190, 7.0, 1.0, 1, 0.0).unwrap();
        let j = spectral_density(&m, 1.0).unwrap();
        assert!((j[(0, 0)] - 0.1647).abs() < 1e-4, "J00 = {}", j[(0, 0)]);
    }

    #[test]
    fn coincident_emitters_share_all_entries() {
        let m = DimensionlessModel::new(0.190, 7.0, 1.0, vec![0.0, 0.0]).unwrap();
        let j = spectral_density(&m, 1.3).unwrap();
        assert_eq!(j[(0, 0)], j[(0, 1)]);
        assert_eq!(j[(0, 0)], j[(1, 1)]);
    }

    #[test]
    fn density_rejects_negative_frequency() {
        assert!(matches!(
            spectral_density(&reference_two(), -0.1),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn density_is_positive_semidefinite() {
        // 1000 random (model, ω) samples; min eigenvalue ≥ -1e-12 · trace.
        let mut rng = SplitMix64(0x5eed);
        for _ in 0..1000 {
            let n = 1 + (rng.next_u64() % 4) as usize;
            let mut delays = vec![0.0];
            for j in 1..n {
                delays.push(delays[j - 1] + rng.uniform(0.0, 2.0));
            }
            let m = DimensionlessModel::new(
                rng.uniform(0.01, 2.0),
                rng.uniform(0.5, 12.0),
                1.0,
                delays,
            )
            .unwrap();
            let w = rng.uniform(0.0, 30.0);
            let j = spectral_density(&m, w).unwrap();
            let trace: f64 = (0..n).map(|i| j[(i, i)]).sum();
            let (vals, _) = sym_eigen(&j);
            assert!(
                vals[n - 1] >= -1e-12 * trace.max(1e-300),
                "min eig {} for trace {}",
                vals[n - 1],
                trace
            );
        }
    }

    #[test]
    fn kernel_at_zero_matches_moments() {
        // h_00(0) = α ν² and h_12(0) = α ν² (1-x²)/(1+x²)² with x = νφ.
        let m = reference_two();
        let h = memory_kernel(&m, 0.0).unwrap();
        let alpha_nu2 = m.coupling() * m.cutoff() * m.cutoff();
        assert!((h[(0, 0)].re - alpha_nu2).abs() < 1e-12 * alpha_nu2);
        assert!(h[(0, 0)].im.abs() < 1e-12);
        let x = m.cutoff() * m.delay_between(0, 1);
        let expected = alpha_nu2 * (1.0 - x * x) / (1.0 + x * x).powi(2);
        assert!((h[(0, 1)].re - expected).abs() < 1e-12 * alpha_nu2);

        // Against the quadrature route as well.
        let hq = memory_kernel_quadrature(&m, 0.0).unwrap();
        assert!((hq[(0, 0)].re - alpha_nu2).abs() < 1e-9 * alpha_nu2);
        assert!((hq[(0, 1)].re - expected).abs() < 1e-9 * alpha_nu2);
    }

    #[test]
    fn kernel_without_coupling_is_zero() {
        let m = DimensionlessModel::uniform(0.0, 7.0, 1.0, 2, 0.3).unwrap();
        for t in [0.0, 1.0, 17.0] {
            let h = memory_kernel(&m, t).unwrap();
            assert!(h.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn kernel_rejects_negative_time() {
        assert!(memory_kernel(&reference_two(), -1e-9).is_err());
    }

    #[test]
    fn kernel_closed_form_agrees_with_quadrature() {
        // Relative error ≤ 1e-9 across t ∈ [0, 50], every entry. The same
        // quadrature doubles as the Fourier-consistency check at 1e-6.
        let m = reference_two();
        let mut worst = 0.0f64;
        let mut t = 0.0;
        while t <= 50.0 {
            let h = memory_kernel(&m, t).unwrap();
            let hq = memory_kernel_quadrature(&m, t).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    let diff = (h[(a, b)] - hq[(a, b)]).norm();
                    let rel = diff / h[(a, b)].norm().max(f64::MIN_POSITIVE);
                    worst = worst.max(rel);
                    assert!(diff <= 1e-6, "absolute Fourier consistency at t={t}: {diff:e}");
                }
            }
            t += 2.5;
        }
        assert!(worst <= 1e-9, "worst relative deviation {worst:e}");
    }

    #[test]
    fn dispersion_rejects_band_frequencies() {
        assert!(dispersion_integral(&reference_two(), 0.0, DispersionOrder::First).is_err());
        assert!(dispersion_integral(&reference_two(), 0.5, DispersionOrder::First).is_err());
    }

    #[test]
    fn dispersion_is_monotone_in_varpi() {
        let m = reference_two();
        let m1 = dispersion_integral(&m, -2.0, DispersionOrder::First).unwrap();
        let m2 = dispersion_integral(&m, -1.0, DispersionOrder::First).unwrap();
        for i in 0..2 {
            assert!(m1[(i, i)] < m2[(i, i)]);
        }
    }

    #[test]
    fn dispersion_band_edge_limits() {
        // M_00(0⁻) = αν; eigenvalues of M(0⁻) are αν(1 ± 1/(1+(νφ)²)).
        let m = reference_two();
        let alpha_nu = m.coupling() * m.cutoff();
        let md = dispersion_integral(&m, -1e-8, DispersionOrder::First).unwrap();
        assert!(
            (md[(0, 0)] - alpha_nu).abs() < 1e-6,
            "M00(0-) = {}, expected {}",
            md[(0, 0)],
            alpha_nu
        );
        let x = m.cutoff() * m.delay_between(0, 1);
        let split = alpha_nu / (1.0 + x * x);
        let (vals, _) = sym_eigen(&md);
        assert!((vals[0] - (alpha_nu + split)).abs() < 1e-6);
        assert!((vals[1] - (alpha_nu - split)).abs() < 1e-6);
    }

    #[test]
    fn second_order_is_derivative_of_first() {
        let m = reference_two();
        let step = 1e-4;
        for varpi in [-0.05, -0.4, -2.0] {
            let m2 = dispersion_integral(&m, varpi, DispersionOrder::Second).unwrap();
            let plus = dispersion_integral(&m, varpi + step, DispersionOrder::First).unwrap();
            let minus = dispersion_integral(&m, varpi - step, DispersionOrder::First).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    let numeric = (plus[(a, b)] - minus[(a, b)]) / (2.0 * step);
                    assert!(
                        (m2[(a, b)] - numeric).abs() < 1e-6,
                        "entry ({a},{b}) at ϖ={varpi}: {} vs {}",
                        m2[(a, b)],
                        numeric
                    );
                }
            }
        }
    }
}
