//! Bound states of the coupled emitter–waveguide system.
//!
//! Below the band edge the resolvent of the amplitude equations has poles
//! where a channel function Y_l(ϖ) = ω₀ − μ_l(ϖ) crosses the line Y = ϖ;
//! μ_l(ϖ) are the descending eigenvalues of the dispersion matrix M(ϖ).
//! Each Y_l is strictly decreasing for ϖ < 0, so a channel hosts exactly one
//! bound state when Y_l(0⁻) < 0 and none otherwise. The residue weight of a
//! pole is Z_l = [1 + v_lᵀ M₂(ϖ_l) v_l]⁻¹ with M₂ the second-order
//! dispersion integral and v_l the channel eigenvector.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::linalg::sym_eigen;
use crate::params::DimensionlessModel;
use crate::spectral::{dispersion_integral, DispersionOrder};
use crate::{Error, Result};

/// The band edge is approached from below at this offset; the dispersion
/// integrals diverge logarithmically at 0 itself.
pub const BAND_EDGE: f64 = -1e-9;

/// Poles closer to the band edge than this are flagged marginal.
pub const MARGINAL_POLE: f64 = 1e-8;

/// Residual tolerance |Y_l(ϖ) − ϖ| for reported poles.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;

/// A discrete pole of the emitter–waveguide resolvent below the band edge.
#[derive(Debug, Clone)]
pub struct BoundState {
    /// Pole frequency ϖ^b < 0, in units of Δ relative to the band edge.
    pub pole: f64,
    /// Which eigen-branch of M(ϖ) produced it (0 = largest eigenvalue).
    pub channel: usize,
    /// Unit-norm channel eigenvector of M(ϖ^b).
    pub eigenvector: Array1<f64>,
    /// Residue weight Z_l; real in exact arithmetic, kept complex to match
    /// the serialized schema.
    pub weight: C64,
    /// Steady-state column for the input-node initial condition: the
    /// projection of e₀ onto the channel, v_l[0]·v_l.
    pub steady_column: Array1<f64>,
    /// Set when |ϖ^b| < [`MARGINAL_POLE`]; edge quadrature is shaky there.
    pub marginal: bool,
}

fn dispersion_eigen(model: &DimensionlessModel, varpi: f64) -> Result<(Vec<f64>, Array2<f64>)> {
    let m = dispersion_integral(model, varpi, DispersionOrder::First)?;
    Ok(sym_eigen(&m))
}

/// Channel functions Y_l(ϖ) = ω₀ − μ_l(ϖ), ordered by descending μ_l.
pub fn channel_functions(
    model: &DimensionlessModel,
    transition: f64,
    varpi: f64,
) -> Result<Vec<f64>> {
    let (mu, _) = dispersion_eigen(model, varpi)?;
    Ok(mu.into_iter().map(|m| transition - m).collect())
}

/// Critical transition frequencies: channel l hosts a bound state exactly
/// when ω₀ < μ_l(0⁻). Returned in descending order (channel order).
pub fn bound_state_thresholds(model: &DimensionlessModel) -> Result<Vec<f64>> {
    let (mu, _) = dispersion_eigen(model, BAND_EDGE)?;
    Ok(mu)
}

/// Brent's method on a bracketing interval [a, b] with f(a)·f(b) ≤ 0.
fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa * fb > 0.0 {
        return Err(Error::Internal(format!(
            "root not bracketed: f({a}) = {fa}, f({b}) = {fb}"
        )));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut bisected = true;
    for _ in 0..200 {
        if fb == 0.0 || (b - a).abs() < xtol {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            // Inverse quadratic interpolation.
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let within = (s > lo.min(b) && s < lo.max(b))
            && if bisected {
                (s - b).abs() < 0.5 * (b - c).abs()
            } else {
                (s - b).abs() < 0.5 * (c - d).abs()
            };
        if !within {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Ok(b)
}

/// Locate every bound state for the given transition frequency.
///
/// Returned states are sorted by ascending pole frequency and each satisfies
/// |Y_l(ϖ^b) − ϖ^b| ≤ [`ROOT_RESIDUAL_TOL`].
pub fn find_bound_states(model: &DimensionlessModel, transition: f64) -> Result<Vec<BoundState>> {
    if !(transition > 0.0) || !transition.is_finite() {
        return Err(Error::Domain(format!(
            "transition frequency must be positive, got {transition}"
        )));
    }
    let n = model.n_emitters();
    let alpha_nu2 = model.coupling() * model.cutoff() * model.cutoff();
    let bracket_limit = -1e3 * (1.0 + alpha_nu2);

    let (mu_edge, _) = dispersion_eigen(model, BAND_EDGE)?;
    let mut states = Vec::new();
    for channel in 0..n {
        // g(ϖ) = Y_l(ϖ) − ϖ is strictly decreasing; a bound state exists
        // exactly when g(0⁻) < 0.
        let g_edge = transition - mu_edge[channel] - BAND_EDGE;
        if g_edge >= 0.0 {
            continue;
        }
        let g = |varpi: f64| -> Result<f64> {
            let (mu, _) = dispersion_eigen(model, varpi)?;
            Ok(transition - mu[channel] - varpi)
        };
        let mut lower = -0.25;
        while g(lower)? < 0.0 {
            lower *= 2.0;
            if lower < bracket_limit {
                return Err(Error::Internal(format!(
                    "no bracket for channel {channel} above {bracket_limit}"
                )));
            }
        }
        let mut quad_failure = None;
        let pole = brent(
            |x| match g(x) {
                Ok(v) => v,
                Err(e) => {
                    quad_failure = Some(e);
                    f64::NAN
                }
            },
            lower,
            BAND_EDGE,
            1e-14,
        )?;
        if let Some(e) = quad_failure {
            return Err(e);
        }
        let residual = g(pole)?.abs();
        if residual > ROOT_RESIDUAL_TOL {
            return Err(Error::Internal(format!(
                "pole residual {residual:e} exceeds {ROOT_RESIDUAL_TOL:e} on channel {channel}"
            )));
        }
        let (_, vectors) = dispersion_eigen(model, pole)?;
        let eigenvector: Array1<f64> = vectors.column(channel).to_owned();
        let m2 = dispersion_integral(model, pole, DispersionOrder::Second)?;
        let curvature = eigenvector.dot(&m2.dot(&eigenvector));
        let weight = C64::new(1.0 / (1.0 + curvature), 0.0);
        let steady_column = eigenvector.mapv(|x| x * eigenvector[0]);
        states.push(BoundState {
            pole,
            channel,
            eigenvector,
            weight,
            steady_column,
            marginal: pole.abs() < MARGINAL_POLE,
        });
    }
    states.sort_by(|a, b| a.pole.total_cmp(&b.pole));
    Ok(states)
}

/// What a spectrum scan sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Grid values are transition frequencies ω₀ in units of Δ.
    Transition,
    /// Grid values are nearest-neighbour propagation delays φ = Δ·δx/v for a
    /// uniformly re-spaced array; the transition frequency stays fixed.
    Spacing,
}

/// A bound state attached to a continuity-tracked branch of a scan.
#[derive(Debug, Clone)]
pub struct ScanPole {
    pub branch: usize,
    pub state: BoundState,
}

/// Bound-state spectrum along a parameter sweep.
#[derive(Debug, Clone)]
pub struct SpectrumScan {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    /// Per grid point, the bound states labelled with branch indices that are
    /// continuous along the sweep (nearest-pole matching).
    pub points: Vec<Vec<ScanPole>>,
}

impl SpectrumScan {
    /// Number of bound states at each grid point.
    pub fn counts(&self) -> Vec<usize> {
        self.points.iter().map(Vec::len).collect()
    }
}

/// Scan the bound-state spectrum over a monotone grid.
pub fn scan_spectrum(
    model: &DimensionlessModel,
    transition: f64,
    variable: SweepVariable,
    grid: &[f64],
) -> Result<SpectrumScan> {
    if grid.is_empty() {
        return Err(Error::Domain("scan grid must be non-empty".into()));
    }
    let increasing = grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::Domain("scan grid must be strictly monotone".into()));
    }

    let per_point: Vec<Result<Vec<BoundState>>> = grid
        .par_iter()
        .map(|&value| match variable {
            SweepVariable::Transition => find_bound_states(model, value),
            SweepVariable::Spacing => {
                let spaced = model.with_uniform_spacing(value)?;
                find_bound_states(&spaced, transition)
            }
        })
        .collect();

    // Branch continuity is a sequential post-pass: match each pole to the
    // nearest pole of the previous grid point, closest pairs first.
    let mut points = Vec::with_capacity(grid.len());
    let mut previous: Vec<(usize, f64)> = Vec::new();
    let mut next_branch = 0usize;
    for result in per_point {
        let states = result?;
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (i, s) in states.iter().enumerate() {
            for (p, &(_, pole)) in previous.iter().enumerate() {
                pairs.push(((s.pole - pole).abs(), i, p));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut branch_of = vec![usize::MAX; states.len()];
        let mut used_prev = vec![false; previous.len()];
        for (_, i, p) in pairs {
            if branch_of[i] == usize::MAX && !used_prev[p] {
                branch_of[i] = previous[p].0;
                used_prev[p] = true;
            }
        }
        for b in branch_of.iter_mut() {
            if *b == usize::MAX {
                *b = next_branch;
                next_branch += 1;
            }
        }
        next_branch = next_branch.max(previous.iter().map(|&(b, _)| b + 1).max().unwrap_or(0));
        previous = states
            .iter()
            .zip(&branch_of)
            .map(|(s, &b)| (b, s.pole))
            .collect();
        points.push(
            states
                .into_iter()
                .zip(branch_of)
                .map(|(state, branch)| ScanPole { branch, state })
                .collect(),
        );
    }
    Ok(SpectrumScan { variable, grid: grid.to_vec(), points })
}
