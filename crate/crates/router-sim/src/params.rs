//! Physical device parameters and their reduction to the dimensionless
//! model every other module consumes.
//!
//! The reduction measures frequencies in units of the orbital splitting Δ
//! and times in units of 1/Δ. The three numbers that survive are the
//! dimensionless coupling α = d²ħ/(ρSv³), the cutoff ν = ω_c/Δ, and the
//! propagation delays φ_j = Δ·x_j/v between the emitters.

use crate::{Error, Result};

/// Reduced Planck constant in J·s (2018 CODATA).
pub const HBAR: f64 = 1.054_571_817e-34;

/// SI parameters of the waveguide and the embedded emitter array.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Material density ρ in kg/m³.
    pub density: f64,
    /// Waveguide cross section S in m².
    pub cross_section: f64,
    /// Strain sensitivity d in rad/s.
    pub strain_sensitivity: f64,
    /// Phonon group velocity v in m/s.
    pub group_velocity: f64,
    /// Spectral cutoff ω_c in rad/s.
    pub cutoff: f64,
    /// Orbital splitting Δ in rad/s; the unit of frequency after reduction.
    pub splitting: f64,
    /// Emitter transition frequency ω₀ in rad/s.
    pub transition: f64,
    /// Emitter positions along the waveguide in m, strictly increasing.
    pub positions: Vec<f64>,
}

impl ModelParams {
    /// Bundled reference parameters for a diamond waveguide with
    /// silicon-vacancy emitters: ρ = 3500 kg/m³, S = 100 nm²,
    /// d/2π = 4 PHz, v = 10⁴ m/s, Δ/2π = 46 GHz, ω_c = 7Δ, ω₀ = Δ, and
    /// `n` emitters spaced `spacing` meters apart.
    pub fn reference_device(n: usize, spacing: f64) -> Self {
        let splitting = 2.0 * std::f64::consts::PI * 46e9;
        ModelParams {
            density: 3500.0,
            cross_section: 100e-18,
            strain_sensitivity: 2.0 * std::f64::consts::PI * 4e15,
            group_velocity: 1e4,
            cutoff: 7.0 * splitting,
            splitting,
            transition: splitting,
            positions: (0..n).map(|j| j as f64 * spacing).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 7] = [
            ("density", self.density),
            ("cross_section", self.cross_section),
            ("strain_sensitivity", self.strain_sensitivity),
            ("group_velocity", self.group_velocity),
            ("cutoff", self.cutoff),
            ("splitting", self.splitting),
            ("transition", self.transition),
        ];
        for (field, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be strictly positive and finite, got {value}"),
                });
            }
        }
        if self.positions.is_empty() {
            return Err(Error::InvalidParameter {
                field: "positions",
                reason: "at least one emitter is required".into(),
            });
        }
        if self.positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "positions",
                reason: "positions must be finite".into(),
            });
        }
        if self.positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                field: "positions",
                reason: "positions must be strictly increasing".into(),
            });
        }
        Ok(())
    }

    /// Reduce to the dimensionless model (Δ = 1, ħ = 1).
    pub fn reduce(&self) -> Result<DimensionlessModel> {
        self.validate()?;
        let d = self.strain_sensitivity;
        let v = self.group_velocity;
        let coupling = d * d * HBAR / (self.density * self.cross_section * v.powi(3));
        let delays = self
            .positions
            .iter()
            .map(|x| self.splitting * (x - self.positions[0]) / v)
            .collect();
        DimensionlessModel::new(
            coupling,
            self.cutoff / self.splitting,
            self.transition / self.splitting,
            delays,
        )
    }
}

/// The dimensionless model: everything downstream of [`ModelParams::reduce`]
/// works exclusively with these quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionlessModel {
    /// Coupling strength α = d²ħ/(ρSv³).
    coupling: f64,
    /// Cutoff ν = ω_c/Δ.
    cutoff: f64,
    /// Transition frequency w₀ = ω₀/Δ. Spectrum and dynamics operations take
    /// the transition frequency explicitly so that sweeps can override it;
    /// this field carries the reduced default.
    transition: f64,
    /// Propagation delays φ_j = Δ·x_j/v relative to the first emitter,
    /// non-decreasing with φ_0 = 0.
    delays: Vec<f64>,
}

impl DimensionlessModel {
    /// Build a dimensionless model directly.
    ///
    /// A zero coupling is accepted (it switches the bath off entirely, which
    /// the tests lean on), and coincident emitters are allowed as a
    /// degenerate limiting case; SI input via [`ModelParams`] is stricter.
    pub fn new(coupling: f64, cutoff: f64, transition: f64, delays: Vec<f64>) -> Result<Self> {
        if !(coupling >= 0.0) || !coupling.is_finite() {
            return Err(Error::InvalidParameter {
                field: "coupling",
                reason: format!("must be non-negative and finite, got {coupling}"),
            });
        }
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::InvalidParameter {
                field: "cutoff",
                reason: format!("must be strictly positive and finite, got {cutoff}"),
            });
        }
        if !(transition > 0.0) || !transition.is_finite() {
            return Err(Error::InvalidParameter {
                field: "transition",
                reason: format!("must be strictly positive and finite, got {transition}"),
            });
        }
        if delays.is_empty() {
            return Err(Error::InvalidParameter {
                field: "delays",
                reason: "at least one emitter is required".into(),
            });
        }
        if delays.iter().any(|x| !x.is_finite()) || delays.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter {
                field: "delays",
                reason: "delays must be finite and non-decreasing".into(),
            });
        }
        let offset = delays[0];
        let delays = delays.into_iter().map(|x| x - offset).collect();
        Ok(DimensionlessModel { coupling, cutoff, transition, delays })
    }

    /// Uniformly spaced array of `n` emitters with nearest-neighbour delay
    /// `spacing_delay` = Δ·δx/v.
    pub fn uniform(
        coupling: f64,
        cutoff: f64,
        transition: f64,
        n: usize,
        spacing_delay: f64,
    ) -> Result<Self> {
        Self::new(
            coupling,
            cutoff,
            transition,
            (0..n).map(|j| j as f64 * spacing_delay).collect(),
        )
    }

    pub fn n_emitters(&self) -> usize {
        self.delays.len()
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn transition(&self) -> f64 {
        self.transition
    }

    /// Delay of emitter `j` relative to the first emitter.
    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    /// |φ_j − φ_l|, the propagation delay between two emitters.
    pub fn delay_between(&self, j: usize, l: usize) -> f64 {
        (self.delays[j] - self.delays[l]).abs()
    }

    /// Same geometry and coupling, different transition frequency.
    pub fn with_transition(&self, transition: f64) -> Result<Self> {
        Self::new(self.coupling, self.cutoff, transition, self.delays.clone())
    }

    /// Same coupling and emitter count, uniformly re-spaced.
    pub fn with_uniform_spacing(&self, spacing_delay: f64) -> Result<Self> {
        Self::uniform(
            self.coupling,
            self.cutoff,
            self.transition,
            self.n_emitters(),
            spacing_delay,
        )
    }
}
