use thiserror::Error;

use crate::modes::ModeIndex;

/// Errors raised by the solvers and checks in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the admissible parameter domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// A Rayleigh frequency: |alpha_n| coincides with a wavenumber.
    #[error("resonant mode {index}: |alpha_n| = {alpha_norm} is within tolerance of kappa{wave} = {kappa}")]
    Resonance {
        index: ModeIndex,
        wave: u8,
        alpha_norm: f64,
        kappa: f64,
    },

    /// The mode window does not contain every propagating mode.
    #[error("mode window {window} too small, propagating modes need at least {required}")]
    WindowTooSmall { window: usize, required: usize },

    /// A dense or block factorization hit a (near) singular pivot.
    #[error("ill-conditioned system, condition estimate {estimate:.3e}")]
    IllConditioned { estimate: f64 },

    /// Invalid mesh or geometry request.
    #[error("mesh: {0}")]
    Mesh(String),

    /// The iterative solver stopped before reaching its tolerance.
    #[error("iterative solver did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        /// Residual estimate after every iteration.
        history: Vec<f64>,
    },

    /// A Fourier field lacks a mode that the operation needs.
    #[error("mode {0} missing from field")]
    MissingMode(ModeIndex),
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::WindowTooSmall { .. } | Error::Mesh(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
