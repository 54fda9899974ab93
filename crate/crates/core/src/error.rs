use thiserror::Error;

/// Errors produced anywhere in the simulation pipeline.
///
/// The variants are grouped by what went wrong rather than by module, so the
/// CLI can map them onto exit codes without knowing where they came from.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its physical or numerical domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// The dense eigensolver did not converge.
    #[error("eigensolver failed for a {dim}x{dim} matrix; try a basis size other than {basis_hint}")]
    Eigensolve { dim: usize, basis_hint: usize },

    /// Two dressed states claimed the same bare label (near an avoided crossing).
    #[error(
        "ambiguous dressed labeling: states {first} (overlap {first_overlap:.4}) and {second} \
         (overlap {second_overlap:.4}) both map to bare level ({level}, {photons})"
    )]
    Labeling {
        level: usize,
        photons: usize,
        first: usize,
        first_overlap: f64,
        second: usize,
        second_overlap: f64,
    },

    /// Coupling calibration could not bracket the target dispersive shift.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// The adaptive integrator gave up.
    #[error("integrator failed at t = {time_ns:.6} ns (step {step:.3e} ns, {steps} steps): {reason}")]
    Integrator {
        time_ns: f64,
        step: f64,
        steps: usize,
        reason: String,
    },

    /// A least-squares fit did not converge; the raw data are kept for inspection.
    #[error("fit failed: {reason}")]
    Fit {
        reason: String,
        lengths: Vec<usize>,
        survival: Vec<f64>,
    },

    /// Requested configuration is recognised but not supported.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Config file could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
