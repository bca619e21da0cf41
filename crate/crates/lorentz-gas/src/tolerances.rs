//! Central manifest of every tolerance and threshold used by the
//! verification presets and the test suite. Nothing below is tuned at run
//! time; reports embed these values so a pass/fail line is always traceable
//! to a declared number.

/// Exact-arithmetic identities (closed forms, symmetry).
pub const EXACT: f64 = 1e-12;

/// Kernel golden values.
pub const KERNEL_GOLDEN: f64 = 1e-12;

/// Per-exit-mark kernel normalisation by quadrature.
pub const KERNEL_NORMALISATION: f64 = 1e-6;

/// Mean of the stationary flight-length density (= 1/2).
pub const PSI0_MEAN: f64 = 1e-4;

/// Relative band for ξ³Ψ₀(ξ) against the tail constant on ξ ∈ [20, 100].
pub const PSI0_TAIL_REL: f64 = 0.05;

/// KS distance, disordered-medium micro free paths vs the exponential law
/// (r = 1e-3, 1e6 flights).
pub const POISSON_FREEPATH_KS: f64 = 0.01;

/// KS distance of the self-normalised displacement component vs a standard
/// Gaussian for the disordered-medium flight process at t = 1e4.
pub const POISSON_GAUSSIANITY_KS: f64 = 0.02;

/// Relative variation of MSD(t)/t across t ∈ [1e3, 1e4] (diffusive regime).
pub const POISSON_MSD_FLATNESS: f64 = 0.05;

/// Lattice micro kernel histograms: fraction of adequately sampled cells
/// within three standard errors.
pub const KERNEL_CELL_FRACTION: f64 = 0.95;

/// Expected count for a histogram cell to count as adequately sampled.
pub const KERNEL_CELL_MIN_EXPECTED: f64 = 20.0;

/// KS bound for lattice micro free paths vs Ψ₀ at r = 1e-3.
pub const LATTICE_FREEPATH_KS: f64 = 0.015;

/// Relative band for the 0.75-quantile of a displacement component under
/// √(t log t) normalisation at t = 1e4.
pub const SUPERDIFFUSION_Q75_REL: f64 = 0.30;

/// Relative band for MSD/(t log t) at t = 1e4.
pub const SUPERDIFFUSION_MSD_REL: f64 = 0.35;

/// Growth factor demanded of the running second-moment estimate between
/// 1e5 and 1e7 stationary flight draws.
pub const SECOND_MOMENT_GROWTH: f64 = 3.0;

/// Band around the survival-function slope for the union of two lattices.
pub const UNION_TAIL_EXPONENT_BAND: f64 = 0.5;

/// Relative error allowed on the cut-and-project density against the
/// window/covolume formula at R = 200.
pub const CUT_PROJECT_DENSITY_REL: f64 = 0.01;

/// KS bound for the chain stationarity checks (uniform marks, n ≤ 50).
pub const STATIONARITY_KS: f64 = 0.01;

/// KS bound for the ensemble residual flight law at large t against K.
pub const RESIDUAL_LAW_KS: f64 = 0.01;

/// Tangency tolerance: a ray grazing a scatterer with |w| ≥ 1 − ε is a miss.
pub const TANGENCY_EPS: f64 = 1e-12;

/// Sampler-vs-kernel 2D histogram: per-cell standard-error multiple.
pub const SAMPLER_CELL_SIGMA: f64 = 3.0;
