//! Acceptance tolerances in one place.
//!
//! Discretization-dependent tolerances are written `C · h`. Each constant
//! was calibrated once on the coarsest grid of the ladder it guards and is
//! frozen here; the observed value at calibration is recorded beside it so
//! the headroom is visible.

// ═══════════════════════════════════════════════════════════════════
// Roundoff-level tolerances
// ═══════════════════════════════════════════════════════════════════

/// Inequality fuzz: allowed violation relative to the per-inequality scale.
pub const FUZZ_REL: f64 = 1e-12;

/// Pointwise identities (strong/normalized, trace form against `F`).
pub const IDENTITY_REL: f64 = 1e-12;

/// The two assemblies of `tr(A X)`.
pub const TRACE_FORM_REL: f64 = 1e-13;

/// Constant-exponent Luxemburg norm against `(∫|u|^p)^{1/p}`.
pub const LUXEMBURG_CONST_REL: f64 = 1e-10;

/// Affine data reproduced by the weak solver.
pub const AFFINE_WEAK: f64 = 1e-8;

/// Affine data reproduced by the relaxation solver.
pub const AFFINE_VISC: f64 = 1e-6;

/// Affine problems: `sup|u_weak − u_visc|` allowed per grid, and the floor
/// under which a ladder counts as non-increasing.
pub const AFFINE_EQUIVALENCE: f64 = 1e-6;
pub const EQUIVALENCE_FLOOR: f64 = 1e-9;

/// Residuals below this are solver noise when forming ratios: converged
/// weak solutions sit near the final regularization `δ = 1e-8` and the
/// Picard tolerance, observed 1.6e-10 on the shifted annulus.
pub const RESIDUAL_NOISE_FLOOR: f64 = 1e-8;

// ═══════════════════════════════════════════════════════════════════
// C·h constants
// ═══════════════════════════════════════════════════════════════════

/// Semiconcavity of `u_ε`: directional curvature `≤ K + C·h·(1+K)`. Observed excess ≤ 0 on
/// all calibration cases (quantization only adds concave kinks).
pub const INFCONV_SEMICONCAVE_C: f64 = 1.0;

/// Gradient relation `η = (x−x_ε)|x−x_ε|^{q−2}/ε^{q−1}`: `C·h·K`, away
/// from kinks of `u_ε`. Observed up to 1.4 on the annulus base (quantized
/// minimizers).
pub const INFCONV_GRADIENT_C: f64 = 2.0;

/// Jet bound: directional curvature `≤ (q−1)/ε |η|^{(q−2)/(q−1)} + C·h·(1+K)`.
pub const INFCONV_JET_C: f64 = 1.0;

/// Annulus, `p ≡ 4`, exact `r^{2/3}`: `sup|u − u_exact| ≤ C·h`. Observed
/// at n = 32: 0.0050 (weak), 0.0057 (relaxation).
pub const ANNULUS_WEAK_C: f64 = 0.02;
pub const ANNULUS_VISC_C: f64 = 0.02;

/// Minimum observed convergence order over a refinement ladder. Observed
/// 2.03 to 2.20 on the annulus.
pub const MIN_ORDER: f64 = 1.0;

/// Cross audits: normalized weak residual of the relaxed solution and
/// `|F|` of the weak solution at probe nodes, both `≤ C·h`. Observed on the
/// coarsest grid: 0.0061 (weak, annulus) and 0.28 (viscosity, sine-variable).
pub const CROSS_WEAK_C: f64 = 0.05;
pub const CROSS_VISC_C: f64 = 1.0;

/// Self-convergence of variable-exponent problems: the finest
/// `sup|u_weak − u_visc|` must be within this factor of the coarse value
/// scaled by `h_fine/h_coarse`.
pub const SELF_CONVERGENCE_FACTOR: f64 = 5.0;

/// Supersolution-defect ladder: non-increase slack and final floor, `C·h`.
/// Observed largest rise 0.82·h on the radial-variable ladder.
pub const DEFECT_C: f64 = 1.0;

/// Final defect must drop below this fraction of the initial one (or the
/// `C·h` floor).
pub const DEFECT_DECAY: f64 = 0.1;

/// Removability audit: both residual classes of a global solution `≤ C·h`.
/// Shares the cross-audit constant; observed at most 1.6e-10 (shifted
/// annulus, n = 48).
pub const WEAK_RESIDUAL_C: f64 = CROSS_WEAK_C;

// ═══════════════════════════════════════════════════════════════════
// Removability audit
// ═══════════════════════════════════════════════════════════════════

/// A kinked candidate must show on-band residuals at least this many times
/// the off-band residuals.
pub const RADO_KINK_RATIO: f64 = 10.0;

/// A global solution must keep the on/off ratio at or below this.
pub const RADO_GLOBAL_RATIO: f64 = 2.0;

// ═══════════════════════════════════════════════════════════════════
// Runtime budgets (seconds)
// ═══════════════════════════════════════════════════════════════════

pub const AFFINE_RUNTIME: f64 = 10.0;
pub const ANNULUS_RUNTIME: f64 = 120.0;
pub const FUZZ_RUNTIME: f64 = 30.0;
