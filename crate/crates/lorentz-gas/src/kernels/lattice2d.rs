//! Closed forms for the planar lattice transition kernel.
//!
//! The kernel density for exit parameter `w'`, flight length `ξ` and next
//! impact parameter `w` is
//!
//! ```text
//! k(w', ξ, w) = (12/π²) · Υ(1 + (1/ξ − max(|w|,|w'|) − 1) / |w − w'|)
//! ```
//!
//! with `Υ` the clamp of the identity to [0, 1]. Everything else in this
//! module — the flight-length tail, the `w`-marginal, the half-marginal over
//! one argument, the cumulative distributions used by the exact samplers —
//! is an antiderivative of that single expression. Each closed form carries
//! a quadrature cross-check in the test block.

use crate::numeric::dilog::neg_dilog_neg;
use crate::numeric::quad::integrate_split;
use crate::numeric::MonotoneCubic;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Plateau height 12/π², i.e. 1/(ζ(2)·ξ̄) with ξ̄ = 1/2.
pub fn plateau() -> f64 {
    12.0 / (PI * PI)
}

/// Coefficient of the ξ⁻³ tail of the stationary flight-length density.
pub fn tail_constant() -> f64 {
    1.0 / (PI * PI)
}

/// Below this separation in `|w - w'|` the kernel collapses to the
/// indicator limit `(12/π²)·1{ξ < 1/(1+|w|)}`.
const B_EPS: f64 = 1e-9;

/// Geometry of the kernel for a fixed pair of transverse parameters:
/// `a = 1 + max(|w|, |w'|)`, `b = |w - w'|`.
#[derive(Debug, Clone, Copy)]
pub struct PairGeom {
    pub a: f64,
    pub b: f64,
}

impl PairGeom {
    #[inline]
    pub fn new(w_prev: f64, w_next: f64) -> Self {
        Self {
            a: 1.0 + w_prev.abs().max(w_next.abs()),
            b: (w_next - w_prev).abs(),
        }
    }

    /// Largest flight length with nonzero density.
    #[inline]
    pub fn xi_max(&self) -> f64 {
        1.0 / (self.a - self.b)
    }

    /// Kernel density at flight length `xi`, without the 12/π² factor.
    #[inline]
    pub fn density_unit(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        if self.b < B_EPS {
            return if xi < 1.0 / self.a { 1.0 } else { 0.0 };
        }
        let x = 1.0 + (1.0 / xi - self.a) / self.b;
        x.clamp(0.0, 1.0)
    }

    /// `(−ln(1−z) − z)/b`, the cancellation-free core of the flight tail;
    /// `z = 1 − ξ(a−b)` stays in `(0, b/a]` on the sloped piece.
    #[inline]
    fn tail_core(&self, z: f64) -> f64 {
        if z < 1e-4 {
            z * z * (0.5 + z * (1.0 / 3.0 + 0.25 * z)) / self.b
        } else {
            (-(-z).ln_1p() - z) / self.b
        }
    }

    /// `∫_ξ^∞ k dξ'` without the 12/π² factor.
    pub fn tail_unit(&self, xi: f64) -> f64 {
        let xi = xi.max(0.0);
        if self.b < B_EPS {
            return (1.0 / self.a - xi).max(0.0);
        }
        let c = self.a - self.b;
        if xi * c >= 1.0 {
            return 0.0;
        }
        if xi <= 1.0 / self.a {
            (1.0 / self.a - xi) + self.tail_core(self.b / self.a)
        } else {
            self.tail_core(1.0 - xi * c)
        }
    }

    /// `∫_0^∞ k dξ` without the 12/π² factor: `(1/b)·ln(a/(a−b))`.
    pub fn marginal_unit(&self) -> f64 {
        let r = self.b / self.a;
        if r < 1e-6 {
            return (1.0 + r * (0.5 + r / 3.0)) / self.a;
        }
        -(-r).ln_1p() / self.b
    }

    /// `∫_0^∞ ξ·k dξ` without the 12/π² factor: the mean flight length
    /// given the pair of transverse parameters collapses to `1/(2a(a−b))`.
    pub fn mean_unit(&self) -> f64 {
        0.5 / (self.a * (self.a - self.b))
    }
}

/// Half marginal `∫ k(w', ξ, w) dp(w')` without the 12/π² factor but
/// including the 1/2 of the uniform measure on (−1, 1):
/// returns `(1/2)·∫_{-1}^{1} Υ(...) dw'`.
///
/// Piecewise-exact; `g = 1/ξ`. Support is `ξ < 1/(1 − |w|)`.
pub fn half_marginal_unit(xi: f64, w: f64) -> f64 {
    let w = w.abs();
    debug_assert!(w < 1.0);
    if xi <= 0.0 {
        return 0.0;
    }
    let g = 1.0 / xi;
    if g <= 1.0 - w {
        return 0.0;
    }

    // w' ∈ [−w, w]: a = 1+w constant.
    let ca = if g >= 1.0 + w {
        2.0 * w
    } else if g > 1.0 - w && w > 0.0 {
        (g - 1.0 + w) - (1.0 + w - g) * (2.0 * w / (1.0 + w - g)).ln()
    } else {
        0.0
    };

    // w' ∈ (w, 1): a − b = 1 + w constant; zero unless g > 1 + w.
    let cb = if g > 1.0 + w {
        let full = (g - 1.0).min(1.0) - w;
        let part = if g < 2.0 {
            (g - 1.0 - w) * ((1.0 - w) / (g - 1.0 - w)).ln()
        } else {
            0.0
        };
        full + part
    } else {
        0.0
    };

    // w' ∈ (−1, −w): a − b = 1 − w constant; zero unless g > 1 − w.
    let cc = if g > 1.0 + w {
        let full = (g - 1.0).min(1.0) - w;
        let part = if g < 2.0 {
            (g + w - 1.0) * ((1.0 + w) / (g - 1.0 + w)).ln()
        } else {
            0.0
        };
        full + part
    } else if g > 1.0 - w && w > 0.0 {
        (g + w - 1.0) * ((1.0 + w) / (2.0 * w)).ln()
    } else {
        0.0
    };

    0.5 * (ca + cb + cc)
}

/// Stationary flight-length density Ψ₀(ξ) by one quadrature over the
/// closed-form half marginal. Exactly 12/π² on (0, 1/2].
pub fn psi0(xi: f64) -> f64 {
    if xi <= 0.0 {
        return 0.0;
    }
    if xi <= 0.5 {
        return plateau();
    }
    let g = 1.0 / xi;
    // Kinks of the half marginal as a function of w sit where the regime
    // of g relative to 1 ± w changes.
    let splits = [1.0 - g, g - 1.0, 1.0 + g, 2.0 - g];
    let (v, _) = integrate_split(|w| half_marginal_unit(xi, w), 0.0, 1.0, &splits, 1e-10);
    plateau() * v
}

/// Integrated kernel K(ξ, w): density of (first flight, first impact) from
/// stationary initial data, with respect to dξ·dp(w). One quadrature over
/// the closed-form flight tail.
pub fn big_k(xi: f64, w: f64) -> f64 {
    let w = w.abs();
    debug_assert!(w < 1.0);
    let xi = xi.max(0.0);
    let g = 1.0 / xi.max(1e-300);
    let splits = [-w, w, g - 1.0, 1.0 - g];
    let (v, _) = integrate_split(
        |wp| PairGeom::new(wp, w).tail_unit(xi),
        -1.0,
        1.0,
        &splits,
        1e-9,
    );
    plateau() * v
}

/// Density in `w` of the impact-parameter marginal of K with respect to
/// dp(w): `∫ K(ξ, w) dξ`, evaluated with the closed-form inner mean.
/// Integrates to one against dp(w).
pub fn k_w_marginal(w: f64) -> f64 {
    let w = w.abs();
    let (v, _) = integrate_split(
        |wp| PairGeom::new(wp, w).mean_unit(),
        -1.0,
        1.0,
        &[-w, w],
        1e-9,
    );
    plateau() * v
}

// ---------------------------------------------------------------------------
// Cumulative distribution of the next impact parameter given the exit
// parameter, in dilogarithm closed form. For w' = W >= 0 the density of w
// over (−1, 1) is (12/π²)/2 · h(w) with h = (1/b)·ln(a/(a−b)); its three
// smooth pieces have antiderivatives G1, G2, G3 below. Negative w' follows
// by the joint sign flip (w', w) → (−w', −w).
// ---------------------------------------------------------------------------

/// Piece masses and total of the unnormalised w-CDF for exit parameter
/// `W >= 0`.
#[derive(Debug, Clone, Copy)]
pub struct WCdf {
    pub w_prev: f64,
    /// Cumulative unnormalised mass at the piece boundaries −W and W.
    pub mass_p1: f64,
    pub mass_p12: f64,
    pub total: f64,
}

impl WCdf {
    pub fn new(w_prev_abs: f64) -> Self {
        let w = w_prev_abs;
        debug_assert!((0.0..1.0).contains(&w));
        let g1 = |s: f64| neg_dilog_neg(s / (1.0 - w));
        let g2 = |s: f64| crate::numeric::dilog(s / (1.0 + w));
        let g3 = |s: f64| neg_dilog_neg(s / (1.0 + w));
        let mass_p1 = g1(1.0 + w) - g1(2.0 * w);
        let mass_p2 = g2(2.0 * w);
        let mass_p3 = g3(1.0 - w);
        Self {
            w_prev: w,
            mass_p1,
            mass_p12: mass_p1 + mass_p2,
            total: mass_p1 + mass_p2 + mass_p3,
        }
    }

    /// Unnormalised CDF value at `w` (integral of `h` from −1).
    pub fn eval(&self, w: f64) -> f64 {
        let wp = self.w_prev;
        if w <= -wp {
            let t = wp - w;
            (self.mass_p1 + neg_dilog_neg(2.0 * wp / (1.0 - wp)))
                - neg_dilog_neg(t / (1.0 - wp))
        } else if w <= wp {
            let t = wp - w;
            self.mass_p12 - crate::numeric::dilog(t / (1.0 + wp))
        } else {
            self.mass_p12 + neg_dilog_neg((w - wp) / (1.0 + wp))
        }
    }

    /// Density `h(w)` matching `eval`.
    pub fn density(&self, w: f64) -> f64 {
        PairGeom::new(self.w_prev, w).marginal_unit()
    }

    /// Inverts `eval(w) = y` for `y` in `(0, total)` by safeguarded Newton.
    pub fn invert(&self, y: f64, guess: Option<f64>) -> f64 {
        let (mut lo, mut hi) = if y < self.mass_p1 {
            (-1.0 + 1e-15, -self.w_prev)
        } else if y < self.mass_p12 {
            (-self.w_prev, self.w_prev)
        } else {
            (self.w_prev, 1.0 - 1e-15)
        };
        let mut x = match guess {
            Some(g) if g > lo && g < hi => g,
            _ => 0.5 * (lo + hi),
        };
        for _ in 0..60 {
            let f = self.eval(x) - y;
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = f / self.density(x);
            let next = x - step;
            if step.abs() < 1e-14 * (1.0 + x.abs()) {
                if next >= lo && next <= hi {
                    x = next;
                }
                break;
            }
            x = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo) < 1e-14 {
                break;
            }
        }
        x.clamp(-1.0 + 1e-12, 1.0 - 1e-12)
    }
}

/// Inverts the conditional flight-length CDF for a fixed pair geometry:
/// solves `∫_0^ξ k = y·(total mass)` for `y ∈ (0, 1)`.
pub fn invert_flight_cdf(geom: &PairGeom, y: f64) -> f64 {
    let a = geom.a;
    if geom.b < B_EPS {
        // Indicator limit: uniform on (0, 1/a).
        return y / a;
    }
    let total = geom.marginal_unit();
    let target = y * total;
    if target <= 1.0 / a {
        return target;
    }
    // Piece [1/a, ξ_max]: F(ξ) = 1/a + (b−a)/b (ξ − 1/a) + ln(aξ)/b.
    let b = geom.b;
    let xi_m = geom.xi_max();
    let f = |xi: f64| 1.0 / a + (b - a) / b * (xi - 1.0 / a) + (a * xi).ln() / b;
    let (mut lo, mut hi) = (1.0 / a, xi_m);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..80 {
        let val = f(x) - target;
        if val == 0.0 {
            break;
        }
        if val > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = val / geom.density_unit(x).max(1e-300);
        let next = x - step;
        if step.abs() < 1e-14 * x {
            if next >= lo && next <= hi {
                x = next;
            }
            break;
        }
        x = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) < 1e-13 * xi_m {
            break;
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Cached integrated tables: survival and partial first moment of Ψ₀, from
// which the residual-flight density Ψ, its survival S_Ψ, and the CDF of the
// initial flight length all follow.
// ---------------------------------------------------------------------------

/// Tabulated integrals of Ψ₀ with analytic ξ⁻³ tail beyond the grid.
pub struct Lattice2dTables {
    /// Surv(ξ) = ∫_ξ^∞ Ψ₀.
    surv: MonotoneCubic,
    /// E₁(ξ) = ∫_ξ^∞ u Ψ₀(u) du.
    e1: MonotoneCubic,
    /// F_K(ξ) = ∫_0^ξ Ψ(u) du with Ψ = 2·Surv (flight-length marginal of K).
    fk: MonotoneCubic,
    /// Inverse of F_K (knots in probability, values in ξ).
    fk_inv: MonotoneCubic,
    xi_top: f64,
    surv_top: f64,
    e1_top: f64,
    fk_top: f64,
}

static TABLES: OnceLock<Lattice2dTables> = OnceLock::new();

impl Lattice2dTables {
    pub fn get() -> &'static Lattice2dTables {
        TABLES.get_or_init(Self::build)
    }

    fn build() -> Self {
        let xi_top = 1.0e4;
        // Linear nodes through the plateau, geometric beyond.
        let mut grid: Vec<f64> = (0..=40).map(|i| 0.0125 * i as f64).collect();
        let per_decade = 64usize;
        let decades = (xi_top / 0.5f64).log10();
        let n_geo = (decades * per_decade as f64).ceil() as usize;
        for i in 1..=n_geo {
            grid.push(0.5 * (xi_top / 0.5f64).powf(i as f64 / n_geo as f64));
        }
        for kink in [1.0, 2.0] {
            grid.push(kink);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let n = grid.len();
        // Local tail correction: Ψ₀(ξ) ≈ A₂ ξ⁻³ (1 + c₁/ξ).
        let a2 = tail_constant();
        let p_top = psi0(xi_top);
        let c1 = (p_top * xi_top.powi(3) / a2 - 1.0) * xi_top;
        let surv_top = 0.5 * a2 / (xi_top * xi_top) * (1.0 + 2.0 / 3.0 * c1 / xi_top);
        let e1_top = a2 / xi_top * (1.0 + 0.5 * c1 / xi_top);

        // Integrate Ψ₀ and u·Ψ₀ over each grid interval, then accumulate
        // from the top.
        let mut surv = vec![0.0; n];
        let mut e1 = vec![0.0; n];
        surv[n - 1] = surv_top;
        e1[n - 1] = e1_top;
        for i in (0..n - 1).rev() {
            let (lo, hi) = (grid[i], grid[i + 1]);
            let (ds, _) = integrate_split(psi0, lo, hi, &[], 1e-12);
            let (de, _) = integrate_split(|u| u * psi0(u), lo, hi, &[], 1e-12);
            surv[i] = surv[i + 1] + ds;
            e1[i] = e1[i + 1] + de;
        }

        // F_K(ξ) = 2 ∫_0^ξ Surv; accumulate from zero with the same grid
        // using ∫_lo^hi Surv du = Surv(lo)·(hi−lo) − ∫_lo^hi (hi−u)Ψ₀(u) du.
        let mut fk = vec![0.0; n];
        for i in 1..n {
            let s0 = surv[i - 1];
            let (lo, hi) = (grid[i - 1], grid[i]);
            let (moment, _) = integrate_split(|u| (hi - u) * psi0(u), lo, hi, &[], 1e-12);
            fk[i] = fk[i - 1] + 2.0 * (s0 * (hi - lo) - moment);
        }
        let fk_top = fk[n - 1];

        let surv_interp = MonotoneCubic::new(grid.clone(), surv.clone());
        let e1_interp = MonotoneCubic::new(grid.clone(), e1);
        let fk_interp = MonotoneCubic::new(grid.clone(), fk.clone());
        // Strictly increasing F_K, safe to invert on the grid.
        let fk_inv = MonotoneCubic::new(fk, grid);

        Self {
            surv: surv_interp,
            e1: e1_interp,
            fk: fk_interp,
            fk_inv,
            xi_top,
            surv_top,
            e1_top,
            fk_top,
        }
    }

    /// Surv(ξ) = ∫_ξ^∞ Ψ₀.
    pub fn survival(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 1.0;
        }
        if xi >= self.xi_top {
            return self.surv_top * (self.xi_top / xi).powi(2);
        }
        self.surv.eval(xi)
    }

    /// E₁(ξ) = ∫_ξ^∞ u Ψ₀ du; E₁(0) is the mean flight length 1/2.
    pub fn partial_mean(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return self.e1.eval(0.0);
        }
        if xi >= self.xi_top {
            return self.e1_top * self.xi_top / xi;
        }
        self.e1.eval(xi)
    }

    /// Residual flight density Ψ(ξ) = 2·Surv(ξ); integrates to one.
    pub fn residual_density(&self, xi: f64) -> f64 {
        2.0 * self.survival(xi)
    }

    /// S_Ψ(x) = ∫_x^∞ Ψ(u) du = 2(E₁(x) − x·Surv(x)).
    pub fn residual_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        (2.0 * (self.partial_mean(x) - x * self.survival(x))).clamp(0.0, 1.0)
    }

    /// CDF of the initial flight length (the ξ-marginal of K).
    pub fn initial_flight_cdf(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        if xi >= self.xi_top {
            return 1.0 - self.residual_survival(xi);
        }
        (self.fk.eval(xi)).clamp(0.0, 1.0)
    }

    /// Inverse CDF of the initial flight length, with the analytic 1/ξ tail
    /// beyond the tabulated range.
    pub fn initial_flight_quantile(&self, u: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&u));
        if u >= self.fk_top {
            let s_top = 1.0 - self.fk_top;
            // S_Ψ(ξ) ≈ c/ξ matched continuously at the grid top.
            let c = self.xi_top * s_top;
            return c / (1.0 - u);
        }
        self.fk_inv.eval(u)
    }
}
