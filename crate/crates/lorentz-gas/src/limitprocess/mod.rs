//! The limiting random flight process: exact samplers for the Markov chain
//! of (flight length, collision mark) pairs and the piecewise-linear path
//! built from them.
//!
//! Sampling is rejection-free. For the planar lattice the impact parameter
//! is drawn by inverting the dilogarithm closed form of its conditional
//! CDF and the flight length by inverting the piecewise conditional CDF
//! (analytic on the plateau piece, safeguarded Newton on the logarithmic
//! piece, both to 1e-12). The union model draws one candidate flight per
//! member — the exiting member through the transition law, the others
//! through the integrated law — and keeps the minimum, which reproduces
//! the product-form kernels exactly.

pub mod wtable;

use crate::kernels::lattice2d::{invert_flight_cdf, Lattice2dTables, PairGeom, WCdf};
use crate::kernels::KernelModel;
use crate::microdynamics::{scatter, ScatteringMap};
use crate::rng;
use rand_chacha::rand_core::RngCore;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("model/dimension mismatch: {0}")]
    Model(String),
    #[error("time {t} outside the covered horizon {horizon}")]
    Horizon { t: f64, horizon: f64 },
}

/// Exact sampler for one kernel model.
pub struct LimitSampler {
    model: KernelModel,
    dim: usize,
}

impl LimitSampler {
    pub fn new(model: KernelModel, dim: usize) -> Result<Self, ChainError> {
        match &model {
            KernelModel::Poisson { .. } => {
                if !(dim == 2 || dim == 3) {
                    return Err(ChainError::Model("dimension must be 2 or 3".into()));
                }
            }
            _ => {
                if dim != 2 {
                    return Err(ChainError::Model(
                        "lattice kernels are planar (dim = 2)".into(),
                    ));
                }
            }
        }
        Ok(Self { model, dim })
    }

    pub fn model(&self) -> &KernelModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn sample_h<R: RngCore>(&self, rng: &mut R) -> [f64; 2] {
        if self.dim == 2 {
            [rng::uniform_in(rng, -1.0, 1.0), 0.0]
        } else {
            // Uniform in the unit disk.
            let r = rng::uniform(rng).sqrt();
            let phi = 2.0 * std::f64::consts::PI * rng::uniform(rng);
            [r * phi.cos(), r * phi.sin()]
        }
    }

    /// Draws `(ξ, ω)` from the transition density `k(ω', ξ, ω)` given the
    /// exit mark.
    pub fn sample_transition<R: RngCore>(
        &self,
        prev_colour: usize,
        prev_h: [f64; 2],
        rng: &mut R,
    ) -> (f64, usize, [f64; 2]) {
        match &self.model {
            KernelModel::Poisson { xi_bar } => {
                let xi = rng::exponential(rng, *xi_bar);
                (xi, 0, self.sample_h(rng))
            }
            KernelModel::Lattice2d => {
                let (xi, w) = lattice_transition(prev_h[0], rng);
                (xi, 0, [w, 0.0])
            }
            KernelModel::UnionOfLattices { densities } => {
                // Exiting member: next hit through the transition law.
                let (xi0, w0) = lattice_transition(prev_h[0], rng);
                let mut best_xi = xi0 / densities[prev_colour];
                let mut best = (prev_colour, w0);
                // Other members: fresh flights through the integrated law.
                for (i, &d) in densities.iter().enumerate() {
                    if i == prev_colour {
                        continue;
                    }
                    let (xi_i, w_i) = lattice_initial(rng);
                    let xi_i = xi_i / d;
                    if xi_i < best_xi {
                        best_xi = xi_i;
                        best = (i, w_i);
                    }
                }
                (best_xi, best.0, [best.1, 0.0])
            }
        }
    }

    /// Draws `(ξ, ω)` from the integrated law `K(ξ, ω)` (the first flight
    /// from stationary initial data).
    pub fn sample_initial<R: RngCore>(&self, rng: &mut R) -> (f64, usize, [f64; 2]) {
        match &self.model {
            KernelModel::Poisson { xi_bar } => {
                let xi = rng::exponential(rng, *xi_bar);
                (xi, 0, self.sample_h(rng))
            }
            KernelModel::Lattice2d => {
                let (xi, w) = lattice_initial(rng);
                (xi, 0, [w, 0.0])
            }
            KernelModel::UnionOfLattices { densities } => {
                let mut best_xi = f64::INFINITY;
                let mut best = (0usize, 0.0f64);
                for (i, &d) in densities.iter().enumerate() {
                    let (xi_i, w_i) = lattice_initial(rng);
                    let xi_i = xi_i / d;
                    if xi_i < best_xi {
                        best_xi = xi_i;
                        best = (i, w_i);
                    }
                }
                (best_xi, best.0, [best.1, 0.0])
            }
        }
    }

    /// Draws an exit mark from the stationary mark measure p.
    pub fn sample_stationary_mark<R: RngCore>(&self, rng: &mut R) -> (usize, [f64; 2]) {
        let colour = match &self.model {
            KernelModel::UnionOfLattices { densities } => {
                let u = rng::uniform(rng);
                let mut acc = 0.0;
                let mut c = densities.len() - 1;
                for (i, &d) in densities.iter().enumerate() {
                    acc += d;
                    if u < acc {
                        c = i;
                        break;
                    }
                }
                c
            }
            _ => 0,
        };
        (colour, self.sample_h(rng))
    }
}

/// Planar-lattice transition draw: `w` through the tabulated inverse CDF
/// (exact dilogarithm inversion at the table nodes and outside its core),
/// then `ξ` by exact inversion of the piecewise conditional flight CDF.
pub fn lattice_transition<R: RngCore>(w_prev: f64, rng: &mut R) -> (f64, f64) {
    let u1 = rng::uniform_open(rng);
    let w = wtable::sample_w(w_prev, u1);
    let geom = PairGeom::new(w_prev, w);
    let u2 = rng::uniform_open(rng);
    let xi = invert_flight_cdf(&geom, u2);
    (xi, w)
}

/// Fully closed-form transition draw (dilogarithm CDF inverted by
/// safeguarded Newton); the oracle path used to build and validate the
/// tabulated sampler.
pub fn lattice_transition_exact<R: RngCore>(w_prev: f64, rng: &mut R) -> (f64, f64) {
    let flip = w_prev < 0.0;
    let wp = w_prev.abs().min(1.0 - 1e-12);
    let cdf = WCdf::new(wp);
    let u1 = rng::uniform_open(rng);
    let mut w = cdf.invert(u1 * cdf.total, None);
    if flip {
        w = -w;
    }
    let geom = PairGeom::new(w_prev, w);
    let u2 = rng::uniform_open(rng);
    let xi = invert_flight_cdf(&geom, u2);
    (xi, w)
}

/// Exact draw from the integrated law of the planar lattice: `ξ` from the
/// tabulated marginal quantile (analytic 1/ξ tail), then `|w|` from the
/// tabulated conditional in the support-normalised coordinate.
pub fn lattice_initial<R: RngCore>(rng: &mut R) -> (f64, f64) {
    let tables = Lattice2dTables::get();
    let u1 = rng::uniform_open(rng);
    let xi = tables.initial_flight_quantile(u1);
    let s = k_cond_table().sample_s(xi, rng::uniform_open(rng));
    let w_min = (1.0 - 1.0 / xi).max(0.0);
    let w_abs = (w_min + s * (1.0 - w_min)).min(1.0 - 1e-12);
    let w = if rng::uniform(rng) < 0.5 { -w_abs } else { w_abs };
    (xi, w)
}

// ---------------------------------------------------------------------------
// Cached tables for the samplers (built once, deterministic).
// ---------------------------------------------------------------------------

/// Conditional law of the support-normalised impact coordinate given the
/// initial flight length: inverse CDFs tabulated on a flight grid.
struct KCondTable {
    xi_nodes: Vec<f64>,
    /// Per node: s-quantiles at `NQ` evenly spaced levels.
    quantiles: Vec<Vec<f64>>,
}

const NQ: usize = 65;

static K_COND: OnceLock<KCondTable> = OnceLock::new();

fn k_cond_table() -> &'static KCondTable {
    K_COND.get_or_init(|| {
        let mut xi_nodes: Vec<f64> = Vec::new();
        // Dense through the plateau and the first support shoulder, then
        // geometric out to the tail the marginal table covers.
        for i in 0..=20 {
            xi_nodes.push(0.05 * i as f64 + 1e-9);
        }
        let n_geo = 160;
        for i in 1..=n_geo {
            xi_nodes.push(1.0 * (1e4f64 / 1.0).powf(i as f64 / n_geo as f64));
        }
        xi_nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let ns = 256usize;
        let quantiles = xi_nodes
            .iter()
            .map(|&xi| {
                let w_min = (1.0 - 1.0 / xi).max(0.0);
                let span = 1.0 - w_min;
                // Density of s on [0, 1] ∝ K(ξ, w_min + s·span).
                let mut cdf = vec![0.0; ns + 1];
                let mut prev = crate::kernels::lattice2d::big_k(xi, w_min.min(1.0 - 1e-12));
                for k in 1..=ns {
                    let s = k as f64 / ns as f64;
                    let w = (w_min + s * span).min(1.0 - 1e-9);
                    let val = crate::kernels::lattice2d::big_k(xi, w);
                    cdf[k] = cdf[k - 1] + 0.5 * (prev + val) / ns as f64;
                    prev = val;
                }
                let total = cdf[ns];
                let mut qs = vec![0.0; NQ];
                for (qi, q) in qs.iter_mut().enumerate() {
                    let target = total * qi as f64 / (NQ - 1) as f64;
                    let idx = cdf.partition_point(|&c| c < target).min(ns);
                    let (c0, c1) = (cdf[idx.saturating_sub(1)], cdf[idx.max(1)]);
                    let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
                    *q = ((idx.max(1) - 1) as f64 + frac) / ns as f64;
                }
                qs[0] = 0.0;
                qs[NQ - 1] = 1.0;
                qs
            })
            .collect();
        KCondTable {
            xi_nodes,
            quantiles,
        }
    })
}

impl KCondTable {
    fn sample_s(&self, xi: f64, u: f64) -> f64 {
        let n = self.xi_nodes.len();
        let idx = self.xi_nodes.partition_point(|&x| x < xi);
        let (i0, i1, lam) = if idx == 0 {
            (0, 0, 0.0)
        } else if idx >= n {
            (n - 1, n - 1, 0.0)
        } else {
            let (a, b) = (self.xi_nodes[idx - 1], self.xi_nodes[idx]);
            (idx - 1, idx, (xi - a) / (b - a))
        };
        let pick = |qs: &Vec<f64>| -> f64 {
            let f = u * (NQ - 1) as f64;
            let j = (f as usize).min(NQ - 2);
            let t = f - j as f64;
            qs[j] + t * (qs[j + 1] - qs[j])
        };
        (1.0 - lam) * pick(&self.quantiles[i0]) + lam * pick(&self.quantiles[i1])
    }
}

// ---------------------------------------------------------------------------
// Chain state and paths.
// ---------------------------------------------------------------------------

/// State after the n-th collision of the limiting chain.
#[derive(Debug, Clone, Copy)]
pub struct ChainState<const D: usize> {
    pub n: usize,
    /// Length of the n-th flight.
    pub xi: f64,
    pub colour: usize,
    /// Impact parameter of the n-th collision (first D−1 entries).
    pub h: [f64; 2],
    /// Outgoing velocity after the collision.
    pub v: [f64; D],
    /// Collision position.
    pub q: [f64; D],
    /// Cumulative time of the collision.
    pub t: f64,
}

/// Piecewise-linear flight path with its collision skeleton.
#[derive(Debug, Clone)]
pub struct FlightPath<const D: usize> {
    pub q0: [f64; D],
    pub v0: [f64; D],
    pub states: Vec<ChainState<D>>,
}

/// Augmented Markov state at time t: position, velocity, residual time to
/// the next collision, its colour and the post-collision velocity.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedState<const D: usize> {
    pub q: [f64; D],
    pub v: [f64; D],
    pub t_next: f64,
    pub colour_next: usize,
    pub h_next: [f64; 2],
    pub v_plus: [f64; D],
}

impl<const D: usize> FlightPath<D> {
    pub fn horizon(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }

    fn segment_at(&self, t: f64) -> (f64, [f64; D], [f64; D], usize) {
        // Index of the last collision at or before t.
        let idx = self.states.partition_point(|s| s.t <= t);
        if idx == 0 {
            (0.0, self.q0, self.v0, 0)
        } else {
            let s = &self.states[idx - 1];
            (s.t, s.q, s.v, idx)
        }
    }

    /// Position and velocity at time `t` within the covered horizon.
    pub fn eval(&self, t: f64) -> Result<([f64; D], [f64; D]), ChainError> {
        if t < 0.0 || t > self.horizon() {
            return Err(ChainError::Horizon {
                t,
                horizon: self.horizon(),
            });
        }
        let (t0, q0, v, _) = self.segment_at(t);
        Ok((crate::geometry::axpy(q0, t - t0, v), v))
    }

    /// The augmented state; needs one collision beyond `t`.
    pub fn extended_state(&self, t: f64) -> Result<ExtendedState<D>, ChainError> {
        let (t0, q0, v, idx) = self.segment_at(t);
        let next = self.states.get(idx).ok_or(ChainError::Horizon {
            t,
            horizon: self.horizon(),
        })?;
        Ok(ExtendedState {
            q: crate::geometry::axpy(q0, t - t0, v),
            v,
            t_next: next.t - t,
            colour_next: next.colour,
            h_next: next.h,
            v_plus: next.v,
        })
    }
}

/// Stop rule for chain generation.
#[derive(Debug, Clone, Copy)]
pub enum ChainStop {
    /// Cover `[0, t]` including one collision beyond the horizon.
    Horizon(f64),
    /// Exactly `n` collisions.
    Collisions(usize),
}

/// Incremental chain walker; carries the most recent flight segment so
/// ensembles can read off positions at snapshot times without storing the
/// path.
pub struct ChainWalker<'a, const D: usize, R: RngCore> {
    sampler: &'a LimitSampler,
    map: &'a ScatteringMap,
    pub rng: R,
    pub n: usize,
    pub t: f64,
    pub q: [f64; D],
    pub v: [f64; D],
    pub colour: usize,
    pub h: [f64; 2],
    /// Velocity during the most recently completed flight.
    flight_v: [f64; D],
    have_mark: bool,
}

impl<'a, const D: usize, R: RngCore> ChainWalker<'a, D, R> {
    pub fn new(
        sampler: &'a LimitSampler,
        map: &'a ScatteringMap,
        q0: [f64; D],
        v0: [f64; D],
        rng: R,
    ) -> Self {
        assert_eq!(sampler.dim(), D);
        Self {
            sampler,
            map,
            rng,
            n: 0,
            t: 0.0,
            q: q0,
            v: v0,
            colour: 0,
            h: [0.0, 0.0],
            flight_v: v0,
            have_mark: false,
        }
    }

    /// Starts the mark chain from the stationary measure p instead of the
    /// integrated law; the first flight then follows the transition law.
    pub fn start_from_stationary_mark(&mut self) {
        let (c, h) = self.sampler.sample_stationary_mark(&mut self.rng);
        self.colour = c;
        self.h = h;
        self.have_mark = true;
    }

    /// Advances by one flight and collision; returns the new state.
    pub fn step(&mut self) -> ChainState<D> {
        let (xi, colour, h) = if self.n == 0 && !self.have_mark {
            self.sampler.sample_initial(&mut self.rng)
        } else {
            self.sampler
                .sample_transition(self.colour, self.h, &mut self.rng)
        };
        self.flight_v = self.v;
        self.t += xi;
        self.q = crate::geometry::axpy(self.q, xi, self.v);
        let v_new = scatter(self.v, &h, self.map).expect("impact parameter in range");
        self.v = v_new;
        self.colour = colour;
        self.h = h;
        self.n += 1;
        ChainState {
            n: self.n,
            xi,
            colour,
            h,
            v: self.v,
            q: self.q,
            t: self.t,
        }
    }

    /// Position at time `t`, stepping forward as needed. Snapshot times
    /// must be queried in increasing order.
    pub fn position_at(&mut self, t: f64) -> [f64; D] {
        while self.t <= t {
            self.step();
        }
        crate::geometry::axpy(self.q, t - self.t, self.flight_v)
    }
}

/// Samples a full path: first flight from the integrated law, transitions
/// from the kernel, velocities through the shared scattering recursion.
pub fn run_chain<const D: usize, R: RngCore>(
    sampler: &LimitSampler,
    map: &ScatteringMap,
    q0: [f64; D],
    v0: [f64; D],
    stop: ChainStop,
    rng: R,
) -> FlightPath<D> {
    let mut walker = ChainWalker::new(sampler, map, q0, v0, rng);
    let mut states = Vec::new();
    match stop {
        ChainStop::Horizon(t_max) => {
            while walker.t <= t_max {
                states.push(walker.step());
            }
        }
        ChainStop::Collisions(n) => {
            for _ in 0..n {
                states.push(walker.step());
            }
        }
    }
    FlightPath { q0, v0, states }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Mark;

    fn ks_uniform(mut xs: Vec<f64>, lo: f64, hi: f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let mut d: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let f = (x - lo) / (hi - lo);
            d = d.max((f - i as f64 / n).abs());
            d = d.max(((i + 1) as f64 / n - f).abs());
        }
        d
    }

    #[test]
    fn poisson_transition_moments() {
        let s = LimitSampler::new(KernelModel::poisson(2), 2).unwrap();
        let mut rng = rng::stream(100, 0, 0);
        let n = 1_000_000;
        let mut mean = 0.0;
        let mut ws = Vec::with_capacity(n);
        for _ in 0..n {
            let (xi, _, h) = s.sample_transition(0, [0.3, 0.0], &mut rng);
            mean += xi;
            ws.push(h[0]);
        }
        mean /= n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean ξ = {mean}");
        assert!(ks_uniform(ws, -1.0, 1.0) < 0.002);
    }

    #[test]
    fn lattice_draws_respect_support() {
        let model = KernelModel::Lattice2d;
        let mut rng = rng::stream(101, 0, 0);
        for _ in 0..100_000 {
            let wp = rng::uniform_in(&mut rng, -1.0, 1.0);
            let (xi, w) = lattice_transition(wp, &mut rng);
            let sup = model.xi_support_max(Mark::colourless(wp), Mark::colourless(w));
            assert!(xi <= sup * (1.0 + 1e-9), "xi={xi} beyond support {sup}");
            assert!(w > -1.0 && w < 1.0);
            assert!(xi > 0.0);
        }
    }

    #[test]
    fn lattice_transition_w_matches_cdf() {
        // Empirical CDF of w given w' against the dilogarithm closed form.
        let mut rng = rng::stream(102, 0, 0);
        let wp = 0.37;
        let cdf = WCdf::new(wp);
        let n = 200_000;
        let mut ws: Vec<f64> = (0..n).map(|_| lattice_transition(wp, &mut rng).1).collect();
        ws.sort_by(f64::total_cmp);
        let mut worst: f64 = 0.0;
        for (i, w) in ws.iter().enumerate() {
            let f = cdf.eval(*w) / cdf.total;
            worst = worst.max((f - i as f64 / n as f64).abs());
        }
        assert!(worst < 0.004, "KS vs closed-form w-CDF: {worst}");
    }

    #[test]
    fn stationary_flights_follow_psi0() {
        // With w' uniform, flight lengths are Ψ₀-distributed.
        let tables = Lattice2dTables::get();
        let mut rng = rng::stream(103, 0, 0);
        let n = 1_000_000;
        let mut xs: Vec<f64> = Vec::with_capacity(n);
        for _ in 0..n {
            let wp = rng::uniform_in(&mut rng, -1.0, 1.0);
            xs.push(lattice_transition(wp, &mut rng).0);
        }
        xs.sort_by(f64::total_cmp);
        let mut worst: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let f = 1.0 - tables.survival(*x);
            worst = worst.max((f - i as f64 / n as f64).abs());
        }
        assert!(worst < 0.005, "KS vs Ψ₀: {worst}");
    }

    #[test]
    fn initial_law_matches_quadrature() {
        let tables = Lattice2dTables::get();
        let mut rng = rng::stream(104, 0, 0);
        let n = 1_000_000;
        let mut xis = Vec::with_capacity(n);
        let mut ws = Vec::with_capacity(n);
        for _ in 0..n {
            let (xi, w) = lattice_initial(&mut rng);
            xis.push(xi);
            ws.push(w);
        }
        // ξ-marginal against the tabulated CDF.
        xis.sort_by(f64::total_cmp);
        let mut worst: f64 = 0.0;
        for (i, x) in xis.iter().enumerate() {
            let f = tables.initial_flight_cdf(*x);
            worst = worst.max((f - i as f64 / n as f64).abs());
        }
        assert!(worst < 0.004, "KS of initial ξ: {worst}");
        // Truncated mean against quadrature of the marginal density.
        let cap = 10.0;
        let emp: f64 = xis.iter().filter(|&&x| x <= cap).sum::<f64>() / n as f64;
        let (want, _) = crate::numeric::quad::integrate(
            |x| x * tables.residual_density(x),
            0.0,
            cap,
            1e-9,
        );
        assert!(
            (emp - want).abs() / want < 0.01,
            "truncated mean {emp} vs {want}"
        );
        // w-marginal against quadrature of the closed-form inner integral.
        // The marginal has integrable log spikes at ±1; the spike mass is
        // recovered from symmetry instead of integrating into it.
        ws.sort_by(f64::total_cmp);
        let grid: Vec<f64> = (0..=20).map(|i| -0.95 + 0.095 * i as f64).collect();
        let mut segs = vec![0.0; grid.len() - 1];
        for gi in 0..grid.len() - 1 {
            let (seg, _) = crate::numeric::quad::integrate(
                |w| 0.5 * crate::kernels::lattice2d::k_w_marginal(w),
                grid[gi],
                grid[gi + 1],
                1e-7,
            );
            segs[gi] = seg;
        }
        let interior: f64 = segs.iter().sum();
        let mut cdf_w = vec![0.0; grid.len()];
        cdf_w[0] = 0.5 * (1.0 - interior);
        for gi in 1..grid.len() {
            cdf_w[gi] = cdf_w[gi - 1] + segs[gi - 1];
        }
        let nf = n as f64;
        let mut worst_w: f64 = 0.0;
        for (gi, &g) in grid.iter().enumerate() {
            let emp = ws.partition_point(|&x| x <= g) as f64 / nf;
            worst_w = worst_w.max((emp - cdf_w[gi]).abs());
        }
        assert!(worst_w < 0.005, "KS of initial w: {worst_w}");
    }

    #[test]
    fn union_reduces_to_lattice_in_law() {
        let u = LimitSampler::new(KernelModel::union(&[1.0]), 2).unwrap();
        let mut rng = rng::stream(105, 0, 0);
        let n = 200_000;
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            let wp = rng::uniform_in(&mut rng, -1.0, 1.0);
            let (xi, c, _) = u.sample_transition(0, [wp, 0.0], &mut rng);
            assert_eq!(c, 0);
            xs.push(xi);
        }
        let tables = Lattice2dTables::get();
        xs.sort_by(f64::total_cmp);
        let mut worst: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let f = 1.0 - tables.survival(*x);
            worst = worst.max((f - i as f64 / n as f64).abs());
        }
        assert!(worst < 0.005, "single-member union ≠ lattice: {worst}");
    }

    #[test]
    fn union_stationary_colours() {
        let model = KernelModel::union(&[0.5, 0.5]);
        let s = LimitSampler::new(model, 2).unwrap();
        let mut rng = rng::stream(106, 0, 0);
        let mut colour = 0usize;
        let mut h = [0.2, 0.0];
        let mut counts = [0usize; 2];
        let n = 200_000;
        for _ in 0..n {
            let (_, c, hh) = s.sample_transition(colour, h, &mut rng);
            colour = c;
            h = hh;
            counts[c] += 1;
        }
        let frac = counts[0] as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "colour fraction {frac}");
    }

    #[test]
    fn chain_renewal_count() {
        // Disordered medium: collisions by time t have mean t/ξ̄.
        let s = LimitSampler::new(KernelModel::poisson(2), 2).unwrap();
        let map = ScatteringMap::Specular;
        let t_target = 100.0;
        let n_paths = 20_000;
        let mut total = 0usize;
        for p in 0..n_paths {
            let rng = rng::stream(107, 1, p);
            let path = run_chain(
                &s,
                &map,
                [0.0, 0.0],
                [1.0, 0.0],
                ChainStop::Horizon(t_target),
                rng,
            );
            total += path.states.iter().filter(|st| st.t <= t_target).count();
        }
        let mean = total as f64 / n_paths as f64;
        let want = t_target / 0.5;
        assert!(
            (mean - want).abs() / want < 0.01,
            "mean collisions {mean} vs {want}"
        );
    }

    #[test]
    fn path_evaluation() {
        let s = LimitSampler::new(KernelModel::Lattice2d, 2).unwrap();
        let map = ScatteringMap::Specular;
        let path = run_chain(
            &s,
            &map,
            [1.0, 2.0],
            [0.0, 1.0],
            ChainStop::Collisions(30),
            rng::stream(108, 0, 0),
        );
        // t = 0.
        let (q, v) = path.eval(0.0).unwrap();
        assert_eq!(q, [1.0, 2.0]);
        assert_eq!(v, [0.0, 1.0]);
        // First vertex.
        let s1 = &path.states[0];
        let (q, v) = path.eval(s1.t).unwrap();
        assert!(crate::geometry::norm(crate::geometry::sub(q, s1.q)) < 1e-12);
        assert_eq!(v, s1.v);
        // Midpoint of the first flight.
        let (q, _) = path.eval(0.5 * s1.t).unwrap();
        let want = crate::geometry::axpy([1.0, 2.0], 0.5 * s1.t, [0.0, 1.0]);
        assert!(crate::geometry::norm(crate::geometry::sub(q, want)) < 1e-12);
        // Beyond horizon errors.
        assert!(path.eval(path.horizon() + 1.0).is_err());
        // Extended state at 0.
        let ext = path.extended_state(0.0).unwrap();
        assert!((ext.t_next - s1.t).abs() < 1e-12);
        assert_eq!(ext.v_plus, s1.v);
        // Consistency of the collision counter: T_{V(t)} <= t < T_{V(t)+1}.
        for &tq in &[0.3, 1.7, 5.0, 9.9] {
            if tq < path.horizon() {
                let ext = path.extended_state(tq).unwrap();
                assert!(ext.t_next > 0.0);
            }
        }
    }

    #[test]
    fn stationary_marks_stay_uniform() {
        // Chain started from p keeps h uniform over the first steps.
        let s = LimitSampler::new(KernelModel::Lattice2d, 2).unwrap();
        let map = ScatteringMap::Specular;
        let n_chains = 100_000;
        let depth = 8;
        let mut per_step: Vec<Vec<f64>> = vec![Vec::with_capacity(n_chains); depth];
        for c in 0..n_chains {
            let rng = rng::stream(109, 2, c as u64);
            let mut walker = ChainWalker::<2, _>::new(&s, &map, [0.0, 0.0], [1.0, 0.0], rng);
            walker.start_from_stationary_mark();
            for slot in per_step.iter_mut() {
                let st = walker.step();
                slot.push(st.h[0]);
            }
        }
        for (k, slot) in per_step.into_iter().enumerate() {
            let d = ks_uniform(slot, -1.0, 1.0);
            assert!(d < 0.01, "step {k}: KS {d}");
        }
    }

    #[test]
    fn poisson3_chain_runs() {
        let s = LimitSampler::new(KernelModel::poisson(3), 3).unwrap();
        let map = ScatteringMap::Specular;
        let path = run_chain(
            &s,
            &map,
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            ChainStop::Collisions(200),
            rng::stream(110, 0, 0),
        );
        let mean = path.states.last().unwrap().t / 200.0;
        // ξ̄ = 1/π in three dimensions.
        assert!((mean - 1.0 / std::f64::consts::PI).abs() < 0.05, "{mean}");
        for st in &path.states {
            assert!((crate::geometry::norm2(st.v) - 1.0).abs() < 1e-12);
        }
    }
}
