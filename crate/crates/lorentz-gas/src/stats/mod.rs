//! Estimators and hypothesis checks tying microscopic simulations,
//! limit-process samples and analytic kernels together: KS distances with
//! right-censoring, binned kernel comparisons, mean squared displacement
//! curves with robust quantile scales, tail exponent fits and reproducible
//! reports.

use crate::kernels::KernelModel;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {need} uncensored samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("all samples are censored")]
    AllCensored,
    #[error("time range not covered by the ensemble")]
    RangeExceeded,
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
}

/// Sorted empirical sample with right-censored observations tracked
/// separately (censored entries record the censoring time).
#[derive(Debug, Clone, Default)]
pub struct EmpiricalDistribution {
    uncensored: Vec<f64>,
    censored: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn from_samples(mut xs: Vec<f64>) -> Self {
        xs.sort_by(f64::total_cmp);
        Self {
            uncensored: xs,
            censored: Vec::new(),
        }
    }

    pub fn with_censored(mut xs: Vec<f64>, mut cens: Vec<f64>) -> Self {
        xs.sort_by(f64::total_cmp);
        cens.sort_by(f64::total_cmp);
        Self {
            uncensored: xs,
            censored: cens,
        }
    }

    pub fn n_total(&self) -> usize {
        self.uncensored.len() + self.censored.len()
    }

    pub fn n_uncensored(&self) -> usize {
        self.uncensored.len()
    }

    pub fn censored_count(&self) -> usize {
        self.censored.len()
    }

    pub fn uncensored(&self) -> &[f64] {
        &self.uncensored
    }

    /// Empirical CDF (all observations below the smallest censoring time
    /// are uncensored, so the plain count is valid there).
    pub fn cdf(&self, x: f64) -> f64 {
        self.uncensored.partition_point(|&v| v <= x) as f64 / self.n_total() as f64
    }

    /// Kaplan–Meier survival estimate at `x` (handles right censoring).
    pub fn km_survival(&self, x: f64) -> f64 {
        // With equal censoring times the product-limit form reduces to the
        // plain survival below the cutoff; implement the general product.
        let mut surv = 1.0;
        let mut at_risk = self.n_total();
        let mut ci = 0usize;
        for &t in &self.uncensored {
            if t > x {
                break;
            }
            while ci < self.censored.len() && self.censored[ci] < t {
                at_risk -= 1;
                ci += 1;
            }
            if at_risk == 0 {
                break;
            }
            surv *= 1.0 - 1.0 / at_risk as f64;
            at_risk -= 1;
        }
        surv
    }

    /// Largest value below which no censoring has occurred.
    pub fn censor_cutoff(&self) -> Option<f64> {
        self.censored.first().copied()
    }

    /// Empirical quantile (uncensored part).
    pub fn quantile(&self, q: f64) -> f64 {
        assert!((0.0..=1.0).contains(&q) && !self.uncensored.is_empty());
        let idx = ((self.uncensored.len() as f64 - 1.0) * q).round() as usize;
        self.uncensored[idx]
    }
}

/// Result of a KS comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n_used: usize,
    /// Censoring cutoff the comparison was restricted to, if any.
    pub cutoff: Option<f64>,
}

/// Sup distance between the empirical CDF and a reference CDF, restricted
/// to the uncensored range (below the smallest censoring time).
pub fn ks_distance<F: Fn(f64) -> f64>(
    emp: &EmpiricalDistribution,
    cdf: F,
) -> Result<KsResult, StatsError> {
    if emp.n_uncensored() == 0 {
        return Err(StatsError::AllCensored);
    }
    if emp.n_uncensored() < 100 {
        return Err(StatsError::TooFewSamples {
            need: 100,
            got: emp.n_uncensored(),
        });
    }
    let cutoff = emp.censor_cutoff();
    let n = emp.n_total() as f64;
    let mut d: f64 = 0.0;
    let mut used = 0usize;
    for (i, &x) in emp.uncensored().iter().enumerate() {
        if let Some(c) = cutoff {
            if x >= c {
                break;
            }
        }
        let f = cdf(x);
        d = d.max((i as f64 / n - f).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
        used += 1;
    }
    if used == 0 {
        return Err(StatsError::AllCensored);
    }
    Ok(KsResult {
        statistic: d,
        n_used: used,
        cutoff,
    })
}

/// One row of a free-path comparison: per sphere radius, the KS distance
/// of rescaled flight lengths against the stationary law.
#[derive(Debug, Clone, Serialize)]
pub struct FreepathRow {
    pub r: f64,
    pub n_flights: u64,
    pub censored: u64,
    pub ks: f64,
    pub cutoff: Option<f64>,
    /// (R, empirical P(ξ>R)·R²) pairs probing the tail constant.
    pub tail_probe: Vec<(f64, f64)>,
}

/// KS of flight samples per radius against the model Ψ₀, plus the tail
/// probe P(ξ>R)·R² whose limit is half the tail constant.
pub fn freepath_compare(
    samples_by_r: &[(f64, EmpiricalDistribution)],
    model: &KernelModel,
    tail_rs: &[f64],
) -> Result<Vec<FreepathRow>, StatsError> {
    let mut rows = Vec::with_capacity(samples_by_r.len());
    for (r, emp) in samples_by_r {
        let ks = ks_distance(emp, |x| model.psi0_cdf(x))?;
        let n = emp.n_total() as f64;
        let tail_probe = tail_rs
            .iter()
            .map(|&bigr| {
                let surv = 1.0 - emp.cdf(bigr);
                (bigr, surv * bigr * bigr)
            })
            .collect();
        rows.push(FreepathRow {
            r: *r,
            n_flights: emp.n_total() as u64,
            censored: emp.censored_count() as u64,
            ks: ks.statistic,
            cutoff: ks.cutoff,
            tail_probe,
        });
        let _ = n;
    }
    Ok(rows)
}

/// Binning for kernel histogram comparisons.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelBinning {
    pub n_wprev: usize,
    pub n_xi: usize,
    pub n_w: usize,
    pub xi_max: f64,
}

impl Default for KernelBinning {
    fn default() -> Self {
        Self {
            n_wprev: 8,
            n_xi: 32,
            n_w: 32,
            xi_max: 4.0,
        }
    }
}

/// Outcome of a binned kernel comparison.
#[derive(Debug, Clone, Serialize)]
pub struct KernelCompare {
    pub binning: KernelBinning,
    pub n_pairs: u64,
    pub cells_total: usize,
    pub cells_adequate: usize,
    pub cells_within: usize,
    pub fraction_within: f64,
    pub worst_z: f64,
    pub chi2: f64,
    pub dof: usize,
    /// (w' bin, ξ cell, w cell, observed, expected) for export.
    #[serde(skip)]
    pub cells: Vec<(usize, usize, usize, f64, f64)>,
}

/// Compares collision pairs `(w', ξ, w)` cellwise against the kernel
/// density; expectations average the kernel over the exit-parameter bin.
/// Undersampled cells are flagged (excluded from the pass fraction), not
/// failed.
pub fn kernel_compare(
    pairs: &[(f64, f64, f64)],
    model: &KernelModel,
    binning: KernelBinning,
    sigma: f64,
    min_expected: f64,
) -> Result<KernelCompare, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::TooFewSamples { need: 1, got: 0 });
    }
    let nb = binning.n_wprev;
    let (nx, nw) = (binning.n_xi, binning.n_w);
    let mut counts = vec![0u64; nb * nx * nw];
    let mut bin_totals = vec![0u64; nb];
    for &(wp, xi, w) in pairs {
        let bi = (((wp + 1.0) / 2.0 * nb as f64) as usize).min(nb - 1);
        bin_totals[bi] += 1;
        if xi >= binning.xi_max {
            continue; // overflow mass accounted against expectations below
        }
        let xi_i = ((xi / binning.xi_max * nx as f64) as usize).min(nx - 1);
        let wi = (((w + 1.0) / 2.0 * nw as f64) as usize).min(nw - 1);
        counts[(bi * nx + xi_i) * nw + wi] += 1;
    }
    // Expected probability per cell: average the kernel over the w'-bin
    // (exit parameters are uniform within a bin by construction) and
    // integrate the closed-form flight tail over the ξ side.
    let gauss5 = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
        (-0.538_469_310_105_683, 0.478_628_670_499_366_47),
        (0.0, 0.568_888_888_888_888_9),
        (0.538_469_310_105_683, 0.478_628_670_499_366_47),
        (0.906_179_845_938_664, 0.236_926_885_056_189_08),
    ];
    let mut cells = Vec::with_capacity(nb * nx * nw);
    let mut within = 0usize;
    let mut adequate = 0usize;
    let mut chi2 = 0.0;
    let mut worst_z: f64 = 0.0;
    let dxi = binning.xi_max / nx as f64;
    let dw = 2.0 / nw as f64;
    for bi in 0..nb {
        let n_bin = bin_totals[bi] as f64;
        if n_bin == 0.0 {
            continue;
        }
        let wp_lo = -1.0 + 2.0 * bi as f64 / nb as f64;
        let wp_hi = wp_lo + 2.0 / nb as f64;
        for xi_i in 0..nx {
            let (xa, xb) = (xi_i as f64 * dxi, (xi_i as f64 + 1.0) * dxi);
            for wi in 0..nw {
                let (wa, wb) = (-1.0 + wi as f64 * dw, -1.0 + (wi as f64 + 1.0) * dw);
                // 5x5 Gauss over (w', w), closed-form tail over ξ.
                let mut p = 0.0;
                for &(gx, gwt) in &gauss5 {
                    let wp = 0.5 * (wp_lo + wp_hi) + 0.5 * gx * (wp_hi - wp_lo);
                    for &(hx, hwt) in &gauss5 {
                        let w = 0.5 * (wa + wb) + 0.5 * hx * (wb - wa);
                        let geom = crate::kernels::lattice2d::PairGeom::new(wp, w);
                        let seg = match model {
                            KernelModel::Lattice2d => {
                                crate::kernels::lattice2d::plateau()
                                    * (geom.tail_unit(xa) - geom.tail_unit(xb))
                            }
                            KernelModel::Poisson { xi_bar } => {
                                ((-xa / xi_bar).exp() - (-xb / xi_bar).exp())
                            }
                            KernelModel::UnionOfLattices { .. } => {
                                return Err(StatsError::Inconsistent(
                                    "union kernel comparison uses colour-resolved pairs".into(),
                                ))
                            }
                        };
                        p += gwt * hwt * seg;
                    }
                }
                // Normalise the Gauss weights (each sums to 2) and apply
                // the measure dw/2 over the w cell and the bin average.
                let p = p / 4.0 * 0.5 * (wb - wa);
                let expected = p * n_bin;
                let observed = counts[(bi * nx + xi_i) * nw + wi] as f64;
                cells.push((bi, xi_i, wi, observed, expected));
                if expected >= min_expected {
                    adequate += 1;
                    let se = (expected * (1.0 - p).max(0.0)).sqrt().max(1e-12);
                    let z = (observed - expected) / se;
                    chi2 += z * z;
                    worst_z = worst_z.max(z.abs());
                    if z.abs() <= sigma {
                        within += 1;
                    }
                }
            }
        }
    }
    if adequate == 0 {
        return Err(StatsError::TooFewSamples { need: 1, got: 0 });
    }
    Ok(KernelCompare {
        binning,
        n_pairs: pairs.len() as u64,
        cells_total: cells.len(),
        cells_adequate: adequate,
        cells_within: within,
        fraction_within: within as f64 / adequate as f64,
        worst_z,
        chi2,
        dof: adequate,
        cells,
    })
}

/// One point of the displacement statistics curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MsdPoint {
    pub t: f64,
    pub msd: f64,
    /// 0.75-quantile of the first displacement component (robust scale).
    pub q75: f64,
    pub n: usize,
}

/// Mean squared displacement and robust quantile scale per snapshot time.
/// `snapshots[k]` holds the displacement vectors of every path at
/// `times[k]`.
pub fn msd_curve(
    times: &[f64],
    snapshots: &[Vec<[f64; 2]>],
) -> Result<Vec<MsdPoint>, StatsError> {
    if times.len() != snapshots.len() {
        return Err(StatsError::Inconsistent(
            "times and snapshots differ in length".into(),
        ));
    }
    let mut out = Vec::with_capacity(times.len());
    for (t, snap) in times.iter().zip(snapshots.iter()) {
        if snap.is_empty() {
            return Err(StatsError::RangeExceeded);
        }
        let msd = snap.iter().map(|d| d[0] * d[0] + d[1] * d[1]).sum::<f64>() / snap.len() as f64;
        let mut xs: Vec<f64> = snap.iter().map(|d| d[0]).collect();
        xs.sort_by(f64::total_cmp);
        let idx = ((xs.len() as f64 - 1.0) * 0.75).round() as usize;
        out.push(MsdPoint {
            t: *t,
            msd,
            q75: xs[idx],
            n: snap.len(),
        });
    }
    Ok(out)
}

/// Normalisation of displacement components for Gaussianity tests.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum Normalisation {
    /// Scale self-estimated from the sample standard deviation.
    SelfStd,
    /// Fixed analytic scale (already divided by √t or √(t log t)).
    Fixed(f64),
}

/// KS distance of normalised displacement components against the standard
/// Gaussian.
pub fn gaussianity_test(
    components: &[f64],
    normalisation: Normalisation,
) -> Result<KsResult, StatsError> {
    if components.len() < 100 {
        return Err(StatsError::TooFewSamples {
            need: 100,
            got: components.len(),
        });
    }
    let scale = match normalisation {
        Normalisation::Fixed(s) => s,
        Normalisation::SelfStd => {
            let n = components.len() as f64;
            let mean = components.iter().sum::<f64>() / n;
            let var = components.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            var.sqrt()
        }
    };
    if !(scale > 0.0) {
        // Degenerate sample (e.g. a point mass): maximal disagreement.
        return Ok(KsResult {
            statistic: 0.5,
            n_used: components.len(),
            cutoff: None,
        });
    }
    let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    let emp = EmpiricalDistribution::from_samples(
        components.iter().map(|x| x / scale).collect(),
    );
    ks_distance(&emp, |x| normal.cdf(x))
}

/// Standard normal quantile (used for the analytic 0.75-quantile scale).
pub fn normal_quantile(p: f64) -> f64 {
    statrs::distribution::Normal::new(0.0, 1.0)
        .unwrap()
        .inverse_cdf(p)
}

/// Chi-squared CDF helper for aggregate histogram tests.
pub fn chi2_cdf(x: f64, dof: f64) -> f64 {
    statrs::distribution::ChiSquared::new(dof).unwrap().cdf(x)
}

/// Log-log least-squares fit of the empirical survival function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailFit {
    /// Survival exponent (positive; density exponent is this plus one).
    pub exponent: f64,
    pub stderr: f64,
    /// Relative bend over the range: the quadratic term's contribution at
    /// the range edges divided by the linear slope. Near zero for a power
    /// law; order one for exponential decay. Values above ~0.1 flag that
    /// the sample is not power-law over the range.
    pub curvature: f64,
    pub n_in_range: usize,
}

/// Fits `log S(x) = c − α log x` over `range`, on log-spaced probe points.
pub fn tail_exponent_fit(
    emp: &EmpiricalDistribution,
    range: (f64, f64),
) -> Result<TailFit, StatsError> {
    let (lo, hi) = range;
    let xs = emp.uncensored();
    let n_in = xs.partition_point(|&v| v <= hi) - xs.partition_point(|&v| v < lo);
    if n_in < 1000 {
        return Err(StatsError::TooFewSamples {
            need: 1000,
            got: n_in,
        });
    }
    let n_total = emp.n_total() as f64;
    let probes = 24usize;
    let mut pts = Vec::with_capacity(probes);
    for i in 0..probes {
        let x = lo * (hi / lo).powf(i as f64 / (probes - 1) as f64);
        let surv = 1.0 - xs.partition_point(|&v| v <= x) as f64 / n_total;
        if surv > 0.0 {
            pts.push((x.ln(), surv.ln()));
        }
    }
    if pts.len() < 4 {
        return Err(StatsError::TooFewSamples {
            need: 4,
            got: pts.len(),
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let slope = sxy / sxx;
    let resid2 = pts
        .iter()
        .map(|p| {
            let e = p.1 - my - slope * (p.0 - mx);
            e * e
        })
        .sum::<f64>();
    let stderr = (resid2 / (m - 2.0) / sxx).sqrt();
    // Quadratic term significance.
    let mut z_num = 0.0;
    let mut z_den = 0.0;
    for p in &pts {
        let x2 = (p.0 - mx) * (p.0 - mx) - sxx / m;
        z_num += x2 * (p.1 - my - slope * (p.0 - mx));
        z_den += x2 * x2;
    }
    let quad = if z_den > 0.0 { z_num / z_den } else { 0.0 };
    let quad_se = (resid2 / (m - 3.0).max(1.0) / z_den.max(1e-300)).sqrt();
    Ok(TailFit {
        exponent: -slope,
        stderr,
        curvature_z: (quad / quad_se.max(1e-300)).abs(),
        n_in_range: n_in,
    })
}

/// Running second-moment estimates at the given sample counts.
pub fn running_second_moment<I: Iterator<Item = f64>>(
    samples: I,
    checkpoints: &[usize],
) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut ci = 0usize;
    for x in samples {
        sum += x * x;
        n += 1;
        if ci < checkpoints.len() && n == checkpoints[ci] {
            out.push((n, sum / n as f64));
            ci += 1;
        }
        if ci == checkpoints.len() {
            break;
        }
    }
    out
}

/// One named statistic of a report, with optional declared target and
/// tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatLine {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl StatLine {
    pub fn info(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: None,
            tolerance: None,
            pass: None,
        }
    }

    /// Asserts |value − target| ≤ tolerance.
    pub fn checked(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: Some(target),
            tolerance: Some(tolerance),
            pass: Some((value - target).abs() <= tolerance),
        }
    }

    /// Asserts value ≤ bound.
    pub fn bounded(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: Some(bound),
            tolerance: None,
            pass: Some(value <= bound),
        }
    }

    /// Records a bare boolean condition.
    pub fn flag(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            target: None,
            tolerance: None,
            pass: Some(ok),
        }
    }
}

/// Reproducible experiment outcome: every number traceable to the seed and
/// configuration digest, serialisation byte-stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_digest: String,
    pub seed: u64,
    pub sample_counts: BTreeMap<String, u64>,
    pub statistics: Vec<StatLine>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config_digest: String, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            config_digest,
            seed,
            sample_counts: BTreeMap::new(),
            statistics: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    pub fn count(&mut self, name: &str, n: u64) {
        self.sample_counts.insert(name.into(), n);
    }

    pub fn push(&mut self, line: StatLine) {
        if let Some(false) = line.pass {
            self.pass = false;
        }
        self.statistics.push(line);
    }

    pub fn note(&mut self, s: &str) {
        self.notes.push(s.into());
    }

    /// Deterministic JSON bytes (ordered maps, fixed field order).
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("report serialises");
        v.push(b'\n');
        v
    }
}
