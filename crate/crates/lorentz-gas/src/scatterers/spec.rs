//! Scatterer point-set specifications: lattices, fixed disorder
//! realisations, unions of affine lattices and cut-and-project sets.

use crate::geometry::{det, invert, rot2, vec_mat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("degenerate basis (determinant {0})")]
    DegenerateBasis(f64),
    #[error("union must have at least one member")]
    EmptyUnion,
    #[error("window has empty interior / zero measure")]
    EmptyWindow,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("intensity must be positive, got {0}")]
    BadIntensity(f64),
}

/// Full-rank lattice `Z^D · basis` (rows are basis vectors).
#[derive(Debug, Clone)]
pub struct LatticeSpec<const D: usize> {
    pub basis: [[f64; D]; D],
    inv: [[f64; D]; D],
    covolume: f64,
}

impl<const D: usize> LatticeSpec<D> {
    pub fn new(basis: [[f64; D]; D]) -> Result<Self, ConfigError> {
        let d = det(&basis);
        if d.abs() < 1e-12 {
            return Err(ConfigError::DegenerateBasis(d));
        }
        Ok(Self {
            basis,
            inv: invert(&basis),
            covolume: d.abs(),
        })
    }

    pub fn unit() -> Self {
        let mut basis = [[0.0; D]; D];
        for (i, row) in basis.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self::new(basis).unwrap()
    }

    pub fn covolume(&self) -> f64 {
        self.covolume
    }

    /// Number density 1/|det|.
    pub fn density(&self) -> f64 {
        1.0 / self.covolume
    }

    pub fn inv(&self) -> &[[f64; D]; D] {
        &self.inv
    }

    /// Point of the lattice with integer coordinates `k`.
    pub fn point(&self, k: [i64; D]) -> [f64; D] {
        let mut x = [0.0; D];
        for i in 0..D {
            let ki = k[i] as f64;
            for j in 0..D {
                x[j] += ki * self.basis[i][j];
            }
        }
        x
    }
}

/// Translate of a lattice.
#[derive(Debug, Clone)]
pub struct AffineLatticeSpec<const D: usize> {
    pub lattice: LatticeSpec<D>,
    pub shift: [f64; D],
}

impl<const D: usize> AffineLatticeSpec<D> {
    pub fn new(lattice: LatticeSpec<D>, shift: [f64; D]) -> Self {
        Self { lattice, shift }
    }
}

/// A fixed realisation of uncorrelated disorder: per unit cell the point
/// count is Poisson(intensity) and positions are uniform, all derived
/// deterministically from `(seed, cell index)`.
#[derive(Debug, Clone)]
pub struct PoissonSpec {
    pub seed: u64,
    pub intensity: f64,
}

impl PoissonSpec {
    pub fn new(seed: u64, intensity: f64) -> Result<Self, ConfigError> {
        if !(intensity > 0.0) {
            return Err(ConfigError::BadIntensity(intensity));
        }
        Ok(Self { seed, intensity })
    }
}

/// Union of affine lattices, each carrying a colour equal to its index.
#[derive(Debug, Clone)]
pub struct UnionSpec<const D: usize> {
    pub members: Vec<AffineLatticeSpec<D>>,
    /// Declared pairwise incommensurability. Not verifiable from a finite
    /// computation; reports carry the assumption through.
    pub incommensurable: bool,
}

impl<const D: usize> UnionSpec<D> {
    pub fn new(members: Vec<AffineLatticeSpec<D>>, incommensurable: bool) -> Result<Self, ConfigError> {
        if members.is_empty() {
            return Err(ConfigError::EmptyUnion);
        }
        Ok(Self {
            members,
            incommensurable,
        })
    }

    /// Member densities (sum is the total density).
    pub fn densities(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.lattice.density()).collect()
    }

    pub fn total_density(&self) -> f64 {
        self.densities().iter().sum()
    }
}

/// Default incommensurable pair in the plane: a square lattice and its
/// copy rotated by one radian (the cosine is transcendental, which rules
/// out low ratio-rank coincidences at any finite scale), both scaled to
/// density 1/2 and the second shifted off the common origin.
pub fn incommensurable_pair() -> UnionSpec<2> {
    let s = 2.0f64.sqrt();
    let base = [[s, 0.0], [0.0, s]];
    let r = rot2(1.0);
    let rot = [vec_mat([s, 0.0], &r), vec_mat([0.0, s], &r)];
    UnionSpec::new(
        vec![
            AffineLatticeSpec::new(LatticeSpec::new(base).unwrap(), [0.0, 0.0]),
            AffineLatticeSpec::new(LatticeSpec::new(rot).unwrap(), [0.2137, 0.5813]),
        ],
        true,
    )
    .unwrap()
}

/// Window in internal space.
#[derive(Debug, Clone)]
pub enum Window {
    /// m = 1.
    Interval { lo: f64, hi: f64 },
    /// m = 2; vertices counterclockwise, convex.
    ConvexPolygon { verts: Vec<[f64; 2]> },
    /// Finite subset of a discrete internal group (counting measure).
    DiscretePoints { points: Vec<Vec<f64>> },
}

impl Window {
    pub fn dim(&self) -> usize {
        match self {
            Window::Interval { .. } => 1,
            Window::ConvexPolygon { .. } => 2,
            Window::DiscretePoints { points } => points.first().map_or(0, |p| p.len()),
        }
    }

    /// Haar measure of the window: length/area for dense internal groups,
    /// point count for discrete ones.
    pub fn measure(&self) -> f64 {
        match self {
            Window::Interval { lo, hi } => hi - lo,
            Window::ConvexPolygon { verts } => {
                let mut a = 0.0;
                for i in 0..verts.len() {
                    let p = verts[i];
                    let q = verts[(i + 1) % verts.len()];
                    a += p[0] * q[1] - q[0] * p[1];
                }
                0.5 * a.abs()
            }
            Window::DiscretePoints { points } => points.len() as f64,
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Window::Interval { lo, hi } => y[0] >= *lo && y[0] < *hi,
            Window::ConvexPolygon { verts } => {
                let n = verts.len();
                for i in 0..n {
                    let p = verts[i];
                    let q = verts[(i + 1) % n];
                    let cross = (q[0] - p[0]) * (y[1] - p[1]) - (q[1] - p[1]) * (y[0] - p[0]);
                    if cross < 0.0 {
                        return false;
                    }
                }
                true
            }
            Window::DiscretePoints { points } => points.iter().any(|p| {
                p.iter()
                    .zip(y.iter())
                    .all(|(a, b)| (a - b).abs() < 1e-9)
            }),
        }
    }

    /// Index of the matched discrete window point (colour chart for
    /// periodic Delone sets).
    pub fn discrete_index(&self, y: &[f64]) -> Option<usize> {
        match self {
            Window::DiscretePoints { points } => points.iter().position(|p| {
                p.iter()
                    .zip(y.iter())
                    .all(|(a, b)| (a - b).abs() < 1e-9)
            }),
            _ => None,
        }
    }

    /// Axis-aligned bounding box in internal space.
    pub fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Window::Interval { lo, hi } => (vec![*lo], vec![*hi]),
            Window::ConvexPolygon { verts } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in verts {
                    for i in 0..2 {
                        lo[i] = lo[i].min(v[i]);
                        hi[i] = hi[i].max(v[i]);
                    }
                }
                (lo.to_vec(), hi.to_vec())
            }
            Window::DiscretePoints { points } => {
                let m = self.dim();
                let mut lo = vec![f64::INFINITY; m];
                let mut hi = vec![f64::NEG_INFINITY; m];
                for p in points {
                    for i in 0..m {
                        lo[i] = lo[i].min(p[i]);
                        hi[i] = hi[i].max(p[i]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Regular polygon window (counterclockwise) with `sides` vertices at
    /// circumradius `rho`, rotated by `phase`.
    pub fn regular_polygon(sides: usize, rho: f64, phase: f64) -> Self {
        let verts = (0..sides)
            .map(|i| {
                let a = phase + 2.0 * std::f64::consts::PI * i as f64 / sides as f64;
                [rho * a.cos(), rho * a.sin()]
            })
            .collect();
        Window::ConvexPolygon { verts }
    }
}

/// Cut-and-project set: physical dimension `D`, internal dimension `m`,
/// total lattice of rank `D + m` with the given row basis; a point of the
/// total lattice is accepted when its internal part falls in the window,
/// and its colour is that internal part.
#[derive(Debug, Clone)]
pub struct CutProjectSpec<const D: usize> {
    pub internal_dim: usize,
    /// (D+m) x (D+m), rows are basis vectors, columns ordered as
    /// (physical..., internal...).
    pub basis: Vec<Vec<f64>>,
    pub window: Window,
    basis_inv: Vec<Vec<f64>>,
    /// Covolume of the sub-lattice spanning `physical x A⁰` (the full
    /// covolume for dense internal groups, the physical-slice covolume for
    /// discrete ones).
    covol_v: f64,
    /// Discrete internal group (counting measure) versus dense (Lebesgue).
    pub discrete_internal: bool,
}

fn invert_dyn(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    for j in 0..2 * n {
                        m[i][j] -= f * m[col][j];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn det_dyn(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() < 1e-300 {
            return 0.0;
        }
        if piv != col {
            m.swap(col, piv);
            d = -d;
        }
        d *= m[col][col];
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            for j in col..n {
                m[i][j] -= f * m[col][j];
            }
        }
    }
    d
}

impl<const D: usize> CutProjectSpec<D> {
    pub fn new(basis: Vec<Vec<f64>>, window: Window) -> Result<Self, ConfigError> {
        let n = basis.len();
        if n <= D || basis.iter().any(|r| r.len() != n) {
            return Err(ConfigError::Unsupported(format!(
                "total dimension {n} must exceed physical dimension {D} with square basis"
            )));
        }
        let m = n - D;
        if window.dim() != m {
            return Err(ConfigError::Unsupported(format!(
                "window dimension {} does not match internal dimension {m}",
                window.dim()
            )));
        }
        if window.measure() <= 0.0 {
            return Err(ConfigError::EmptyWindow);
        }
        let discrete_internal = matches!(window, Window::DiscretePoints { .. });
        if !discrete_internal && m > 2 {
            return Err(ConfigError::Unsupported(
                "dense internal groups are supported up to dimension 2".into(),
            ));
        }
        let basis_inv = invert_dyn(&basis).ok_or(ConfigError::DegenerateBasis(0.0))?;
        let covol_v = if discrete_internal {
            // Physical slice: lattice vectors with zero internal part. For
            // the shipped constructions these are the rows with vanishing
            // internal columns.
            let phys_rows: Vec<Vec<f64>> = basis
                .iter()
                .filter(|r| r[D..].iter().all(|&x| x.abs() < 1e-12))
                .map(|r| r[..D].to_vec())
                .collect();
            if phys_rows.len() != D {
                return Err(ConfigError::Unsupported(
                    "discrete-window basis must contain the physical sub-lattice rows".into(),
                ));
            }
            det_dyn(&phys_rows).abs()
        } else {
            det_dyn(&basis).abs()
        };
        Ok(Self {
            internal_dim: m,
            basis,
            window,
            basis_inv,
            covol_v,
            discrete_internal,
        })
    }

    pub fn basis_inv(&self) -> &[Vec<f64>] {
        &self.basis_inv
    }

    /// Density predicted by the window measure over the slice covolume.
    pub fn density_formula(&self) -> f64 {
        self.window.measure() / self.covol_v
    }

    pub fn total_dim(&self) -> usize {
        D + self.internal_dim
    }
}

/// Periodic Delone set: the union of `translates` of the planar lattice
/// `base`, realised as a cut-and-project set whose internal group is the
/// integer lattice and whose window is the set of unit vectors. The colour
/// of a point is the index of the translate it belongs to.
pub fn delone_set(base: LatticeSpec<2>, translates: &[[f64; 2]]) -> Result<CutProjectSpec<2>, ConfigError> {
    let m = translates.len();
    if m == 0 {
        return Err(ConfigError::EmptyWindow);
    }
    let n = 2 + m;
    let mut basis = Vec::with_capacity(n);
    for row in base.basis.iter() {
        let mut r = vec![0.0; n];
        r[..2].copy_from_slice(row);
        basis.push(r);
    }
    for (j, t) in translates.iter().enumerate() {
        let mut r = vec![0.0; n];
        r[..2].copy_from_slice(t);
        r[2 + j] = 1.0;
        basis.push(r);
    }
    let points = (0..m)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    CutProjectSpec::new(basis, Window::DiscretePoints { points })
}

/// Honeycomb as a periodic Delone set: two translates of a triangular
/// lattice. `spacing` is the triangular lattice constant.
pub fn honeycomb(spacing: f64) -> CutProjectSpec<2> {
    let a = spacing;
    let tri = LatticeSpec::new([[a, 0.0], [a / 2.0, a * 3.0f64.sqrt() / 2.0]]).unwrap();
    // Second translate at the centroid of the upward triangle.
    let t = [a / 2.0, a / (2.0 * 3.0f64.sqrt())];
    delone_set(tri, &[[0.0, 0.0], t]).unwrap()
}

/// Eightfold quasiperiodic point set: the Minkowski embedding of Z[√2]²
/// cut by a regular octagon window scaled for unit physical density.
pub fn ammann_beenker() -> CutProjectSpec<2> {
    let s = 2.0f64.sqrt();
    let basis = vec![
        vec![1.0, 0.0, 1.0, 0.0],
        vec![s, 0.0, -s, 0.0],
        vec![0.0, 1.0, 0.0, 1.0],
        vec![0.0, s, 0.0, -s],
    ];
    // Covolume is 8; a regular octagon of area 8 gives density one.
    let area = 8.0f64;
    let rho = (area / (2.0 * s)).sqrt();
    let window = Window::regular_polygon(8, rho, std::f64::consts::PI / 8.0);
    CutProjectSpec::new(basis, window).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_density() {
        let l = LatticeSpec::<2>::new([[2.0f64.sqrt(), 0.0], [0.0, 2.0f64.sqrt()]]).unwrap();
        assert!((l.covolume() - 2.0).abs() < 1e-12);
        assert!((l.density() - 0.5).abs() < 1e-12);
        assert!(LatticeSpec::<2>::new([[1.0, 2.0], [2.0, 4.0]]).is_err());
    }

    #[test]
    fn octagon_window_geometry() {
        let w = Window::regular_polygon(8, 1.0, 0.0);
        // Area of a regular octagon with circumradius 1 is 2√2.
        assert!((w.measure() - 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
        assert!(w.contains(&[0.0, 0.0]));
        assert!(!w.contains(&[1.01, 0.0]));
    }

    #[test]
    fn ammann_beenker_unit_density_formula() {
        let ab = ammann_beenker();
        assert!((ab.density_formula() - 1.0).abs() < 1e-12);
        assert!(!ab.discrete_internal);
    }

    #[test]
    fn honeycomb_density_formula() {
        // Triangular covolume a²√3/2; two translates double the density.
        let hc = honeycomb(1.0);
        let base_density = 1.0 / (3.0f64.sqrt() / 2.0);
        assert!((hc.density_formula() - 2.0 * base_density).abs() < 1e-12);
        assert!(hc.discrete_internal);
    }

    #[test]
    fn union_densities_sum_to_one() {
        let u = incommensurable_pair();
        assert!((u.total_density() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dyn_inverse_roundtrip() {
        let a = vec![
            vec![1.0, 0.0, 1.0, 0.0],
            vec![2.0f64.sqrt(), 0.0, -(2.0f64.sqrt()), 0.0],
            vec![0.0, 1.0, 0.0, 1.0],
            vec![0.0, 2.0f64.sqrt(), 0.0, -(2.0f64.sqrt())],
        ];
        let inv = invert_dyn(&a).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += a[i][k] * inv[k][j];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12);
            }
        }
        assert!((det_dyn(&a).abs() - 8.0).abs() < 1e-12);
    }
}
