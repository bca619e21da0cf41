//! Exact ray and region queries against infinite point sets.
//!
//! All queries enumerate candidates through a uniform integer grid: a ray
//! marches cell by cell (testing only scatterers in the just-exposed layer
//! of the 3^D neighbourhood), and region queries enumerate the candidate
//! integer-coordinate box obtained from interval arithmetic with the
//! inverse basis. Everything is a pure function of the configuration, so
//! concurrent queries agree bit-for-bit.

use super::spec::{CutProjectSpec, LatticeSpec, PoissonSpec};
use super::{Colour, QueryError, ScattererConfig, ScattererHit};
use crate::geometry::{axpy, cross2, dot, norm2, sub};
use crate::rng::CellRng;
use crate::tolerances::TANGENCY_EPS;

/// Enumerates lattice points `k·basis + shift` whose integer coordinates
/// lie in the box mapped from `[lo, hi]`; the callback receives candidate
/// points and performs exact membership filtering.
pub(super) fn lattice_points_near<const D: usize>(
    lat: &LatticeSpec<D>,
    shift: [f64; D],
    lo: [f64; D],
    hi: [f64; D],
    f: &mut impl FnMut([f64; D]),
) {
    let inv = lat.inv();
    let mut kmin = [0i64; D];
    let mut kmax = [0i64; D];
    for j in 0..D {
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for i in 0..D {
            let c = inv[i][j];
            let (x0, x1) = (lo[i] - shift[i], hi[i] - shift[i]);
            let (p, q) = (x0 * c, x1 * c);
            a += p.min(q);
            b += p.max(q);
        }
        kmin[j] = (a - 1e-9).ceil() as i64;
        kmax[j] = (b + 1e-9).floor() as i64;
        if kmin[j] > kmax[j] {
            return;
        }
    }
    let mut k = kmin;
    'outer: loop {
        let mut y = shift;
        for i in 0..D {
            let ki = k[i] as f64;
            for j in 0..D {
                y[j] += ki * lat.basis[i][j];
            }
        }
        f(y);
        // Odometer increment.
        for a in 0..D {
            k[a] += 1;
            if k[a] <= kmax[a] {
                continue 'outer;
            }
            k[a] = kmin[a];
            if a == D - 1 {
                break 'outer;
            }
        }
        if D == 0 {
            break;
        }
    }
}

/// Points of a fixed disorder realisation inside one integer cell.
pub(super) fn poisson_points_in_cell<const D: usize>(
    spec: &PoissonSpec,
    cell: [i64; D],
    f: &mut impl FnMut([f64; D]),
) {
    let mut key = [0u64; 4];
    key[0] = spec.seed;
    for i in 0..D {
        key[1 + i] = cell[i] as u64;
    }
    let mut rng = CellRng::from_key(&key[..1 + D]);
    let n = rng.poisson(spec.intensity);
    for _ in 0..n {
        let mut p = [0.0; D];
        for (i, v) in p.iter_mut().enumerate() {
            *v = cell[i] as f64 + rng.next_f64();
        }
        f(p);
    }
}

/// Cut-and-project candidates whose physical projection lies in the box
/// `[lo, hi]` (up to the basis box slack) and whose internal part is in
/// the window. The callback receives the physical point and its colour.
pub(super) fn cut_project_points_near<const D: usize>(
    spec: &CutProjectSpec<D>,
    lo: [f64; D],
    hi: [f64; D],
    f: &mut impl FnMut([f64; D], Colour),
) {
    let n = spec.total_dim();
    let m = spec.internal_dim;
    let inv = spec.basis_inv();
    let (wlo, whi) = spec.window.bbox();
    // Interval arithmetic over the product region (physical box) x
    // (window bbox) to bound the integer coordinates.
    let mut kmin = vec![0i64; n];
    let mut kmax = vec![0i64; n];
    for j in 0..n {
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for i in 0..n {
            let c = inv[i][j];
            let (x0, x1) = if i < D {
                (lo[i], hi[i])
            } else {
                (wlo[i - D] - 1e-9, whi[i - D] + 1e-9)
            };
            let (p, q) = (x0 * c, x1 * c);
            a += p.min(q);
            b += p.max(q);
        }
        kmin[j] = (a - 1e-9).ceil() as i64;
        kmax[j] = (b + 1e-9).floor() as i64;
        if kmin[j] > kmax[j] {
            return;
        }
    }
    let mut k = kmin.clone();
    let mut int_part = vec![0.0; m];
    'outer: loop {
        let mut phys = [0.0; D];
        int_part.iter_mut().for_each(|v| *v = 0.0);
        for (i, &ki) in k.iter().enumerate() {
            if ki != 0 {
                let kf = ki as f64;
                let row = &spec.basis[i];
                for j in 0..D {
                    phys[j] += kf * row[j];
                }
                for j in 0..m {
                    int_part[j] += kf * row[D + j];
                }
            }
        }
        if spec.window.contains(&int_part) {
            let colour = if spec.discrete_internal {
                Colour::Member(spec.window.discrete_index(&int_part).unwrap_or(0))
            } else {
                Colour::Internal([
                    int_part[0],
                    if m > 1 { int_part[1] } else { 0.0 },
                ])
            };
            f(phys, colour);
        }
        for a in 0..n {
            k[a] += 1;
            if k[a] <= kmax[a] {
                continue 'outer;
            }
            k[a] = kmin[a];
            if a == n - 1 {
                break 'outer;
            }
        }
    }
}

impl<const D: usize> ScattererConfig<D> {
    /// Scatterer centres (with colours) inside one half-open unit cell.
    pub(super) fn points_in_cell(&self, cell: [i64; D], out: &mut Vec<([f64; D], Colour)>) {
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        for i in 0..D {
            lo[i] = cell[i] as f64;
            hi[i] = lo[i] + 1.0;
        }
        let in_cell = |y: &[f64; D]| (0..D).all(|i| y[i] >= lo[i] && y[i] < hi[i]);
        match self {
            ScattererConfig::Lattice(l) => {
                lattice_points_near(l, [0.0; D], lo, hi, &mut |y| {
                    if in_cell(&y) {
                        out.push((y, Colour::Uniform));
                    }
                });
            }
            ScattererConfig::AffineLattice(a) => {
                lattice_points_near(&a.lattice, a.shift, lo, hi, &mut |y| {
                    if in_cell(&y) {
                        out.push((y, Colour::Uniform));
                    }
                });
            }
            ScattererConfig::Poisson(p) => {
                poisson_points_in_cell(p, cell, &mut |y| out.push((y, Colour::Uniform)));
            }
            ScattererConfig::Union(u) => {
                for (idx, member) in u.members.iter().enumerate() {
                    lattice_points_near(&member.lattice, member.shift, lo, hi, &mut |y| {
                        if in_cell(&y) {
                            out.push((y, Colour::Member(idx)));
                        }
                    });
                }
            }
            ScattererConfig::CutProject(c) => {
                cut_project_points_near(c, lo, hi, &mut |y, col| {
                    if in_cell(&y) {
                        out.push((y, col));
                    }
                });
            }
        }
    }

    /// All scatterers within the closed ball, with colours.
    pub fn points_in_ball(&self, center: [f64; D], radius: f64) -> Vec<([f64; D], Colour)> {
        let mut out = Vec::new();
        self.for_points_in_ball(center, radius, &mut |y, c| out.push((y, c)));
        out
    }

    pub(super) fn for_points_in_ball(
        &self,
        center: [f64; D],
        radius: f64,
        f: &mut impl FnMut([f64; D], Colour),
    ) {
        assert!(radius.is_finite() && radius >= 0.0);
        let r2 = radius * radius;
        let mut lo = [0.0; D];
        let mut hi = [0.0; D];
        for i in 0..D {
            lo[i] = center[i] - radius;
            hi[i] = center[i] + radius;
        }
        let emit = |y: [f64; D], c: Colour, f: &mut dyn FnMut([f64; D], Colour)| {
            if norm2(sub(y, center)) <= r2 * (1.0 + 1e-14) {
                f(y, c);
            }
        };
        match self {
            ScattererConfig::Lattice(l) => {
                lattice_points_near(l, [0.0; D], lo, hi, &mut |y| {
                    emit(y, Colour::Uniform, f)
                });
            }
            ScattererConfig::AffineLattice(a) => {
                lattice_points_near(&a.lattice, a.shift, lo, hi, &mut |y| {
                    emit(y, Colour::Uniform, f)
                });
            }
            ScattererConfig::Poisson(p) => {
                let mut cmin = [0i64; D];
                let mut cmax = [0i64; D];
                for i in 0..D {
                    cmin[i] = lo[i].floor() as i64;
                    cmax[i] = hi[i].floor() as i64;
                }
                let mut cell = cmin;
                'cells: loop {
                    poisson_points_in_cell(p, cell, &mut |y| emit(y, Colour::Uniform, f));
                    for a in 0..D {
                        cell[a] += 1;
                        if cell[a] <= cmax[a] {
                            continue 'cells;
                        }
                        cell[a] = cmin[a];
                        if a == D - 1 {
                            break 'cells;
                        }
                    }
                }
            }
            ScattererConfig::Union(u) => {
                for (idx, member) in u.members.iter().enumerate() {
                    lattice_points_near(&member.lattice, member.shift, lo, hi, &mut |y| {
                        emit(y, Colour::Member(idx), f)
                    });
                }
            }
            ScattererConfig::CutProject(c) => {
                cut_project_points_near(c, lo, hi, &mut |y, col| emit(y, col, f));
            }
        }
    }

    /// First scatterer hit by the ray `q + t·v`, `t ∈ (0, t_max]`, against
    /// spheres of radius `r`. Rays grazing within the tangency tolerance
    /// are treated as misses.
    pub fn first_hit(
        &self,
        q: [f64; D],
        v: [f64; D],
        r: f64,
        t_max: f64,
    ) -> Result<Option<ScattererHit<D>>, QueryError> {
        assert!(r > 0.0 && r < 0.5, "sphere radius must be below half a grid cell");
        assert!((norm2(v) - 1.0).abs() < 1e-9, "direction must be unit");
        let guard = 1e-9 * r;
        let tangency2 = r * r * (1.0 - TANGENCY_EPS) * (1.0 - TANGENCY_EPS);

        let mut best_t = f64::INFINITY;
        let mut best: Option<([f64; D], Colour, [f64; D])> = None;
        let mut buf: Vec<([f64; D], Colour)> = Vec::with_capacity(8);

        let test_cell = |cell: [i64; D],
                             buf: &mut Vec<([f64; D], Colour)>,
                             best_t: &mut f64,
                             best: &mut Option<([f64; D], Colour, [f64; D])>|
         -> Result<(), QueryError> {
            buf.clear();
            self.points_in_cell(cell, buf);
            for &(y, colour) in buf.iter() {
                let u = sub(y, q);
                let tmid = dot(u, v);
                let perp = axpy(u, -tmid, v);
                let d2 = norm2(perp);
                if d2 >= tangency2 {
                    continue;
                }
                let delta = (r * r - d2).sqrt();
                let t_in = tmid - delta;
                if t_in <= guard {
                    if tmid + delta > guard {
                        return Err(QueryError::InsideScatterer);
                    }
                    continue;
                }
                if t_in <= t_max && t_in < *best_t {
                    *best_t = t_in;
                    *best = Some((y, colour, perp));
                }
            }
            Ok(())
        };

        let mut walk = GridWalk::new(q, v);
        let first = walk.cell;
        // Full 3^D block around the starting cell.
        let mut delta = [-1i64; D];
        'block: loop {
            let mut c = first;
            for i in 0..D {
                c[i] += delta[i];
            }
            test_cell(c, &mut buf, &mut best_t, &mut best)?;
            for a in 0..D {
                delta[a] += 1;
                if delta[a] <= 1 {
                    continue 'block;
                }
                delta[a] = -1;
                if a == D - 1 {
                    break 'block;
                }
            }
        }

        loop {
            let t_exit = walk.t_exit();
            if best_t <= t_exit || t_exit >= t_max {
                break;
            }
            let (axis, step) = walk.advance();
            // Newly exposed layer: one cell beyond the new cell along the
            // step axis, swept over the transverse neighbours.
            let mut c = walk.cell;
            c[axis] += step;
            let mut offs = [-1i64; D];
            offs[axis] = 0;
            'layer: loop {
                let mut cc = c;
                for i in 0..D {
                    if i != axis {
                        cc[i] += offs[i];
                    }
                }
                test_cell(cc, &mut buf, &mut best_t, &mut best)?;
                for a in 0..D {
                    if a == axis {
                        continue;
                    }
                    offs[a] += 1;
                    if offs[a] <= 1 {
                        continue 'layer;
                    }
                    offs[a] = -1;
                }
                break 'layer;
            }
        }

        if best_t > t_max {
            return Ok(None);
        }
        Ok(best.map(|(y, colour, perp)| {
            let impact = impact_coords(v, perp, r);
            ScattererHit {
                center: y,
                colour,
                entry_time: best_t,
                impact,
            }
        }))
    }
}

/// Transverse coordinates of the ray relative to the sphere centre, in the
/// co-moving frame of `v`, in units of `r`. `perp` is the component of
/// `centre − ray origin` orthogonal to `v`; the ray passes on the opposite
/// side, so the impact parameter is its negation expressed in the frame.
fn impact_coords<const D: usize>(v: [f64; D], perp: [f64; D], r: f64) -> [f64; 2] {
    match D {
        2 => {
            let v2 = [v[0], v[1]];
            let p2 = [perp[0], perp[1]];
            [-cross2(v2, p2) / r, 0.0]
        }
        3 => {
            let v3 = [v[0], v[1], v[2]];
            let f = crate::geometry::frame3(v3);
            // Row-vector transform: columns 1 and 2 of the frame matrix.
            let p = [perp[0], perp[1], perp[2]];
            let w1 = -(p[0] * f[0][1] + p[1] * f[1][1] + p[2] * f[2][1]) / r;
            let w2 = -(p[0] * f[0][2] + p[1] * f[1][2] + p[2] * f[2][2]) / r;
            [w1, w2]
        }
        _ => unreachable!(),
    }
}

/// Cell-by-cell ray traversal over the unit integer grid.
struct GridWalk<const D: usize> {
    cell: [i64; D],
    t_next: [f64; D],
    dt: [f64; D],
    step: [i64; D],
}

impl<const D: usize> GridWalk<D> {
    fn new(q: [f64; D], v: [f64; D]) -> Self {
        let mut cell = [0i64; D];
        let mut t_next = [f64::INFINITY; D];
        let mut dt = [f64::INFINITY; D];
        let mut step = [0i64; D];
        for i in 0..D {
            cell[i] = q[i].floor() as i64;
            if v[i] > 0.0 {
                step[i] = 1;
                t_next[i] = ((cell[i] + 1) as f64 - q[i]) / v[i];
                dt[i] = 1.0 / v[i];
            } else if v[i] < 0.0 {
                step[i] = -1;
                t_next[i] = (cell[i] as f64 - q[i]) / v[i];
                dt[i] = -1.0 / v[i];
            }
        }
        Self {
            cell,
            t_next,
            dt,
            step,
        }
    }

    fn t_exit(&self) -> f64 {
        let mut t = f64::INFINITY;
        for i in 0..D {
            t = t.min(self.t_next[i]);
        }
        t
    }

    /// Crosses into the next cell; returns the axis and step direction.
    fn advance(&mut self) -> (usize, i64) {
        let mut axis = 0;
        for i in 1..D {
            if self.t_next[i] < self.t_next[axis] {
                axis = i;
            }
        }
        self.cell[axis] += self.step[axis];
        self.t_next[axis] += self.dt[axis];
        (axis, self.step[axis])
    }
}
