//! Infinite scatterer configurations and exact queries against them.
//!
//! A configuration is an infinite locally finite point set with a colour
//! chart: a full-rank lattice, a translate of one, a fixed realisation of
//! uncorrelated disorder, a union of affine lattices, or a cut-and-project
//! set. Queries never materialise the set; they enumerate exactly the
//! candidates a region or ray can see.

mod query;
mod spec;

pub use spec::{
    ammann_beenker, delone_set, honeycomb, incommensurable_pair, AffineLatticeSpec, ConfigError,
    CutProjectSpec, LatticeSpec, PoissonSpec, UnionSpec, Window,
};

use crate::geometry::{norm2, sub};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("query origin lies strictly inside a scatterer")]
    InsideScatterer,
    #[error("enumeration is unbounded for this configuration")]
    Unbounded,
}

/// Colour attached to a scatterer: trivial, the index of the union member
/// or discrete window point, or the internal-space coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Colour {
    Uniform,
    Member(usize),
    Internal([f64; 2]),
}

impl Colour {
    /// Compact scalar form for CSV output.
    pub fn as_scalar(&self) -> f64 {
        match self {
            Colour::Uniform => 0.0,
            Colour::Member(i) => *i as f64,
            Colour::Internal(v) => v[0],
        }
    }

    pub fn member_index(&self) -> usize {
        match self {
            Colour::Member(i) => *i,
            _ => 0,
        }
    }
}

/// Result of a ray query: the first sphere boundary reached.
#[derive(Debug, Clone, Copy)]
pub struct ScattererHit<const D: usize> {
    pub center: [f64; D],
    pub colour: Colour,
    /// Flight time (= distance at unit speed) to the sphere boundary.
    pub entry_time: f64,
    /// Transverse impact coordinates in the co-moving frame, in units of
    /// the sphere radius; only the first D−1 entries are meaningful.
    pub impact: [f64; 2],
}

impl<const D: usize> ScattererHit<D> {
    /// Signed scalar impact parameter (planar case).
    pub fn w(&self) -> f64 {
        self.impact[0]
    }

    pub fn impact_norm(&self) -> f64 {
        (self.impact[0] * self.impact[0] + self.impact[1] * self.impact[1]).sqrt()
    }
}

/// Bounded region for counting queries.
#[derive(Debug, Clone)]
pub enum Region<const D: usize> {
    Ball { center: [f64; D], radius: f64 },
    Box { lo: [f64; D], hi: [f64; D] },
}

impl<const D: usize> Region<D> {
    pub fn volume(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => {
                crate::kernels::unit_ball_volume(D) * radius.powi(D as i32)
            }
            Region::Box { lo, hi } => (0..D).map(|i| hi[i] - lo[i]).product(),
        }
    }

    /// The region dilated by the factor `s` about the origin.
    pub fn scaled(&self, s: f64) -> Region<D> {
        match self {
            Region::Ball { center, radius } => Region::Ball {
                center: crate::geometry::scale(*center, s),
                radius: radius * s,
            },
            Region::Box { lo, hi } => Region::Box {
                lo: crate::geometry::scale(*lo, s),
                hi: crate::geometry::scale(*hi, s),
            },
        }
    }

    pub fn contains(&self, y: [f64; D]) -> bool {
        match self {
            Region::Ball { center, radius } => norm2(sub(y, *center)) <= radius * radius,
            Region::Box { lo, hi } => (0..D).all(|i| y[i] >= lo[i] && y[i] < hi[i]),
        }
    }

    fn bounding_ball(&self) -> ([f64; D], f64) {
        match self {
            Region::Ball { center, radius } => (*center, *radius),
            Region::Box { lo, hi } => {
                let mut c = [0.0; D];
                let mut r2 = 0.0;
                for i in 0..D {
                    c[i] = 0.5 * (lo[i] + hi[i]);
                    r2 += 0.25 * (hi[i] - lo[i]) * (hi[i] - lo[i]);
                }
                (c, r2.sqrt())
            }
        }
    }
}

/// An infinite scatterer point set with colour chart.
#[derive(Debug, Clone)]
pub enum ScattererConfig<const D: usize> {
    Lattice(LatticeSpec<D>),
    AffineLattice(AffineLatticeSpec<D>),
    Poisson(PoissonSpec),
    Union(UnionSpec<D>),
    CutProject(CutProjectSpec<D>),
}

impl<const D: usize> ScattererConfig<D> {
    /// Unit square/cubic lattice.
    pub fn unit_lattice() -> Self {
        ScattererConfig::Lattice(LatticeSpec::unit())
    }

    /// Analytic number density of the set.
    pub fn density_formula(&self) -> f64 {
        match self {
            ScattererConfig::Lattice(l) => l.density(),
            ScattererConfig::AffineLattice(a) => a.lattice.density(),
            ScattererConfig::Poisson(p) => p.intensity,
            ScattererConfig::Union(u) => u.total_density(),
            ScattererConfig::CutProject(c) => c.density_formula(),
        }
    }

    /// Empirical density `#(P ∩ s·region) / vol(s·region)`.
    pub fn density_of(&self, scale: f64, region: &Region<D>) -> f64 {
        assert!(scale > 0.0);
        let scaled = region.scaled(scale);
        let (c, r) = scaled.bounding_ball();
        let mut count = 0usize;
        self.for_points_in_ball(c, r, &mut |y, _| {
            if scaled.contains(y) {
                count += 1;
            }
        });
        count as f64 / scaled.volume()
    }

    /// Whether `q` lies strictly inside some scatterer of radius `r`.
    pub fn is_inside_scatterer(&self, q: [f64; D], r: f64) -> bool {
        let mut inside = false;
        self.for_points_in_ball(q, r, &mut |y, _| {
            if norm2(sub(y, q)) < r * r {
                inside = true;
            }
        });
        inside
    }

    /// Writes `x,y[,z],colour` rows for every scatterer in the ball.
    pub fn export_csv<W: std::io::Write>(
        &self,
        center: [f64; D],
        radius: f64,
        out: &mut W,
    ) -> std::io::Result<()> {
        match D {
            2 => writeln!(out, "x,y,colour")?,
            _ => writeln!(out, "x,y,z,colour")?,
        }
        let mut err = None;
        self.for_points_in_ball(center, radius, &mut |y, c| {
            if err.is_some() {
                return;
            }
            let mut line = String::with_capacity(48);
            for (i, v) in y.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v}"));
            }
            line.push(',');
            line.push_str(&format!("{}", c.as_scalar()));
            if let Err(e) = writeln!(out, "{line}") {
                err = Some(e);
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

// ---------------------------------------------------------------------------
// JSON representation (discriminated by "kind", with a "dim" field where
// the shape alone does not pin the dimension).
// ---------------------------------------------------------------------------

/// Serialisable description of a scatterer configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfigDto {
    Lattice {
        #[serde(default = "default_dim")]
        dim: usize,
        basis: Vec<Vec<f64>>,
        #[serde(default)]
        shift: Option<Vec<f64>>,
    },
    Poisson {
        #[serde(default = "default_dim")]
        dim: usize,
        seed: u64,
        #[serde(default = "default_intensity")]
        intensity: f64,
    },
    Union {
        members: Vec<MemberDto>,
        #[serde(default)]
        incommensurable: bool,
    },
    CutProject {
        phys_dim: usize,
        basis: Vec<Vec<f64>>,
        window: WindowDto,
    },
    Delone {
        basis: Vec<Vec<f64>>,
        translates: Vec<Vec<f64>>,
    },
}

fn default_dim() -> usize {
    2
}

fn default_intensity() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MemberDto {
    pub basis: Vec<Vec<f64>>,
    #[serde(default)]
    pub shift: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum WindowDto {
    Interval {
        lo: f64,
        hi: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    RegularPolygon {
        sides: usize,
        circumradius: f64,
        phase: f64,
    },
    Points {
        points: Vec<Vec<f64>>,
    },
}

impl WindowDto {
    pub fn build(&self) -> Window {
        match self {
            WindowDto::Interval { lo, hi } => Window::Interval { lo: *lo, hi: *hi },
            WindowDto::Polygon { vertices } => Window::ConvexPolygon {
                verts: vertices.clone(),
            },
            WindowDto::RegularPolygon {
                sides,
                circumradius,
                phase,
            } => Window::regular_polygon(*sides, *circumradius, *phase),
            WindowDto::Points { points } => Window::DiscretePoints {
                points: points.clone(),
            },
        }
    }
}

impl ConfigDto {
    pub fn dim(&self) -> usize {
        match self {
            ConfigDto::Lattice { dim, .. } | ConfigDto::Poisson { dim, .. } => *dim,
            ConfigDto::Union { members, .. } => members.first().map_or(2, |m| m.basis.len()),
            ConfigDto::CutProject { phys_dim, .. } => *phys_dim,
            ConfigDto::Delone { .. } => 2,
        }
    }

    fn basis_array<const D: usize>(rows: &[Vec<f64>]) -> Result<[[f64; D]; D], ConfigError> {
        if rows.len() != D || rows.iter().any(|r| r.len() != D) {
            return Err(ConfigError::Unsupported(format!("expected a {D}x{D} basis")));
        }
        let mut b = [[0.0; D]; D];
        for (row, src) in b.iter_mut().zip(rows.iter()) {
            row.copy_from_slice(src);
        }
        Ok(b)
    }

    fn vec_array<const D: usize>(v: &[f64]) -> Result<[f64; D], ConfigError> {
        if v.len() != D {
            return Err(ConfigError::Unsupported(format!("expected a {D}-vector")));
        }
        let mut a = [0.0; D];
        a.copy_from_slice(v);
        Ok(a)
    }

    /// Builds the runtime configuration at a fixed dimension.
    pub fn build<const D: usize>(&self) -> Result<ScattererConfig<D>, ConfigError> {
        match self {
            ConfigDto::Lattice { basis, shift, .. } => {
                let lat = LatticeSpec::new(Self::basis_array::<D>(basis)?)?;
                Ok(match shift {
                    Some(s) => ScattererConfig::AffineLattice(AffineLatticeSpec::new(
                        lat,
                        Self::vec_array::<D>(s)?,
                    )),
                    None => ScattererConfig::Lattice(lat),
                })
            }
            ConfigDto::Poisson {
                seed, intensity, ..
            } => Ok(ScattererConfig::Poisson(PoissonSpec::new(
                *seed, *intensity,
            )?)),
            ConfigDto::Union {
                members,
                incommensurable,
            } => {
                let ms = members
                    .iter()
                    .map(|m| {
                        let lat = LatticeSpec::new(Self::basis_array::<D>(&m.basis)?)?;
                        let shift = match &m.shift {
                            Some(s) => Self::vec_array::<D>(s)?,
                            None => [0.0; D],
                        };
                        Ok(AffineLatticeSpec::new(lat, shift))
                    })
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                Ok(ScattererConfig::Union(UnionSpec::new(
                    ms,
                    *incommensurable,
                )?))
            }
            ConfigDto::CutProject { basis, window, .. } => Ok(ScattererConfig::CutProject(
                CutProjectSpec::new(basis.clone(), window.build())?,
            )),
            ConfigDto::Delone { basis, translates } => {
                if D != 2 {
                    return Err(ConfigError::Unsupported(
                        "periodic Delone sets are planar here".into(),
                    ));
                }
                let lat = LatticeSpec::<2>::new(Self::basis_array::<2>(basis)?)?;
                let ts = translates
                    .iter()
                    .map(|t| Self::vec_array::<2>(t))
                    .collect::<Result<Vec<_>, _>>()?;
                let cp = delone_set(lat, &ts)?;
                // The const parameter is pinned to 2 by the check above.
                let any: Box<dyn std::any::Any> = Box::new(ScattererConfig::CutProject(cp));
                Ok(*any.downcast::<ScattererConfig<D>>().expect("D == 2"))
            }
        }
    }
}
