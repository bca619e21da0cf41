//! Small fixed-dimension vector/matrix helpers and the co-moving frame maps.
//!
//! Vectors are row vectors; matrices act by right multiplication, so a
//! frame matrix `R(v)` satisfies `v · R(v) = e1`. All rotations are built
//! explicitly for d = 2 and d = 3.

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];

#[inline]
pub fn dot<const D: usize>(a: [f64; D], b: [f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn sub<const D: usize>(a: [f64; D], b: [f64; D]) -> [f64; D] {
    let mut r = [0.0; D];
    for i in 0..D {
        r[i] = a[i] - b[i];
    }
    r
}

#[inline]
pub fn add<const D: usize>(a: [f64; D], b: [f64; D]) -> [f64; D] {
    let mut r = [0.0; D];
    for i in 0..D {
        r[i] = a[i] + b[i];
    }
    r
}

#[inline]
pub fn scale<const D: usize>(a: [f64; D], s: f64) -> [f64; D] {
    let mut r = [0.0; D];
    for i in 0..D {
        r[i] = a[i] * s;
    }
    r
}

#[inline]
pub fn axpy<const D: usize>(a: [f64; D], t: f64, b: [f64; D]) -> [f64; D] {
    let mut r = [0.0; D];
    for i in 0..D {
        r[i] = a[i] + t * b[i];
    }
    r
}

#[inline]
pub fn norm2<const D: usize>(a: [f64; D]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm<const D: usize>(a: [f64; D]) -> f64 {
    norm2(a).sqrt()
}

#[inline]
pub fn normalize<const D: usize>(a: [f64; D]) -> [f64; D] {
    scale(a, 1.0 / norm(a))
}

/// Row vector times matrix (rows of `m` are the images of basis vectors).
#[inline]
pub fn vec_mat<const D: usize>(v: [f64; D], m: &[[f64; D]; D]) -> [f64; D] {
    let mut r = [0.0; D];
    for (i, row) in m.iter().enumerate() {
        for j in 0..D {
            r[j] += v[i] * row[j];
        }
    }
    r
}

pub fn mat_mul<const D: usize>(a: &[[f64; D]; D], b: &[[f64; D]; D]) -> [[f64; D]; D] {
    let mut r = [[0.0; D]; D];
    for i in 0..D {
        for k in 0..D {
            let aik = a[i][k];
            for j in 0..D {
                r[i][j] += aik * b[k][j];
            }
        }
    }
    r
}

pub fn transpose<const D: usize>(a: &[[f64; D]; D]) -> [[f64; D]; D] {
    let mut r = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            r[i][j] = a[j][i];
        }
    }
    r
}

pub fn identity<const D: usize>() -> [[f64; D]; D] {
    let mut r = [[0.0; D]; D];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    r
}

#[inline]
pub fn cross2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn det<const D: usize>(m: &[[f64; D]; D]) -> f64 {
    match D {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("only d = 2, 3 supported"),
    }
}

/// Inverse by adjugate; caller guarantees a nonzero determinant.
pub fn invert<const D: usize>(m: &[[f64; D]; D]) -> [[f64; D]; D] {
    let d = det(m);
    let mut r = [[0.0; D]; D];
    match D {
        2 => {
            r[0][0] = m[1][1] / d;
            r[0][1] = -m[0][1] / d;
            r[1][0] = -m[1][0] / d;
            r[1][1] = m[0][0] / d;
        }
        3 => {
            for i in 0..3 {
                for j in 0..3 {
                    let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                    let (c, e) = ((j + 1) % 3, (j + 2) % 3);
                    // Cofactor transpose.
                    r[j][i] = (m[a][c] * m[b][e] - m[a][e] * m[b][c]) / d;
                }
            }
        }
        _ => unreachable!(),
    }
    r
}

/// Rotation acting on row vectors: `x · rot2(phi)` turns `x` by `phi`
/// counterclockwise.
pub fn rot2(phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = phi.sin_cos();
    [[c, s], [-s, c]]
}

/// Frame of a planar direction: `v · frame2(v) = e1`, globally smooth.
pub fn frame2(v: Vec2) -> [[f64; 2]; 2] {
    [[v[0], -v[1]], [v[1], v[0]]]
}

/// Frame of a spatial direction: `v · frame3(v) = e1`, built from a spin
/// about e1 followed by a turn in the (e1, e2) plane. Smooth away from the
/// two singular directions ±e1, where fixed representatives are returned.
pub fn frame3(v: Vec3) -> [[f64; 3]; 3] {
    let rho2 = v[1] * v[1] + v[2] * v[2];
    let rho = rho2.sqrt();
    if rho < 1e-300 {
        return if v[0] >= 0.0 {
            identity()
        } else {
            [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]
        };
    }
    let (c, s) = (v[1] / rho, v[2] / rho);
    // Spin about e1 sending the transverse part to the e2 axis.
    let g1 = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]];
    // Turn in the (e1, e2) plane sending (v1, rho) to (1, 0).
    let g2 = [[v[0], -rho, 0.0], [rho, v[0], 0.0], [0.0, 0.0, 1.0]];
    mat_mul(&g1, &g2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn frames_send_direction_to_e1() {
        let mut r = rng::stream(5, 0, 0);
        for _ in 0..200 {
            let v2 = rng::unit_vector2(&mut r);
            let f2 = frame2(v2);
            let e = vec_mat(v2, &f2);
            assert!((e[0] - 1.0).abs() < 1e-14 && e[1].abs() < 1e-14);

            let v3 = rng::unit_vector3(&mut r);
            let f3 = frame3(v3);
            let e = vec_mat(v3, &f3);
            assert!((e[0] - 1.0).abs() < 1e-12);
            assert!(e[1].abs() < 1e-12 && e[2].abs() < 1e-12);
            // Orthogonality.
            let ft = transpose(&f3);
            let prod = mat_mul(&f3, &ft);
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[i][j] - want).abs() < 1e-12);
                }
            }
            assert!((det(&f3) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frame3_singular_points_are_valid() {
        for v in [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]] {
            let f = frame3(v);
            let e = vec_mat(v, &f);
            assert!((e[0] - 1.0).abs() < 1e-15);
            assert!((det(&f) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m2 = [[1.5, 0.3], [-0.2, 0.9]];
        let p = mat_mul(&m2, &invert(&m2));
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - want).abs() < 1e-13);
            }
        }
        let m3 = [[2.0, 0.1, -0.3], [0.0, 1.1, 0.4], [0.7, -0.5, 0.8]];
        let p = mat_mul(&m3, &invert(&m3));
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rot2_orientation() {
        let e1 = [1.0, 0.0];
        let r = vec_mat(e1, &rot2(std::f64::consts::FRAC_PI_2));
        assert!(r[0].abs() < 1e-15 && (r[1] - 1.0).abs() < 1e-15);
    }
}
