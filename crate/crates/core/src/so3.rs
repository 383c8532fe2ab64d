//! Rotations, view grids and distances on SO(3).
//!
//! A [`Rotation`] is a camera-to-object orientation: it maps camera-frame
//! vectors into the object frame. The camera's canonical view axis is `+z`,
//! so `R * e_z` is the unit direction from the object centre towards the
//! camera ([`Rotation::view_direction`]). Rotations about that axis are
//! in-plane rolls.
//!
//! Euler angles use the intrinsic Z-Y-X convention:
//! `R = Rz(alpha) * Ry(beta) * Rx(gamma)`.

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub const AXIS_X: Vec3 = [1.0, 0.0, 0.0];
pub const AXIS_Y: Vec3 = [0.0, 1.0, 0.0];
pub const AXIS_Z: Vec3 = [0.0, 0.0, 1.0];

/// Golden angle in radians, `pi * (3 - sqrt 5)`.
pub const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn normalize3(a: &Vec3) -> Result<Vec3> {
    let n = norm3(a);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroNorm("normalize3"));
    }
    Ok([a[0] / n, a[1] / n, a[2] / n])
}

/// Angle between two unit vectors, robust near 0 and pi.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    norm3(&cross3(a, b)).atan2(dot3(a, b))
}

/// Unit quaternion stored with `w >= 0`, so `q` and `-q` share one value.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct Rotation {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a rotation from any nonzero finite quaternion `(w, x, y, z)`.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroNorm("Rotation::from_quaternion"));
        }
        Ok(Self::canonical(w / n, x / n, y / n, z / n))
    }

    /// Renormalises and flips to the `w >= 0` hemisphere.
    fn canonical(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Self::flipped(w / n, x / n, y / n, z / n)
    }

    /// Flips to the `w >= 0` hemisphere. For `w == 0` the first nonzero
    /// vector component is made positive.
    fn flipped(w: f64, x: f64, y: f64, z: f64) -> Self {
        let flip = if w != 0.0 {
            w < 0.0
        } else if x != 0.0 {
            x < 0.0
        } else if y != 0.0 {
            y < 0.0
        } else {
            z < 0.0
        };
        // +0.0 keeps serialized output free of "-0.0"
        if flip {
            Rotation {
                w: -w + 0.0,
                x: -x + 0.0,
                y: -y + 0.0,
                z: -z + 0.0,
            }
        } else {
            Rotation {
                w: w + 0.0,
                x: x + 0.0,
                y: y + 0.0,
                z: z + 0.0,
            }
        }
    }

    /// `(w, x, y, z)` with `w >= 0`.
    pub fn quaternion(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let axis = normalize3(&axis)?;
        let (s, c) = (0.5 * angle).sin_cos();
        Ok(Self::canonical(c, s * axis[0], s * axis[1], s * axis[2]))
    }

    pub fn about_x(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self::canonical(c, s, 0.0, 0.0)
    }

    pub fn about_y(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self::canonical(c, 0.0, s, 0.0)
    }

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self::canonical(c, 0.0, 0.0, s)
    }

    /// Rotation whose view axis points along `direction`, followed by an
    /// in-plane roll about the optical axis.
    ///
    /// With `direction` at polar angle `theta` and azimuth `phi`, this is
    /// `Rz(phi) * Ry(theta) * Rz(roll)`: the camera x axis is the meridian
    /// tangent `e_theta` at roll 0. The frame is singular at the poles, where
    /// `phi` is taken as 0.
    pub fn look_at(direction: Vec3, roll: f64) -> Result<Self> {
        let d = normalize3(&direction)?;
        Ok(Self::frame(&d) * Self::about_z(roll))
    }

    fn frame(d: &Vec3) -> Self {
        let rho = d[0].hypot(d[1]);
        let theta = rho.atan2(d[2]);
        let phi = d[1].atan2(d[0]);
        Self::about_z(phi) * Self::about_y(theta)
    }

    pub fn inverse(&self) -> Self {
        Self::canonical(self.w, -self.x, -self.y, -self.z)
    }

    /// Hamilton product `self * other` (apply `other` first).
    pub fn compose(&self, other: &Rotation) -> Self {
        let (a, b) = (self, other);
        Self::canonical(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        let u = [self.x, self.y, self.z];
        let t = cross3(&u, v);
        let t = [2.0 * t[0], 2.0 * t[1], 2.0 * t[2]];
        let c = cross3(&u, &t);
        [
            v[0] + self.w * t[0] + c[0],
            v[1] + self.w * t[1] + c[1],
            v[2] + self.w * t[2] + c[2],
        ]
    }

    /// Row-major rotation matrix.
    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        let Rotation { w, x, y, z } = *self;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        let v = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        2.0 * v.atan2(self.w.abs())
    }

    /// Unit direction from the object centre to the camera, `R * e_z`.
    pub fn view_direction(&self) -> Vec3 {
        let Rotation { w, x, y, z } = *self;
        [
            2.0 * (x * z + w * y),
            2.0 * (y * z - w * x),
            1.0 - 2.0 * (x * x + y * y),
        ]
    }

    /// In-plane roll in `[0, 2pi)`, such that
    /// `look_at(view_direction(), roll()) == self`.
    pub fn roll(&self) -> f64 {
        let t = Self::frame(&self.view_direction()).inverse() * *self;
        let r = (2.0 * t.z.atan2(t.w)).rem_euclid(TAU);
        if r >= TAU {
            0.0
        } else {
            r
        }
    }

    /// Intrinsic Z-Y-X Euler angles: `Rz(alpha) * Ry(beta) * Rx(gamma)`.
    pub fn from_euler(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self::about_z(alpha) * Self::about_y(beta) * Self::about_x(gamma)
    }

    /// Inverse of [`Rotation::from_euler`]. `beta` lies in `[-pi/2, pi/2]`;
    /// at gimbal lock `gamma` is reported as 0.
    pub fn to_euler(&self) -> (f64, f64, f64) {
        let m = self.to_matrix();
        let cos_beta = (m[0][0] * m[0][0] + m[1][0] * m[1][0]).sqrt();
        let beta = (-m[2][0]).atan2(cos_beta);
        if cos_beta > 1e-12 {
            (m[1][0].atan2(m[0][0]), beta, m[2][1].atan2(m[2][2]))
        } else {
            ((-m[0][1]).atan2(m[1][1]), beta, 0.0)
        }
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a Rotation> for &'a Rotation {
    type Output = Rotation;

    fn mul(self, rhs: &Rotation) -> Rotation {
        self.compose(rhs)
    }
}

/// Equality of the canonical representatives, so `q == -q`.
impl PartialEq for Rotation {
    fn eq(&self, other: &Self) -> bool {
        self.quaternion() == other.quaternion()
    }
}

impl From<Rotation> for [f64; 4] {
    fn from(r: Rotation) -> Self {
        r.quaternion()
    }
}

impl TryFrom<[f64; 4]> for Rotation {
    type Error = Error;

    fn try_from(q: [f64; 4]) -> Result<Self> {
        let n2 = q.iter().map(|c| c * c).sum::<f64>();
        if (n2 - 1.0).abs() < 1e-14 {
            // already unit: keep the stored bits so files round-trip exactly
            return Ok(Rotation::flipped(q[0], q[1], q[2], q[3]));
        }
        Rotation::from_quaternion(q[0], q[1], q[2], q[3])
    }
}

/// Angle of `a^-1 * b`, in `[0, pi]`.
pub fn geodesic_distance(a: &Rotation, b: &Rotation) -> f64 {
    (a.inverse() * *b).angle()
}

/// Polar angle `theta` from `+z` and azimuth `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalDirection {
    pub theta: f64,
    pub phi: f64,
}

impl SphericalDirection {
    pub fn to_vector(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn from_vector(v: &Vec3) -> Result<Self> {
        let v = normalize3(v)?;
        let theta = v[2].clamp(-1.0, 1.0).acos();
        let mut phi = v[1].atan2(v[0]).rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self { theta, phi })
    }
}

/// `n` quasi-uniform directions on the Fibonacci (golden spiral) lattice with
/// `z_k = 1 - 2 (k + 0.5) / n` and azimuth `k * golden_angle`. A single
/// direction is placed at the `+z` pole.
pub fn fibonacci_directions(n: usize) -> Result<Vec<SphericalDirection>> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one direction"));
    }
    if n == 1 {
        return Ok(vec![SphericalDirection {
            theta: 0.0,
            phi: 0.0,
        }]);
    }
    Ok((0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let mut phi = (k as f64 * GOLDEN_ANGLE).rem_euclid(TAU);
            if phi >= TAU {
                phi = 0.0;
            }
            SphericalDirection {
                theta: z.clamp(-1.0, 1.0).acos(),
                phi,
            }
        })
        .collect())
}

/// Expected spacing of `n` uniform points on the unit sphere, `sqrt(4 pi / n)`.
pub fn uniform_spacing(n: usize) -> f64 {
    (4.0 * PI / n as f64).sqrt()
}

/// Fibonacci directions crossed with uniform in-plane rolls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewGrid {
    pub rotations: Vec<Rotation>,
    pub n_dirs: usize,
    pub n_inplane: usize,
}

impl ViewGrid {
    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    /// Roll-free directions only, in grid order.
    pub fn directions(&self) -> Vec<Vec3> {
        self.rotations
            .iter()
            .step_by(self.n_inplane.max(1))
            .map(Rotation::view_direction)
            .collect()
    }

    /// Expected angular spacing of the grid's view directions.
    pub fn direction_spacing(&self) -> f64 {
        uniform_spacing(self.n_dirs)
    }

    /// Largest nearest-neighbour geodesic distance over all grid rotations
    /// (exhaustive, quadratic in grid size).
    pub fn max_nn_spacing(&self) -> f64 {
        let rots = &self.rotations;
        if rots.len() < 2 {
            return 0.0;
        }
        rots.par_iter()
            .enumerate()
            .map(|(i, a)| {
                rots.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| geodesic_distance(a, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// For each Fibonacci direction, `n_inplane` rotations looking at the origin
/// from that direction with rolls `2 pi i / n_inplane`. Direction-major order.
pub fn build_view_grid(n_dirs: usize, n_inplane: usize) -> Result<ViewGrid> {
    if n_dirs == 0 {
        return Err(Error::invalid("n_dirs", "need at least one direction"));
    }
    if n_inplane == 0 {
        return Err(Error::invalid("n_inplane", "need at least one roll step"));
    }
    let dirs = fibonacci_directions(n_dirs)?;
    let mut rotations = Vec::with_capacity(n_dirs * n_inplane);
    for d in &dirs {
        let v = d.to_vector();
        for i in 0..n_inplane {
            let roll = TAU * i as f64 / n_inplane as f64;
            rotations.push(Rotation::look_at(v, roll)?);
        }
    }
    Ok(ViewGrid {
        rotations,
        n_dirs,
        n_inplane,
    })
}
