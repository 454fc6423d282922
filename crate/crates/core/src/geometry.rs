//! Dense vectors, affine subspaces and the maps derived from a projection:
//! relaxed projection, reflection and the half squared distance.

use crate::error::{Error, Result};

/// Orthonormality tolerance for stored bases.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// A closed set with a single-valued selection of its (possibly set-valued)
/// nearest-point map.
pub trait Projection: Send + Sync {
    /// Ambient dimension.
    fn dim(&self) -> usize;

    /// Writes a nearest point of the set to `x` into `out`.
    ///
    /// Both slices have length [`Projection::dim`].
    fn project_into(&self, x: &[f64], out: &mut [f64]);

    fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.project_into(x, &mut out);
        out
    }
}

impl<P: Projection + ?Sized> Projection for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).project_into(x, out)
    }
}

impl<P: Projection + ?Sized> Projection for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).project_into(x, out)
    }
}

/// The whole space; projection is the identity.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl Projection for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
}

/// Wraps a closure as a projection, mostly for tests and small demos.
pub struct FnProjection<F> {
    dim: usize,
    f: F,
}

impl<F> FnProjection<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Projection for FnProjection<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

/// Relaxation parameter `lambda` in `(0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relaxation(f64);

impl Relaxation {
    pub const PROJECTION: Relaxation = Relaxation(1.0);
    pub const REFLECTION: Relaxation = Relaxation(2.0);

    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda <= 2.0 {
            Ok(Relaxation(lambda))
        } else {
            Err(Error::InvalidParameter(format!(
                "relaxation {lambda} outside (0, 2]"
            )))
        }
    }

    /// The relaxation `gamma / (1 + gamma)` used by damped splitting.
    /// `gamma = +inf` gives exactly 1.
    pub fn from_damping(gamma: f64) -> Result<Self> {
        if gamma.is_infinite() && gamma > 0.0 {
            return Ok(Self::PROJECTION);
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("damping {gamma} must be > 0")));
        }
        Self::new(gamma / (1.0 + gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

pub fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `lambda * p(x) + (1 - lambda) * x` written into `out`.
///
/// With `lambda = 1` the projection is returned verbatim.
pub fn relaxed_project_into<P: Projection + ?Sized>(
    p: &P,
    lambda: Relaxation,
    x: &[f64],
    out: &mut [f64],
) {
    p.project_into(x, out);
    let l = lambda.value();
    if l == 1.0 {
        return;
    }
    for (o, xi) in out.iter_mut().zip(x) {
        *o = l * *o + (1.0 - l) * xi;
    }
}

pub fn relaxed_project<P: Projection + ?Sized>(p: &P, lambda: Relaxation, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    relaxed_project_into(p, lambda, x, &mut out);
    out
}

/// `2 p(x) - x`.
pub fn reflect<P: Projection + ?Sized>(p: &P, x: &[f64]) -> Vec<f64> {
    relaxed_project(p, Relaxation::REFLECTION, x)
}

/// `0.5 * dist(x, C)^2` evaluated through the projection.
pub fn half_sq_distance<P: Projection + ?Sized>(p: &P, x: &[f64]) -> f64 {
    let px = p.project(x);
    0.5 * x
        .iter()
        .zip(&px)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
}

/// `{ offset + span(basis) }` with an orthonormal direction basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    dim: usize,
    basis: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl AffineSubspace {
    /// Builds the subspace `offset + span(directions)`.
    ///
    /// Directions are orthonormalized by modified Gram-Schmidt with one
    /// re-orthogonalization pass; linearly dependent directions are dropped.
    /// The stored offset is the point of the set closest to the origin.
    pub fn new(directions: &[Vec<f64>], offset: Vec<f64>) -> Result<Self> {
        check_finite(&offset)?;
        let dim = offset.len();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(directions.len());
        for d in directions {
            check_dim(dim, d.len())?;
            check_finite(d)?;
            let scale = norm(d);
            if scale == 0.0 {
                continue;
            }
            let mut v: Vec<f64> = d.iter().map(|x| x / scale).collect();
            for _pass in 0..2 {
                for b in &basis {
                    let c = dot(&v, b);
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= c * bi;
                    }
                }
            }
            let n = norm(&v);
            if n > 1e-10 {
                v.iter_mut().for_each(|x| *x /= n);
                basis.push(v);
            }
        }
        let mut s = Self {
            dim,
            basis,
            offset: vec![0.0; dim],
        };
        // canonical offset: remove the direction components
        let mut o = offset;
        for b in &s.basis {
            let c = dot(&o, b);
            for (oi, bi) in o.iter_mut().zip(b) {
                *oi -= c * bi;
            }
        }
        s.offset = o;
        Ok(s)
    }

    /// Hyperplane `{ x : <normal, x> = rhs }`.
    pub fn hyperplane(normal: &[f64], rhs: f64) -> Result<Self> {
        check_finite(normal)?;
        let nn = dot(normal, normal);
        if nn == 0.0 {
            return Err(Error::InvalidParameter("zero hyperplane normal".into()));
        }
        let n = normal.len();
        let unit: Vec<f64> = normal.iter().map(|a| a / nn.sqrt()).collect();
        // complete `unit` to an orthonormal basis and keep the complement
        let mut dirs = Vec::with_capacity(n - 1);
        let mut seen = vec![unit.clone()];
        for e in 0..n {
            let mut v = vec![0.0; n];
            v[e] = 1.0;
            for _pass in 0..2 {
                for b in &seen {
                    let c = dot(&v, b);
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= c * bi;
                    }
                }
            }
            let vn = norm(&v);
            if vn > 1e-8 {
                v.iter_mut().for_each(|x| *x /= vn);
                seen.push(v.clone());
                dirs.push(v);
            }
            if dirs.len() == n - 1 {
                break;
            }
        }
        let offset: Vec<f64> = normal.iter().map(|a| a * rhs / nn).collect();
        Self::new(&dirs, offset)
    }

    pub fn whole_space(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
        Self {
            dim,
            basis,
            offset: vec![0.0; dim],
        }
    }

    pub fn point(p: Vec<f64>) -> Result<Self> {
        Self::new(&[], p)
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Largest deviation of the basis Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }

    pub fn try_project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(self.project(x))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim && distance(x, &self.project(x)) <= tol
    }
}

impl Projection for AffineSubspace {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        out.copy_from_slice(&self.offset);
        for b in &self.basis {
            let c: f64 = x
                .iter()
                .zip(&self.offset)
                .zip(b)
                .map(|((xi, oi), bi)| (xi - oi) * bi)
                .sum();
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
    }
}
