use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Scalar;

/// Largest p for which the restricted eigenvalue is computed over every
/// support.
pub const EXACT_MAX_P: usize = 20;
/// Random starts of the inner cone minimization, per support.
pub const MULTI_STARTS: usize = 16;
const INNER_ITERS: usize = 400;
const SEED_BASE: u64 = 0x5eed_e16e;

/// Curvature constants consumed by the distance bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EigenInfo<T: Scalar> {
    /// Minimum eigenvalue of `X'X/n`.
    pub rho: T,
    /// Restricted minimum eigenvalue (squared convention, same
    /// normalization as `rho`).
    pub rho_restricted: Option<T>,
    pub sparsity_s: Option<usize>,
    pub k0: Option<T>,
    /// False when `rho_restricted` comes from sampled supports.
    pub certified: bool,
}

impl<T: Scalar> EigenInfo<T> {
    pub fn from_rho(rho: T) -> Self {
        Self { rho, rho_restricted: None, sparsity_s: None, k0: None, certified: true }
    }

    pub fn with_restricted(mut self, re: &RestrictedEigen<T>, s: usize, k0: T) -> Self {
        self.rho_restricted = Some(re.value);
        self.sparsity_s = Some(s);
        self.k0 = Some(k0);
        self.certified = re.certified;
        self
    }
}

pub(crate) fn gram<T: Scalar>(x: &DMatrix<T>) -> DMatrix<T> {
    x.tr_mul(x) / T::from_usize_lossy(x.nrows().max(1))
}

fn smallest_eigen<T: Scalar>(g: &DMatrix<T>) -> T {
    let ev = SymmetricEigen::new(g.clone()).eigenvalues;
    ev.iter().fold(T::infinity(), |a, &v| a.min(v))
}

/// Smallest eigenvalue of `X'X/n` (n = rows of `x`), clamped at 0.
pub fn min_eigenvalue<T: Scalar>(x: &DMatrix<T>) -> T {
    smallest_eigen(&gram(x)).max(T::zero())
}

/// Euclidean projection onto `{w : ||w||_1 <= r}`.
pub(crate) fn project_l1_ball<T: Scalar>(v: &mut [T], r: T) {
    let l1 = v.iter().fold(T::zero(), |a, x| a + x.abs());
    if l1 <= r {
        return;
    }
    if r <= T::zero() {
        v.iter_mut().for_each(|x| *x = T::zero());
        return;
    }
    let mut mags: Vec<T> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (i, &m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - r) / T::from_usize_lossy(i + 1);
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        let m = (x.abs() - theta).max(T::zero());
        *x = if *x < T::zero() { -m } else { m };
    }
}

/// How supports are visited by [`restricted_min_eigenvalue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ReMode {
    /// Every support of size `s`; requires `p <= 20`.
    Exact,
    /// `supports` uniformly drawn supports. The minimum over a subset of
    /// supports can only overstate the true value, so the result is
    /// flagged as not certified.
    Sampled { supports: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RestrictedEigen<T: Scalar> {
    pub value: T,
    /// Support attaining the minimum.
    pub support: Vec<usize>,
    pub certified: bool,
    pub supports_visited: usize,
}

/// Restricted minimum eigenvalue
/// `min_{|J| <= s} min_{||D_{J^c}||_1 <= k0 ||D_J||_1} ||X D||^2 / (n ||D_J||^2)`.
///
/// Only supports of size exactly `s` are visited: enlarging `J` enlarges
/// the cone and can only lower the minimum. For each support the inner
/// non-convex problem is solved by projected gradient from
/// [`MULTI_STARTS`] seeded starts (one of them the bottom eigenvector of
/// the `J` block). The search stops early once it reaches the
/// unrestricted minimum eigenvalue, which bounds it from below.
pub fn restricted_min_eigenvalue<T: Scalar>(x: &DMatrix<T>, s: usize, k0: T, mode: ReMode) -> Result<RestrictedEigen<T>> {
    let p = x.ncols();
    if s < 1 || s > p {
        return Err(Error::InvalidParameter(format!("sparsity s={s} must lie in [1, p={p}]")));
    }
    if !(k0 >= T::zero()) || !k0.is_finite() {
        return Err(Error::InvalidParameter(format!("cone constant k0={k0} must be >= 0")));
    }
    if mode == ReMode::Exact && p > EXACT_MAX_P {
        return Err(Error::TooLargeForExact { p, max_p: EXACT_MAX_P });
    }
    let g = gram(x);
    let floor = smallest_eigen(&g).max(T::zero());
    let top = SymmetricEigen::new(g.clone()).eigenvalues.iter().fold(T::zero(), |a, &v| a.max(v));
    if top <= T::zero() {
        return Ok(RestrictedEigen { value: T::zero(), support: (0..s).collect(), certified: true, supports_visited: 0 });
    }
    let step = T::one() / (T::lit(2.0) * top);
    let slack = T::lit(1e-12);

    let (supports, certified): (Box<dyn Iterator<Item = Vec<usize>>>, bool) = match mode {
        ReMode::Exact => (Box::new(Combinations::new(p, s)), true),
        ReMode::Sampled { supports, seed } => {
            let mut rng = rng_from_seed(seed);
            let draws: Vec<Vec<usize>> = (0..supports.max(1))
                .map(|_| {
                    let mut idx = rand::seq::index::sample(&mut rng, p, s).into_vec();
                    idx.sort_unstable();
                    idx
                })
                .collect();
            (Box::new(draws.into_iter()), false)
        }
    };

    let mut best = T::infinity();
    let mut best_support = Vec::new();
    let mut visited = 0usize;
    let mut supports = supports.peekable();
    const CHUNK: usize = 256;
    while supports.peek().is_some() {
        let chunk: Vec<Vec<usize>> = supports.by_ref().take(CHUNK).collect();
        let base = visited as u64;
        visited += chunk.len();
        let values: Vec<T> = chunk
            .par_iter()
            .enumerate()
            .map(|(i, j)| support_minimum(&g, j, k0, step, derive_seed(SEED_BASE, base + i as u64)))
            .collect();
        for (j, v) in chunk.into_iter().zip(values) {
            if v < best {
                best = v;
                best_support = j;
            }
        }
        if best <= floor + slack {
            break;
        }
    }
    Ok(RestrictedEigen { value: best.max(T::zero()), support: best_support, certified, supports_visited: visited })
}

/// Inner minimum over the cone for one support, normalized to `||D_J|| = 1`.
fn support_minimum<T: Scalar>(g: &DMatrix<T>, support: &[usize], k0: T, step: T, seed: u64) -> T {
    let p = g.nrows();
    let mut in_j = vec![false; p];
    support.iter().for_each(|&j| in_j[j] = true);
    let rest: Vec<usize> = (0..p).filter(|&j| !in_j[j]).collect();

    let gjj = DMatrix::from_fn(support.len(), support.len(), |a, b| g[(support[a], support[b])]);
    let eig = SymmetricEigen::new(gjj);
    let imin = (0..eig.eigenvalues.len())
        .min_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let bottom = eig.eigenvectors.column(imin).into_owned();

    let mut rng = rng_from_seed(seed);
    let mut best = T::infinity();
    for start in 0..MULTI_STARTS {
        let mut d = DVector::<T>::zeros(p);
        if start == 0 {
            support.iter().enumerate().for_each(|(a, &j)| d[j] = bottom[a]);
        } else {
            for v in d.iter_mut() {
                *v = T::lit(rng.sample::<f64, _>(StandardNormal));
            }
            let shrink = T::lit(rng.random::<f64>());
            if !normalize_into_cone(&mut d, support, &rest, k0 * shrink) {
                continue;
            }
        }
        best = best.min(descend(g, d, support, &rest, k0, step));
    }
    best
}

/// Scales `d` to `||d_J|| = 1` and projects `d_{J^c}` onto the cone.
fn normalize_into_cone<T: Scalar>(d: &mut DVector<T>, support: &[usize], rest: &[usize], k0: T) -> bool {
    let norm = support.iter().fold(T::zero(), |a, &j| a + d[j] * d[j]).sqrt();
    if !(norm > T::zero()) {
        return false;
    }
    *d /= norm;
    let radius = k0 * support.iter().fold(T::zero(), |a, &j| a + d[j].abs());
    let mut w: Vec<T> = rest.iter().map(|&j| d[j]).collect();
    project_l1_ball(&mut w, radius);
    rest.iter().zip(w).for_each(|(&j, v)| d[j] = v);
    true
}

fn descend<T: Scalar>(g: &DMatrix<T>, mut d: DVector<T>, support: &[usize], rest: &[usize], k0: T, step: T) -> T {
    let mut gd = g * &d;
    let mut f = d.dot(&gd);
    let mut best = f;
    let two = T::lit(2.0);
    for _ in 0..INNER_ITERS {
        let mut next = &d - &gd * (two * step);
        if !normalize_into_cone(&mut next, support, rest, k0) {
            break;
        }
        let g_next = g * &next;
        let f_next = next.dot(&g_next);
        let improvement = f - f_next;
        d = next;
        gd = g_next;
        f = f_next;
        best = best.min(f);
        if improvement.abs() <= T::lit(1e-13) * f.abs().max(T::lit(1e-3)) {
            break;
        }
    }
    best
}

/// Lexicographic k-subsets of `0..n`.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self { n, idx: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for t in i + 1..k {
                    self.idx[t] = self.idx[t - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_count() {
        assert_eq!(Combinations::new(6, 3).count(), 20);
        assert_eq!(Combinations::new(4, 4).collect::<Vec<_>>(), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn l1_projection() {
        let mut v = vec![3.0, -1.0];
        project_l1_ball(&mut v, 2.0);
        assert_eq!(v, vec![2.0, 0.0]);
        let mut w = vec![1.0, -1.0];
        project_l1_ball(&mut w, 1.0);
        assert_eq!(w, vec![0.5, -0.5]);
    }

    #[test]
    fn identity_design() {
        let x = DMatrix::<f64>::identity(4, 4) * 2.0;
        assert!((min_eigenvalue(&x) - 1.0).abs() < 1e-12);
        let re = restricted_min_eigenvalue(&x, 2, 3.0, ReMode::Exact).unwrap();
        assert!((re.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_large_for_exact() {
        let x = DMatrix::<f64>::zeros(5, 25);
        assert_eq!(
            restricted_min_eigenvalue(&x, 2, 1.0, ReMode::Exact).unwrap_err(),
            Error::TooLargeForExact { p: 25, max_p: 20 }
        );
    }
}
