//! Dense covariance assembly and Cholesky factorization for field sampling.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::sim::matern::MaternParams;

/// Dense factorization guard: grids beyond this point count need a sparse
/// or spectral sampler, which this library does not provide.
pub const MAX_DENSE_POINTS: usize = 20_000;

const JITTER_REL: f64 = 1e-10;
const MEMO_CAP: usize = 1 << 20;

/// Lower-triangular Cholesky factor of a Matérn covariance over a grid.
#[derive(Debug)]
pub struct CholeskyFactor {
    l: Array2<f64>,
    jitter_used: bool,
}

impl CholeskyFactor {
    /// The factor `L` with `L L^T` equal to the covariance (up to jitter).
    pub fn l(&self) -> &Array2<f64> {
        &self.l
    }

    pub fn point_count(&self) -> usize {
        self.l.nrows()
    }

    /// Whether diagonal jitter was needed to complete the factorization.
    pub fn jitter_used(&self) -> bool {
        self.jitter_used
    }
}

/// Assemble the covariance matrix `sigma^2 * corr(|s_i - s_j|)` over all
/// grid points (Euclidean distances in coordinate units) and return its
/// Cholesky factor. If the bare factorization fails, `1e-10 * sigma^2` is
/// added to the diagonal and the factorization retried once.
pub fn build_covariance(grid: &Grid, params: &MaternParams) -> Result<CholeskyFactor> {
    params.validate()?;
    let g = grid.point_count();
    if g > MAX_DENSE_POINTS {
        return Err(Error::GridTooLarge {
            points: g,
            limit: MAX_DENSE_POINTS,
        });
    }

    let cov = assemble(grid, params)?;
    match cholesky_lower(&cov) {
        Ok(l) => Ok(CholeskyFactor {
            l,
            jitter_used: false,
        }),
        Err(_) => {
            let mut jittered = cov;
            let jitter = JITTER_REL * params.sigma * params.sigma;
            for i in 0..g {
                jittered[[i, i]] += jitter;
            }
            match cholesky_lower(&jittered) {
                Ok(l) => Ok(CholeskyFactor {
                    l,
                    jitter_used: true,
                }),
                Err(minor) => Err(Error::FactorizationFailed { minor }),
            }
        }
    }
}

fn assemble(grid: &Grid, params: &MaternParams) -> Result<Array2<f64>> {
    let g = grid.point_count();
    let ndim = grid.ndim();
    let mut coords = vec![0.0; g * ndim];
    for p in 0..g {
        let c = grid.point_coord(p);
        coords[p * ndim..(p + 1) * ndim].copy_from_slice(&c);
    }

    let sigma_sq = params.sigma * params.sigma;
    // Regular grids repeat a small set of distances; memoize the Bessel
    // evaluations by squared distance, up to a size cap for irregular grids.
    let mut memo: HashMap<u64, f64> = HashMap::new();
    let mut cov = Array2::zeros((g, g));
    for i in 0..g {
        cov[[i, i]] = sigma_sq;
        let ci = &coords[i * ndim..(i + 1) * ndim];
        for j in 0..i {
            let cj = &coords[j * ndim..(j + 1) * ndim];
            let d_sq: f64 = ci
                .iter()
                .zip(cj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let key = d_sq.to_bits();
            let corr = match memo.get(&key) {
                Some(&v) => v,
                None => {
                    let v = params.correlation(d_sq.sqrt())?;
                    if memo.len() < MEMO_CAP {
                        memo.insert(key, v);
                    }
                    v
                }
            };
            let value = sigma_sq * corr;
            cov[[i, j]] = value;
            cov[[j, i]] = value;
        }
    }
    Ok(cov)
}

/// In-place lower Cholesky. On failure returns the 1-based index of the
/// leading minor that is not positive definite.
fn cholesky_lower(a: &Array2<f64>) -> std::result::Result<Array2<f64>, usize> {
    let n = a.nrows();
    let mut l = vec![0.0_f64; n * n];
    let src = a.as_slice().expect("row-major covariance");
    for j in 0..n {
        let row_j = j * n;
        let mut diag = src[row_j + j];
        diag -= dot(&l[row_j..row_j + j], &l[row_j..row_j + j]);
        if !(diag.is_finite() && diag > 0.0) {
            return Err(j + 1);
        }
        let pivot = diag.sqrt();
        l[row_j + j] = pivot;
        let inv = 1.0 / pivot;
        for i in (j + 1)..n {
            let row_i = i * n;
            let s = src[row_i + j] - dot(&l[row_i..row_i + j], &l[row_j..row_j + j]);
            l[row_i + j] = s * inv;
        }
    }
    Ok(Array2::from_shape_vec((n, n), l).expect("square factor"))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cache of Cholesky factors keyed on a canonical hash of the grid
/// coordinates and Matérn parameters, so repeated draws from one process
/// factor the covariance exactly once.
#[derive(Default)]
pub struct CovarianceCache {
    inner: Mutex<HashMap<u64, Arc<CholeskyFactor>>>,
}

impl CovarianceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factor(&self, grid: &Grid, params: &MaternParams) -> Result<Arc<CholeskyFactor>> {
        let key = cache_key(grid, params);
        if let Some(found) = self.inner.lock().unwrap().get(&key) {
            return Ok(found.clone());
        }
        let factor = Arc::new(build_covariance(grid, params)?);
        let mut map = self.inner.lock().unwrap();
        Ok(map.entry(key).or_insert(factor).clone())
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn cache_key(grid: &Grid, params: &MaternParams) -> u64 {
    let mut h = DefaultHasher::new();
    grid.dims().hash(&mut h);
    for axis in grid.coords() {
        for c in axis {
            c.to_bits().hash(&mut h);
        }
    }
    params.sigma.to_bits().hash(&mut h);
    params.range_r.to_bits().hash(&mut h);
    params.smoothness_nu.to_bits().hash(&mut h);
    h.finish()
}
