use nalgebra::{Cholesky, DMatrix};

use crate::error::{GptcmError, Result};
use crate::model::types::MrfGraph;

/// Entries of a precision matrix below this magnitude count as zero.
pub const PRECISION_THRESHOLD: f64 = 1e-8;

/// Covariance of the stacked cell-type covariates `(X_1, …, X_L)`.
///
/// Block `l` has unit diagonal and `rho_within[l]^|j-j'|` between the first
/// `band` covariates, zero elsewhere. Off-diagonal blocks are `rho · I_p`.
/// Row and column `l·p + j` correspond to covariate `j` of type `l`.
pub fn build_covariance(p: usize, n_types: usize, rho: f64, rho_within: &[f64], band: usize) -> Result<DMatrix<f64>> {
    if p == 0 || n_types == 0 {
        return Err(GptcmError::Config("covariance needs p > 0 and L > 0".into()));
    }
    if rho_within.len() != n_types {
        return Err(GptcmError::Config(format!(
            "expected {n_types} within-type correlations, got {}",
            rho_within.len()
        )));
    }
    for &r in std::iter::once(&rho).chain(rho_within) {
        if !(r > -1.0 && r < 1.0) {
            return Err(GptcmError::Config(format!("correlation {r} is outside (-1, 1)")));
        }
    }
    let dim = p * n_types;
    let sigma = DMatrix::from_fn(dim, dim, |r, c| {
        let (lr, jr) = (r / p, r % p);
        let (lc, jc) = (c / p, c % p);
        if r == c {
            1.0
        } else if lr == lc {
            if jr < band && jc < band {
                rho_within[lr].powi(jr.abs_diff(jc) as i32)
            } else {
                0.0
            }
        } else if jr == jc {
            rho
        } else {
            0.0
        }
    });
    if Cholesky::new(sigma.clone()).is_none() {
        return Err(GptcmError::Config("covariance matrix is not positive definite".into()));
    }
    Ok(sigma)
}

/// MRF graph read off a covariance matrix: weight 1 between covariates of
/// the same type whose precision entry is nonzero, 0.5 between copies of
/// the same covariate in different types.
pub fn build_mrf_graph_from_precision(sigma: &DMatrix<f64>, p: usize, n_types: usize, a: f64, b: f64) -> Result<MrfGraph> {
    let dim = p * n_types;
    if sigma.nrows() != dim || sigma.ncols() != dim {
        return Err(GptcmError::Dimension(format!(
            "covariance is {}x{}, expected {dim}x{dim}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let omega = Cholesky::new(sigma.clone())
        .ok_or_else(|| GptcmError::Config("covariance matrix is not positive definite".into()))?
        .inverse();
    let mut edges = Vec::new();
    for u in 0..dim {
        for v in u + 1..dim {
            let (lu, ju) = (u / p, u % p);
            let (lv, jv) = (v / p, v % p);
            if lu == lv {
                if omega[(u, v)].abs() > PRECISION_THRESHOLD {
                    edges.push((u, v, 1.0));
                }
            } else if ju == jv {
                edges.push((u, v, 0.5));
            }
        }
    }
    MrfGraph::new(dim, &edges, a, b)
}

/// Graph with weight 1 between copies of the same covariate across types
/// and no other edges.
pub fn same_variable_graph(p: usize, n_types: usize, a: f64, b: f64) -> Result<MrfGraph> {
    let mut edges = Vec::new();
    for j in 0..p {
        for l1 in 0..n_types {
            for l2 in l1 + 1..n_types {
                edges.push((l1 * p + j, l2 * p + j, 1.0));
            }
        }
    }
    MrfGraph::new(p * n_types, &edges, a, b)
}
