//! Synthetic students from survey responses.
//!
//! Each respondent's ratings become a vector of per-course approval
//! probabilities. Sampling `ell` Bernoulli rows from it gives a data matrix
//! that updates a multivariate-Beta prior whose dependence is limited to
//! covariances. The posterior is sampled through a Gaussian copula with Beta
//! marginals. A status population is the uniform mixture of its
//! respondents' posteriors, plus an independent course-load distribution.

mod beta;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::{Agent, Status};

pub use beta::{beta_cdf, beta_quantile, normal_cdf, QUANTILE_TOL};

/// Default number of Bernoulli rows per respondent.
pub const DEFAULT_ELL: usize = 100;

/// Marginal means are kept this far from 0 and 1.
pub const MEAN_CLIP: f64 = 1e-9;

/// Eigenvalue floor when repairing a correlation matrix.
pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("data matrix has no rows")]
    EmptyData,
    #[error("marginal mean of course {0} is not finite")]
    DegenerateMarginal(usize),
    #[error("correlation matrix could not be factorized after repair")]
    Factorization,
    #[error("population has no respondents")]
    EmptyPopulation,
}

/// `theta_g = (rating_g - 1) / 7`: the default rating 1 never wants the course, 8 always does.
pub fn normalize_ratings(ratings: &[u8]) -> Vec<f64> {
    ratings.iter().map(|&r| (r.clamp(1, 8) - 1) as f64 / 7.0).collect()
}

/// Binary `ell x m` matrix of coin flips.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataMatrix {
    cols: usize,
    rows: Vec<Vec<bool>>,
}

impl DataMatrix {
    pub fn new(cols: usize, rows: Vec<Vec<bool>>) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "ragged data matrix");
        Self { cols, rows }
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }
}

/// Entry `(j, g)` is 1 with probability `theta_g`, independently.
pub fn sample_data_matrix<R: Rng + ?Sized>(theta: &[f64], ell: usize, rng: &mut R) -> DataMatrix {
    let rows = (0..ell).map(|_| theta.iter().map(|&p| rng.random::<f64>() < p).collect()).collect();
    DataMatrix::new(theta.len(), rows)
}

/// Sum of the outer products of the data rows, which equals `H diag(d(D)) H^T`
/// without building the `2^m` columns of `H`.
pub fn update_matrix(data: &DataMatrix) -> DMatrix<f64> {
    let m = data.num_cols();
    let mut u = DMatrix::zeros(m, m);
    let mut ones = Vec::with_capacity(m);
    for row in data.rows() {
        ones.clear();
        ones.extend(row.iter().enumerate().filter(|(_, &b)| b).map(|(g, _)| g));
        for &a in &ones {
            for &b in &ones {
                u[(a, b)] += 1.0;
            }
        }
    }
    u
}

/// Prior `(nu, mu, R)`. Only `mu = 1/2` and `R = I` meet the moment conditions for every `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub nu: f64,
}

impl Default for Prior {
    fn default() -> Self {
        Self { nu: 1e-3 }
    }
}

impl Prior {
    /// `A = nu ((nu + 1) Sigma + mu mu^T)` with `Sigma = V` because `R = I`.
    pub fn moment_matrix(&self, m: usize) -> DMatrix<f64> {
        let mu = 0.5;
        let var_term = mu * (1.0 - mu);
        DMatrix::from_fn(m, m, |a, b| {
            let cov = if a == b { var_term } else { 0.0 };
            self.nu * (cov + mu * mu)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorModel {
    pub nu: f64,
    pub mu: DVector<f64>,
    pub moment: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub corr: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
}

/// Conjugate update: `nu* = nu + ell`, `A* = A + U`, `mu* = diag(A*) / nu*`,
/// `Sigma*` from the moment relation, `R* = V*^(-1/2) Sigma* V*^(-1/2)`,
/// `alpha = nu* mu*`, `beta = nu* - alpha`.
pub fn posterior(prior: &Prior, data: &DataMatrix) -> Result<PosteriorModel, SynthError> {
    if data.num_rows() == 0 {
        return Err(SynthError::EmptyData);
    }
    let m = data.num_cols();
    let nu = prior.nu + data.num_rows() as f64;
    let moment = prior.moment_matrix(m) + update_matrix(data);
    let mut mu = moment.diagonal() / nu;
    for (g, x) in mu.iter_mut().enumerate() {
        if !x.is_finite() {
            return Err(SynthError::DegenerateMarginal(g));
        }
        *x = x.clamp(MEAN_CLIP, 1.0 - MEAN_CLIP);
    }
    let sigma = (&moment / nu - &mu * mu.transpose()) / (nu + 1.0);
    let sd: DVector<f64> = mu.map(|x| (x * (1.0 - x) / (nu + 1.0)).sqrt());
    let mut corr = DMatrix::from_fn(m, m, |a, b| {
        if a == b {
            1.0
        } else {
            (sigma[(a, b)] / (sd[a] * sd[b])).clamp(-1.0, 1.0)
        }
    });
    // Symmetrize away rounding noise.
    corr = (&corr + corr.transpose()) * 0.5;
    let alpha = &mu * nu;
    let beta = DVector::from_element(m, nu) - &alpha;
    Ok(PosteriorModel { nu, mu, moment, sigma, corr, alpha, beta })
}

/// Nearest-correlation repair: clip eigenvalues at [`EIGEN_FLOOR`] and rescale to a unit diagonal.
pub fn repair_correlation(corr: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(corr.clone());
    let clipped = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR));
    let r = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d: DVector<f64> = r.diagonal().map(|x| 1.0 / x.sqrt());
    let mut out = DMatrix::from_fn(r.nrows(), r.ncols(), |a, b| r[(a, b)] * d[a] * d[b]);
    out.fill_diagonal(1.0);
    (&out + out.transpose()) * 0.5
}

/// Symmetric square root `Q L^(1/2) Q^T`.
fn symmetric_sqrt(corr: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(corr.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// A posterior in sampling form: Beta marginals and the copula factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    factor: DMatrix<f64>,
}

impl Kernel {
    pub fn new(model: &PosteriorModel) -> Result<Self, SynthError> {
        let corr = if model.corr.clone().cholesky().is_some() {
            model.corr.clone()
        } else {
            let repaired = repair_correlation(&model.corr);
            if repaired.clone().cholesky().is_none() {
                return Err(SynthError::Factorization);
            }
            repaired
        };
        Ok(Self {
            alpha: model.alpha.iter().copied().collect(),
            beta: model.beta.iter().copied().collect(),
            factor: symmetric_sqrt(&corr),
        })
    }

    pub fn num_courses(&self) -> usize {
        self.alpha.len()
    }

    /// Gaussian draw with the copula correlation, pushed through the normal
    /// distribution function and then each Beta quantile.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.alpha.len();
        let noise = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = &self.factor * noise;
        z.iter()
            .enumerate()
            .map(|(g, &zg)| beta_quantile(normal_cdf(zg), self.alpha[g], self.beta[g]))
            .collect()
    }
}

pub fn sample_synthetic<R: Rng + ?Sized>(model: &PosteriorModel, rng: &mut R) -> Result<Vec<f64>, SynthError> {
    Ok(Kernel::new(model)?.sample(rng))
}

/// `round(8 sigma_g)`, clamped to the survey scale 1..=8.
pub fn to_response(sigma: &[f64]) -> Vec<u8> {
    sigma.iter().map(|&s| (8.0 * s.clamp(0.0, 1.0)).round().clamp(1.0, 8.0) as u8).collect()
}

/// Uniform mixture of respondent posteriors for one status.
#[derive(Debug, Clone, PartialEq)]
pub struct StatusPopulation {
    pub status: Status,
    pub kernels: Vec<Kernel>,
    /// Empirical course-load frequencies.
    pub course_max_dist: BTreeMap<u32, f64>,
}

impl StatusPopulation {
    /// Fits one kernel per respondent. Respondents of other statuses are ignored.
    pub fn fit<R: Rng + ?Sized>(
        status: Status,
        respondents: &[Agent],
        ell: usize,
        prior: &Prior,
        rng: &mut R,
    ) -> Result<Self, SynthError> {
        let members: Vec<&Agent> = respondents.iter().filter(|a| a.status == status).collect();
        if members.is_empty() {
            return Err(SynthError::EmptyPopulation);
        }
        let mut kernels = Vec::with_capacity(members.len());
        let mut loads: BTreeMap<u32, usize> = BTreeMap::new();
        for a in &members {
            let data = sample_data_matrix(&normalize_ratings(&a.ratings), ell, rng);
            kernels.push(Kernel::new(&posterior(prior, &data)?)?);
            *loads.entry(a.course_max).or_default() += 1;
        }
        let total = members.len() as f64;
        let course_max_dist = loads.into_iter().map(|(k, c)| (k, c as f64 / total)).collect();
        Ok(Self { status, kernels, course_max_dist })
    }

    /// Draws `count` synthetic students with ids `{prefix}{k}`.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, prefix: &str, rng: &mut R) -> Vec<Agent> {
        let loads: Vec<u32> = self.course_max_dist.keys().copied().collect();
        let weights: Vec<f64> = self.course_max_dist.values().copied().collect();
        let load_dist = WeightedIndex::new(&weights).expect("frequencies are positive");
        (0..count)
            .map(|k| {
                let kernel = &self.kernels[rng.random_range(0..self.kernels.len())];
                let ratings = to_response(&kernel.sample(rng));
                let course_max = loads[load_dist.sample(rng)].min(self.status.load_limit());
                Agent { id: 0, student_id: format!("{prefix}{k}"), status: self.status, ratings, course_max }
            })
            .collect()
    }
}
