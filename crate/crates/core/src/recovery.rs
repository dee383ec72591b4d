//! Rebuilding the covariance from the median covariation matrix.
//!
//! For a symmetric law with covariance `Sigma = sum_k lambda_k v_k v_k^T`,
//! the MCM `V` shares the eigenvectors `v_k` and its eigenvalues `delta`
//! satisfy, with `U` the standardized law,
//!
//! ```text
//! delta_k = lambda_k E[U_k^2 h(delta, lambda, U)] / E[h(delta, lambda, U)]
//! h = ( sum_i (delta_i - lambda_i U_i^2)^2 + sum_{i != j} lambda_i lambda_j U_i^2 U_j^2 )^(-1/2)
//! ```
//!
//! Given `delta`, `lambda` is found from a Monte-Carlo sample of `U` with one
//! of three solvers. The map `V -> Sigma` is [`psi_u`]; [`PsiMap`] caches the
//! sample so repeated calls (one per cluster per EM iteration) are cheap and
//! deterministic.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};

use crate::data::Points;
use crate::error::{Error, Result};
use crate::linalg::{default_floor, sym_eigen, SymMatrix};
use crate::location::{weiszfeld_median, WeiszfeldConfig};
use crate::rng::{self, labels};
use crate::scatter::weiszfeld_mcm;

/// Lower clamp on the sum inside `h` before the reciprocal square root.
pub const H_GUARD: f64 = 1e-24;

/// Emission law of a cluster, up to location and covariance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum EmissionFamily {
    Gaussian,
    /// Multivariate Student with known degrees of freedom (at least 3), scaled
    /// so that its covariance is the cluster's `Sigma`.
    Student {
        df: u32,
    },
    /// Normal variance mixture `sqrt(W) N(0, Sigma)` with `W ~ Exp(1)`.
    Laplace,
}

impl EmissionFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EmissionFamily::Student { df } if df < 3 => {
                Err(Error::invalid("Student family needs at least 3 degrees of freedom"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Solver {
    FixPoint,
    Gradient,
    RobbinsMonro,
}

/// Monte-Carlo eigenvalue recovery settings.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecoveryConfig {
    pub solver: Solver,
    /// Sample size `N` for the fix-point and gradient solvers. Robbins-Monro
    /// streams `N * iterations` draws in a single pass, the same budget as
    /// `iterations` sweeps over `N` draws.
    pub mc_samples: usize,
    pub iterations: usize,
    /// Robbins-Monro step `c_gamma * k^(-gamma)`.
    pub c_gamma: f64,
    pub gamma: f64,
    /// Robbins-Monro averaging weights `log(l + 1)^omega`.
    pub omega: f64,
    /// Gradient step `eta0 / (1 + t)^eta_decay`, applied to the gradient
    /// normalized by `sum_i h_i`.
    pub eta0: f64,
    pub eta_decay: f64,
    pub seed: u64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            solver: Solver::FixPoint,
            mc_samples: 2000,
            iterations: 50,
            c_gamma: 1.0,
            gamma: 0.75,
            omega: 2.0,
            eta0: 1.0,
            eta_decay: 0.0,
            seed: 0,
        }
    }
}

impl RecoveryConfig {
    pub fn with_solver(solver: Solver) -> Self {
        RecoveryConfig { solver, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 || self.iterations == 0 {
            return Err(Error::invalid("recovery needs mc_samples >= 1 and iterations >= 1"));
        }
        if !(self.gamma > 0.5 && self.gamma < 1.0) || !(self.c_gamma > 0.0) {
            return Err(Error::invalid("Robbins-Monro needs c_gamma > 0 and gamma in (1/2, 1)"));
        }
        if !(self.omega >= 0.0) {
            return Err(Error::invalid("averaging exponent omega must be nonnegative"));
        }
        if !(self.eta0 > 0.0) || !(self.eta_decay >= 0.0) {
            return Err(Error::invalid("gradient step needs eta0 > 0 and eta_decay >= 0"));
        }
        Ok(())
    }

    /// Number of draws of `U` the configured solver consumes.
    pub fn sample_size(&self) -> usize {
        match self.solver {
            Solver::FixPoint | Solver::Gradient => self.mc_samples,
            Solver::RobbinsMonro => self.mc_samples * self.iterations,
        }
    }
}

/// `h(delta, lambda, u)`.
pub fn h_kernel(delta: &[f64], lambda: &[f64], u: &[f64]) -> f64 {
    let mut sq = vec![0.0; u.len()];
    for (s, x) in sq.iter_mut().zip(u) {
        *s = x * x;
    }
    h_from_squares(delta, lambda, &sq)
}

/// `h` from the squared coordinates `s_i = U_i^2`, in `O(d)`:
/// `sum_{i != j} l_i l_j s_i s_j = (sum_i l_i s_i)^2 - sum_i (l_i s_i)^2`.
#[inline]
pub(crate) fn h_from_squares(delta: &[f64], lambda: &[f64], sq: &[f64]) -> f64 {
    let mut diag = 0.0;
    let mut lin = 0.0;
    let mut quad = 0.0;
    for i in 0..sq.len() {
        let ls = lambda[i] * sq[i];
        let r = delta[i] - ls;
        diag += r * r;
        lin += ls;
        quad += ls * ls;
    }
    let cross = (lin * lin - quad).max(0.0);
    1.0 / libm::sqrt((diag + cross).max(H_GUARD))
}

/// `n` i.i.d. rows of the standardized law `U` (zero mean, identity
/// covariance), row-major.
pub fn sample_standardized(family: EmissionFamily, d: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
    if d == 0 || n == 0 {
        return Err(Error::invalid("need d >= 1 and n >= 1"));
    }
    family.validate()?;
    let mut rng = rng::stream(seed, labels::UNIT_SAMPLE);
    let mut out = vec![0.0; n * d];
    for row in out.chunks_exact_mut(d) {
        fill_standardized(family, &mut rng, row)?;
    }
    Ok(out)
}

/// Fills `row` with one draw of `U`; the mixing variable is shared across the
/// coordinates of the row.
pub(crate) fn fill_standardized<R: rand::Rng + ?Sized>(
    family: EmissionFamily,
    rng: &mut R,
    row: &mut [f64],
) -> Result<()> {
    for v in row.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let scale = match family {
        EmissionFamily::Gaussian => 1.0,
        EmissionFamily::Student { df } => {
            let chi = ChiSquared::new(df as f64).map_err(|_| Error::invalid("bad degrees of freedom"))?;
            let k: f64 = chi.sample(rng);
            libm::sqrt((df as f64 - 2.0) / k)
        }
        EmissionFamily::Laplace => {
            let w: f64 = Exp1.sample(rng);
            libm::sqrt(w)
        }
    };
    if scale != 1.0 {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    Ok(())
}

/// Monte-Carlo sample of `U`, stored as squared coordinates.
#[derive(Clone, Debug)]
pub struct UnitSample {
    dim: usize,
    squares: Vec<f64>,
}

impl UnitSample {
    pub fn draw(family: EmissionFamily, d: usize, n: usize, seed: u64) -> Result<Self> {
        let mut squares = sample_standardized(family, d, n, seed)?;
        squares.iter_mut().for_each(|v| *v *= *v);
        Ok(UnitSample { dim: d, squares })
    }

    /// From raw (unsquared) row-major draws.
    pub fn from_draws(d: usize, draws: &[f64]) -> Result<Self> {
        if d == 0 || draws.is_empty() || !draws.len().is_multiple_of(d) {
            return Err(Error::invalid("draws must be a nonempty multiple of d"));
        }
        Ok(UnitSample { dim: d, squares: draws.iter().map(|v| v * v).collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.squares.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.squares.chunks_exact(self.dim)
    }

    /// `(sum_i h_i, [sum_i U_ik^2 h_i]_k)` at `(delta, lambda)`.
    fn moments(&self, delta: &[f64], lambda: &[f64], weighted: &mut [f64]) -> f64 {
        weighted.iter_mut().for_each(|v| *v = 0.0);
        let mut total = 0.0;
        for sq in self.rows() {
            let h = h_from_squares(delta, lambda, sq);
            total += h;
            for (acc, s) in weighted.iter_mut().zip(sq) {
                *acc += s * h;
            }
        }
        total
    }
}

/// Recovered eigenvalues with the number of `h` evaluations spent.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub lambda: Vec<f64>,
    pub evaluations: usize,
}

fn check_delta(delta: &[f64]) -> Result<()> {
    if delta.is_empty() {
        return Err(Error::invalid("delta must be nonempty"));
    }
    if delta.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("delta entries must be finite and nonnegative"));
    }
    Ok(())
}

/// Covariance eigenvalues `lambda` matching MCM eigenvalues `delta`.
pub fn recover_eigenvalues(delta: &[f64], family: EmissionFamily, cfg: &RecoveryConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_delta(delta)?;
    let sample = UnitSample::draw(family, delta.len(), cfg.sample_size(), cfg.seed)?;
    Ok(recover_with_sample(delta, &sample, cfg)?.lambda)
}

/// [`recover_eigenvalues`] on a caller-provided sample. Robbins-Monro makes
/// exactly one pass over `sample`; the iterative solvers sweep it
/// `cfg.iterations` times.
pub fn recover_with_sample(delta: &[f64], sample: &UnitSample, cfg: &RecoveryConfig) -> Result<Recovery> {
    cfg.validate()?;
    check_delta(delta)?;
    if sample.dim() != delta.len() {
        return Err(Error::DimensionMismatch { expected: delta.len(), found: sample.dim() });
    }
    match cfg.solver {
        Solver::FixPoint => fix_point(delta, sample, cfg.iterations),
        Solver::Gradient => gradient(delta, sample, cfg),
        Solver::RobbinsMonro => robbins_monro(delta, sample, cfg),
    }
}

fn check_finite(lambda: &[f64], iteration: usize) -> Result<()> {
    if lambda.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure { iteration, what: "non-finite eigenvalue iterate" })
    }
}

fn fix_point(delta: &[f64], sample: &UnitSample, iterations: usize) -> Result<Recovery> {
    let d = delta.len();
    let mut lambda = delta.to_vec();
    let mut weighted = vec![0.0; d];
    for t in 1..=iterations {
        let total = sample.moments(delta, &lambda, &mut weighted);
        for k in 0..d {
            lambda[k] = if delta[k] == 0.0 { 0.0 } else { (delta[k] * total / weighted[k]).max(0.0) };
        }
        check_finite(&lambda, t)?;
    }
    Ok(Recovery { lambda, evaluations: iterations * sample.len() })
}

fn gradient(delta: &[f64], sample: &UnitSample, cfg: &RecoveryConfig) -> Result<Recovery> {
    let d = delta.len();
    let mut lambda = delta.to_vec();
    let mut weighted = vec![0.0; d];
    for t in 0..cfg.iterations {
        let total = sample.moments(delta, &lambda, &mut weighted);
        let eta = cfg.eta0 / libm::pow(1.0 + t as f64, cfg.eta_decay);
        for k in 0..d {
            let grad = (lambda[k] * weighted[k] - delta[k] * total) / total;
            lambda[k] = (lambda[k] - eta * grad).max(0.0);
        }
        check_finite(&lambda, t + 1)?;
    }
    Ok(Recovery { lambda, evaluations: cfg.iterations * sample.len() })
}

/// Robbins-Monro step sizes and averaging rates, which depend only on the
/// step index.
#[derive(Clone, Debug)]
struct RmSchedule {
    step: Vec<f64>,
    /// Averaging weight of iterate `l`, for `l = 1..=len`.
    weight: Vec<f64>,
    /// Weight of the starting point.
    weight0: f64,
    total: f64,
}

impl RmSchedule {
    fn new(cfg: &RecoveryConfig, len: usize) -> Self {
        // Iterate l carries weight log(l + 1)^omega; l = 0 is the start.
        let weight_of = |l: usize| -> f64 {
            if cfg.omega == 0.0 {
                1.0
            } else {
                libm::pow(libm::log(l as f64 + 1.0), cfg.omega)
            }
        };
        let step = (1..=len).map(|k| cfg.c_gamma * libm::pow(k as f64, -cfg.gamma)).collect();
        let weight: Vec<f64> = (1..=len).map(weight_of).collect();
        let weight0 = weight_of(0);
        let total = weight0 + weight.iter().sum::<f64>();
        RmSchedule { step, weight, weight0, total }
    }
}

fn robbins_monro(delta: &[f64], sample: &UnitSample, cfg: &RecoveryConfig) -> Result<Recovery> {
    robbins_monro_scheduled(delta, sample, &RmSchedule::new(cfg, sample.len()))
}

fn robbins_monro_scheduled(delta: &[f64], sample: &UnitSample, schedule: &RmSchedule) -> Result<Recovery> {
    let mut lambda = delta.to_vec();
    let mut acc: Vec<f64> = delta.iter().map(|&l| schedule.weight0 * l).collect();
    let mut h_sum = 0.0;
    for (idx, sq) in sample.rows().enumerate() {
        let h = h_from_squares(delta, &lambda, sq);
        h_sum += h;
        // Normalizing by the running mean of h makes the step scale-free.
        let scale = schedule.step[idx] * h * (idx + 1) as f64 / h_sum;
        let w = schedule.weight[idx];
        for (((l, a), s), dl) in lambda.iter_mut().zip(acc.iter_mut()).zip(sq).zip(delta) {
            *l = (*l - scale * (*l * s - dl)).max(0.0);
            *a += w * *l;
        }
    }
    let average: Vec<f64> = acc.iter().map(|a| a / schedule.total).collect();
    check_finite(&average, sample.len())?;
    Ok(Recovery { lambda: average, evaluations: sample.len() })
}

/// Empirical residuals `|lambda_k mean(U_k^2 h) - delta_k mean(h)| / max(delta_k, 1e-8)`.
pub fn fixpoint_residual(delta: &[f64], lambda: &[f64], sample: &UnitSample) -> Vec<f64> {
    let mut weighted = vec![0.0; delta.len()];
    let total = sample.moments(delta, lambda, &mut weighted);
    let n = sample.len() as f64;
    (0..delta.len()).map(|k| (lambda[k] * weighted[k] / n - delta[k] * total / n).abs() / delta[k].max(1e-8)).collect()
}

/// The map `V -> Sigma` with a cached Monte-Carlo sample.
#[derive(Clone, Debug)]
pub struct PsiMap {
    family: EmissionFamily,
    cfg: RecoveryConfig,
    sample: UnitSample,
    schedule: Option<RmSchedule>,
}

impl PsiMap {
    pub fn new(family: EmissionFamily, dim: usize, cfg: &RecoveryConfig) -> Result<Self> {
        cfg.validate()?;
        let sample = UnitSample::draw(family, dim, cfg.sample_size(), cfg.seed)?;
        let schedule = match cfg.solver {
            Solver::RobbinsMonro => Some(RmSchedule::new(cfg, sample.len())),
            _ => None,
        };
        Ok(PsiMap { family, cfg: *cfg, sample, schedule })
    }

    pub fn family(&self) -> EmissionFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.sample.dim()
    }

    pub fn config(&self) -> &RecoveryConfig {
        &self.cfg
    }

    pub fn recover(&self, delta: &[f64]) -> Result<Vec<f64>> {
        match &self.schedule {
            Some(schedule) => {
                check_delta(delta)?;
                if delta.len() != self.dim() {
                    return Err(Error::DimensionMismatch { expected: self.dim(), found: delta.len() });
                }
                Ok(robbins_monro_scheduled(delta, &self.sample, schedule)?.lambda)
            }
            None => Ok(recover_with_sample(delta, &self.sample, &self.cfg)?.lambda),
        }
    }

    /// Keeps the eigenvectors of `V`, replaces its (clipped at zero)
    /// eigenvalues by the recovered ones and floors the result.
    pub fn apply(&self, v: &SymMatrix) -> Result<SymMatrix> {
        Ok(self.apply_checked(v)?.0)
    }

    /// [`apply`](Self::apply), also reporting whether any recovered
    /// eigenvalue fell below the floor.
    pub fn apply_checked(&self, v: &SymMatrix) -> Result<(SymMatrix, bool)> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.dim() });
        }
        let eig = sym_eigen(v)?;
        let delta: Vec<f64> = eig.values.iter().map(|&x| x.max(0.0)).collect();
        let lambda = self.recover(&delta)?;
        let largest = lambda.iter().copied().fold(0.0f64, f64::max);
        let floor = default_floor(largest);
        let hit = lambda.iter().any(|&l| l < floor);
        let floored: Vec<f64> = lambda.iter().map(|&l| l.max(floor)).collect();
        Ok((eig.reconstruct_with(&floored), hit))
    }

    /// Scalar `c` with `apply(c I)` close to the identity.
    pub fn isotropic_preimage_scale(&self) -> Result<f64> {
        let lambda = self.recover(&vec![1.0; self.dim()])?;
        let mean = lambda.iter().sum::<f64>() / lambda.len() as f64;
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::NumericalFailure { iteration: 0, what: "isotropic recovery collapsed" });
        }
        Ok(1.0 / mean)
    }
}

/// `Psi_U(V)`: the covariance rebuilt from an MCM.
pub fn psi_u(v: &SymMatrix, family: EmissionFamily, cfg: &RecoveryConfig) -> Result<SymMatrix> {
    PsiMap::new(family, v.dim(), cfg)?.apply(v)
}

/// Robust location, MCM and rebuilt covariance of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustMoments {
    pub median: Vec<f64>,
    pub mcm: SymMatrix,
    pub sigma: SymMatrix,
}

/// Unweighted geometric median, MCM around it, then `Psi_U` of the MCM.
pub fn robust_covariance(
    points: Points<'_>,
    family: EmissionFamily,
    weiszfeld: &WeiszfeldConfig,
    recovery: &RecoveryConfig,
) -> Result<RobustMoments> {
    let w = vec![1.0; points.len()];
    let median = weiszfeld_median(points, &w, weiszfeld)?;
    let mcm = weiszfeld_mcm(points, &median, &w, weiszfeld)?.mcm;
    let sigma = psi_u(&mcm, family, recovery)?;
    Ok(RobustMoments { median, mcm, sigma })
}
