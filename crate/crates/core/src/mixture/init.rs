use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;

use super::em::m_step_with;
use super::genie::{genie_partition, DEFAULT_GINI_THRESHOLD};
use super::{FitConfig, MixtureParams, Responsibilities};
use crate::data::Points;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::recovery::{EmissionFamily, PsiMap};
use crate::rng::{self, labels};

/// Starting parameters for one EM run.
pub trait Initializer {
    fn initialize(
        &self,
        points: Points<'_>,
        k: usize,
        family: EmissionFamily,
        cfg: &FitConfig,
        psi: &PsiMap,
        seed: u64,
    ) -> Result<MixtureParams>;
}

/// `K` distinct rows as centers, identity covariances, equal proportions.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomInit;

impl Initializer for RandomInit {
    fn initialize(
        &self,
        points: Points<'_>,
        k: usize,
        family: EmissionFamily,
        _cfg: &FitConfig,
        psi: &PsiMap,
        seed: u64,
    ) -> Result<MixtureParams> {
        init_random(points, k, family, psi.isotropic_preimage_scale()?, seed)
    }
}

/// Hard partition from [`genie_partition`](super::genie_partition), turned
/// into parameters by one M-step. Deterministic; the seed is unused.
#[derive(Clone, Copy, Debug)]
pub struct GenieInit {
    pub gini_threshold: f64,
}

impl Default for GenieInit {
    fn default() -> Self {
        GenieInit { gini_threshold: DEFAULT_GINI_THRESHOLD }
    }
}

impl Initializer for GenieInit {
    fn initialize(
        &self,
        points: Points<'_>,
        k: usize,
        family: EmissionFamily,
        cfg: &FitConfig,
        psi: &PsiMap,
        _seed: u64,
    ) -> Result<MixtureParams> {
        let labels = genie_partition(points, k, self.gini_threshold)?;
        let d = points.dim();
        let mut tau = vec![0.0; points.len() * k];
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            tau[i * k + l] = 1.0;
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        // Cluster means only seed the Weiszfeld iterations of the M-step.
        let centers: Vec<Vec<f64>> =
            sums.into_iter().zip(&counts).map(|(s, &c)| s.into_iter().map(|v| v / c as f64).collect()).collect();
        let prev = MixtureParams {
            family,
            proportions: vec![1.0 / k as f64; k],
            centers,
            mcm: vec![SymMatrix::scaled_identity(d, psi.isotropic_preimage_scale()?); k],
            sigma: vec![SymMatrix::identity(d); k],
        };
        let tau = Responsibilities { tau, k, underflow_rows: Vec::new() };
        m_step_with(points, &tau, &prev, cfg, psi)
    }
}

/// Random initialization. `v_scale` is the MCM scale `c` whose rebuilt
/// covariance is the identity (see [`PsiMap::isotropic_preimage_scale`]).
pub fn init_random(
    points: Points<'_>,
    k: usize,
    family: EmissionFamily,
    v_scale: f64,
    seed: u64,
) -> Result<MixtureParams> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if points.len() < k {
        return Err(Error::invalid("fewer rows than components"));
    }
    if !(v_scale > 0.0) || !v_scale.is_finite() {
        return Err(Error::invalid("MCM scale must be positive"));
    }
    let d = points.dim();
    let mut rng = rng::stream(seed, labels::INIT);
    let rows: Vec<usize> = index::sample(&mut rng, points.len(), k).into_vec();
    Ok(MixtureParams {
        family,
        proportions: vec![1.0 / k as f64; k],
        centers: rows.iter().map(|&i| points.row(i).to_vec()).collect(),
        mcm: vec![SymMatrix::scaled_identity(d, v_scale); k],
        sigma: vec![SymMatrix::identity(d); k],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_equals_n_uses_every_row() {
        let data: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let p = Points::new(&data, 1).unwrap();
        let params = init_random(p, 7, EmissionFamily::Gaussian, 0.5, 11).unwrap();
        let mut c: Vec<f64> = params.centers.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, data);
        assert!(init_random(p, 8, EmissionFamily::Gaussian, 0.5, 11).is_err());
    }

    #[test]
    fn deterministic() {
        let data: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let p = Points::new(&data, 2).unwrap();
        let a = init_random(p, 3, EmissionFamily::Gaussian, 0.5, 5).unwrap();
        assert_eq!(a, init_random(p, 3, EmissionFamily::Gaussian, 0.5, 5).unwrap());
    }
}
