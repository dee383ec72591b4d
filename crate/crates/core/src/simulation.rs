//! Mixture sampling and per-cluster contamination.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::index;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SymMatrix};
use crate::recovery::{fill_standardized, EmissionFamily};
use crate::rng::{self, labels};

/// Cluster centers of the three-cluster benchmark design (`p = 5`).
pub const MU: [[f64; 5]; 3] = [[0.0, 0.0, 0.0, 0.0, 0.0], [3.0, 3.0, 3.0, 3.0, -3.0], [-3.0, -3.0, -3.0, -3.0, -3.0]];

pub const SIGMA1: [[f64; 5]; 5] = [
    [2.0, 0.43, 0.41, 0.15, 0.68],
    [0.43, 2.0, 0.7, 0.49, 0.89],
    [0.41, 0.7, 2.0, 0.17, 0.42],
    [0.15, 0.49, 0.17, 2.0, 0.43],
    [0.68, 0.89, 0.42, 0.43, 2.0],
];

pub const SIGMA2: [[f64; 5]; 5] = [
    [1.0, 0.46, 0.17, 0.04, 1.06],
    [0.46, 2.0, 0.61, 0.18, 1.22],
    [0.17, 0.61, 3.0, 0.7, 0.65],
    [0.04, 0.18, 0.7, 4.0, 0.16],
    [1.06, 1.22, 0.65, 0.16, 5.0],
];

pub const SIGMA3: [[f64; 5]; 5] = [
    [1.0, 0.6, 0.11, 0.03, 0.26],
    [0.6, 0.5, 0.09, 0.02, 0.17],
    [0.11, 0.09, 0.33, 0.03, 0.04],
    [0.03, 0.02, 0.03, 0.25, 0.01],
    [0.26, 0.17, 0.04, 0.01, 0.2],
];

/// Covariance of the single-cluster variance-estimation design.
pub const SIGMA0: [[f64; 5]; 5] = [
    [4.0, 0.86, 0.83, 0.29, 1.35],
    [0.86, 4.0, 1.4, 0.97, 1.79],
    [0.83, 1.4, 4.0, 0.35, 0.84],
    [0.29, 0.97, 0.35, 4.0, 0.86],
    [1.35, 1.79, 0.84, 0.86, 4.0],
];

/// Degrees of freedom of the Student clusters in the benchmark design.
pub const DEFAULT_DF: u32 = 3;

/// Half-width of the uniform hypercube contaminant.
pub const UNIFORM_HALF_WIDTH: f64 = 20.0;

pub fn sym5(rows: &[[f64; 5]; 5]) -> SymMatrix {
    let r: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    SymMatrix::from_rows(&r).expect("preset matrices are symmetric")
}

/// Location and covariance of each cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub centers: Vec<Vec<f64>>,
    pub covariances: Vec<SymMatrix>,
}

impl GroundTruth {
    pub fn new(centers: Vec<Vec<f64>>, covariances: Vec<SymMatrix>) -> Result<Self> {
        if centers.is_empty() || centers.len() != covariances.len() {
            return Err(Error::invalid("need one covariance per center"));
        }
        let d = centers[0].len();
        if d == 0 || centers.iter().any(|c| c.len() != d) || covariances.iter().any(|s| s.dim() != d) {
            return Err(Error::invalid("inconsistent cluster dimensions"));
        }
        Ok(GroundTruth { centers, covariances })
    }

    /// The three-cluster benchmark (`mu_1..mu_3`, `Sigma_1..Sigma_3`).
    pub fn paper3() -> Self {
        GroundTruth {
            centers: MU.iter().map(|m| m.to_vec()).collect(),
            covariances: vec![sym5(&SIGMA1), sym5(&SIGMA2), sym5(&SIGMA3)],
        }
    }

    /// One centered cluster with covariance `Sigma_0`.
    pub fn sigma0() -> Self {
        GroundTruth { centers: vec![vec![0.0; 5]], covariances: vec![sym5(&SIGMA0)] }
    }

    /// Given centers, identity covariances.
    pub fn with_identity(centers: Vec<Vec<f64>>) -> Result<Self> {
        let d = centers.first().map(|c| c.len()).unwrap_or(0);
        let cov = vec![SymMatrix::identity(d.max(1)); centers.len()];
        Self::new(centers, cov)
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }
}

/// Contaminating distribution applied inside each cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Scenario {
    /// Uniform on `[-20, 20]^p`.
    A,
    /// Student, null location, identity scale, 1 degree of freedom.
    B,
    /// Student centered at the cluster center, 1 degree of freedom.
    C,
    /// Student, null location, identity scale, 2 degrees of freedom.
    D,
    /// Student centered at the cluster center, 2 degrees of freedom.
    E,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [Scenario::A, Scenario::B, Scenario::C, Scenario::D, Scenario::E];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Scenario::A => "a",
            Scenario::B => "b",
            Scenario::C => "c",
            Scenario::D => "d",
            Scenario::E => "e",
        };
        f.write_str(c)
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a" | "A" => Ok(Scenario::A),
            "b" | "B" => Ok(Scenario::B),
            "c" | "C" => Ok(Scenario::C),
            "d" | "D" => Ok(Scenario::D),
            "e" | "E" => Ok(Scenario::E),
            _ => Err(Error::invalid("scenario must be one of a, b, c, d, e")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    /// Per-cluster contamination rate in `[0, 0.5]`.
    pub delta: f64,
    pub family: EmissionFamily,
    pub nk: Vec<usize>,
    pub truth: GroundTruth,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.delta) {
            return Err(Error::invalid("contamination rate must lie in [0, 0.5]"));
        }
        if self.nk.is_empty() || self.nk.contains(&0) {
            return Err(Error::invalid("every cluster needs at least one observation"));
        }
        if self.nk.len() != self.truth.k() {
            return Err(Error::DimensionMismatch { expected: self.truth.k(), found: self.nk.len() });
        }
        self.family.validate()
    }
}

/// `round(delta * n)` with ties rounded up.
pub fn contaminated_count(delta: f64, n: usize) -> usize {
    let x = delta * n as f64;
    // guard against representation error such as 0.1 * 200 = 20.000000000000004
    libm::floor(x + 0.5 + 1e-9) as usize
}

/// Draws `nk[k]` rows from cluster `k`, clusters in order. Labels are
/// 0-based cluster indices.
pub fn generate_mixture(
    family: EmissionFamily,
    nk: &[usize],
    truth: &GroundTruth,
    seed: u64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    family.validate()?;
    if nk.len() != truth.k() {
        return Err(Error::DimensionMismatch { expected: truth.k(), found: nk.len() });
    }
    let d = truth.dim();
    let total: usize = nk.iter().sum();
    let mut data = Vec::with_capacity(total * d);
    let mut labels_out = Vec::with_capacity(total);
    let mut u = vec![0.0; d];
    let mut x = vec![0.0; d];
    let base = rng::derive_seed(seed, labels::CLUSTER);
    for (k, &n) in nk.iter().enumerate() {
        let chol = Cholesky::new(&truth.covariances[k])?;
        let mut rng = rng::stream(base, k as u64);
        for _ in 0..n {
            fill_standardized(family, &mut rng, &mut u)?;
            chol.mul_lower(&u, &mut x);
            for c in 0..d {
                data.push(truth.centers[k][c] + x[c]);
            }
            labels_out.push(k);
        }
    }
    Ok((data, labels_out))
}

/// Replaces `round(delta * n_k)` uniformly chosen rows of each cluster by
/// draws from the scenario's contaminant. Labels are left unchanged.
pub fn contaminate(
    data: &[f64],
    dim: usize,
    cluster_labels: &[usize],
    centers: &[Vec<f64>],
    scenario: Scenario,
    delta: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<bool>)> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::invalid("contamination rate must lie in [0, 0.5]"));
    }
    if dim == 0 || data.len() != cluster_labels.len() * dim {
        return Err(Error::invalid("data and labels disagree"));
    }
    let mut out = data.to_vec();
    let mut flags = vec![false; cluster_labels.len()];
    if delta == 0.0 {
        return Ok((out, flags));
    }
    let k = centers.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in cluster_labels.iter().enumerate() {
        if l >= k {
            return Err(Error::invalid("label without a matching center"));
        }
        members[l].push(i);
    }
    let base = rng::derive_seed(seed, labels::CONTAMINATE);
    for (cluster, rows) in members.iter().enumerate() {
        let count = contaminated_count(delta, rows.len());
        if count == 0 {
            continue;
        }
        let mut rng = rng::stream(base, cluster as u64);
        let chosen = index::sample(&mut rng, rows.len(), count);
        for pos in chosen.iter() {
            let i = rows[pos];
            flags[i] = true;
            let row = &mut out[i * dim..(i + 1) * dim];
            draw_contaminant(scenario, &centers[cluster], &mut rng, row)?;
        }
    }
    Ok((out, flags))
}

fn draw_contaminant<R: rand::Rng + ?Sized>(
    scenario: Scenario,
    center: &[f64],
    rng: &mut R,
    row: &mut [f64],
) -> Result<()> {
    let (df, located) = match scenario {
        Scenario::A => {
            for v in row.iter_mut() {
                *v = rng.random_range(-UNIFORM_HALF_WIDTH..=UNIFORM_HALF_WIDTH);
            }
            return Ok(());
        }
        Scenario::B => (1.0, false),
        Scenario::C => (1.0, true),
        Scenario::D => (2.0, false),
        Scenario::E => (2.0, true),
    };
    let chi = ChiSquared::new(df).map_err(|_| Error::invalid("bad degrees of freedom"))?;
    let scale = 1.0 / libm::sqrt(chi.sample(rng) / df);
    for (c, v) in row.iter_mut().enumerate() {
        let z: f64 = rng.sample(StandardNormal);
        *v = z * scale + if located { center[c] } else { 0.0 };
    }
    Ok(())
}

/// Generates and contaminates a full dataset.
pub fn simulate(spec: &ScenarioSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let (data, lab) = generate_mixture(spec.family, &spec.nk, &spec.truth, seed)?;
    let d = spec.truth.dim();
    let (data, flags) = contaminate(&data, d, &lab, &spec.truth.centers, spec.scenario, spec.delta, seed)?;
    Dataset::new(data, d)?.with_labels(lab)?.with_outliers(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_ties_up() {
        assert_eq!(contaminated_count(0.1, 200), 20);
        assert_eq!(contaminated_count(0.05, 10), 1);
        assert_eq!(contaminated_count(0.25, 2), 1);
        assert_eq!(contaminated_count(0.16, 500), 80);
        assert_eq!(contaminated_count(0.0, 500), 0);
    }

    #[test]
    fn one_row_per_cluster_labels() {
        let (_, lab) = generate_mixture(EmissionFamily::Gaussian, &[1, 1, 1], &GroundTruth::paper3(), 3).unwrap();
        let mut sorted = lab.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn zero_rate_is_identity() {
        let t = GroundTruth::paper3();
        let (x, lab) = generate_mixture(EmissionFamily::Gaussian, &[20, 20, 20], &t, 1).unwrap();
        let (y, f) = contaminate(&x, 5, &lab, &t.centers, Scenario::A, 0.0, 9).unwrap();
        assert_eq!(x, y);
        assert!(f.iter().all(|&b| !b));
    }

    #[test]
    fn uniform_contaminant_stays_in_cube() {
        let t = GroundTruth::paper3();
        let (x, lab) = generate_mixture(EmissionFamily::Gaussian, &[100, 100, 100], &t, 1).unwrap();
        let (y, f) = contaminate(&x, 5, &lab, &t.centers, Scenario::A, 0.3, 2).unwrap();
        for (i, &flag) in f.iter().enumerate() {
            if flag {
                assert!(y[i * 5..(i + 1) * 5].iter().all(|v| v.abs() <= 20.0));
            } else {
                assert_eq!(&y[i * 5..(i + 1) * 5], &x[i * 5..(i + 1) * 5]);
            }
        }
        for k in 0..3 {
            let c = f.iter().zip(&lab).filter(|(&b, &l)| b && l == k).count();
            assert_eq!(c, 30);
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = ScenarioSpec {
            scenario: Scenario::A,
            delta: 0.6,
            family: EmissionFamily::Gaussian,
            nk: vec![10, 10, 10],
            truth: GroundTruth::paper3(),
        };
        assert!(spec.validate().is_err());
        spec.delta = 0.1;
        spec.nk = vec![10, 0, 10];
        assert!(spec.validate().is_err());
        spec.nk = vec![10, 10];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn scenario_parse_round_trip() {
        for s in Scenario::ALL {
            let text = alloc::format!("{s}");
            assert_eq!(text.parse::<Scenario>().unwrap(), s);
        }
        assert!("f".parse::<Scenario>().is_err());
    }
}
