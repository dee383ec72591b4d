use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::em::fit;
use super::{FitConfig, FitResult, Responsibilities};
use crate::data::Points;
use crate::error::{Error, Result};
use crate::recovery::EmissionFamily;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Criterion {
    Bic,
    Icl,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Bic => "bic",
            Criterion::Icl => "icl",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bic" => Ok(Criterion::Bic),
            "icl" => Ok(Criterion::Icl),
            _ => Err(Error::invalid("criterion must be bic or icl")),
        }
    }
}

/// Free parameters of a `K`-component full-covariance mixture in dimension `d`.
pub fn parameter_count(k: usize, d: usize) -> usize {
    (k - 1) + k * d + k * d * (d + 1) / 2
}

/// `(BIC, ICL)` with `BIC = L - log(n) D_K / 2` and
/// `ICL = BIC + sum_ik tau_ik log tau_ik` (`0 log 0 = 0`).
pub fn information_criteria(loglik: f64, tau: &Responsibilities, d: usize) -> (f64, f64) {
    let n = tau.n();
    let dk = parameter_count(tau.k, d) as f64;
    let bic = loglik - libm::log(n as f64) * dk / 2.0;
    let entropy: f64 = tau.tau.iter().filter(|&&t| t > 0.0).map(|&t| t * libm::log(t)).sum();
    (bic, bic + entropy)
}

impl FitResult {
    pub fn criterion(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Bic => self.bic,
            Criterion::Icl => self.icl,
        }
    }
}

/// Outcome of a sweep over candidate `K`.
#[derive(Clone, Debug)]
pub struct Selection {
    pub best_k: usize,
    /// One entry per candidate, in the order given.
    pub fits: Vec<(usize, Result<FitResult>)>,
}

impl Selection {
    pub fn best(&self) -> &FitResult {
        self.fits
            .iter()
            .find_map(|(k, f)| if *k == self.best_k { f.as_ref().ok() } else { None })
            .expect("best K has a successful fit")
    }
}

/// Fits every `K` in `ks` and keeps the one maximizing `criterion`; ties go to
/// the smaller `K`. Failed fits are kept in the result.
pub fn select_k(
    points: Points<'_>,
    ks: &[usize],
    criterion: Criterion,
    family: EmissionFamily,
    cfg: &FitConfig,
) -> Result<Selection> {
    if ks.is_empty() {
        return Err(Error::invalid("empty range of K"));
    }

    #[cfg(feature = "parallel")]
    let fits: Vec<(usize, Result<FitResult>)> = {
        use rayon::prelude::*;
        ks.par_iter().map(|&k| (k, fit(points, k, family, cfg))).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let fits: Vec<(usize, Result<FitResult>)> = ks.iter().map(|&k| (k, fit(points, k, family, cfg))).collect();

    let mut best: Option<(usize, f64)> = None;
    for (k, f) in &fits {
        if let Ok(f) = f {
            let score = f.criterion(criterion);
            let better = match best {
                None => true,
                Some((bk, bs)) => score > bs || (score == bs && *k < bk),
            };
            if better {
                best = Some((*k, score));
            }
        }
    }
    match best {
        Some((best_k, _)) => Ok(Selection { best_k, fits }),
        None => Err(Error::FitFailure(alloc::format!("every candidate K failed ({} tried)", ks.len()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn parameter_count_example() {
        assert_eq!(parameter_count(3, 5), 62);
        assert_eq!(parameter_count(1, 1), 2);
    }

    #[test]
    fn hard_assignments_have_no_entropy() {
        let tau = Responsibilities { tau: vec![1.0, 0.0, 0.0, 1.0], k: 2, underflow_rows: vec![] };
        let (bic, icl) = information_criteria(-10.0, &tau, 1);
        assert_eq!(bic, icl);
        assert!((bic - (-10.0 - libm::log(2.0) * 5.0 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn uniform_assignments_entropy() {
        let tau = Responsibilities { tau: vec![0.5; 20], k: 2, underflow_rows: vec![] };
        let (bic, icl) = information_criteria(-3.0, &tau, 2);
        assert!((icl - (bic - 10.0 * libm::log(2.0))).abs() < 1e-12);
    }

    #[test]
    fn criterion_parse() {
        assert_eq!("BIC".parse::<Criterion>().unwrap(), Criterion::Bic);
        assert_eq!("icl".parse::<Criterion>().unwrap(), Criterion::Icl);
        assert!("aic".parse::<Criterion>().is_err());
    }
}
