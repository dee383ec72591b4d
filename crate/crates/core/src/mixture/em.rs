use alloc::vec;
use alloc::vec::Vec;

use super::criteria::information_criteria;
use super::density::ComponentDensity;
use super::init::{GenieInit, Initializer, RandomInit};
use super::{Diagnostics, FitConfig, FitResult, InitMethod, InnerSolver, Method, MixtureParams, Responsibilities};
use crate::data::Points;
use crate::error::{Error, Result};
use crate::linalg::{self, frobenius_metric, packed_len, SymMatrix};
use crate::recovery::{EmissionFamily, PsiMap, RecoveryConfig};
use crate::rng::{self, labels};
use crate::scatter::{self, centered_outer_products};
use crate::weiszfeld;

fn densities(params: &MixtureParams) -> Result<Vec<ComponentDensity>> {
    params.centers.iter().zip(&params.sigma).map(|(m, s)| ComponentDensity::new(m, s, params.family)).collect()
}

/// `log pi_k + log f_k(x_i)` for every row, plus the row log-normalizers.
fn joint_log(points: Points<'_>, params: &MixtureParams) -> Result<(Vec<f64>, Vec<f64>)> {
    if points.dim() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), found: points.dim() });
    }
    let k = params.k();
    let comps = densities(params)?;
    let log_pi: Vec<f64> = params.proportions.iter().map(|&p| libm::log(p)).collect();
    let mut scratch = vec![0.0; 2 * points.dim()];
    let mut joint = vec![0.0; points.len() * k];
    let mut norm = vec![0.0; points.len()];
    for (i, x) in points.rows().enumerate() {
        let row = &mut joint[i * k..(i + 1) * k];
        let mut top = f64::NEG_INFINITY;
        for j in 0..k {
            row[j] = log_pi[j] + comps[j].ln_pdf(x, &mut scratch);
            if row[j] > top {
                top = row[j];
            }
        }
        norm[i] =
            if top.is_finite() { top + libm::log(row.iter().map(|v| libm::exp(v - top)).sum::<f64>()) } else { top };
    }
    Ok((joint, norm))
}

/// Posterior responsibilities, normalized in log space.
pub fn e_step(points: Points<'_>, params: &MixtureParams) -> Result<Responsibilities> {
    let k = params.k();
    let (mut tau, norm) = joint_log(points, params)?;
    let mut underflow_rows = Vec::new();
    for (i, row) in tau.chunks_exact_mut(k).enumerate() {
        if norm[i].is_finite() {
            row.iter_mut().for_each(|v| *v = libm::exp(*v - norm[i]));
        } else {
            underflow_rows.push(i);
            row.iter_mut().for_each(|v| *v = 1.0 / k as f64);
        }
    }
    Ok(Responsibilities { tau, k, underflow_rows })
}

/// `sum_i log sum_k pi_k f_k(x_i)`.
pub fn log_likelihood(points: Points<'_>, params: &MixtureParams) -> Result<f64> {
    let (_, norm) = joint_log(points, params)?;
    Ok(norm.iter().sum())
}

/// Column means of `tau`, floored at `floor` with the deficit taken
/// proportionally from the unfloored entries.
fn floored_proportions(tau: &Responsibilities, floor: f64) -> Vec<f64> {
    let n = tau.n() as f64;
    let mut pi: Vec<f64> = (0..tau.k).map(|j| tau.column(j).iter().sum::<f64>() / n).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    let mut fixed = vec![false; pi.len()];
    loop {
        let mut changed = false;
        for (p, f) in pi.iter_mut().zip(fixed.iter_mut()) {
            if !*f && *p < floor {
                *p = floor;
                *f = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let fixed_mass = floor * fixed.iter().filter(|&&f| f).count() as f64;
        let free_mass: f64 = pi.iter().zip(&fixed).filter(|(_, &f)| !f).map(|(p, _)| p).sum();
        let scale = (1.0 - fixed_mass) / free_mass;
        pi.iter_mut().zip(&fixed).filter(|(_, &f)| !f).for_each(|(p, _)| *p *= scale);
    }
    pi
}

fn check_responsibilities(points: &Points<'_>, tau: &Responsibilities, prev: &MixtureParams) -> Result<()> {
    if tau.k != prev.k() || tau.tau.len() != points.len() * tau.k {
        return Err(Error::invalid("responsibilities do not match data and parameters"));
    }
    if points.dim() != prev.dim() {
        return Err(Error::DimensionMismatch { expected: prev.dim(), found: points.dim() });
    }
    Ok(())
}

fn effective_weight(w: &[f64], cluster: usize, d: usize) -> Result<()> {
    let weight: f64 = w.iter().sum();
    if !(weight >= (d + 1) as f64) {
        return Err(Error::DegenerateCluster { cluster, weight });
    }
    Ok(())
}

/// Robust M-step. Builds a fresh Monte-Carlo sample for the covariance
/// rebuild; [`m_step_with`] reuses one across iterations.
pub fn m_step(
    points: Points<'_>,
    tau: &Responsibilities,
    prev: &MixtureParams,
    cfg: &FitConfig,
) -> Result<MixtureParams> {
    let psi = psi_map(prev.family, points.dim(), cfg)?;
    m_step_with(points, tau, prev, cfg, &psi)
}

/// The covariance rebuild map [`fit`] uses for `cfg`: its Monte-Carlo sample
/// is seeded from `cfg.seed`.
pub fn psi_map(family: EmissionFamily, d: usize, cfg: &FitConfig) -> Result<PsiMap> {
    let rc = RecoveryConfig { seed: rng::derive_seed(cfg.seed, labels::UNIT_SAMPLE), ..cfg.recovery };
    PsiMap::new(family, d, &rc)
}

/// M-step with a given covariance rebuild map. Centers come from the
/// weighted median, scatter from the weighted MCM around the new center.
/// Weiszfeld iterations are warm-started at the previous estimates.
pub fn m_step_with(
    points: Points<'_>,
    tau: &Responsibilities,
    prev: &MixtureParams,
    cfg: &FitConfig,
    psi: &PsiMap,
) -> Result<MixtureParams> {
    check_responsibilities(&points, tau, prev)?;
    let d = points.dim();
    let proportions = floored_proportions(tau, cfg.pi_floor);
    let mut centers = Vec::with_capacity(tau.k);
    let mut mcm = Vec::with_capacity(tau.k);
    let mut sigma = Vec::with_capacity(tau.k);
    for k in 0..tau.k {
        let w = tau.column(k);
        effective_weight(&w, k, d)?;
        let (m, v, s) = match cfg.method {
            Method::Naive => {
                let (m, s) = scatter::weighted_mean_covariance(points, &w)?;
                (m, s.clone(), s)
            }
            Method::Robust => {
                let (m, v) = robust_location_scatter(points, &w, &prev.centers[k], &prev.mcm[k], cfg)?;
                let (s, floored) = psi.apply_checked(&v)?;
                if floored {
                    return Err(Error::DegenerateCluster { cluster: k, weight: w.iter().sum() });
                }
                (m, v, s)
            }
        };
        centers.push(m);
        mcm.push(v);
        sigma.push(s);
    }
    Ok(MixtureParams { family: prev.family, proportions, centers, mcm, sigma })
}

fn robust_location_scatter(
    points: Points<'_>,
    w: &[f64],
    prev_m: &[f64],
    prev_v: &SymMatrix,
    cfg: &FitConfig,
) -> Result<(Vec<f64>, SymMatrix)> {
    let d = points.dim();
    match cfg.inner {
        InnerSolver::Weiszfeld => {
            let m = weiszfeld::run(points.as_slice(), d, None, w, &cfg.location, Some(prev_m), &mut |_, _| {}).estimate;
            let items = centered_outer_products(points, &m);
            let metric = frobenius_metric(d);
            let v = weiszfeld::run(
                &items,
                packed_len(d),
                Some(&metric),
                w,
                &cfg.scatter,
                Some(prev_v.packed()),
                &mut |_, _| {},
            )
            .estimate;
            Ok((m, SymMatrix::from_packed(d, v)?))
        }
        InnerSolver::Asgd => {
            let init_v = linalg::psd_project_default(prev_v)?;
            let (m, est) = scatter::asgd_median_mcm(points, w, &cfg.asgd, prev_m, &init_v)?;
            Ok((m, est.mcm))
        }
    }
}

/// One E-step followed by one M-step.
pub fn em_sweep(points: Points<'_>, params: &MixtureParams, cfg: &FitConfig, psi: &PsiMap) -> Result<MixtureParams> {
    let tau = e_step(points, params)?;
    m_step_with(points, &tau, params, cfg, psi)
}

/// EM iterations from `init` until the relative log-likelihood change drops
/// below `cfg.loglik_tol` and the parameters move by less than
/// `cfg.param_tol`. With one component a single M-step is done.
pub fn fit_from(points: Points<'_>, init: MixtureParams, cfg: &FitConfig, psi: &PsiMap) -> Result<FitResult> {
    init.validate()?;
    let mut params = init;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut n_iter = 0;
    while n_iter < cfg.max_outer_iter {
        n_iter += 1;
        let next = em_sweep(points, &params, cfg, psi)?;
        let change = params.relative_change(&next);
        params = next;
        let ll = log_likelihood(points, &params)?;
        if !ll.is_finite() {
            return Err(Error::NumericalFailure { iteration: n_iter, what: "log-likelihood is not finite" });
        }
        let prev = trace.last().copied();
        trace.push(ll);
        if params.k() == 1 {
            converged = true;
            break;
        }
        if let Some(p) = prev {
            if (ll - p).abs() / ll.abs().max(1.0) < cfg.loglik_tol && change < cfg.param_tol {
                converged = true;
                break;
            }
        }
    }
    let tau = e_step(points, &params)?;
    let loglik = *trace.last().unwrap_or(&f64::NAN);
    let (bic, icl) = information_criteria(loglik, &tau, points.dim());
    let diagnostics = Diagnostics {
        underflow_rows: tau.underflow_rows.clone(),
        small_sample: points.len() < params.k() * (points.dim() + 1),
        ..Default::default()
    };
    Ok(FitResult { params, tau, loglik, loglik_trace: trace, converged, n_iter, bic, icl, diagnostics })
}

/// Fits a `k`-component mixture. With random initialization this is the
/// best of `cfg.restarts` runs by final log-likelihood, degenerate runs being
/// discarded; if all are, the fit fails. Genie initialization runs once.
pub fn fit(points: Points<'_>, k: usize, family: EmissionFamily, cfg: &FitConfig) -> Result<FitResult> {
    match cfg.init {
        InitMethod::Random => fit_with_init(points, k, family, cfg, cfg.restarts, &RandomInit),
        InitMethod::Genie => fit_with_init(points, k, family, cfg, 1, &GenieInit::default()),
    }
}

/// Best of `runs` fits started by `initializer`, run `r` getting a seed
/// derived from `cfg.seed` and `r`.
pub fn fit_with_init(
    points: Points<'_>,
    k: usize,
    family: EmissionFamily,
    cfg: &FitConfig,
    runs: usize,
    initializer: &(dyn Initializer + Sync),
) -> Result<FitResult> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    cfg.validate(k)?;
    family.validate()?;
    if points.len() < k {
        return Err(Error::invalid("fewer rows than components"));
    }
    points.check_finite()?;
    let psi = psi_map(family, points.dim(), cfg)?;
    let base = rng::derive_seed(cfg.seed, labels::RESTART);
    let run = |r: usize| -> Result<FitResult> {
        let init = initializer.initialize(points, k, family, cfg, &psi, rng::derive_seed(base, r as u64))?;
        fit_from(points, init, cfg, &psi)
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<FitResult>> = {
        use rayon::prelude::*;
        (0..runs).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<FitResult>> = (0..runs).map(run).collect();

    let restart_logliks: Vec<Option<f64>> = outcomes.iter().map(|o| o.as_ref().ok().map(|f| f.loglik)).collect();
    let mut best: Option<(usize, FitResult)> = None;
    let mut last_err = None;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(f) => {
                if best.as_ref().is_none_or(|(_, b)| f.loglik > b.loglik) {
                    best = Some((r, f));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((r, mut f)) => {
            f.diagnostics.restart_logliks = restart_logliks;
            f.diagnostics.chosen_restart = r;
            Ok(f)
        }
        None => Err(Error::FitFailure(alloc::format!(
            "all {runs} runs failed for K = {k}; last error: {}",
            last_err.map_or_else(|| alloc::string::String::from("none"), |e| alloc::format!("{e}"))
        ))),
    }
}
