//! Brute-force search for equilateral sets at desk scale, independent of the
//! constructions: random-restart coordinate descent on
//! `Σ_{i<j} (‖x_i − x_j‖ − 1)²`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::PointSet;
use crate::error::{Error, Result};
use crate::norms::{Norm, NormSpec};
use crate::sampling::rng_for;
use crate::verify::{self, EquilateralCertificate};

/// Searches are limited to `n·m ≤ MAX_UNKNOWNS`.
pub const MAX_UNKNOWNS: usize = 64;
pub const DEFAULT_RESIDUAL_THRESHOLD: f64 = 1e-16;
/// Oracle outputs are certified at this looser tolerance.
pub const ORACLE_TOL: f64 = 1e-7;
const RESTART_BATCH: usize = 64;
const MIN_STEP: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub norm: NormSpec,
    pub m: usize,
    pub restarts: usize,
    /// Maximum coordinate sweeps per restart.
    pub max_iterations: usize,
    pub residual_threshold: f64,
}

impl SearchConfig {
    pub fn new(norm: NormSpec, m: usize) -> Self {
        SearchConfig { norm, m, restarts: 64, max_iterations: 20_000, residual_threshold: DEFAULT_RESIDUAL_THRESHOLD }
    }

    fn validate(&self) -> Result<()> {
        self.norm.validate()?;
        if self.m < 2 {
            return Err(Error::Parameter(format!("m must be >= 2, got {}", self.m)));
        }
        if self.restarts < 1 {
            return Err(Error::Parameter("restarts must be >= 1".into()));
        }
        if self.norm.dim * self.m > MAX_UNKNOWNS {
            return Err(Error::Scale(format!("n·m = {} exceeds {MAX_UNKNOWNS}", self.norm.dim * self.m)));
        }
        if self.norm.hyperplane().is_some() {
            return Err(Error::Capability("the oracle searches all of R^n; hyperplane norms are not supported".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub found: bool,
    /// `not-found` is never a nonexistence proof.
    pub inconclusive: bool,
    pub best_residual: f64,
    pub best_restart: usize,
    pub restarts_run: usize,
    pub set: Option<PointSet>,
    pub certificate: Option<EquilateralCertificate>,
}

fn objective(norm: &NormSpec, pts: &[Vec<f64>], buf: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            for (b, (x, y)) in buf.iter_mut().zip(pts[i].iter().zip(&pts[j])) {
                *b = x - y;
            }
            let d = norm.eval(buf) - 1.0;
            total += d * d;
        }
    }
    total
}

/// Coordinate descent with a shrinking step; the first point stays at its
/// initial position. Returns the final residual.
fn descend(norm: &NormSpec, pts: &mut [Vec<f64>], max_sweeps: usize, threshold: f64, initial_step: f64) -> f64 {
    let n = norm.dim;
    let mut buf = vec![0.0; n];
    let mut f = objective(norm, pts, &mut buf);
    let mut step = initial_step;
    for _ in 0..max_sweeps {
        if f < threshold || step < MIN_STEP {
            break;
        }
        let mut improved = false;
        for p in 1..pts.len() {
            for c in 0..n {
                for dir in [1.0, -1.0] {
                    let old = pts[p][c];
                    pts[p][c] = old + dir * step;
                    let g = objective(norm, pts, &mut buf);
                    if g < f {
                        f = g;
                        improved = true;
                        break;
                    }
                    pts[p][c] = old;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    f
}

fn finish(cfg: &SearchConfig, pts: Vec<Vec<f64>>, residual: f64, restart: usize, runs: usize) -> Result<SearchOutcome> {
    let found = residual < cfg.residual_threshold;
    let (set, certificate) = if found {
        let set = PointSet { points: pts, claimed_distance: 1.0 };
        let cert = verify::certify_equilateral(&set, &cfg.norm, ORACLE_TOL)?;
        (Some(set), Some(cert))
    } else {
        (None, None)
    };
    Ok(SearchOutcome {
        found,
        inconclusive: !found,
        best_residual: residual,
        best_restart: restart,
        restarts_run: runs,
        set,
        certificate,
    })
}

/// Random-restart search for `m` points at mutual distance 1.
///
/// Restarts run in parallel batches with per-restart seeds; the lowest-index
/// successful restart (or the best residual) is reported, so the outcome does
/// not depend on the thread count.
pub fn search_equilateral(cfg: &SearchConfig, seed: u64) -> Result<SearchOutcome> {
    cfg.validate()?;
    let n = cfg.norm.dim;
    let mut best: Option<(f64, usize, Vec<Vec<f64>>)> = None;
    let mut runs = 0;
    while runs < cfg.restarts {
        let batch = (cfg.restarts - runs).min(RESTART_BATCH);
        let results: Vec<(f64, usize, Vec<Vec<f64>>)> = (runs..runs + batch)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_for(seed, r as u64);
                let mut pts: Vec<Vec<f64>> =
                    (0..cfg.m).map(|_| (0..n).map(|_| rng.random_range(-0.7..0.7)).collect()).collect();
                let f = descend(&cfg.norm, &mut pts, cfg.max_iterations, cfg.residual_threshold, 0.25);
                (f, r, pts)
            })
            .collect();
        runs += batch;
        for res in results {
            if best.as_ref().is_none_or(|b| res.0 < b.0) {
                best = Some(res);
            }
        }
        if best.as_ref().is_some_and(|b| b.0 < cfg.residual_threshold) {
            break;
        }
    }
    let (f, r, pts) = best.expect("at least one restart ran");
    finish(cfg, pts, f, r, runs)
}

/// Local search started from a given set, rescaled to unit distance and
/// translated so the first point is the origin. A set that is already
/// equilateral is returned after zero sweeps.
pub fn refine_from(cfg: &SearchConfig, start: &PointSet) -> Result<SearchOutcome> {
    cfg.validate()?;
    if start.len() != cfg.m {
        return Err(Error::Parameter(format!("warm start has {} points, expected {}", start.len(), cfg.m)));
    }
    for p in &start.points {
        cfg.norm.check_point(p)?;
    }
    let s = 1.0 / start.claimed_distance;
    let origin = &start.points[0];
    let mut pts: Vec<Vec<f64>> =
        start.points.iter().map(|p| p.iter().zip(origin).map(|(x, o)| (x - o) * s).collect()).collect();
    let f = descend(&cfg.norm, &mut pts, cfg.max_iterations, cfg.residual_threshold, 1e-3);
    finish(cfg, pts, f, 0, 0)
}

/// Residual of a set after the same normalization as [`refine_from`], with no
/// descent.
pub fn residual_of(norm: &NormSpec, start: &PointSet) -> f64 {
    let s = 1.0 / start.claimed_distance;
    let pts: Vec<Vec<f64>> = start.points.iter().map(|p| p.iter().map(|x| x * s).collect()).collect();
    let mut buf = vec![0.0; norm.dim];
    objective(norm, &pts, &mut buf)
}
