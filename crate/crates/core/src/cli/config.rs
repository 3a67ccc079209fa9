//! Flat run configuration shared by the batch subcommands.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::field::Grid;
use crate::minimizer::SolverConfig;
use crate::sweep::SweepSetup;

/// One flat table: grid, solver and subcommand-specific keys. Keys a
/// subcommand does not use are ignored by it; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub half_length: f64,
    pub nx: usize,
    pub ell: f64,
    pub ny: usize,

    pub step: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub constraint_tol: f64,
    pub residual_tol: f64,
    pub backtrack_factor: f64,
    pub memory: usize,

    /// Target momentum for `minimize` and `critical-length`.
    pub p: f64,
    /// `planar` or `perturbed`.
    pub seed: String,
    /// Perturbation amplitude; absolute for `minimize`, relative to the
    /// soliton depth in sweeps.
    pub amplitude: f64,
    pub mode: usize,
    pub seeds: usize,

    /// Explicit sweep momenta; when empty, `k pi / p_grid` for
    /// `k = 1 .. p_grid - 1`.
    pub p_values: Vec<f64>,
    pub p_grid: usize,
    /// Momenta for the small-p check in `verify`.
    pub p_small: Vec<f64>,
    pub tol_1d: f64,

    pub ell_lo: f64,
    pub ell_hi: f64,
    pub resolution: f64,
    /// Relative transverse-energy threshold of the planar indicator.
    pub w_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            half_length: 20.0,
            nx: 512,
            ell: 1.0,
            ny: 8,
            step: s.step,
            max_iters: s.max_iters,
            grad_tol: s.grad_tol,
            constraint_tol: s.constraint_tol,
            residual_tol: s.residual_tol,
            backtrack_factor: s.backtrack_factor,
            memory: s.memory,
            p: PI / 2.0,
            seed: "perturbed".into(),
            amplitude: 0.05,
            mode: 1,
            seeds: 2,
            p_values: Vec::new(),
            p_grid: 8,
            p_small: vec![0.2, 0.1, 0.05],
            tol_1d: 1e-3,
            ell_lo: 6.0,
            ell_hi: 12.0,
            resolution: 0.25,
            w_tol: 1e-6,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.grid().context("grid keys (half_length, nx, ell, ny)")?;
        self.solver().validate().context("solver keys")?;
        if self.seed != "planar" && self.seed != "perturbed" {
            bail!("seed: expected \"planar\" or \"perturbed\", got {:?}", self.seed);
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            bail!("amplitude: must be nonnegative, got {}", self.amplitude);
        }
        if self.mode == 0 {
            bail!("mode: must be at least 1");
        }
        if self.seeds < 2 {
            bail!("seeds: need at least 2 (planar + perturbed), got {}", self.seeds);
        }
        if !self.p.is_finite() {
            bail!("p: must be finite");
        }
        if let Some(bad) = self.p_values.iter().find(|p| !(**p > 0.0 && **p < PI)) {
            bail!("p_values: {bad} is outside (0, pi)");
        }
        if self.p_values.is_empty() && self.p_grid < 2 {
            bail!("p_grid: must be at least 2, got {}", self.p_grid);
        }
        if let Some(bad) = self.p_small.iter().find(|p| !(**p > 0.0 && **p < PI)) {
            bail!("p_small: {bad} is outside (0, pi)");
        }
        if !(self.ell_lo > 0.0 && self.ell_lo < self.ell_hi) {
            bail!(
                "ell_lo, ell_hi: need 0 < ell_lo < ell_hi, got {} and {}",
                self.ell_lo,
                self.ell_hi
            );
        }
        if !(self.resolution > 0.0) {
            bail!("resolution: must be positive, got {}", self.resolution);
        }
        if !(self.w_tol >= 0.0) || !(self.tol_1d >= 0.0) {
            bail!("w_tol, tol_1d: must be nonnegative");
        }
        Ok(())
    }

    pub fn grid(&self) -> crate::Result<Grid> {
        Grid::new(self.half_length, self.nx, self.ell, self.ny)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            step: self.step,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            constraint_tol: self.constraint_tol,
            residual_tol: self.residual_tol,
            backtrack_factor: self.backtrack_factor,
            memory: self.memory,
        }
    }

    pub fn sweep_setup(&self, jobs: usize) -> crate::Result<SweepSetup> {
        let mut s = SweepSetup::new(self.grid()?, self.solver());
        s.amplitude = self.amplitude;
        s.seeds = self.seeds;
        s.jobs = jobs;
        Ok(s)
    }

    pub fn momenta(&self) -> Vec<f64> {
        if self.p_values.is_empty() {
            (1..self.p_grid).map(|k| k as f64 * PI / self.p_grid as f64).collect()
        } else {
            self.p_values.clone()
        }
    }
}
