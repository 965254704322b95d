//! End-to-end learners built from the individual solvers.

use super::nonconvex::{solve_nonconvex, NonconvexInit, NonconvexSolution};
use super::reconstruct::{reconstruct_generators, Reconstruction};
use super::sampled::solve_sampled_convex;
use super::{AlphaSolution, SolverConfig};
use crate::data::{GeneratorSet, PairSet};
use crate::disentangle::{disentangle, DisentangledSet};
use crate::error::Result;

/// Sampled convex weights and the generators read off them (original coordinates).
#[derive(Debug, Clone)]
pub struct ConvexFit {
    pub solution: AlphaSolution,
    pub reconstruction: Reconstruction,
}

/// Convex fit, its gradient refinement and the disentangled result.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub convex: ConvexFit,
    pub refined: NonconvexSolution,
    /// `None` when the refined transforms vanished entirely.
    pub disentangled: Option<DisentangledSet>,
}

impl PipelineResult {
    pub fn generators(&self) -> &GeneratorSet {
        match &self.disentangled {
            Some(d) => &d.generators,
            None => &self.refined.generators,
        }
    }
}

/// Solves the sampled relaxation with `r` atoms and reconstructs `cfg.k` generators.
pub fn learn_convex(pairs: &PairSet, r: usize, cfg: &SolverConfig) -> Result<ConvexFit> {
    let solution = solve_sampled_convex(pairs, r, cfg)?;
    let reconstruction = reconstruct_generators(&solution, pairs, cfg.k, solution.whiten.as_ref())?;
    Ok(ConvexFit {
        solution,
        reconstruction,
    })
}

/// Convex relaxation, then gradient descent on the non-convex objective started there.
pub fn convex_plus_gradient(
    pairs: &PairSet,
    r: usize,
    convex_cfg: &SolverConfig,
    gradient_cfg: &SolverConfig,
) -> Result<PipelineResult> {
    let convex = learn_convex(pairs, r, convex_cfg)?;
    let init = NonconvexInit {
        t: convex.reconstruction.strengths.clone(),
        generators: convex.reconstruction.generators.clone(),
    };
    let refined = solve_nonconvex(pairs, convex_cfg.k, gradient_cfg, Some(&init))?;
    let disentangled = disentangle(&refined.t, &refined.generators).ok();
    Ok(PipelineResult {
        convex,
        refined,
        disentangled,
    })
}
