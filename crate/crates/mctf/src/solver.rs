//! The block-update completion solver.
//!
//! One outer iteration runs the block updates in the order Z, X, G, J, Y,
//! multipliers:
//!
//! - `Z_n`: singular value thresholding of `X_n + GammaX_n / rho_n` at
//!   `tau_n / rho_n` (weighted log thresholding for the log variant),
//! - `X_n`: ridge-regularized least squares pulling the mode-n factor
//!   toward the averaged splitting anchor `(Z_n - GammaX_n/rho_n + X_n)/2`,
//! - `G_n`: the same structure for the mode-n core, anchored at
//!   `(J_n - GammaG_n/rho_n + G_n)/2`,
//! - `J_n`: per-Fourier-slice thresholding of `G_n + GammaG_n / rho_n` at
//!   `lambda_n / rho_n` along mode n,
//! - `Y`: unobserved entries become the alpha-weighted blend
//!   `sum_n alpha_n * (G_n x_n X_n + rho_n * Y) / (1 + rho_n)`; observed
//!   entries are pinned to the data,
//! - multipliers: `GammaX_n += X_n - Z_n`, `GammaG_n += G_n - J_n`.
//!
//! Each penalty `rho_n` serves as both the splitting penalty and the
//! proximal weight; it grows by `rho_growth` per outer iteration up to
//! `mu_max`, which gradually freezes the iterates and lets the
//! relative-change stopping rule fire.

use crate::data::ObservationMask;
use crate::prox::{
    log_norm, log_svt, log_tnn_prox, nuclear_norm, svt, thin_svd, tnn_prox, tubal_log_norm,
    tubal_nuclear_norm,
};
use crate::tensor::{fold, fro_norm, mode_n_product, unfold, Matrix, Tensor3};
use crate::{Error, Result};
use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

/// Penalty variant: the convex model uses nuclear norms, the log model the
/// nonconvex `sum log(sigma + eps)` relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "mctf")]
    Convex,
    #[serde(rename = "ncmctf")]
    Log,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Convex => "mctf",
            Variant::Log => "ncmctf",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mctf" => Ok(Variant::Convex),
            "ncmctf" => Ok(Variant::Log),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant {other:?}, expected \"mctf\" or \"ncmctf\""
            ))),
        }
    }
}

/// How the solver state is seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Per-mode truncated SVDs of the zero-filled observation. The all-zero
    /// start is a fixed point of the block updates, so this is the default.
    TruncatedSvd,
    /// The literal all-zero start; kept selectable for reference.
    Zero,
}

/// Default per-iteration growth of the penalties. Growing as fast as 1.5
/// freezes the blend step long before the stopping rule can engage, so the
/// default anneals gently; the growth factor stays configurable.
pub const RHO_GROWTH_DEFAULT: f64 = 1.02;
pub const MU_MAX_DEFAULT: f64 = 1e6;
pub const LOG_EPS_DEFAULT: f64 = 1e-3;
pub const STOP_TOL_DEFAULT: f64 = 1e-5;
pub const MAX_ITER_DEFAULT: usize = 500;
/// Default initial penalty. The multiplier steps are divided by `rho` in
/// the anchors, so values below ~0.5 over-amplify the dual ascent and the
/// early iterates blow up.
pub const RHO_DEFAULT: f64 = 0.5;
/// Default tubal-norm weight on the cores.
pub const LAMBDA_DEFAULT: f64 = 1e-2;
/// Default ratio `tau_n / lambda_n` between the factor-matrix and core
/// penalty weights.
pub const C_RATIO_DEFAULT: f64 = 1.0;

/// All solver hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    pub ranks: [usize; 3],
    /// Mode weights, non-negative, summing to one.
    pub alpha: [f64; 3],
    /// Nuclear/log-norm weights on the factor matrices.
    pub tau: [f64; 3],
    /// Tubal-norm weights on the cores.
    pub lambda: [f64; 3],
    /// Initial splitting/proximal penalties, one per mode.
    pub rho: [f64; 3],
    /// Per-iteration growth factor of the penalties.
    pub rho_growth: f64,
    /// Cap on the penalties.
    pub mu_max: f64,
    /// `eps` inside the log norm.
    pub log_eps: f64,
    /// Relative-change stopping threshold on Y.
    pub stop_tol: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl SolverConfig {
    /// Defaults for a given rank vector and variant: uniform mode weights,
    /// `lambda_n = LAMBDA_DEFAULT`, `tau_n = C_RATIO_DEFAULT * lambda_n`.
    pub fn new(variant: Variant, ranks: [usize; 3]) -> Self {
        SolverConfig {
            variant,
            ranks,
            alpha: [1.0 / 3.0; 3],
            tau: [C_RATIO_DEFAULT * LAMBDA_DEFAULT; 3],
            lambda: [LAMBDA_DEFAULT; 3],
            rho: [RHO_DEFAULT; 3],
            rho_growth: RHO_GROWTH_DEFAULT,
            mu_max: MU_MAX_DEFAULT,
            log_eps: LOG_EPS_DEFAULT,
            stop_tol: STOP_TOL_DEFAULT,
            max_iter: MAX_ITER_DEFAULT,
            init: Init::TruncatedSvd,
        }
    }

    pub fn validate(&self, shape: (usize, usize, usize)) -> Result<()> {
        let dims = [shape.0, shape.1, shape.2];
        let others = [shape.1 * shape.2, shape.0 * shape.2, shape.0 * shape.1];
        for n in 0..3 {
            if self.ranks[n] == 0 || self.ranks[n] > dims[n].min(others[n]) {
                return Err(Error::InvalidArgument(format!(
                    "rank {} invalid for mode {} of a {shape:?} tensor",
                    self.ranks[n],
                    n + 1
                )));
            }
            if self.alpha[n] < 0.0 || !self.alpha[n].is_finite() {
                return Err(Error::InvalidArgument("alpha must be non-negative".into()));
            }
            if self.tau[n] < 0.0 || self.lambda[n] < 0.0 {
                return Err(Error::InvalidArgument(
                    "penalty weights must be non-negative".into(),
                ));
            }
            if !(self.rho[n] > 0.0) {
                return Err(Error::InvalidArgument("rho must be positive".into()));
            }
        }
        let asum: f64 = self.alpha.iter().sum();
        if (asum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "alpha must sum to one, got {asum}"
            )));
        }
        if self.rho_growth < 1.0 {
            return Err(Error::InvalidArgument("rho_growth must be >= 1".into()));
        }
        if !(self.mu_max > 0.0) {
            return Err(Error::InvalidArgument("mu_max must be positive".into()));
        }
        if self.variant == Variant::Log && !(self.log_eps > 0.0) {
            return Err(Error::InvalidArgument("log_eps must be positive".into()));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::InvalidArgument("stop_tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// A factorization `sum_n alpha_n * (G_n x_n X_n)`.
#[derive(Debug, Clone)]
pub struct MctfFactors {
    pub x: [Matrix; 3],
    pub g: [Tensor3; 3],
    pub alpha: [f64; 3],
}

impl MctfFactors {
    /// Evaluates the weighted sum of the per-mode factorizations.
    pub fn compose(&self) -> Result<Tensor3> {
        let mut out: Option<Tensor3> = None;
        for n in 0..3 {
            if self.alpha[n] == 0.0 {
                continue;
            }
            let term = mode_n_product(&self.g[n], &self.x[n], n + 1)?;
            out = Some(match out {
                None => term.scale(self.alpha[n]),
                Some(acc) => acc.add_scaled(self.alpha[n], &term)?,
            });
        }
        out.ok_or_else(|| Error::InvalidArgument("all mode weights are zero".into()))
    }
}

/// All iterates of the solver.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: [Matrix; 3],
    pub z: [Matrix; 3],
    pub g: [Tensor3; 3],
    pub j: [Tensor3; 3],
    pub gamma_x: [Matrix; 3],
    pub gamma_g: [Tensor3; 3],
    pub y: Tensor3,
    /// Current per-mode penalties (grown each outer iteration).
    pub rho: [f64; 3],
    pub iter: usize,
}

/// Outcome of [`solve`].
#[derive(Debug, Clone)]
pub struct CompletionResult {
    pub y_hat: Tensor3,
    pub factors: MctfFactors,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub rel_change_trace: Vec<f64>,
}

/// Shape of the mode-`mode` core for a given data shape and rank (that
/// mode's dimension is replaced by the rank).
pub fn core_shape(shape: (usize, usize, usize), mode: usize, rank: usize) -> (usize, usize, usize) {
    match mode {
        1 => (rank, shape.1, shape.2),
        2 => (shape.0, rank, shape.2),
        _ => (shape.0, shape.1, rank),
    }
}

/// Builds the initial state from the zero-filled observation.
pub fn init_state(
    observed: &Tensor3,
    mask: &ObservationMask,
    config: &SolverConfig,
) -> Result<SolverState> {
    if observed.shape() != mask.shape() {
        return Err(Error::ShapeMismatch(format!(
            "observation {:?} vs mask {:?}",
            observed.shape(),
            mask.shape()
        )));
    }
    config.validate(observed.shape())?;
    let shape = observed.shape();
    let dims = [shape.0, shape.1, shape.2];

    let mut x: Vec<Matrix> = Vec::with_capacity(3);
    let mut g: Vec<Tensor3> = Vec::with_capacity(3);
    for n in 0..3 {
        let r = config.ranks[n];
        let (xn, gn) = match config.init {
            Init::Zero => (
                Matrix::zeros(dims[n], r),
                Tensor3::zeros(core_shape(shape, n + 1, r)),
            ),
            Init::TruncatedSvd => {
                let unf = unfold(observed, n + 1)?;
                if unf.norm() == 0.0 {
                    (
                        Matrix::zeros(dims[n], r),
                        Tensor3::zeros(core_shape(shape, n + 1, r)),
                    )
                } else {
                    let svd = thin_svd(&unf);
                    let xn = Matrix::from_fn(dims[n], r, |i, c| svd.u[(i, c)]);
                    let gn = mode_n_product(observed, &xn.transpose(), n + 1)?;
                    (xn, gn)
                }
            }
        };
        x.push(xn);
        g.push(gn);
    }

    let x: [Matrix; 3] = [x[0].clone(), x[1].clone(), x[2].clone()];
    let g: [Tensor3; 3] = [g[0].clone(), g[1].clone(), g[2].clone()];
    Ok(SolverState {
        z: x.clone(),
        gamma_x: [
            Matrix::zeros(dims[0], config.ranks[0]),
            Matrix::zeros(dims[1], config.ranks[1]),
            Matrix::zeros(dims[2], config.ranks[2]),
        ],
        gamma_g: [
            Tensor3::zeros(core_shape(shape, 1, config.ranks[0])),
            Tensor3::zeros(core_shape(shape, 2, config.ranks[1])),
            Tensor3::zeros(core_shape(shape, 3, config.ranks[2])),
        ],
        j: g.clone(),
        x,
        g,
        y: observed.clone(),
        rho: config.rho,
        iter: 0,
    })
}

/// Z block: thresholded pull of the factor matrices toward `X + GammaX/rho`.
///
/// A zero weight passes the pull target through unchanged.
pub fn update_z(state: &mut SolverState, config: &SolverConfig) -> Result<()> {
    for n in 0..3 {
        let rho = state.rho[n];
        let target = &state.x[n] + &state.gamma_x[n] / rho;
        let threshold = config.tau[n] / rho;
        state.z[n] = if threshold == 0.0 {
            target
        } else {
            match config.variant {
                Variant::Convex => svt(&target, threshold)?,
                Variant::Log => log_svt(&target, threshold, config.log_eps)?,
            }
        };
    }
    Ok(())
}

/// Solves the regularized normal equations. The system is positive definite
/// by construction, so a Cholesky failure means an iterate overflowed.
fn spd_solve(lhs: Matrix, rhs: Matrix, block: &'static str) -> Result<Matrix> {
    let chol = Cholesky::new(lhs).ok_or(Error::Divergence { block })?;
    Ok(chol.solve(&rhs))
}

/// X block: ridge least squares against the mode-n unfolding of Y with a
/// proximal pull toward the averaged anchor.
pub fn update_x(state: &mut SolverState, config: &SolverConfig) -> Result<()> {
    for n in 0..3 {
        let rho = state.rho[n];
        let alpha = config.alpha[n];
        let r = config.ranks[n];
        let anchor = (&state.z[n] - &state.gamma_x[n] / rho + &state.x[n]) / 2.0;
        let g_unf = unfold(&state.g[n], n + 1)?;
        let y_unf = unfold(&state.y, n + 1)?;
        // (alpha G G^T + 2 rho I) X^T = alpha G Y_(n)^T + 2 rho anchor^T
        let lhs = alpha * (&g_unf * g_unf.transpose()) + 2.0 * rho * Matrix::identity(r, r);
        let rhs = alpha * (&g_unf * y_unf.transpose()) + 2.0 * rho * anchor.transpose();
        state.x[n] = spd_solve(lhs, rhs, "X")?.transpose();
    }
    Ok(())
}

/// G block: ridge least squares for the cores with a proximal pull toward
/// `(J - GammaG/rho + G)/2`.
pub fn update_g(state: &mut SolverState, config: &SolverConfig) -> Result<()> {
    for n in 0..3 {
        let rho = state.rho[n];
        let alpha = config.alpha[n];
        let r = config.ranks[n];
        let anchor = state.j[n]
            .add_scaled(-1.0 / rho, &state.gamma_g[n])?
            .add_scaled(1.0, &state.g[n])?
            .scale(0.5);
        let x = &state.x[n];
        let y_unf = unfold(&state.y, n + 1)?;
        let anchor_unf = unfold(&anchor, n + 1)?;
        // (alpha X^T X + 2 rho I) G_(n) = alpha X^T Y_(n) + 2 rho anchor_(n)
        let lhs = alpha * (x.transpose() * x) + 2.0 * rho * Matrix::identity(r, r);
        let rhs = alpha * (x.transpose() * y_unf) + 2.0 * rho * anchor_unf;
        let g_unf = spd_solve(lhs, rhs, "G")?;
        state.g[n] = fold(&g_unf, n + 1, core_shape(state.y.shape(), n + 1, r))?;
    }
    Ok(())
}

/// J block: per-Fourier-slice thresholding of `G + GammaG/rho` along each
/// mode, at `lambda_n / rho_n`.
pub fn update_j(state: &mut SolverState, config: &SolverConfig) -> Result<()> {
    for n in 0..3 {
        let rho = state.rho[n];
        let target = state.g[n].add_scaled(1.0 / rho, &state.gamma_g[n])?;
        let threshold = config.lambda[n] / rho;
        state.j[n] = if threshold == 0.0 {
            target
        } else {
            match config.variant {
                Variant::Convex => tnn_prox(&target, n + 1, threshold)?,
                Variant::Log => log_tnn_prox(&target, n + 1, threshold, config.log_eps)?,
            }
        };
    }
    Ok(())
}

/// Y block: blends the per-mode reconstructions into the unobserved entries
/// and pins the observed ones to the data.
pub fn update_y(
    state: &mut SolverState,
    mask: &ObservationMask,
    observed: &Tensor3,
    config: &SolverConfig,
) -> Result<()> {
    let shape = state.y.shape();
    let mut blend = Tensor3::zeros(shape);
    for n in 0..3 {
        let alpha = config.alpha[n];
        if alpha == 0.0 {
            continue;
        }
        let rho = state.rho[n];
        let recon = mode_n_product(&state.g[n], &state.x[n], n + 1)?;
        blend = blend.add_scaled(alpha / (1.0 + rho), &recon)?;
        blend = blend.add_scaled(alpha * rho / (1.0 + rho), &state.y)?;
    }
    for &off in mask.indices() {
        blend.data_mut()[off as usize] = observed.data()[off as usize];
    }
    state.y = blend;
    Ok(())
}

/// Scaled-form multiplier updates.
pub fn update_multipliers(state: &mut SolverState) {
    for n in 0..3 {
        state.gamma_x[n] = &state.gamma_x[n] + &state.x[n] - &state.z[n];
        state.gamma_g[n] = state.gamma_g[n]
            .add_scaled(1.0, &state.g[n])
            .and_then(|t| t.add_scaled(-1.0, &state.j[n]))
            .expect("multiplier shapes are fixed at init");
    }
}

/// Objective value at the current state: per-mode data fit plus the nuclear
/// (or log) norms of the factor matrices and the transform-domain tubal
/// norms of the cores, the latter averaged over Fourier slices.
pub fn objective(state: &SolverState, config: &SolverConfig) -> Result<f64> {
    let mut total = 0.0;
    for n in 0..3 {
        let recon = mode_n_product(&state.g[n], &state.x[n], n + 1)?;
        let resid = fro_norm(&state.y.add_scaled(-1.0, &recon)?);
        total += 0.5 * config.alpha[n] * resid * resid;
        match config.variant {
            Variant::Convex => {
                total += config.tau[n] * nuclear_norm(&state.x[n]);
                total += config.lambda[n] * tubal_nuclear_norm(&state.g[n], n + 1)?;
            }
            Variant::Log => {
                total += config.tau[n] * log_norm(&state.x[n], config.log_eps);
                total += config.lambda[n] * tubal_log_norm(&state.g[n], n + 1, config.log_eps)?;
            }
        }
    }
    Ok(total)
}

fn check_finite_matrices(ms: &[Matrix; 3], block: &'static str) -> Result<()> {
    for m in ms {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { block });
        }
    }
    Ok(())
}

fn check_finite_tensors(ts: &[Tensor3; 3], block: &'static str) -> Result<()> {
    for t in ts {
        if !t.is_finite() {
            return Err(Error::Divergence { block });
        }
    }
    Ok(())
}

/// Runs the completion loop until the relative change of Y drops below
/// `stop_tol` or `max_iter` is reached.
pub fn solve(
    observed: &Tensor3,
    mask: &ObservationMask,
    config: &SolverConfig,
) -> Result<CompletionResult> {
    if mask.is_empty() {
        return Err(Error::InvalidArgument(
            "observation mask is empty; nothing to complete".into(),
        ));
    }
    let mut state = init_state(observed, mask, config)?;
    let mut objective_trace = Vec::new();
    let mut rel_change_trace = Vec::new();
    let mut converged = false;

    for k in 1..=config.max_iter {
        let y_prev = state.y.clone();
        let y_prev_norm = fro_norm(&y_prev);

        update_z(&mut state, config)?;
        check_finite_matrices(&state.z, "Z")?;
        update_x(&mut state, config)?;
        check_finite_matrices(&state.x, "X")?;
        update_g(&mut state, config)?;
        check_finite_tensors(&state.g, "G")?;
        update_j(&mut state, config)?;
        check_finite_tensors(&state.j, "J")?;
        update_y(&mut state, mask, observed, config)?;
        if !state.y.is_finite() {
            return Err(Error::Divergence { block: "Y" });
        }
        update_multipliers(&mut state);
        check_finite_matrices(&state.gamma_x, "multipliers")?;
        check_finite_tensors(&state.gamma_g, "multipliers")?;

        state.iter = k;
        for n in 0..3 {
            state.rho[n] = (state.rho[n] * config.rho_growth).min(config.mu_max);
        }

        let diff = fro_norm(&state.y.add_scaled(-1.0, &y_prev)?);
        let rel_change = if y_prev_norm > 0.0 {
            diff / y_prev_norm
        } else {
            diff
        };
        objective_trace.push(objective(&state, config)?);
        rel_change_trace.push(rel_change);

        if rel_change < config.stop_tol {
            converged = true;
            break;
        }
    }

    let iterations = state.iter;
    Ok(CompletionResult {
        y_hat: state.y.clone(),
        factors: MctfFactors {
            x: state.x.clone(),
            g: state.g.clone(),
            alpha: config.alpha,
        },
        iterations,
        converged,
        objective_trace,
        rel_change_trace,
    })
}

/// Per-iteration floating-point cost model, with the column count of each
/// unfolding taken as `s_n = prod_{j != n} I_j` and `I_4 = I_1`.
pub fn flop_estimate(shape: (usize, usize, usize), ranks: [usize; 3]) -> f64 {
    let d = [shape.0 as f64, shape.1 as f64, shape.2 as f64];
    let total: f64 = d[0] * d[1] * d[2];
    let mut cost = 0.0;
    for n in 0..3 {
        let s_n = total / d[n];
        let r = ranks[n] as f64;
        cost += d[n] * r * r + d[n] * r * s_n + r * r * s_n;
    }
    let mut min_sum = 0.0;
    for n in 0..3 {
        min_sum += d[n].min(d[(n + 1) % 3]);
    }
    cost + total * (total.ln() + min_sum)
}
