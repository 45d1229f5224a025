//! Random-walk evolution of the two-species distribution and three
//! independent routes to its steady state.
//!
//! One tick of evolution advances proper time by one Planck time and applies
//! `f ← f − (kappa/substeps)·Δ_Γ f` `substeps` times; the substep count is
//! numerical-stability bookkeeping that preserves the per-tick map. The
//! steady state `Δ_Γ f = 0` can be reached three ways:
//!
//! 1. [`closed_form_steady`] — the separable profile
//!    `f_α(j, n) = γ_α(j)·2ⁿ·base`, where `γ_α` is the reciprocal period-2
//!    zigzag selected by the staggering phase;
//! 2. [`evolve_to_steady`] — explicit relaxation from any start field;
//! 3. [`steady_via_kernel`] — a dense null-space solve, with Dirichlet
//!    ghost data folded into an augmented column when present.
//!
//! Horizontal stencil rows sum to `±2`, so the walk does **not** conserve
//! total mass; no test may assert conservation. Positivity of the field is
//! likewise monitored, never enforced: the evolution is linear and
//! sign-agnostic.

use nalgebra::{DMatrix, RealField};
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplacian::{self, GhostValues, KernelDiagnostics, OperatorMatrix};
use crate::network::{Mode, Network, Site, SpeciesId};
use crate::rng::Lcg64;
use crate::scalar::Scalar;
use crate::tolerances;

/// Real-valued distribution `f_α(v)` over all degrees of freedom, stamped
/// with a proper-time tick (units of one Planck time).
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField<T> {
    /// Values in flat degree-of-freedom order (species-major).
    pub values: Vec<T>,
    /// Proper-time index.
    pub tick: u64,
}

impl<T: Scalar> DistributionField<T> {
    pub fn zeros(dim: usize) -> Self {
        DistributionField {
            values: vec![T::zero(); dim],
            tick: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Max-norm `‖f‖_∞`.
    pub fn max_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |a, v| Float::max(a, Float::abs(*v)))
    }

    /// True when every value is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Value at one degree of freedom.
    pub fn at(&self, network: &Network, site: Site, species: SpeciesId) -> Result<T> {
        Ok(self.values[network.flat_dof(laplacian::DofIndex::new(site, species))?])
    }
}

/// Which species carries the rising zigzag on even-phase sites.
///
/// The horizontal recurrence fixes the two species' profiles only up to a
/// simultaneous double sign: one species doubles exactly where the other
/// halves. `UdUp` is the convention matching this crate's fixed stencil
/// labeling; `UdDown` swaps the species roles, which solves the operator
/// whose parity labeling is shifted by one column. Under this crate's
/// labeling the swapped profile is *not* annihilated, but it induces the
/// identical metric, which is why both orders are provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignOrder {
    UdUp,
    UdDown,
}

/// Zigzag amplitude `γ_α` at a staggering phase: always `1` or `2`, with the
/// two species reciprocal to each other.
pub fn gamma_profile(sign_order: SignOrder, species: SpeciesId, phase: u8) -> i64 {
    let up_on_odd = match (sign_order, species) {
        (SignOrder::UdUp, SpeciesId::UD) => true,
        (SignOrder::UdUp, SpeciesId::DU) => false,
        (SignOrder::UdDown, SpeciesId::UD) => false,
        (SignOrder::UdDown, SpeciesId::DU) => true,
    };
    if (phase % 2 == 1) == up_on_odd {
        2
    } else {
        1
    }
}

/// The separable steady profile `f_α(j, n) = γ_α(phase)·2ⁿ·base`.
///
/// Defined on the rectangular lattice. All values are dyadic multiples of
/// `base`, so with `base = 1` the stencil rows annihilate the profile
/// exactly in floating-point arithmetic.
pub fn closed_form_steady<T: Scalar>(
    network: &Network,
    base: T,
    sign_order: SignOrder,
) -> Result<DistributionField<T>> {
    if network.mode() == Mode::Tree {
        return Err(Error::Unsupported(
            "the closed-form steady state is defined on the rectangular lattice only".into(),
        ));
    }
    if !(base > T::zero()) {
        return Err(Error::Domain(format!(
            "base must be strictly positive, got {base}"
        )));
    }
    let dim = network.dof_count();
    let mut values = Vec::with_capacity(dim);
    for flat in 0..dim {
        let dof = network.dof_at(flat);
        let phase = network.species_phase_at(dof.site)?;
        let gamma = gamma_profile(sign_order, dof.species, phase);
        let eta = 1i64 << dof.site.n;
        values.push(T::from_coeff(gamma * eta) * base);
    }
    Ok(DistributionField { values, tick: 0 })
}

/// Ghost-layer values extending the closed form to `n = −1` (amplitude
/// `base/2`) and `n = depth` (amplitude `base·2^depth`).
///
/// Anchoring the Dirichlet boundary to these values makes the closed form a
/// steady state of the ghost-anchored operator on *every* row, boundary
/// rows included.
pub fn closed_form_ghosts<T: Scalar>(
    network: &Network,
    base: T,
    sign_order: SignOrder,
) -> Result<GhostValues<T>> {
    if network.mode() == Mode::Tree {
        return Err(Error::Unsupported(
            "closed-form ghost layers are defined on the rectangular lattice only".into(),
        ));
    }
    if !(base > T::zero()) {
        return Err(Error::Domain(format!(
            "base must be strictly positive, got {base}"
        )));
    }
    let width = network.layer_width(0);
    let depth = network.depth() as i64;
    let half = T::from_f64(0.5).expect("0.5 is representable");
    let top = T::from_coeff(1i64 << network.depth());
    let mut below = Vec::with_capacity(2 * width);
    let mut above = Vec::with_capacity(2 * width);
    for species in SpeciesId::ALL {
        for j in 0..width {
            let phase = network.phase_raw(j, -1);
            let gamma = T::from_coeff(gamma_profile(sign_order, species, phase));
            below.push(gamma * half * base);
        }
    }
    for species in SpeciesId::ALL {
        for j in 0..width {
            let phase = network.phase_raw(j, depth);
            let gamma = T::from_coeff(gamma_profile(sign_order, species, phase));
            above.push(gamma * top * base);
        }
    }
    GhostValues::new(width, below, above)
}

/// Deterministic random start field: values drawn from [`Lcg64`] in flat
/// degree-of-freedom order, uniform in `[0.5, 1.5)`.
pub fn random_field<T: Scalar>(dim: usize, seed: u64) -> DistributionField<T> {
    let mut rng = Lcg64::new(seed);
    let values = (0..dim)
        .map(|_| T::from_f64(rng.next_positive()).expect("draw is representable"))
        .collect();
    DistributionField { values, tick: 0 }
}

/// Relative residual `‖Δ_Γ f‖_∞ / max(‖f‖_∞, floor)`; the floor guards the
/// zero field, which is reported as residual zero.
pub fn residual<T: Scalar>(
    op: &OperatorMatrix,
    field: &DistributionField<T>,
    ghosts: Option<&GhostValues<T>>,
) -> Result<T> {
    let image = op.apply_slice(&field.values, ghosts)?;
    let norm_f = field.max_norm();
    if norm_f.is_zero() && ghosts.is_none() {
        return Ok(T::zero());
    }
    let num = image
        .iter()
        .fold(T::zero(), |a, v| Float::max(a, Float::abs(*v)));
    let floor = T::from_f64(tolerances::RESIDUAL_FLOOR).unwrap_or_else(T::zero);
    let den = Float::max(norm_f, floor);
    if den.is_zero() {
        // Single-precision floor flushes to zero; a zero field with nonzero
        // ghost load has no meaningful relative residual.
        return Ok(num);
    }
    Ok(num / den)
}

/// Substep count from the Gershgorin stability rule:
/// `ceil(kappa · max_row Σ|coeff| / 1.5)`, at least 1.
pub fn gershgorin_substeps<T: Scalar>(op: &OperatorMatrix, kappa: T) -> u32 {
    let weight = op.max_abs_row_sum();
    let k = kappa.to_f64().unwrap_or(0.0);
    let s = (k * weight / tolerances::GERSHGORIN_STABILITY_LIMIT).ceil();
    if s.is_finite() && s >= 1.0 {
        s as u32
    } else {
        1
    }
}

/// One evolution tick: applies `substeps` explicit updates
/// `f ← f − (kappa/substeps)·Δ_Γ f` and advances the tick by one.
///
/// One tick with `substeps = m` produces bitwise the same values as `m`
/// ticks with coefficient `kappa/m` and one substep each.
pub fn step<T: Scalar>(
    field: &DistributionField<T>,
    op: &OperatorMatrix,
    kappa: T,
    substeps: u32,
    ghosts: Option<&GhostValues<T>>,
) -> Result<DistributionField<T>> {
    if !(kappa > T::zero()) {
        return Err(Error::Domain(format!(
            "kappa must be strictly positive, got {kappa}"
        )));
    }
    if substeps == 0 {
        return Err(Error::Domain("substeps must be at least 1".into()));
    }
    let factor = kappa / T::from_coeff(substeps as i64);
    let mut values = field.values.clone();
    for _ in 0..substeps {
        let image = op.apply_slice(&values, ghosts)?;
        for (v, dv) in values.iter_mut().zip(image) {
            *v = *v - factor * dv;
        }
    }
    Ok(DistributionField {
        values,
        tick: field.tick + 1,
    })
}

/// Convergence record of a relaxation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyReport<T> {
    /// Relative residual after each tick, starting with the initial field.
    pub residual_history: Vec<T>,
    /// Last entry of the history.
    pub final_residual: T,
    /// Ticks actually taken.
    pub iterations: u64,
    /// True when the tolerance was met within the tick budget.
    pub converged: bool,
}

/// Relaxes `field` until the relative residual drops to `tol` or `max_ticks`
/// is exhausted; see [`evolve_to_steady_observed`] for snapshot hooks.
pub fn evolve_to_steady<T: Scalar>(
    field: DistributionField<T>,
    op: &OperatorMatrix,
    ghosts: Option<&GhostValues<T>>,
    kappa: T,
    tol: T,
    max_ticks: u64,
    substeps: u32,
) -> Result<(DistributionField<T>, SteadyReport<T>)> {
    evolve_to_steady_observed(field, op, ghosts, kappa, tol, max_ticks, substeps, |_, _| {})
}

/// [`evolve_to_steady`] with an observer called as `(field, residual)` after
/// every residual evaluation, the initial one included.
///
/// Divergence (residual exceeding ten times its running minimum, or turning
/// non-finite) aborts with an instability error advising more substeps.
#[allow(clippy::too_many_arguments)]
pub fn evolve_to_steady_observed<T: Scalar>(
    field: DistributionField<T>,
    op: &OperatorMatrix,
    ghosts: Option<&GhostValues<T>>,
    kappa: T,
    tol: T,
    max_ticks: u64,
    substeps: u32,
    mut observer: impl FnMut(&DistributionField<T>, T),
) -> Result<(DistributionField<T>, SteadyReport<T>)> {
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!(
            "tolerance must be strictly positive, got {tol}"
        )));
    }
    let mut f = field;
    let r0 = residual(op, &f, ghosts)?;
    observer(&f, r0);
    let mut history = vec![r0];
    let mut min_res = r0;
    if r0 <= tol {
        return Ok((
            f,
            SteadyReport {
                residual_history: history,
                final_residual: r0,
                iterations: 0,
                converged: true,
            },
        ));
    }
    let divergence = T::from_f64(tolerances::DIVERGENCE_FACTOR).expect("factor representable");
    for iteration in 1..=max_ticks {
        f = step(&f, op, kappa, substeps, ghosts)?;
        let r = residual(op, &f, ghosts)?;
        observer(&f, r);
        history.push(r);
        if r <= tol {
            return Ok((
                f,
                SteadyReport {
                    residual_history: history,
                    final_residual: r,
                    iterations: iteration,
                    converged: true,
                },
            ));
        }
        if !r.is_finite() || r > divergence * min_res {
            return Err(Error::Unstable {
                tick: f.tick,
                residual: r.to_f64().unwrap_or(f64::NAN),
                min_residual: min_res.to_f64().unwrap_or(f64::NAN),
            });
        }
        if r < min_res {
            min_res = r;
        }
    }
    let final_residual = *history.last().expect("history is never empty");
    Ok((
        f,
        SteadyReport {
            residual_history: history,
            final_residual,
            iterations: max_ticks,
            converged: false,
        },
    ))
}

/// Relaxation route packaged for front ends: seeds the start field from the
/// documented generator, picks substeps by the Gershgorin rule when not
/// given, and relaxes to tolerance.
pub fn steady_via_relaxation<T: Scalar>(
    op: &OperatorMatrix,
    ghosts: Option<&GhostValues<T>>,
    kappa: T,
    tol: T,
    max_ticks: u64,
    substeps: Option<u32>,
    seed: u64,
) -> Result<(DistributionField<T>, SteadyReport<T>)> {
    let substeps = substeps.unwrap_or_else(|| gershgorin_substeps(op, kappa));
    let start = random_field(op.dimension(), seed);
    evolve_to_steady(start, op, ghosts, kappa, tol, max_ticks, substeps)
}

/// Dense null-space route to the steady state.
///
/// Without ghost rows this returns the most-null vector of the homogeneous
/// operator. With ghost rows the fixed ghost load is folded into an
/// augmented column `[A | load]` (padded square with a zero row) and the
/// steady state is recovered from the null direction with a nonzero
/// inhomogeneous component — the anchored solution of `A·f = −load`.
pub fn steady_via_kernel<T: Scalar + RealField>(
    op: &OperatorMatrix,
    ghosts: Option<&GhostValues<T>>,
    tol: T,
) -> Result<(DistributionField<T>, KernelDiagnostics<T>)> {
    if !op.has_ghost_rows() {
        if ghosts.is_some() {
            return Err(Error::Config(
                "operator has no ghost rows; ghost values must not be provided".into(),
            ));
        }
        let (basis, diagnostics) = laplacian::kernel_basis(op, tol)?;
        let field = basis.into_iter().next().ok_or_else(|| {
            Error::Domain(
                "the operator has a trivial null space; no nonzero steady state exists".into(),
            )
        })?;
        return Ok((field, diagnostics));
    }
    let ghosts = ghosts.ok_or_else(|| {
        Error::Config("operator has Dirichlet ghost rows; ghost values are required".into())
    })?;
    let dim = op.dimension();
    if dim + 1 > tolerances::KERNEL_MAX_DIM {
        return Err(Error::Config(format!(
            "dense factorization is limited to dimension {}, got {}",
            tolerances::KERNEL_MAX_DIM,
            dim + 1
        )));
    }
    let load = op.ghost_load(ghosts)?;
    let mut m = DMatrix::<T>::zeros(dim + 1, dim + 1);
    m.view_mut((0, 0), (dim, dim)).copy_from(&laplacian::to_dense::<T>(op));
    for (i, v) in load.iter().enumerate() {
        m[(i, dim)] = *v;
    }
    let (nulls, diagnostics) = laplacian::null_space(m, tol)?;
    let anchor_floor = T::from_f64(1e-8).expect("floor representable");
    for null in nulls {
        let t = null.values[dim];
        if Float::abs(t) > anchor_floor {
            let values = null.values[..dim].iter().map(|v| *v / t).collect();
            return Ok((DistributionField { values, tick: 0 }, diagnostics));
        }
    }
    Err(Error::Domain(
        "no anchored steady state: every null direction of the augmented system has a \
         vanishing inhomogeneous component"
            .into(),
    ))
}
