//! The species-staggered graph Laplacian.
//!
//! The operator is defined by its stencil rows, stored as exact small
//! integers with a per-row positive divisor:
//!
//! * radial part (every site): `−2·f(j, n+1) + 6·f(j, n) − 4·f(j, n−1)`;
//! * horizontal part, *sharp* rows (species `↑↓` on phase 0 and `↓↑` on
//!   phase 1): `−f(j−1, n) + 4·f(j, n) − f(j+1, n)`;
//! * horizontal part, *flat* rows (the other species/phase pairings):
//!   `−2·f(j−1, n) + 2·f(j, n) − 2·f(j+1, n)`.
//!
//! Sharp rows sum to `+2`, flat rows to `−2`, and the radial part to `0`;
//! the operator therefore does not conserve total mass and no test may claim
//! it does.
//!
//! An incidence-based construction (vertex and edge operators composed and
//! normalized per row by the incident edge multiplicity `n_α(v)`) is
//! provided as a cross-check. Because that composition always produces
//! zero-sum rows, horizontal rows can never be reconciled with it; the
//! [`reconcile`] report records which rows differ instead of forcing
//! agreement.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, RealField};
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dynamics::DistributionField;
use crate::error::{Error, Result};
use crate::network::{HorizontalBc, Mode, Network, RadialBc, Site, SpeciesId};
use crate::scalar::{Coeff, Scalar};
use crate::tolerances;

/// One degree of freedom: a site together with a species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DofIndex {
    pub site: Site,
    pub species: SpeciesId,
}

impl DofIndex {
    pub fn new(site: Site, species: SpeciesId) -> DofIndex {
        DofIndex { site, species }
    }
}

impl Network {
    /// Dense index of a degree of freedom: species-major, then layer-major.
    /// Bijective with `0..dof_count()`.
    pub fn flat_dof(&self, dof: DofIndex) -> Result<usize> {
        Ok(dof.species.index() * self.site_count() + self.site_index(dof.site)?)
    }

    /// Inverse of [`Network::flat_dof`].
    pub fn dof_at(&self, flat: usize) -> DofIndex {
        assert!(flat < self.dof_count(), "dof index out of range");
        let sites = self.site_count();
        let (species, site_index) = if flat < sites {
            (SpeciesId::UD, flat)
        } else {
            (SpeciesId::DU, flat - sites)
        };
        DofIndex::new(self.site_at(site_index), species)
    }
}

/// Reference to a Dirichlet ghost value outside the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GhostRef {
    /// Ghost layer at `n = −1`, below the boundary layer.
    Below { j: usize, species: SpeciesId },
    /// Ghost layer at `n = depth`, above the deepest layer.
    Above { j: usize, species: SpeciesId },
}

/// Fixed ghost-layer values substituted at apply time (rectangular mode).
#[derive(Debug, Clone, PartialEq)]
pub struct GhostValues<T> {
    width: usize,
    /// Values on the `n = −1` layer, species-major (`↑↓` block first).
    below: Vec<T>,
    /// Values on the `n = depth` layer, species-major.
    above: Vec<T>,
}

impl<T: Scalar> GhostValues<T> {
    pub fn new(width: usize, below: Vec<T>, above: Vec<T>) -> Result<Self> {
        if below.len() != 2 * width || above.len() != 2 * width {
            return Err(Error::Dimension(format!(
                "ghost layers must hold 2*width = {} values each, got below {} / above {}",
                2 * width,
                below.len(),
                above.len()
            )));
        }
        Ok(GhostValues {
            width,
            below,
            above,
        })
    }

    /// Zero ghost data (homogeneous Dirichlet boundary).
    pub fn zeros(width: usize) -> Self {
        GhostValues {
            width,
            below: vec![T::zero(); 2 * width],
            above: vec![T::zero(); 2 * width],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Value referenced by a ghost row entry.
    pub fn get(&self, r: GhostRef) -> Result<T> {
        let (j, species, layer) = match r {
            GhostRef::Below { j, species } => (j, species, &self.below),
            GhostRef::Above { j, species } => (j, species, &self.above),
        };
        if j >= self.width {
            return Err(Error::Dimension(format!(
                "ghost column j={j} out of range for width {}",
                self.width
            )));
        }
        Ok(layer[species.index() * self.width + j])
    }
}

/// One sparse row: integer coefficients over in-range columns plus ghost
/// references, all divided by a positive integer divisor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorRow {
    /// `(flat column, coefficient)`, sorted by column, no duplicates, no
    /// zero coefficients.
    pub entries: Vec<(usize, i64)>,
    /// Ghost couplings, sorted, no duplicates, no zero coefficients.
    pub ghosts: Vec<(GhostRef, i64)>,
    /// Positive divisor applied to the whole row.
    pub divisor: i64,
}

impl OperatorRow {
    /// Coefficient on an in-range column, if present (before division).
    pub fn coefficient(&self, col: usize) -> Option<i64> {
        self.entries
            .binary_search_by_key(&col, |(c, _)| *c)
            .ok()
            .map(|k| self.entries[k].1)
    }

    /// Sum of normalized coefficients, ghost couplings included.
    pub fn sum(&self) -> f64 {
        let s: i64 = self.entries.iter().map(|(_, c)| *c).sum::<i64>()
            + self.ghosts.iter().map(|(_, c)| *c).sum::<i64>();
        s as f64 / self.divisor as f64
    }

    /// Sum of absolute normalized coefficients (Gershgorin row weight).
    pub fn abs_sum(&self) -> f64 {
        let s: i64 = self.entries.iter().map(|(_, c)| c.abs()).sum::<i64>()
            + self.ghosts.iter().map(|(_, c)| c.abs()).sum::<i64>();
        s as f64 / self.divisor as f64
    }

    /// Number of referenced columns, ghost references included.
    pub fn support(&self) -> usize {
        self.entries.len() + self.ghosts.len()
    }
}

#[derive(Default)]
struct RowBuilder {
    cols: BTreeMap<usize, i64>,
    ghosts: BTreeMap<GhostRef, i64>,
}

impl RowBuilder {
    fn add(&mut self, col: usize, c: i64) {
        *self.cols.entry(col).or_insert(0) += c;
    }

    fn add_ghost(&mut self, r: GhostRef, c: i64) {
        *self.ghosts.entry(r).or_insert(0) += c;
    }

    fn finish(self, divisor: i64) -> OperatorRow {
        debug_assert!(divisor > 0);
        OperatorRow {
            entries: self.cols.into_iter().filter(|(_, c)| *c != 0).collect(),
            ghosts: self.ghosts.into_iter().filter(|(_, c)| *c != 0).collect(),
            divisor,
        }
    }
}

/// Sparse linear operator over `(site, species)` degrees of freedom.
///
/// Immutable after assembly; rows never mix species.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    rows: Vec<OperatorRow>,
}

impl OperatorMatrix {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[OperatorRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &OperatorRow {
        &self.rows[i]
    }

    /// True when any row references a Dirichlet ghost value.
    pub fn has_ghost_rows(&self) -> bool {
        self.rows.iter().any(|r| !r.ghosts.is_empty())
    }

    /// Largest Gershgorin row weight `Σ|coeff|` over all rows.
    pub fn max_abs_row_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.abs_sum()).fold(0.0, f64::max)
    }

    /// Matrix–vector product on a raw value slice.
    pub fn apply_slice<T: Scalar>(
        &self,
        values: &[T],
        ghosts: Option<&GhostValues<T>>,
    ) -> Result<Vec<T>> {
        if values.len() != self.dim {
            return Err(Error::Dimension(format!(
                "field has {} values but the operator dimension is {}",
                values.len(),
                self.dim
            )));
        }
        match (self.has_ghost_rows(), ghosts.is_some()) {
            (true, false) => {
                return Err(Error::Config(
                    "operator has Dirichlet ghost rows; ghost values are required".into(),
                ))
            }
            (false, true) => {
                return Err(Error::Config(
                    "operator has no ghost rows; ghost values must not be provided".into(),
                ))
            }
            _ => {}
        }
        let mut out = Vec::with_capacity(self.dim);
        for row in &self.rows {
            let mut acc = T::zero();
            for (col, c) in &row.entries {
                acc = acc + T::from_coeff(*c) * values[*col];
            }
            if let Some(g) = ghosts {
                for (r, c) in &row.ghosts {
                    acc = acc + T::from_coeff(*c) * g.get(*r)?;
                }
            }
            if row.divisor != 1 {
                acc = acc / T::from_coeff(row.divisor);
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Constant vector contributed by the ghost couplings: entry `i` is the
    /// ghost part of row `i` applied to the given ghost values. The full
    /// operator action is `apply = A·f + ghost_load`.
    pub fn ghost_load<T: Scalar>(&self, ghosts: &GhostValues<T>) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.dim);
        for row in &self.rows {
            let mut acc = T::zero();
            for (r, c) in &row.ghosts {
                acc = acc + T::from_coeff(*c) * ghosts.get(*r)?;
            }
            if row.divisor != 1 {
                acc = acc / T::from_coeff(row.divisor);
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Plain-text triplet export `row col coeff` (normalized coefficients),
    /// row-major, columns ascending. Ghost couplings are outside the square
    /// index range and are listed as comments.
    pub fn to_triplets(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "# dimension {}", self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for (col, c) in &row.entries {
                let _ = writeln!(s, "{} {} {}", i, col, *c as f64 / row.divisor as f64);
            }
            for (r, c) in &row.ghosts {
                let _ = writeln!(s, "# ghost {} {:?} {}", i, r, *c as f64 / row.divisor as f64);
            }
        }
        s
    }
}

/// Radial stencil row value `−2·η(n+1) + 6·η(n) − 4·η(n−1)`.
///
/// Generic over [`Coeff`], so the annihilation of the doubling profile
/// `η(n) = 2ⁿ` can be asserted in exact integer arithmetic.
pub fn radial_stencil<T: Coeff>(eta_prev: T, eta_here: T, eta_next: T) -> T {
    T::from_coeff(-2) * eta_next + T::from_coeff(6) * eta_here + T::from_coeff(-4) * eta_prev
}

/// `(prev, here, next)` integer coefficients of the radial row.
pub fn radial_coefficients() -> (i64, i64, i64) {
    (-4, 6, -2)
}

/// True when the horizontal row at `(species, phase)` is the *sharp* one
/// `(−1, +4, −1)`; the partner pairing gets the *flat* row `(−2, +2, −2)`.
pub fn sharp_row(species: SpeciesId, phase: u8) -> bool {
    (species == SpeciesId::UD) == phase.is_multiple_of(2)
}

/// `(left, here, right)` integer coefficients of the horizontal row.
pub fn horizontal_coefficients(species: SpeciesId, phase: u8) -> (i64, i64, i64) {
    if sharp_row(species, phase) {
        (-1, 4, -1)
    } else {
        (-2, 2, -2)
    }
}

/// Horizontal stencil row value for one species at one staggering phase.
pub fn horizontal_stencil<T: Coeff>(
    species: SpeciesId,
    phase: u8,
    g_left: T,
    g_here: T,
    g_right: T,
) -> T {
    let (cl, cc, cr) = horizontal_coefficients(species, phase);
    T::from_coeff(cl) * g_left + T::from_coeff(cc) * g_here + T::from_coeff(cr) * g_right
}

/// Assembles the full staggered graph Laplacian from the stencil rows.
///
/// Every row is the sum of the radial part and the horizontal part selected
/// by the site's staggering phase. Boundary rows follow the configured
/// policies: `dirichlet_ghost` rows reference ghost layers substituted at
/// apply time, `truncated` rows drop out-of-range terms, and the horizontal
/// `dirichlet` policy drops out-of-range horizontal terms. In tree mode the
/// radial down-coupling `−4` splits into `−2` on each of the two children.
pub fn assemble_operator(network: &Network) -> Result<OperatorMatrix> {
    let dim = network.dof_count();
    let sites = network.site_count();
    let config = network.config();
    let mut rows = Vec::with_capacity(dim);
    for flat in 0..dim {
        let dof = network.dof_at(flat);
        let Site { j, n } = dof.site;
        let width = network.layer_width(n);
        let block = dof.species.index() * sites;
        let mut row = RowBuilder::default();

        let phase = network.species_phase_at(dof.site)?;
        let (cl, cc, cr) = horizontal_coefficients(dof.species, phase);
        row.add(flat, cc);
        match config.horizontal_bc {
            HorizontalBc::Periodic => {
                let left = (j + width - 1) % width;
                let right = (j + 1) % width;
                row.add(block + network.site_index(Site::new(left, n))?, cl);
                row.add(block + network.site_index(Site::new(right, n))?, cr);
            }
            HorizontalBc::Dirichlet => {
                if j > 0 {
                    row.add(block + network.site_index(Site::new(j - 1, n))?, cl);
                }
                if j + 1 < width {
                    row.add(block + network.site_index(Site::new(j + 1, n))?, cr);
                }
            }
        }

        let (c_prev, c_here, c_next) = radial_coefficients();
        row.add(flat, c_here);
        match config.mode {
            Mode::Rectangular => {
                if n + 1 < config.depth {
                    row.add(block + network.site_index(Site::new(j, n + 1))?, c_next);
                } else if config.radial_bc == RadialBc::DirichletGhost {
                    row.add_ghost(
                        GhostRef::Above {
                            j,
                            species: dof.species,
                        },
                        c_next,
                    );
                }
                if n > 0 {
                    row.add(block + network.site_index(Site::new(j, n - 1))?, c_prev);
                } else if config.radial_bc == RadialBc::DirichletGhost {
                    row.add_ghost(
                        GhostRef::Below {
                            j,
                            species: dof.species,
                        },
                        c_prev,
                    );
                }
            }
            Mode::Tree => {
                // Tree mode is truncated-only (enforced at validation).
                if n + 1 < config.depth {
                    row.add(block + network.site_index(Site::new(j / 2, n + 1))?, c_next);
                }
                if n > 0 {
                    // The −4 down-coupling splits evenly over both children.
                    row.add(
                        block + network.site_index(Site::new(2 * j, n - 1))?,
                        c_prev / 2,
                    );
                    row.add(
                        block + network.site_index(Site::new(2 * j + 1, n - 1))?,
                        c_prev / 2,
                    );
                }
            }
        }

        rows.push(row.finish(1));
    }
    Ok(OperatorMatrix { dim, rows })
}

/// Assembles the horizontal part alone on a single periodic layer of the
/// given width (staggering phase `j mod 2`), over both species.
///
/// This is the operator whose dense null space resolves the sign ambiguity
/// of the horizontal recurrence: the reciprocal period-2 zigzag pair lies in
/// the kernel, the monotonic exponential does not.
pub fn assemble_horizontal_layer(width: usize) -> Result<OperatorMatrix> {
    if !width.is_multiple_of(2) || width < 4 {
        return Err(Error::Config(format!(
            "single-layer operator needs an even width of at least 4, got {width}"
        )));
    }
    let dim = 2 * width;
    let mut rows = Vec::with_capacity(dim);
    for flat in 0..dim {
        let (species, j) = if flat < width {
            (SpeciesId::UD, flat)
        } else {
            (SpeciesId::DU, flat - width)
        };
        let block = species.index() * width;
        let (cl, cc, cr) = horizontal_coefficients(species, (j % 2) as u8);
        let mut row = RowBuilder::default();
        row.add(block + (j + width - 1) % width, cl);
        row.add(block + j, cc);
        row.add(block + (j + 1) % width, cr);
        rows.push(row.finish(1));
    }
    Ok(OperatorMatrix { dim, rows })
}

/// Applies the operator to a distribution field (exact sparse product).
pub fn apply<T: Scalar>(
    op: &OperatorMatrix,
    field: &DistributionField<T>,
    ghosts: Option<&GhostValues<T>>,
) -> Result<DistributionField<T>> {
    Ok(DistributionField {
        values: op.apply_slice(&field.values, ghosts)?,
        tick: field.tick,
    })
}

/// Fictitiously directed edge between two degrees of freedom of the same
/// species, with a positive integer multiplicity.
///
/// The orientation is bookkeeping only: the assembled operator must not
/// depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrientedEdge {
    pub tail: DofIndex,
    pub head: DofIndex,
    /// Parallel-edge multiplicity (exact integer weight).
    pub weight: i64,
}

impl OrientedEdge {
    /// The same edge with its fictitious direction reversed.
    pub fn flipped(self) -> OrientedEdge {
        OrientedEdge {
            tail: self.head,
            head: self.tail,
            weight: self.weight,
        }
    }
}

/// Per-species oriented-edge multiplicities for the incidence construction.
///
/// The horizontal stencils fix only ratios, so the edge multiset behind them
/// is not unique; this is the documented choice shipped with the crate, and
/// [`reconcile`] reports rather than hides any disagreement with the
/// stencil-assembled operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeMultisetSpec {
    /// Parallel edges per radial link (two strands of a spin pair).
    pub radial_pairs: i64,
    /// In rectangular mode, weight the link between layers `n` and `n+1` by
    /// `2^(depth−2−n)`, doubling toward the boundary; this is what makes the
    /// radial-only rows proportional to `(−4, +6, −2)`. Tree mode encodes
    /// the same halving through its two-children geometry and ignores this
    /// flag.
    pub radial_boundary_doubling: bool,
    /// Horizontal multiplicity per species (`[↑↓, ↓↑]`); `0` removes the
    /// species' horizontal edges.
    pub horizontal: [i64; 2],
}

impl Default for EdgeMultisetSpec {
    fn default() -> Self {
        EdgeMultisetSpec {
            radial_pairs: 2,
            radial_boundary_doubling: true,
            horizontal: [1, 1],
        }
    }
}

impl EdgeMultisetSpec {
    /// Radial edges only; used to check the radial row pattern in isolation.
    pub fn radial_only() -> Self {
        EdgeMultisetSpec {
            horizontal: [0, 0],
            ..EdgeMultisetSpec::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.radial_pairs < 0 || self.horizontal.iter().any(|m| *m < 0) {
            return Err(Error::Config(
                "edge multiplicities must be non-negative".into(),
            ));
        }
        if self.radial_pairs == 0 && self.horizontal.iter().all(|m| *m == 0) {
            return Err(Error::Config(
                "edge multiset is empty: all multiplicities are zero".into(),
            ));
        }
        Ok(())
    }
}

/// Enumerates the oriented edge multiset of a network under an
/// [`EdgeMultisetSpec`], in a canonical deterministic orientation (lower
/// layer / lower column first).
pub fn oriented_edges(network: &Network, spec: &EdgeMultisetSpec) -> Result<Vec<OrientedEdge>> {
    spec.validate()?;
    let config = network.config();
    let mut edges = Vec::new();
    for species in SpeciesId::ALL {
        let horizontal_weight = spec.horizontal[species.index()];
        if horizontal_weight > 0 {
            for n in 0..config.depth {
                let width = network.layer_width(n);
                let last = match config.horizontal_bc {
                    HorizontalBc::Periodic => width,
                    HorizontalBc::Dirichlet => width - 1,
                };
                for j in 0..last {
                    edges.push(OrientedEdge {
                        tail: DofIndex::new(Site::new(j, n), species),
                        head: DofIndex::new(Site::new((j + 1) % width, n), species),
                        weight: horizontal_weight,
                    });
                }
            }
        }
        if spec.radial_pairs > 0 {
            for n in 0..config.depth - 1 {
                let link_weight = match config.mode {
                    Mode::Rectangular if spec.radial_boundary_doubling => {
                        spec.radial_pairs << (config.depth - 2 - n)
                    }
                    _ => spec.radial_pairs,
                };
                match config.mode {
                    Mode::Rectangular => {
                        for j in 0..network.layer_width(n) {
                            edges.push(OrientedEdge {
                                tail: DofIndex::new(Site::new(j, n), species),
                                head: DofIndex::new(Site::new(j, n + 1), species),
                                weight: link_weight,
                            });
                        }
                    }
                    Mode::Tree => {
                        for j in 0..network.layer_width(n) {
                            edges.push(OrientedEdge {
                                tail: DofIndex::new(Site::new(j, n), species),
                                head: DofIndex::new(Site::new(j / 2, n + 1), species),
                                weight: link_weight,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(edges)
}

/// Incidence-based assembly with the canonical orientation of
/// [`oriented_edges`].
pub fn incidence_assemble(network: &Network, spec: &EdgeMultisetSpec) -> Result<OperatorMatrix> {
    let edges = oriented_edges(network, spec)?;
    incidence_assemble_oriented(network, &edges)
}

/// Incidence-based assembly from an explicit oriented edge multiset.
///
/// Composes the edge-difference operator with its vertex-side adjoint and
/// divides each row by `n_α(v)`, the total multiplicity of species-`α` edges
/// incident to `v`. The result is independent of every edge's fictitious
/// orientation because each edge contributes the same symmetric block either
/// way.
pub fn incidence_assemble_oriented(
    network: &Network,
    edges: &[OrientedEdge],
) -> Result<OperatorMatrix> {
    let dim = network.dof_count();
    let mut builders: Vec<RowBuilder> = (0..dim).map(|_| RowBuilder::default()).collect();
    let mut incident: Vec<i64> = vec![0; dim];
    for edge in edges {
        if edge.tail.species != edge.head.species {
            return Err(Error::Config(
                "edges must connect degrees of freedom of one species".into(),
            ));
        }
        if edge.weight <= 0 {
            return Err(Error::Config(format!(
                "edge weights must be positive, got {}",
                edge.weight
            )));
        }
        let t = network.flat_dof(edge.tail)?;
        let h = network.flat_dof(edge.head)?;
        if t == h {
            return Err(Error::Config(format!(
                "self-loop at j={}, n={} is not a valid edge",
                edge.tail.site.j, edge.tail.site.n
            )));
        }
        builders[t].add(t, edge.weight);
        builders[t].add(h, -edge.weight);
        builders[h].add(h, edge.weight);
        builders[h].add(t, -edge.weight);
        incident[t] += edge.weight;
        incident[h] += edge.weight;
    }
    let rows = builders
        .into_iter()
        .zip(incident)
        .map(|(b, n_alpha)| b.finish(n_alpha.max(1)))
        .collect();
    Ok(OperatorMatrix { dim, rows })
}

/// True when two rows are equal up to a positive per-row scale factor.
///
/// Uses exact 128-bit cross-multiplication; the positive divisors cancel in
/// the comparison.
pub fn rows_proportional(a: &OperatorRow, b: &OperatorRow) -> bool {
    if a.entries.len() != b.entries.len() || a.ghosts.len() != b.ghosts.len() {
        return false;
    }
    if a.entries.iter().map(|(c, _)| c).ne(b.entries.iter().map(|(c, _)| c)) {
        return false;
    }
    if a.ghosts.iter().map(|(g, _)| g).ne(b.ghosts.iter().map(|(g, _)| g)) {
        return false;
    }
    let a_coeffs: Vec<i64> = a
        .entries
        .iter()
        .map(|(_, c)| *c)
        .chain(a.ghosts.iter().map(|(_, c)| *c))
        .collect();
    let b_coeffs: Vec<i64> = b
        .entries
        .iter()
        .map(|(_, c)| *c)
        .chain(b.ghosts.iter().map(|(_, c)| *c))
        .collect();
    if a_coeffs.is_empty() {
        return true;
    }
    let (a0, b0) = (a_coeffs[0], b_coeffs[0]);
    if (a0 > 0) != (b0 > 0) {
        return false;
    }
    a_coeffs
        .iter()
        .zip(&b_coeffs)
        .all(|(&ak, &bk)| (ak as i128) * (b0 as i128) == (bk as i128) * (a0 as i128))
}

/// Location of one degree of freedom in a reconciliation report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofDescriptor {
    pub j: usize,
    pub n: usize,
    pub species: SpeciesId,
}

/// Row-by-row comparison of two assemblies of the same dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconciliationReport {
    pub dimension: usize,
    /// Rows equal up to a positive per-row scale.
    pub matching: usize,
    /// Rows that differ. Against the incidence construction every stencil
    /// row whose sum is `±2` lands here (incidence rows sum to zero); only
    /// rows whose boundary truncation cancels the sum can match.
    pub differing: Vec<DofDescriptor>,
}

/// Compares two operators row by row, up to positive per-row scaling.
pub fn reconcile(
    network: &Network,
    a: &OperatorMatrix,
    b: &OperatorMatrix,
) -> Result<ReconciliationReport> {
    if a.dim != b.dim || a.dim != network.dof_count() {
        return Err(Error::Dimension(format!(
            "operators of dimension {} and {} cannot be reconciled on a network with {} \
             degrees of freedom",
            a.dim,
            b.dim,
            network.dof_count()
        )));
    }
    let mut matching = 0;
    let mut differing = Vec::new();
    for i in 0..a.dim {
        if rows_proportional(&a.rows[i], &b.rows[i]) {
            matching += 1;
        } else {
            let dof = network.dof_at(i);
            differing.push(DofDescriptor {
                j: dof.site.j,
                n: dof.site.n,
                species: dof.species,
            });
        }
    }
    Ok(ReconciliationReport {
        dimension: a.dim,
        matching,
        differing,
    })
}

/// Singular-value diagnostics attached to a null-space computation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDiagnostics<T> {
    /// Number of null directions found.
    pub null_dimension: usize,
    /// All singular values, descending.
    pub singular_values: Vec<T>,
}

/// Orthonormal basis of the numerical null space
/// `{f : ‖op·f‖ ≤ tol·‖op‖·‖f‖}`, by dense singular-value decomposition.
///
/// Desk-scale only (dimension ≤ a few thousand); the operator must be
/// ghost-free so the problem is homogeneous. Basis vectors are ordered from
/// most-null upward and sign-fixed so their largest-magnitude entry is
/// positive.
pub fn kernel_basis<T: Scalar + RealField>(
    op: &OperatorMatrix,
    tol: T,
) -> Result<(Vec<DistributionField<T>>, KernelDiagnostics<T>)> {
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!(
            "null-space tolerance must be strictly positive, got {tol}"
        )));
    }
    if op.has_ghost_rows() {
        return Err(Error::Config(
            "kernel_basis requires a ghost-free operator; fold ghost values into a right-hand \
             side via the kernel steady-state route instead"
                .into(),
        ));
    }
    if op.dim > tolerances::KERNEL_MAX_DIM {
        return Err(Error::Config(format!(
            "dense factorization is limited to dimension {}, got {}",
            tolerances::KERNEL_MAX_DIM,
            op.dim
        )));
    }
    let dense = to_dense::<T>(op);
    null_space(dense, tol)
}

/// Dense copy of the in-range part of the operator.
pub fn to_dense<T: Scalar>(op: &OperatorMatrix) -> DMatrix<T> {
    let mut m = DMatrix::<T>::zeros(op.dim, op.dim);
    for (i, row) in op.rows.iter().enumerate() {
        let div = T::from_coeff(row.divisor);
        for (col, c) in &row.entries {
            m[(i, *col)] = T::from_coeff(*c) / div;
        }
    }
    m
}

/// Null space of a dense (square or augmented-square) matrix by SVD.
pub(crate) fn null_space<T: Scalar + RealField>(
    m: DMatrix<T>,
    tol: T,
) -> Result<(Vec<DistributionField<T>>, KernelDiagnostics<T>)> {
    let svd = m.svd(false, true);
    let v_t = svd
        .v_t
        .expect("svd was computed with right singular vectors");
    let sigma: Vec<T> = svd.singular_values.iter().copied().collect();
    let sigma_max = sigma
        .iter()
        .copied()
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let cutoff = tol * sigma_max;
    let mut null_indices: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] <= cutoff).collect();
    // Most-null first, regardless of how the backend ordered the values.
    null_indices.sort_by(|&i, &j| sigma[i].partial_cmp(&sigma[j]).expect("finite singular values"));
    let mut vectors = Vec::with_capacity(null_indices.len());
    for i in null_indices {
        let mut v: Vec<T> = v_t.row(i).iter().copied().collect();
        let mut lead = 0usize;
        for (k, x) in v.iter().enumerate() {
            if Float::abs(*x) > Float::abs(v[lead]) {
                lead = k;
            }
        }
        if v[lead] < T::zero() {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
        vectors.push(DistributionField { values: v, tick: 0 });
    }
    let mut descending = sigma;
    descending.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    let diagnostics = KernelDiagnostics {
        null_dimension: vectors.len(),
        singular_values: descending,
    };
    Ok((vectors, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_network, NetworkConfig};

    fn rect(width: usize, depth: usize) -> Network {
        build_network(NetworkConfig::rectangular(width, depth)).unwrap()
    }

    fn truncated(width: usize, depth: usize) -> Network {
        let mut config = NetworkConfig::rectangular(width, depth);
        config.radial_bc = RadialBc::Truncated;
        build_network(config).unwrap()
    }

    #[test]
    fn radial_stencil_examples() {
        assert_eq!(radial_stencil(1i64, 2, 4), 0);
        assert_eq!(radial_stencil(1i64, 1, 1), 0);
        assert_eq!(radial_stencil(0i64, 1, 0), 6);
        assert_eq!(radial_stencil(1.0f64, 2.0, 4.0), 0.0);
        let (p, h, x) = radial_coefficients();
        assert_eq!(p + h + x, 0);
    }

    #[test]
    fn horizontal_stencil_examples() {
        assert_eq!(horizontal_stencil(SpeciesId::UD, 0, 2i64, 1, 2), 0);
        assert_eq!(horizontal_stencil(SpeciesId::DU, 0, 1i64, 2, 1), 0);
        assert_eq!(horizontal_stencil(SpeciesId::UD, 0, 1i64, 1, 1), 2);
        assert_eq!(horizontal_stencil(SpeciesId::DU, 1, 2.0f64, 1.0, 2.0), 0.0);
        assert_eq!(horizontal_stencil(SpeciesId::UD, 1, 1i64, 1, 1), -2);
    }

    #[test]
    fn sharp_rows_follow_species_and_phase() {
        assert!(sharp_row(SpeciesId::UD, 0));
        assert!(!sharp_row(SpeciesId::UD, 1));
        assert!(!sharp_row(SpeciesId::DU, 0));
        assert!(sharp_row(SpeciesId::DU, 1));
        assert_eq!(horizontal_coefficients(SpeciesId::UD, 0), (-1, 4, -1));
        assert_eq!(horizontal_coefficients(SpeciesId::DU, 0), (-2, 2, -2));
    }

    #[test]
    fn stencil_row_sums_are_exact() {
        for species in SpeciesId::ALL {
            for phase in [0u8, 1] {
                let (l, c, r) = horizontal_coefficients(species, phase);
                let expected = if sharp_row(species, phase) { 2 } else { -2 };
                assert_eq!(l + c + r, expected);
            }
        }
    }

    #[test]
    fn assembled_dimensions_and_support() {
        let op = assemble_operator(&rect(8, 3)).unwrap();
        assert_eq!(op.dimension(), 48);
        for row in op.rows() {
            assert!(row.support() <= 5, "row support {}", row.support());
        }
    }

    #[test]
    fn diagonal_is_ten_on_sharp_rows_and_eight_on_flat_rows() {
        let net = rect(8, 4);
        let op = assemble_operator(&net).unwrap();
        for flat in 0..op.dimension() {
            let dof = net.dof_at(flat);
            let phase = net.species_phase_at(dof.site).unwrap();
            let expect = if sharp_row(dof.species, phase) { 10 } else { 8 };
            assert_eq!(op.row(flat).coefficient(flat), Some(expect));
        }
    }

    #[test]
    fn interior_row_sums_match_the_horizontal_part() {
        let net = rect(8, 4);
        let op = assemble_operator(&net).unwrap();
        for flat in 0..op.dimension() {
            let dof = net.dof_at(flat);
            let phase = net.species_phase_at(dof.site).unwrap();
            let expect = if sharp_row(dof.species, phase) { 2.0 } else { -2.0 };
            // Ghost couplings included, every row sums to the horizontal
            // part's ±2 because the radial part sums to zero.
            assert_eq!(op.row(flat).sum(), expect);
        }
    }

    #[test]
    fn rows_never_mix_species() {
        for net in [rect(8, 4), truncated(8, 4)] {
            let op = assemble_operator(&net).unwrap();
            let sites = net.site_count();
            for flat in 0..op.dimension() {
                let block = flat / sites;
                for (col, _) in &op.row(flat).entries {
                    assert_eq!(col / sites, block, "row {flat} leaks into column {col}");
                }
                for (g, _) in &op.row(flat).ghosts {
                    let species = match g {
                        GhostRef::Below { species, .. } | GhostRef::Above { species, .. } => {
                            *species
                        }
                    };
                    assert_eq!(species.index(), block);
                }
            }
        }
    }

    #[test]
    fn ghost_rows_appear_only_with_dirichlet_ghosts() {
        assert!(assemble_operator(&rect(8, 4)).unwrap().has_ghost_rows());
        assert!(!assemble_operator(&truncated(8, 4))
            .unwrap()
            .has_ghost_rows());
    }

    #[test]
    fn apply_enforces_ghost_policy_and_dimensions() {
        let net = rect(8, 4);
        let op = assemble_operator(&net).unwrap();
        let field = DistributionField {
            values: vec![0.0f64; op.dimension()],
            tick: 0,
        };
        assert!(matches!(
            apply(&op, &field, None),
            Err(Error::Config(_))
        ));
        let zeros = GhostValues::<f64>::zeros(8);
        let out = apply(&op, &field, Some(&zeros)).unwrap();
        assert!(out.values.iter().all(|v| *v == 0.0));
        let short = DistributionField {
            values: vec![0.0f64; 3],
            tick: 0,
        };
        assert!(matches!(
            apply(&op, &short, Some(&zeros)),
            Err(Error::Dimension(_))
        ));
        let trunc = assemble_operator(&truncated(8, 4)).unwrap();
        assert!(matches!(
            apply(&trunc, &field, Some(&zeros)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn gershgorin_weight_is_eighteen() {
        let op = assemble_operator(&rect(8, 4)).unwrap();
        assert_eq!(op.max_abs_row_sum(), 18.0);
        let layer = assemble_horizontal_layer(8).unwrap();
        assert_eq!(layer.max_abs_row_sum(), 6.0);
    }

    #[test]
    fn horizontal_layer_rejects_bad_widths() {
        assert!(assemble_horizontal_layer(7).is_err());
        assert!(assemble_horizontal_layer(2).is_err());
        assert_eq!(assemble_horizontal_layer(12).unwrap().dimension(), 24);
    }

    #[test]
    fn orientation_flip_leaves_incidence_unchanged() {
        let net = truncated(8, 4);
        let spec = EdgeMultisetSpec::default();
        let edges = oriented_edges(&net, &spec).unwrap();
        let a = incidence_assemble_oriented(&net, &edges).unwrap();
        let flipped: Vec<OrientedEdge> = edges.iter().map(|e| e.flipped()).collect();
        let b = incidence_assemble_oriented(&net, &flipped).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn radial_only_incidence_matches_the_radial_pattern() {
        let net = truncated(8, 4);
        let op = incidence_assemble(&net, &EdgeMultisetSpec::radial_only()).unwrap();
        let sites = net.site_count();
        for flat in 0..op.dimension() {
            let dof = net.dof_at(flat);
            let Site { j, n } = dof.site;
            if n == 0 || n + 1 >= net.depth() {
                continue;
            }
            let block = dof.species.index() * sites;
            let expected = OperatorRow {
                entries: vec![
                    (block + net.site_index(Site::new(j, n - 1)).unwrap(), -4),
                    (flat, 6),
                    (block + net.site_index(Site::new(j, n + 1)).unwrap(), -2),
                ],
                ghosts: vec![],
                divisor: 1,
            };
            assert!(
                rows_proportional(op.row(flat), &expected),
                "row at j={j}, n={n}: {:?}",
                op.row(flat)
            );
        }
    }

    #[test]
    fn incidence_reconciles_exactly_the_zero_sum_flat_boundary_rows() {
        let net = truncated(8, 4);
        let authoritative = assemble_operator(&net).unwrap();
        let incidence = incidence_assemble(&net, &EdgeMultisetSpec::default()).unwrap();
        let report = reconcile(&net, &incidence, &authoritative).unwrap();
        // Incidence rows always sum to zero, so a stencil row can only match
        // where its own sum vanishes. Sharp rows sum to +2 everywhere; flat
        // rows sum to −2 except at the truncated top layer, where dropping
        // the upward radial term leaves (6, −2, +2, −2, −4) summing to zero
        // — and that row is exactly twice the boundary-doubled incidence
        // row. So the matches are precisely the top-layer flat rows.
        let top = net.depth() - 1;
        assert_eq!(report.matching, 8);
        assert_eq!(report.differing.len(), net.dof_count() - 8);
        for flat in 0..net.dof_count() {
            let dof = net.dof_at(flat);
            let phase = net.species_phase_at(dof.site).unwrap();
            let expect_match = dof.site.n == top && !sharp_row(dof.species, phase);
            let differs = report.differing.iter().any(|d| {
                d.j == dof.site.j && d.n == dof.site.n && d.species == dof.species
            });
            assert_eq!(differs, !expect_match, "dof {dof:?}");
        }
        let selfsame = reconcile(&net, &incidence, &incidence).unwrap();
        assert_eq!(selfsame.matching, net.dof_count());
        assert!(selfsame.differing.is_empty());
    }

    #[test]
    fn proportionality_ignores_divisors_and_positive_scales() {
        let a = OperatorRow {
            entries: vec![(0, -4), (1, 6), (2, -2)],
            ghosts: vec![],
            divisor: 1,
        };
        let b = OperatorRow {
            entries: vec![(0, -8), (1, 12), (2, -4)],
            ghosts: vec![],
            divisor: 12,
        };
        assert!(rows_proportional(&a, &b));
        let negated = OperatorRow {
            entries: vec![(0, 4), (1, -6), (2, 2)],
            ghosts: vec![],
            divisor: 1,
        };
        assert!(!rows_proportional(&a, &negated));
        let shifted = OperatorRow {
            entries: vec![(0, -4), (1, 6), (3, -2)],
            ghosts: vec![],
            divisor: 1,
        };
        assert!(!rows_proportional(&a, &shifted));
    }

    #[test]
    fn empty_multiset_is_rejected() {
        let net = truncated(8, 4);
        let empty = EdgeMultisetSpec {
            radial_pairs: 0,
            radial_boundary_doubling: false,
            horizontal: [0, 0],
        };
        assert!(matches!(
            incidence_assemble(&net, &empty),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn kernel_basis_guards_its_preconditions() {
        let layer = assemble_horizontal_layer(8).unwrap();
        assert!(matches!(
            kernel_basis::<f64>(&layer, 0.0),
            Err(Error::Domain(_))
        ));
        let ghosted = assemble_operator(&rect(8, 4)).unwrap();
        assert!(matches!(
            kernel_basis::<f64>(&ghosted, 1e-10),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn horizontal_layer_kernel_is_two_dimensional() {
        for width in [8usize, 12] {
            let layer = assemble_horizontal_layer(width).unwrap();
            let (basis, diag) =
                kernel_basis::<f64>(&layer, tolerances::KERNEL_SVD_TOL).unwrap();
            assert_eq!(basis.len(), 2, "width {width}");
            assert_eq!(diag.null_dimension, 2);
            assert_eq!(diag.singular_values.len(), 2 * width);
            for v in &basis {
                let norm: f64 = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triplet_export_lists_every_entry() {
        let op = assemble_horizontal_layer(4).unwrap();
        let text = op.to_triplets();
        assert!(text.starts_with("# dimension 8\n"));
        assert!(text.contains("0 0 4\n"));
        let lines = text.lines().filter(|l| !l.starts_with('#')).count();
        let expected: usize = op.rows().iter().map(|r| r.entries.len()).sum();
        assert_eq!(lines, expected);
    }
}
