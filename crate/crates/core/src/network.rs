//! Lattice construction: sites, species staggering, adjacency, and boundary
//! policy.
//!
//! The network is a layered undirected graph. Layer `n` (the renormalization
//! index, `0 ≤ n < depth`) holds `width` sites in rectangular mode and
//! `width / 2ⁿ` sites in (experimental) tree mode. Each site `(j, n)` is a
//! disentangler holding two *earlier* and two *later* classical spin bits;
//! the two spin-zero bipartite-spin species `↑↓` and `↓↑` are staggered with
//! period 2 along each layer, and the staggering phase decides which species
//! occupies the earlier pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice adjacency mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every layer has `width` sites; radial links are vertical. Default and
    /// the authoritative setting for all quantitative claims.
    Rectangular,
    /// Layer widths halve upward (binary tree of sites). Experimental
    /// adjacency for exploration; no acceptance guarantees.
    Tree,
}

/// Horizontal boundary policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizontalBc {
    /// Each layer closes into a ring (`j ± 1 mod layer width`).
    Periodic,
    /// Out-of-range horizontal terms are dropped (zero boundary data).
    Dirichlet,
}

/// Radial boundary policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialBc {
    /// Boundary rows reference ghost layers at `n = −1` and `n = depth`
    /// whose values are substituted at apply time. Rectangular mode only.
    DirichletGhost,
    /// Out-of-range radial terms are dropped.
    Truncated,
}

/// Choice of the per-layer staggering offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityOffset {
    /// Phase = `j mod 2` in every layer (layer-aligned staggering). Default;
    /// required for the induced metric to close onto `g_nn = 1`.
    FixedZero,
    /// Phase = `(j + n) mod 2`; retained for sensitivity experiments.
    PerLayerAlternating,
}

/// Bipartite-spin species: the two spin-zero states of a spin pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpeciesId {
    /// `↑↓`
    UD,
    /// `↓↑`
    DU,
}

impl SpeciesId {
    /// Both species, in storage order.
    pub const ALL: [SpeciesId; 2] = [SpeciesId::UD, SpeciesId::DU];

    /// Dense index: `UD → 0`, `DU → 1`.
    pub fn index(self) -> usize {
        match self {
            SpeciesId::UD => 0,
            SpeciesId::DU => 1,
        }
    }

    /// The partner species.
    pub fn other(self) -> SpeciesId {
        match self {
            SpeciesId::UD => SpeciesId::DU,
            SpeciesId::DU => SpeciesId::UD,
        }
    }

    /// Short label used in CSV tables.
    pub fn label(self) -> &'static str {
        match self {
            SpeciesId::UD => "UD",
            SpeciesId::DU => "DU",
        }
    }

    /// Inverse of [`SpeciesId::label`].
    pub fn from_label(s: &str) -> Result<SpeciesId> {
        match s {
            "UD" => Ok(SpeciesId::UD),
            "DU" => Ok(SpeciesId::DU),
            other => Err(Error::Parse(format!(
                "unknown species label {other:?} (expected \"UD\" or \"DU\")"
            ))),
        }
    }
}

/// One spin-zero pair of classical spin bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinPair {
    /// `↑↓`
    UpDown,
    /// `↓↑`
    DownUp,
}

impl SpinPair {
    fn for_species(species: SpeciesId) -> SpinPair {
        match species {
            SpeciesId::UD => SpinPair::UpDown,
            SpeciesId::DU => SpinPair::DownUp,
        }
    }
}

/// Lattice position `(j, n)`: horizontal index `j` inside layer `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub j: usize,
    pub n: usize,
}

impl Site {
    pub fn new(j: usize, n: usize) -> Site {
        Site { j, n }
    }
}

/// Classical spin content of one site.
///
/// Both pairs have total spin zero by construction; the staggering phase
/// decides which species occupies the earlier pair (the later pair holds the
/// partner species).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteState {
    pub earlier: SpinPair,
    pub later: SpinPair,
    /// Parity bit: `(j + offset(n)) mod 2`.
    pub species_phase: u8,
}

/// Full lattice configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Sites per layer at `n = 0`. Even, at least 4; a power of two in tree
    /// mode.
    pub width: usize,
    /// Number of renormalization layers; at least 3 so an interior layer
    /// exists.
    pub depth: usize,
    pub mode: Mode,
    pub horizontal_bc: HorizontalBc,
    pub radial_bc: RadialBc,
    pub parity_offset: ParityOffset,
    /// Lattice constant `ε` (length); scales the Poincaré coordinates
    /// `x = j·ε`, `r = 2ⁿ·ε`.
    pub lattice_constant: f64,
}

impl NetworkConfig {
    /// Rectangular, periodic, ghost-anchored, layer-aligned configuration —
    /// the verification default.
    pub fn rectangular(width: usize, depth: usize) -> NetworkConfig {
        NetworkConfig {
            width,
            depth,
            mode: Mode::Rectangular,
            horizontal_bc: HorizontalBc::Periodic,
            radial_bc: RadialBc::DirichletGhost,
            parity_offset: ParityOffset::FixedZero,
            lattice_constant: 1.0,
        }
    }

    /// Checks every configuration invariant, naming the first violation.
    pub fn validate(&self) -> Result<()> {
        if !self.width.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "width must be even (period-2 staggering must close), got {}",
                self.width
            )));
        }
        if self.width < 4 {
            return Err(Error::Config(format!(
                "width must be at least 4, got {}",
                self.width
            )));
        }
        if self.depth < 3 {
            return Err(Error::Config(format!(
                "depth must be at least 3 so an interior layer exists, got {}",
                self.depth
            )));
        }
        if self.depth > 48 {
            return Err(Error::Config(format!(
                "depth must be at most 48 to keep the dyadic radial profile exact in 64-bit \
                 arithmetic, got {}",
                self.depth
            )));
        }
        if self.mode == Mode::Tree {
            if !self.width.is_power_of_two() {
                return Err(Error::Config(format!(
                    "width must be a power of two in tree mode, got {}",
                    self.width
                )));
            }
            let divisor = 1usize << (self.depth - 1);
            if !self.width.is_multiple_of(divisor) {
                return Err(Error::Config(format!(
                    "width must be divisible by 2^(depth-1) = {} in tree mode, got {}",
                    divisor, self.width
                )));
            }
            if self.radial_bc == RadialBc::DirichletGhost {
                return Err(Error::Config(
                    "radial_bc dirichlet_ghost requires rectangular mode (ghost layers take \
                     their values from the closed-form profile, which is rectangular-only); \
                     use radial_bc=truncated in tree mode"
                        .into(),
                ));
            }
        }
        if !(self.lattice_constant > 0.0) || !self.lattice_constant.is_finite() {
            return Err(Error::Config(format!(
                "lattice constant must be strictly positive and finite, got {}",
                self.lattice_constant
            )));
        }
        Ok(())
    }
}

/// Neighbor sets of one site, grouped by direction.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Neighborhood {
    pub horizontal: Vec<Site>,
    pub radial_up: Vec<Site>,
    pub radial_down: Vec<Site>,
}

impl Neighborhood {
    /// All neighbors in one sequence (horizontal, then up, then down).
    pub fn iter(&self) -> impl Iterator<Item = &Site> {
        self.horizontal
            .iter()
            .chain(self.radial_up.iter())
            .chain(self.radial_down.iter())
    }
}

/// Immutable layered lattice; safe to share across threads after
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    /// Prefix sums of layer widths: `layer_offsets[n]` is the dense index of
    /// site `(0, n)`; the final entry is the total site count.
    layer_offsets: Vec<usize>,
}

/// Constructs and validates a [`Network`] from its configuration.
pub fn build_network(config: NetworkConfig) -> Result<Network> {
    config.validate()?;
    let mut layer_offsets = Vec::with_capacity(config.depth + 1);
    let mut total = 0usize;
    for n in 0..config.depth {
        layer_offsets.push(total);
        total += match config.mode {
            Mode::Rectangular => config.width,
            Mode::Tree => config.width >> n,
        };
    }
    layer_offsets.push(total);
    Ok(Network {
        config,
        layer_offsets,
    })
}

impl Network {
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn depth(&self) -> usize {
        self.config.depth
    }

    /// Number of sites in layer `n`.
    pub fn layer_width(&self, n: usize) -> usize {
        match self.config.mode {
            Mode::Rectangular => self.config.width,
            Mode::Tree => self.config.width >> n,
        }
    }

    /// Total number of sites.
    pub fn site_count(&self) -> usize {
        *self.layer_offsets.last().expect("offsets never empty")
    }

    /// Number of scalar degrees of freedom (two species per site).
    pub fn dof_count(&self) -> usize {
        2 * self.site_count()
    }

    /// Discretized area: one pixel of area `r_ads²` per site.
    pub fn pixel_area(&self) -> usize {
        self.site_count()
    }

    pub fn contains(&self, site: Site) -> bool {
        site.n < self.config.depth && site.j < self.layer_width(site.n)
    }

    /// Dense site index (layer-major), if the site is in range.
    pub fn site_index(&self, site: Site) -> Result<usize> {
        if !self.contains(site) {
            return Err(Error::SiteOutOfRange {
                j: site.j,
                n: site.n,
            });
        }
        Ok(self.layer_offsets[site.n] + site.j)
    }

    /// Inverse of [`Network::site_index`].
    pub fn site_at(&self, index: usize) -> Site {
        assert!(index < self.site_count(), "site index out of range");
        let n = match self.layer_offsets.binary_search(&index) {
            Ok(mut exact) => {
                // Zero-width layers cannot occur, so the first offset equal
                // to `index` is the layer start we want.
                while exact + 1 < self.layer_offsets.len() && self.layer_offsets[exact + 1] == index
                {
                    exact += 1;
                }
                exact.min(self.config.depth - 1)
            }
            Err(insertion) => insertion - 1,
        };
        Site::new(index - self.layer_offsets[n], n)
    }

    /// All sites in dense order (layer 0 first, `j` ascending).
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.config.depth)
            .flat_map(move |n| (0..self.layer_width(n)).map(move |j| Site::new(j, n)))
    }

    /// Staggering phase at a site: `j mod 2` with the fixed offset,
    /// `(j + n) mod 2` with the per-layer alternating offset.
    pub fn species_phase_at(&self, site: Site) -> Result<u8> {
        if !self.contains(site) {
            return Err(Error::SiteOutOfRange {
                j: site.j,
                n: site.n,
            });
        }
        Ok(self.phase_raw(site.j, site.n as i64))
    }

    /// Phase formula extended to ghost layers (`n = −1`, `n = depth`).
    pub(crate) fn phase_raw(&self, j: usize, n: i64) -> u8 {
        match self.config.parity_offset {
            ParityOffset::FixedZero => (j % 2) as u8,
            ParityOffset::PerLayerAlternating => ((j as i64 + n).rem_euclid(2)) as u8,
        }
    }

    /// Classical spin content of a site: the earlier pair carries the
    /// species selected by the phase (phase 0 → `↑↓`), the later pair the
    /// partner.
    pub fn site_state(&self, site: Site) -> Result<SiteState> {
        let phase = self.species_phase_at(site)?;
        let earlier_species = if phase == 0 {
            SpeciesId::UD
        } else {
            SpeciesId::DU
        };
        Ok(SiteState {
            earlier: SpinPair::for_species(earlier_species),
            later: SpinPair::for_species(earlier_species.other()),
            species_phase: phase,
        })
    }

    /// Neighbor sets of `site`, deduplicated (adjacency semantics, not
    /// stencil multiplicity).
    ///
    /// Rectangular mode: horizontal `(j ± 1, n)` subject to the horizontal
    /// boundary policy; radial `(j, n ± 1)` where present. Tree mode:
    /// horizontal neighbors close into each layer's own ring, the radial
    /// parent is `(⌊j/2⌋, n+1)` and the children are `(2j, n−1)`,
    /// `(2j+1, n−1)`.
    pub fn neighbors(&self, site: Site) -> Result<Neighborhood> {
        if !self.contains(site) {
            return Err(Error::SiteOutOfRange {
                j: site.j,
                n: site.n,
            });
        }
        let mut out = Neighborhood::default();
        let width = self.layer_width(site.n);
        match self.config.horizontal_bc {
            HorizontalBc::Periodic => {
                let left = Site::new((site.j + width - 1) % width, site.n);
                let right = Site::new((site.j + 1) % width, site.n);
                out.horizontal.push(left);
                if right != left {
                    out.horizontal.push(right);
                }
            }
            HorizontalBc::Dirichlet => {
                if site.j > 0 {
                    out.horizontal.push(Site::new(site.j - 1, site.n));
                }
                if site.j + 1 < width {
                    out.horizontal.push(Site::new(site.j + 1, site.n));
                }
            }
        }
        match self.config.mode {
            Mode::Rectangular => {
                if site.n + 1 < self.config.depth {
                    out.radial_up.push(Site::new(site.j, site.n + 1));
                }
                if site.n > 0 {
                    out.radial_down.push(Site::new(site.j, site.n - 1));
                }
            }
            Mode::Tree => {
                if site.n + 1 < self.config.depth {
                    out.radial_up.push(Site::new(site.j / 2, site.n + 1));
                }
                if site.n > 0 {
                    out.radial_down.push(Site::new(2 * site.j, site.n - 1));
                    out.radial_down.push(Site::new(2 * site.j + 1, site.n - 1));
                }
            }
        }
        Ok(out)
    }
}
