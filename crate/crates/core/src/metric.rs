//! Induced information metric of the steady distribution and its AdS₂
//! verification.
//!
//! At each interior site the metric is the species-averaged quadratic form
//! of *forward* `log₂` differences,
//!
//! ```text
//! g_ab = ½ Σ_α (D_a log₂ f_α / δv_a) · (D_b log₂ f_α / δv_b),
//! ```
//!
//! with discrete cell sizes `δv_j = 2ⁿ` (the binary-tree geometry widens
//! horizontal cells by a factor 2 per layer) and `δv_n = 1`. Forward
//! differences are what make the closed-form result exact; one forward
//! difference is one gate execution between adjacent sites.
//!
//! Poincaré coordinates are `x = j·ε`, `r = 2ⁿ·ε`. The radial cell is the
//! discrete forward difference `δr = (2ⁿ⁺¹ − 2ⁿ)·ε = r` — using the
//! continuum derivative instead would smuggle a `ln²2` into `g_rr` and break
//! the exact `g_rr = r⁻²`. For the closed-form steady field the components
//! come out as `g_jj = 2⁻²ⁿ`, `g_nn = 1`, `g_jn = 0`, i.e. the AdS₂
//! half-plane metric `g_xx = g_rr = r⁻²`, `g_xr = 0` with unit curvature
//! radius.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dynamics::DistributionField;
use crate::error::{Error, Result};
use crate::laplacian::DofIndex;
use crate::network::{HorizontalBc, Mode, Network, Site, SpeciesId};
use crate::scalar::Scalar;

/// Induced metric components at one site (lattice coordinates).
///
/// `g_jj` and `g_nn` are averages of squares, hence non-negative; the form
/// is symmetric, so only one off-diagonal component is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricComponents<T> {
    pub g_jj: T,
    pub g_nn: T,
    pub g_jn: T,
}

/// Metric components bound to their site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteMetric<T> {
    pub site: Site,
    pub components: MetricComponents<T>,
}

/// Poincaré half-plane components at one site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareComponents<T> {
    /// Horizontal coordinate `j·ε`.
    pub x: T,
    /// Radial coordinate `2ⁿ·ε`; strictly positive.
    pub r: T,
    pub g_xx: T,
    pub g_rr: T,
    pub g_xr: T,
}

/// Poincaré components bound to their site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SitePoincare<T> {
    pub site: Site,
    pub components: PoincareComponents<T>,
}

/// Sites owning both forward neighbors, in dense order: every layer except
/// the deepest, and every column except the last one under a non-periodic
/// horizontal boundary.
pub fn interior_sites(network: &Network) -> Vec<Site> {
    let mut out = Vec::new();
    for n in 0..network.depth().saturating_sub(1) {
        let width = network.layer_width(n);
        let last = match network.config().horizontal_bc {
            HorizontalBc::Periodic => width,
            HorizontalBc::Dirichlet => width - 1,
        };
        for j in 0..last {
            out.push(Site::new(j, n));
        }
    }
    out
}

fn positive_log2<T: Scalar>(
    field: &DistributionField<T>,
    network: &Network,
    site: Site,
    species: SpeciesId,
) -> Result<T> {
    let v = field.values[network.flat_dof(DofIndex::new(site, species))?];
    if !(v > T::zero()) {
        return Err(Error::Domain(format!(
            "field value must be strictly positive for the induced metric; got {v} at j={}, \
             n={}, species {}",
            site.j,
            site.n,
            species.label()
        )));
    }
    Ok(v.log2())
}

/// Induced metric on every interior site (rectangular mode).
pub fn induced_metric<T: Scalar>(
    field: &DistributionField<T>,
    network: &Network,
) -> Result<Vec<SiteMetric<T>>> {
    if network.mode() == Mode::Tree {
        return Err(Error::Unsupported(
            "the induced metric is defined on the rectangular lattice only".into(),
        ));
    }
    if field.dim() != network.dof_count() {
        return Err(Error::Dimension(format!(
            "field has {} values but the network has {} degrees of freedom",
            field.dim(),
            network.dof_count()
        )));
    }
    let half = T::from_f64(0.5).expect("0.5 is representable");
    let mut out = Vec::new();
    for site in interior_sites(network) {
        let width = network.layer_width(site.n);
        let right = Site::new((site.j + 1) % width, site.n);
        let up = Site::new(site.j, site.n + 1);
        let dv_j = T::from_coeff(1i64 << site.n);
        let mut g_jj = T::zero();
        let mut g_nn = T::zero();
        let mut g_jn = T::zero();
        for species in SpeciesId::ALL {
            let here = positive_log2(field, network, site, species)?;
            let d_j = (positive_log2(field, network, right, species)? - here) / dv_j;
            let d_n = positive_log2(field, network, up, species)? - here;
            g_jj = g_jj + d_j * d_j;
            g_nn = g_nn + d_n * d_n;
            g_jn = g_jn + d_j * d_n;
        }
        out.push(SiteMetric {
            site,
            components: MetricComponents {
                g_jj: half * g_jj,
                g_nn: half * g_nn,
                g_jn: half * g_jn,
            },
        });
    }
    Ok(out)
}

/// Transforms lattice-coordinate components to Poincaré half-plane
/// components at one site.
///
/// Discrete cell sizes: `δx = 2ⁿ·ε` and `δr = r`, giving `g_xx = g_jj/ε²`,
/// `g_rr = g_nn/r²`, `g_xr = g_jn/(ε·r)`.
pub fn to_poincare<T: Scalar>(
    metric: &MetricComponents<T>,
    site: Site,
    epsilon_l: T,
) -> Result<PoincareComponents<T>> {
    if !(epsilon_l > T::zero()) {
        return Err(Error::Domain(format!(
            "lattice constant must be strictly positive, got {epsilon_l}"
        )));
    }
    let r = T::from_coeff(1i64 << site.n) * epsilon_l;
    Ok(PoincareComponents {
        x: T::from_coeff(site.j as i64) * epsilon_l,
        r,
        g_xx: metric.g_jj / (epsilon_l * epsilon_l),
        g_rr: metric.g_nn / (r * r),
        g_xr: metric.g_jn / (epsilon_l * r),
    })
}

/// Applies [`to_poincare`] across a metric table.
pub fn poincare_field<T: Scalar>(
    metric: &[SiteMetric<T>],
    epsilon_l: T,
) -> Result<Vec<SitePoincare<T>>> {
    metric
        .iter()
        .map(|m| {
            Ok(SitePoincare {
                site: m.site,
                components: to_poincare(&m.components, m.site, epsilon_l)?,
            })
        })
        .collect()
}

/// Maximum AdS₂ deviations `|g_xx·r² − 1|`, `|g_rr·r² − 1|`, `|g_xr|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviations<T> {
    pub dev_xx: T,
    pub dev_rr: T,
    pub dev_xr: T,
}

impl<T: Scalar> Deviations<T> {
    fn zero() -> Self {
        Deviations {
            dev_xx: T::zero(),
            dev_rr: T::zero(),
            dev_xr: T::zero(),
        }
    }

    fn fold(&mut self, p: &PoincareComponents<T>) {
        let one = T::one();
        let r2 = p.r * p.r;
        self.dev_xx = Float::max(self.dev_xx, Float::abs(p.g_xx * r2 - one));
        self.dev_rr = Float::max(self.dev_rr, Float::abs(p.g_rr * r2 - one));
        self.dev_xr = Float::max(self.dev_xr, Float::abs(p.g_xr));
    }

    /// Largest of the three deviations.
    pub fn max(&self) -> T {
        Float::max(self.dev_xx, Float::max(self.dev_rr, self.dev_xr))
    }
}

/// Per-layer deviation row of a [`DeviationReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerDeviations<T> {
    pub n: usize,
    pub sites: usize,
    pub dev_xx: T,
    pub dev_rr: T,
    pub dev_xr: T,
}

/// AdS₂ comparison summary over all interior sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport<T> {
    /// Number of sites entering the comparison.
    pub sites: usize,
    /// Maximum deviations over all sites.
    pub dev_xx: T,
    pub dev_rr: T,
    pub dev_xr: T,
    /// The same maxima restricted to each layer.
    pub per_layer: Vec<LayerDeviations<T>>,
}

impl<T: Scalar> DeviationReport<T> {
    /// Largest deviation of any kind.
    pub fn max_deviation(&self) -> T {
        Float::max(self.dev_xx, Float::max(self.dev_rr, self.dev_xr))
    }
}

/// Compares Poincaré components against the AdS₂ half-plane metric with
/// unit curvature radius.
pub fn compare_ads2<T: Scalar>(poincare: &[SitePoincare<T>]) -> DeviationReport<T> {
    let mut total = Deviations::zero();
    let mut layers: Vec<(usize, usize, Deviations<T>)> = Vec::new();
    for p in poincare {
        total.fold(&p.components);
        match layers.iter_mut().find(|(n, _, _)| *n == p.site.n) {
            Some((_, count, dev)) => {
                *count += 1;
                dev.fold(&p.components);
            }
            None => {
                let mut dev = Deviations::zero();
                dev.fold(&p.components);
                layers.push((p.site.n, 1, dev));
            }
        }
    }
    layers.sort_by_key(|(n, _, _)| *n);
    DeviationReport {
        sites: poincare.len(),
        dev_xx: total.dev_xx,
        dev_rr: total.dev_rr,
        dev_xr: total.dev_xr,
        per_layer: layers
            .into_iter()
            .map(|(n, sites, d)| LayerDeviations {
                n,
                sites,
                dev_xx: d.dev_xx,
                dev_rr: d.dev_rr,
                dev_xr: d.dev_xr,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{closed_form_steady, SignOrder};
    use crate::network::{build_network, NetworkConfig, ParityOffset, RadialBc};

    fn rect(width: usize, depth: usize) -> Network {
        build_network(NetworkConfig::rectangular(width, depth)).unwrap()
    }

    fn field_from(net: &Network, f: impl Fn(Site, SpeciesId) -> f64) -> DistributionField<f64> {
        let mut values = vec![0.0; net.dof_count()];
        for site in net.sites() {
            for species in SpeciesId::ALL {
                let flat = net.flat_dof(DofIndex::new(site, species)).unwrap();
                values[flat] = f(site, species);
            }
        }
        DistributionField { values, tick: 0 }
    }

    #[test]
    fn closed_form_metric_is_exact() {
        let net = rect(8, 4);
        let f = closed_form_steady::<f64>(&net, 1.0, SignOrder::UdUp).unwrap();
        let metric = induced_metric(&f, &net).unwrap();
        assert_eq!(metric.len(), 24);
        for m in &metric {
            let expect_jj = 0.25f64.powi(m.site.n as i32);
            assert_eq!(m.components.g_jj, expect_jj, "site {:?}", m.site);
            assert_eq!(m.components.g_nn, 1.0);
            assert_eq!(m.components.g_jn, 0.0);
        }
    }

    #[test]
    fn closed_form_poincare_is_ads2_for_several_lattice_constants() {
        let net = rect(8, 4);
        let f = closed_form_steady::<f64>(&net, 1.0, SignOrder::UdUp).unwrap();
        let metric = induced_metric(&f, &net).unwrap();
        for epsilon_l in [1.0f64, 0.5, 3.0] {
            let poincare = poincare_field(&metric, epsilon_l).unwrap();
            let report = compare_ads2(&poincare);
            assert_eq!(report.sites, 24);
            assert!(
                report.max_deviation() <= 1e-15,
                "epsilon {epsilon_l}: {report:?}"
            );
            for p in &poincare {
                assert_eq!(p.components.r, (1i64 << p.site.n) as f64 * epsilon_l);
            }
        }
    }

    #[test]
    fn scale_covariance_preserves_g_xx_times_r_squared() {
        let net = rect(8, 4);
        let f = closed_form_steady::<f64>(&net, 1.0, SignOrder::UdUp).unwrap();
        let metric = induced_metric(&f, &net).unwrap();
        let p = poincare_field(&metric, 2.0).unwrap();
        for sp in &p {
            let c = &sp.components;
            assert_eq!(c.g_xx * c.r * c.r, 1.0);
        }
    }

    #[test]
    fn constant_field_has_zero_metric() {
        let net = rect(8, 4);
        let f = field_from(&net, |_, _| 3.5);
        let metric = induced_metric(&f, &net).unwrap();
        for m in &metric {
            assert_eq!(m.components.g_jj, 0.0);
            assert_eq!(m.components.g_nn, 0.0);
            assert_eq!(m.components.g_jn, 0.0);
        }
    }

    #[test]
    fn radial_only_field_gives_unit_g_nn() {
        let net = rect(8, 4);
        let f = field_from(&net, |site, _| (1i64 << site.n) as f64);
        let metric = induced_metric(&f, &net).unwrap();
        for m in &metric {
            assert_eq!(m.components.g_jj, 0.0);
            assert_eq!(m.components.g_nn, 1.0);
            assert_eq!(m.components.g_jn, 0.0);
        }
    }

    #[test]
    fn monotone_same_sign_profile_leaves_a_positive_cross_term() {
        let net = rect(8, 4);
        let f = field_from(&net, |site, _| {
            2f64.powi(site.j as i32) * (1i64 << site.n) as f64
        });
        let metric = induced_metric(&f, &net).unwrap();
        for m in &metric {
            if m.site.j + 1 < net.layer_width(m.site.n) {
                // Interior forward difference: both species rise together,
                // so the cross term is strictly positive.
                let expect = 0.5f64.powi(m.site.n as i32);
                assert_eq!(m.components.g_jn, expect, "site {:?}", m.site);
            }
        }
    }

    #[test]
    fn per_layer_alternating_staggering_breaks_g_nn() {
        let mut config = NetworkConfig::rectangular(8, 4);
        config.parity_offset = ParityOffset::PerLayerAlternating;
        let net = build_network(config).unwrap();
        let f = closed_form_steady::<f64>(&net, 1.0, SignOrder::UdUp).unwrap();
        let metric = induced_metric(&f, &net).unwrap();
        for m in &metric {
            // One species doubles twice between layers, the other not at
            // all: the radial log-difference is 1 ± 1 and g_nn = (0+4)/2.
            assert_eq!(m.components.g_nn, 2.0);
        }
    }

    #[test]
    fn species_swap_and_global_scaling_leave_the_metric_unchanged() {
        let net = rect(8, 4);
        let f = closed_form_steady::<f64>(&net, 1.0, SignOrder::UdUp).unwrap();
        let sites = net.site_count();
        let mut swapped = f.clone();
        swapped.values.rotate_left(sites);
        let scaled = DistributionField {
            values: f.values.iter().map(|v| 16.0 * v).collect(),
            tick: 0,
        };
        let base = induced_metric(&f, &net).unwrap();
        for other in [swapped, scaled] {
            let m = induced_metric(&other, &net).unwrap();
            assert_eq!(m, base);
        }
    }

    #[test]
    fn sign_order_flip_keeps_the_metric() {
        let net = rect(8, 4);
        let up = closed_form_steady::<f64>(&net, 1.0, SignOrder::UdUp).unwrap();
        let down = closed_form_steady::<f64>(&net, 1.0, SignOrder::UdDown).unwrap();
        assert_eq!(
            induced_metric(&up, &net).unwrap(),
            induced_metric(&down, &net).unwrap()
        );
    }

    #[test]
    fn non_positive_values_name_the_site() {
        let net = rect(8, 4);
        let mut f = closed_form_steady::<f64>(&net, 1.0, SignOrder::UdUp).unwrap();
        let flat = net
            .flat_dof(DofIndex::new(Site::new(2, 1), SpeciesId::DU))
            .unwrap();
        f.values[flat] = 0.0;
        let err = induced_metric(&f, &net).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("j=2") && msg.contains("n=1") && msg.contains("DU"), "{msg}");
    }

    #[test]
    fn tree_mode_is_rejected() {
        let mut config = NetworkConfig::rectangular(8, 3);
        config.mode = Mode::Tree;
        config.radial_bc = RadialBc::Truncated;
        let net = build_network(config).unwrap();
        let f = DistributionField {
            values: vec![1.0; net.dof_count()],
            tick: 0,
        };
        assert!(matches!(
            induced_metric(&f, &net),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn dirichlet_horizontal_shrinks_the_interior()
    {
        let mut config = NetworkConfig::rectangular(8, 4);
        config.horizontal_bc = HorizontalBc::Dirichlet;
        let net = build_network(config).unwrap();
        assert_eq!(interior_sites(&net).len(), 21);
        assert_eq!(interior_sites(&rect(8, 4)).len(), 24);
    }

    #[test]
    fn poincare_rejects_non_positive_lattice_constant() {
        let m = MetricComponents {
            g_jj: 1.0f64,
            g_nn: 1.0,
            g_jn: 0.0,
        };
        assert!(to_poincare(&m, Site::new(0, 0), 0.0).is_err());
    }

    #[test]
    fn deviation_report_groups_by_layer() {
        let net = rect(8, 4);
        let f = closed_form_steady::<f64>(&net, 1.0, SignOrder::UdUp).unwrap();
        let metric = induced_metric(&f, &net).unwrap();
        let report = compare_ads2(&poincare_field(&metric, 1.0).unwrap());
        assert_eq!(report.per_layer.len(), 3);
        for (k, layer) in report.per_layer.iter().enumerate() {
            assert_eq!(layer.n, k);
            assert_eq!(layer.sites, 8);
        }
    }
}
