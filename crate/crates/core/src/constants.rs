//! Physical constants and derived scalar scales.
//!
//! All quantities carry documented unit annotations instead of a
//! unit-checking system; natural units (`c = ħ = ℓ_P = R_AdS = 1`) are the
//! default. The dimensionless master-equation coefficient `kappa` is always
//! computed through the chain *energy per pixel → Margolus–Levitin time →
//! 2·t_P / t_ML*, never returned as a literal, so the exact `π²`
//! cancellation doubles as a regression test.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fundamental inputs.
///
/// Units: `c` length/time, `hbar` action, `ell_p` length (the Planck length
/// of the three-dimensional bulk space-time), `r_ads` length (the AdS₃
/// curvature radius). All strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants<T> {
    pub c: T,
    pub hbar: T,
    pub ell_p: T,
    pub r_ads: T,
}

impl<T: Scalar> PhysicalConstants<T> {
    /// Natural units: `c = hbar = ell_p = r_ads = 1`.
    pub fn natural() -> Self {
        PhysicalConstants {
            c: T::one(),
            hbar: T::one(),
            ell_p: T::one(),
            r_ads: T::one(),
        }
    }

    /// Validated constructor; every field must be strictly positive and
    /// finite.
    pub fn new(c: T, hbar: T, ell_p: T, r_ads: T) -> Result<Self> {
        for (name, v) in [("c", c), ("hbar", hbar), ("ell_p", ell_p), ("r_ads", r_ads)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "physical constant {name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(PhysicalConstants { c, hbar, ell_p, r_ads })
    }

    /// Planck constant `h = 2π·hbar` (action).
    pub fn h(&self) -> T {
        let two = T::one() + T::one();
        two * T::PI() * self.hbar
    }

    /// Planck time `t_P = ell_p / c` (time).
    pub fn planck_time(&self) -> T {
        self.ell_p / self.c
    }
}

impl<T: Scalar> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self::natural()
    }
}

/// Scales derived from [`PhysicalConstants`].
///
/// Units: `epsilon_e` energy, `tension` energy/area, `t_ml` time, `kappa`
/// dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScales<T> {
    /// Energy per pixel of discretized area.
    pub epsilon_e: T,
    /// AdS₂ tension `epsilon_e / r_ads²`.
    pub tension: T,
    /// Margolus–Levitin time `h / (8·epsilon_e)`.
    pub t_ml: T,
    /// Master-equation coefficient `2·t_P / t_ml`; equals `1/π²` for any
    /// positive constants (the cancellation is exact).
    pub kappa: T,
}

impl<T: Scalar> DerivedScales<T> {
    /// Derives every scale from the constants through the full chain.
    pub fn from_constants(pc: &PhysicalConstants<T>) -> Result<Self> {
        let epsilon_e = energy_per_pixel(pc);
        let t_ml = margolus_levitin_time(epsilon_e, pc)?;
        Ok(DerivedScales {
            epsilon_e,
            tension: epsilon_e / (pc.r_ads * pc.r_ads),
            t_ml,
            kappa: diffusion_coefficient(pc),
        })
    }
}

/// Energy per pixel `ε_E = c·hbar / (8π·ell_p)` (energy).
pub fn energy_per_pixel<T: Scalar>(pc: &PhysicalConstants<T>) -> T {
    let eight = T::from_coeff(8);
    pc.c * pc.hbar / (eight * T::PI() * pc.ell_p)
}

/// Margolus–Levitin time `t_ML = h / (8·ε_E)` (time): the minimum time for
/// an orthogonal transition at mean energy `ε_E`.
pub fn margolus_levitin_time<T: Scalar>(epsilon_e: T, pc: &PhysicalConstants<T>) -> Result<T> {
    if !(epsilon_e > T::zero()) {
        return Err(Error::Domain(format!(
            "energy per pixel must be strictly positive, got {epsilon_e}"
        )));
    }
    let eight = T::from_coeff(8);
    Ok(pc.h() / (eight * epsilon_e))
}

/// Dimensionless diffusion coefficient `kappa = 2·t_P / t_ML`.
///
/// Computed through [`energy_per_pixel`] and [`margolus_levitin_time`];
/// the `π²` cancellation makes the result `1/π²` for every valid constant
/// set, and keeping the chain explicit turns that identity into a
/// regression test rather than a definition.
pub fn diffusion_coefficient<T: Scalar>(pc: &PhysicalConstants<T>) -> T {
    let epsilon_e = energy_per_pixel(pc);
    let t_ml = margolus_levitin_time(epsilon_e, pc)
        .expect("energy_per_pixel of valid constants is positive");
    let two = T::one() + T::one();
    two * pc.planck_time() / t_ml
}

/// Action of the network, `I = −hbar · area_TN`, with `area_TN` the
/// dimensionless pixel count (one pixel of area `r_ads²` per site).
pub fn chtn_action<T: Scalar>(area_tn: T, pc: &PhysicalConstants<T>) -> Result<T> {
    if area_tn < T::zero() {
        return Err(Error::Domain(format!(
            "pixel area must be non-negative, got {area_tn}"
        )));
    }
    Ok(-(pc.hbar * area_tn))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::{assert_abs_diff_eq, assert_relative_eq};

    use super::*;
    use crate::rng::Lcg64;
    use crate::tolerances;

    #[test]
    fn natural_units_energy_per_pixel() {
        let pc = PhysicalConstants::<f64>::natural();
        assert_relative_eq!(energy_per_pixel(&pc), 1.0 / (8.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn energy_per_pixel_scales_linearly() {
        let pc = PhysicalConstants::new(2.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(energy_per_pixel(&pc), 2.0 / (8.0 * PI), max_relative = 1e-15);
        let pc = PhysicalConstants::new(1.0, 1.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(energy_per_pixel(&pc), 1.0 / (16.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn natural_units_margolus_levitin_time() {
        let pc = PhysicalConstants::<f64>::natural();
        let e = energy_per_pixel(&pc);
        let t = margolus_levitin_time(e, &pc).unwrap();
        assert_relative_eq!(t, 2.0 * PI * PI, max_relative = 1e-14);
    }

    #[test]
    fn margolus_levitin_inverse_in_energy() {
        let pc = PhysicalConstants::<f64>::natural();
        let e = energy_per_pixel(&pc);
        let t1 = margolus_levitin_time(e, &pc).unwrap();
        let t2 = margolus_levitin_time(2.0 * e, &pc).unwrap();
        assert_relative_eq!(t1, 2.0 * t2, max_relative = 1e-14);
    }

    #[test]
    fn margolus_levitin_depends_only_on_h_and_energy() {
        let base = PhysicalConstants::<f64>::natural();
        let fast = PhysicalConstants::new(3.0, 1.0, 1.0, 1.0).unwrap();
        let e = energy_per_pixel(&base);
        let ta = margolus_levitin_time(e, &base).unwrap();
        let tb = margolus_levitin_time(e, &fast).unwrap();
        assert_eq!(ta, tb);
    }

    #[test]
    fn margolus_levitin_rejects_non_positive_energy() {
        let pc = PhysicalConstants::<f64>::natural();
        assert!(matches!(
            margolus_levitin_time(0.0, &pc),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            margolus_levitin_time(-1.0, &pc),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn kappa_is_inverse_pi_squared() {
        let pc = PhysicalConstants::<f64>::natural();
        assert_relative_eq!(
            diffusion_coefficient(&pc),
            1.0 / (PI * PI),
            max_relative = tolerances::KAPPA_INVARIANT_REL_TOL
        );
        let sevens = PhysicalConstants::new(7.0, 7.0, 7.0, 7.0).unwrap();
        assert_relative_eq!(
            diffusion_coefficient(&sevens),
            1.0 / (PI * PI),
            max_relative = tolerances::KAPPA_INVARIANT_REL_TOL
        );
    }

    #[test]
    fn kappa_cancellation_over_randomized_constants() {
        let mut rng = Lcg64::new(42);
        let expect = 1.0 / (PI * PI);
        for _ in 0..100 {
            let mut draw = || 10f64.powf(6.0 * (rng.next_unit() - 0.5));
            let pc = PhysicalConstants::new(draw(), draw(), draw(), draw()).unwrap();
            let kappa = diffusion_coefficient(&pc);
            assert!(
                ((kappa - expect) / expect).abs() <= tolerances::KAPPA_REL_TOL,
                "kappa = {kappa} for {pc:?}"
            );
        }
    }

    #[test]
    fn h_over_hbar_is_two_pi() {
        let pc = PhysicalConstants::new(1.0, 3.25, 1.0, 1.0).unwrap();
        assert_relative_eq!(
            pc.h() / pc.hbar,
            2.0 * PI,
            max_relative = tolerances::TWO_PI_REL_TOL
        );
    }

    #[test]
    fn derived_scales_chain() {
        let pc = PhysicalConstants::<f64>::natural();
        let scales = DerivedScales::from_constants(&pc).unwrap();
        assert_relative_eq!(scales.epsilon_e, 1.0 / (8.0 * PI), max_relative = 1e-15);
        assert_relative_eq!(scales.tension, scales.epsilon_e, max_relative = 1e-15);
        assert_relative_eq!(scales.t_ml, 2.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(
            scales.kappa,
            1.0 / (PI * PI),
            max_relative = tolerances::KAPPA_INVARIANT_REL_TOL
        );
    }

    #[test]
    fn action_examples() {
        let pc = PhysicalConstants::<f64>::natural();
        assert_abs_diff_eq!(chtn_action(0.0, &pc).unwrap(), 0.0);
        assert_abs_diff_eq!(chtn_action(12.0, &pc).unwrap(), -12.0);
        let pc2 = PhysicalConstants::new(1.0, 2.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(chtn_action(5.0, &pc2).unwrap(), -10.0);
        assert!(matches!(chtn_action(-1.0, &pc), Err(Error::Domain(_))));
    }

    #[test]
    fn action_is_non_positive_and_linear() {
        let mut rng = Lcg64::new(7);
        let pc = PhysicalConstants::<f64>::natural();
        for _ in 0..50 {
            let a = 40.0 * rng.next_unit();
            let b = 40.0 * rng.next_unit();
            let ia = chtn_action(a, &pc).unwrap();
            let ib = chtn_action(b, &pc).unwrap();
            let iab = chtn_action(a + b, &pc).unwrap();
            assert!(ia <= 0.0);
            assert_relative_eq!(iab, ia + ib, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn homogeneity_of_energy_per_pixel() {
        let pc = PhysicalConstants::new(1.3, 0.7, 2.9, 1.0).unwrap();
        let scaled = PhysicalConstants::new(2.0 * 1.3, 3.0 * 0.7, 5.0 * 2.9, 1.0).unwrap();
        let expect = energy_per_pixel(&pc) * 2.0 * 3.0 / 5.0;
        assert_relative_eq!(energy_per_pixel(&scaled), expect, max_relative = 1e-13);
    }

    #[test]
    fn rejects_non_positive_constants() {
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let pc = PhysicalConstants::<f32>::natural();
        let kappa = diffusion_coefficient(&pc);
        assert!((kappa - 1.0 / (std::f32::consts::PI * std::f32::consts::PI)).abs() < 1e-6);
    }
}
