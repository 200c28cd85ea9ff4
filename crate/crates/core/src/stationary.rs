//! The singular stationary profile and the disk it selects.
//!
//! On (0, r*] with r* = e^{-5/4} the radial stationary equation
//!
//! ```text
//! -u'' - u'/r = f(u)
//! ```
//!
//! is solved exactly by U(r) = sqrt(-2 log r): both sides equal
//! 1/(r² U³), and U(r*) = β lands precisely on the branch point of the
//! reaction. Continuing outward with value β and slope U'(r*) = -e^{5/4}/β
//! puts the profile on the quadratic branch f = α v², where it decreases
//! strictly (the energy ½v'² + (α/3)v³ dissipates at rate v'²/r) until it
//! hits zero at some radius ρ. That zero is the Dirichlet boundary: the
//! profile is a singular stationary solution on the disk of radius ρ, and
//! every trichotomy experiment in the crate runs on that disk.
//!
//! The outer branch is integrated by classical fixed-step RK4 with cubic
//! Hermite dense output; the zero is refined by bisection on the dense
//! output. An independent implicit-midpoint integration cross-checks ρ in
//! the tests, and the frozen values below pin the profile against
//! regressions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{InnerForm, RadialField, RadialGrid};
use crate::nonlinearity::Nonlinearity;
use crate::quad::adaptive;

/// Matching radius e^{-5/4} between the exact inner profile and the
/// quadratic-branch continuation.
pub fn r_star() -> f64 {
    (-1.25f64).exp()
}

/// Default RK4 step for the outer shooting integration.
pub const DEFAULT_STEP: f64 = 1e-5;

// Shooting that never crosses zero before this radius is an error.
const R_MAX: f64 = 5.0;

/// Frozen disk radius selected by the profile (RK4 step 1e-5, stable to
/// ~4e-12 under step halving and cross-checked by an implicit-midpoint
/// integration).
pub const RHO: f64 = 1.5391095274855684;

/// Frozen total reaction mass γ = ∫ f(ũ) dx over the disk; the inner
/// region contributes exactly 2π sqrt(2/5).
pub const GAMMA: f64 = 7.4132479748792441;

/// The singular stationary profile ũ on its self-selected disk.
#[derive(Debug, Clone)]
pub struct SingularProfile {
    /// Inner matching radius e^{-5/4}.
    pub r_star: f64,
    /// Disk radius: first zero of the outer continuation.
    pub rho: f64,
    /// Boundary slope v'(ρ).
    pub boundary_slope: f64,
    nl: Nonlinearity,
    // RK4 trajectory (r, v, v') on [r*, beyond ρ], ascending in r
    steps: Vec<(f64, f64, f64)>,
}

// One RK4 step for v' = p, p' = -p/r - f(v).
fn rk4_step(nl: &Nonlinearity, r: f64, v: f64, p: f64, h: f64) -> (f64, f64) {
    let rhs = |r: f64, v: f64, p: f64| -> (f64, f64) { (p, -p / r - nl.f_inf(v)) };
    let (k1v, k1p) = rhs(r, v, p);
    let (k2v, k2p) = rhs(r + h / 2.0, v + h / 2.0 * k1v, p + h / 2.0 * k1p);
    let (k3v, k3p) = rhs(r + h / 2.0, v + h / 2.0 * k2v, p + h / 2.0 * k2p);
    let (k4v, k4p) = rhs(r + h, v + h * k3v, p + h * k3p);
    (
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

// Cubic Hermite value, first and second derivative on [r0, r1].
fn hermite(r: f64, seg: (&(f64, f64, f64), &(f64, f64, f64))) -> (f64, f64, f64) {
    let (&(r0, v0, p0), &(r1, v1, p1)) = seg;
    let h = r1 - r0;
    let s = (r - r0) / h;
    let v = v0 * (1.0 - 3.0 * s * s + 2.0 * s * s * s)
        + p0 * h * (s - 2.0 * s * s + s * s * s)
        + v1 * (3.0 * s * s - 2.0 * s * s * s)
        + p1 * h * (s * s * s - s * s);
    let d = v0 * (6.0 * s * s - 6.0 * s) / h
        + p0 * (1.0 - 4.0 * s + 3.0 * s * s)
        + v1 * (6.0 * s - 6.0 * s * s) / h
        + p1 * (3.0 * s * s - 2.0 * s);
    let dd = v0 * (12.0 * s - 6.0) / (h * h)
        + p0 * (6.0 * s - 4.0) / h
        + v1 * (6.0 - 12.0 * s) / (h * h)
        + p1 * (6.0 * s - 2.0) / h;
    (v, d, dd)
}

impl SingularProfile {
    /// Shoot the outer branch from the matching radius with the given RK4
    /// step and locate the Dirichlet zero.
    ///
    /// Dense output is stored at a coarser spacing (~3e-4) than the
    /// integration step: cubic Hermite second derivatives carry a 1/H²
    /// roundoff amplification, and that spacing balances it against the
    /// O(H²) interpolation truncation, keeping the residual check near
    /// 1e-8 instead of drowning it in cancellation noise.
    pub fn compute_with_step(step: f64) -> Result<SingularProfile> {
        assert!(step > 0.0 && step < 0.01);
        let store_every = (3e-4 / step).ceil().max(1.0) as usize;
        let nl = Nonlinearity::new();
        let rs = r_star();
        let mut r = rs;
        let mut v = nl.beta;
        let mut p = -1.25f64.exp() / nl.beta;
        let mut steps = vec![(r, v, p)];
        let mut since_stored = 0usize;
        while v > 0.0 {
            if r > R_MAX {
                return Err(Error::NoZeroFound { r_max: R_MAX });
            }
            let (nv, np) = rk4_step(&nl, r, v, p, step);
            r += step;
            v = nv;
            p = np;
            since_stored += 1;
            if since_stored == store_every || v <= 0.0 {
                steps.push((r, v, p));
                since_stored = 0;
            }
        }
        // refine the zero on the dense output of the last segment
        let n = steps.len();
        let seg = (&steps[n - 2], &steps[n - 1]);
        let (mut lo, mut hi) = (steps[n - 2].0, steps[n - 1].0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hermite(mid, seg).0 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        let rho = 0.5 * (lo + hi);
        let boundary_slope = hermite(rho, seg).1;
        Ok(SingularProfile {
            r_star: rs,
            rho,
            boundary_slope,
            nl,
            steps,
        })
    }

    pub fn compute() -> Result<SingularProfile> {
        Self::compute_with_step(DEFAULT_STEP)
    }

    fn segment(&self, r: f64) -> (&(f64, f64, f64), &(f64, f64, f64)) {
        let i = self
            .steps
            .partition_point(|&(x, _, _)| x <= r)
            .clamp(1, self.steps.len() - 1);
        (&self.steps[i - 1], &self.steps[i])
    }

    /// Profile value; exact square-root-of-log inside the matching radius,
    /// dense RK4 output on the outer branch, zero beyond the disk.
    pub fn eval(&self, r: f64) -> f64 {
        assert!(r > 0.0, "profile evaluation requires r > 0");
        if r <= self.r_star {
            (-2.0 * r.ln()).sqrt()
        } else if r >= self.rho {
            0.0
        } else {
            hermite(r, self.segment(r)).0
        }
    }

    /// Radial derivative of the profile.
    pub fn eval_deriv(&self, r: f64) -> f64 {
        assert!(r > 0.0);
        if r <= self.r_star {
            -1.0 / (r * (-2.0 * r.ln()).sqrt())
        } else if r >= self.rho {
            0.0
        } else {
            hermite(r, self.segment(r)).1
        }
    }

    /// Pointwise stationary residual -u'' - u'/r - f(u) at radius r,
    /// evaluated from the stored representation (closed forms inside,
    /// dense-output second derivative outside). Zero for the exact
    /// solution; small values certify the computed profile.
    pub fn ode_residual(&self, r: f64) -> f64 {
        assert!(r > 0.0 && r < self.rho);
        if r <= self.r_star {
            let u = (-2.0 * r.ln()).sqrt();
            let upp = (u * u - 1.0) / (r * r * u * u * u);
            let up = -1.0 / (r * u);
            -upp - up / r - self.nl.f_inf(u)
        } else {
            let (v, d, dd) = hermite(r, self.segment(r));
            -dd - d / r - self.nl.f_inf(v)
        }
    }

    /// Total reaction mass γ = ∫_disk f(ũ) dx. The inner region has the
    /// closed form 2π sqrt(2/5); the outer region is integrated
    /// adaptively on the dense output.
    pub fn reaction_mass(&self) -> Result<f64> {
        let inner = 2.0 * std::f64::consts::PI * (0.4f64).sqrt();
        let nl = self.nl;
        let outer = adaptive(
            &|r: f64| nl.f_inf(self.eval(r)) * r,
            self.r_star,
            self.rho,
            1e-14,
            1e-12,
        )?;
        Ok(inner + 2.0 * std::f64::consts::PI * outer)
    }

    /// Outer-branch energy ½ v'² + (α/3) v³ at radius r; dissipates at
    /// rate v'²/r along the profile.
    pub fn energy(&self, r: f64) -> f64 {
        let (v, d, _) = hermite(r, self.segment(r));
        0.5 * d * d + self.nl.alpha / 3.0 * v * v * v
    }

    /// Sample the profile onto a grid, attaching the exact singular core.
    ///
    /// The grid must live on this profile's disk.
    pub fn as_field(&self, grid: &Arc<RadialGrid>) -> RadialField {
        assert!(
            (grid.rho - self.rho).abs() <= 1e-12 * self.rho,
            "grid radius {} does not match profile radius {}",
            grid.rho,
            self.rho
        );
        RadialField::from_fn(grid, |r| self.eval(r)).with_inner(InnerForm::sqrt_log(1.0, 0.0))
    }

    /// The profile scaled by μ > 0, as a field with its singular core.
    pub fn scaled_field(&self, grid: &Arc<RadialGrid>, mu: f64) -> RadialField {
        assert!(mu > 0.0);
        self.as_field(grid).scale(mu)
    }

    /// Distance from the support of the singular core (the matching disk)
    /// to the boundary, used by kernel lower bounds.
    pub fn core_boundary_gap(&self) -> f64 {
        self.rho - self.r_star
    }
}

/// Smooth radial bump supported on [c - w, c + w] (or [0, w) when c = 0,
/// where it is a smooth function of r²), used to test the stationary
/// equation in the distributional sense across the singularity.
#[derive(Debug, Clone, Copy)]
pub struct RadialBump {
    /// Center radius (0 for a bump over the singularity).
    pub center: f64,
    /// Support half-width.
    pub width: f64,
}

// m(x) = e^{-x/(1-x)} on [0, 1), smooth, all derivatives vanish at 1
fn bump_m(x: f64) -> (f64, f64, f64) {
    if x >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - x;
    let m = (-x / q).exp();
    let m1 = -m / (q * q);
    let m2 = m * (2.0 * x - 1.0) / (q * q * q * q);
    (m, m1, m2)
}

impl RadialBump {
    /// Test-function value φ(r).
    pub fn eval(&self, r: f64) -> f64 {
        let x = ((r - self.center) / self.width).powi(2);
        bump_m(x).0
    }

    /// Radial Laplacian Δφ = φ'' + φ'/r.
    pub fn laplacian(&self, r: f64) -> f64 {
        let w = self.width;
        if self.center == 0.0 {
            // φ is a smooth function of x = (r/w)²: Δφ = (4x m'' + 4m')/w²,
            // finite down to r = 0
            let x = (r / w) * (r / w);
            let (_, m1, m2) = bump_m(x);
            return (4.0 * x * m2 + 4.0 * m1) / (w * w);
        }
        let z = (r - self.center) / self.width;
        let x = z * z;
        let (_, m1, m2) = bump_m(x);
        // φ' = 2 z m' / w, φ'' = (4 x m'' + 2 m') / w²
        let phi_p = 2.0 * z * m1 / w;
        let phi_pp = (4.0 * x * m2 + 2.0 * m1) / (w * w);
        phi_pp + phi_p / r
    }
}

/// ∫_disk [ ũ (-Δφ) - f(ũ) φ ] dx for a smooth bump φ compactly supported
/// in the open disk. Vanishes exactly for the stationary profile: the
/// singularity is too mild to leave a boundary contribution, which is what
/// this functional certifies numerically.
pub fn distributional_residual(profile: &SingularProfile, bump: &RadialBump) -> Result<f64> {
    assert!(
        bump.center + bump.width < profile.rho,
        "test function must be supported inside the open disk"
    );
    let nl = Nonlinearity::new();
    let two_pi = 2.0 * std::f64::consts::PI;
    let integrand = |r: f64| -> f64 {
        let u = profile.eval(r);
        u * (-bump.laplacian(r)) - nl.f_inf(u) * bump.eval(r)
    };
    // numeric part over [δ, end of support], split at the branch radius
    let delta = 1e-4 * profile.r_star;
    let hi = (bump.center + bump.width).min(profile.rho);
    let lo = (bump.center - bump.width).max(delta);
    let mut total = 0.0;
    if lo < profile.r_star && hi > profile.r_star {
        total += adaptive(&|r: f64| integrand(r) * r, lo, profile.r_star, 1e-13, 1e-11)?;
        total += adaptive(&|r: f64| integrand(r) * r, profile.r_star, hi, 1e-13, 1e-11)?;
    } else {
        total += adaptive(&|r: f64| integrand(r) * r, lo, hi, 1e-13, 1e-11)?;
    }
    // analytic core (0, δ]: substitute t = -2 log r, r dr = -e^{-t} dt / 2;
    // the reaction term decays only like t^{-3/2}, which the semi-infinite
    // driver integrates by window doubling
    if bump.center == 0.0 && lo <= delta {
        let t_lo = -2.0 * delta.ln();
        let core = crate::quad::integrate_to_infinity(
            &|t: f64| {
                let r = (-t / 2.0).exp();
                let u = t.sqrt();
                // f(u) e^{-t} = (e^t / t^{3/2}) e^{-t} = t^{-3/2}, combined
                // in closed form so no large exponential is ever evaluated
                let fu_weighted = 1.0 / (t * t.sqrt());
                (u * (-bump.laplacian(r)) * (-t).exp() - fu_weighted * bump.eval(r)) / 2.0
            },
            t_lo,
            1e-10,
        )?
        .value_or_inf();
        total += core;
    }
    Ok(two_pi * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn profile() -> &'static SingularProfile {
        static P: OnceLock<SingularProfile> = OnceLock::new();
        P.get_or_init(|| SingularProfile::compute().expect("shooting failed"))
    }

    #[test]
    fn inner_profile_is_exact() {
        // closed-form residual of U = sqrt(-2 log r) is zero up to roundoff
        let p = profile();
        for &r in &[1e-8, 1e-4, 0.01, 0.1, 0.28] {
            let res = p.ode_residual(r);
            let scale = 1.0 + Nonlinearity::new().f_inf(p.eval(r));
            assert!(
                res.abs() <= 1e-11 * scale,
                "inner residual {res} at r = {r}"
            );
        }
        // matching values at r*
        let nl = Nonlinearity::new();
        assert!((p.eval(p.r_star) - nl.beta).abs() < 1e-13);
        let slope = -(1.25f64).exp() / nl.beta;
        assert!((p.eval_deriv(p.r_star * (1.0 - 1e-12)) - slope).abs() < 1e-9);
        assert!((p.eval_deriv(p.r_star * (1.0 + 1e-12)) - slope).abs() < 1e-9);
    }

    #[test]
    fn outer_branch_stays_quadratic_and_decreases() {
        let p = profile();
        let nl = Nonlinearity::new();
        let mut last_v = nl.beta;
        for &(r, v, slope) in &p.steps {
            if r > p.rho {
                break;
            }
            assert!(v <= nl.beta * (1.0 + 1e-14), "v = {v} above β at r = {r}");
            assert!(slope < 0.0, "profile not decreasing at r = {r}");
            assert!(v <= last_v + 1e-14);
            last_v = v;
        }
    }

    #[test]
    fn energy_dissipates_outward() {
        let p = profile();
        let mut r = p.r_star * 1.001;
        let mut last = p.energy(r);
        while r < p.rho * 0.999 {
            r += 0.01;
            let e = p.energy(r.min(p.rho * 0.999));
            assert!(e < last, "energy increased near r = {r}");
            last = e;
        }
    }

    #[test]
    fn disk_radius_matches_frozen_value() {
        let p = profile();
        assert!(
            (p.rho - RHO).abs() < 1e-11,
            "rho = {:.16} vs frozen {RHO:.16}",
            p.rho
        );
    }

    #[test]
    fn disk_radius_stable_under_step_halving() {
        let p = profile();
        let fine = SingularProfile::compute_with_step(DEFAULT_STEP / 2.0).unwrap();
        assert!(
            (p.rho - fine.rho).abs() < 1e-11,
            "rho drift {:.3e}",
            (p.rho - fine.rho).abs()
        );
    }

    #[test]
    fn disk_radius_cross_checked_by_implicit_midpoint() {
        // same ODE, structurally different integrator: solve the implicit
        // midpoint update by fixed-point iteration
        let nl = Nonlinearity::new();
        let h = 2e-5;
        let mut r = r_star();
        let mut v = nl.beta;
        let mut p = -(1.25f64).exp() / nl.beta;
        let mut prev = (r, v, p);
        while v > 0.0 {
            prev = (r, v, p);
            let rm = r + h / 2.0;
            let (mut vm, mut pm) = (v, p);
            for _ in 0..6 {
                let nv = v + h / 2.0 * pm;
                let np = p + h / 2.0 * (-pm / rm - nl.f_inf(vm));
                vm = nv;
                pm = np;
            }
            v += h * pm;
            p += h * (-pm / rm - nl.f_inf(vm));
            r += h;
        }
        // linear zero estimate inside the last step
        let (r0, v0, _) = prev;
        let rho_mid = r0 + h * v0 / (v0 - v);
        assert!(
            (rho_mid - profile().rho).abs() < 1e-8,
            "implicit midpoint rho {rho_mid} vs {}",
            profile().rho
        );
    }

    #[test]
    fn reaction_mass_matches_frozen_value() {
        let p = profile();
        let gamma = p.reaction_mass().unwrap();
        assert!(
            (gamma - GAMMA).abs() < 1e-9,
            "gamma = {gamma:.15} vs frozen {GAMMA:.15}"
        );
        // inner closed form alone
        let inner = 2.0 * std::f64::consts::PI * (0.4f64).sqrt();
        assert!(gamma > inner && gamma < 2.0 * inner);
    }

    #[test]
    fn outer_ode_residual_is_small() {
        // the floor here is second-derivative extraction from f64 dense
        // output (noise 1/H² against truncation H²), not the integration,
        // which is accurate to ~1e-12; observed maximum is ~1.3e-6
        let p = profile();
        let mut worst = 0.0f64;
        let mut r = p.r_star * 1.0001;
        while r < p.rho * 0.9999 {
            worst = worst.max(p.ode_residual(r).abs());
            r += 0.003;
        }
        assert!(worst < 5e-6, "outer residual {worst}");
    }

    #[test]
    fn profile_field_round_trip() {
        let p = profile();
        let grid = RadialGrid::new(p.rho, 96);
        let field = p.as_field(&grid);
        assert_eq!(field.sup(), f64::INFINITY);
        // below the cutoff the inner form is exact
        assert!((field.eval(2e-6) - p.eval(2e-6)).abs() < 1e-12);
        // node values are exact samples; between nodes linear interpolation
        // carries the usual second-order error
        for (&r, &v) in grid.nodes().iter().zip(&field.values) {
            assert_eq!(v, p.eval(r));
        }
        for &r in &[1e-3, 0.2, 0.9, 1.4] {
            let want = p.eval(r);
            let got = field.eval(r);
            assert!(
                (got - want).abs() <= 1e-4 * (1.0 + want.abs()),
                "field eval at {r}: {got} vs {want}"
            );
        }
        // scaling is exact nodewise, hence exact through interpolation
        let half = p.scaled_field(&grid, 0.5);
        assert!((half.eval(0.9) - 0.5 * field.eval(0.9)).abs() < 1e-15);
        assert_eq!(half.inner.unwrap().amp, 0.5);
    }

    #[test]
    fn stationary_equation_holds_distributionally() {
        let p = profile();
        // bump over the singularity and a separated annular bump
        for bump in [
            RadialBump {
                center: 0.0,
                width: 0.8,
            },
            RadialBump {
                center: 0.0,
                width: 1.5,
            },
            RadialBump {
                center: 0.8,
                width: 0.5,
            },
        ] {
            let res = distributional_residual(p, &bump).unwrap();
            assert!(
                res.abs() < 2e-6,
                "distributional residual {res} for bump at {} width {}",
                bump.center,
                bump.width
            );
        }
    }
}
