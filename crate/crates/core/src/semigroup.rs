//! Dirichlet heat semigroup on the disk, realized spectrally.
//!
//! The Laplacian on B_ρ with zero boundary data has radial eigenfunctions
//! `e_n(r) = J₀(j_n r/ρ) / (√π ρ |J₁(j_n)|)` and eigenvalues
//! `λ_n = (j_n/ρ)²`, where `j_n` runs over the positive zeros of J₀.
//! The semigroup acts diagonally: e^{tΔ} Σ c_n e_n = Σ c_n e^{-λ_n t} e_n.
//! Coefficients of a radial field come from disk quadrature over the
//! gridded annulus plus a closed-form tail integral over the singular
//! core, with the growth and decay exponents of the tail assembled
//! algebraically before exponentiation.
//!
//! Beyond the transform itself the module carries the comparison
//! machinery the solvers lean on: the convexity inequality
//! H(e^{tΔ}φ) ≤ e^{tΔ}H(φ), the gauge-norm contraction, smoothing
//! ratios against the sharp decay scales t^{-1/p} (log(1/t+1))^{-1/2}
//! and t^{1/r-1/p}, and the Gaussian floor for the kernel at the origin
//! with its mass factor 1 - e^{-d²/t}(2 + 4d²/t).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bessel::{j0, j0_zeros, j1};
use crate::error::{Error, Result};
use crate::field::{RadialField, RadialGrid};
use crate::nonlinearity::Nonlinearity;
use crate::quad::{integrate_to_infinity, Integral};
use crate::spaces;

/// Fewer modes leave the comparison checks meaningless.
const MIN_MODES: usize = 4;
/// Mode cap; the grid and shape table grow quadratically past this.
const MAX_MODES: usize = 4096;
/// Grid sizing: boundary panels per mode, as a ratio, floored at 64.
/// Three panels per two modes keeps the highest mode under one GL8
/// oscillation per panel.
const PANELS_PER_MODE: (usize, usize) = (3, 2);
const MIN_PANELS: usize = 64;
/// Residual cap for accepted eigenvalue table entries.
const ZERO_RESIDUAL_CAP: f64 = 1e-12;
/// Relative tolerance of the singular-core coefficient integrals.
const CORE_TOL: f64 = 1e-12;
/// Trailing coefficients pooled into the truncation-tail envelope.
const TAIL_SAMPLE: usize = 8;
/// Tail mass above this multiple of the resolved mass flags truncation.
const TAIL_FRACTION: f64 = 1e-8;

/// Truncation diagnostic attached to a semigroup application.
#[derive(Debug, Clone, Copy)]
pub struct TailReport {
    /// ℓ² mass of the resolved, time-decayed coefficient vector.
    pub resolved: f64,
    /// Envelope estimate of the unresolved tail: ℓ² mass of the last
    /// few decayed coefficients, assuming a non-increasing envelope.
    pub tail: f64,
    /// The tail estimate exceeds `TAIL_FRACTION` times the resolved mass.
    pub flagged: bool,
}

/// Spectral realization of e^{tΔ} on the disk of radius ρ.
pub struct DiskSemigroup {
    rho: f64,
    grid: Arc<RadialGrid>,
    zeros: Vec<f64>,
    lambdas: Vec<f64>,
    norms: Vec<f64>,
    /// Row-major mode shapes at the grid nodes: `shapes[n * len + i] = e_n(r_i)`.
    shapes: Vec<f64>,
}

impl DiskSemigroup {
    /// Grid sized for `modes` modes: the default for a fresh semigroup.
    pub fn default_grid(rho: f64, modes: usize) -> Arc<RadialGrid> {
        let panels = MIN_PANELS.max(modes * PANELS_PER_MODE.0 / PANELS_PER_MODE.1);
        RadialGrid::new(rho, panels)
    }

    pub fn new(rho: f64, modes: usize) -> Result<DiskSemigroup> {
        let grid = DiskSemigroup::default_grid(rho, modes);
        DiskSemigroup::with_grid(rho, modes, &grid)
    }

    /// Build on a caller-supplied grid so several operators share nodes.
    /// The grid must resolve the highest mode; `default_grid` gives three
    /// boundary panels per two modes.
    pub fn with_grid(rho: f64, modes: usize, grid: &Arc<RadialGrid>) -> Result<DiskSemigroup> {
        if !(rho > 0.0) || grid.rho != rho {
            return Err(Error::InvalidParameter {
                what: "semigroup radius",
                detail: format!("rho = {rho}, grid radius = {}", grid.rho),
            });
        }
        if !(MIN_MODES..=MAX_MODES).contains(&modes) {
            return Err(Error::InvalidParameter {
                what: "semigroup modes",
                detail: format!("modes = {modes}, usable range {MIN_MODES}..={MAX_MODES}"),
            });
        }
        let zeros = j0_zeros(modes);
        let mut lambdas = Vec::with_capacity(modes);
        let mut norms = Vec::with_capacity(modes);
        for &z in &zeros {
            if j0(z).abs() > ZERO_RESIDUAL_CAP {
                return Err(Error::InvalidParameter {
                    what: "eigenvalue table",
                    detail: format!("residual {:e} at zero {z}", j0(z).abs()),
                });
            }
            lambdas.push((z / rho) * (z / rho));
            norms.push(1.0 / (PI.sqrt() * rho * j1(z).abs()));
        }
        let len = grid.len();
        let mut shapes = vec![0.0; modes * len];
        for (n, &z) in zeros.iter().enumerate() {
            let k = z / rho;
            for (i, &r) in grid.nodes().iter().enumerate() {
                shapes[n * len + i] = norms[n] * j0(k * r);
            }
        }
        Ok(DiskSemigroup {
            rho,
            grid: Arc::clone(grid),
            zeros,
            lambdas,
            norms,
            shapes,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn modes(&self) -> usize {
        self.zeros.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambdas
    }

    /// e_n evaluated at an arbitrary radius, r = 0 included.
    pub fn eval_mode(&self, n: usize, r: f64) -> f64 {
        self.norms[n] * j0(self.zeros[n] * r / self.rho)
    }

    fn shape_row(&self, n: usize) -> &[f64] {
        let len = self.grid.len();
        &self.shapes[n * len..(n + 1) * len]
    }

    /// Mode coefficients c_n = ∫_B u e_n dx of a radial field.
    ///
    /// The field must live on this semigroup's grid. A singular core
    /// contributes a semi-infinite tail integral in t = -2 log r; its
    /// linear exponent `pow/2 - 1` is assembled before exponentiation so
    /// the two growth scales never cancel in floating point.
    pub fn coefficients(&self, u: &RadialField) -> Result<Vec<f64>> {
        if u.grid.len() != self.grid.len() || u.grid.rho != self.rho {
            return Err(Error::InvalidParameter {
                what: "semigroup data",
                detail: "field does not live on the semigroup grid".to_string(),
            });
        }
        let nodes = self.grid.nodes();
        let weights = self.grid.weights();
        let t_lo = self.grid.t_lo();
        let mut coeffs = Vec::with_capacity(self.modes());
        for n in 0..self.modes() {
            let row = self.shape_row(n);
            let mut node_sum = 0.0;
            for i in 0..nodes.len() {
                node_sum += weights[i] * nodes[i] * u.values[i] * row[i];
            }
            let core = match &u.inner {
                None => u.inner_patch(|r, v| v * self.eval_mode(n, r)),
                Some(form) => {
                    let sign = form.amp.signum();
                    let c0 = form.amp.abs().ln();
                    let c_lin = 0.5 * form.pow - 1.0;
                    let (shift, logpow) = (form.shift, form.logpow);
                    let k = self.zeros[n] / self.rho;
                    let res = integrate_to_infinity(
                        &|t: f64| {
                            let e = c0 + c_lin * t - logpow * (shift + t).ln();
                            sign * e.exp() * j0(k * (-0.5 * t).exp())
                        },
                        t_lo,
                        CORE_TOL,
                    )?;
                    match res {
                        Integral::Finite(v) => self.norms[n] * 0.5 * v,
                        Integral::Divergent => {
                            return Err(Error::InvalidParameter {
                                what: "semigroup data",
                                detail: "singular core is not integrable against the mode basis"
                                    .to_string(),
                            })
                        }
                    }
                }
            };
            coeffs.push(2.0 * PI * (node_sum + core));
        }
        Ok(coeffs)
    }

    /// Coefficients after time t under the diagonal flow.
    pub fn decayed(&self, coeffs: &[f64], t: f64) -> Vec<f64> {
        assert!(t >= 0.0 && coeffs.len() <= self.modes());
        coeffs
            .iter()
            .zip(&self.lambdas)
            .map(|(&c, &lam)| c * (-lam * t).exp())
            .collect()
    }

    /// Node values of Σ c_n e_n. The result carries no singular core.
    pub fn synthesize(&self, coeffs: &[f64]) -> RadialField {
        assert!(coeffs.len() <= self.modes());
        let len = self.grid.len();
        let mut values = vec![0.0; len];
        for (n, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = self.shape_row(n);
            for i in 0..len {
                values[i] += c * row[i];
            }
        }
        RadialField {
            grid: Arc::clone(&self.grid),
            values,
            inner: None,
        }
    }

    /// Σ c_n e_n at an arbitrary radius, r = 0 included.
    pub fn synthesize_at(&self, coeffs: &[f64], r: f64) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(n, &c)| c * self.eval_mode(n, r))
            .sum()
    }

    /// e^{tΔ}u as a field on the grid. At t = 0 this is the truncated
    /// mode projection, not the identity.
    pub fn apply(&self, u: &RadialField, t: f64) -> Result<RadialField> {
        let coeffs = self.coefficients(u)?;
        Ok(self.synthesize(&self.decayed(&coeffs, t)))
    }

    /// [`apply`](DiskSemigroup::apply) plus a truncation diagnostic.
    pub fn apply_checked(&self, u: &RadialField, t: f64) -> Result<(RadialField, TailReport)> {
        let coeffs = self.coefficients(u)?;
        let decayed = self.decayed(&coeffs, t);
        let resolved = decayed.iter().map(|c| c * c).sum::<f64>().sqrt();
        let tail = decayed[decayed.len().saturating_sub(TAIL_SAMPLE)..]
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt();
        let report = TailReport {
            resolved,
            tail,
            flagged: tail > TAIL_FRACTION * resolved,
        };
        Ok((self.synthesize(&decayed), report))
    }

    /// Spectral kernel at the origin: G(0, y, t) = Σ e^{-λ_n t} e_n(0) e_n(y).
    pub fn kernel_at_origin(&self, y: f64, t: f64) -> f64 {
        self.kernel_at_origin_enveloped(y, t).0
    }

    /// Kernel value plus a roundoff envelope. The terms oscillate in sign
    /// and the value can sit far below their absolute mass, so the
    /// envelope ε √N Σ|term| bounds what cancellation can have eaten.
    pub fn kernel_at_origin_enveloped(&self, y: f64, t: f64) -> (f64, f64) {
        assert!(t > 0.0);
        let mut value = 0.0;
        let mut mass = 0.0;
        for n in 0..self.modes() {
            let term = (-self.lambdas[n] * t).exp() * self.norms[n] * self.eval_mode(n, y);
            value += term;
            mass += term.abs();
        }
        (value, f64::EPSILON * mass * (self.modes() as f64).sqrt())
    }
}

/// Mass factor of the Gaussian kernel floor: 1 - e^{-d²/t}(2 + 4d²/t),
/// where d is the distance from the probed region to the boundary.
/// Positive for t small against d², vacuous otherwise.
pub fn kernel_mass_factor(d: f64, t: f64) -> f64 {
    assert!(d > 0.0 && t > 0.0);
    let x = d * d / t;
    1.0 - (-x).exp() * (2.0 + 4.0 * x)
}

/// Gaussian floor for the Dirichlet kernel at the origin:
/// G(0, y, t) ≥ kernel_mass_factor(d, t) · e^{-y²/4t} / (4πt), valid for
/// |y| inside the region at distance d from the boundary.
pub fn kernel_floor(d: f64, y: f64, t: f64) -> f64 {
    kernel_mass_factor(d, t) * (-y * y / (4.0 * t)).exp() / (4.0 * PI * t)
}

/// Gauge-norm pair (‖e^{tΔ}u‖, ‖u‖) for the threshold-γ Luxemburg norm.
/// The flow never increases the norm, up to quadrature slack.
pub fn check_orlicz_contraction(
    sg: &DiskSemigroup,
    u: &RadialField,
    nl: &Nonlinearity,
    gamma: f64,
    t: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let image = sg.apply(u, t)?;
    let lhs = spaces::luxemburg_norm(&image, nl, gamma, rel_tol)?;
    let rhs = spaces::luxemburg_norm(u, nl, gamma, rel_tol)?;
    Ok((lhs, rhs))
}

/// Largest node gap H(e^{tΔ}φ) - e^{tΔ}(H∘φ) for a convex map H.
/// The caller supplies H∘φ as a field so a singular core keeps its
/// closed form. Convexity makes the gap non-positive up to slack.
pub fn check_jensen<H: Fn(f64) -> f64>(
    sg: &DiskSemigroup,
    phi: &RadialField,
    h_phi: &RadialField,
    h: H,
    t: f64,
) -> Result<f64> {
    let lhs = sg.apply(phi, t)?.map(&h);
    let rhs = sg.apply(h_phi, t)?;
    let gap = lhs
        .values
        .iter()
        .zip(&rhs.values)
        .map(|(&a, &b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(gap)
}

/// Gauge-norm smoothing ratio against the sharp scale for L^p data:
/// ‖e^{tΔ}u‖_{L^f_γ} / ( t^{-1/p} (log(1/t + 1))^{-1/2} ‖u‖_{L^p} ),
/// meaningful for 1 ≤ p ≤ 2. Bounded in t certifies the smoothing rate.
pub fn smoothing_ratio_orlicz(
    sg: &DiskSemigroup,
    u: &RadialField,
    nl: &Nonlinearity,
    gamma: f64,
    p: f64,
    t: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(1.0..=2.0).contains(&p) || !(t > 0.0) {
        return Err(Error::InvalidParameter {
            what: "smoothing ratio exponent",
            detail: format!("p = {p}, t = {t}; need 1 <= p <= 2 and t > 0"),
        });
    }
    let data_norm = spaces::lebesgue_norm(u, p, rel_tol)?;
    if !data_norm.is_finite() || data_norm == 0.0 {
        return Err(Error::NotInSpace);
    }
    let image = sg.apply(u, t)?;
    let image_norm = spaces::luxemburg_norm(&image, nl, gamma, rel_tol)?;
    let scale = t.powf(-1.0 / p) * (t.recip() + 1.0).ln().powf(-0.5);
    Ok(image_norm / (scale * data_norm))
}

/// Lorentz smoothing ratio t^{1/p - 1/r} ‖e^{tΔ}u‖_{L^{r,q}} / ‖u‖_{L^{p,q}}
/// for 1 < p ≤ r. Bounded in t; tends to zero with t when p < r.
pub fn smoothing_ratio_lorentz(
    sg: &DiskSemigroup,
    u: &RadialField,
    p: f64,
    q: f64,
    r_exp: f64,
    t: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(p > 1.0 && r_exp >= p && q >= 1.0 && t > 0.0) {
        return Err(Error::InvalidParameter {
            what: "smoothing ratio exponents",
            detail: format!("p = {p}, q = {q}, r = {r_exp}, t = {t}"),
        });
    }
    let data_norm = spaces::lorentz_norm(u, p, q, rel_tol)?;
    if !data_norm.is_finite() || data_norm == 0.0 {
        return Err(Error::NotInSpace);
    }
    let image = sg.apply(u, t)?;
    let image_norm = spaces::lorentz_norm(&image, r_exp, q, rel_tol)?;
    Ok(t.powf(1.0 / p - 1.0 / r_exp) * image_norm / data_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::InnerForm;
    use crate::stationary::{r_star, SingularProfile, GAMMA, RHO};
    use std::sync::OnceLock;

    fn profile() -> &'static SingularProfile {
        static P: OnceLock<SingularProfile> = OnceLock::new();
        P.get_or_init(|| SingularProfile::compute().expect("profile"))
    }

    fn sg64() -> &'static DiskSemigroup {
        static S: OnceLock<DiskSemigroup> = OnceLock::new();
        S.get_or_init(|| DiskSemigroup::new(RHO, 64).expect("semigroup"))
    }

    fn sg256() -> &'static DiskSemigroup {
        static S: OnceLock<DiskSemigroup> = OnceLock::new();
        S.get_or_init(|| DiskSemigroup::new(RHO, 256).expect("semigroup"))
    }

    /// Smooth positive test bump vanishing at the boundary.
    fn bump(grid: &Arc<RadialGrid>) -> RadialField {
        let rho = grid.rho;
        RadialField::from_fn(grid, |r| {
            let x = r / rho;
            (1.0 - x * x) * (1.0 + 0.5 * (3.0 * x).cos())
        })
    }

    #[test]
    fn spectrum_table_is_clean() {
        let sg = sg64();
        for &z in &sg.zeros {
            assert!(j0(z).abs() <= ZERO_RESIDUAL_CAP);
        }
        for w in sg.eigenvalues().windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(sg.norms.iter().all(|&n| n > 0.0));
        // first eigenvalue of the unit-coefficient mode: (j_{0,1}/rho)^2
        let lam0 = (2.404825557695773 / RHO) * (2.404825557695773 / RHO);
        assert!((sg.eigenvalues()[0] - lam0).abs() < 1e-12);
    }

    #[test]
    fn modes_are_orthonormal_under_disk_quadrature() {
        let sg = sg64();
        let nodes = sg.grid.nodes();
        let weights = sg.grid.weights();
        let r_lo = sg.grid.r_lo;
        let mut worst = 0.0f64;
        for m in 0..sg.modes() {
            let rm = sg.shape_row(m);
            for n in m..sg.modes() {
                let rn = sg.shape_row(n);
                let mut s = 0.0;
                for i in 0..nodes.len() {
                    s += weights[i] * nodes[i] * rm[i] * rn[i];
                }
                // core disk: shapes are flat at this scale
                s += sg.eval_mode(m, r_lo) * sg.eval_mode(n, r_lo) * r_lo * r_lo / 2.0;
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((2.0 * PI * s - target).abs());
            }
        }
        assert!(worst < 1e-8, "orthonormality defect {worst:e}");
    }

    #[test]
    fn first_mode_image_decays_at_its_eigenvalue() {
        let sg = sg64();
        let lam0 = sg.eigenvalues()[0];
        let mode = RadialField::from_fn(&sg.grid, |r| sg.eval_mode(0, r));
        let sup = mode.node_sup_abs();
        for &t in &[1e-6, 1e-3, 1e-1, 1.0] {
            let image = sg.apply(&mode, t).unwrap();
            let decay = (-lam0 * t).exp();
            for (i, &v) in image.values.iter().enumerate() {
                let expected = decay * mode.values[i];
                let err = (v - expected).abs();
                if expected.abs() > 1e-3 * sup {
                    assert!(err <= 1e-10 * expected.abs(), "t={t}, node {i}: {err:e}");
                } else {
                    assert!(err <= 1e-10 * sup, "t={t}, node {i}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn image_of_constant_one_stays_in_the_unit_band() {
        let sg = sg64();
        let one = RadialField::from_fn(&sg.grid, |_| 1.0);
        for &t in &[1e-3, 1e-1, 1.0] {
            let image = sg.apply(&one, t).unwrap();
            for &v in &image.values {
                assert!(v >= -1e-8 && v <= 1.0 + 1e-8, "t={t}: value {v}");
            }
        }
        // strong decay once t is past the first eigenvalue scale
        assert!(sg.apply(&one, 2.0).unwrap().sup() < 0.1);
    }

    #[test]
    fn composition_matches_a_single_step() {
        let sg = sg64();
        let u = bump(&sg.grid);
        let two_step = sg.apply(&sg.apply(&u, 3e-3).unwrap(), 7e-3).unwrap();
        let one_step = sg.apply(&u, 1e-2).unwrap();
        let sup = one_step.node_sup_abs();
        assert!(two_step.node_distance(&one_step) <= 1e-8 * sup);
    }

    #[test]
    fn positive_data_keeps_sign_and_sup() {
        let sg = sg64();
        let u = bump(&sg.grid);
        let sup = u.node_sup_abs();
        let image = sg.apply(&u, 1e-2).unwrap();
        for &v in &image.values {
            assert!(v >= -1e-9 * sup);
        }
        assert!(image.node_sup_abs() <= sup * (1.0 + 1e-9));
    }

    #[test]
    fn mass_contracts_for_positive_data() {
        let sg = sg64();
        let u = bump(&sg.grid);
        let mass0 = spaces::lebesgue_norm(&u, 1.0, 1e-10).unwrap();
        for &t in &[1e-3, 1e-1] {
            let image = sg.apply(&u, t).unwrap();
            let mass = spaces::lebesgue_norm(&image, 1.0, 1e-10).unwrap();
            assert!(mass <= mass0 * (1.0 + 1e-8), "t={t}: {mass} > {mass0}");
        }
    }

    #[test]
    fn singular_data_flags_truncation_only_at_time_zero() {
        let sg = sg256();
        let u = profile().as_field(&sg.grid);
        let (_, raw) = sg.apply_checked(&u, 0.0).unwrap();
        assert!(raw.flagged, "projection at t = 0 must report its tail");
        let (image, smoothed) = sg.apply_checked(&u, 1e-4).unwrap();
        assert!(!smoothed.flagged, "tail fraction {:e}", smoothed.tail / smoothed.resolved);
        assert!(image.sup().is_finite());
    }

    #[test]
    fn doubling_the_mode_count_leaves_the_image_unchanged() {
        let coarse = sg256();
        let fine = DiskSemigroup::new(RHO, 512).expect("semigroup");
        let uc = profile().as_field(&coarse.grid);
        let uf = profile().as_field(&fine.grid);
        let cc = coarse.coefficients(&uc).unwrap();
        let cf = fine.coefficients(&uf).unwrap();
        for &t in &[1e-4, 1e-2] {
            let dc = coarse.decayed(&cc, t);
            let df = fine.decayed(&cf, t);
            let mut sup = 0.0f64;
            let mut diff = 0.0f64;
            for i in 0..=95 {
                let r = RHO * i as f64 / 96.0;
                let a = coarse.synthesize_at(&dc, r);
                let b = fine.synthesize_at(&df, r);
                sup = sup.max(a.abs());
                diff = diff.max((a - b).abs());
            }
            assert!(diff <= 1e-7 * sup, "t={t}: doubling moved the image by {diff:e}");
        }
    }

    #[test]
    fn gauge_norm_never_grows_under_the_flow() {
        let sg = sg256();
        let nl = Nonlinearity::new();
        let u = profile().as_field(&sg.grid);
        for &t in &[1e-4, 1e-2, 1.0] {
            let (lhs, rhs) = check_orlicz_contraction(sg, &u, &nl, GAMMA, t, 1e-9).unwrap();
            assert!(lhs <= rhs + 1e-6, "t={t}: {lhs} > {rhs}");
        }
        let b = bump(&sg.grid);
        let (lhs, rhs) = check_orlicz_contraction(sg, &b, &nl, 1.0, 1e-2, 1e-9).unwrap();
        assert!(lhs <= rhs + 1e-6);
    }

    #[test]
    fn convex_image_of_the_flow_sits_below_the_flow_of_the_image() {
        let sg = sg64();
        let phi = bump(&sg.grid);
        let t = 5e-3;

        let square = |s: f64| s * s;
        let gap_sq = check_jensen(sg, &phi, &phi.map(square), square, t).unwrap();
        let scale_sq = phi.map(square).node_sup_abs();
        assert!(gap_sq <= 1e-6 * scale_sq, "square gap {gap_sq:e}");

        let nl = Nonlinearity::new();
        let react = |s: f64| nl.f_inf(s);
        let gap_f = check_jensen(sg, &phi, &phi.map(react), react, t).unwrap();
        let scale_f = phi.map(react).node_sup_abs();
        assert!(gap_f <= 1e-6 * scale_f, "reaction gap {gap_f:e}");

        // linear maps commute with the flow, so the gap collapses
        let double = |s: f64| 2.0 * s;
        let gap_lin = check_jensen(sg, &phi, &phi.map(double), double, t).unwrap();
        assert!(gap_lin.abs() <= 1e-8 * phi.node_sup_abs(), "linear gap {gap_lin:e}");
    }

    #[test]
    fn smoothing_ratio_stays_bounded_on_the_sharp_scale() {
        let sg = sg256();
        let nl = Nonlinearity::new();
        let u = profile().as_field(&sg.grid);
        for &t in &[1e-3, 1e-2, 1e-1] {
            let ratio = smoothing_ratio_orlicz(sg, &u, &nl, GAMMA, 2.0, t, 1e-8).unwrap();
            assert!(ratio.is_finite() && ratio > 0.0 && ratio <= 5.0, "t={t}: ratio {ratio}");
        }

        // mass-only data: the reaction image of the profile is in L^1 and
        // nothing better, yet the gauge norm of its image stays on scale
        let form = u.inner.expect("profile core");
        let f_form = form
            .map_reaction(nl.beta, sg.grid.t_lo())
            .expect("reaction family");
        let f_u = u.map(|v| nl.f_inf(v)).with_inner(f_form);
        for &t in &[1e-3, 1e-2] {
            let ratio = smoothing_ratio_orlicz(sg, &f_u, &nl, GAMMA, 1.0, t, 1e-8).unwrap();
            assert!(ratio.is_finite() && ratio > 0.0 && ratio <= 5.0, "t={t}: ratio {ratio}");
        }
    }

    #[test]
    fn lorentz_smoothing_vanishes_when_the_exponent_rises() {
        let sg = sg256();
        let u = profile().as_field(&sg.grid);
        // same exponent: plain contraction
        let same = smoothing_ratio_lorentz(sg, &u, 2.0, 2.0, 2.0, 1e-2, 1e-8).unwrap();
        assert!(same <= 1.0 + 1e-6, "contraction ratio {same}");
        // rising exponent: the prefactor t^{1/p-1/r} drives the ratio down
        let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&t| smoothing_ratio_lorentz(sg, &u, 2.0, 2.0, 4.0, t, 1e-8).unwrap())
            .collect();
        assert!(ratios[1] < ratios[0] && ratios[2] < ratios[1], "{ratios:?}");
        assert!(ratios[2] < 0.5 * ratios[0], "{ratios:?}");
    }

    #[test]
    fn kernel_mass_factor_matches_its_closed_form() {
        let d = RHO - r_star();
        // x = d^2/t = 10: 1 - e^{-10} (2 + 40)
        let expected = 1.0 - 42.0 * (-10.0f64).exp();
        assert!((kernel_mass_factor(d, d * d / 10.0) - expected).abs() < 1e-15);
        // vacuous once t reaches d^2: 1 - 6/e < 0
        assert!(kernel_mass_factor(d, d * d) < 0.0);
        assert!(kernel_mass_factor(d, d * d / 20.0) > kernel_mass_factor(d, d * d / 10.0));
    }

    #[test]
    fn spectral_kernel_dominates_its_gaussian_floor() {
        let sg = sg256();
        let rs = r_star();
        let d = RHO - rs;
        for &t in &[1e-3, 1e-2, d * d / 10.0] {
            for &y in &[0.0, 0.5 * rs, rs] {
                let (lhs, slack) = sg.kernel_at_origin_enveloped(y, t);
                let rhs = kernel_floor(d, y, t);
                if rhs > 0.0 {
                    assert!(lhs + slack >= rhs * (1.0 - 1e-6), "t={t}, y={y}: {lhs} < {rhs}");
                }
            }
        }
    }

    #[test]
    fn coefficients_of_the_singular_core_match_adaptive_quadrature() {
        // cross-check one tail integral against the generic adaptive rule
        // on a finite window in r, where the integrand is regular
        let sg = sg64();
        let form = InnerForm::sqrt_log(1.0, 0.0);
        let t_lo = sg.grid.t_lo();
        let k = sg.zeros[3] / sg.rho;
        let res = integrate_to_infinity(
            &|t: f64| {
                let e = -t - form.logpow * (form.shift + t).ln();
                e.exp() * j0(k * (-0.5 * t).exp())
            },
            t_lo,
            1e-13,
        )
        .unwrap();
        let tail = match res {
            Integral::Finite(v) => 0.5 * v,
            Integral::Divergent => panic!("tail diverges"),
        };
        let r_lo = sg.grid.r_lo;
        let direct = crate::quad::adaptive(
            &|r: f64| {
                if r <= 0.0 {
                    0.0
                } else {
                    (-2.0 * r.ln()).sqrt() * j0(k * r) * r
                }
            },
            0.0,
            r_lo,
            1e-18,
            1e-12,
        )
        .unwrap();
        assert!(
            (tail - direct).abs() <= 1e-15 + 1e-10 * direct.abs(),
            "tail {tail:e} vs direct {direct:e}"
        );
    }
}
