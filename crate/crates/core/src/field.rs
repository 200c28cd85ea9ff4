//! Radial grids, singular inner profiles, and sampled radial fields.
//!
//! Everything on the disk is radially symmetric, so a field is a function
//! of r ∈ (0, ρ]. Numerically it is stored on a composite Gauss–Legendre
//! grid covering [r_lo, ρ] with r_lo = 1e-5 ρ: panels have uniform width
//! near the boundary (sized to resolve the highest Bessel mode in play)
//! and shrink geometrically toward the center, so the grid nodes double as
//! quadrature nodes for disk integrals without any interpolation step.
//!
//! The region (0, r_lo] is where the singular stationary profile and its
//! images under the reaction and the escape map live. All of those have
//! the closed power-log form
//!
//! ```text
//! amp · e^{pow·t/2} · (shift + t)^{-logpow},      t = -2 log r,
//! ```
//!
//! captured by [`InnerForm`]. The form is closed under multiplication by
//! constants, under the reaction f (for square-root-of-log profiles on the
//! exponential branch), and under the escape map u ↦ F(u)^{-1/2}, which is
//! exactly the algebra the model needs. Integrals against the inner region
//! are pushed through the substitution t = -2 log r (so r dr = -e^{-t}dt/2)
//! onto a semi-infinite interval where they decay exponentially; integrand
//! builders receive (t, log value) so call sites can arrange cancellations
//! like e^{t}·e^{-t} in log space before exponentiating.

use std::sync::Arc;

use crate::error::Result;
use crate::quad::{integrate_to_infinity, Integral, GL8_NODES, GL8_WEIGHTS};

/// Fraction of ρ below which the grid stops and inner forms take over.
pub const INNER_CUT_FRACTION: f64 = 1e-5;

// Geometric shrink factor for interior panels.
const PANEL_SHRINK: f64 = 1.35;

// The uniform boundary region uses panels of width (7/8) ρ / boundary_panels.
const UNIFORM_SPAN: f64 = 7.0 / 8.0;

/// Composite Gauss–Legendre quadrature grid on [r_lo, ρ], ascending, with
/// ρ itself appended as a zero-weight node so boundary values are stored.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    /// Disk radius.
    pub rho: f64,
    /// Inner cutoff; the open interval (0, r_lo) is not gridded.
    pub r_lo: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    /// Build a grid whose uniform boundary region has `boundary_panels`
    /// panels; the interior continues with geometrically shrinking panels
    /// down to `r_lo = 1e-5 ρ`.
    pub fn new(rho: f64, boundary_panels: usize) -> Arc<RadialGrid> {
        assert!(rho > 0.0 && boundary_panels >= 8);
        let r_lo = INNER_CUT_FRACTION * rho;
        let du = UNIFORM_SPAN * rho / boundary_panels as f64;
        // panel edges descending from the boundary
        let mut edges = vec![rho];
        loop {
            let b = *edges.last().unwrap();
            if b <= r_lo {
                break;
            }
            let next = (b - du).max(b / PANEL_SHRINK).max(r_lo);
            edges.push(next);
        }
        // nodes ascending: walk panels from innermost outward
        let mut nodes = Vec::with_capacity(8 * (edges.len() - 1) + 1);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in edges.windows(2).rev() {
            let (lo, hi) = (pair[1], pair[0]);
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        nodes.push(rho);
        weights.push(0.0);
        Arc::new(RadialGrid {
            rho,
            r_lo,
            nodes,
            weights,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// t = -2 log r at the inner cutoff; inner-form integrals start here.
    pub fn t_lo(&self) -> f64 {
        -2.0 * self.r_lo.ln()
    }
}

/// Closed-form singular profile on (0, r_lo]:
/// `amp · e^{pow·t/2} · (shift + t)^{-logpow}` with t = -2 log r.
///
/// `pow = 0, logpow = -1/2` is the square-root-of-log family of the
/// stationary profile; the reaction maps that family to
/// `pow = 2a², logpow = 3/2` and the escape transform to
/// `pow = a², logpow = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerForm {
    pub amp: f64,
    pub pow: f64,
    pub shift: f64,
    pub logpow: f64,
}

impl InnerForm {
    /// Profile c · sqrt(shift - 2 log r), the scaled stationary family.
    pub fn sqrt_log(c: f64, shift: f64) -> InnerForm {
        InnerForm {
            amp: c,
            pow: 0.0,
            shift,
            logpow: -0.5,
        }
    }

    /// Value as a function of t = -2 log r.
    pub fn eval_t(&self, t: f64) -> f64 {
        debug_assert!(self.shift + t > 0.0);
        self.amp * (self.pow * t / 2.0).exp() * (self.shift + t).powf(-self.logpow)
    }

    /// log of the value as a function of t; never overflows.
    pub fn log_val(&self, t: f64) -> f64 {
        debug_assert!(self.amp > 0.0 && self.shift + t > 0.0);
        self.amp.ln() + self.pow * t / 2.0 - self.logpow * (self.shift + t).ln()
    }

    /// Value at radius r ∈ (0, 1).
    pub fn eval_r(&self, r: f64) -> f64 {
        debug_assert!(r > 0.0 && r < 1.0);
        self.eval_t(-2.0 * r.ln())
    }

    /// The profile is unbounded as r → 0 exactly when it has a positive
    /// power or a positive log exponent.
    pub fn unbounded(&self) -> bool {
        self.pow > 0.0 || self.logpow < 0.0
    }

    /// True when the value grows monotonically as r decreases on the whole
    /// inner region t ≥ t_lo.
    pub fn increasing_inward(&self, t_lo: f64) -> bool {
        // d/dt log val = pow/2 - logpow/(shift+t); for logpow ≥ 0 the
        // minimum over t ≥ t_lo is at t_lo, for logpow < 0 it is positive
        self.pow / 2.0 * (self.shift + t_lo) >= self.logpow
    }

    /// Radius at which the profile first exceeds level `y`, i.e. the
    /// measure boundary of `{r ≤ r_cut : val(r) > y}` for profiles that
    /// increase inward. `None` when the level is already exceeded at the
    /// cutoff (the level set reaches past the inner region).
    pub fn level_radius(&self, y: f64, t_lo: f64) -> Option<f64> {
        debug_assert!(self.increasing_inward(t_lo));
        assert!(y > 0.0);
        let target = y.ln();
        if self.log_val(t_lo) > target {
            return None;
        }
        // bracket in t, then bisect on the monotone log value
        let mut lo = t_lo;
        let mut hi = t_lo.max(1.0) * 2.0;
        let mut tries = 0;
        while self.log_val(hi) < target {
            hi *= 2.0;
            tries += 1;
            if tries > 1100 {
                // level never reached (bounded profile); treat as empty set
                return Some(0.0);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.log_val(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Some((-0.5 * 0.5 * (lo + hi)).exp())
    }

    /// Semi-infinite integral of `g(t, log val(t))` over t ≥ t_lo, halved:
    /// this equals ∫_0^{r_cut} G(r) r dr when g includes the Jacobian
    /// factor e^{-t} for the substitution t = -2 log r.
    ///
    /// The builder receives the log of the value so it can combine growth
    /// and decay exponents before exponentiating.
    pub fn integrate_weighted<G: Fn(f64, f64) -> f64>(
        &self,
        g: G,
        t_lo: f64,
        rel_tol: f64,
    ) -> Result<Integral> {
        let form = *self;
        let res = integrate_to_infinity(&|t: f64| g(t, form.log_val(t)), t_lo, rel_tol)?;
        Ok(match res {
            Integral::Finite(v) => Integral::Finite(0.5 * v),
            Integral::Divergent => Integral::Divergent,
        })
    }

    /// Image under the reaction f, exact on the exponential branch.
    ///
    /// Requires the square-root-of-log family `a·sqrt(shift+t)` with the
    /// value at the cutoff already past the branch point β (the profile
    /// increases inward, so the whole inner region is then on the
    /// exponential branch). Returns `None` otherwise; callers fall back to
    /// bounded-field handling.
    pub fn map_reaction(&self, beta: f64, t_lo: f64) -> Option<InnerForm> {
        if self.pow != 0.0 || self.logpow != -0.5 || self.amp <= 0.0 {
            return None;
        }
        let a = self.amp;
        if a * (self.shift + t_lo).sqrt() <= beta {
            return None;
        }
        // f(a sqrt(shift+t)) = e^{a²(shift+t)} / (a³ (shift+t)^{3/2})
        Some(InnerForm {
            amp: (a * a * self.shift).exp() / (a * a * a),
            pow: 2.0 * a * a,
            shift: self.shift,
            logpow: 1.5,
        })
    }

    /// Image under the escape transform u ↦ F(u)^{-1/2}, exact on the
    /// exponential branch; same family requirement as [`map_reaction`].
    ///
    /// F(a sqrt(shift+t)) = (a²(shift+t)+1) e^{-a²(shift+t)} / 2, so the
    /// reciprocal square root is `(√2 e^{a²shift/2}/a) e^{a²t/2}
    /// (shift + 1/a² + t)^{-1/2}`.
    pub fn map_escape_inv_sqrt(&self, beta: f64, t_lo: f64) -> Option<InnerForm> {
        if self.pow != 0.0 || self.logpow != -0.5 || self.amp <= 0.0 {
            return None;
        }
        let a = self.amp;
        if a * (self.shift + t_lo).sqrt() <= beta {
            return None;
        }
        Some(InnerForm {
            amp: std::f64::consts::SQRT_2 * (a * a * self.shift / 2.0).exp() / a,
            pow: a * a,
            shift: self.shift + 1.0 / (a * a),
            logpow: 0.5,
        })
    }

    /// The profile multiplied by a positive constant.
    pub fn scaled(&self, c: f64) -> InnerForm {
        assert!(c > 0.0);
        InnerForm {
            amp: self.amp * c,
            ..*self
        }
    }
}

/// A radial field: values on the grid nodes plus an optional closed-form
/// singular profile on the ungridded core (0, r_lo].
#[derive(Debug, Clone)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub inner: Option<InnerForm>,
}

impl RadialField {
    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Arc<RadialGrid>, f: F) -> RadialField {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        RadialField {
            grid: Arc::clone(grid),
            values,
            inner: None,
        }
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> RadialField {
        RadialField {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
            inner: None,
        }
    }

    pub fn with_inner(mut self, inner: InnerForm) -> RadialField {
        self.inner = Some(inner);
        self
    }

    /// Point evaluation: linear interpolation on the grid, the inner form
    /// below the cutoff (or the innermost value for bounded fields).
    pub fn eval(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        if r <= nodes[0] {
            return match &self.inner {
                Some(form) if r < self.grid.r_lo => form.eval_r(r),
                Some(form) => {
                    // between the cutoff and the first node the form is
                    // still the better description
                    if r > 0.0 {
                        form.eval_r(r)
                    } else {
                        f64::INFINITY
                    }
                }
                None => self.values[0],
            };
        }
        if r >= self.grid.rho {
            return *self.values.last().unwrap();
        }
        let i = nodes.partition_point(|&x| x <= r);
        let (r0, r1) = (nodes[i - 1], nodes[i]);
        let th = (r - r0) / (r1 - r0);
        self.values[i - 1] * (1.0 - th) + self.values[i] * th
    }

    /// Supremum over the disk: +∞ when the inner profile is unbounded.
    pub fn sup(&self) -> f64 {
        let node_max = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        match &self.inner {
            Some(form) if form.unbounded() => f64::INFINITY,
            Some(form) => node_max.max(form.eval_t(self.grid.t_lo())),
            None => node_max,
        }
    }

    /// Largest absolute node value (ignores the inner form).
    pub fn node_sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Composite quadrature of g(r, u(r)) dr over the gridded annulus
    /// [r_lo, ρ]. Disk integrals put the factor r inside g and multiply
    /// by 2π outside.
    pub fn quad_nodes<G: Fn(f64, f64) -> f64>(&self, g: G) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.values)
            .map(|((&r, &w), &u)| w * g(r, u))
            .sum()
    }

    /// One-term estimate of ∫_0^{r_lo} g(r, u) r dr for fields with no
    /// singular core: g is frozen at the cutoff and the measure of the
    /// core disk is r_lo²/2.
    pub fn inner_patch<G: Fn(f64, f64) -> f64>(&self, g: G) -> f64 {
        debug_assert!(self.inner.is_none());
        g(self.grid.r_lo, self.values[0]) * self.grid.r_lo * self.grid.r_lo / 2.0
    }

    /// Pointwise map of node values; the inner form is dropped (the image
    /// of a singular core is reattached explicitly by callers that know
    /// the closed form).
    pub fn map<M: Fn(f64) -> f64>(&self, m: M) -> RadialField {
        RadialField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| m(v)).collect(),
            inner: None,
        }
    }

    /// Node-wise difference of two fields on the same grid; both must be
    /// free of singular cores (differences of the solver iterates are).
    pub fn sub(&self, other: &RadialField) -> RadialField {
        debug_assert!(Arc::ptr_eq(&self.grid, &other.grid));
        debug_assert!(self.inner.is_none() && other.inner.is_none());
        RadialField {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            inner: None,
        }
    }

    /// Node-wise sum on the same grid (inner cores must not collide).
    pub fn add(&self, other: &RadialField) -> RadialField {
        debug_assert!(Arc::ptr_eq(&self.grid, &other.grid));
        debug_assert!(self.inner.is_none() || other.inner.is_none());
        RadialField {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            inner: self.inner.or(other.inner),
        }
    }

    pub fn scale(&self, c: f64) -> RadialField {
        RadialField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| c * v).collect(),
            inner: if c > 0.0 {
                self.inner.map(|f| f.scaled(c))
            } else {
                debug_assert!(self.inner.is_none());
                None
            },
        }
    }

    /// max_i |self - other| over grid nodes.
    pub fn node_distance(&self, other: &RadialField) -> f64 {
        debug_assert!(self.values.len() == other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}
