//! Gamma kernels and their multiscale center-surround stacks.
//!
//! A single kernel of order `k` and decay `mu` is
//!
//! ```text
//! g(n1, n2) = mu^(k+1) / (2 pi k!) * r^(k-1) * exp(-mu r),   r = sqrt(n1^2 + n2^2)
//! ```
//!
//! For `k = 1` this is an exponential blob centered on the origin, with value
//! `mu^2 / (2 pi)` at `r = 0`. For `k > 1` it is a ring; the continuous radial
//! profile peaks at `(k - 1) / mu`, which stays within one pixel of the nominal
//! ring radius `k / mu` whenever `mu >= 1`.

use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Fraction of the continuous kernel mass the default support must enclose.
pub const DEFAULT_MASS_COVERAGE: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaKernelSpec {
    order: u32,
    shape: f64,
    support_radius: usize,
}

impl GammaKernelSpec {
    pub fn new(order: u32, shape: f64, support_radius: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::invalid("gamma kernel order must be >= 1"));
        }
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::invalid(format!(
                "gamma kernel shape must be positive, got {shape}"
            )));
        }
        let required = Self::minimum_support(order, shape);
        if support_radius < required || support_radius < 1 {
            return Err(Error::KernelSupport {
                order,
                shape,
                radius: support_radius,
                required,
            });
        }
        Ok(Self {
            order,
            shape,
            support_radius,
        })
    }

    pub fn with_default_support(order: u32, shape: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) || order < 1 {
            return Self::new(order, shape, 1);
        }
        Self::new(order, shape, Self::default_support(order, shape))
    }

    /// Smallest radius holding the peak ring plus its decay tail: `ceil(k/mu) + 3/mu`.
    pub fn minimum_support(order: u32, shape: f64) -> usize {
        let k = order as f64;
        ((k / shape).ceil() + 3.0 / shape).ceil().max(1.0) as usize
    }

    /// Smallest integer radius whose disc holds [`DEFAULT_MASS_COVERAGE`] of the
    /// continuous kernel mass.
    ///
    /// The radial mass density is proportional to `r^k exp(-mu r)`, so the mass
    /// inside radius `R` is the regularized lower incomplete gamma `P(k + 1, mu R)`.
    pub fn default_support(order: u32, shape: f64) -> usize {
        let a = order as f64 + 1.0;
        let mut r = Self::minimum_support(order, shape);
        while gamma_lr(a, shape * r as f64) < DEFAULT_MASS_COVERAGE {
            r += 1;
        }
        r
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn support_radius(&self) -> usize {
        self.support_radius
    }

    /// Nominal ring radius `k / mu`.
    pub fn ring_radius(&self) -> f64 {
        self.order as f64 / self.shape
    }

    /// Kernel value at distance `r` from the origin.
    pub fn value_at(&self, r: f64) -> f64 {
        let k = self.order as f64;
        if r == 0.0 {
            return if self.order == 1 {
                self.shape * self.shape / (2.0 * std::f64::consts::PI)
            } else {
                0.0
            };
        }
        // k! via log-gamma so large orders do not overflow
        let log_norm =
            (k + 1.0) * self.shape.ln() - (2.0 * std::f64::consts::PI).ln() - ln_gamma(k + 1.0);
        (log_norm + (k - 1.0) * r.ln() - self.shape * r).exp()
    }

    fn sample(&self, radius: usize) -> Grid {
        let side = 2 * radius + 1;
        let c = radius as f64;
        Grid::from_fn(side, side, |x, y| {
            let dx = x as f64 - c;
            let dy = y as f64 - c;
            self.value_at((dx * dx + dy * dy).sqrt())
        })
    }
}

/// Samples a single gamma kernel at integer offsets on a `(2r+1)^2` grid.
pub fn build_kernel(spec: &GammaKernelSpec) -> Grid {
    spec.sample(spec.support_radius)
}

/// A multiscale center-surround kernel.
///
/// Specs alternate center (`k = 1`, even index) and surround (odd index).
/// Every component is sampled on the shared grid and scaled to unit discrete
/// mass before the alternating-sign sum, so each center/surround pair has zero
/// net mass and a constant field produces no response.
#[derive(Clone, Debug)]
pub struct KernelStack {
    specs: Vec<GammaKernelSpec>,
    radius: usize,
    realized: Grid,
    raw_masses: Vec<f64>,
}

impl KernelStack {
    /// Builds the stack from parallel order/shape lists. `support` overrides every
    /// spec's radius; otherwise each spec uses its default support.
    pub fn from_params(orders: &[u32], shapes: &[f64], support: Option<usize>) -> Result<Self> {
        if orders.len() != shapes.len() {
            return Err(Error::invalid(format!(
                "{} kernel orders but {} shape parameters",
                orders.len(),
                shapes.len()
            )));
        }
        let specs = orders
            .iter()
            .zip(shapes)
            .map(|(&k, &mu)| match support {
                Some(r) => GammaKernelSpec::new(k, mu, r),
                None => GammaKernelSpec::with_default_support(k, mu),
            })
            .collect::<Result<Vec<_>>>()?;
        build_multiscale(&specs)
    }

    pub fn specs(&self) -> &[GammaKernelSpec] {
        &self.specs
    }

    /// Half-width of the shared grid.
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn realized(&self) -> &Grid {
        &self.realized
    }

    pub fn scales(&self) -> usize {
        self.specs.len() / 2
    }

    /// Discrete mass of each component before unit-mass scaling.
    pub fn raw_masses(&self) -> &[f64] {
        &self.raw_masses
    }

    /// Nominal surround ring radius of a scale, in pixels.
    pub fn ring_radius(&self, scale: usize) -> f64 {
        self.specs[2 * scale + 1].ring_radius()
    }

    /// Center-minus-surround kernel for one scale on the shared grid.
    pub fn scale_kernel(&self, scale: usize) -> Grid {
        let center = self.specs[2 * scale].sample(self.radius);
        let surround = self.specs[2 * scale + 1].sample(self.radius);
        let (cm, sm) = (center.sum(), surround.sum());
        center
            .zip_map(&surround, |c, s| c / cm - s / sm)
            .expect("same grid")
    }

    /// The same stack with its largest scale (last pair) removed. A single-scale
    /// stack is returned unchanged.
    pub fn without_largest_scale(&self) -> Result<KernelStack> {
        if self.scales() <= 1 {
            return Ok(self.clone());
        }
        let specs = &self.specs[..self.specs.len() - 2];
        build_multiscale(specs)
    }
}

/// Sums unit-mass center and surround kernels with alternating signs.
pub fn build_multiscale(specs: &[GammaKernelSpec]) -> Result<KernelStack> {
    if specs.is_empty() || specs.len() % 2 != 0 {
        return Err(Error::invalid(format!(
            "multiscale kernel needs an even, non-zero number of specs, got {}",
            specs.len()
        )));
    }
    if let Some((i, s)) = specs
        .iter()
        .enumerate()
        .find(|(i, s)| i % 2 == 0 && s.order != 1)
    {
        return Err(Error::invalid(format!(
            "center kernel at index {i} must have order 1, got {}",
            s.order
        )));
    }
    let radius = specs.iter().map(|s| s.support_radius).max().unwrap_or(1);
    let side = 2 * radius + 1;
    let mut realized = Grid::zeros(side, side);
    let mut raw_masses = Vec::with_capacity(specs.len());
    for (m, spec) in specs.iter().enumerate() {
        let g = spec.sample(radius);
        let mass = g.sum();
        raw_masses.push(mass);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for (acc, v) in realized.data_mut().iter_mut().zip(g.data()) {
            *acc += sign * v / mass;
        }
    }
    let scales = specs.len() / 2;
    let total = realized.sum();
    if total.abs() > 0.05 * scales as f64 {
        return Err(Error::invalid(format!(
            "multiscale kernel mass {total} exceeds tolerance"
        )));
    }
    Ok(KernelStack {
        specs: specs.to_vec(),
        radius,
        realized,
        raw_masses,
    })
}

/// `sum_m (-1)^m g_m` on a shared grid without unit-mass scaling.
pub fn alternating_sum(specs: &[GammaKernelSpec]) -> Grid {
    let radius = specs.iter().map(|s| s.support_radius).max().unwrap_or(1);
    let side = 2 * radius + 1;
    let mut out = Grid::zeros(side, side);
    for (m, spec) in specs.iter().enumerate() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for (acc, v) in out.data_mut().iter_mut().zip(spec.sample(radius).data()) {
            *acc += sign * v;
        }
    }
    out
}

/// Orders and shapes of the three-scale free-viewing parameterization
/// (ring radii 13, 25 and 38 px).
pub const TORONTO_ORDERS: [u32; 6] = [1, 26, 1, 25, 1, 19];
pub const TORONTO_SHAPES: [f64; 6] = [2.0, 2.0, 1.0, 1.0, 0.5, 0.5];

/// Parameterization used for feature-map (top-down) saliency on natural scenes.
pub const NATURALISTIC_ORDERS: [u32; 6] = [1, 60, 1, 38, 1, 19];
pub const NATURALISTIC_SHAPES: [f64; 6] = [0.05, 0.5, 0.1, 0.5, 0.5, 0.5];
pub const NATURALISTIC_SUPPORT: usize = 200;
