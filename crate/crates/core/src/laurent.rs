//! Exact harmonic and holomorphic fields on annuli via finite Laurent
//! expansions with a logarithmic term, plus verification harnesses for the
//! quantitative annulus estimates (energy shrinking, Hessian control, and
//! the annulus Schwarz envelopes).
//!
//! A real harmonic function on an annulus around the origin has the form
//!
//! ```text
//! u(ρ e^{iθ}) = Re a₀ + d·log ρ + 2 Re Σ_{n≠0} a_n z^n ,
//! ```
//!
//! which this module stores exactly (coefficients `a_n`, `|n| ≤ N`, and the
//! log coefficient `d`). Evaluation, gradients, Hessians, fluxes and `L²`
//! energies are all available in closed form; grid sampling is used only
//! where a rearrangement norm is genuinely needed.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{AnnulusGrid, SampledAnnulusField};
use crate::lorentz::{lorentz_norm, Flavor, LorentzIndex};

/// Hard cap on the declared truncation of any Laurent field.
pub const MAX_TRUNCATION: usize = 64;

/// Number of boundary nodes used for every `sup_{∂B}` measurement. This is
/// the operative definition of the boundary sup norm in all envelope checks.
pub const BOUNDARY_NODES: usize = 4096;

/// A centered annulus `r < |z − center| < R`.
#[derive(Debug, Clone, Copy)]
pub struct Annulus {
    /// Inner radius.
    pub r: f64,
    /// Outer radius.
    pub big_r: f64,
    /// Center.
    pub center: Complex64,
}

impl Annulus {
    /// Builds a centered annulus at the origin.
    pub fn centered(r: f64, big_r: f64) -> Result<Self> {
        if !(r > 0.0 && r < big_r) {
            return Err(Error::Domain(format!(
                "annulus requires 0 < r < R, got r = {r}, R = {big_r}"
            )));
        }
        Ok(Self { r, big_r, center: Complex64::new(0.0, 0.0) })
    }
}

/// A real harmonic field on an annulus, stored as a finite Laurent expansion
/// plus a logarithmic term (see the module docs for the evaluation formula).
#[derive(Debug, Clone)]
pub struct LaurentField {
    /// Coefficients `a_n` for `n ∈ [−N, N]`, stored at index `n + N`.
    coeffs: Vec<Complex64>,
    /// Truncation order `N`.
    n_max: usize,
    /// Logarithmic coefficient `d` (the flux is `2πd`).
    pub log_coeff: f64,
}

/// Serialized form of a [`LaurentField`]: `{"log": d, "coeffs": [[n, re, im], ...]}`.
#[derive(Serialize, Deserialize)]
struct LaurentFieldRepr {
    log: f64,
    coeffs: Vec<(i64, f64, f64)>,
}

impl Serialize for LaurentField {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = self
            .iter_coeffs()
            .map(|(n, c)| (n, c.re, c.im))
            .collect();
        LaurentFieldRepr { log: self.log_coeff, coeffs }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for LaurentField {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = LaurentFieldRepr::deserialize(de)?;
        let coeffs: Vec<(i64, Complex64)> = repr
            .coeffs
            .iter()
            .map(|&(n, re, im)| (n, Complex64::new(re, im)))
            .collect();
        LaurentField::new(&coeffs, repr.log).map_err(serde::de::Error::custom)
    }
}

impl LaurentField {
    /// Builds a field from `(n, a_n)` pairs and a log coefficient.
    pub fn new(coeffs: &[(i64, Complex64)], log_coeff: f64) -> Result<Self> {
        let n_max = coeffs
            .iter()
            .map(|&(n, _)| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        if n_max > MAX_TRUNCATION {
            return Err(Error::Domain(format!(
                "truncation {n_max} exceeds the supported maximum {MAX_TRUNCATION}"
            )));
        }
        let mut store = vec![Complex64::new(0.0, 0.0); 2 * n_max + 1];
        for &(n, c) in coeffs {
            store[(n + n_max as i64) as usize] += c;
        }
        Ok(Self { coeffs: store, n_max, log_coeff })
    }

    /// The zero field.
    pub fn zero() -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0)], n_max: 0, log_coeff: 0.0 }
    }

    /// `d · log|z|`.
    pub fn log_field(d: f64) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0)], n_max: 0, log_coeff: d }
    }

    /// Truncation order.
    pub fn truncation(&self) -> usize {
        self.n_max
    }

    /// Coefficient `a_n`.
    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.n_max as i64) as usize]
        }
    }

    /// Iterates the nonzero `(n, a_n)` pairs.
    pub fn iter_coeffs(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n_max = self.n_max as i64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(move |(i, &c)| (i as i64 - n_max, c))
    }

    /// Exact evaluation `u(z)`.
    pub fn eval(&self, z: Complex64) -> f64 {
        let mut acc = self.coeff(0).re + self.log_coeff * z.norm().ln();
        for (n, c) in self.iter_coeffs() {
            if n != 0 {
                acc += 2.0 * (c * z.powi(n as i32)).re;
            }
        }
        acc
    }

    /// Exact complex derivative `∂_z u = d/(2z) + Σ n a_n z^{n−1}`;
    /// `|∇u| = 2|∂_z u|`.
    pub fn d_z(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(self.log_coeff / 2.0, 0.0) / z;
        for (n, c) in self.iter_coeffs() {
            if n != 0 {
                acc += c * (n as f64) * z.powi(n as i32 - 1);
            }
        }
        acc
    }

    /// Exact second complex derivative `∂²_z u`; `|∇²u| = 4|∂²_z u|` for
    /// harmonic `u`.
    pub fn d_zz(&self, z: Complex64) -> Complex64 {
        let mut acc = -Complex64::new(self.log_coeff / 2.0, 0.0) / (z * z);
        for (n, c) in self.iter_coeffs() {
            if n != 0 {
                acc += c * (n as f64) * ((n - 1) as f64) * z.powi(n as i32 - 2);
            }
        }
        acc
    }

    /// Flux `∫_{∂B_ρ} ∂_ν u dH¹ = 2πd`, exact from the log coefficient.
    /// The radius must lie in the annulus (the expansion is only valid there).
    pub fn flux_integral(&self, a: &Annulus, radius: f64) -> Result<f64> {
        if !(radius >= a.r && radius <= a.big_r) {
            return Err(Error::Domain(format!(
                "flux radius {radius} outside annulus [{}, {}]",
                a.r, a.big_r
            )));
        }
        Ok(2.0 * PI * self.log_coeff)
    }

    /// Contour-quadrature cross-check of the flux on `nodes` boundary points.
    pub fn flux_quadrature(&self, radius: f64, nodes: usize) -> f64 {
        let mut acc = 0.0;
        for j in 0..nodes {
            let theta = 2.0 * PI * j as f64 / nodes as f64;
            let z = Complex64::from_polar(radius, theta);
            // ∂_ν u = ∂_r u = 2 Re(e^{iθ} ∂_z u).
            let du = 2.0 * (Complex64::from_polar(1.0, theta) * self.d_z(z)).re;
            acc += du;
        }
        acc * radius * 2.0 * PI / nodes as f64
    }

    /// Exact `‖∇u‖²_{L²}` over the sub-annulus `r0 < |z| < r1`:
    ///
    /// ```text
    /// ∫ |∇u|² = 2π d² log(r1/r0) + 4π Σ_{n≠0} n |a_n|² (r1^{2n} − r0^{2n}).
    /// ```
    pub fn grad_l2_sq(&self, r0: f64, r1: f64) -> f64 {
        let mut acc = 2.0 * PI * self.log_coeff * self.log_coeff * (r1 / r0).ln();
        for (n, c) in self.iter_coeffs() {
            if n != 0 {
                let p = 2 * n as i32;
                acc += 4.0 * PI * n as f64 * c.norm_sqr() * (r1.powi(p) - r0.powi(p));
            }
        }
        acc
    }

    /// Exact `‖∇u‖_{L²}` over the annulus.
    pub fn grad_l2_norm(&self, a: &Annulus) -> f64 {
        self.grad_l2_sq(a.r, a.big_r).max(0.0).sqrt()
    }

    /// Samples `|∇u|` on a log-polar grid using per-ring FFT synthesis
    /// (`O(n_r · n_θ log n_θ)` instead of `O(n_r · n_θ · N)`).
    pub fn grad_abs_field(&self, grid: AnnulusGrid) -> Result<SampledAnnulusField> {
        // ∂_z u on the ring of radius ρ is the trigonometric polynomial
        // Σ_k b_k(ρ) e^{ikθ} with k = n − 1 and b_k = n a_n ρ^{n−1}
        // (plus k = −1 from the log term).
        let mut modes: Vec<(i64, Complex64)> = self
            .iter_coeffs()
            .filter(|&(n, _)| n != 0)
            .map(|(n, c)| (n - 1, c * n as f64))
            .collect();
        if self.log_coeff != 0.0 {
            modes.push((-1, Complex64::new(self.log_coeff / 2.0, 0.0)));
        }
        let synth = RingSynthesizer::new(grid.n_theta)?;
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r {
            let rho = grid.radii[i];
            let ring_modes: Vec<(i64, Complex64)> = modes
                .iter()
                .map(|&(k, c)| (k, c * rho.powi(k as i32)))
                .collect();
            let ring = synth.synthesize(&ring_modes);
            values.extend(ring.iter().map(|v| 2.0 * v.norm()));
        }
        SampledAnnulusField::new(grid, values)
    }

    /// Samples `|∇²u| = 4|∂²_z u|` on a log-polar grid (same FFT synthesis).
    pub fn hessian_abs_field(&self, grid: AnnulusGrid) -> Result<SampledAnnulusField> {
        let mut modes: Vec<(i64, Complex64)> = self
            .iter_coeffs()
            .filter(|&(n, _)| n != 0)
            .map(|(n, c)| (n - 2, c * (n as f64) * ((n - 1) as f64)))
            .filter(|&(_, c)| c.norm_sqr() > 0.0)
            .collect();
        if self.log_coeff != 0.0 {
            modes.push((-2, Complex64::new(-self.log_coeff / 2.0, 0.0)));
        }
        let synth = RingSynthesizer::new(grid.n_theta)?;
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r {
            let rho = grid.radii[i];
            let ring_modes: Vec<(i64, Complex64)> = modes
                .iter()
                .map(|&(k, c)| (k, c * rho.powi(k as i32)))
                .collect();
            let ring = synth.synthesize(&ring_modes);
            values.extend(ring.iter().map(|v| 4.0 * v.norm()));
        }
        SampledAnnulusField::new(grid, values)
    }

    /// Samples `u` itself on a log-polar grid.
    pub fn value_field(&self, grid: AnnulusGrid) -> Result<SampledAnnulusField> {
        let modes: Vec<(i64, Complex64)> = self
            .iter_coeffs()
            .filter(|&(n, _)| n != 0)
            .collect();
        let synth = RingSynthesizer::new(grid.n_theta)?;
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r {
            let rho = grid.radii[i];
            let base = self.coeff(0).re + self.log_coeff * rho.ln();
            let ring_modes: Vec<(i64, Complex64)> = modes
                .iter()
                .map(|&(k, c)| (k, c * rho.powi(k as i32)))
                .collect();
            let ring = synth.synthesize(&ring_modes);
            values.extend(ring.iter().map(|v| base + 2.0 * v.re));
        }
        SampledAnnulusField::new(grid, values)
    }

    /// Random zero-flux field: `a_n` complex Gaussian scaled by `2^{−|n|}`,
    /// `|n| ≤ n_max`, `d = 0`.
    pub fn random_zero_flux(rng: &mut ChaCha8Rng, n_max: usize) -> Self {
        let mut coeffs = Vec::new();
        for n in -(n_max as i64)..=(n_max as i64) {
            if n == 0 {
                continue;
            }
            let scale = 0.5f64.powi(n.unsigned_abs() as i32);
            coeffs.push((n, scale * gaussian_complex(rng)));
        }
        Self::new(&coeffs, 0.0).expect("truncation within bounds")
    }
}

/// Standard complex Gaussian (independent N(0,1) real and imaginary parts,
/// Box–Muller).
fn gaussian_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt();
    Complex64::from_polar(r, 2.0 * PI * u2)
}

/// Synthesizes a sparse trigonometric polynomial `Σ_k c_k e^{ikθ}` on the
/// `n_θ` offset nodes `θ_j = 2π(j + 1/2)/n_θ` via one inverse FFT.
struct RingSynthesizer {
    fft: Arc<dyn Fft<f64>>,
    n_theta: usize,
}

impl RingSynthesizer {
    fn new(n_theta: usize) -> Result<Self> {
        let fft = FftPlanner::new().plan_fft(n_theta, FftDirection::Inverse);
        Ok(Self { fft, n_theta })
    }

    fn synthesize(&self, modes: &[(i64, Complex64)]) -> Vec<Complex64> {
        let m = self.n_theta as i64;
        let mut spectrum = vec![Complex64::new(0.0, 0.0); self.n_theta];
        for &(k, c) in modes {
            debug_assert!(2 * k.abs() < m, "mode {k} unresolvable on {m} nodes");
            // Half-cell offset: value at θ_j = 2πj/M + π/M picks up e^{ikπ/M}.
            let phase = Complex64::from_polar(1.0, k as f64 * PI / m as f64);
            let idx = k.rem_euclid(m) as usize;
            spectrum[idx] += c * phase;
        }
        self.fft.process(&mut spectrum);
        spectrum
    }
}

/// Dimensions used for grid-based Lorentz norms inside the lemma harnesses.
#[derive(Debug, Clone, Copy)]
pub struct HarnessGrid {
    /// Radial cells.
    pub n_r: usize,
    /// Angular cells.
    pub n_theta: usize,
}

impl Default for HarnessGrid {
    fn default() -> Self {
        Self { n_r: 512, n_theta: 1024 }
    }
}

impl HarnessGrid {
    /// A coarser grid for large property sweeps.
    pub fn sweep() -> Self {
        Self { n_r: 128, n_theta: 256 }
    }
}

fn check_shrink_preconditions(u: &LaurentField, a: &Annulus, alpha: f64) -> Result<()> {
    if u.log_coeff != 0.0 {
        return Err(Error::Precondition(format!(
            "zero flux required (d = {}); the energy-shrinking estimate fails for log modes",
            u.log_coeff
        )));
    }
    if 4.0 * a.r >= a.big_r {
        return Err(Error::Precondition(format!(
            "4r < R required, got r = {}, R = {}",
            a.r, a.big_r
        )));
    }
    if !(alpha > (a.r / a.big_r).sqrt() && alpha < 1.0) {
        return Err(Error::Precondition(format!(
            "α must lie in (√(r/R), 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Constant of the `L^{2,1}` energy-shrinking estimate: a zero-flux harmonic
/// `u` on `B_R \ B_r` satisfies
/// `‖∇u‖_{2,1}(B_{αR} \ B_{r/α}) ≤ 32√(2/15) · α/(1−α) · ‖∇u‖₂(B_R \ B_r)`.
pub fn shrink_l21_constant(alpha: f64) -> f64 {
    32.0 * (2.0f64 / 15.0).sqrt() * alpha / (1.0 - alpha)
}

/// Constant of the companion `L¹` Hessian estimate:
/// `‖∇²u‖₁ ≤ 32√(π/15) · α/(1−α) · ‖∇u‖₂`.
pub fn hessian_l1_constant(alpha: f64) -> f64 {
    32.0 * (PI / 15.0).sqrt() * alpha / (1.0 - alpha)
}

/// Verifies the `L^{2,1}` energy-shrinking estimate for one field. Returns
/// `(lhs, bound)`; the contract is `lhs ≤ bound` up to grid slack.
pub fn verify_shrink_l21(
    u: &LaurentField,
    a: &Annulus,
    alpha: f64,
    grid: HarnessGrid,
) -> Result<(f64, f64)> {
    check_shrink_preconditions(u, a, alpha)?;
    let shrunk = AnnulusGrid::new(a.r / alpha, alpha * a.big_r, grid.n_r, grid.n_theta)?;
    let grad = u.grad_abs_field(shrunk)?;
    let lhs = lorentz_norm(&grad, LorentzIndex::l21(), Flavor::Maximal)?;
    let bound = shrink_l21_constant(alpha) * u.grad_l2_norm(a);
    Ok((lhs, bound))
}

/// Verifies the `L¹` Hessian estimate for one field. Returns `(lhs, bound)`
/// with `lhs = ∫ |∇²u| = 4∫|∂²_z u|` over the shrunk annulus.
pub fn verify_hessian_l1(
    u: &LaurentField,
    a: &Annulus,
    alpha: f64,
    grid: HarnessGrid,
) -> Result<(f64, f64)> {
    check_shrink_preconditions(u, a, alpha)?;
    let shrunk = AnnulusGrid::new(a.r / alpha, alpha * a.big_r, grid.n_r, grid.n_theta)?;
    let hess = u.hessian_abs_field(shrunk)?;
    let lhs = hess.integral();
    let bound = hessian_l1_constant(alpha) * u.grad_l2_norm(a);
    Ok((lhs, bound))
}

/// Ratio `‖∇u‖₂(shrunk) / ‖∇u‖_{2,∞}(full)`: an empirical sample of the
/// strong-from-weak energy constant (whose sharp value involves an
/// embedding constant that is not pinned down analytically).
pub fn verify_l2_from_weak(
    u: &LaurentField,
    a: &Annulus,
    alpha: f64,
    grid: HarnessGrid,
) -> Result<f64> {
    check_shrink_preconditions(u, a, alpha)?;
    if alpha >= 0.5 {
        return Err(Error::Precondition(format!("α < 1/2 required, got {alpha}")));
    }
    let num = u.grad_l2_sq(a.r / alpha, alpha * a.big_r).max(0.0).sqrt();
    let full = AnnulusGrid::new(a.r, a.big_r, grid.n_r, grid.n_theta)?;
    let grad = u.grad_abs_field(full)?;
    let den = lorentz_norm(&grad, LorentzIndex::l2inf(), Flavor::Maximal)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// A complex-valued holomorphic (one-sided Laurent) field `Σ c_n z^n` on an
/// annulus, used by the Schwarz envelope checks.
#[derive(Debug, Clone)]
pub struct HolomorphicSeries {
    /// `(n, c_n)` pairs, `|n| ≤ MAX_TRUNCATION`.
    pub coeffs: Vec<(i64, Complex64)>,
}

impl HolomorphicSeries {
    /// Builds a series, checking the truncation cap.
    pub fn new(coeffs: Vec<(i64, Complex64)>) -> Result<Self> {
        if coeffs
            .iter()
            .any(|&(n, _)| n.unsigned_abs() as usize > MAX_TRUNCATION)
        {
            return Err(Error::Domain(format!(
                "truncation exceeds the supported maximum {MAX_TRUNCATION}"
            )));
        }
        Ok(Self { coeffs })
    }

    /// Evaluation `u(z) = Σ c_n z^n`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|&(n, c)| c * z.powi(n as i32))
            .sum()
    }

    /// `sup |u|` over `BOUNDARY_NODES` points of the circle `|z − c| = ρ`.
    pub fn boundary_sup(&self, center: Complex64, rho: f64) -> f64 {
        (0..BOUNDARY_NODES)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / BOUNDARY_NODES as f64;
                self.eval(center + Complex64::from_polar(rho, t)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Random draw with coefficients scaled by `2^{−|n|}`, `|n| ≤ n_max`.
    pub fn random(rng: &mut ChaCha8Rng, n_max: usize) -> Self {
        let coeffs = (-(n_max as i64)..=(n_max as i64))
            .map(|n| (n, 0.5f64.powi(n.unsigned_abs() as i32) * gaussian_complex(rng)))
            .collect();
        Self { coeffs }
    }
}

/// Annulus Schwarz envelope: a holomorphic `u` on `B_R \ B_r` (with `4r < R`)
/// that is `≤ δ` on `∂B_r` satisfies
///
/// ```text
/// |u(z)| ≤ (5/R)(‖u‖_∞(∂B_R) + δ)|z| + 2δ .
/// ```
///
/// Returns the worst slack `min_z (bound(z) − |u(z)|)` over a dense grid of
/// the annulus; the contract is `worst_slack ≥ −tolerance`.
pub fn schwarz_envelope(u: &HolomorphicSeries, a: &Annulus, delta: f64) -> Result<f64> {
    if 4.0 * a.r >= a.big_r {
        return Err(Error::Precondition(format!(
            "4r < R required, got r = {}, R = {}",
            a.r, a.big_r
        )));
    }
    let inner_sup = u.boundary_sup(a.center, a.r);
    if inner_sup > delta * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "‖u‖_∞(∂B_r) = {inner_sup} exceeds δ = {delta}"
        )));
    }
    let outer_sup = u.boundary_sup(a.center, a.big_r);
    let coeff = 5.0 / a.big_r * (outer_sup + delta);
    let grid = AnnulusGrid::new(a.r, a.big_r, 192, 384)?;
    let mut worst = f64::INFINITY;
    for i in 0..grid.n_r {
        let rho = grid.radii[i];
        for j in 0..grid.n_theta {
            let z = a.center + Complex64::from_polar(rho, grid.theta(j));
            let slack = coeff * rho + 2.0 * delta - u.eval(z).norm();
            worst = worst.min(slack);
        }
    }
    Ok(worst)
}

/// A holomorphic function on a disk minus several subdisks: an entire
/// polynomial part plus one principal tail per excluded disk,
/// `u(z) = Σ e_k z^k + Σ_j Σ_k c_{j,k} (z − a_j)^{−k}`.
#[derive(Debug, Clone)]
pub struct MultiDiskHolo {
    /// Polynomial coefficients, ascending degree.
    pub entire: Vec<Complex64>,
    /// Per-disk principal parts: `(center, [c_1, c_2, ...])` for powers
    /// `(z − center)^{−1}, (z − center)^{−2}, ...`.
    pub tails: Vec<(Complex64, Vec<Complex64>)>,
}

impl MultiDiskHolo {
    /// Evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.entire.iter().rev() {
            acc = acc * z + c;
        }
        for (a, tail) in &self.tails {
            let w = (z - a).inv();
            let mut t = Complex64::new(0.0, 0.0);
            for &c in tail.iter().rev() {
                t = (t + c) * w;
            }
            acc += t;
        }
        acc
    }

    /// `sup |u|` over `BOUNDARY_NODES` points of `|z − c| = ρ`.
    pub fn boundary_sup(&self, center: Complex64, rho: f64) -> f64 {
        (0..BOUNDARY_NODES)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / BOUNDARY_NODES as f64;
                self.eval(center + Complex64::from_polar(rho, t)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// One excluded disk of the multi-disk Schwarz configuration.
#[derive(Debug, Clone, Copy)]
pub struct SchwarzDisk {
    /// Center `a_j`.
    pub center: Complex64,
    /// Radius `r_j`.
    pub radius: f64,
    /// Smallness level `δ_j ≥ sup_{∂B_{r_j}(a_j)} |u|`.
    pub delta: f64,
}

/// Multi-disk Schwarz envelope. With `M = sup_{∂B_R}|u|`, `m` disks and
/// `T_j = (5/(R−|a_j|)) (M/m + 2δ_j)`, the bound on
/// `Ω' = ∩_j B(a_j, R−|a_j|) \ ∪_j B̄(a_j, r_j)` is
///
/// ```text
/// |u(z)| ≤ Σ_j T_j |z − a_j| + 4 Σ_j δ_j + Σ_j T_j · max_{k≠j} d_H(a_k, ∂B_{r_j}(a_j)),
/// ```
///
/// where `d_H(a_k, ∂B_{r_j}(a_j)) = |a_k − a_j| + r_j` is the Hausdorff
/// distance of the point to the circle. Returns the worst slack over a dense
/// sample of `Ω'`.
pub fn schwarz_envelope_multi(
    u: &MultiDiskHolo,
    disks: &[SchwarzDisk],
    big_r: f64,
) -> Result<f64> {
    if disks.is_empty() {
        return Err(Error::Precondition("at least one disk required".into()));
    }
    for (i, d) in disks.iter().enumerate() {
        let dist_center = d.center.norm();
        if dist_center + d.radius >= big_r {
            return Err(Error::Precondition(format!(
                "disk {i} not contained in B_R"
            )));
        }
        if 4.0 * d.radius >= big_r - dist_center {
            return Err(Error::Precondition(format!(
                "hypothesis 4r_j < R − |a_j| violated for disk {i}"
            )));
        }
        for (k, other) in disks.iter().enumerate().skip(i + 1) {
            if (d.center - other.center).norm() <= d.radius + other.radius {
                return Err(Error::Precondition(format!(
                    "disks {i} and {k} are not disjoint"
                )));
            }
        }
        let sup = u.boundary_sup(d.center, d.radius);
        if sup > d.delta * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::Precondition(format!(
                "sup on ∂B_{{r_{i}}} = {sup} exceeds δ_{i} = {}",
                d.delta
            )));
        }
    }
    let m = disks.len() as f64;
    let outer_sup = u.boundary_sup(Complex64::new(0.0, 0.0), big_r);
    let coeffs: Vec<f64> = disks
        .iter()
        .map(|d| 5.0 / (big_r - d.center.norm()) * (outer_sup / m + 2.0 * d.delta))
        .collect();
    let delta_sum: f64 = disks.iter().map(|d| d.delta).sum();
    // Constant offset: 4Σδ_j plus the Hausdorff-distance correction.
    let mut offset = 4.0 * delta_sum;
    for (j, d) in disks.iter().enumerate() {
        let max_dist = disks
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, other)| (other.center - d.center).norm() + d.radius)
            .fold(0.0, f64::max);
        offset += coeffs[j] * max_dist;
    }
    // Dense sample of Ω'.
    let in_domain = |z: Complex64| {
        disks.iter().all(|d| {
            let dist = (z - d.center).norm();
            dist > d.radius && dist < big_r - d.center.norm()
        })
    };
    let mut worst = f64::INFINITY;
    let n_r = 160;
    let n_t = 320;
    for i in 0..n_r {
        let rho = big_r * (i as f64 + 0.5) / n_r as f64;
        for j in 0..n_t {
            let z = Complex64::from_polar(rho, 2.0 * PI * (j as f64 + 0.5) / n_t as f64);
            if !in_domain(z) {
                continue;
            }
            let bound: f64 = disks
                .iter()
                .zip(&coeffs)
                .map(|(d, &c)| c * (z - d.center).norm())
                .sum::<f64>()
                + offset;
            worst = worst.min(bound - u.eval(z).norm());
        }
    }
    // Collar rings just outside each excluded disk (the tight region).
    for d in disks {
        for scale in [1.02, 1.1, 1.35] {
            let rho = d.radius * scale;
            for j in 0..512 {
                let z = d.center + Complex64::from_polar(rho, 2.0 * PI * j as f64 / 512.0);
                if !in_domain(z) {
                    continue;
                }
                let bound: f64 = disks
                    .iter()
                    .zip(&coeffs)
                    .map(|(dd, &c)| c * (z - dd.center).norm())
                    .sum::<f64>()
                    + offset;
                worst = worst.min(bound - u.eval(z).norm());
            }
        }
    }
    Ok(worst)
}

/// Replaces a sampled field by its circle averages: `ū(x)` is the mean of
/// `u` over the ring containing `x`. Idempotent, and gradient-contractive in
/// every `L^p` (the radial derivative of the average is the average of the
/// radial derivatives).
pub fn radial_average(u: &SampledAnnulusField) -> SampledAnnulusField {
    let g = &u.grid;
    let mut values = Vec::with_capacity(u.values.len());
    for i in 0..g.n_r {
        let row = &u.values[i * g.n_theta..(i + 1) * g.n_theta];
        let mean = row.iter().sum::<f64>() / g.n_theta as f64;
        values.extend(std::iter::repeat_n(mean, g.n_theta));
    }
    SampledAnnulusField { grid: g.clone(), values }
}

/// Pointwise `|∇u|` of a sampled field by centered finite differences
/// (`∂_s` in log-radius, `∂_θ` periodic), returned on the same grid.
pub fn fd_grad_abs(u: &SampledAnnulusField) -> SampledAnnulusField {
    let g = &u.grid;
    let (n_r, n_t) = (g.n_r, g.n_theta);
    let ds = (g.r_out / g.r_in).ln() / n_r as f64;
    let dt = 2.0 * PI / n_t as f64;
    let at = |i: usize, j: usize| u.values[i * n_t + (j % n_t)];
    let mut values = Vec::with_capacity(u.values.len());
    for i in 0..n_r {
        let r = g.radii[i];
        for j in 0..n_t {
            // Radial derivative ∂_r = (1/r)∂_s, one-sided at the edges.
            let du_ds = if i == 0 {
                (at(1, j) - at(0, j)) / ds
            } else if i == n_r - 1 {
                (at(n_r - 1, j) - at(n_r - 2, j)) / ds
            } else {
                (at(i + 1, j) - at(i - 1, j)) / (2.0 * ds)
            };
            let du_dt = (at(i, j + 1) - at(i, j + n_t - 1)) / (2.0 * dt);
            let grad_sq = (du_ds / r).powi(2) + (du_dt / r).powi(2);
            values.push(grad_sq.sqrt());
        }
    }
    SampledAnnulusField { grid: g.clone(), values }
}

/// Gradient-contraction check for radial averaging: returns
/// `(‖∇ū‖_p, ‖∇u‖_p)` with both gradients by the same finite differences.
pub fn radial_average_check(u: &SampledAnnulusField, p: f64) -> (f64, f64) {
    let avg = radial_average(u);
    let lhs = fd_grad_abs(&avg).lp_norm(p);
    let rhs = fd_grad_abs(u).lp_norm(p);
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn flux_of_log_field() {
        let a = Annulus::centered(0.1, 1.0).unwrap();
        let u = LaurentField::log_field(1.0);
        assert_relative_eq!(u.flux_integral(&a, 0.5).unwrap(), 2.0 * PI);
        let v = LaurentField::new(&[(3, c(1.0, 0.0))], 0.0).unwrap();
        assert_eq!(v.flux_integral(&a, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn flux_matches_contour_quadrature() {
        // u = 3 log|z| + Re(z/5 + 2/z)
        let u = LaurentField::new(&[(1, c(0.1, 0.0)), (-1, c(1.0, 0.0))], 3.0).unwrap();
        let exact = 6.0 * PI;
        let quad = u.flux_quadrature(0.37, 4096);
        assert_relative_eq!(quad, exact, max_relative = 1e-10);
    }

    #[test]
    fn flux_rejects_radius_outside_annulus() {
        let a = Annulus::centered(0.1, 1.0).unwrap();
        assert!(LaurentField::log_field(1.0).flux_integral(&a, 2.0).is_err());
    }

    #[test]
    fn grad_l2_of_log_field() {
        let a = Annulus::centered(0.01, 2.0).unwrap();
        let u = LaurentField::log_field(3.0);
        let expect = (2.0 * PI * 9.0 * (a.big_r / a.r).ln()).sqrt();
        assert_relative_eq!(u.grad_l2_norm(&a), expect, max_relative = 1e-14);
    }

    #[test]
    fn grad_l2_constant_is_zero() {
        let a = Annulus::centered(0.5, 1.0).unwrap();
        let u = LaurentField::new(&[(0, c(4.0, 0.0))], 0.0).unwrap();
        assert_eq!(u.grad_l2_norm(&a), 0.0);
    }

    #[test]
    fn grad_l2_series_matches_quadrature_oracle() {
        // Independent oracle: Simpson in log r (4096 panels) × uniform θ sum
        // (exact for the trigonometric polynomial |∂_z u|² of degree ≤ 34).
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = LaurentField::random_zero_flux(&mut rng, 16);
        let (r, big_r) = (0.25f64, 1.0f64);
        let n_s = 4096;
        let n_t = 128;
        let h = (big_r / r).ln() / n_s as f64;
        let ring_energy = |rho: f64| {
            let mut acc = 0.0;
            for j in 0..n_t {
                let z = Complex64::from_polar(rho, 2.0 * PI * j as f64 / n_t as f64);
                acc += 4.0 * u.d_z(z).norm_sqr();
            }
            // ∫|∇u|² r dr dθ = ∫|∇u|² r² ds dθ with s = log r.
            acc * rho * rho * 2.0 * PI / n_t as f64
        };
        let mut acc = 0.0;
        for i in 0..=n_s {
            let rho = r * ((i as f64) * h).exp();
            let w = if i == 0 || i == n_s {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * ring_energy(rho);
        }
        let quadrature = (acc * h / 3.0).sqrt();
        let a = Annulus::centered(r, big_r).unwrap();
        assert_relative_eq!(quadrature, u.grad_l2_norm(&a), max_relative = 1e-6);
    }

    #[test]
    fn grad_abs_field_matches_pointwise_eval() {
        let u = LaurentField::new(&[(2, c(0.3, -0.1)), (-1, c(0.0, 0.7))], 1.5).unwrap();
        let grid = AnnulusGrid::new(0.2, 1.0, 8, 16).unwrap();
        let f = u.grad_abs_field(grid.clone()).unwrap();
        for i in (0..grid.n_r).step_by(3) {
            for j in (0..grid.n_theta).step_by(5) {
                let z = Complex64::from_polar(grid.radii[i], grid.theta(j));
                let expect = 2.0 * u.d_z(z).norm();
                assert_relative_eq!(f.values[i * grid.n_theta + j], expect, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn shrink_l21_holds_for_linear_field() {
        // u = Re(z): constant gradient.
        let u = LaurentField::new(&[(1, c(0.5, 0.0))], 0.0).unwrap();
        let a = Annulus::centered(0.01, 1.0).unwrap();
        let (lhs, bound) = verify_shrink_l21(&u, &a, 0.25, HarnessGrid::default()).unwrap();
        assert!(lhs <= bound, "lhs = {lhs}, bound = {bound}");
        // Closed form: |∇u| = 1 on the sub-annulus, so lhs = 4√(area).
        let area = PI * ((0.25f64).powi(2) - (0.04f64).powi(2));
        assert_relative_eq!(lhs, 4.0 * area.sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn shrink_l21_rejects_log_mode() {
        let a = Annulus::centered(0.01, 1.0).unwrap();
        let u = LaurentField::log_field(1.0);
        assert!(matches!(
            verify_shrink_l21(&u, &a, 0.25, HarnessGrid::sweep()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn hessian_l1_zero_for_linear_field() {
        let u = LaurentField::new(&[(1, c(1.0, 0.0))], 0.0).unwrap();
        let a = Annulus::centered(0.01, 1.0).unwrap();
        let (lhs, bound) = verify_hessian_l1(&u, &a, 0.25, HarnessGrid::sweep()).unwrap();
        assert!(lhs < 1e-12);
        assert!(bound > 0.0);
    }

    #[test]
    fn hessian_l1_quadratic_field() {
        // u = Re(z²): |∇²u| = 4|a₂| everywhere.
        let u = LaurentField::new(&[(2, c(0.5, 0.0))], 0.0).unwrap();
        let a = Annulus::centered(1e-3, 1.0).unwrap();
        let alpha = 0.25;
        let (lhs, bound) = verify_hessian_l1(&u, &a, alpha, HarnessGrid::default()).unwrap();
        // ∂²_z u = 2a₂ = 1, so |∇²u| = 4 identically on the sub-annulus.
        let area = PI * ((alpha * 1.0f64).powi(2) - (1e-3 / alpha).powi(2));
        assert_relative_eq!(lhs, 4.0 * area, max_relative = 1e-10);
        assert!(lhs <= bound);
    }

    #[test]
    fn schwarz_envelope_identity_map() {
        // u(z) = z on B₁ \ B_r with δ = r: bound 5(1+r)|z| + 2r ≥ |z|.
        let u = HolomorphicSeries::new(vec![(1, c(1.0, 0.0))]).unwrap();
        let a = Annulus::centered(1e-3, 1.0).unwrap();
        let slack = schwarz_envelope(&u, &a, 1e-3).unwrap();
        assert!(slack >= 0.0);
    }

    #[test]
    fn schwarz_envelope_rejects_violated_boundary_condition() {
        let u = HolomorphicSeries::new(vec![(0, c(10.0, 0.0))]).unwrap();
        let a = Annulus::centered(1e-3, 1.0).unwrap();
        assert!(matches!(
            schwarz_envelope(&u, &a, 0.5),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn schwarz_multi_zero_function() {
        let u = MultiDiskHolo { entire: vec![], tails: vec![] };
        let disks = [
            SchwarzDisk { center: c(-0.4, 0.0), radius: 0.05, delta: 0.0 },
            SchwarzDisk { center: c(0.4, 0.0), radius: 0.05, delta: 0.0 },
        ];
        let slack = schwarz_envelope_multi(&u, &disks, 1.0).unwrap();
        assert!(slack >= 0.0);
    }

    #[test]
    fn schwarz_multi_rejects_overlapping_disks() {
        let u = MultiDiskHolo { entire: vec![], tails: vec![] };
        let disks = [
            SchwarzDisk { center: c(-0.05, 0.0), radius: 0.06, delta: 0.0 },
            SchwarzDisk { center: c(0.05, 0.0), radius: 0.06, delta: 0.0 },
        ];
        assert!(schwarz_envelope_multi(&u, &disks, 1.0).is_err());
    }

    #[test]
    fn radial_average_is_idempotent_and_kills_oscillation() {
        let grid = AnnulusGrid::new(0.5, 2.0, 32, 64).unwrap();
        let u = SampledAnnulusField::from_fn(grid, |r, t| r + t.cos()).unwrap();
        let avg = radial_average(&u);
        let avg2 = radial_average(&avg);
        for (x, y) in avg.values.iter().zip(&avg2.values) {
            assert_relative_eq!(x, y, max_relative = 1e-14);
        }
        // Mean of cos over the offset nodes vanishes.
        for i in 0..avg.grid.n_r {
            assert_relative_eq!(
                avg.values[i * avg.grid.n_theta],
                avg.grid.radii[i],
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn radial_average_contracts_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let u = LaurentField::random_zero_flux(&mut rng, 8);
            let grid = AnnulusGrid::new(0.25, 1.0, 96, 192).unwrap();
            let f = u.value_field(grid).unwrap();
            for p in [1.0, 2.0, 4.0] {
                let (lhs, rhs) = radial_average_check(&f, p);
                assert!(
                    lhs <= rhs * (1.0 + 1e-10),
                    "p = {p}: ‖∇ū‖ = {lhs} > ‖∇u‖ = {rhs}"
                );
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let u = LaurentField::new(&[(2, c(0.25, -1.0)), (-3, c(0.0, 2.0))], 1.75).unwrap();
        let json = serde_json::to_string(&u).unwrap();
        let back: LaurentField = serde_json::from_str(&json).unwrap();
        assert_eq!(back.log_coeff, u.log_coeff);
        assert_eq!(back.coeff(2), u.coeff(2));
        assert_eq!(back.coeff(-3), u.coeff(-3));
    }

    #[test]
    fn truncation_cap_enforced() {
        assert!(LaurentField::new(&[(65, c(1.0, 0.0))], 0.0).is_err());
    }
}
