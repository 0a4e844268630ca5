//! Conformal-factor decomposition on neck annuli.
//!
//! For a conformal immersion `φ` of an annulus with conformal factor
//! `e^λ = |∇φ|/√2`, the factor splits as `λ = μ + ν` where `μ` absorbs the
//! Jacobian source `∇e₁·∇⊥e₂` of the moving frame (a Wente-type problem)
//! and `ν` is harmonic up to discretization. The flux `d = (1/2π)∮ ∂_s ν`
//! is then (asymptotically) the integer `θ₀ − 1` attached to the branch
//! point the neck surrounds. The module also checks the frame-rotation
//! identity `*dν = dθ` and the codimension-1 structure identity
//! `∇n = n×∇⊥n − 2H∇φ`, and extracts per-boundary degrees on multiply
//! punctured disks.
//!
//! Grids are log-polar: `s = log r` uniform, `θ` uniform, so the flat
//! `(s, θ)` Laplacian is conformal to the planar one.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::wente::{solve_tridiagonal, wavenumber};

/// Floor on `e^{2λ}` relative to its maximum below which the immersion is
/// treated as degenerate.
const DEGENERACY_FLOOR: f64 = 1e-24;

/// Log-polar grid on the annulus `r_in ≤ |z| ≤ r_out`: nodes
/// `s_i = log r_in + i·Δs` for `i = 0..=n_s` and `θ_j = 2πj/n_θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeckGrid {
    /// Inner radius.
    pub r_in: f64,
    /// Outer radius.
    pub r_out: f64,
    /// Number of radial (log-scale) intervals.
    pub n_s: usize,
    /// Number of angular nodes.
    pub n_theta: usize,
}

impl NeckGrid {
    /// Builds a grid; requires `0 < r_in < r_out`, `n_s ≥ 8`, `n_θ ≥ 8`.
    pub fn new(r_in: f64, r_out: f64, n_s: usize, n_theta: usize) -> Result<Self> {
        if !(r_in > 0.0 && r_out > r_in) || n_s < 8 || n_theta < 8 {
            return Err(Error::Domain(
                "neck grid requires 0 < r_in < r_out, n_s ≥ 8, n_theta ≥ 8".into(),
            ));
        }
        Ok(Self { r_in, r_out, n_s, n_theta })
    }

    /// Log-radial step.
    #[inline]
    pub fn ds(&self) -> f64 {
        (self.r_out / self.r_in).ln() / self.n_s as f64
    }

    /// Log-radius of row `i`.
    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        self.r_in.ln() + i as f64 * self.ds()
    }

    /// Angle of column `j`.
    #[inline]
    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_theta as f64
    }

    /// Node count.
    #[inline]
    pub fn len(&self) -> usize {
        (self.n_s + 1) * self.n_theta
    }

    /// Whether the grid is empty (never, once constructed).
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A sampled conformal immersion of the annulus: positions, conformal
/// factor and unit normal on the nodes (ring-major, `i * n_θ + j`).
#[derive(Debug, Clone)]
pub struct ConformalImmersionSample {
    /// Grid descriptor.
    pub grid: NeckGrid,
    /// Immersion values.
    pub position: Vec<[f64; 3]>,
    /// Conformal factor `λ` with respect to the planar coordinate `z`
    /// (`e^λ = |∇φ|/√2`).
    pub lambda: Vec<f64>,
    /// Unit normal `(∂_xφ × ∂_yφ)` normalized.
    pub normal: Vec<[f64; 3]>,
    /// Complex gradient `∂_zφ` per component (kept for downstream checks).
    dz_phi: Vec<[Complex64; 3]>,
}

impl ConformalImmersionSample {
    /// Samples the map `f(z)` on the grid and derives `λ`, `n` and the
    /// complex gradient discretely (spectral in `θ`, 2nd-order in `s`).
    /// `conformality_tol` bounds the allowed relative conformality defect
    /// `|⟨∂_zφ, ∂_zφ⟩| / e^{2λ}` at interior nodes.
    pub fn from_map(
        grid: NeckGrid,
        f: impl Fn(Complex64) -> [f64; 3],
        conformality_tol: f64,
    ) -> Result<Self> {
        let mut position = Vec::with_capacity(grid.len());
        for i in 0..=grid.n_s {
            let r = grid.s(i).exp();
            for j in 0..grid.n_theta {
                position.push(f(Complex64::from_polar(r, grid.theta(j))));
            }
        }
        Self::from_positions(grid, position, conformality_tol)
    }

    /// Builds the sample from raw node positions.
    pub fn from_positions(
        grid: NeckGrid,
        position: Vec<[f64; 3]>,
        conformality_tol: f64,
    ) -> Result<Self> {
        if position.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} nodes, got {}",
                grid.len(),
                position.len()
            )));
        }
        if position.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite position sample".into()));
        }
        let d_s = d_s_vec(&grid, &position);
        let d_t = d_theta_vec(&grid, &position);
        let rows = grid.n_s + 1;
        let n_t = grid.n_theta;
        let mut dz_phi = vec![[Complex64::new(0.0, 0.0); 3]; grid.len()];
        let mut lambda = vec![0.0; grid.len()];
        let mut normal = vec![[0.0; 3]; grid.len()];
        let mut e2l_max = 0.0f64;
        for i in 0..rows {
            let s = grid.s(i);
            for j in 0..n_t {
                let idx = i * n_t + j;
                let w = Complex64::new(s, grid.theta(j));
                let chain = (-w).exp();
                let mut e2l = 0.0;
                let mut ax = [0.0; 3];
                let mut ay = [0.0; 3];
                for c in 0..3 {
                    // ∂_zφ = e^{−w} (∂_s − i∂_θ)φ / 2.
                    let dw = Complex64::new(d_s[idx][c], 0.0)
                        - Complex64::new(0.0, d_t[idx][c]);
                    let dz = chain * dw * 0.5;
                    dz_phi[idx][c] = dz;
                    e2l += 2.0 * dz.norm_sqr();
                    ax[c] = 2.0 * dz.re;
                    ay[c] = -2.0 * dz.im;
                }
                e2l_max = e2l_max.max(e2l);
                lambda[idx] = 0.5 * e2l.ln();
                let n = cross(ax, ay);
                let nn = norm3(n);
                if nn > 0.0 {
                    normal[idx] = [n[0] / nn, n[1] / nn, n[2] / nn];
                }
            }
        }
        // Degeneracy and conformality gates on interior rows.
        for i in 1..rows - 1 {
            for j in 0..n_t {
                let idx = i * n_t + j;
                let e2l = (2.0 * lambda[idx]).exp();
                if e2l.is_nan() || e2l == 0.0 || e2l < DEGENERACY_FLOOR * e2l_max {
                    return Err(Error::Precondition(format!(
                        "degenerate immersion: e^2λ underflow at node ({i},{j})"
                    )));
                }
                let dz = dz_phi[idx];
                let pairing = dz[0] * dz[0] + dz[1] * dz[1] + dz[2] * dz[2];
                if pairing.norm() > conformality_tol * e2l {
                    return Err(Error::Precondition(format!(
                        "conformality defect {:.3e} exceeds {:.3e}·e^2λ at node ({i},{j})",
                        pairing.norm() / e2l,
                        conformality_tol
                    )));
                }
            }
        }
        Ok(Self { grid, position, lambda, normal, dz_phi })
    }

    /// Planar gradient of the immersion: `(∂_xφ, ∂_yφ)` at a node.
    pub fn planar_gradient(&self, idx: usize) -> ([f64; 3], [f64; 3]) {
        let dz = self.dz_phi[idx];
        (
            [2.0 * dz[0].re, 2.0 * dz[1].re, 2.0 * dz[2].re],
            [-2.0 * dz[0].im, -2.0 * dz[1].im, -2.0 * dz[2].im],
        )
    }
}

/// 2nd-order `∂_s` per component (centered; one-sided at the edge rows).
fn d_s_vec(grid: &NeckGrid, v: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let (rows, n_t) = (grid.n_s + 1, grid.n_theta);
    let ds = grid.ds();
    let mut out = vec![[0.0; 3]; v.len()];
    for j in 0..n_t {
        for c in 0..3 {
            let at = |i: usize| v[i * n_t + j][c];
            for i in 0..rows {
                out[i * n_t + j][c] = if i == 0 {
                    (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * ds)
                } else if i == rows - 1 {
                    (3.0 * at(rows - 1) - 4.0 * at(rows - 2) + at(rows - 3)) / (2.0 * ds)
                } else {
                    (at(i + 1) - at(i - 1)) / (2.0 * ds)
                };
            }
        }
    }
    out
}

/// Spectral `∂_θ` per component, ring by ring.
fn d_theta_vec(grid: &NeckGrid, v: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let (rows, n_t) = (grid.n_s + 1, grid.n_theta);
    let fwd = FftPlanner::new().plan_fft(n_t, FftDirection::Forward);
    let inv = FftPlanner::new().plan_fft(n_t, FftDirection::Inverse);
    let mut out = vec![[0.0; 3]; v.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_t];
    for c in 0..3 {
        for i in 0..rows {
            for j in 0..n_t {
                buf[j] = Complex64::new(v[i * n_t + j][c], 0.0);
            }
            fwd.process(&mut buf);
            for (m, b) in buf.iter_mut().enumerate() {
                let k = wavenumber(m, n_t);
                *b *= Complex64::new(0.0, k as f64);
            }
            inv.process(&mut buf);
            for j in 0..n_t {
                out[i * n_t + j][c] = buf[j].re / n_t as f64;
            }
        }
    }
    out
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// The decomposition `λ = μ + ν` with the extracted degree.
#[derive(Debug, Clone)]
pub struct NeckDecomposition {
    /// Wente part (zero on the outer boundary, zero-flux inner condition on
    /// the mean mode).
    pub mu: Vec<f64>,
    /// Residual part `ν = λ − μ`.
    pub nu: Vec<f64>,
    /// Flux `d = (1/2π)∮ ∂_s ν` at the mid ring.
    pub d: f64,
    /// Nearest integer to `d`.
    pub nearest: i64,
    /// `|d − nearest|`.
    pub distance: f64,
    /// `‖μ‖_∞`.
    pub mu_sup: f64,
    /// Product of the frame Dirichlet energies `‖∇e₁‖₂·‖∇e₂‖₂`.
    pub frame_energy: f64,
    /// Sup of the discrete `(s,θ)` Laplacian of `ν` over interior rows
    /// (diagnostic; `ν` is harmonic up to discretization).
    pub nu_laplacian_residual: f64,
}

/// Splits `λ = μ + ν` and extracts the neck degree.
///
/// `μ` solves the discrete Wente problem `Δ_{(s,θ)} μ = ∇e₁·∇⊥e₂` with
/// zero Dirichlet data on the outer ring; on the inner ring the oscillating
/// modes vanish and the mean mode satisfies a zero-flux (reflection)
/// condition, so all of the source's radial flux is carried by `μ` and
/// `∮∂_s ν` is radius-independent up to discretization.
pub fn decompose(c: &ConformalImmersionSample) -> Result<NeckDecomposition> {
    let g = &c.grid;
    let (rows, n_t) = (g.n_s + 1, g.n_theta);
    // Unit frame fields.
    let mut e1 = vec![[0.0; 3]; c.position.len()];
    let mut e2 = vec![[0.0; 3]; c.position.len()];
    for idx in 0..c.position.len() {
        let (ax, ay) = c.planar_gradient(idx);
        let (na, nb) = (norm3(ax), norm3(ay));
        if na == 0.0 || nb == 0.0 {
            return Err(Error::Precondition("degenerate frame".into()));
        }
        for cmp in 0..3 {
            e1[idx][cmp] = ax[cmp] / na;
            e2[idx][cmp] = ay[cmp] / nb;
        }
    }
    // Frame Jacobian source (conformally invariant 2-form density).
    let e1_s = d_s_vec(g, &e1);
    let e1_t = d_theta_vec(g, &e1);
    let e2_s = d_s_vec(g, &e2);
    let e2_t = d_theta_vec(g, &e2);
    let mut source = vec![0.0; c.position.len()];
    for idx in 0..source.len() {
        let mut acc = 0.0;
        for cmp in 0..3 {
            acc += e1_t[idx][cmp] * e2_s[idx][cmp] - e1_s[idx][cmp] * e2_t[idx][cmp];
        }
        // Orientation fixed by Liouville: Δλ = −K e^{2λ} matches this sign
        // of the frame Jacobian in (s, θ) coordinates.
        source[idx] = acc;
    }
    let mu = annulus_wente(g, &source)?;
    let nu: Vec<f64> = c.lambda.iter().zip(&mu).map(|(l, m)| l - m).collect();
    // Flux of ν at the mid ring, by angular mean of the centered ∂_s.
    let d = nu_flux(g, &nu, g.n_s / 2);
    let nearest = d.round() as i64;
    // Diagnostics.
    let mu_sup = mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let energy = |f_s: &[[f64; 3]], f_t: &[[f64; 3]]| {
        let ds = g.ds();
        let dt = 2.0 * PI / n_t as f64;
        let mut acc = 0.0;
        for i in 1..rows - 1 {
            for j in 0..n_t {
                let idx = i * n_t + j;
                for cmp in 0..3 {
                    acc += (f_s[idx][cmp].powi(2) + f_t[idx][cmp].powi(2)) * ds * dt;
                }
            }
        }
        acc.sqrt()
    };
    let frame_energy = energy(&e1_s, &e1_t) * energy(&e2_s, &e2_t);
    let ds = g.ds();
    let dt = 2.0 * PI / n_t as f64;
    let mut lap_res = 0.0f64;
    for i in 1..rows - 1 {
        for j in 0..n_t {
            let at = |ii: usize, jj: usize| nu[ii * n_t + (jj % n_t)];
            let lap = (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / (ds * ds)
                + (at(i, j + 1) - 2.0 * at(i, j) + at(i, j + n_t - 1)) / (dt * dt);
            lap_res = lap_res.max(lap.abs());
        }
    }
    Ok(NeckDecomposition {
        mu,
        nu,
        d,
        nearest,
        distance: (d - nearest as f64).abs(),
        mu_sup,
        frame_energy,
        nu_laplacian_residual: lap_res,
    })
}

/// Angular mean of `∂_s f` at ring `i` (centered difference).
pub fn nu_flux(g: &NeckGrid, f: &[f64], i: usize) -> f64 {
    let n_t = g.n_theta;
    let i = i.clamp(1, g.n_s - 1);
    let ds = g.ds();
    let mut acc = 0.0;
    for j in 0..n_t {
        acc += (f[(i + 1) * n_t + j] - f[(i - 1) * n_t + j]) / (2.0 * ds);
    }
    acc / n_t as f64
}

/// Solves `Δ_{(s,θ)} u = f` on the log-polar grid: zero Dirichlet data on
/// the outer ring; on the inner ring, Dirichlet for the oscillating modes
/// and zero-flux (ghost reflection) for the mean mode.
fn annulus_wente(g: &NeckGrid, source: &[f64]) -> Result<Vec<f64>> {
    let (rows, n_t) = (g.n_s + 1, g.n_theta);
    let ds = g.ds();
    let fwd = FftPlanner::new().plan_fft(n_t, FftDirection::Forward);
    let inv = FftPlanner::new().plan_fft(n_t, FftDirection::Inverse);
    let mut modes = vec![Complex64::new(0.0, 0.0); rows * n_t];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_t];
    for i in 0..rows {
        for j in 0..n_t {
            buf[j] = Complex64::new(source[i * n_t + j], 0.0);
        }
        fwd.process(&mut buf);
        for j in 0..n_t {
            modes[i * n_t + j] = buf[j] / n_t as f64;
        }
    }
    let n = g.n_s; // unknowns at rows 0..n_s−1; outer row fixed to zero
    let mut sol = vec![Complex64::new(0.0, 0.0); rows * n_t];
    for m in 0..n_t {
        let k = wavenumber(m, n_t).unsigned_abs() as f64;
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        if m == 0 {
            // Zero-flux row: ghost u_{−1} = u_1.
            diag[0] = -2.0 / (ds * ds);
            sup[0] = 2.0 / (ds * ds);
            rhs[0] = modes[m];
        } else {
            diag[0] = 1.0;
            rhs[0] = Complex64::new(0.0, 0.0);
        }
        for i in 1..n {
            sub[i] = 1.0 / (ds * ds);
            diag[i] = -2.0 / (ds * ds) - k * k;
            sup[i] = 1.0 / (ds * ds);
            rhs[i] = modes[i * n_t + m];
        }
        let u = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
        for (i, &v) in u.iter().enumerate() {
            sol[i * n_t + m] = v;
        }
    }
    let mut out = vec![0.0; rows * n_t];
    for i in 0..rows {
        for j in 0..n_t {
            buf[j] = sol[i * n_t + j];
        }
        inv.process(&mut buf);
        for j in 0..n_t {
            out[i * n_t + j] = buf[j].re;
        }
    }
    Ok(out)
}

/// Outcome of the frame-rotation comparison.
#[derive(Debug, Clone, Copy)]
pub struct RotationCheck {
    /// `(1/2π)∮ dθ_rot`, an exact integer by branch-consistent summation.
    pub winding: i64,
    /// `sup |∂_θ θ_rot − ∂_s ν|` over interior rows.
    pub identity_residual: f64,
}

/// Compares the intrinsic coordinate frame against a supplied comparison
/// frame `(f₁, f₂)` given on the same grid: the relative rotation angle
/// `θ_rot = atan2(⟨e₁,f₂⟩, ⟨e₁,f₁⟩)`, its winding around the annulus, and
/// the defect of the identity `∂_θ θ_rot = ∂_s ν`.
pub fn rotation_field_check(
    c: &ConformalImmersionSample,
    f1: &[[f64; 3]],
    f2: &[[f64; 3]],
) -> Result<RotationCheck> {
    let g = &c.grid;
    let n_t = g.n_theta;
    if f1.len() != c.position.len() || f2.len() != c.position.len() {
        return Err(Error::Shape("comparison frame has the wrong shape".into()));
    }
    // The frames must span the same tangent planes.
    for idx in 0..c.position.len() {
        let nf = cross(f1[idx], f2[idx]);
        let nn = norm3(nf);
        if nn == 0.0 {
            return Err(Error::Precondition("degenerate comparison frame".into()));
        }
        let aligned = dot3(
            [nf[0] / nn, nf[1] / nn, nf[2] / nn],
            c.normal[idx],
        );
        if aligned < 1.0 - 1e-6 {
            return Err(Error::Precondition(format!(
                "comparison frame normal misaligned (⟨n,f₁×f₂⟩ = {aligned:.6}) at node {idx}"
            )));
        }
    }
    // Rotation angle field.
    let mut theta_rot = vec![0.0; c.position.len()];
    for idx in 0..c.position.len() {
        let (ax, _) = c.planar_gradient(idx);
        let na = norm3(ax);
        let e1 = [ax[0] / na, ax[1] / na, ax[2] / na];
        theta_rot[idx] = dot3(e1, f2[idx]).atan2(dot3(e1, f1[idx]));
    }
    // Winding along the mid ring with branch-consistent increments.
    let mid = g.n_s / 2;
    let mut total = 0.0;
    for j in 0..n_t {
        let a = theta_rot[mid * n_t + j];
        let b = theta_rot[mid * n_t + (j + 1) % n_t];
        let mut diff = b - a;
        while diff > PI {
            diff -= 2.0 * PI;
        }
        while diff < -PI {
            diff += 2.0 * PI;
        }
        total += diff;
    }
    let winding_f = total / (2.0 * PI);
    let winding = winding_f.round() as i64;
    if (winding_f - winding as f64).abs() > 1e-8 {
        return Err(Error::Solver(format!(
            "winding {winding_f} did not accumulate to an integer"
        )));
    }
    // Identity residual against ∂_s ν.
    let dec = decompose(c)?;
    let dt = 2.0 * PI / n_t as f64;
    let ds = g.ds();
    let mut residual = 0.0f64;
    for i in 2..g.n_s.saturating_sub(1) {
        for j in 0..n_t {
            let a = theta_rot[i * n_t + (j + n_t - 1) % n_t];
            let b = theta_rot[i * n_t + (j + 1) % n_t];
            let mut diff = b - a;
            while diff > PI {
                diff -= 2.0 * PI;
            }
            while diff < -PI {
                diff += 2.0 * PI;
            }
            let dtheta_rot = diff / (2.0 * dt);
            let nu_s =
                (dec.nu[(i + 1) * n_t + j] - dec.nu[(i - 1) * n_t + j]) / (2.0 * ds);
            residual = residual.max((dtheta_rot - nu_s).abs());
        }
    }
    Ok(RotationCheck { winding, identity_residual: residual })
}

/// Sup-norm defect (relative to the field scale) of the identity
/// `∇n = n×∇⊥n − 2H∇φ`, with `H = (1/2)e^{−2λ}⟨Δφ, n⟩` computed
/// discretely.
pub fn gauss_identity_check(c: &ConformalImmersionSample) -> Result<f64> {
    let g = &c.grid;
    let (rows, n_t) = (g.n_s + 1, g.n_theta);
    let ds = g.ds();
    let dt = 2.0 * PI / n_t as f64;
    let n_s_field = d_s_vec(g, &c.normal);
    let n_t_field = d_theta_vec(g, &c.normal);
    let mut defect_sup = 0.0f64;
    let mut scale_sup = 0.0f64;
    for i in 2..rows - 2 {
        let s = g.s(i);
        for j in 0..n_t {
            let idx = i * n_t + j;
            let w = Complex64::new(s, g.theta(j));
            let chain = (-w).exp();
            // Planar derivatives of n via the same chain rule as for φ.
            let mut nx = [0.0; 3];
            let mut ny = [0.0; 3];
            for cmp in 0..3 {
                let dw = Complex64::new(n_s_field[idx][cmp], 0.0)
                    - Complex64::new(0.0, n_t_field[idx][cmp]);
                let dz = chain * dw * 0.5;
                nx[cmp] = 2.0 * dz.re;
                ny[cmp] = -2.0 * dz.im;
            }
            // Δφ = e^{−2s}(∂_s² + ∂_θ²)φ, then H = (1/2)e^{−2λ}⟨Δφ, n⟩.
            let mut lap_phi = [0.0; 3];
            for (cmp, lap) in lap_phi.iter_mut().enumerate() {
                let at = |ii: usize, jj: usize| c.position[ii * n_t + (jj % n_t)][cmp];
                let dss = (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / (ds * ds);
                let dtt = (at(i, j + 1) - 2.0 * at(i, j) + at(i, j + n_t - 1)) / (dt * dt);
                *lap = (-2.0 * s).exp() * (dss + dtt);
            }
            let e2l = (2.0 * c.lambda[idx]).exp();
            let h = 0.5 * dot3(lap_phi, c.normal[idx]) / e2l;
            let (px, py) = c.planar_gradient(idx);
            // With n = e₁×e₂ the shape-operator expansion gives
            // ∂_x n = n×∂_y n − 2H ∂_xφ and ∂_y n = −n×∂_x n − 2H ∂_yφ.
            let rx = cross(c.normal[idx], ny);
            let ry = cross(c.normal[idx], [-nx[0], -nx[1], -nx[2]]);
            for cmp in 0..3 {
                let dx = nx[cmp] - (rx[cmp] - 2.0 * h * px[cmp]);
                let dy = ny[cmp] - (ry[cmp] - 2.0 * h * py[cmp]);
                defect_sup = defect_sup.max(dx.abs().max(dy.abs()));
                let sc = nx[cmp]
                    .abs()
                    .max(ny[cmp].abs())
                    .max((2.0 * h * px[cmp]).abs())
                    .max((2.0 * h * py[cmp]).abs());
                scale_sup = scale_sup.max(sc);
            }
        }
    }
    Ok(defect_sup / scale_sup.max(1e-30))
}

/// A sheet over a multiply punctured disk, given either as an explicit map
/// or through a holomorphic derivative `h = ∂_z(φ₁ + iφ₂)` (needed when
/// `h` has residues and the primitive is multivalued).
pub enum Sheet<'a> {
    /// Explicit immersion.
    Map(&'a dyn Fn(Complex64) -> [f64; 3]),
    /// Flat sheet with conformal factor `λ = log|h|`.
    HoloDeriv(&'a dyn Fn(Complex64) -> Complex64),
}

impl Sheet<'_> {
    /// The conformal factor at `z` (finite differences for maps).
    fn lambda_at(&self, z: Complex64) -> f64 {
        match self {
            Sheet::HoloDeriv(h) => h(z).norm().ln(),
            Sheet::Map(f) => {
                let h = 1e-5 * z.norm().max(1.0);
                let dx = sub3(f(z + h), f(z - h));
                let dy = sub3(f(z + Complex64::new(0.0, h)), f(z - Complex64::new(0.0, h)));
                let gx = [dx[0] / (2.0 * h), dx[1] / (2.0 * h), dx[2] / (2.0 * h)];
                let gy = [dy[0] / (2.0 * h), dy[1] / (2.0 * h), dy[2] / (2.0 * h)];
                (0.5 * (dot3(gx, gx) + dot3(gy, gy))).ln() * 0.5
            }
        }
    }

    /// `(1/2π)∮_{|z−a|=ρ} ∂_n λ` by trapezoid quadrature with a centered
    /// radial difference.
    fn lambda_flux(&self, center: Complex64, rho: f64, nodes: usize) -> f64 {
        let delta = 1e-3 * rho;
        let mut acc = 0.0;
        for j in 0..nodes {
            let t = 2.0 * PI * j as f64 / nodes as f64;
            let dir = Complex64::from_polar(1.0, t);
            let outer = self.lambda_at(center + dir * (rho + delta));
            let inner = self.lambda_at(center + dir * (rho - delta));
            acc += (outer - inner) / (2.0 * delta);
        }
        acc * rho / nodes as f64
    }
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// One excised disk.
#[derive(Debug, Clone, Copy)]
pub struct DiskSpec {
    /// Center.
    pub center: Complex64,
    /// Radius.
    pub radius: f64,
}

/// Per-boundary degrees on a multiply punctured disk.
#[derive(Debug, Clone)]
pub struct MultiDiskDegrees {
    /// Rounded per-disk degrees.
    pub per_disk: Vec<i64>,
    /// Rounded outer-boundary degree.
    pub total: i64,
    /// Raw per-disk fluxes.
    pub raw_per_disk: Vec<f64>,
    /// Raw outer flux.
    pub raw_total: f64,
}

/// Extracts the per-disk degrees `θʲ = (1/2π)∮_{∂B(a_j)} ∂_n λ` and the
/// outer-boundary total on `B(0, R)` minus the given disks. Fluxes farther
/// than 0.2 from an integer are an integrality failure, reported as an
/// error rather than silently rounded.
pub fn multi_disk_decompose(
    sheet: &Sheet<'_>,
    disks: &[DiskSpec],
    outer_radius: f64,
    nodes: usize,
) -> Result<MultiDiskDegrees> {
    if disks.is_empty() || nodes < 64 {
        return Err(Error::Domain("need at least one disk and 64 nodes".into()));
    }
    // Collar circles at 1.5× each radius must stay inside the domain and
    // clear of each other.
    for (a, da) in disks.iter().enumerate() {
        if da.center.norm() + 1.5 * da.radius >= 0.9 * outer_radius {
            return Err(Error::Precondition(format!("disk {a} touches the outer collar")));
        }
        for (b, db) in disks.iter().enumerate().skip(a + 1) {
            if (da.center - db.center).norm() <= 1.5 * (da.radius + db.radius) {
                return Err(Error::Precondition(format!("disks {a} and {b} overlap")));
            }
        }
    }
    let mut raw_per_disk = Vec::with_capacity(disks.len());
    let mut per_disk = Vec::with_capacity(disks.len());
    for (j, d) in disks.iter().enumerate() {
        let flux = sheet.lambda_flux(d.center, 1.5 * d.radius, nodes);
        let rounded = flux.round();
        if (flux - rounded).abs() > 0.2 {
            return Err(Error::Solver(format!(
                "integrality failure: flux {flux:.6} at disk {j} is not within 0.2 of an integer"
            )));
        }
        raw_per_disk.push(flux);
        per_disk.push(rounded as i64);
    }
    let raw_total = sheet.lambda_flux(Complex64::new(0.0, 0.0), 0.95 * outer_radius, nodes);
    let rounded = raw_total.round();
    if (raw_total - rounded).abs() > 0.2 {
        return Err(Error::Solver(format!(
            "integrality failure: outer flux {raw_total:.6} is not within 0.2 of an integer"
        )));
    }
    Ok(MultiDiskDegrees { per_disk, total: rounded as i64, raw_per_disk, raw_total })
}

/// Builtin analytic sheets for tests and the CLI.
pub mod sheets {
    use super::*;

    /// The monomial sheet `φ = (Re z^{θ₀}, Im z^{θ₀}, 0)`.
    pub fn monomial(theta0: u32) -> impl Fn(Complex64) -> [f64; 3] {
        move |z| {
            let p = z.powu(theta0);
            [p.re, p.im, 0.0]
        }
    }

    /// The graph perturbation `φ = (Re z², Im z², ε·Re z³)` (conformal only
    /// to order `ε²`).
    pub fn perturbed_graph(eps: f64) -> impl Fn(Complex64) -> [f64; 3] {
        move |z| {
            let p = z * z;
            [p.re, p.im, eps * (z * z * z).re]
        }
    }

    /// An exactly conformal perturbation of the `z^{θ₀}` sheet from the
    /// Weierstrass data `g = εz`, `ω = θ₀ z^{θ₀−1} dz`.
    pub fn conformal_perturbed(theta0: u32, eps: f64) -> impl Fn(Complex64) -> [f64; 3] {
        move |z| {
            let t = theta0 as f64;
            let zt = z.powu(theta0);
            // ∫(1−ε²z²)θ₀z^{θ₀−1} = z^{θ₀} − ε²θ₀ z^{θ₀+2}/(θ₀+2)
            let tail = z.powu(theta0 + 2) * (eps * eps * t / (t + 2.0));
            let phi1 = zt - tail;
            let phi2 = Complex64::new(0.0, 1.0) * (zt + tail);
            // ∫2εz·θ₀z^{θ₀−1} = 2εθ₀ z^{θ₀+1}/(θ₀+1)
            let phi3 = z.powu(theta0 + 1) * (2.0 * eps * t / (t + 1.0));
            [phi1.re, phi2.re, phi3.re]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n_s: usize, n_t: usize) -> NeckGrid {
        NeckGrid::new(0.05, 1.0, n_s, n_t).unwrap()
    }

    #[test]
    fn monomial_sheet_decomposes_exactly() {
        for theta0 in [1u32, 3] {
            let c = ConformalImmersionSample::from_map(
                grid(64, 64),
                sheets::monomial(theta0),
                1e-2,
            )
            .unwrap();
            let dec = decompose(&c).unwrap();
            assert!(
                (dec.d - (theta0 as f64 - 1.0)).abs() < 1e-3,
                "θ₀ = {theta0}: d = {}",
                dec.d
            );
            assert!(dec.mu_sup < 1e-3, "μ sup {}", dec.mu_sup);
            // λ is exactly (θ₀−1)s + log θ₀.
            // The discrete λ carries a constant O(Δs²) offset; the slope is
            // what matters.
            let expected = (theta0 as f64 - 1.0) * c.grid.s(3) + (theta0 as f64).ln();
            assert_relative_eq!(c.lambda[3 * 64], expected, epsilon = 1e-2);
        }
    }

    #[test]
    fn perturbed_graph_degree_rounds_to_one() {
        let c = ConformalImmersionSample::from_map(
            grid(128, 128),
            sheets::perturbed_graph(0.05),
            1e-2,
        )
        .unwrap();
        let dec = decompose(&c).unwrap();
        assert_eq!(dec.nearest, 1);
        assert!(dec.distance < 0.05, "distance {}", dec.distance);
    }

    #[test]
    fn flux_is_radius_independent_for_analytic_sheets() {
        let c = ConformalImmersionSample::from_map(grid(96, 64), sheets::monomial(3), 1e-2)
            .unwrap();
        let dec = decompose(&c).unwrap();
        let fluxes: Vec<f64> = [16usize, 32, 48, 64, 80]
            .iter()
            .map(|&i| nu_flux(&c.grid, &dec.nu, i))
            .collect();
        let spread = fluxes.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - fluxes.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-9, "radius dependence {spread:e}");
        for f in &fluxes {
            assert!((f - 2.0).abs() < 1e-4, "flux {f}");
        }
    }

    #[test]
    fn conformal_perturbation_converges_at_second_order() {
        let sheet = sheets::conformal_perturbed(3, 0.005);
        let coarse = decompose(
            &ConformalImmersionSample::from_map(grid(64, 64), &sheet, 1e-2).unwrap(),
        )
        .unwrap();
        let fine = decompose(
            &ConformalImmersionSample::from_map(grid(128, 128), &sheet, 1e-2).unwrap(),
        )
        .unwrap();
        let (e0, e1) = ((coarse.d - 2.0).abs(), (fine.d - 2.0).abs());
        assert!(e1 < 0.05);
        let order = (e0 / e1).log2();
        assert!(order > 1.8, "order {order} ({e0} → {e1})");
    }

    #[test]
    fn degenerate_map_is_rejected() {
        let result =
            ConformalImmersionSample::from_map(grid(16, 16), |_| [1.0, 2.0, 3.0], 1e-8);
        assert!(result.is_err());
    }

    #[test]
    fn non_conformal_map_is_rejected_at_tight_tolerance() {
        // An anisotropic stretch has an O(1) conformality defect.
        let result = ConformalImmersionSample::from_map(
            grid(32, 32),
            |z| [z.re, 2.0 * z.im, 0.0],
            1e-2,
        );
        match result {
            Err(Error::Precondition(_)) => {}
            other => panic!("expected precondition failure, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn rotation_against_cartesian_frame_winds_by_theta0_minus_1() {
        let c = ConformalImmersionSample::from_map(grid(64, 128), sheets::monomial(3), 1e-2)
            .unwrap();
        let f1 = vec![[1.0, 0.0, 0.0]; c.position.len()];
        let f2 = vec![[0.0, 1.0, 0.0]; c.position.len()];
        let check = rotation_field_check(&c, &f1, &f2).unwrap();
        assert_eq!(check.winding, 2);
        assert!(check.identity_residual < 1e-2, "residual {}", check.identity_residual);
    }

    #[test]
    fn rotation_of_identical_frames_is_trivial() {
        let c = ConformalImmersionSample::from_map(grid(32, 64), sheets::monomial(2), 1e-2)
            .unwrap();
        // Intrinsic frame as its own comparison frame.
        let mut f1 = vec![[0.0; 3]; c.position.len()];
        let mut f2 = vec![[0.0; 3]; c.position.len()];
        for idx in 0..c.position.len() {
            let (ax, ay) = c.planar_gradient(idx);
            let (na, nb) = (norm3(ax), norm3(ay));
            for cmp in 0..3 {
                f1[idx][cmp] = ax[cmp] / na;
                f2[idx][cmp] = ay[cmp] / nb;
            }
        }
        let check = rotation_field_check(&c, &f1, &f2).unwrap();
        assert_eq!(check.winding, 0);
        // Rotating the comparison frame by a fixed angle keeps winding 0.
        let (s, co) = (0.4f64.sin(), 0.4f64.cos());
        let g1: Vec<[f64; 3]> = f1
            .iter()
            .zip(&f2)
            .map(|(a, b)| {
                [
                    co * a[0] + s * b[0],
                    co * a[1] + s * b[1],
                    co * a[2] + s * b[2],
                ]
            })
            .collect();
        let g2: Vec<[f64; 3]> = f1
            .iter()
            .zip(&f2)
            .map(|(a, b)| {
                [
                    -s * a[0] + co * b[0],
                    -s * a[1] + co * b[1],
                    -s * a[2] + co * b[2],
                ]
            })
            .collect();
        let check2 = rotation_field_check(&c, &g1, &g2).unwrap();
        assert_eq!(check2.winding, 0);
    }

    #[test]
    fn mismatched_frame_normals_are_rejected() {
        let c = ConformalImmersionSample::from_map(grid(16, 32), sheets::monomial(1), 1e-2)
            .unwrap();
        let f1 = vec![[1.0, 0.0, 0.0]; c.position.len()];
        let f2 = vec![[0.0, 0.0, 1.0]; c.position.len()]; // wrong plane
        assert!(rotation_field_check(&c, &f1, &f2).is_err());
    }

    #[test]
    fn gauss_identity_on_sphere_patch() {
        // Inverse stereographic projection of an annulus onto the sphere.
        let sphere = |z: Complex64| {
            let d = 1.0 + z.norm_sqr();
            [2.0 * z.re / d, 2.0 * z.im / d, (z.norm_sqr() - 1.0) / d]
        };
        let c = ConformalImmersionSample::from_map(
            NeckGrid::new(0.5, 2.0, 96, 96).unwrap(),
            sphere,
            1e-3,
        )
        .unwrap();
        let res = gauss_identity_check(&c).unwrap();
        assert!(res < 2e-3, "sphere residual {res}");
    }

    #[test]
    fn gauss_identity_refines_at_second_order() {
        // The identity holds for conformal immersions; measure the grid
        // residual on the sphere patch at two resolutions.
        let sphere = |z: Complex64| {
            let d = 1.0 + z.norm_sqr();
            [2.0 * z.re / d, 2.0 * z.im / d, (z.norm_sqr() - 1.0) / d]
        };
        let run = |n: usize| {
            gauss_identity_check(
                &ConformalImmersionSample::from_map(
                    NeckGrid::new(0.5, 2.0, n, n).unwrap(),
                    sphere,
                    1e-2,
                )
                .unwrap(),
            )
            .unwrap()
        };
        let (coarse, fine) = (run(48), run(96));
        let order = (coarse / fine).log2();
        assert!(order > 1.5, "order {order} ({coarse} → {fine})");
    }

    #[test]
    fn multi_disk_product_sheet() {
        let a1 = Complex64::new(-0.4, 0.0);
        let a2 = Complex64::new(0.4, 0.0);
        // φ = (Re F, Im F, 0) with F' = (z−a₁)(z−a₂).
        let f = move |z: Complex64| {
            let fval = z * z * z / 3.0 - (a1 + a2) * z * z / 2.0 + a1 * a2 * z;
            [fval.re, fval.im, 0.0]
        };
        let disks = [
            DiskSpec { center: a1, radius: 0.05 },
            DiskSpec { center: a2, radius: 0.05 },
        ];
        let sheet = Sheet::Map(&f);
        let deg = multi_disk_decompose(&sheet, &disks, 1.0, 512).unwrap();
        assert_eq!(deg.per_disk, vec![1, 1]);
        assert_eq!(deg.total, 2);
    }

    #[test]
    fn multi_disk_negative_degree_sheet() {
        let a1 = Complex64::new(-0.4, 0.0);
        let a2 = Complex64::new(0.4, 0.0);
        let h = move |z: Complex64| (z - a1) * (z - a1) / (z - a2);
        let disks = [
            DiskSpec { center: a1, radius: 0.05 },
            DiskSpec { center: a2, radius: 0.05 },
        ];
        let sheet = Sheet::HoloDeriv(&h);
        let deg = multi_disk_decompose(&sheet, &disks, 1.0, 512).unwrap();
        assert_eq!(deg.per_disk, vec![2, -1]);
        assert_eq!(deg.total, 1);
    }

    #[test]
    fn overlapping_disks_are_rejected() {
        let h = |z: Complex64| z;
        let disks = [
            DiskSpec { center: Complex64::new(-0.05, 0.0), radius: 0.05 },
            DiskSpec { center: Complex64::new(0.05, 0.0), radius: 0.05 },
        ];
        assert!(multi_disk_decompose(&Sheet::HoloDeriv(&h), &disks, 1.0, 256).is_err());
    }

    #[test]
    fn wente_part_obeys_the_sup_bound() {
        let c = ConformalImmersionSample::from_map(
            NeckGrid::new(0.1, 1.0, 96, 96).unwrap(),
            sheets::conformal_perturbed(2, 0.3),
            1e-3,
        )
        .unwrap();
        let dec = decompose(&c).unwrap();
        // ‖μ‖_∞ ≤ (1/2π)‖∇e₁‖₂‖∇e₂‖₂ + grid slack.
        assert!(
            dec.mu_sup <= dec.frame_energy / (2.0 * PI) * 1.1 + 1e-3,
            "μ sup {} vs energy bound {}",
            dec.mu_sup,
            dec.frame_energy / (2.0 * PI)
        );
    }
}
