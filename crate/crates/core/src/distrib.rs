//! Distributional residue of a branched Willmore surface at a branch point.
//!
//! Near a branch point of multiplicity `θ₀`, the mean curvature of a branched
//! Willmore immersion blows up like
//!
//! ```text
//! H(z) = Re(C₀ / zᵐ) + γ₀ log|z| + O(|z|^{1−m}),    1 ≤ m ≤ θ₀ − 1,
//! ```
//!
//! with a complex coefficient vector `C₀` and a real "first residue" vector
//! `γ₀`.  Pairing the Willmore operator against a test variation
//! `w = w₀ + Re(γ zᵐ) + O(|z|^{m+1})` and shrinking a disc of radius `ε`
//! around the branch point produces the boundary integral
//!
//! ```text
//! B(ε) = ∮_{∂B_ε} ( ⟨∂_r w, H⟩ − ⟨w, ∂_r H⟩ ) ds,
//! ```
//!
//! whose limit as `ε → 0` is the Dirac-mass coefficient
//!
//! ```text
//! lim B(ε) = 2πm · Re⟨γ, C₀⟩ − 2π⟨w₀, γ₀⟩.
//! ```
//!
//! Here `⟨·,·⟩` between complex 3-vectors is the bilinear (unconjugated) dot
//! product, and the real part is taken afterwards.  Worked 1-D example: with
//! `C₀ = i` and `γ = i` one has `⟨γ, C₀⟩ = i·i = −1`, so
//! `Re⟨γ, C₀⟩ = −1`, not `+1` as the Hermitian product would give.
//!
//! [`boundary_pairing`] evaluates `B(ε)` by trapezoidal quadrature on the
//! circle (spectrally accurate for these trigonometric-polynomial-times-log
//! integrands), [`residue_limit`] extrapolates the `ε → 0` limit with an
//! observed convergence order, and [`smoothness_criterion`] expresses the
//! removability criterion: the immersion is smooth across the branch point
//! if and only if `γ₀ = 0` and the residue order `r` vanishes.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Bilinear (unconjugated) dot product of complex 3-vectors.
fn bilinear(a: &[Complex64; 3], b: &[Complex64; 3]) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Leading-order local model of a branched Willmore surface at a branch point.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchModel {
    /// Branch multiplicity `θ₀ ≥ 2`.
    pub theta0: u32,
    /// Pole order `m` of the mean curvature, `1 ≤ m ≤ θ₀ − 1`.
    pub m: u32,
    /// Leading mean-curvature coefficient `C₀`.
    pub c0: [Complex64; 3],
    /// First residue `γ₀` (real vector multiplying `log|z|`).
    pub gamma0: [f64; 3],
    /// Leading immersion coefficient `A₀`, isotropic: `⟨A₀, A₀⟩ = 0`.
    pub a0: [Complex64; 3],
}

impl BranchModel {
    /// Validates the invariants `θ₀ ≥ 2`, `1 ≤ m ≤ θ₀ − 1`, and isotropy of
    /// `A₀` (relative to its magnitude).
    pub fn new(
        theta0: u32,
        m: u32,
        c0: [Complex64; 3],
        gamma0: [f64; 3],
        a0: [Complex64; 3],
    ) -> Result<Self> {
        if theta0 < 2 {
            return Err(Error::Domain(format!(
                "branch multiplicity must satisfy theta0 >= 2, got {theta0}"
            )));
        }
        if m < 1 || m > theta0 - 1 {
            return Err(Error::Domain(format!(
                "pole order must satisfy 1 <= m <= theta0 - 1 = {}, got {m}",
                theta0 - 1
            )));
        }
        let scale: f64 = a0.iter().map(|c| c.norm_sqr()).sum();
        let iso = bilinear(&a0, &a0).norm();
        if iso > 1e-10 * scale.max(1.0) {
            return Err(Error::Domain(format!(
                "leading coefficient A0 must be isotropic (<A0,A0> = 0), \
                 got |<A0,A0>| = {iso:.3e}"
            )));
        }
        Ok(Self { theta0, m, c0, gamma0, a0 })
    }
}

/// Admissible test variation `w = w₀ + Re(γ zᵐ) + Σ Re(γ_{jk} zʲ z̄ᵏ)` with
/// every higher term satisfying `j + k > m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestVariation {
    /// Value `w(0)`.
    pub w0: [f64; 3],
    /// Coefficient of `Re(γ zᵐ)`.
    pub gamma: [Complex64; 3],
    /// Optional higher jets `(j, k, γ_{jk})` contributing `Re(γ_{jk} zʲ z̄ᵏ)`.
    pub higher: Vec<(u32, u32, [Complex64; 3])>,
}

impl TestVariation {
    /// A variation with only the constant and `zᵐ` parts.
    pub fn leading(w0: [f64; 3], gamma: [Complex64; 3]) -> Self {
        Self { w0, gamma, higher: Vec::new() }
    }

    fn validate(&self, m: u32) -> Result<()> {
        for &(j, k, _) in &self.higher {
            if j + k <= m {
                return Err(Error::Domain(format!(
                    "higher jet z^{j} zbar^{k} has total degree {} <= m = {m}; \
                     it is not a higher-order term",
                    j + k
                )));
            }
        }
        Ok(())
    }
}

/// Closed-form value of the `ε → 0` limit of [`boundary_pairing`]:
/// `2πm·Re⟨γ, C₀⟩ − 2π⟨w₀, γ₀⟩`.
pub fn distributional_pairing(model: &BranchModel, w: &TestVariation) -> f64 {
    let m = f64::from(model.m);
    let c_term = bilinear(&w.gamma, &model.c0).re;
    let log_term: f64 = w
        .w0
        .iter()
        .zip(model.gamma0.iter())
        .map(|(a, b)| a * b)
        .sum();
    2.0 * std::f64::consts::PI * (m * c_term - log_term)
}

/// Evaluates the boundary integral
/// `B(ε) = ∮_{∂B_ε}(⟨∂_r w, H⟩ − ⟨w, ∂_r H⟩) ds` with
/// `H = Re(C₀/zᵐ) + γ₀ log|z|` by trapezoidal quadrature with `nodes`
/// points (at least 4096).
pub fn boundary_pairing(
    model: &BranchModel,
    w: &TestVariation,
    eps: f64,
    nodes: usize,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!(
            "radius must satisfy 0 < eps < 1, got {eps}"
        )));
    }
    if nodes < 4096 {
        return Err(Error::Precondition(format!(
            "quadrature needs at least 4096 nodes, got {nodes}"
        )));
    }
    w.validate(model.m)?;
    let m = i32::try_from(model.m).expect("pole order fits in i32");
    let c0_mag = model.c0.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if c0_mag * eps.powi(-m) > 1e100 {
        return Err(Error::Domain(format!(
            "eps = {eps} too small: |C0| eps^-m = {:.3e} overflows the \
             working precision",
            c0_mag * eps.powi(-m)
        )));
    }

    let mf = f64::from(model.m);
    let log_eps = eps.ln();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut total = 0.0;
    for i in 0..nodes {
        let theta = two_pi * (i as f64) / (nodes as f64);
        // z = eps e^{iθ} on the circle of radius eps.
        let phase = Complex64::from_polar(1.0, theta);
        let z_m = Complex64::from_polar(eps.powi(m), mf * theta);

        let mut integrand = 0.0;
        for c in 0..3 {
            // w and ∂_r w for component c.
            let mut w_val = w.w0[c] + (w.gamma[c] * z_m).re;
            let mut dw_dr = mf * eps.powi(m - 1) * (w.gamma[c] * phase.powf(mf)).re;
            for &(j, k, ref coeff) in &w.higher {
                let jk = f64::from(j) + f64::from(k);
                let ang = (f64::from(j) - f64::from(k)) * theta;
                let re_part = (coeff[c] * Complex64::from_polar(1.0, ang)).re;
                w_val += eps.powf(jk) * re_part;
                dw_dr += jk * eps.powf(jk - 1.0) * re_part;
            }
            // H = Re(C0 z^{-m}) + γ0 log r and its radial derivative.
            let c0_phase = (model.c0[c] * Complex64::from_polar(1.0, -mf * theta)).re;
            let h_val = eps.powi(-m) * c0_phase + model.gamma0[c] * log_eps;
            let dh_dr = -mf * eps.powi(-m - 1) * c0_phase + model.gamma0[c] / eps;
            integrand += dw_dr * h_val - w_val * dh_dr;
        }
        total += integrand;
    }
    // ds = eps dθ; trapezoid on the periodic circle is a plain mean.
    Ok(total * two_pi * eps / (nodes as f64))
}

/// Extrapolated `ε → 0` limit of [`boundary_pairing`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueLimit {
    /// Richardson-extrapolated limit.
    pub limit: f64,
    /// Observed convergence order (least-squares slope of the increments);
    /// `None` when the samples are constant to machine precision.
    pub order: Option<f64>,
    /// The raw samples `B(ε_i)` in the order supplied.
    pub samples: Vec<f64>,
}

/// Evaluates `B(ε)` along a strictly decreasing sequence of radii and
/// Richardson-extrapolates the limit, reporting the observed convergence
/// order of the increments.
pub fn residue_limit(
    model: &BranchModel,
    w: &TestVariation,
    epsilons: &[f64],
    nodes: usize,
) -> Result<ResidueLimit> {
    if epsilons.len() < 4 {
        return Err(Error::Precondition(format!(
            "need at least 4 radii, got {}",
            epsilons.len()
        )));
    }
    if epsilons.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::Precondition(
            "radii must be strictly decreasing".into(),
        ));
    }
    let samples: Vec<f64> = epsilons
        .iter()
        .map(|&e| boundary_pairing(model, w, e, nodes))
        .collect::<Result<_>>()?;

    let scale = samples.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    let diffs: Vec<f64> = samples.windows(2).map(|p| p[1] - p[0]).collect();
    if diffs.iter().all(|d| d.abs() < 1e-13 * scale) {
        return Ok(ResidueLimit {
            limit: *samples.last().expect("nonempty samples"),
            order: None,
            samples,
        });
    }

    // Least-squares slope of log|Δ_i| against log ε_{i+1}: the increment
    // B(ε_{i+1}) − B(ε_i) scales like ε^p when B(ε) = L + O(ε^p).
    let pts: Vec<(f64, f64)> = diffs
        .iter()
        .enumerate()
        .filter(|(_, d)| d.abs() > 1e-15 * scale)
        .map(|(i, d)| (epsilons[i + 1].ln(), d.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Solver(
            "increments too irregular to fit a convergence order".into(),
        ));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let p = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    let k = samples.len() - 1;
    let (b_prev, b_last) = (samples[k - 1], samples[k]);
    let (e_prev, e_last) = (epsilons[k - 1], epsilons[k]);
    let limit = b_last + (b_last - b_prev) * e_last.powf(p) / (e_prev.powf(p) - e_last.powf(p));
    Ok(ResidueLimit { limit, order: Some(p), samples })
}

/// Removability criterion at a branch point: the immersion extends smoothly
/// if and only if the first residue `γ₀` vanishes and the second-residue
/// order `r` is zero.  Requires `r ≤ θ₀ − 1`.
pub fn smoothness_criterion(theta0: u32, r: u32, gamma0: &[f64; 3]) -> Result<bool> {
    if theta0 < 1 {
        return Err(Error::Domain("multiplicity must be at least 1".into()));
    }
    if r > theta0 - 1 {
        return Err(Error::Domain(format!(
            "residue order r = {r} exceeds theta0 - 1 = {}",
            theta0 - 1
        )));
    }
    Ok(gamma0.iter().all(|&g| g == 0.0) && r == 0)
}
