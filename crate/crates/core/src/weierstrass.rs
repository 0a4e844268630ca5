//! The Weierstrass representation of complete minimal surfaces with finite
//! total curvature: rational Gauss map `g` and height differential
//! `ω = h(z) dz`, the associated triple of meromorphic forms
//!
//! ```text
//! φ₁ = (1 − g²) ω,   φ₂ = i (1 + g²) ω,   φ₃ = 2 g ω,
//! ```
//!
//! residues and flux vectors at ends, local asymptotic expansions of the
//! immersion near an end (leading vector `A₀`, first independent correction
//! `A₁`, its order gap `k`, and the branch-type invariant `r`), the
//! Jorge–Meeks total-curvature relation, and conformality checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerance used when trimming numerically zero polynomial coefficients.
const COEFF_EPS: f64 = 1e-12;

/// A polynomial with complex coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    /// Coefficients `c₀ + c₁ z + …`; trimmed so the last entry is nonzero
    /// (the zero polynomial is the empty vector).
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    /// Builds a polynomial, trimming trailing coefficients below tolerance
    /// relative to the largest one.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let tol = COEFF_EPS * scale.max(1.0);
        while coeffs.last().is_some_and(|c| c.norm() <= tol) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// The zero polynomial.
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// The constant 1.
    pub fn one() -> Self {
        Self { coeffs: vec![Complex64::new(1.0, 0.0)] }
    }

    /// `z^n`.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
        coeffs[n] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    /// Constant polynomial.
    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Whether this is the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Sum.
    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly::new(out)
    }

    /// Difference.
    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Product.
    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out =
            vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Scalar multiple.
    pub fn scale(&self, c: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// Derivative.
    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (i + 1) as f64)
                .collect(),
        )
    }

    /// Euclidean division: returns `(quotient, remainder)`.
    pub fn div_rem(&self, div: &Poly) -> Result<(Poly, Poly)> {
        if div.is_zero() {
            return Err(Error::Domain("polynomial division by zero".into()));
        }
        let dd = div.degree().unwrap();
        let lead = div.coeffs[dd];
        let mut rem = self.coeffs.clone();
        let mut quot = vec![
            Complex64::new(0.0, 0.0);
            self.coeffs.len().saturating_sub(dd)
        ];
        while rem.len() > dd {
            let k = rem.len() - 1 - dd;
            let q = rem[rem.len() - 1] / lead;
            quot[k] = q;
            for (i, &c) in div.coeffs.iter().enumerate() {
                let idx = k + i;
                rem[idx] -= q * c;
            }
            rem.pop();
        }
        Ok((Poly::new(quot), Poly::new(rem)))
    }

    /// Approximate monic greatest common divisor via the Euclidean
    /// algorithm with relative trimming tolerance.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            // Normalize to keep the tolerance meaningful.
            let lead = b.coeffs[b.coeffs.len() - 1];
            b = b.scale(lead.inv());
            let (_, r) = a.div_rem(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        if a.is_zero() {
            return Poly::zero();
        }
        let lead = a.coeffs[a.coeffs.len() - 1];
        a.scale(lead.inv())
    }

    /// Multiplicity of the root at `p` (zero if `p` is not a root),
    /// determined by repeated division with tolerance.
    pub fn root_multiplicity(&self, p: Complex64) -> usize {
        let mut f = self.clone();
        let mut m = 0;
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let tol = 1e-9 * scale.max(1.0);
        while !f.is_zero() && f.eval(p).norm() <= tol * (1.0 + p.norm()).powi(f.coeffs.len() as i32) {
            let lin = Poly::new(vec![-p, Complex64::new(1.0, 0.0)]);
            let (q, _) = f.div_rem(&lin).unwrap();
            f = q;
            m += 1;
        }
        m
    }

    /// Taylor shift: the polynomial `q(w) = self(p + w)`.
    pub fn shift(&self, p: Complex64) -> Poly {
        // Synthetic Horner shift.
        let mut coeffs = self.coeffs.clone();
        let n = coeffs.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let nxt = coeffs[j + 1];
                coeffs[j] += nxt * p;
            }
        }
        Poly { coeffs }
    }
}

/// A reduced rational function `num/den` with monic denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMap {
    /// Numerator.
    pub num: Poly,
    /// Denominator (monic).
    pub den: Poly,
}

impl RationalMap {
    /// Builds the reduced form of `num/den`.
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("rational map with zero denominator".into()));
        }
        let g = num.gcd(&den);
        let (num, den) = if g.degree().unwrap_or(0) > 0 {
            (num.div_rem(&g)?.0, den.div_rem(&g)?.0)
        } else {
            (num, den)
        };
        let lead = den.coeffs[den.coeffs.len() - 1];
        Ok(Self { num: num.scale(lead.inv()), den: den.scale(lead.inv()) })
    }

    /// Builds a polynomial map.
    pub fn from_poly(p: Poly) -> Self {
        Self { num: p, den: Poly::one() }
    }

    /// Evaluation (finite points away from poles).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Degree as a map of the Riemann sphere: `max(deg num, deg den)`.
    pub fn map_degree(&self) -> usize {
        self.num.degree().unwrap_or(0).max(self.den.degree().unwrap_or(0))
    }

    /// Sum, product, and scalar combinations.
    pub fn add(&self, other: &RationalMap) -> Result<RationalMap> {
        RationalMap::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    /// Product.
    pub fn mul(&self, other: &RationalMap) -> Result<RationalMap> {
        RationalMap::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    /// Scalar multiple.
    pub fn scale(&self, c: Complex64) -> RationalMap {
        RationalMap { num: self.num.scale(c), den: self.den.clone() }
    }

    /// Laurent coefficients `c_{-m} w^{-m} + … ` of the function at the
    /// finite point `p` (local variable `w = z − p`), through order
    /// `w^{n_max}` inclusive. Returns `(lowest_order, coeffs ascending)`.
    pub fn laurent_at(&self, p: Complex64, n_max: i64) -> Result<(i64, Vec<Complex64>)> {
        let num = self.num.shift(p);
        let den = self.den.shift(p);
        laurent_series(&num, &den, n_max)
    }

    /// The function rewritten in the chart at infinity, `w = 1/z`:
    /// returns the rational function `F(w) = f(1/w)` as a reduced map.
    pub fn at_infinity(&self) -> Result<RationalMap> {
        let dn = self.num.degree().unwrap_or(0);
        let dd = self.den.degree().unwrap_or(0);
        let d = dn.max(dd);
        // f(1/w) = w^{d-dn} rev(num) / (w^{d-dd} rev(den)).
        let rev = |p: &Poly, pad: usize| {
            let mut c: Vec<Complex64> = p.coeffs.iter().rev().copied().collect();
            let mut shifted = vec![Complex64::new(0.0, 0.0); pad];
            shifted.append(&mut c);
            Poly::new(shifted)
        };
        if self.num.is_zero() {
            return Ok(RationalMap::from_poly(Poly::zero()));
        }
        RationalMap::new(rev(&self.num, d - dn), rev(&self.den, d - dd))
    }
}

/// Laurent series of `num/den` around 0: `den = w^v · unit`, series of
/// `num/unit` shifted by `−v`. Returns `(lowest_order, coefficients)` where
/// `coeffs[i]` multiplies `w^{lowest_order + i}`, through `w^{n_max}`.
fn laurent_series(num: &Poly, den: &Poly, n_max: i64) -> Result<(i64, Vec<Complex64>)> {
    if den.is_zero() {
        return Err(Error::Domain("Laurent series of f/0".into()));
    }
    if num.is_zero() {
        return Ok((0, Vec::new()));
    }
    let scale = den.coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let v = den
        .coeffs
        .iter()
        .position(|c| c.norm() > COEFF_EPS * scale)
        .unwrap();
    let unit: Vec<Complex64> = den.coeffs[v..].to_vec();
    // Lowest order of the numerator.
    let nscale = num.coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let nv = num
        .coeffs
        .iter()
        .position(|c| c.norm() > COEFF_EPS * nscale)
        .unwrap();
    let low = nv as i64 - v as i64;
    let terms = (n_max - low + 1).max(0) as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); terms];
    // Power-series division of num[nv..] by unit.
    let u0 = unit[0];
    for i in 0..terms {
        let mut acc = num.coeffs.get(nv + i).copied().unwrap_or_default();
        for j in 1..=i.min(unit.len() - 1) {
            acc -= unit[j] * out[i - j];
        }
        out[i] = acc / u0;
    }
    Ok((low, out))
}

/// A location on the Riemann sphere where a surface end sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EndPoint {
    /// A finite puncture.
    Finite {
        /// Real part.
        re: f64,
        /// Imaginary part.
        im: f64,
    },
    /// The point at infinity.
    Infinity,
}

impl EndPoint {
    /// Finite end from a complex number.
    pub fn finite(z: Complex64) -> Self {
        Self::Finite { re: z.re, im: z.im }
    }

    /// The finite location, if any.
    pub fn as_complex(&self) -> Option<Complex64> {
        match *self {
            EndPoint::Finite { re, im } => Some(Complex64::new(re, im)),
            EndPoint::Infinity => None,
        }
    }
}

/// Weierstrass data `(g, ω)` with a list of declared ends (punctures).
#[derive(Debug, Clone)]
pub struct WeierstrassSurface {
    /// The Gauss map.
    pub gauss: RationalMap,
    /// The height differential `ω = h(z) dz`.
    pub height: RationalMap,
    /// Declared punctures.
    pub ends: Vec<EndPoint>,
}

/// Serialized form of a surface: flat coefficient lists.
#[derive(Debug, Serialize, Deserialize)]
struct SurfaceRepr {
    gauss_num: Vec<(f64, f64)>,
    gauss_den: Vec<(f64, f64)>,
    height_num: Vec<(f64, f64)>,
    height_den: Vec<(f64, f64)>,
    ends: Vec<EndPoint>,
}

impl Serialize for WeierstrassSurface {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pack = |p: &Poly| p.coeffs.iter().map(|c| (c.re, c.im)).collect();
        SurfaceRepr {
            gauss_num: pack(&self.gauss.num),
            gauss_den: pack(&self.gauss.den),
            height_num: pack(&self.height.num),
            height_den: pack(&self.height.den),
            ends: self.ends.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeierstrassSurface {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SurfaceRepr::deserialize(d)?;
        let unpack = |v: Vec<(f64, f64)>| {
            Poly::new(v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
        };
        let gauss = RationalMap::new(unpack(repr.gauss_num), unpack(repr.gauss_den))
            .map_err(serde::de::Error::custom)?;
        let height = RationalMap::new(unpack(repr.height_num), unpack(repr.height_den))
            .map_err(serde::de::Error::custom)?;
        Ok(Self { gauss, height, ends: repr.ends })
    }
}

/// The asymptotic expansion of the immersion at one end.
#[derive(Debug, Clone)]
pub struct EndExpansion {
    /// Pole order `m` of the immersion in the local chart: `Φ ~ A₀ w^{−m}`.
    pub m: usize,
    /// Leading coefficient vector.
    pub a0: [Complex64; 3],
    /// First coefficient vector independent of `A₀` (before removing the
    /// `A₀` component), at order `w^{−m+k}`.
    pub a1: [Complex64; 3],
    /// Order gap between `A₀` and `A₁`.
    pub k: usize,
    /// Branch-type invariant `r = max(m − k, 0)`.
    pub r: usize,
    /// Whether the end carries nonzero flux (logarithmic term); when it
    /// does, `r` is not geometrically meaningful and is reported as `None`
    /// by [`WeierstrassSurface::end_report`].
    pub has_flux: bool,
}

impl WeierstrassSurface {
    /// Builds a surface after light validation.
    pub fn new(gauss: RationalMap, height: RationalMap, ends: Vec<EndPoint>) -> Result<Self> {
        if ends.is_empty() {
            return Err(Error::InvalidConfiguration(
                "a complete surface needs at least one end".into(),
            ));
        }
        Ok(Self { gauss, height, ends })
    }

    /// The triple of meromorphic forms `(φ₁, φ₂, φ₃)` as rational
    /// functions of `z` (coefficients of `dz`).
    pub fn forms(&self) -> Result<[RationalMap; 3]> {
        let one = RationalMap::from_poly(Poly::one());
        let g2 = self.gauss.mul(&self.gauss)?;
        let i = Complex64::new(0.0, 1.0);
        let phi1 = one.add(&g2.scale(Complex64::new(-1.0, 0.0)))?.mul(&self.height)?;
        let phi2 = one.add(&g2)?.mul(&self.height)?.scale(i);
        let phi3 = self.gauss.mul(&self.height)?.scale(Complex64::new(2.0, 0.0));
        Ok([phi1, phi2, phi3])
    }

    /// The three forms expanded in the local chart at `end`. For a finite
    /// puncture `p` the local variable is `w = z − p`; at infinity it is
    /// `w = 1/z`, with the form transforming as `f(z)dz = −f(1/w)w^{−2}dw`.
    /// Returns `(lowest_order, series)` per component, through `w^{n_max}`.
    pub fn forms_at_end(
        &self,
        end: EndPoint,
        n_max: i64,
    ) -> Result<[(i64, Vec<Complex64>); 3]> {
        let forms = self.forms()?;
        let mut out: Vec<(i64, Vec<Complex64>)> = Vec::with_capacity(3);
        for f in &forms {
            let entry = match end {
                EndPoint::Finite { re, im } => {
                    f.laurent_at(Complex64::new(re, im), n_max)?
                }
                EndPoint::Infinity => {
                    // f(1/w) · (−1/w²)
                    let at_inf = f.at_infinity()?;
                    let shifted = RationalMap {
                        num: at_inf.num.scale(Complex64::new(-1.0, 0.0)),
                        den: Poly::monomial(2).mul(&at_inf.den),
                    };
                    shifted.laurent_at(Complex64::new(0.0, 0.0), n_max)?
                }
            };
            out.push(entry);
        }
        Ok(out.try_into().expect("three components"))
    }

    /// Residue vector of the three forms at `end` (algebraically, from the
    /// Laurent expansion).
    pub fn residues(&self, end: EndPoint) -> Result<[Complex64; 3]> {
        let series = self.forms_at_end(end, 0)?;
        let mut res = [Complex64::new(0.0, 0.0); 3];
        for (c, (low, coeffs)) in res.iter_mut().zip(series.iter()) {
            let idx = -1 - low;
            if idx >= 0 {
                *c = coeffs.get(idx as usize).copied().unwrap_or_default();
            }
        }
        Ok(res)
    }

    /// Residue vector by direct contour quadrature on a circle of radius
    /// `rho` around the end in its chart (trapezoid, spectrally exact for
    /// meromorphic integrands). Cross-validates [`Self::residues`].
    pub fn residues_by_contour(
        &self,
        end: EndPoint,
        rho: f64,
        nodes: usize,
    ) -> Result<[Complex64; 3]> {
        if !rho.is_finite() || rho <= 0.0 || nodes < 16 {
            return Err(Error::Domain("contour needs rho > 0, nodes ≥ 16".into()));
        }
        let forms = self.forms()?;
        let mut out = [Complex64::new(0.0, 0.0); 3];
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        for (o, f) in out.iter_mut().zip(forms.iter()) {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..nodes {
                let t = 2.0 * PI * j as f64 / nodes as f64;
                let w = Complex64::from_polar(rho, t);
                match end {
                    EndPoint::Finite { re, im } => {
                        let z = Complex64::new(re, im) + w;
                        // ∮ f(z) dz, dz = i w dθ
                        acc += f.eval(z) * Complex64::new(0.0, 1.0) * w;
                    }
                    EndPoint::Infinity => {
                        // chart w = 1/z: ∮ −f(1/w) w^{−2} dw
                        let val = -f.eval(w.inv()) / (w * w);
                        acc += val * Complex64::new(0.0, 1.0) * w;
                    }
                }
            }
            acc *= 2.0 * PI / nodes as f64;
            *o = acc / two_pi_i;
        }
        Ok(out)
    }

    /// Flux vector at an end: `Re(res) / 2` componentwise (the period of
    /// the real immersion `Φ = Re ∫ φ` around the puncture, divided by 2π
    /// and normalized).
    pub fn flux_vector(&self, end: EndPoint) -> Result<[f64; 3]> {
        let res = self.residues(end)?;
        Ok([res[0].re / 2.0, res[1].re / 2.0, res[2].re / 2.0])
    }

    /// Whether any end carries a nonzero flux (vertical or horizontal).
    pub fn has_nonzero_flux(&self) -> Result<bool> {
        for &e in &self.ends {
            let res = self.residues(e)?;
            if res.iter().any(|c| c.norm() > 1e-9) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Degree of the Gauss map.
    pub fn gauss_degree(&self) -> usize {
        self.gauss.map_degree()
    }

    /// Pole order of the immersion at each end in its chart (`m` in the
    /// expansion `Φ ~ A₀ w^{−m}`), via [`Self::end_expand`].
    pub fn end_orders(&self) -> Result<Vec<usize>> {
        self.ends.iter().map(|&e| Ok(self.end_expand(e)?.m)).collect()
    }

    /// Jorge–Meeks relation: with end orders `m_j`, the Gauss-map degree of
    /// a complete immersed finite-total-curvature surface of genus zero is
    /// `deg = −1 + (1/2) Σ (m_j + 1)`, and the total curvature is
    /// `−4π · deg`. Errors when `Σ (m_j + 1)` is odd (no genus-zero surface
    /// has such data).
    pub fn jorge_meeks(&self) -> Result<(usize, f64)> {
        let orders = self.end_orders()?;
        let s: usize = orders.iter().map(|&m| m + 1).sum();
        if !s.is_multiple_of(2) {
            return Err(Error::InvalidConfiguration(format!(
                "end orders {orders:?} have odd Jorge–Meeks sum {s}"
            )));
        }
        let deg = s / 2 - 1;
        Ok((deg, -4.0 * PI * deg as f64))
    }

    /// Checks the pointwise conformality identity `φ₁² + φ₂² + φ₃² = 0`,
    /// which holds identically for the Weierstrass triple. Returns the
    /// largest coefficient norm of the numerator of the sum (should be at
    /// rounding level).
    pub fn conformality_residual(&self) -> Result<f64> {
        let [p1, p2, p3] = self.forms()?;
        let sq = |f: &RationalMap| -> Result<RationalMap> {
            Ok(RationalMap {
                num: f.num.mul(&f.num),
                den: f.den.mul(&f.den),
            })
        };
        let sum = sq(&p1)?.add(&sq(&p2)?)?.add(&sq(&p3)?)?;
        let scale = {
            let s = |f: &RationalMap| {
                f.num.coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max)
            };
            s(&p1).max(s(&p2)).max(s(&p3)).powi(2).max(1.0)
        };
        Ok(sum
            .num
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
            / scale)
    }

    /// Asymptotic expansion of the immersion at `end`.
    ///
    /// Integrating the forms termwise in the chart gives
    /// `Φ_c = Σ c_n w^{n+1}/(n+1)` plus possibly a logarithm; `m` is the
    /// largest pole order among components, `A₀` the vector at `w^{−m}`,
    /// `A₁` the first later coefficient vector not parallel to `A₀`, at
    /// order gap `k`, and `r = max(m − k, 0)`.
    pub fn end_expand(&self, end: EndPoint) -> Result<EndExpansion> {
        let series = self.forms_at_end(end, 8)?;
        let res = self.residues(end)?;
        let has_flux = res.iter().any(|c| c.norm() > 1e-9);
        // Antiderivative coefficients per component: map c_n w^n (n ≠ −1)
        // to c_n/(n+1) at power n+1. Collect into a common window of powers.
        let mut lows = Vec::new();
        for (low, coeffs) in &series {
            if coeffs.is_empty() {
                continue;
            }
            lows.push(*low + 1);
        }
        let min_pow = lows.iter().copied().min().unwrap_or(0).min(-1);
        let max_pow = 9i64;
        let width = (max_pow - min_pow + 1) as usize;
        let mut phi = vec![[Complex64::new(0.0, 0.0); 3]; width];
        for (c_idx, (low, coeffs)) in series.iter().enumerate() {
            for (i, &c) in coeffs.iter().enumerate() {
                let n = low + i as i64;
                if n == -1 {
                    continue; // logarithmic term, tracked through has_flux
                }
                let p = n + 1;
                if p < min_pow || p > max_pow {
                    continue;
                }
                phi[(p - min_pow) as usize][c_idx] += c / (n + 1) as f64;
            }
        }
        let norm = |v: &[Complex64; 3]| {
            (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt()
        };
        // Leading order: most negative power with nonvanishing vector.
        let scale = phi.iter().map(&norm).fold(0.0f64, f64::max);
        if scale == 0.0 {
            return Err(Error::DegenerateExpansion(
                "immersion has no pole at the declared end".into(),
            ));
        }
        let lead_idx = phi
            .iter()
            .position(|v| norm(v) > 1e-10 * scale)
            .ok_or_else(|| Error::DegenerateExpansion("empty expansion".into()))?;
        let lead_pow = min_pow + lead_idx as i64;
        if lead_pow >= 0 {
            return Err(Error::DegenerateExpansion(
                "immersion stays bounded at the declared end".into(),
            ));
        }
        let m = (-lead_pow) as usize;
        let a0 = phi[lead_idx];
        let a0n = norm(&a0);
        // First later vector with a component independent of A₀.
        let mut found: Option<(usize, [Complex64; 3])> = None;
        for (idx, v) in phi.iter().enumerate().skip(lead_idx + 1) {
            if norm(v) <= 1e-10 * scale {
                continue;
            }
            // Component of v orthogonal to A₀ under the Hermitian pairing.
            let inner = v[0] * a0[0].conj() + v[1] * a0[1].conj() + v[2] * a0[2].conj();
            let coeff = inner / Complex64::new(a0n * a0n, 0.0);
            let resid = [
                v[0] - coeff * a0[0],
                v[1] - coeff * a0[1],
                v[2] - coeff * a0[2],
            ];
            if norm(&resid) > 1e-8 * scale {
                found = Some((idx, *v));
                break;
            }
        }
        let (k, a1) = match found {
            Some((idx, v)) => ((idx - lead_idx), v),
            None => {
                return Err(Error::DegenerateExpansion(
                    "all expansion coefficients are parallel to the leading vector".into(),
                ))
            }
        };
        let r = m.saturating_sub(k);
        Ok(EndExpansion { m, a0, a1, k, r, has_flux })
    }

    /// `(m, r)` pairs per end, with `r = None` at ends carrying flux.
    pub fn end_report(&self) -> Result<Vec<(usize, Option<usize>)>> {
        self.ends
            .iter()
            .map(|&e| {
                let exp = self.end_expand(e)?;
                Ok((exp.m, if exp.has_flux { None } else { Some(exp.r) }))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn catenoid() -> WeierstrassSurface {
        // g = z, ω = dz/z².
        WeierstrassSurface::new(
            RationalMap::from_poly(Poly::monomial(1)),
            RationalMap::new(Poly::one(), Poly::monomial(2)).unwrap(),
            vec![EndPoint::finite(c(0.0, 0.0)), EndPoint::Infinity],
        )
        .unwrap()
    }

    fn enneper() -> WeierstrassSurface {
        WeierstrassSurface::new(
            RationalMap::from_poly(Poly::monomial(1)),
            RationalMap::from_poly(Poly::one()),
            vec![EndPoint::Infinity],
        )
        .unwrap()
    }

    #[test]
    fn poly_division_reconstructs() {
        let a = Poly::new(vec![c(1.0, 0.0), c(-2.0, 1.0), c(0.0, 0.0), c(3.0, 0.0)]);
        let b = Poly::new(vec![c(1.0, 1.0), c(2.0, 0.0)]);
        let (q, r) = a.div_rem(&b).unwrap();
        let back = q.mul(&b).add(&r);
        for (x, y) in back.coeffs.iter().zip(&a.coeffs) {
            assert_relative_eq!(x.re, y.re, epsilon = 1e-12);
            assert_relative_eq!(x.im, y.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn gcd_reduces_common_factor() {
        let common = Poly::new(vec![c(-1.0, 0.0), c(1.0, 0.0)]); // z − 1
        let a = common.mul(&Poly::new(vec![c(2.0, 0.0), c(1.0, 0.0)]));
        let b = common.mul(&Poly::new(vec![c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)]));
        let g = a.gcd(&b);
        assert_eq!(g.degree(), Some(1));
        let rm = RationalMap::new(a, b).unwrap();
        assert_eq!(rm.num.degree(), Some(1));
        assert_eq!(rm.den.degree(), Some(2));
    }

    #[test]
    fn taylor_shift_matches_evaluation() {
        let p = Poly::new(vec![c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.0), c(0.5, 0.5)]);
        let a = c(0.7, -0.3);
        let q = p.shift(a);
        for &w in &[c(0.1, 0.2), c(-0.4, 0.05)] {
            let lhs = q.eval(w);
            let rhs = p.eval(a + w);
            assert_relative_eq!(lhs.re, rhs.re, epsilon = 1e-12);
            assert_relative_eq!(lhs.im, rhs.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn laurent_series_matches_evaluation() {
        // f = (1 + z) / (z² (1 − z/2)) near 0.
        let num = Poly::new(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let den = Poly::monomial(2).mul(&Poly::new(vec![c(1.0, 0.0), c(-0.5, 0.0)]));
        let f = RationalMap::new(num, den).unwrap();
        let (low, coeffs) = f.laurent_at(c(0.0, 0.0), 12).unwrap();
        assert_eq!(low, -2);
        let w = c(0.05, 0.02);
        let mut acc = c(0.0, 0.0);
        for (i, &co) in coeffs.iter().enumerate() {
            acc += co * w.powi(low as i32 + i as i32);
        }
        let direct = f.eval(w);
        assert_relative_eq!(acc.re, direct.re, max_relative = 1e-10);
        assert_relative_eq!(acc.im, direct.im, max_relative = 1e-10);
    }

    #[test]
    fn catenoid_residues_and_flux() {
        let s = catenoid();
        let res = s.residues(EndPoint::finite(c(0.0, 0.0))).unwrap();
        // φ₃ = 2z · dz/z² = 2 dz/z has residue 2; φ₁, φ₂ have none.
        assert!(res[0].norm() < 1e-12);
        assert!(res[1].norm() < 1e-12);
        assert_relative_eq!(res[2].re, 2.0, epsilon = 1e-12);
        let flux = s.flux_vector(EndPoint::finite(c(0.0, 0.0))).unwrap();
        assert_eq!(flux, [0.0, 0.0, 1.0]);
        // Contour quadrature agrees.
        let qc = s
            .residues_by_contour(EndPoint::finite(c(0.0, 0.0)), 0.3, 512)
            .unwrap();
        for (a, b) in qc.iter().zip(res.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn catenoid_is_catenoid_shaped() {
        let s = catenoid();
        assert_eq!(s.gauss_degree(), 1);
        let (deg, tc) = s.jorge_meeks().unwrap();
        assert_eq!(deg, 1);
        assert_relative_eq!(tc, -4.0 * PI);
        let exp = s.end_expand(EndPoint::finite(c(0.0, 0.0))).unwrap();
        assert_eq!(exp.m, 1);
        assert!(exp.has_flux);
        assert!(s.conformality_residual().unwrap() < 1e-14);
    }

    #[test]
    fn enneper_end_expansion() {
        let s = enneper();
        let exp = s.end_expand(EndPoint::Infinity).unwrap();
        assert_eq!(exp.m, 3);
        assert_eq!(exp.k, 1);
        assert_eq!(exp.r, 2);
        assert!(!exp.has_flux);
        // A₀ = (1/3)(−1, i, 0) up to the sign convention of the chart.
        let a0 = exp.a0;
        assert_relative_eq!(a0[0].re, -1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(a0[1].im, 1.0 / 3.0, epsilon = 1e-12);
        assert!(a0[2].norm() < 1e-14);
        // Isotropy: ⟨A₀, A₀⟩ = 0 in the bilinear pairing.
        let iso = a0[0] * a0[0] + a0[1] * a0[1] + a0[2] * a0[2];
        assert!(iso.norm() < 1e-14);
    }

    #[test]
    fn infinity_chart_roundtrip() {
        let f = RationalMap::new(
            Poly::new(vec![c(1.0, 0.0), c(2.0, -1.0), c(0.5, 0.0)]),
            Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]),
        )
        .unwrap();
        let g = f.at_infinity().unwrap();
        let z = c(2.0, 1.5);
        let lhs = f.eval(z);
        let rhs = g.eval(z.inv());
        assert_relative_eq!(lhs.re, rhs.re, max_relative = 1e-12);
        assert_relative_eq!(lhs.im, rhs.im, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_expansion_is_reported() {
        // g = 0, ω = dz/z²: forms are (1, i, 0)/z² — every coefficient is
        // parallel to the leading vector.
        let s = WeierstrassSurface::new(
            RationalMap::from_poly(Poly::zero()),
            RationalMap::new(Poly::one(), Poly::monomial(2)).unwrap(),
            vec![EndPoint::finite(c(0.0, 0.0))],
        )
        .unwrap();
        match s.end_expand(EndPoint::finite(c(0.0, 0.0))) {
            Err(Error::DegenerateExpansion(_)) => {}
            other => panic!("expected DegenerateExpansion, got {other:?}"),
        }
    }

    #[test]
    fn odd_jorge_meeks_sum_errors() {
        // Single catenoid-type end: m = 1, sum = 2 → fine. Force odd via
        // Enneper-like data with an extra planar end of order 1: m = (3, 1)
        // sums to 6 → fine; instead use one end of even order.
        let s = WeierstrassSurface::new(
            RationalMap::from_poly(Poly::monomial(1)),
            RationalMap::new(Poly::one(), Poly::monomial(3)).unwrap(),
            vec![EndPoint::finite(c(0.0, 0.0))],
        )
        .unwrap();
        let exp = s.end_expand(EndPoint::finite(c(0.0, 0.0))).unwrap();
        assert_eq!(exp.m % 2, 0);
        assert!(s.jorge_meeks().is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let s = catenoid();
        let json = serde_json::to_string(&s).unwrap();
        let back: WeierstrassSurface = serde_json::from_str(&json).unwrap();
        assert_eq!(back.gauss, s.gauss);
        assert_eq!(back.height, s.height);
        assert_eq!(back.ends, s.ends);
    }
}
