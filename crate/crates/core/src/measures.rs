//! Probability measures on the cyclic group Z_a (a prime).
//!
//! Entropy, circular convolution and the discrete Fourier transform, spike
//! measures, the convolution orders (`<_c`, `<_cp`), majorization (`<_d`),
//! and the worst-case projections of the sparse family onto spike measures.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// Entries above this (negative) value are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Allowed deviation of a probability vector's total mass from one.
pub const SUM_TOL: f64 = 1e-9;
/// Nonnegativity tolerance for Fourier-quotient witnesses.
pub const NONNEG_TOL: f64 = 1e-9;
/// Imaginary residue tolerated in inverse transforms of real data.
pub const IMAG_TOL: f64 = 1e-9;
/// Spectral coefficients below this modulus count as zero.
pub const SPECTRUM_ZERO: f64 = 1e-12;
/// Bisection tolerance.
pub const BISECT_TOL: f64 = 1e-12;

pub(crate) fn is_prime(a: usize) -> bool {
    if a < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= a {
        if a % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn check_prime(a: usize) -> Result<()> {
    if is_prime(a) {
        Ok(())
    } else {
        invalid(format!("alphabet size {a} is not a prime"))
    }
}

/// A probability vector on Z_a.
#[derive(Clone, Debug, PartialEq)]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    /// Validates `probs`: prime length, entries >= -1e-12 (clamped to 0),
    /// total mass within 1e-9 of one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_prime(probs.len())?;
        let mut probs = probs;
        for (i, v) in probs.iter_mut().enumerate() {
            if !v.is_finite() || *v < -CLAMP_TOL {
                return invalid(format!("entry {i} = {v} is not a probability"));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return invalid(format!("entries sum to {total}, expected 1"));
        }
        Ok(Self { probs })
    }

    /// Clamps negatives to zero and rescales to unit mass. Used for numerically
    /// derived vectors whose validity has already been decided.
    pub(crate) fn from_clamped(values: impl IntoIterator<Item = f64>) -> Self {
        let mut probs: Vec<f64> = values.into_iter().map(|v| v.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            probs.iter_mut().for_each(|v| *v /= total);
        }
        Self { probs }
    }

    pub fn point_mass(a: usize, k: usize) -> Result<Self> {
        check_prime(a)?;
        if k >= a {
            return invalid(format!("symbol {k} outside Z_{a}"));
        }
        let mut probs = vec![0.0; a];
        probs[k] = 1.0;
        Ok(Self { probs })
    }

    pub fn uniform(a: usize) -> Result<Self> {
        check_prime(a)?;
        Ok(Self {
            probs: vec![1.0 / a as f64; a],
        })
    }

    /// Binary distribution `[1 - rho, rho]`.
    pub fn bernoulli(rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return invalid(format!("rho = {rho} outside [0, 1]"));
        }
        Ok(Self {
            probs: vec![1.0 - rho, rho],
        })
    }

    pub fn alphabet(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Sup-norm distance.
    pub fn sup_distance(&self, other: &Dist) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Symbol relabelling `k -> k + shift (mod a)`.
    pub fn shifted(&self, shift: usize) -> Dist {
        let a = self.alphabet();
        let mut probs = vec![0.0; a];
        for (k, &v) in self.probs.iter().enumerate() {
            probs[(k + shift) % a] = v;
        }
        Dist { probs }
    }

    pub fn is_uniform(&self, tol: f64) -> bool {
        let u = 1.0 / self.alphabet() as f64;
        self.probs.iter().all(|&v| (v - u).abs() <= tol)
    }
}

impl std::ops::Index<usize> for Dist {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.probs[k]
    }
}

fn same_alphabet(p: &Dist, q: &Dist) -> Result<usize> {
    if p.alphabet() != q.alphabet() {
        return invalid(format!(
            "alphabet mismatch: {} vs {}",
            p.alphabet(),
            q.alphabet()
        ));
    }
    Ok(p.alphabet())
}

/// Shannon entropy `-sum p log_base p` with `0 log 0 = 0`.
pub fn entropy(p: &Dist, base: f64) -> Result<f64> {
    if !(base > 1.0) || !base.is_finite() {
        return invalid(format!("entropy base {base} must exceed 1"));
    }
    Ok(entropy_nats(p.probs()) / base.ln())
}

/// Entropy in base `a` (the alphabet size), the unit used throughout.
pub fn entropy_a(p: &Dist) -> f64 {
    entropy_nats(p.probs()) / (p.alphabet() as f64).ln()
}

pub(crate) fn entropy_nats(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln())
        .sum()
}

/// Binary entropy in bits.
pub fn h2(theta: f64) -> f64 {
    entropy_nats(&[theta, 1.0 - theta]) / std::f64::consts::LN_2
}

/// `(p * q)(k) = sum_v p(k - v) q(v)` over Z_a.
pub fn circular_convolve(p: &Dist, q: &Dist) -> Result<Dist> {
    let a = same_alphabet(p, q)?;
    let mut out = vec![0.0; a];
    convolve_into(p.probs(), q.probs(), &mut out);
    Ok(Dist { probs: out })
}

pub(crate) fn convolve_into(p: &[f64], q: &[f64], out: &mut [f64]) {
    let a = p.len();
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (v, &qv) in q.iter().enumerate() {
            acc += p[(k + a - v) % a] * qv;
        }
        *slot = acc;
    }
}

/// Discrete Fourier transform of a distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_values(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn alphabet(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// First index whose modulus is below [`SPECTRUM_ZERO`].
    pub fn first_zero(&self) -> Option<usize> {
        self.values.iter().position(|z| z.norm() <= SPECTRUM_ZERO)
    }
}

fn twiddle(a: usize, k: usize, w: usize, sign: f64) -> Complex64 {
    let phase = sign * 2.0 * PI * ((k * w) % a) as f64 / a as f64;
    Complex64::from_polar(1.0, phase)
}

pub(crate) fn dft_real(values: &[f64]) -> Vec<Complex64> {
    let a = values.len();
    (0..a)
        .map(|w| {
            values
                .iter()
                .enumerate()
                .map(|(k, &v)| v * twiddle(a, k, w, -1.0))
                .sum()
        })
        .collect()
}

pub(crate) fn idft_complex(values: &[Complex64]) -> Vec<Complex64> {
    let a = values.len();
    let scale = 1.0 / a as f64;
    (0..a)
        .map(|k| {
            values
                .iter()
                .enumerate()
                .map(|(w, &h)| h * twiddle(a, k, w, 1.0))
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

/// `F(p)(w) = sum_k p(k) exp(-2 pi i k w / a)`.
pub fn dft(p: &Dist) -> Spectrum {
    Spectrum {
        values: dft_real(p.probs()),
    }
}

/// Inverse transform, including the `1/a` normalization.
pub fn idft(s: &Spectrum) -> Vec<Complex64> {
    idft_complex(&s.values)
}

/// Spike measure centred at `k`: mass `1 - eta` on `k`, `eta / (a - 1)` elsewhere.
pub fn make_spike(a: usize, k: usize, non_special_mass: f64) -> Result<Dist> {
    check_prime(a)?;
    let max = (a - 1) as f64 / a as f64;
    if !(0.0..=max + 1e-15).contains(&non_special_mass) {
        return invalid(format!(
            "spike mass {non_special_mass} outside [0, {max}]"
        ));
    }
    symmetric_line_point(a, k, non_special_mass)
}

/// Point `(1 - eta, eta/(a-1), ...)` (centred at `k`) of the line fixed by the
/// permutations that fix `k`; `eta` may range over all of `[0, 1]`.
pub fn symmetric_line_point(a: usize, k: usize, eta: f64) -> Result<Dist> {
    check_prime(a)?;
    if k >= a || !(0.0..=1.0).contains(&eta) {
        return invalid(format!("symmetric line point k={k}, eta={eta} out of range"));
    }
    let rest = eta / (a - 1) as f64;
    let mut probs = vec![rest; a];
    probs[k] = 1.0 - eta;
    Ok(Dist { probs })
}

/// Result of an order query.
#[derive(Clone, Debug)]
pub struct OrderWitness {
    pub holds: bool,
    /// The convolver `c` with `p1 = c * p2` (or the divisor `nu` for `<_cp`).
    pub witness: Option<Dist>,
    /// Most negative coefficient of the inverse-transformed quotient
    /// (zero when all coefficients are nonnegative).
    pub max_violation: f64,
}

fn quotient_spectrum(p1: &Dist, p2: &Dist) -> Result<Vec<Complex64>> {
    same_alphabet(p1, p2)?;
    let f1 = dft_real(p1.probs());
    let f2 = dft_real(p2.probs());
    if let Some((index, z)) = f2.iter().enumerate().find(|(_, z)| z.norm() <= SPECTRUM_ZERO) {
        return Err(Error::IndeterminateSpectrum {
            index,
            modulus: z.norm(),
        });
    }
    Ok(f1.iter().zip(&f2).map(|(x, y)| x / y).collect())
}

fn witness_from_coefficients(coeffs: &[Complex64]) -> OrderWitness {
    let min_real = coeffs.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
    let max_imag = coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let holds = max_imag <= IMAG_TOL && min_real >= -NONNEG_TOL;
    OrderWitness {
        holds,
        witness: holds.then(|| Dist::from_clamped(coeffs.iter().map(|c| c.re))),
        max_violation: min_real.min(0.0),
    }
}

/// `p1 <_c p2`: `p1 = c * p2` for some distribution `c`, decided by checking
/// that `F^-1(F(p1) / F(p2))` is real and nonnegative.
pub fn dominates_c(p1: &Dist, p2: &Dist) -> Result<OrderWitness> {
    let ratio = quotient_spectrum(p1, p2)?;
    Ok(witness_from_coefficients(&idft_complex(&ratio)))
}

/// `p1 <_c p2` that tolerates vanishing coefficients of `p2`: the quotient is
/// taken as zero where both spectra vanish, and the relation fails where only
/// `p2`'s vanishes. Exact for a = 3, sufficient in general.
pub fn convolution_dominated(p1: &Dist, p2: &Dist) -> Result<bool> {
    same_alphabet(p1, p2)?;
    let f1 = dft_real(p1.probs());
    let f2 = dft_real(p2.probs());
    let mut ratio = Vec::with_capacity(f1.len());
    for (x, y) in f1.iter().zip(&f2) {
        if y.norm() <= SPECTRUM_ZERO {
            if x.norm() > 1e-9 {
                return Ok(false);
            }
            ratio.push(Complex64::new(0.0, 0.0));
        } else {
            ratio.push(x / y);
        }
    }
    Ok(witness_from_coefficients(&idft_complex(&ratio)).holds)
}

/// `p1 <_d p2` via majorization: the descending partial sums of `p1` never
/// exceed those of `p2`.
pub fn dominates_d(p1: &Dist, p2: &Dist) -> Result<bool> {
    same_alphabet(p1, p2)?;
    let sorted = |p: &Dist| {
        let mut v = p.probs().to_vec();
        v.sort_by(|x, y| y.total_cmp(x));
        v
    };
    let (s1, s2) = (sorted(p1), sorted(p2));
    let (mut c1, mut c2) = (0.0, 0.0);
    for (x, y) in s1.iter().zip(&s2) {
        c1 += x;
        c2 += y;
        if c1 > c2 + 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of the log-spectrum divisibility test.
#[derive(Clone, Debug)]
pub struct DivisibilityReport {
    pub divisible: bool,
    /// `y = F^-1(log r_j + i theta_j)`, principal branch.
    pub y: Vec<Complex64>,
}

fn divisibility_from_spectrum(spectrum: &[Complex64]) -> Result<DivisibilityReport> {
    if let Some(index) = spectrum.iter().position(|z| z.norm() <= SPECTRUM_ZERO) {
        return Err(Error::NotDivisibleByCriterion { index });
    }
    let logs: Vec<Complex64> = spectrum
        .iter()
        .map(|z| Complex64::new(z.norm().ln(), z.arg()))
        .collect();
    let y = idft_complex(&logs);
    let divisible = y.iter().all(|c| c.im.abs() <= IMAG_TOL)
        && y.iter().skip(1).all(|c| c.re >= -NONNEG_TOL);
    Ok(DivisibilityReport { divisible, y })
}

/// Infinite divisibility on Z_a: `y(1..a-1) >= 0` for the inverse transform of
/// the log-spectrum.
pub fn is_infinitely_divisible(nu: &Dist) -> Result<DivisibilityReport> {
    divisibility_from_spectrum(&dft_real(nu.probs()))
}

/// `p1 <_cp p2`: `p1 = p2 * nu` with `nu` infinitely divisible.
pub fn dominates_cp(p1: &Dist, p2: &Dist) -> Result<OrderWitness> {
    let ratio = quotient_spectrum(p1, p2)?;
    let mut out = witness_from_coefficients(&idft_complex(&ratio));
    if out.holds && !divisibility_from_spectrum(&ratio)?.divisible {
        out.holds = false;
        out.witness = None;
    }
    Ok(out)
}

fn check_sparsity(a: usize, epsilon: f64) -> Result<()> {
    check_prime(a)?;
    let max = (a - 1) as f64 / a as f64;
    if !(epsilon > 0.0 && epsilon < max) {
        return invalid(format!("epsilon {epsilon} outside (0, {max})"));
    }
    Ok(())
}

/// The extreme point `(1 - eps, eps, 0, ..., 0)` of the sparse family.
pub fn sparse_extreme(a: usize, epsilon: f64) -> Result<Dist> {
    check_sparsity(a, epsilon)?;
    let mut probs = vec![0.0; a];
    probs[0] = 1.0 - epsilon;
    probs[1] = epsilon;
    Ok(Dist { probs })
}

/// Non-special mass of the lowest-entropy spike that is `<_c`-dominated by
/// `(1 - eps, eps, 0, ...)`. For a = 3 this is `2 eps (1 - eps)`.
///
/// A spike of mass `d` is `x * w` with `w = A x^{-1} + (1 - A) U`, where
/// `A = 1 - a d / (a - 1)`, `x^{-1}` the convolution inverse and `U` uniform;
/// nonnegativity of `w` is tight at the most negative entry `m` of `x^{-1}`.
pub fn eta_bar(a: usize, epsilon: f64) -> Result<f64> {
    let x = sparse_extreme(a, epsilon)?;
    let spectrum = dft_real(x.probs());
    let inverse: Vec<Complex64> = spectrum.iter().map(|z| z.inv()).collect();
    let m = idft_complex(&inverse)
        .iter()
        .map(|c| c.re)
        .fold(f64::INFINITY, f64::min);
    let af = a as f64;
    Ok((af - 1.0) * (-m) / (1.0 - af * m))
}

/// Non-special mass of the `<_cp` projection of the sparse family onto spike
/// measures: the smallest `eta` with `spike(eta) <_cp (1 - eps, eps, 0, ...)`.
///
/// With `L = -log F(x)` the divisibility vector of the quotient is
/// `y(j) = -log(1 - a eta/(a-1)) / a + F^-1(L)(j)` for `j != 0`, increasing in
/// `eta`; the boundary is where the smallest entry touches zero.
pub fn eta(a: usize, epsilon: f64) -> Result<f64> {
    let x = sparse_extreme(a, epsilon)?;
    let logs: Vec<Complex64> = dft_real(x.probs())
        .iter()
        .map(|z| -Complex64::new(z.norm().ln(), z.arg()))
        .collect();
    let y = idft_complex(&logs);
    let af = a as f64;
    if y.iter().any(|c| c.im.abs() > IMAG_TOL) {
        // Branch cut crossed; only the uniform spike qualifies.
        return Ok((af - 1.0) / af);
    }
    let deficit = y
        .iter()
        .skip(1)
        .map(|c| -c.re)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    Ok((af - 1.0) / af * (1.0 - (-af * deficit).exp()))
}

/// Ternary `eta` from the exponential convolution path
/// `tau(c) = exp(c (Pi - I)) (1 - eps, eps, 0)`, where `Pi` shifts mass one
/// symbol down. The path becomes a spike when the phase of its first Fourier
/// coefficient returns to zero.
pub fn eta_tau_path_ternary(epsilon: f64) -> Result<f64> {
    check_sparsity(3, epsilon)?;
    let s = 3f64.sqrt() / 2.0;
    let c = (epsilon * s).atan2(1.0 - 1.5 * epsilon) / s;
    let modulus = (-1.5 * c).exp() * ((1.0 - 1.5 * epsilon).powi(2) + 0.75 * epsilon * epsilon).sqrt();
    Ok(2.0 / 3.0 * (1.0 - modulus))
}

/// `tau(c)` itself, for any prime `a`, via the spectral form.
pub fn tau_path(a: usize, epsilon: f64, c: f64) -> Result<Dist> {
    let x = sparse_extreme(a, epsilon)?;
    let af = a as f64;
    let spectrum: Vec<Complex64> = dft_real(x.probs())
        .iter()
        .enumerate()
        .map(|(w, z)| {
            let lambda = Complex64::from_polar(1.0, 2.0 * PI * w as f64 / af);
            z * ((lambda - 1.0) * c).exp()
        })
        .collect();
    Ok(Dist::from_clamped(idft_complex(&spectrum).iter().map(|v| v.re)))
}

/// `p_cp(Spa(a, eps))` as a spike centred at 0.
pub fn p_cp_spa(a: usize, epsilon: f64) -> Result<Dist> {
    make_spike(a, 0, eta(a, epsilon)?)
}

/// Binary distribution of entropy `rate` bits; side 0 puts the larger mass on 0.
pub fn binary_dist_with_entropy(rate: f64, side: u8) -> Result<Dist> {
    if !(0.0..=1.0).contains(&rate) {
        return invalid(format!("rate {rate} outside [0, 1]"));
    }
    if side > 1 {
        return invalid(format!("side must be 0 or 1, got {side}"));
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if h2(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = if rate >= 1.0 {
        0.5
    } else if rate <= 0.0 {
        0.0
    } else {
        0.5 * (lo + hi)
    };
    let probs = if side == 0 {
        vec![1.0 - theta, theta]
    } else {
        vec![theta, 1.0 - theta]
    };
    Ok(Dist { probs })
}

/// Which relation a simplex grid point is tested against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionMode {
    /// `q <_c p`.
    DominatedByC,
    /// `p <_c q`, i.e. `q` in DOM_c(p).
    DominatesC,
    /// `q <_h p`: `H(q) >= H(p)`.
    DominatedByH,
    /// `p <_h q`: `H(q) <= H(p)`.
    DominatesH,
}

#[derive(Clone, Debug)]
pub struct GridPoint {
    pub point: Dist,
    pub member: bool,
}

/// Barycentric points `(i, j, r - i - j) / r` of the ternary simplex.
pub fn simplex_grid(resolution: usize) -> Vec<Dist> {
    let r = resolution as f64;
    let mut out = Vec::new();
    for i in 0..=resolution {
        for j in 0..=resolution - i {
            let k = resolution - i - j;
            out.push(Dist {
                probs: vec![i as f64 / r, j as f64 / r, k as f64 / r],
            });
        }
    }
    out
}

/// Membership of every ternary grid point in the region of `p` selected by `mode`.
pub fn dom_region_grid(p: &Dist, mode: RegionMode, resolution: usize) -> Result<Vec<GridPoint>> {
    if p.alphabet() != 3 {
        return Err(Error::UnsupportedAlphabet {
            a: p.alphabet(),
            expected: "3",
        });
    }
    if resolution < 2 {
        return invalid("grid resolution must be at least 2");
    }
    let hp = entropy_a(p);
    simplex_grid(resolution)
        .into_par_iter()
        .map(|q| {
            let member = match mode {
                RegionMode::DominatedByC => convolution_dominated(&q, p)?,
                RegionMode::DominatesC => convolution_dominated(p, &q)?,
                RegionMode::DominatedByH => entropy_a(&q) >= hp - 1e-12,
                RegionMode::DominatesH => entropy_a(&q) <= hp + 1e-12,
            };
            Ok(GridPoint { point: q, member })
        })
        .collect()
}

/// Result of the `p_c` projection of an entropy ball.
#[derive(Clone, Debug)]
pub struct BallProjection {
    pub spike: Dist,
    /// Mass off symbol 0 (values above `(a-1)/a` lie past the uniform point).
    pub eta: f64,
    pub entropy: f64,
    /// `H(p_c(B_R)) - R`.
    pub gap: f64,
    /// Number of points in the discretization of `B_R`.
    pub points: usize,
    pub interior_resolution: usize,
}

fn ternary_ball_points(rate: f64, boundary_points: usize, interior_resolution: usize) -> Vec<Dist> {
    let centre = [1.0 / 3.0; 3];
    let e1 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let e2 = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
    let at = |dir: &[f64; 3], t: f64| -> Vec<f64> { (0..3).map(|i| centre[i] + t * dir[i]).collect() };
    let h = |v: &[f64]| entropy_nats(v) / 3f64.ln();
    let mut pts = Vec::new();
    for s in 0..boundary_points {
        let angle = 2.0 * PI * s as f64 / boundary_points as f64;
        let dir: [f64; 3] = std::array::from_fn(|i| angle.cos() * e1[i] + angle.sin() * e2[i]);
        let t_max = (0..3)
            .filter(|&i| dir[i] < 0.0)
            .map(|i| -centre[i] / dir[i])
            .fold(f64::INFINITY, f64::min);
        if h(&at(&dir, t_max)) > rate {
            continue;
        }
        let (mut lo, mut hi) = (0.0, t_max);
        while hi - lo > BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            if h(&at(&dir, mid)) > rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Rays that leave the ball immediately meet it at the uniform point.
        let t = if hi < 1e-6 { 0.0 } else { hi };
        pts.push(Dist::from_clamped(at(&dir, t)));
    }
    pts.extend(
        simplex_grid(interior_resolution)
            .into_iter()
            .filter(|q| entropy_a(q) <= rate),
    );
    pts
}

/// Lowest-entropy point of the symmetric line `(1 - eta, eta/2, eta/2)` that
/// is `<_c`-dominated by every point of a discretized entropy ball
/// `B_R = {q : H(q) <= R}` on Z_3.
///
/// The feasible part of the line is an interval around the uniform point; both
/// of its ends are located by bisection and the lower-entropy one returned.
pub fn p_c_ball(a: usize, rate: f64, boundary_points: usize) -> Result<BallProjection> {
    if a != 3 {
        return Err(Error::UnsupportedAlphabet { a, expected: "3" });
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return invalid(format!("rate {rate} outside (0, 1]"));
    }
    if boundary_points < 50 {
        return invalid("at least 50 boundary points are required");
    }
    let interior_resolution = 60;
    let pts = ternary_ball_points(rate, boundary_points, interior_resolution);
    let feasible = |eta: f64| -> bool {
        let Ok(p) = symmetric_line_point(3, 0, eta) else {
            return false;
        };
        pts.par_iter()
            .all(|q| convolution_dominated(&p, q).unwrap_or(false))
    };
    let uniform_eta = 2.0 / 3.0;
    if !feasible(uniform_eta) {
        return Err(Error::Infeasible(
            "no point of the symmetric line is dominated by the ball".into(),
        ));
    }
    let search = |mut good: f64, mut bad: f64| {
        if feasible(bad) {
            return bad;
        }
        while (good - bad).abs() > 1e-10 {
            let mid = 0.5 * (good + bad);
            if feasible(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    let near = search(uniform_eta, 0.0);
    let far = search(uniform_eta, 1.0);
    let best = [near, far]
        .into_iter()
        .map(|e| (e, entropy_a(&symmetric_line_point(3, 0, e).expect("eta in range"))))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("two candidates");
    Ok(BallProjection {
        spike: symmetric_line_point(3, 0, best.0)?,
        eta: best.0,
        entropy: best.1,
        gap: best.1 - rate,
        points: pts.len(),
        interior_resolution,
    })
}
