use num_complex::Complex64;

use crate::densela::{eigenvalues, rank, Matrix};
use crate::{Error, Result};

/// Agreement required between an eigenvalue and its image under the theorem map.
pub const MAPPING_TOL: f64 = 1e-7;
/// Agreement required for `|λ - 1| = √(1 - ξ)` on complex pairs.
pub const MODULUS_TOL: f64 = 1e-8;
const REAL_TOL: f64 = 1e-9;
const COMPLEX_DISCRIMINANT: f64 = -1e-10;
const REMOVABLE_DENOMINATOR: f64 = 1e-12;
const KERNEL_TOL: f64 = 1e-10;
const DOUBLE_ROOT: f64 = 1e-12;
const NEAR_DOUBLE_ROOT: f64 = 1e-8;
/// Residual of the root quadratic accepted at a near-double root.
const BACKWARD_TOL: f64 = 1e-10;

/// One eigenvalue `λ` of `I - T` and its preimage `ξ` in the spectrum of `G̃⁻¹G`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MappingPair {
    pub lambda: Complex64,
    pub xi: Complex64,
    pub c: f64,
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    /// Eigenvalues of `T`.
    pub spectrum: Vec<Complex64>,
    pub rho: f64,
    /// Unit eigenvalues of `T` set aside as the stationary dual kernel.
    pub deflated: Vec<Complex64>,
    /// Spectral radius of `T` without the deflated eigenvalues.
    pub effective_rho: f64,
    pub mapping_pairs: Vec<MappingPair>,
    /// Pairs whose `ξ` sits at the closed end `ξ = 1` of the interval.
    pub boundary_pairs: usize,
    pub max_mapping_residual: f64,
    /// Worst distance from a root of `λ² - ξ(1+c)λ + cξ` to the spectrum.
    pub max_root_residual: f64,
    pub complex_roots: usize,
    pub max_modulus_residual: f64,
    /// Roots at a near-double root matched by quadratic residual instead of distance.
    pub backward_matches: usize,
}

impl SpectralReport {
    /// Whether every `ξ` lies in the open interval `(0, 1)`.
    pub fn xi_strictly_inside(&self) -> bool {
        self.boundary_pairs == 0
    }
}

/// Dimension of `ker(Aᵀ)`: `p - rank(A)` for a `p × n` matrix.
pub fn dual_kernel_dim(a: &Matrix) -> usize {
    a.rows() - rank(a, KERNEL_TOL)
}

/// Both roots of `λ² - ξ(1+c)λ + cξ = 0`. A discriminant below `1e-12` in magnitude is
/// treated as a double root.
pub fn root_pair(xi: Complex64, c: f64) -> [Complex64; 2] {
    let s = xi * (1.0 + c);
    let d = s * s - 4.0 * c * xi;
    let disc = if d.norm() < DOUBLE_ROOT {
        Complex64::new(0.0, 0.0)
    } else {
        d.sqrt()
    };
    [(s + disc) / 2.0, (s - disc) / 2.0]
}

fn nearest(target: Complex64, set: &[Complex64]) -> f64 {
    set.iter()
        .map(|z| (z - target).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Checks that the eigenvalues `λ = 1 - τ`, `τ ∈ eig(T)`, and `ξ ∈ eig(H)` correspond under
/// `ξ = λ²/(λ - c(1-λ))`, in both directions.
///
/// The `deflate` eigenvalues of `T` closest to 1 are removed first. Each recovered `ξ` must
/// be real and lie in `(0, 1]`; pairs at `ξ = 1` are counted in
/// [`SpectralReport::boundary_pairs`]. Roots with negative discriminant must also satisfy
/// `|λ - 1| = √(1 - ξ)`. Where the quadratic has a near-double root, a root farther than
/// [`MAPPING_TOL`] from the spectrum is still accepted if the nearest eigenvalue solves the
/// quadratic to `1e-10`; such matches are counted in [`SpectralReport::backward_matches`].
pub fn theorem_map_check(t: &Matrix, h: &Matrix, c: f64, deflate: usize) -> Result<SpectralReport> {
    if !(c > 0.0 && c < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "c = omega / beta must lie in (0, 2), got {c}"
        )));
    }
    if t.rows() < h.rows() + deflate {
        return Err(Error::DimensionMismatch(format!(
            "T is {}x{} but H has dimension {} and {deflate} eigenvalues are deflated",
            t.rows(),
            t.cols(),
            h.rows()
        )));
    }
    let spectrum = eigenvalues(t)?;
    let h_spec: Vec<Complex64> = eigenvalues(h)?
        .into_iter()
        .map(|z| {
            if z.im.abs() <= REAL_TOL {
                Complex64::new(z.re, 0.0)
            } else {
                z
            }
        })
        .collect();
    let rho = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut by_distance: Vec<usize> = (0..spectrum.len()).collect();
    by_distance.sort_by(|&i, &j| {
        (spectrum[i] - 1.0)
            .norm()
            .total_cmp(&(spectrum[j] - 1.0).norm())
    });
    let deflated_idx = &by_distance[..deflate];
    let deflated: Vec<Complex64> = deflated_idx.iter().map(|&i| spectrum[i]).collect();
    let kept: Vec<Complex64> = (0..spectrum.len())
        .filter(|i| !deflated_idx.contains(i))
        .map(|i| spectrum[i])
        .collect();
    let effective_rho = kept.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lambdas: Vec<Complex64> = kept.iter().map(|tau| 1.0 - tau).collect();

    let mut pairs = Vec::with_capacity(lambdas.len());
    let mut boundary_pairs = 0;
    let mut max_mapping_residual: f64 = 0.0;
    for &lambda in &lambdas {
        let den = lambda - c * (1.0 - lambda);
        if den.norm() < REMOVABLE_DENOMINATOR {
            let residual = h_spec
                .iter()
                .flat_map(|&xi| root_pair(xi, c))
                .map(|r| (r - lambda).norm())
                .fold(f64::INFINITY, f64::min);
            max_mapping_residual = max_mapping_residual.max(residual);
            if !(residual <= MAPPING_TOL) {
                return Err(Error::MappingViolation(format!(
                    "lambda = {lambda} is not a root generated by any eigenvalue of H"
                )));
            }
            continue;
        }
        let xi = lambda * lambda / den;
        let residual = nearest(xi, &h_spec);
        max_mapping_residual = max_mapping_residual.max(residual);
        if !(residual <= MAPPING_TOL) {
            return Err(Error::MappingViolation(format!(
                "lambda = {lambda} maps to xi = {xi}, at distance {residual:e} from eig(H)"
            )));
        }
        if xi.im.abs() > REAL_TOL || !(xi.re > 0.0) || xi.re > 1.0 + MAPPING_TOL {
            return Err(Error::MappingViolation(format!(
                "lambda = {lambda} maps to xi = {xi}, outside (0, 1]"
            )));
        }
        if (xi.re - 1.0).abs() <= MAPPING_TOL {
            boundary_pairs += 1;
        }
        pairs.push(MappingPair { lambda, xi, c });
    }

    let mut max_root_residual: f64 = 0.0;
    let mut max_modulus_residual: f64 = 0.0;
    let mut complex_roots = 0;
    let mut backward_matches = 0;
    for &xi in &h_spec {
        let s = xi * (1.0 + c);
        let discriminant = s * s - 4.0 * c * xi;
        let complex = discriminant.re < COMPLEX_DISCRIMINANT && xi.im == 0.0;
        for root in root_pair(xi, c) {
            let (dist, matched) = lambdas
                .iter()
                .map(|&l| ((l - root).norm(), l))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap_or((f64::INFINITY, root));
            // roots of a near-double quadratic move like the square root of the error in ξ
            if dist > MAPPING_TOL
                && discriminant.norm() < NEAR_DOUBLE_ROOT
                && (matched * matched - s * matched + c * xi).norm() <= BACKWARD_TOL
            {
                backward_matches += 1;
                continue;
            }
            max_root_residual = max_root_residual.max(dist);
            if !(dist <= MAPPING_TOL) {
                return Err(Error::MappingViolation(format!(
                    "xi = {xi} generates root {root}, at distance {dist:e} from the spectrum"
                )));
            }
            if complex {
                complex_roots += 1;
                let gap = ((matched - 1.0).norm() - (1.0 - xi.re).sqrt()).abs();
                max_modulus_residual = max_modulus_residual.max(gap);
                if !(gap <= MODULUS_TOL) {
                    return Err(Error::MappingViolation(format!(
                        "complex lambda = {matched} from xi = {xi} has |lambda - 1| off sqrt(1 - xi) by {gap:e}"
                    )));
                }
            }
        }
    }

    Ok(SpectralReport {
        spectrum,
        rho,
        deflated,
        effective_rho,
        mapping_pairs: pairs,
        boundary_pairs,
        max_mapping_residual,
        max_root_residual,
        complex_roots,
        max_modulus_residual,
        backward_matches,
    })
}
