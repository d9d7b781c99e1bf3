#![allow(dead_code)]

use madmm::densela::{rank, Matrix, Vector};
use madmm::model::{Block, MultiBlockProblem, ObjectiveTerm};
use rand::rngs::StdRng;
use rand::Rng;

pub fn uniform_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn uniform_vector(rng: &mut StdRng, dim: usize) -> Vector {
    Vector::from_fn(dim, |_| rng.gen_range(-1.0..1.0))
}

/// Dense SPD matrix `BᵀB + δI` with a well-spread spectrum.
pub fn dense_spd(rng: &mut StdRng, n: usize) -> Matrix {
    let b = uniform_matrix(rng, n, n);
    b.gram().add(&Matrix::identity(n).scale(0.1))
}

/// Square `n × n` matrix whose complete-pivoting pivots stay above `1e-2` relative.
pub fn well_posed_square(rng: &mut StdRng, n: usize) -> Matrix {
    loop {
        let a = uniform_matrix(rng, n, n);
        if rank(&a, 1e-2) == n {
            return a;
        }
    }
}

/// Random split of `n` columns into `m` nonempty consecutive blocks.
pub fn random_dims(rng: &mut StdRng, n: usize, m: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = (1..n).collect();
    for i in 0..cuts.len() {
        let j = rng.gen_range(i..cuts.len());
        cuts.swap(i, j);
    }
    let mut cuts: Vec<usize> = cuts.into_iter().take(m - 1).collect();
    cuts.sort_unstable();
    let mut dims = Vec::with_capacity(m);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(n)) {
        dims.push(c - prev);
        prev = c;
    }
    dims
}

/// Splits the columns of `a` into blocks with the given objectives.
pub fn problem_from(
    a: &Matrix,
    dims: &[usize],
    objectives: Vec<ObjectiveTerm>,
    b: Vector,
    beta: f64,
) -> MultiBlockProblem {
    let mut start = 0;
    let blocks = dims
        .iter()
        .zip(objectives)
        .map(|(&d, obj)| {
            let ai = a.submatrix(0, start, a.rows(), d);
            start += d;
            Block::new(obj, ai)
        })
        .collect();
    MultiBlockProblem::new(blocks, b, beta).expect("valid random problem")
}

/// Linear instance: square well-posed `A` split into `m` blocks, zero objectives.
pub fn linear_instance(rng: &mut StdRng, n: usize, m: usize, beta: f64) -> MultiBlockProblem {
    let a = well_posed_square(rng, n);
    let dims = random_dims(rng, n, m);
    let b = uniform_vector(rng, n);
    problem_from(&a, &dims, vec![ObjectiveTerm::Zero; m], b, beta)
}

/// Quadratic instance: `p × n` full-row-rank `A` (`p ≤ n ≤ m·p`) and SPD `Θᵢ` on every
/// block.
pub fn quadratic_instance(
    rng: &mut StdRng,
    p: usize,
    n: usize,
    m: usize,
    beta: f64,
) -> MultiBlockProblem {
    assert!(
        p <= n && n <= m * p,
        "no full-rank blocks for p={p}, n={n}, m={m}"
    );
    loop {
        let a = uniform_matrix(rng, p, n);
        if rank(&a, 1e-2) < p {
            continue;
        }
        let dims = random_dims(rng, n, m);
        if dims
            .iter()
            .scan(0, |s, &d| {
                let blk = a.submatrix(0, *s, p, d);
                *s += d;
                Some(rank(&blk, 1e-2) == d)
            })
            .any(|ok| !ok)
        {
            continue;
        }
        let objectives = dims
            .iter()
            .map(|&d| ObjectiveTerm::Quadratic {
                theta: dense_spd(rng, d).scale(0.5),
            })
            .collect();
        let b = uniform_vector(rng, p);
        return problem_from(&a, &dims, objectives, b, beta);
    }
}

/// Characteristic polynomial coefficients `c₀..cₙ` (monic, `cₙ = 1`) of `det(zI - M)` by
/// the Faddeev-LeVerrier recursion.
pub fn charpoly(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut mk = Matrix::zeros(n, n);
    for k in 1..=n {
        mk = m.matmul(&mk.add(&Matrix::identity(n).scale(coeffs[n - k + 1])));
        let trace: f64 = (0..n).map(|i| mk[(i, i)]).sum();
        coeffs[n - k] = -trace / k as f64;
    }
    coeffs
}

pub fn horner(coeffs: &[f64], z: num_complex::Complex64) -> num_complex::Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(num_complex::Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Number of roots of the polynomial inside `|z| < r`, by the winding number of its image
/// of the circle.
pub fn roots_inside(coeffs: &[f64], r: f64) -> i64 {
    let samples = 8192;
    let mut total = 0.0;
    let mut prev = horner(coeffs, num_complex::Complex64::new(r, 0.0)).arg();
    for k in 1..=samples {
        let z = num_complex::Complex64::from_polar(
            r,
            2.0 * std::f64::consts::PI * k as f64 / samples as f64,
        );
        let a = horner(coeffs, z).arg();
        let mut d = a - prev;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        total += d;
        prev = a;
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

/// Largest root modulus by bisection on the radius at which all roots are enclosed.
pub fn bisect_root_radius(coeffs: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let n = (coeffs.len() - 1) as i64;
    assert!(roots_inside(coeffs, hi) == n && roots_inside(coeffs, lo) < n);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if roots_inside(coeffs, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
