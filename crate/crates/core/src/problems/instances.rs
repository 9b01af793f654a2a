//! Concrete strongly convex test problems.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

use super::{CoordinateOracle, Objective, SmoothOracle};

/// Dense quadratic `f(x) = x'Ax/2 - b'x + c` with a known spectrum.
pub struct Quadratic {
    matrix: Array2<f64>,
    linear: Array1<f64>,
    offset: f64,
    alpha: f64,
    lipschitz: f64,
    minimizer: Array1<f64>,
    coord_lipschitz: Vec<f64>,
    all_indices: Vec<usize>,
}

impl Quadratic {
    /// Adds a constant to the objective (moves values, not geometry).
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }
}

/// Builds the quadratic whose Hessian has exactly the given eigenvalues.
///
/// Diagonal when no rotation seed is supplied; otherwise conjugated by a
/// seeded random orthogonal matrix. The minimizer `A⁻¹b` is attached, and
/// `alpha`/`lipschitz` are the extreme eigenvalues.
pub fn quadratic_from_spectrum(
    eigenvalues: &[f64],
    linear: &[f64],
    rotation_seed: Option<u64>,
) -> Result<Quadratic> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidSpectrum("empty spectrum".into()));
    }
    for pair in eigenvalues.windows(2) {
        if pair[0] > pair[1] {
            return Err(Error::InvalidSpectrum(
                "eigenvalues must be sorted ascending".into(),
            ));
        }
    }
    if eigenvalues[0] <= 0.0 {
        return Err(Error::InvalidSpectrum(format!(
            "eigenvalues must be positive, got {}",
            eigenvalues[0]
        )));
    }
    if linear.len() != eigenvalues.len() {
        return Err(Error::DimensionMismatch {
            expected: eigenvalues.len(),
            got: linear.len(),
        });
    }

    let d = eigenvalues.len();
    let b = Array1::from(linear.to_vec());
    let (matrix, minimizer) = match rotation_seed {
        None => {
            let matrix = Array2::from_diag(&Array1::from(eigenvalues.to_vec()));
            let minimizer = Array1::from_iter(b.iter().zip(eigenvalues).map(|(&bi, &l)| bi / l));
            (matrix, minimizer)
        }
        Some(seed) => {
            let q = random_orthogonal(d, seed);
            // A = Q Λ Q', symmetrized to absorb rounding.
            let mut scaled = q.clone();
            for (j, &l) in eigenvalues.iter().enumerate() {
                scaled.column_mut(j).mapv_inplace(|v| v * l);
            }
            let a = scaled.dot(&q.t());
            let matrix = 0.5 * (&a + &a.t());
            // A⁻¹ b through the factors.
            let qt_b = q.t().dot(&b);
            let inv_scaled =
                Array1::from_iter(qt_b.iter().zip(eigenvalues).map(|(&v, &l)| v / l));
            let minimizer = q.dot(&inv_scaled);
            (matrix, minimizer)
        }
    };

    let coord_lipschitz = matrix.diag().to_vec();
    Ok(Quadratic {
        matrix,
        linear: b,
        offset: 0.0,
        alpha: eigenvalues[0],
        lipschitz: eigenvalues[d - 1],
        minimizer,
        coord_lipschitz,
        all_indices: (0..d).collect(),
    })
}

/// Random orthogonal matrix from modified Gram-Schmidt with one
/// re-orthogonalization pass over seeded Gaussian columns.
fn random_orthogonal(d: usize, seed: u64) -> Array2<f64> {
    let mut rng = SeededRng::new(seed);
    let mut q = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        let mut col = Array1::from(rng.normal_vector(d));
        for _ in 0..2 {
            for k in 0..j {
                let qk = q.column(k);
                let proj = qk.dot(&col);
                col.scaled_add(-proj, &qk);
            }
        }
        let norm = col.dot(&col).sqrt();
        col.mapv_inplace(|v| v / norm);
        q.column_mut(j).assign(&col);
    }
    q
}

impl Objective for Quadratic {
    fn dimension(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        0.5 * x.dot(&self.matrix.dot(x)) - self.linear.dot(x) + self.offset
    }

    fn value_diff(&self, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
        // Exact for quadratics: f(x) - f(y) = <∇f(y), e> + e'Ae/2, e = x - y.
        let e = x - y;
        self.gradient(y).dot(&e) + 0.5 * e.dot(&self.matrix.dot(&e))
    }
}

impl SmoothOracle for Quadratic {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        self.matrix.dot(x) - &self.linear
    }

    fn minimizer(&self) -> Option<&Array1<f64>> {
        Some(&self.minimizer)
    }
}

impl CoordinateOracle for Quadratic {
    fn coord_lipschitz(&self) -> &[f64] {
        &self.coord_lipschitz
    }

    fn dependencies(&self, _i: usize) -> &[usize] {
        &self.all_indices
    }

    fn partial_at(&self, i: usize, values: &mut dyn FnMut(usize) -> f64) -> f64 {
        let row = self.matrix.row(i);
        let mut acc = 0.0;
        for (j, &a) in row.iter().enumerate() {
            acc += a * values(j);
        }
        acc - self.linear[i]
    }
}

/// Sparse banded quadratic for lazy coordinate updates.
///
/// Coordinate `i` couples only to coordinates within `bandwidth / 2` of `i`,
/// so each dependency set holds at most `bandwidth + 1` entries. The diagonal
/// dominates its row by a seeded margin, which yields Gershgorin bounds for
/// `alpha` and `lipschitz`.
pub struct BandedQuadratic {
    rows: Vec<Vec<(usize, f64)>>,
    linear: Array1<f64>,
    alpha: f64,
    lipschitz: f64,
    coord_lipschitz: Vec<f64>,
    deps: Vec<Vec<usize>>,
}

pub fn banded_quadratic(dimension: usize, bandwidth: usize, seed: u64) -> Result<BandedQuadratic> {
    if dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let half = bandwidth / 2;
    let mut rng = SeededRng::new(seed);

    // Symmetric off-diagonal entries in [-1, 1).
    let mut upper = vec![Vec::new(); dimension];
    for (i, row) in upper.iter_mut().enumerate() {
        for j in (i + 1)..dimension.min(i + half + 1) {
            row.push((j, 2.0 * rng.uniform() - 1.0));
        }
    }

    let mut off_sum = vec![0.0; dimension];
    for (i, row) in upper.iter().enumerate() {
        for &(j, v) in row {
            off_sum[i] += v.abs();
            off_sum[j] += v.abs();
        }
    }

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dimension];
    let mut alpha = f64::INFINITY;
    let mut lipschitz = 0.0f64;
    let mut coord_lipschitz = Vec::with_capacity(dimension);
    for i in 0..dimension {
        let margin = 1.0 + rng.uniform();
        let diag = off_sum[i] + margin;
        alpha = alpha.min(margin);
        lipschitz = lipschitz.max(diag + off_sum[i]);
        coord_lipschitz.push(diag);
        rows[i].push((i, diag));
    }
    for (i, row) in upper.into_iter().enumerate() {
        for (j, v) in row {
            rows[i].push((j, v));
            rows[j].push((i, v));
        }
    }
    for row in &mut rows {
        row.sort_by_key(|&(j, _)| j);
    }

    let deps = rows
        .iter()
        .map(|row| row.iter().map(|&(j, _)| j).collect())
        .collect();
    let linear = Array1::from(rng.normal_vector(dimension));

    Ok(BandedQuadratic {
        rows,
        linear,
        alpha,
        lipschitz,
        coord_lipschitz,
        deps,
    })
}

impl BandedQuadratic {
    fn matvec(&self, x: &Array1<f64>) -> Array1<f64> {
        Array1::from_iter(
            self.rows
                .iter()
                .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum::<f64>()),
        )
    }
}

impl Objective for BandedQuadratic {
    fn dimension(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        0.5 * x.dot(&self.matvec(x)) - self.linear.dot(x)
    }

    fn value_diff(&self, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
        let e = x - y;
        self.gradient(y).dot(&e) + 0.5 * e.dot(&self.matvec(&e))
    }
}

impl SmoothOracle for BandedQuadratic {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        self.matvec(x) - &self.linear
    }
}

impl CoordinateOracle for BandedQuadratic {
    fn coord_lipschitz(&self) -> &[f64] {
        &self.coord_lipschitz
    }

    fn dependencies(&self, i: usize) -> &[usize] {
        &self.deps[i]
    }

    fn partial_at(&self, i: usize, values: &mut dyn FnMut(usize) -> f64) -> f64 {
        self.rows[i]
            .iter()
            .map(|&(j, a)| a * values(j))
            .sum::<f64>()
            - self.linear[i]
    }
}

/// Ridge-regularized least squares `f(x) = ‖Mx - y‖²/2 + r‖x‖²/2`.
///
/// The ridge term supplies the declared strong-convexity modulus; the
/// declared smoothness constant is the (valid, possibly loose) Frobenius
/// bound `‖M‖_F² + r`.
pub struct RidgeLeastSquares {
    design: Array2<f64>,
    targets: Array1<f64>,
    ridge: f64,
    lipschitz: f64,
    coord_lipschitz: Vec<f64>,
    all_indices: Vec<usize>,
}

/// Seeded instance scaled so the declared smoothness constant is exactly
/// `target_lipschitz`.
pub fn ridge_least_squares(
    dimension: usize,
    rows: usize,
    target_lipschitz: f64,
    ridge: f64,
    seed: u64,
) -> Result<RidgeLeastSquares> {
    if ridge <= 0.0 {
        return Err(Error::InvalidParameter("ridge must be positive".into()));
    }
    if target_lipschitz <= ridge {
        return Err(Error::InvalidParameter(
            "target_lipschitz must exceed the ridge weight".into(),
        ));
    }
    let mut rng = SeededRng::new(seed);
    let mut design = Array2::from_shape_vec((rows, dimension), rng.normal_vector(rows * dimension))
        .expect("shape matches buffer");
    let frob_sq = design.iter().map(|v| v * v).sum::<f64>();
    let scale = ((target_lipschitz - ridge) / frob_sq).sqrt();
    design.mapv_inplace(|v| v * scale);
    let targets = Array1::from(rng.normal_vector(rows));

    let coord_lipschitz = (0..dimension)
        .map(|j| design.column(j).dot(&design.column(j)) + ridge)
        .collect();

    Ok(RidgeLeastSquares {
        design,
        targets,
        ridge,
        lipschitz: target_lipschitz,
        coord_lipschitz,
        all_indices: (0..dimension).collect(),
    })
}

impl Objective for RidgeLeastSquares {
    fn dimension(&self) -> usize {
        self.design.ncols()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        let r = self.design.dot(x) - &self.targets;
        0.5 * r.dot(&r) + 0.5 * self.ridge * x.dot(x)
    }

    fn value_diff(&self, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
        let e = x - y;
        let me = self.design.dot(&e);
        self.gradient(y).dot(&e) + 0.5 * (me.dot(&me) + self.ridge * e.dot(&e))
    }
}

impl SmoothOracle for RidgeLeastSquares {
    fn alpha(&self) -> f64 {
        self.ridge
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        let residual = self.design.dot(x) - &self.targets;
        self.design.t().dot(&residual) + &(self.ridge * x)
    }
}

impl CoordinateOracle for RidgeLeastSquares {
    fn coord_lipschitz(&self) -> &[f64] {
        &self.coord_lipschitz
    }

    fn dependencies(&self, _i: usize) -> &[usize] {
        &self.all_indices
    }

    fn partial_at(&self, i: usize, values: &mut dyn FnMut(usize) -> f64) -> f64 {
        let x = Array1::from_iter((0..self.dimension()).map(values));
        let residual = self.design.dot(&x) - &self.targets;
        self.design.column(i).dot(&residual) + self.ridge * x[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn central_difference(oracle: &dyn SmoothOracle, x: &Array1<f64>, h: f64) -> Array1<f64> {
        let mut g = Array1::zeros(x.len());
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            g[i] = (oracle.value(&xp) - oracle.value(&xm)) / (2.0 * h);
        }
        g
    }

    #[test]
    fn identity_spectrum_is_half_norm_squared() {
        let q = quadratic_from_spectrum(&[1.0], &[0.0], None).unwrap();
        assert_eq!(q.value(&array![2.0]), 2.0);
        assert_eq!(q.alpha(), 1.0);
        assert_eq!(q.lipschitz(), 1.0);
        assert_eq!(q.minimizer().unwrap()[0], 0.0);
    }

    #[test]
    fn identity_matrix_forces_minimizer_at_linear_term() {
        let q = quadratic_from_spectrum(&[1.0, 1.0], &[1.0, 2.0], None).unwrap();
        let m = q.minimizer().unwrap();
        assert_eq!(m[0], 1.0);
        assert_eq!(m[1], 2.0);
    }

    #[test]
    fn diagonal_value_and_gradient() {
        // Direct matrix arithmetic: f(1,1) = (1 + 100)/2, ∇f = (1, 100).
        let q = quadratic_from_spectrum(&[1.0, 100.0], &[0.0, 0.0], None).unwrap();
        let x = array![1.0, 1.0];
        assert!((q.value(&x) - 50.5).abs() < 1e-12);
        let g = q.gradient(&x);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!((g[1] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_spectra() {
        assert!(matches!(
            quadratic_from_spectrum(&[-1.0, 2.0], &[0.0, 0.0], None),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(matches!(
            quadratic_from_spectrum(&[2.0, 1.0], &[0.0, 0.0], None),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(matches!(
            quadratic_from_spectrum(&[1.0, 2.0], &[0.0], None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rotation_preserves_rayleigh_range() {
        let q = quadratic_from_spectrum(&[1.0, 3.0, 100.0], &[1.0, -1.0, 0.5], Some(7)).unwrap();
        let mut rng = SeededRng::new(123);
        for _ in 0..200 {
            let v = Array1::from(rng.normal_vector(3));
            let quotient = v.dot(&q.matrix().dot(&v)) / v.dot(&v);
            assert!(quotient >= 1.0 - 1e-10);
            assert!(quotient <= 100.0 + 1e-8);
        }
        // Gradient at the attached minimizer vanishes.
        let g = q.gradient(q.minimizer().unwrap());
        assert!(g.dot(&g).sqrt() < 1e-10);
    }

    #[test]
    fn strong_convexity_inequality_on_random_pairs() {
        let problems: Vec<Box<dyn SmoothOracle>> = vec![
            Box::new(quadratic_from_spectrum(&[1.0, 4.0, 25.0], &[1.0, 0.0, -2.0], Some(3)).unwrap()),
            Box::new(ridge_least_squares(6, 9, 40.0, 1.0, 5).unwrap()),
            Box::new(banded_quadratic(8, 3, 11).unwrap()),
        ];
        let mut rng = SeededRng::new(77);
        for oracle in &problems {
            let d = oracle.dimension();
            let alpha = oracle.alpha();
            let lipschitz = oracle.lipschitz();
            for _ in 0..1000 {
                let x = Array1::from(rng.normal_vector(d));
                let y = Array1::from(rng.normal_vector(d));
                let e = &x - &y;
                let ee = e.dot(&e);
                let lower = oracle.gradient(&y).dot(&e) + 0.5 * alpha * ee;
                assert!(
                    oracle.value_diff(&x, &y) >= lower - 1e-9 * (1.0 + lower.abs()),
                    "strong convexity violated"
                );
                let gdiff = oracle.gradient(&x) - oracle.gradient(&y);
                assert!(
                    gdiff.dot(&gdiff).sqrt() <= lipschitz * ee.sqrt() * (1.0 + 1e-12),
                    "gradient Lipschitz bound violated"
                );
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let problems: Vec<Box<dyn SmoothOracle>> = vec![
            Box::new(quadratic_from_spectrum(&[1.0, 10.0], &[1.0, 2.0], Some(2)).unwrap()),
            Box::new(ridge_least_squares(4, 6, 20.0, 1.0, 8).unwrap()),
            Box::new(banded_quadratic(6, 3, 4).unwrap()),
        ];
        let mut rng = SeededRng::new(31);
        for oracle in &problems {
            let d = oracle.dimension();
            for _ in 0..20 {
                let x = Array1::from(rng.normal_vector(d));
                let g = oracle.gradient(&x);
                let fd = central_difference(oracle.as_ref(), &x, 1e-5);
                for i in 0..d {
                    let denom = 1.0 + g[i].abs();
                    assert!(
                        (g[i] - fd[i]).abs() / denom < 1e-6,
                        "component {i}: {} vs {}",
                        g[i],
                        fd[i]
                    );
                }
            }
        }
    }

    #[test]
    fn coordinate_partials_match_gradient() {
        let problems: Vec<Box<dyn CoordinateOracle>> = vec![
            Box::new(quadratic_from_spectrum(&[1.0, 2.0, 9.0], &[0.5, 0.0, -1.0], Some(5)).unwrap()),
            Box::new(ridge_least_squares(5, 8, 30.0, 1.0, 6).unwrap()),
            Box::new(banded_quadratic(10, 5, 9).unwrap()),
        ];
        let mut rng = SeededRng::new(13);
        for oracle in &problems {
            let d = oracle.dimension();
            for _ in 0..20 {
                let x = Array1::from(rng.normal_vector(d));
                let g = oracle.gradient(&x);
                for i in 0..d {
                    assert!((oracle.partial(&x, i) - g[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn coordinate_lipschitz_bounds_partial_increments() {
        let problems: Vec<Box<dyn CoordinateOracle>> = vec![
            Box::new(quadratic_from_spectrum(&[1.0, 5.0], &[0.0, 1.0], Some(21)).unwrap()),
            Box::new(ridge_least_squares(4, 7, 25.0, 1.0, 22).unwrap()),
            Box::new(banded_quadratic(7, 3, 23).unwrap()),
        ];
        let mut rng = SeededRng::new(55);
        for oracle in &problems {
            let d = oracle.dimension();
            let coord_l = oracle.coord_lipschitz().to_vec();
            for _ in 0..50 {
                let x = Array1::from(rng.normal_vector(d));
                let c = 4.0 * (rng.uniform() - 0.5);
                for i in 0..d {
                    let mut shifted = x.clone();
                    shifted[i] += c;
                    let delta = (oracle.partial(&x, i) - oracle.partial(&shifted, i)).abs();
                    assert!(delta <= coord_l[i] * c.abs() * (1.0 + 1e-12) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn banded_dependencies_are_small_and_symmetric() {
        let q = banded_quadratic(100, 3, 42).unwrap();
        for i in 0..100 {
            let deps = q.dependencies(i);
            assert!(deps.len() <= 4, "row {i} has {} deps", deps.len());
            assert!(deps.contains(&i));
            for &j in deps {
                assert!(q.dependencies(j).contains(&i));
            }
        }
        assert!(q.alpha() > 0.0);
        assert!(q.alpha() <= q.lipschitz());
    }

    #[test]
    fn ridge_instance_hits_declared_lipschitz() {
        let p = ridge_least_squares(30, 40, 100.0, 1.0, 1).unwrap();
        let frob_sq: f64 = p.design.iter().map(|v| v * v).sum();
        assert!((frob_sq + p.ridge - 100.0).abs() < 1e-9);
        assert_eq!(p.alpha(), 1.0);
    }

    #[test]
    fn value_diff_is_consistent_with_values() {
        let q = quadratic_from_spectrum(&[1.0, 8.0], &[1.0, -1.0], Some(17)).unwrap();
        let x = array![0.3, -0.7];
        let y = array![-1.0, 2.0];
        let direct = q.value(&x) - q.value(&y);
        assert!((q.value_diff(&x, &y) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
    }
}
