//! Forward solver for the sound-soft crack scattering problem.
//!
//! The scattered field is represented as a single layer potential over the
//! arc with kernel `(i/4) H0(k|x - y|)`, and the Dirichlet condition leads to
//! a first-kind integral equation `S phi = f` with `f = -exp(i k theta . x)`.
//! The crack density has inverse square root endpoint singularities, so the
//! equation is discretized after the cosine substitution `s = cos t`: the
//! unknown becomes the smooth transformed density
//! `mu(s) = phi(z(s)) |z'(s)| sqrt(1 - s^2)`, collocated at the Chebyshev
//! nodes `s_q = cos((2q - 1) pi / (2n))`. The kernel is split into a
//! logarithmic part and an analytic remainder,
//!
//! ```text
//! (i/4) H0(k|z(s) - z(t)|) = a(s, t) ln|s - t| + b(s, t),
//! a(s, t) = -(1/(2 pi)) J0(k|z(s) - z(t)|),
//! ```
//!
//! and integrated against the Chebyshev weight: the smooth part with the
//! n-point Gauss-Chebyshev rule (the trapezoidal rule in the transformed
//! variable) and the logarithmic part with the standard log-adapted weights
//!
//! ```text
//! W_pq = (pi/n) [ -ln 2 - 2 sum_{m=1}^{n-1} cos(m t_p) cos(m t_q) / m ],
//! ```
//!
//! which integrate `ln|s - t|` exactly against every Chebyshev polynomial the
//! node set resolves. Both rules converge superalgebraically for analytic
//! arcs, which the self-convergence checks in the test suite confirm.

use crate::error::{Error, Result};
use crate::geometry::{ParametricArc, Point2};
use crate::special::{bessel_j0, hankel1_0, EULER_GAMMA};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::Distribution;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Condition estimates above this threshold abort the solve.
const CONDITION_LIMIT: f64 = 1e14;

/// Forward solver parameters: wavenumber, quadrature size, direction count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Wavenumber `k > 0`.
    pub wavenumber: f64,
    /// Number of quadrature nodes on the cosine-transformed grid (even, >= 8).
    pub quadrature_size: usize,
    /// Number of incident/observation directions (even, >= 4).
    pub direction_count: usize,
}

impl SolverConfig {
    pub fn new(wavenumber: f64, quadrature_size: usize, direction_count: usize) -> Result<Self> {
        let cfg = Self {
            wavenumber,
            quadrature_size,
            direction_count,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavenumber > 0.0) || !self.wavenumber.is_finite() {
            return Err(Error::invalid_argument(format!(
                "wavenumber must be positive, got {}",
                self.wavenumber
            )));
        }
        if self.quadrature_size < 8 || self.quadrature_size % 2 != 0 {
            return Err(Error::invalid_argument(format!(
                "quadrature size must be even and >= 8, got {}",
                self.quadrature_size
            )));
        }
        if self.direction_count < 4 || self.direction_count % 2 != 0 {
            return Err(Error::invalid_argument(format!(
                "direction count must be even and >= 4, got {}",
                self.direction_count
            )));
        }
        Ok(())
    }
}

/// Direction `l` of the equispaced grid, angle `2 pi l / N`, `l = 1..=N`.
pub fn unit_direction(index: usize, count: usize) -> Point2 {
    let angle = 2.0 * PI * index as f64 / count as f64;
    Point2::new(angle.cos(), angle.sin())
}

/// Transformed single-layer density on the quadrature grid.
#[derive(Debug, Clone)]
pub struct Density {
    /// Values of `mu` at the Chebyshev nodes.
    pub values: Vec<Complex64>,
    /// Wavenumber the density was solved at.
    pub wavenumber: f64,
    /// Label of the arc the density lives on.
    pub arc_label: String,
}

/// Unweighted far field samples `u_inf(x_l, theta_m)` on the direction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldMatrix {
    /// Raw samples, entry `(l-1, m-1) = u_inf(x_l, theta_m)`; the quadrature
    /// weight is not folded in.
    pub samples: DMatrix<Complex64>,
    /// Quadrature weight `2 pi / N` consumers apply to form the operator.
    pub weight: f64,
    /// Wavenumber.
    pub wavenumber: f64,
}

impl FarFieldMatrix {
    pub fn direction_count(&self) -> usize {
        self.samples.nrows()
    }

    /// The discrete far field operator `(2 pi / N) U`.
    pub fn weighted(&self) -> DMatrix<Complex64> {
        self.samples.map(|v| v * self.weight)
    }
}

/// Far field normalization constant `exp(i pi/4) / sqrt(8 pi k)` matching the
/// `exp(ikr)/sqrt(r)` radiation convention.
fn far_field_constant(k: f64) -> Complex64 {
    Complex64::from_polar(1.0 / (8.0 * PI * k).sqrt(), PI / 4.0)
}

/// Factorized Nystrom system for one arc and configuration.
///
/// Assembling and factoring the collocation matrix is independent of the
/// incident direction, so one `CrackSolver` serves any number of right-hand
/// sides.
pub struct CrackSolver {
    cfg: SolverConfig,
    arc_label: String,
    /// Chebyshev nodes `s_q` in (-1, 1).
    nodes: Vec<f64>,
    /// Arc points `z(s_q)`.
    points: Vec<Point2>,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    condition_estimate: f64,
}

impl CrackSolver {
    pub fn new(arc: &ParametricArc, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.quadrature_size;
        let k = cfg.wavenumber;

        let angles: Vec<f64> = (0..n).map(|q| (2 * q + 1) as f64 * PI / (2 * n) as f64).collect();
        let nodes: Vec<f64> = angles.iter().map(|t| t.cos()).collect();
        let points: Vec<Point2> = nodes.iter().map(|&s| arc.at(s)).collect();
        let speeds: Vec<f64> = nodes.iter().map(|&s| arc.deriv_at(s).norm()).collect();

        let log_w = log_weights(&angles);
        let gc_weight = PI / n as f64;

        let mut a = DMatrix::<Complex64>::zeros(n, n);
        for p in 0..n {
            for q in 0..n {
                let (log_factor, smooth) = if p == q {
                    let diag = Complex64::new(
                        -(EULER_GAMMA + (0.5 * k * speeds[p]).ln()) / (2.0 * PI),
                        0.25,
                    );
                    (Complex64::new(-1.0 / (2.0 * PI), 0.0), diag)
                } else {
                    let r = (points[p] - points[q]).norm();
                    let kernel = Complex64::new(0.0, 0.25) * hankel1_0(k * r);
                    let log_factor = Complex64::new(-bessel_j0(k * r) / (2.0 * PI), 0.0);
                    let smooth = kernel - log_factor * (nodes[p] - nodes[q]).abs().ln();
                    (log_factor, smooth)
                };
                a[(p, q)] = log_factor * log_w[(p, q)] + smooth * gc_weight;
            }
        }
        if !a.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::numerical(
                "non-finite entry in the Nystrom collocation matrix".to_string(),
            ));
        }

        let lu = nalgebra::LU::new(a);
        let condition_estimate = lu_condition_estimate(&lu, n);
        if !condition_estimate.is_finite() || condition_estimate > CONDITION_LIMIT {
            return Err(Error::numerical(format!(
                "Nystrom system ill-conditioned: condition estimate {condition_estimate:.3e}"
            )));
        }

        Ok(Self {
            cfg: *cfg,
            arc_label: arc.label().to_string(),
            nodes,
            points,
            lu,
            condition_estimate,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Crude condition estimate of the collocation matrix (ratio of extreme
    /// LU pivot magnitudes).
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Solve with Dirichlet data `-exp(i k theta . x)` from an incident
    /// plane wave of unit direction `theta`.
    pub fn solve_incident(&self, theta: Point2) -> Result<Density> {
        if (theta.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid_argument(format!(
                "incident direction must be a unit vector, |theta| = {}",
                theta.norm()
            )));
        }
        let k = self.cfg.wavenumber;
        let data: Vec<Complex64> = self
            .points
            .iter()
            .map(|y| -Complex64::from_polar(1.0, k * theta.dot(y)))
            .collect();
        self.solve_boundary_data(&data)
    }

    /// Solve with arbitrary Dirichlet data sampled at the quadrature nodes.
    pub fn solve_boundary_data(&self, data: &[Complex64]) -> Result<Density> {
        let n = self.cfg.quadrature_size;
        if data.len() != n {
            return Err(Error::invalid_argument(format!(
                "boundary data length {} does not match quadrature size {n}",
                data.len()
            )));
        }
        let rhs = nalgebra::DVector::from_column_slice(data);
        let solution = self.lu.solve(&rhs).ok_or_else(|| {
            Error::numerical("Nystrom system is singular to working precision".to_string())
        })?;
        if !solution.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::numerical(
                "non-finite density from the linear solve".to_string(),
            ));
        }
        Ok(Density {
            values: solution.iter().cloned().collect(),
            wavenumber: self.cfg.wavenumber,
            arc_label: self.arc_label.clone(),
        })
    }

    /// Far field pattern of the represented scattered field in observation
    /// direction `xhat`.
    pub fn far_field(&self, density: &Density, xhat: Point2) -> Result<Complex64> {
        self.check_density(density)?;
        if (xhat.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid_argument(format!(
                "observation direction must be a unit vector, |xhat| = {}",
                xhat.norm()
            )));
        }
        Ok(self.far_field_unchecked(density, xhat))
    }

    fn far_field_unchecked(&self, density: &Density, xhat: Point2) -> Complex64 {
        let k = self.cfg.wavenumber;
        let n = self.cfg.quadrature_size;
        let sum: Complex64 = self
            .points
            .iter()
            .zip(&density.values)
            .map(|(y, mu)| Complex64::from_polar(1.0, -k * xhat.dot(y)) * mu)
            .sum();
        far_field_constant(k) * (PI / n as f64) * sum
    }

    /// Evaluate the single layer potential of `density` at the on-arc point
    /// `z(s)` via the same product quadrature used in the assembly. Used to
    /// verify the Dirichlet boundary condition at off-node points.
    pub fn single_layer_on_arc(&self, density: &Density, arc: &ParametricArc, s: f64) -> Result<Complex64> {
        self.check_density(density)?;
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::invalid_argument(format!(
                "on-arc parameter {s} outside [-1, 1]"
            )));
        }
        let n = self.cfg.quadrature_size;
        let k = self.cfg.wavenumber;
        let t = s.clamp(-1.0, 1.0).acos();
        let x = arc.at(s);
        let speed = arc.deriv_at(s).norm();
        let gc_weight = PI / n as f64;

        let mut acc = Complex64::new(0.0, 0.0);
        for q in 0..n {
            let t_q = (2 * q + 1) as f64 * PI / (2 * n) as f64;
            let mut w = -std::f64::consts::LN_2;
            for m in 1..n {
                let mf = m as f64;
                w -= 2.0 * (mf * t).cos() * (mf * t_q).cos() / mf;
            }
            w *= gc_weight;

            let gap = (s - self.nodes[q]).abs();
            let (log_factor, smooth) = if gap < 1e-13 {
                let diag =
                    Complex64::new(-(EULER_GAMMA + (0.5 * k * speed).ln()) / (2.0 * PI), 0.25);
                (Complex64::new(-1.0 / (2.0 * PI), 0.0), diag)
            } else {
                let r = (x - self.points[q]).norm();
                let kernel = Complex64::new(0.0, 0.25) * hankel1_0(k * r);
                let log_factor = Complex64::new(-bessel_j0(k * r) / (2.0 * PI), 0.0);
                (log_factor, kernel - log_factor * gap.ln())
            };
            acc += (log_factor * w + smooth * gc_weight) * density.values[q];
        }
        Ok(acc)
    }

    fn check_density(&self, density: &Density) -> Result<()> {
        if density.arc_label != self.arc_label
            || density.wavenumber != self.cfg.wavenumber
            || density.values.len() != self.cfg.quadrature_size
        {
            return Err(Error::invalid_argument(format!(
                "density (arc '{}', k = {}, n = {}) does not match solver (arc '{}', k = {}, n = {})",
                density.arc_label,
                density.wavenumber,
                density.values.len(),
                self.arc_label,
                self.cfg.wavenumber,
                self.cfg.quadrature_size
            )));
        }
        Ok(())
    }
}

/// Solve the crack scattering problem for one incident direction.
pub fn solve_density(arc: &ParametricArc, cfg: &SolverConfig, theta: Point2) -> Result<Density> {
    CrackSolver::new(arc, cfg)?.solve_incident(theta)
}

/// Far field pattern of a previously solved density in direction `xhat`.
///
/// The density must have been produced for the same arc and configuration.
pub fn far_field(
    arc: &ParametricArc,
    cfg: &SolverConfig,
    density: &Density,
    xhat: Point2,
) -> Result<Complex64> {
    cfg.validate()?;
    if density.arc_label != arc.label()
        || density.wavenumber != cfg.wavenumber
        || density.values.len() != cfg.quadrature_size
    {
        return Err(Error::invalid_argument(
            "density does not match the given arc and configuration".to_string(),
        ));
    }
    if (xhat.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::invalid_argument(format!(
            "observation direction must be a unit vector, |xhat| = {}",
            xhat.norm()
        )));
    }
    let k = cfg.wavenumber;
    let n = cfg.quadrature_size;
    let sum: Complex64 = (0..n)
        .map(|q| {
            let s = ((2 * q + 1) as f64 * PI / (2 * n) as f64).cos();
            Complex64::from_polar(1.0, -k * xhat.dot(&arc.at(s))) * density.values[q]
        })
        .sum();
    Ok(far_field_constant(k) * (PI / n as f64) * sum)
}

/// Assemble the `N x N` far field sample matrix: one Nystrom solve per
/// incident direction (run as a parallel map), far field evaluation at every
/// observation direction.
pub fn far_field_matrix(arc: &ParametricArc, cfg: &SolverConfig) -> Result<FarFieldMatrix> {
    let solver = CrackSolver::new(arc, cfg)?;
    let n_dir = cfg.direction_count;

    let columns: Vec<Vec<Complex64>> = (1..=n_dir)
        .into_par_iter()
        .map(|m| {
            let theta = unit_direction(m, n_dir);
            let density = solver.solve_incident(theta).map_err(|e| {
                Error::numerical(format!("incident direction m = {m}: {e}"))
            })?;
            Ok((1..=n_dir)
                .map(|l| solver.far_field_unchecked(&density, unit_direction(l, n_dir)))
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut samples = DMatrix::<Complex64>::zeros(n_dir, n_dir);
    for (col, values) in columns.iter().enumerate() {
        for (row, &v) in values.iter().enumerate() {
            samples[(row, col)] = v;
        }
    }
    Ok(FarFieldMatrix {
        samples,
        weight: 2.0 * PI / n_dir as f64,
        wavenumber: cfg.wavenumber,
    })
}

/// Perturb every entry by `level * ||U||_F / N * (xi_1 + i xi_2)` with
/// standard normal `xi` drawn from a seeded generator (row-major order).
/// `level = 0` returns an identical copy.
pub fn add_noise(f: &FarFieldMatrix, level: f64, seed: u64) -> FarFieldMatrix {
    assert!(level >= 0.0, "noise level must be nonnegative");
    if level == 0.0 {
        return f.clone();
    }
    let n = f.direction_count();
    let scale = level * f.samples.norm() / n as f64;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::StandardNormal;
    let mut noisy = f.clone();
    for l in 0..n {
        for m in 0..n {
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            noisy.samples[(l, m)] += scale * Complex64::new(re, im);
        }
    }
    noisy
}

/// Log-adapted quadrature weights `W_pq` for the Chebyshev angles `t`.
fn log_weights(angles: &[f64]) -> DMatrix<f64> {
    let n = angles.len();
    // cos_table[(m - 1) * n + q] = cos(m t_q)
    let mut cos_table = vec![0.0f64; (n - 1) * n];
    for m in 1..n {
        for q in 0..n {
            cos_table[(m - 1) * n + q] = (m as f64 * angles[q]).cos();
        }
    }
    let inv: Vec<f64> = (1..n).map(|m| 1.0 / m as f64).collect();
    let mut w = DMatrix::<f64>::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let mut sum = 0.0;
            for m in 1..n {
                sum += cos_table[(m - 1) * n + p] * cos_table[(m - 1) * n + q] * inv[m - 1];
            }
            let val = (PI / n as f64) * (-std::f64::consts::LN_2 - 2.0 * sum);
            w[(p, q)] = val;
            w[(q, p)] = val;
        }
    }
    w
}

fn lu_condition_estimate(
    lu: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
) -> f64 {
    let u = lu.u();
    let mut max_piv = 0.0f64;
    let mut min_piv = f64::INFINITY;
    for i in 0..n {
        let p = u[(i, i)].norm();
        max_piv = max_piv.max(p);
        min_piv = min_piv.min(p);
    }
    if min_piv == 0.0 {
        f64::INFINITY
    } else {
        max_piv / min_piv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::benchmark_arc;
    use rand::{Rng, SeedableRng};

    fn cfg(k: f64, n: usize, n_dir: usize) -> SolverConfig {
        SolverConfig::new(k, n, n_dir).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, 64, 16).is_err());
        assert!(SolverConfig::new(-1.0, 64, 16).is_err());
        assert!(SolverConfig::new(1.0, 6, 16).is_err());
        assert!(SolverConfig::new(1.0, 63, 16).is_err());
        assert!(SolverConfig::new(1.0, 64, 2).is_err());
        assert!(SolverConfig::new(1.0, 64, 15).is_err());
        assert!(SolverConfig::new(1.0, 64, 16).is_ok());
    }

    #[test]
    fn direction_grid_closes_at_full_turn() {
        let d = unit_direction(8, 8);
        assert!((d - Point2::new(1.0, 0.0)).norm() < 1e-14);
        let d = unit_direction(2, 8);
        assert!((d - Point2::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_boundary_data_gives_zero_density() {
        let arc = benchmark_arc(1).unwrap();
        let solver = CrackSolver::new(&arc, &cfg(1.0, 32, 8)).unwrap();
        let density = solver
            .solve_boundary_data(&vec![Complex64::new(0.0, 0.0); 32])
            .unwrap();
        assert!(density.values.iter().all(|v| v.norm() == 0.0));
        let ff = solver
            .far_field(&density, Point2::new(1.0, 0.0))
            .unwrap();
        assert_eq!(ff, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn dirichlet_condition_holds_between_collocation_nodes() {
        // the strongest available self-check: the represented field must
        // reproduce the boundary data away from the quadrature nodes
        let arc = benchmark_arc(2).unwrap();
        let config = cfg(1.0, 96, 8);
        let solver = CrackSolver::new(&arc, &config).unwrap();
        let theta = Point2::new(0.6, 0.8);
        let density = solver.solve_incident(theta).unwrap();
        let mut worst = 0.0f64;
        for i in 0..40 {
            let s = -0.995 + 1.99 * i as f64 / 39.0;
            let total = solver.single_layer_on_arc(&density, &arc, s).unwrap()
                + Complex64::from_polar(1.0, arc.at(s).dot(&theta));
            worst = worst.max(total.norm());
        }
        assert!(worst < 1e-8, "boundary condition residual {worst:.3e}");
    }

    #[test]
    fn far_field_self_convergence_on_gamma1() {
        let arc = benchmark_arc(1).unwrap();
        let theta = Point2::new(1.0, 0.0);
        let xhat = Point2::new(0.0, -1.0);
        let mut values = Vec::new();
        for n in [64usize, 128] {
            let solver = CrackSolver::new(&arc, &cfg(1.0, n, 8)).unwrap();
            let density = solver.solve_incident(theta).unwrap();
            values.push(solver.far_field(&density, xhat).unwrap());
        }
        assert!(
            (values[0] - values[1]).norm() <= 1e-10,
            "n=64 vs n=128 far field difference {:.3e}",
            (values[0] - values[1]).norm()
        );
    }

    #[test]
    fn reciprocity_on_random_direction_pairs() {
        let arc = benchmark_arc(1).unwrap();
        let solver = CrackSolver::new(&arc, &cfg(1.0, 128, 8)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let b: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let xhat = Point2::new(a.cos(), a.sin());
            let theta = Point2::new(b.cos(), b.sin());
            let fwd = solver
                .far_field(&solver.solve_incident(theta).unwrap(), xhat)
                .unwrap();
            let rev = solver
                .far_field(&solver.solve_incident(-xhat).unwrap(), -theta)
                .unwrap();
            worst = worst.max((fwd - rev).norm());
        }
        assert!(worst <= 1e-8, "reciprocity residual {worst:.3e}");
    }

    #[test]
    fn gamma1_reflection_symmetry() {
        // gamma1 is invariant under (x, y) -> (y, x); the far field must be
        // invariant under reflecting both directions
        let arc = benchmark_arc(1).unwrap();
        let solver = CrackSolver::new(&arc, &cfg(1.0, 96, 8)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let b: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let xhat = Point2::new(a.cos(), a.sin());
            let theta = Point2::new(b.cos(), b.sin());
            let reflect = |p: Point2| Point2::new(p.y, p.x);
            let plain = solver
                .far_field(&solver.solve_incident(theta).unwrap(), xhat)
                .unwrap();
            let mirrored = solver
                .far_field(&solver.solve_incident(reflect(theta)).unwrap(), reflect(xhat))
                .unwrap();
            assert!(
                (plain - mirrored).norm() < 1e-10,
                "reflection symmetry violated by {:.3e}",
                (plain - mirrored).norm()
            );
        }
    }

    #[test]
    fn density_and_far_field_scale_linearly() {
        let arc = benchmark_arc(3).unwrap();
        let solver = CrackSolver::new(&arc, &cfg(1.0, 48, 8)).unwrap();
        let theta = Point2::new(0.0, 1.0);
        let k = 1.0;
        let data: Vec<Complex64> = (0..48)
            .map(|q| {
                let s = ((2 * q + 1) as f64 * PI / 96.0).cos();
                -Complex64::from_polar(1.0, k * theta.dot(&arc.at(s)))
            })
            .collect();
        let scaled: Vec<Complex64> = data.iter().map(|v| v * 3.5).collect();
        let d1 = solver.solve_boundary_data(&data).unwrap();
        let d2 = solver.solve_boundary_data(&scaled).unwrap();
        let xhat = Point2::new(1.0, 0.0);
        let f1 = solver.far_field(&d1, xhat).unwrap();
        let f2 = solver.far_field(&d2, xhat).unwrap();
        assert!((f2 - f1 * 3.5).norm() < 1e-12 * f1.norm().max(1.0));
    }

    #[test]
    fn far_field_matrix_shape_and_entry_convention() {
        let arc = benchmark_arc(1).unwrap();
        let config = cfg(1.0, 32, 4);
        let f = far_field_matrix(&arc, &config).unwrap();
        assert_eq!(f.samples.nrows(), 4);
        assert_eq!(f.samples.ncols(), 4);
        assert!((f.weight - PI / 2.0).abs() < 1e-15);
        // column m holds incident direction theta_m
        let solver = CrackSolver::new(&arc, &config).unwrap();
        let density = solver.solve_incident(unit_direction(2, 4)).unwrap();
        let expect = solver.far_field(&density, unit_direction(3, 4)).unwrap();
        assert!((f.samples[(2, 1)] - expect).norm() < 1e-13);
    }

    #[test]
    fn far_field_matrix_entrywise_reciprocity() {
        let arc = benchmark_arc(1).unwrap();
        let n_dir = 8;
        let f = far_field_matrix(&arc, &cfg(1.0, 64, n_dir)).unwrap();
        let mut worst = 0.0f64;
        for l in 0..n_dir {
            for m in 0..n_dir {
                let lp = (m + n_dir / 2) % n_dir;
                let mp = (l + n_dir / 2) % n_dir;
                worst = worst.max((f.samples[(l, m)] - f.samples[(lp, mp)]).norm());
            }
        }
        assert!(worst <= 1e-10, "matrix reciprocity residual {worst:.3e}");
    }

    #[test]
    fn mismatched_density_is_rejected() {
        let arc1 = benchmark_arc(1).unwrap();
        let arc3 = benchmark_arc(3).unwrap();
        let config = cfg(1.0, 32, 8);
        let density = solve_density(&arc1, &config, Point2::new(1.0, 0.0)).unwrap();
        assert!(far_field(&arc3, &config, &density, Point2::new(1.0, 0.0)).is_err());
        let wrong_k = cfg(2.0, 32, 8);
        assert!(far_field(&arc1, &wrong_k, &density, Point2::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn noise_level_zero_is_identity() {
        let arc = benchmark_arc(1).unwrap();
        let f = far_field_matrix(&arc, &cfg(1.0, 16, 4)).unwrap();
        let g = add_noise(&f, 0.0, 123);
        assert_eq!(f, g);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let arc = benchmark_arc(1).unwrap();
        let f = far_field_matrix(&arc, &cfg(1.0, 16, 4)).unwrap();
        let a = add_noise(&f, 0.01, 7);
        let b = add_noise(&f, 0.01, 7);
        assert_eq!(a, b);
        let c = add_noise(&f, 0.01, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_relative_frobenius_concentrates() {
        // synthetic 60x60 matrix; the physics does not matter here
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 60;
        let samples = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let f = FarFieldMatrix {
            samples,
            weight: 2.0 * PI / n as f64,
            wavenumber: 1.0,
        };
        for seed in 0..100 {
            let noisy = add_noise(&f, 0.01, seed);
            let rel = (&noisy.samples - &f.samples).norm() / f.samples.norm();
            assert!(
                (0.005..=0.02).contains(&rel),
                "seed {seed}: relative perturbation {rel:.4}"
            );
        }
    }

    #[test]
    fn condition_estimate_is_reported() {
        let arc = benchmark_arc(1).unwrap();
        let solver = CrackSolver::new(&arc, &cfg(1.0, 32, 8)).unwrap();
        let est = solver.condition_estimate();
        assert!(est.is_finite() && est >= 1.0 && est < 1e8);
    }
}
