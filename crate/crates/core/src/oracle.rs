//! Brute-force quadrature used to validate the closed forms.
//!
//! Masses are integrated on tensor grids, one grid per connected block of
//! the quadratic form's sparsity pattern (the y block always decouples from
//! the x/Ω block). Each axis spans a multiple of the marginal standard
//! deviation of |φ|², taken from Σ = (−4A)⁻¹ by LU inversion; the diagonal
//! of A alone would give conditional widths and truncate correlated
//! Gaussians. No determinant or Cholesky factor is used here.
//!
//! Sums are reduced in lexicographic index order, so results do not depend
//! on how work is split across threads.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{reduce_pure_state, unconfined_direction};
use crate::model::{Coord, QuadraticForm};

/// Relative change on refinement above which a grid is rejected.
pub const REFINEMENT_TOLERANCE: f64 = 1e-4;

/// Kernel grid size of the deep purity mode.
pub const DEEP_KERNEL_POINTS: usize = 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Trapezoid,
    Midpoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Half-width of every axis in marginal standard deviations.
    pub half_width: f64,
    /// Points per axis; odd.
    pub points: usize,
    pub rule: Rule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            half_width: 6.0,
            points: 41,
            rule: Rule::Trapezoid,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points < 11 || self.points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be odd and at least 11, got {}",
                self.points
            )));
        }
        if !(self.half_width >= 4.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be at least 4 standard deviations, got {}",
                self.half_width
            )));
        }
        Ok(())
    }

    /// The same spec with the grid spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            points: 2 * self.points - 1,
            ..*self
        }
    }
}

#[derive(Clone, Debug)]
struct Axis {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Axis {
    fn new(center: f64, half: f64, points: usize, rule: Rule) -> Self {
        match rule {
            Rule::Trapezoid => {
                let h = 2.0 * half / (points - 1) as f64;
                let nodes = (0..points).map(|k| center - half + h * k as f64).collect();
                let weights = (0..points)
                    .map(|k| if k == 0 || k == points - 1 { 0.5 * h } else { h })
                    .collect();
                Self { nodes, weights }
            }
            Rule::Midpoint => {
                let h = 2.0 * half / points as f64;
                let nodes = (0..points).map(|k| center - half + h * (k as f64 + 0.5)).collect();
                Self { nodes, weights: vec![h; points] }
            }
        }
    }
}

/// ∫ exp(xᵀQx + lᵀx + c) over the tensor grid spanned by `axes`.
fn tensor_integral(q: &DMatrix<f64>, l: &[f64], c: f64, axes: &[Axis]) -> f64 {
    fn nest(q: &DMatrix<f64>, l: &[f64], axes: &[Axis], k: usize, acc: f64, x: &mut Vec<f64>) -> f64 {
        if k == axes.len() {
            return acc.exp();
        }
        let mut total = 0.0;
        for (&xk, &wk) in axes[k].nodes.iter().zip(&axes[k].weights) {
            let mut term = q[(k, k)] * xk * xk + l[k] * xk;
            for j in 0..k {
                term += 2.0 * q[(k, j)] * x[j] * xk;
            }
            x.push(xk);
            total += wk * nest(q, l, axes, k + 1, acc + term, x);
            x.pop();
        }
        total
    }

    if axes.is_empty() {
        return c.exp();
    }
    // Parallel over the outermost axis, reduced in index order.
    let outer = &axes[0];
    let partial: Vec<f64> = outer
        .nodes
        .par_iter()
        .zip(&outer.weights)
        .map(|(&x0, &w0)| {
            let mut x = Vec::with_capacity(axes.len());
            x.push(x0);
            let acc = c + q[(0, 0)] * x0 * x0 + l[0] * x0;
            w0 * nest(q, l, axes, 1, acc, &mut x)
        })
        .collect();
    partial.iter().sum()
}

/// Groups coordinate positions into connected blocks of m's nonzero pattern.
fn connected_blocks(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut seen = vec![false; n];
    let mut blocks = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut block = vec![start];
        seen[start] = true;
        let mut k = 0;
        while k < block.len() {
            let i = block[k];
            for j in 0..n {
                if !seen[j] && (m[(i, j)] != 0.0 || m[(j, i)] != 0.0) {
                    seen[j] = true;
                    block.push(j);
                }
            }
            k += 1;
        }
        block.sort_unstable();
        blocks.push(block);
    }
    blocks
}

fn sub_matrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Marginal covariance Σ = (−4M)⁻¹ of exp(2xᵀMx), after checking that M is
/// negative definite by its spectrum.
fn marginal_covariance(m: &DMatrix<f64>, coords: &[Coord]) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(-m.clone());
    let top = eig.eigenvalues.amax();
    let definite = eig.eigenvalues.iter().all(|&v| v > 1e-14 * top) && top > 0.0;
    let sigma = if definite { (m * -4.0).try_inverse() } else { None };
    match sigma {
        Some(s) if (0..s.nrows()).all(|i| s[(i, i)] > 0.0 && s[(i, i)].is_finite()) => Ok(s),
        _ => {
            let _ = unconfined_direction(m, coords);
            Err(Error::NotPositiveDefinite)
        }
    }
}

fn check_refinement(coarse: f64, fine: f64) -> Result<f64> {
    if !((fine - coarse).abs() <= REFINEMENT_TOLERANCE * fine.abs()) {
        return Err(Error::GridTooCoarse { coarse, fine });
    }
    Ok(fine)
}

/// ∫ exp(2xᵀAx) over all six coordinates.
pub fn oracle_mass(a: &QuadraticForm, spec: &QuadratureSpec) -> Result<f64> {
    oracle_mass_in(a, &Coord::ALL, spec)
}

/// ∫ exp(2xᵀAx) over `coords`, the remaining coordinates held at zero.
pub fn oracle_mass_in(a: &QuadraticForm, coords: &[Coord], spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let m = a.restrict(coords);
    let sigma = marginal_covariance(&m, coords)?;
    let mass_with = |points: usize| {
        connected_blocks(&m)
            .iter()
            .map(|block| {
                let q = sub_matrix(&m, block) * 2.0;
                let axes: Vec<Axis> = block
                    .iter()
                    .map(|&i| Axis::new(0.0, spec.half_width * sigma[(i, i)].sqrt(), points, spec.rule))
                    .collect();
                tensor_integral(&q, &vec![0.0; block.len()], 0.0, &axes)
            })
            .product::<f64>()
    };
    check_refinement(mass_with(spec.points), mass_with(spec.refined().points))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PurityMode {
    /// Kernel from the closed-form partial trace, traced on a grid.
    Closed,
    /// Kernel elements by direct quadrature over the discarded coordinates.
    Deep,
}

/// Tr(ρ²)/Tr(ρ)² of the state reduced to `keep`, on a grid.
pub fn oracle_purity(
    a: &QuadraticForm,
    keep: &[Coord],
    spec: &QuadratureSpec,
    mode: PurityMode,
) -> Result<f64> {
    spec.validate()?;
    match mode {
        PurityMode::Closed => closed_kernel_purity(a, keep, spec),
        PurityMode::Deep => deep_kernel_purity(a, keep, spec),
    }
}

fn grid_purity(weights: &[f64], kernel: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
    let n = weights.len();
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let sq: f64 = weights
                .iter()
                .enumerate()
                .map(|(j, w)| {
                    let v = kernel(i, j);
                    w * v * v
                })
                .sum();
            (weights[i] * sq, weights[i] * kernel(i, i))
        })
        .collect();
    let tr_sq: f64 = rows.iter().map(|r| r.0).sum();
    let tr: f64 = rows.iter().map(|r| r.1).sum();
    tr_sq / (tr * tr)
}

fn closed_kernel_purity(a: &QuadraticForm, keep: &[Coord], spec: &QuadratureSpec) -> Result<f64> {
    if keep.is_empty() || keep.len() > 2 {
        return Err(Error::InvalidConfig(format!(
            "grid purity supports 1 or 2 kept coordinates, got {}",
            keep.len()
        )));
    }
    let kernel = reduce_pure_state(a, keep)?;
    let n = keep.len();
    let diag = &kernel.diag_block + &kernel.off_block;
    let sigma = marginal_covariance(&diag, keep)?;
    let purity_with = |points: usize| {
        let axes: Vec<Axis> = (0..n)
            .map(|i| Axis::new(0.0, spec.half_width * sigma[(i, i)].sqrt(), points, spec.rule))
            .collect();
        // Flatten the tensor grid into points with product weights.
        let mut pts: Vec<Vec<f64>> = vec![vec![]];
        let mut wts = vec![1.0];
        for axis in &axes {
            let mut next_p = Vec::new();
            let mut next_w = Vec::new();
            for (p, w) in pts.iter().zip(&wts) {
                for (&x, &wx) in axis.nodes.iter().zip(&axis.weights) {
                    let mut q = p.clone();
                    q.push(x);
                    next_p.push(q);
                    next_w.push(w * wx);
                }
            }
            pts = next_p;
            wts = next_w;
        }
        grid_purity(&wts, |i, j| kernel.value(&pts[i], &pts[j]))
    };
    check_refinement(purity_with(spec.points), purity_with(spec.refined().points))
}

fn deep_kernel_purity(a: &QuadraticForm, keep: &[Coord], spec: &QuadratureSpec) -> Result<f64> {
    let [kept] = keep else {
        return Err(Error::InvalidConfig(format!(
            "deep purity mode needs exactly 1 kept coordinate, got {}",
            keep.len()
        )));
    };
    // Only the kept coordinate's connected block matters: the rest of the
    // state factors out and cancels in the purity ratio.
    let full = a.restrict(&Coord::ALL);
    let block = connected_blocks(&full)
        .into_iter()
        .find(|b| b.contains(&kept.index()))
        .expect("every coordinate lies in a block");
    let coords: Vec<Coord> = block.iter().map(|&i| Coord::ALL[i]).collect();
    let m = a.restrict(&coords);
    let sigma = marginal_covariance(&m, &coords)?;
    let k = coords.iter().position(|c| c == kept).expect("kept coordinate is in its block");
    let rest: Vec<usize> = (0..coords.len()).filter(|&i| i != k).collect();
    if rest.is_empty() {
        return Ok(1.0);
    }

    let a_kk = m[(k, k)];
    let a_kb: Vec<f64> = rest.iter().map(|&j| m[(k, j)]).collect();
    let a_bb = sub_matrix(&m, &rest);
    let q = &a_bb * 2.0;
    let sigma_b = marginal_covariance(&a_bb, &rest.iter().map(|&i| coords[i]).collect::<Vec<_>>())?;
    let a_bb_inv = a_bb.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;

    // ρ(u, u′) = ∫ exp((u² + u′²)a_kk + 2(u + u′)a_kbᵀb + 2bᵀA_bb b) db,
    // integrated on a grid centred on the integrand's peak.
    let element = |u: f64, v: f64, points: usize| {
        let s = u + v;
        let l: Vec<f64> = a_kb.iter().map(|&c| 2.0 * s * c).collect();
        let lin = nalgebra::DVector::from_vec(a_kb.clone()) * s;
        let centre = -(&a_bb_inv * lin) * 0.5;
        let axes: Vec<Axis> = (0..rest.len())
            .map(|i| {
                Axis::new(centre[i], spec.half_width * sigma_b[(i, i)].sqrt(), points, spec.rule)
            })
            .collect();
        tensor_integral(&q, &l, (u * u + v * v) * a_kk, &axes)
    };

    let kept_axis = Axis::new(
        0.0,
        spec.half_width * sigma[(k, k)].sqrt(),
        DEEP_KERNEL_POINTS,
        spec.rule,
    );
    let nodes = &kept_axis.nodes;

    // Refinement check on the diagonal, which carries the trace.
    let trace_with = |points: usize| -> f64 {
        nodes
            .iter()
            .zip(&kept_axis.weights)
            .map(|(&u, &w)| w * element(u, u, points))
            .sum()
    };
    check_refinement(trace_with(spec.points), trace_with(spec.refined().points))?;

    let n = nodes.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .map(|i| (i..n).map(|j| element(nodes[i], nodes[j], spec.points)).collect())
        .collect();
    let rho = |i: usize, j: usize| if i <= j { upper[i][j - i] } else { upper[j][i - j] };
    Ok(grid_purity(&kept_axis.weights, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{gaussian_mass, subsystem_purity_of};
    use crate::model::{assemble_quadratic_form, FilterMask, SourceConfig};
    use nalgebra::Matrix6;
    use std::f64::consts::PI;

    fn baseline() -> QuadraticForm {
        assemble_quadratic_form(&SourceConfig::baseline(), FilterMask::Both).unwrap()
    }

    #[test]
    fn diagonal_form_matches_analytic_mass() {
        let mut m = Matrix6::zeros();
        for i in 0..6 {
            m[(i, i)] = -0.5 * (i as f64 + 1.0);
        }
        let a = QuadraticForm::from_matrix(m);
        let det: f64 = (1..=6).map(|i| i as f64).product();
        let exact = PI.powi(3) / det.sqrt();
        let got = oracle_mass(&a, &QuadratureSpec::default()).unwrap();
        assert!((got / exact - 1.0).abs() < 1e-6, "{got} vs {exact}");
    }

    #[test]
    fn baseline_mass_matches_closed_form() {
        let a = baseline();
        let exact = gaussian_mass(&a.restrict(&Coord::ALL)).unwrap();
        let got = oracle_mass(&a, &QuadratureSpec::default()).unwrap();
        assert!((got / exact - 1.0).abs() < 1e-4, "{got} vs {exact}");
    }

    #[test]
    fn degenerate_form_is_rejected() {
        let mut m = Matrix6::zeros();
        for i in 0..5 {
            m[(i, i)] = -1.0;
        }
        let a = QuadraticForm::from_matrix(m);
        assert!(matches!(
            oracle_mass(&a, &QuadratureSpec::default()),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn spec_validation() {
        let even = QuadratureSpec { points: 40, ..Default::default() };
        assert!(even.validate().is_err());
        let narrow = QuadratureSpec { half_width: 3.0, ..Default::default() };
        assert!(narrow.validate().is_err());
        let coarse = QuadratureSpec { points: 11, half_width: 40.0, rule: Rule::Trapezoid };
        let a = baseline();
        assert!(matches!(oracle_mass(&a, &coarse), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn spectral_purity_both_modes() {
        let a = baseline();
        let exact = subsystem_purity_of(&a, &[Coord::OmegaS]).unwrap();
        let spec = QuadratureSpec::default();
        for mode in [PurityMode::Closed, PurityMode::Deep] {
            let got = oracle_purity(&a, &[Coord::OmegaS], &spec, mode).unwrap();
            assert!((got - exact).abs() < 1e-3, "{mode:?}: {got} vs {exact}");
        }
    }

    #[test]
    fn spatial_purity_on_2d_grid() {
        let a = baseline();
        let keep = [Coord::QsX, Coord::QsY];
        let exact = subsystem_purity_of(&a, &keep).unwrap();
        let got = oracle_purity(&a, &keep, &QuadratureSpec::default(), PurityMode::Closed).unwrap();
        assert!((got - exact).abs() < 2e-3, "{got} vs {exact}");
    }

    #[test]
    fn product_state_grid_purity_is_one() {
        let mut m = Matrix6::zeros();
        for i in 0..6 {
            m[(i, i)] = -1.0 - i as f64;
        }
        let a = QuadraticForm::from_matrix(m);
        let got = oracle_purity(&a, &[Coord::OmegaS], &QuadratureSpec::default(), PurityMode::Closed)
            .unwrap();
        assert!((got - 1.0).abs() < 1e-6);
        let deep = oracle_purity(&a, &[Coord::OmegaS], &QuadratureSpec::default(), PurityMode::Deep)
            .unwrap();
        assert_eq!(deep, 1.0);
    }
}
