//! Closed-form Gaussian integrals over the biphoton quadratic form.
//!
//! All determinants go through a Cholesky factor of a matrix that must be
//! positive definite; a failed factorization is reported as the domain error
//! (unconfined direction), never as a numerical panic. Determinants of the
//! mixed-unit matrices carry units and are internal only: every exported
//! quantity is a ratio in which they cancel.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{Coord, QuadraticForm};

/// Smallest accepted ratio of a squared Cholesky pivot to its diagonal
/// entry. An exactly singular matrix often factors with a roundoff-sized
/// positive pivot; this ratio is the inverse variance-inflation factor of
/// that coordinate, so 1e-12 only rejects directions that are confined
/// by rounding error alone.
pub const PIVOT_RATIO_TOLERANCE: f64 = 1e-12;

/// Lower Cholesky factor with pivots that are positive beyond roundoff.
fn cholesky(m: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let chol = m.clone().cholesky()?;
    let l = chol.l_dirty();
    let ok = (0..m.nrows()).all(|i| {
        let d = l[(i, i)];
        d.is_finite() && d > 0.0 && d * d > PIVOT_RATIO_TOLERANCE * m[(i, i)]
    });
    ok.then_some(chol)
}

/// ln det M for symmetric positive definite M.
pub fn log_det_positive_definite(m: &DMatrix<f64>) -> Result<f64> {
    let chol = cholesky(m).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    Ok(2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// ∫ exp(−xᵀMx) dx = π^{n/2} / √det M.
pub fn gaussian_norm_integral(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows() as f64;
    let log_det = log_det_positive_definite(m)?;
    Ok((0.5 * n * PI.ln() - 0.5 * log_det).exp())
}

/// ∫ exp(2xᵀAx) dx for a negative definite A.
pub fn gaussian_mass(a: &DMatrix<f64>) -> Result<f64> {
    gaussian_norm_integral(&(a * -2.0))
}

/// Advisory check: every eigenvalue ≤ 1e-12·‖A‖.
pub fn is_negative_semidefinite(a: &DMatrix<f64>) -> bool {
    let eig = SymmetricEigen::new(a.clone());
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    eig.eigenvalues.iter().all(|&v| v <= 1e-12 * scale)
}

/// Describes the least confined direction of a (nearly) degenerate
/// quadratic form `a` as a combination of its coordinates.
pub fn unconfined_direction(a: &DMatrix<f64>, coords: &[Coord]) -> String {
    debug_assert_eq!(a.nrows(), coords.len());
    if a.nrows() == 0 {
        return String::from("(none)");
    }
    let eig = SymmetricEigen::new(a.clone());
    // Largest eigenvalue of A: the direction that is least negative.
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let mut v = eig.eigenvectors.column(idx).into_owned();
    let pivot = v.iter().cloned().fold(0.0_f64, |m, c| if c.abs() > m.abs() { c } else { m });
    if pivot < 0.0 {
        v = -v;
    }
    let mut out = String::new();
    for (c, &coef) in coords.iter().zip(v.iter()) {
        if coef.abs() < 0.05 {
            continue;
        }
        if out.is_empty() {
            if coef < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if coef < 0.0 { " - " } else { " + " });
        }
        if (coef.abs() - 1.0).abs() < 1e-3 {
            out.push_str(c.label());
        } else {
            out.push_str(&format!("{:.3}*{}", coef.abs(), c.label()));
        }
    }
    out
}

/// Reduced density operator of a pure Gaussian state over a coordinate
/// subset:
///
/// ρ(a, a′) ∝ exp(aᵀP a + a′ᵀP a′ + 2aᵀW a′).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    pub subset: Vec<Coord>,
    /// Coefficient of aᵀ·a and a′ᵀ·a′.
    pub diag_block: DMatrix<f64>,
    /// Coefficient of the a ↔ a′ coupling.
    pub off_block: DMatrix<f64>,
}

impl GaussianKernel {
    pub fn dim(&self) -> usize {
        self.subset.len()
    }

    /// Exponent of the unnormalized kernel at (a, a′).
    pub fn exponent(&self, a: &[f64], a_prime: &[f64]) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = self.diag_block[(i, j)];
                let w = self.off_block[(i, j)];
                total += p * (a[i] * a[j] + a_prime[i] * a_prime[j]) + 2.0 * w * a[i] * a_prime[j];
            }
        }
        total
    }

    pub fn value(&self, a: &[f64], a_prime: &[f64]) -> f64 {
        self.exponent(a, a_prime).exp()
    }

    /// −(P + W), the precision of the diagonal a′ = a (up to a factor 2).
    fn diagonal_precision(&self) -> DMatrix<f64> {
        -(&self.diag_block + &self.off_block)
    }

    pub fn is_trace_class(&self) -> bool {
        cholesky(&self.diagonal_precision()).is_some()
    }

    /// Tr(ρ²)/Tr(ρ)² of the normalized kernel.
    ///
    /// Tr ρ ∝ ∫exp(2aᵀ(P+W)a) and Tr ρ² ∝ the 2n-dimensional integral with
    /// block matrix [[−2P, −2W], [−2W, −2P]]. Block-diagonalizing by a ± a′
    /// turns the ratio into √(det(−(P+W)) / det(−(P−W))).
    pub fn purity(&self) -> Result<f64> {
        let plus = self.diagonal_precision();
        let log_plus = log_det_positive_definite(&plus).map_err(|_| Error::NotTraceClass {
            direction: unconfined_direction(&-plus.clone(), &self.subset),
        })?;
        if !self.off_block.is_empty() && !is_negative_semidefinite(&-self.off_block.clone()) {
            return Err(Error::InvalidConfig(
                "kernel coupling block must be positive semidefinite".into(),
            ));
        }
        let minus = -(&self.diag_block - &self.off_block);
        let log_minus = log_det_positive_definite(&minus).map_err(|_| Error::NotTraceClass {
            direction: unconfined_direction(&-minus.clone(), &self.subset),
        })?;
        Ok((0.5 * (log_plus - log_minus)).exp())
    }
}

fn check_subset(keep: &[Coord]) -> Result<()> {
    if keep.is_empty() {
        return Err(Error::InvalidConfig("kept coordinate subset is empty".into()));
    }
    let mut sorted = keep.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(Error::InvalidConfig("kept coordinates must be distinct".into()));
    }
    Ok(())
}

/// Traces the pure state exp(xᵀAx) over every coordinate not in `keep`.
///
/// With A split into kept (a) and discarded (b) blocks, integrating
/// φ(a, b)·φ(a′, b) over b gives P = A_aa + W and W = −½·A_ab·A_bb⁻¹·A_abᵀ.
pub fn reduce_pure_state(a: &QuadraticForm, keep: &[Coord]) -> Result<GaussianKernel> {
    check_subset(keep)?;
    let discard: Vec<Coord> = Coord::ALL.iter().copied().filter(|c| !keep.contains(c)).collect();
    let a_aa = a.restrict(keep);
    let n = keep.len();

    let coupling = if discard.is_empty() {
        DMatrix::zeros(n, n)
    } else {
        let a_bb = a.restrict(&discard);
        let a_ab = DMatrix::from_fn(n, discard.len(), |r, c| a.entry(keep[r], discard[c]));
        let neg_bb = -&a_bb;
        let chol = cholesky(&neg_bb).ok_or_else(|| Error::DiscardedBlockNotDefinite {
            direction: unconfined_direction(&a_bb, &discard),
        })?;
        // W = ½·A_ab·(−A_bb)⁻¹·A_abᵀ
        let solved = chol.solve(&a_ab.transpose());
        let w = (&a_ab * solved) * 0.5;
        (&w + w.transpose()) * 0.5
    };

    let kernel = GaussianKernel {
        subset: keep.to_vec(),
        diag_block: &a_aa + &coupling,
        off_block: coupling,
    };
    if !kernel.is_trace_class() {
        let full = a.restrict(&Coord::ALL);
        return Err(Error::NotTraceClass {
            direction: unconfined_direction(&full, &Coord::ALL),
        });
    }
    Ok(kernel)
}

/// Purity of the state reduced to `keep`.
pub fn subsystem_purity_of(a: &QuadraticForm, keep: &[Coord]) -> Result<f64> {
    reduce_pure_state(a, keep)?.purity()
}

/// Ratio of two Gaussian masses ∫exp(2xᵀA_num x) / ∫exp(2xᵀA_den x) over
/// the six coordinates.
pub fn detection_probability_ratio(num: &QuadraticForm, den: &QuadraticForm) -> Result<f64> {
    detection_probability_ratio_in(num, den, &Coord::ALL)
}

/// As [`detection_probability_ratio`], restricted to the slice where every
/// coordinate outside `coords` is zero.
pub fn detection_probability_ratio_in(
    num: &QuadraticForm,
    den: &QuadraticForm,
    coords: &[Coord],
) -> Result<f64> {
    let log_det = |form: &QuadraticForm, role: &str| {
        let a = form.restrict(coords);
        log_det_positive_definite(&(&a * -2.0)).map_err(|_| Error::Unnormalizable {
            context: format!("{role} detection probability"),
            direction: unconfined_direction(&a, coords),
        })
    };
    let num_log = log_det(num, "joint")?;
    let den_log = log_det(den, "heralding")?;
    Ok((0.5 * (den_log - num_log)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_quadratic_form, FilterMask, FilterSet, SourceConfig};
    use nalgebra::Matrix6;

    #[test]
    fn norm_integral_of_identity_and_diagonal() {
        let id = DMatrix::<f64>::identity(6, 6);
        assert!((gaussian_norm_integral(&id).unwrap() - PI.powi(3)).abs() < 1e-12);
        let d = DMatrix::from_diagonal_element(2, 2, 4.0);
        assert!((gaussian_norm_integral(&d).unwrap() - PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn norm_integral_rejects_indefinite_and_singular() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(2, 2)] = 0.0;
        assert!(matches!(gaussian_norm_integral(&m), Err(Error::NotPositiveDefinite)));
        m[(2, 2)] = -1.0;
        assert!(matches!(gaussian_norm_integral(&m), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn product_state_is_pure() {
        let mut m = Matrix6::<f64>::zeros();
        for i in 0..6 {
            m[(i, i)] = -(i as f64 + 1.0);
        }
        m[(4, 5)] = 0.3;
        m[(5, 4)] = 0.3;
        let a = QuadraticForm::from_matrix(m);
        let k = reduce_pure_state(&a, &[Coord::QsX, Coord::QsY]).unwrap();
        assert!(k.off_block.iter().all(|&v| v == 0.0));
        assert_eq!(k.diag_block, a.restrict(&[Coord::QsX, Coord::QsY]));
        assert_eq!(k.purity().unwrap(), 1.0);
    }

    #[test]
    fn scalar_kernel_purity() {
        let kernel = |p: f64, w: f64| GaussianKernel {
            subset: vec![Coord::OmegaS],
            diag_block: DMatrix::from_element(1, 1, p),
            off_block: DMatrix::from_element(1, 1, w),
        };
        let v = kernel(-2.0, 1.0).purity().unwrap();
        assert!((v - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        // A negative coupling is not a physical reduced state.
        assert!(kernel(-2.0, -1.0).purity().is_err());
    }

    #[test]
    fn unconfined_transverse_direction_is_named() {
        let cfg = SourceConfig::baseline().with_filters(FilterSet::symmetric(Some(5.0), 0.0));
        let a = assemble_quadratic_form(&cfg, FilterMask::Both).unwrap();
        let err = reduce_pure_state(&a, &[Coord::QsX, Coord::QsY]).unwrap_err();
        assert!(err.is_unnormalizable(), "{err}");
        let msg = err.to_string();
        assert!(msg.contains("q_s^y") && msg.contains("q_i^y"), "{msg}");
    }

    #[test]
    fn ratio_of_identical_forms_is_one() {
        let a = assemble_quadratic_form(&SourceConfig::baseline(), FilterMask::Both).unwrap();
        assert!((detection_probability_ratio(&a, &a).unwrap() - 1.0).abs() < 1e-14);
        let relaxed = assemble_quadratic_form(&SourceConfig::baseline(), FilterMask::SignalOnly).unwrap();
        let r = detection_probability_ratio(&a, &relaxed).unwrap();
        assert!(r > 0.0 && r < 1.0);
    }

    #[test]
    fn coupling_block_is_positive_semidefinite() {
        let a = assemble_quadratic_form(&SourceConfig::baseline(), FilterMask::Both).unwrap();
        for keep in [
            vec![Coord::OmegaS],
            vec![Coord::QsX, Coord::QsY],
            vec![Coord::QiX, Coord::QiY, Coord::OmegaI],
        ] {
            let k = reduce_pure_state(&a, &keep).unwrap();
            assert!(is_negative_semidefinite(&-k.off_block.clone()));
        }
    }
}
