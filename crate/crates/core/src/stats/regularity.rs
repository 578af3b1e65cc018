use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::SkewProductMap;
use crate::norms::{sup_and_vertical_lip, var_square_with};
use crate::observable::Observable2D;
use crate::par::Exec;

/// Both sides of
/// `var^□(f∘Fⁿ) ≤ mⁿ var^□(f) + (1 + m + … + m^{n-1})(var^□(G)‖f‖_{↕lip} + 2m‖f‖_∞)`
/// with `m` the number of branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarSquareGrowth {
    pub n: usize,
    /// Grid lower bound for `var^□(f∘Fⁿ)`.
    pub lhs: f64,
    pub var_f: f64,
    /// Analytic upper bound for `var^□(G)`.
    pub var_fiber: f64,
    pub vertical_lip: f64,
    pub sup: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// The growth bound for `n = 1..=n_max`. `f` must declare its sup and
/// vertical Lipschitz constant so the right-hand side is an upper bound.
pub fn var_square_growth(
    map: &SkewProductMap,
    f: &Observable2D,
    n_max: usize,
    grid: usize,
    exec: Exec,
) -> Result<Vec<VarSquareGrowth>> {
    let v = f.vertical_lip().ok_or_else(|| {
        Error::InvalidParams(
            "observable needs declared sup and vertical Lipschitz constants".into(),
        )
    })?;
    let var_fiber = map
        .fiber_var_square_bound()
        .ok_or_else(|| Error::InvalidParams("fiber has no analytic var^□ bound".into()))?;
    let m = map.base().branch_count() as f64;
    let var_f = var_square_with(f, grid, exec).value;
    let shared = Arc::new(map.clone());
    let k = var_fiber * (v.sup + v.lip_y) + 2.0 * m * v.sup;
    Ok((1..=n_max)
        .map(|n| {
            let lhs = var_square_with(&f.compose(shared.clone(), n), grid, exec).value;
            let geometric: f64 = (0..n).map(|j| m.powi(j as i32)).sum();
            let rhs = m.powi(n as i32) * var_f + geometric * k;
            VarSquareGrowth {
                n,
                lhs,
                var_f,
                var_fiber,
                vertical_lip: v.sup + v.lip_y,
                sup: v.sup,
                rhs,
                holds: lhs <= rhs,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipYCheck {
    pub n: usize,
    /// Grid estimate of `Lip_y(g∘Fⁿ)`.
    pub estimate: f64,
    /// `Lip_y(g) λⁿ`.
    pub bound: f64,
    pub holds: bool,
}

/// Vertical Lipschitz constants of `g∘Fⁿ` against `Lip_y(g) λⁿ + tol`.
pub fn lip_y_contraction(
    map: &SkewProductMap,
    g: &Observable2D,
    n_max: usize,
    grid: usize,
    tol: f64,
    exec: Exec,
) -> Vec<LipYCheck> {
    let lip = g
        .vertical_lip()
        .map(|v| v.lip_y)
        .unwrap_or_else(|| sup_and_vertical_lip(g, grid, exec).1);
    let shared = Arc::new(map.clone());
    (1..=n_max)
        .map(|n| {
            let estimate = sup_and_vertical_lip(&g.compose(shared.clone(), n), grid, exec).1;
            let bound = lip * map.lambda().powi(n as i32);
            LipYCheck {
                n,
                estimate,
                bound,
                holds: estimate <= bound + tol,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::LorenzModelParams;

    #[test]
    fn growth_bound_on_lorenz_model() {
        let f = SkewProductMap::lorenz(LorenzModelParams::default()).unwrap();
        let g = Observable2D::bump([0.3, 0.6], 0.2);
        let rows = var_square_growth(&f, &g, 3, 256, Exec::default()).unwrap();
        assert!(rows.iter().all(|r| r.holds), "{rows:?}");
        assert!(rows[0].lhs > 0.0);
    }

    #[test]
    fn vertical_lipschitz_contracts() {
        let f = SkewProductMap::lorenz(LorenzModelParams::default()).unwrap();
        let g = Observable2D::new(|x, y| (3.0 * y + x).sin()).with_vertical_lip(1.0, 3.0);
        let rows = lip_y_contraction(&f, &g, 5, 200, 1e-9, Exec::default());
        assert!(rows.iter().all(|r| r.holds), "{rows:?}");
        let a = SkewProductMap::affine_doubling(1.0 / 3.0).unwrap();
        let rows = lip_y_contraction(&a, &g, 5, 200, 1e-9, Exec::default());
        assert!(rows.iter().all(|r| r.holds), "{rows:?}");
    }
}
