//! The one-dimensional building block `T_rho` on `[0, 2]`: the monotone map
//! pushing Lebesgue measure to the two-slab density `rho` on `[0, 1]` and
//! `2 - rho` on `[1, 2]`.

use crate::error::{Error, Result};

/// `T_rho(x)`, with the degenerate forms at `rho = 0` and `rho = 2`.
pub fn block_map(rho_minus: f64, x: f64) -> Result<f64> {
    check_rho(rho_minus)?;
    if !(0.0..=2.0).contains(&x) {
        return Err(Error::domain("block map argument must lie in [0, 2]"));
    }
    Ok(apply(rho_minus, x))
}

#[inline]
pub(crate) fn apply(rho: f64, x: f64) -> f64 {
    if x <= rho {
        if rho == 0.0 {
            1.0
        } else {
            x / rho
        }
    } else {
        2.0 - (2.0 - x) / (2.0 - rho)
    }
}

/// `int_0^2 (T_rho - id)^2 = (2/3)(rho - 1)^2`.
pub fn block_map_defect(rho_minus: f64) -> Result<f64> {
    check_rho(rho_minus)?;
    Ok(2.0 / 3.0 * (rho_minus - 1.0) * (rho_minus - 1.0))
}

/// `int_0^2 (T_rho/2 + T_{2-rho}/2 - id)^2`, integrated exactly on the
/// pieces between the breakpoints `rho` and `2 - rho`, where the integrand
/// is the square of an affine function.
pub fn block_map_symmetrized_defect(rho_minus: f64) -> Result<f64> {
    check_rho(rho_minus)?;
    let g = |x: f64| 0.5 * (apply(rho_minus, x) - x) + 0.5 * (apply(2.0 - rho_minus, x) - x);
    let (a, b) = if rho_minus <= 1.0 {
        (rho_minus, 2.0 - rho_minus)
    } else {
        (2.0 - rho_minus, rho_minus)
    };
    let mut total = 0.0;
    for (lo, hi) in [(0.0, a), (a, b), (b, 2.0)] {
        if hi > lo {
            // one-sided limits at the breakpoints, since T_0 jumps at 0
            let (ga, gb) = (affine_limit(&g, lo, hi), affine_limit(&g, hi, lo));
            total += (hi - lo) * (ga * ga + ga * gb + gb * gb) / 3.0;
        }
    }
    Ok(total)
}

/// Value at `at` of the affine piece of `g` on the interval from `at`
/// towards `toward`, extrapolated from two interior points.
fn affine_limit(g: &impl Fn(f64) -> f64, at: f64, toward: f64) -> f64 {
    let p = at + (toward - at) * 0.25;
    let q = at + (toward - at) * 0.75;
    let (gp, gq) = (g(p), g(q));
    gp - (gq - gp) * 0.5
}

/// Smallest `C` with `int (T_rho - id)^2 <= C (rho - 1)^2` over `grid`,
/// skipping `rho = 1`.
pub fn quadratic_defect_constant(grid: &[f64]) -> Result<f64> {
    let mut c = 0.0f64;
    for &rho in grid {
        let dev = (rho - 1.0) * (rho - 1.0);
        if dev > 0.0 {
            c = c.max(block_map_defect(rho)? / dev);
        }
    }
    Ok(c)
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=2.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::domain("rho_- must lie in [0, 2]"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn balanced_block_is_the_identity() {
        for x in [0.0, 0.3, 1.0, 1.7, 2.0] {
            assert_eq!(block_map(1.0, x).unwrap(), x);
        }
        assert_eq!(block_map_defect(1.0).unwrap(), 0.0);
        assert_eq!(block_map_symmetrized_defect(1.0).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_forms() {
        for x in [0.0, 0.5, 1.0, 2.0] {
            assert_eq!(block_map(2.0, x).unwrap(), x / 2.0);
        }
        assert_eq!(block_map(0.0, 0.0).unwrap(), 1.0);
        for x in [0.1, 1.0, 2.0] {
            assert_eq!(block_map(0.0, x).unwrap(), 1.0 + x / 2.0);
        }
        assert!(block_map(2.5, 1.0).is_err());
        assert!(block_map(1.0, 2.5).is_err());
    }

    #[test]
    fn closed_form_defect_matches_quadrature() {
        // the breakpoint at 1.2 lies on the Simpson grid, so each panel
        // integrates a smooth piece
        let rho = 1.2;
        let q = simpson(|x| (apply(rho, x) - x).powi(2), 0.0, 2.0, 10_000);
        let exact = block_map_defect(rho).unwrap();
        assert!((q - exact).abs() < 1e-8);
        assert!(exact <= 4.0 * (rho - 1.0) * (rho - 1.0));
    }

    #[test]
    fn symmetrized_defect_matches_quadrature() {
        for rho in [0.0, 0.3, 0.8, 1.05, 1.5, 2.0] {
            let g = |x: f64| 0.5 * (apply(rho, x) - x) + 0.5 * (apply(2.0 - rho, x) - x);
            // split at the breakpoints so the quadrature sees smooth pieces
            let (a, b) = if rho <= 1.0 { (rho, 2.0 - rho) } else { (2.0 - rho, rho) };
            let mut q = 0.0;
            for (lo, hi) in [(0.0, a), (a, b), (b, 2.0)] {
                if hi > lo {
                    q += simpson(|x| g(x).powi(2), lo + 1e-13, hi - 1e-13, 2_000);
                }
            }
            let v = block_map_symmetrized_defect(rho).unwrap();
            assert!((q - v).abs() < 1e-9, "rho {rho}: {q} vs {v}");
            assert!(v <= 16.0);
        }
    }

    #[test]
    fn symmetrized_defect_is_quartic() {
        let eps = [0.05, 0.1, 0.2];
        let c: Vec<f64> = eps
            .iter()
            .map(|e| block_map_symmetrized_defect(1.0 + e).unwrap() / e.powi(4))
            .collect();
        let max = c.iter().cloned().fold(0.0, f64::max);
        let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min <= 2.0);
    }

    #[test]
    fn quadratic_law_on_a_grid() {
        let grid: Vec<f64> = (0..=20).map(|i| 0.5 + i as f64 * 0.05).collect();
        let c = quadratic_defect_constant(&grid).unwrap();
        assert!(c <= 4.0);
        assert!((c - 2.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn monotone_onto(rho in 0.0f64..=2.0, a in 0.0f64..=2.0, b in 0.0f64..=2.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (tl, th) = (block_map(rho, lo).unwrap(), block_map(rho, hi).unwrap());
            prop_assert!(tl <= th);
            prop_assert!((0.0..=2.0).contains(&tl) && (0.0..=2.0).contains(&th));
        }

        #[test]
        fn pushes_lebesgue_to_two_slabs(rho in 0.01f64..1.99, y in 0.0f64..=2.0) {
            // |T^{-1}([0, y])| equals the two-slab mass of [0, y]
            let preimage = if y <= 1.0 { rho * y } else { 2.0 - (2.0 - rho) * (2.0 - y) };
            let mass = if y <= 1.0 { rho * y } else { rho + (2.0 - rho) * (y - 1.0) };
            prop_assert!((preimage - mass).abs() < 1e-12);
            prop_assert!((apply(rho, preimage) - y).abs() < 1e-12);
        }
    }
}
