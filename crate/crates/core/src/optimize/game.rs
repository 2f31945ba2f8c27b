//! Zero-sum matrix games with nonnegative payoffs, solved as a linear program
//! by a dense tableau simplex with Bland's anti-cycling rule.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;

/// Optimal mixed strategies of `max_θ min_π πᵀ L θ`.
#[derive(Clone, Debug)]
pub struct GameSolution {
    pub value: f64,
    /// Column (maximizer) strategy.
    pub theta: Vec<f64>,
    /// Row (minimizer) strategy.
    pub pi: Vec<f64>,
}

/// Solves the game for `L` given as `rows × cols` with `L ≥ 0` and every row
/// containing a positive entry (so the value is positive).
///
/// Works on `max 1ᵀy s.t. Lᵀy ≤ 1, y ≥ 0`: the slack basis is feasible, the
/// optimum is `1 / value`, `π = y / Σy`, and the column strategy comes from
/// the slack reduced costs.
pub fn solve_game(l: &[Vec<f64>]) -> Result<GameSolution> {
    let k = l.len();
    let j = l.first().map_or(0, Vec::len);
    if k == 0 || j == 0 || l.iter().any(|r| r.len() != j) {
        return Err(Error::Dimension(format!(
            "payoff matrix must be non-empty and rectangular ({k} rows)"
        )));
    }
    if l.iter().flatten().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Parameter(
            "payoffs must be finite and nonnegative".into(),
        ));
    }
    let width = k + j + 1;
    // tableau rows: one per column of L, plus the objective row last
    let mut t = vec![0.0; (j + 1) * width];
    for c in 0..j {
        let row = &mut t[c * width..(c + 1) * width];
        for (r, lr) in l.iter().enumerate() {
            row[r] = lr[c];
        }
        row[k + c] = 1.0;
        row[width - 1] = 1.0;
    }
    for r in 0..k {
        t[j * width + r] = -1.0;
    }
    let mut basis: Vec<usize> = (k..k + j).collect();

    let max_pivots = 50 * (k + j);
    let mut pivots = 0;
    loop {
        let obj = &t[j * width..];
        let Some(enter) = (0..k + j).find(|&c| obj[c] < -PIVOT_TOL) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for r in 0..j {
            let a = t[r * width + enter];
            if a > PIVOT_TOL {
                let ratio = t[r * width + width - 1] / a;
                let better = match leave {
                    None => true,
                    Some(prev) => {
                        ratio < best_ratio - 1e-15
                            || (ratio <= best_ratio + 1e-15 && basis[r] < basis[prev])
                    }
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(pr) = leave else {
            return Err(Error::Conditioning(
                "matrix game LP is unbounded (a row has no positive payoff)".into(),
            ));
        };
        let piv = t[pr * width + enter];
        for c in 0..width {
            t[pr * width + c] /= piv;
        }
        for r in 0..=j {
            if r == pr {
                continue;
            }
            let factor = t[r * width + enter];
            if factor != 0.0 {
                for c in 0..width {
                    t[r * width + c] -= factor * t[pr * width + c];
                }
            }
        }
        basis[pr] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Conditioning(format!(
                "simplex exceeded {max_pivots} pivots"
            )));
        }
    }

    let mut y = vec![0.0; k];
    for (r, &b) in basis.iter().enumerate() {
        if b < k {
            y[b] = t[r * width + width - 1].max(0.0);
        }
    }
    let obj = &t[j * width..];
    let x: Vec<f64> = (0..j).map(|c| obj[k + c].max(0.0)).collect();
    let sy: f64 = y.iter().sum();
    let sx: f64 = x.iter().sum();
    if !(sy > 0.0 && sx > 0.0) {
        return Err(Error::Conditioning(
            "degenerate matrix game (zero value)".into(),
        ));
    }
    Ok(GameSolution {
        value: 1.0 / sy,
        theta: x.iter().map(|v| v / sx).collect(),
        pi: y.iter().map(|v| v / sy).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn payoff(l: &[Vec<f64>], pi: &[f64], theta: &[f64]) -> Vec<(f64, f64)> {
        // (min over rows of Lθ, max over columns of Lᵀπ)
        let rows = l
            .iter()
            .map(|r| r.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>());
        let cols = (0..theta.len()).map(|c| l.iter().zip(pi).map(|(r, p)| r[c] * p).sum::<f64>());
        vec![(
            rows.fold(f64::INFINITY, f64::min),
            cols.fold(f64::NEG_INFINITY, f64::max),
        )]
    }

    #[test]
    fn single_entry() {
        let s = solve_game(&[vec![2.5]]).unwrap();
        assert!((s.value - 2.5).abs() < 1e-15);
        assert_eq!(s.theta, vec![1.0]);
    }

    #[test]
    fn diagonal_game_equalizes() {
        // value of diag(a, b) is ab/(a+b)
        let s = solve_game(&[vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert!((s.value - 0.75).abs() < 1e-14);
        assert!((s.theta[0] - 0.75).abs() < 1e-14);
        assert!((s.pi[0] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn strategies_certify_the_value() {
        let l = vec![
            vec![3.0, 1.0, 0.5, 2.0],
            vec![0.2, 2.0, 1.5, 0.1],
            vec![1.0, 0.3, 2.5, 0.0],
        ];
        let s = solve_game(&l).unwrap();
        let (lo, hi) = payoff(&l, &s.pi, &s.theta)[0];
        assert!((lo - s.value).abs() < 1e-12, "{lo} vs {}", s.value);
        assert!((hi - s.value).abs() < 1e-12, "{hi} vs {}", s.value);
        assert!((s.theta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominated_and_duplicate_columns() {
        let l = vec![vec![1.0, 1.0, 0.5, 1.0], vec![1.0, 1.0, 0.5, 1.0]];
        let s = solve_game(&l).unwrap();
        assert!((s.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_zero_row() {
        assert!(solve_game(&[vec![1.0, 2.0], vec![0.0, 0.0]]).is_err());
        assert!(solve_game(&[vec![-1.0]]).is_err());
    }
}
