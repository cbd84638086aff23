//! Exact minimax solutions of two-player constant-sum matrix games.

use super::game::RestrictedStageGame;
use super::regret::EquilibriumResult;
use super::strategy::MixedStrategy;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest per-player action count the exact oracle accepts.
pub const EXACT_MAX_ACTIONS: usize = 64;

fn row_matrix<S: Scalar>(game: &RestrictedStageGame<S>) -> Result<(Vec<Vec<S>>, S)> {
    if game.num_players() != 2 {
        return Err(Error::NotZeroSum(format!(
            "exact oracle needs 2 players, got {}",
            game.num_players()
        )));
    }
    for p in 0..2 {
        let n = game.num_actions(p);
        if n > EXACT_MAX_ACTIONS {
            return Err(Error::OracleSizeExceeded {
                what: "action count",
                size: n as u128,
                cap: EXACT_MAX_ACTIONS as u128,
            });
        }
    }
    let total = match game.constant_sum_flag() {
        Some(c) => c.clone(),
        None => game
            .find_constant_sum()?
            .ok_or_else(|| Error::NotZeroSum("payoff sums differ across joint actions".into()))?,
    };
    let (m, n) = (game.num_actions(0), game.num_actions(1));
    let mut a = vec![Vec::with_capacity(n); m];
    for (i, row) in a.iter_mut().enumerate() {
        for j in 0..n {
            row.push(game.payoff(&[i, j], 0)?);
        }
    }
    Ok((a, total))
}

/// Minimax strategies and value via the simplex method (Bland's rule).
///
/// Row payoffs are shifted to be positive, then the column player's
/// program `max 1'y s.t. B y <= 1, y >= 0` is solved; the row strategy is
/// read from the optimal duals. The value is unique even when strategies
/// are not.
pub fn exact_ne_2p0s<S: Scalar>(game: &RestrictedStageGame<S>) -> Result<EquilibriumResult<S>> {
    let (a, total) = row_matrix(game)?;
    let (row, col, value) = solve_matrix_lp(&a)?;
    Ok(EquilibriumResult {
        strategies: vec![row, col],
        values: vec![value.clone(), total - value],
        iterations_run: 0,
        value_samples: None,
    })
}

/// Row strategy, column strategy and row value of the zero-sum game `a`.
pub fn solve_matrix_lp<S: Scalar>(
    a: &[Vec<S>],
) -> Result<(MixedStrategy<S>, MixedStrategy<S>, S)> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if m == 0 || n == 0 {
        return Err(Error::DegenerateGame("empty payoff matrix".into()));
    }
    let mut min = a[0][0].clone();
    for x in a.iter().flatten() {
        if *x < min {
            min = x.clone();
        }
    }
    let shift = min - S::one();
    // Tableau: m constraint rows + objective row; columns y_0..y_{n-1}, slacks, rhs.
    let width = n + m + 1;
    let mut t: Vec<Vec<S>> = Vec::with_capacity(m + 1);
    for (i, row) in a.iter().enumerate() {
        let mut r = Vec::with_capacity(width);
        r.extend(row.iter().map(|x| x.clone() - shift.clone()));
        r.extend((0..m).map(|k| if k == i { S::one() } else { S::zero() }));
        r.push(S::one());
        t.push(r);
    }
    let mut obj = vec![-S::one(); n];
    obj.extend(std::iter::repeat_n(S::zero(), m + 1));
    t.push(obj);
    let mut basis: Vec<usize> = (n..n + m).collect();
    let tol = S::tolerance();

    let max_pivots = 50 * (n + m) * (n + m) + 100;
    for _ in 0..max_pivots {
        let Some(enter) = (0..n + m).find(|&j| t[m][j] < -tol.clone()) else {
            let z = t[m][width - 1].clone();
            let mut y = vec![S::zero(); n];
            for (r, &b) in basis.iter().enumerate() {
                if b < n {
                    y[b] = t[r][width - 1].clone();
                }
            }
            let x: Vec<S> = (0..m).map(|i| t[m][n + i].positive_part()).collect();
            let value = S::one() / z + shift;
            let col = MixedStrategy::from_weights(&y)?;
            let row = MixedStrategy::from_weights(&x)?;
            return Ok((row, col, value));
        };
        let mut leave: Option<usize> = None;
        for r in 0..m {
            if t[r][enter] > tol {
                let ratio = t[r][width - 1].clone() / t[r][enter].clone();
                leave = match leave {
                    None => Some(r),
                    Some(best) => {
                        let best_ratio = t[best][width - 1].clone() / t[best][enter].clone();
                        if ratio < best_ratio
                            || (ratio == best_ratio && basis[r] < basis[best])
                        {
                            Some(r)
                        } else {
                            Some(best)
                        }
                    }
                };
            }
        }
        // The feasible region is bounded because every entry of B is positive.
        let pr = leave.ok_or_else(|| Error::DegenerateGame("unbounded matrix program".into()))?;
        let pivot = t[pr][enter].clone();
        for v in t[pr].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        let pivot_row = t[pr].clone();
        for (r, row) in t.iter_mut().enumerate() {
            if r == pr {
                continue;
            }
            let f = row[enter].clone();
            if f == S::zero() {
                continue;
            }
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * p.clone();
            }
        }
        basis[pr] = enter;
    }
    Err(Error::DegenerateGame("simplex failed to terminate".into()))
}

/// Independent route: enumerate equal-size support pairs, solve the
/// indifference systems and keep the first pair that is an equilibrium.
/// Exponential; intended for small games and cross-checking.
pub fn support_enumeration_2p0s<S: Scalar>(
    game: &RestrictedStageGame<S>,
) -> Result<EquilibriumResult<S>> {
    let (a, total) = row_matrix(game)?;
    let (m, n) = (a.len(), a[0].len());
    let slack = S::tolerance() * S::lit(1e3);
    for k in 1..=m.min(n) {
        for rows in subsets(m, k) {
            for cols in subsets(n, k) {
                let Some((p, v)) = indifferent_mix(&a, &rows, &cols, true) else {
                    continue;
                };
                let Some((q, v2)) = indifferent_mix(&a, &rows, &cols, false) else {
                    continue;
                };
                if (v.clone() - v2).abs() > slack {
                    continue;
                }
                // Row player cannot gain by leaving `rows`; column cannot by leaving `cols`.
                let row_ok = (0..m).all(|i| {
                    let u = (0..n).fold(S::zero(), |acc, j| acc + a[i][j].clone() * q[j].clone());
                    u <= v.clone() + slack.clone()
                });
                let col_ok = (0..n).all(|j| {
                    let u = (0..m).fold(S::zero(), |acc, i| acc + a[i][j].clone() * p[i].clone());
                    u >= v.clone() - slack.clone()
                });
                if row_ok && col_ok {
                    return Ok(EquilibriumResult {
                        strategies: vec![MixedStrategy::from_weights(&p)?, MixedStrategy::from_weights(&q)?],
                        values: vec![v.clone(), total - v],
                        iterations_run: 0,
                        value_samples: None,
                    });
                }
            }
        }
    }
    Err(Error::DegenerateGame("no equilibrium support found".into()))
}

/// Solves for the mixture over `own` that makes the opponent indifferent over
/// `other`. Returns the full-length mixture and the common value, or `None`
/// when the system is singular or the mixture is not a distribution.
fn indifferent_mix<S: Scalar>(
    a: &[Vec<S>],
    rows: &[usize],
    cols: &[usize],
    row_mixes: bool,
) -> Option<(Vec<S>, S)> {
    let k = rows.len();
    // Unknowns: k weights + value. Equations: k indifference + normalization.
    let mut sys: Vec<Vec<S>> = Vec::with_capacity(k + 1);
    for e in 0..k {
        let mut r = Vec::with_capacity(k + 2);
        for u in 0..k {
            let x = if row_mixes {
                a[rows[u]][cols[e]].clone()
            } else {
                a[rows[e]][cols[u]].clone()
            };
            r.push(x);
        }
        r.push(-S::one());
        r.push(S::zero());
        sys.push(r);
    }
    let mut norm = vec![S::one(); k];
    norm.push(S::zero());
    norm.push(S::one());
    sys.push(norm);
    let sol = gauss_solve(sys)?;
    let (w, v) = (&sol[..k], sol[k].clone());
    if w.iter().any(|x| *x < -S::tolerance()) {
        return None;
    }
    let size = if row_mixes { a.len() } else { a[0].len() };
    let support = if row_mixes { rows } else { cols };
    let mut full = vec![S::zero(); size];
    for (idx, x) in support.iter().zip(w) {
        full[*idx] = x.positive_part();
    }
    Some((full, v))
}

fn gauss_solve<S: Scalar>(mut m: Vec<Vec<S>>) -> Option<Vec<S>> {
    let n = m.len();
    for c in 0..n {
        let mut piv = None;
        let mut best = S::zero();
        for (r, row) in m.iter().enumerate().skip(c) {
            if row[c].abs() > best {
                best = row[c].abs();
                piv = Some(r);
            }
        }
        let p = piv?;
        if best <= S::tolerance() {
            return None;
        }
        m.swap(c, p);
        let pivot_row = m[c].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == c || row[c] == S::zero() {
                continue;
            }
            let f = row[c].clone() / pivot_row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
    }
    Some((0..n).map(|r| m[r][n].clone() / m[r][r].clone()).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                break;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}
