use std::fmt;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

type LazyPayoff<S> = Box<dyn Fn(&[usize]) -> Result<Vec<S>> + Send + Sync>;

enum Payoffs<S> {
    /// Row-major over joint actions, `num_players` entries per joint action.
    Dense(Vec<S>),
    Lazy(LazyPayoff<S>),
}

/// A normal-form game over per-player action indices.
///
/// The indices are handles into whatever action lists the caller keeps
/// (candidate orders, matrix rows); the game only sees counts.
pub struct RestrictedStageGame<S> {
    action_counts: Vec<usize>,
    payoffs: Payoffs<S>,
    constant_sum: Option<S>,
}

impl<S: Scalar> fmt::Debug for RestrictedStageGame<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RestrictedStageGame")
            .field("action_counts", &self.action_counts)
            .field("dense", &matches!(self.payoffs, Payoffs::Dense(_)))
            .field("constant_sum", &self.constant_sum)
            .finish()
    }
}

fn check_counts(counts: &[usize]) -> Result<()> {
    if counts.is_empty() {
        return Err(Error::DegenerateGame("no players".into()));
    }
    if let Some(p) = counts.iter().position(|&c| c == 0) {
        return Err(Error::DegenerateGame(format!("player {p} has no actions")));
    }
    Ok(())
}

impl<S: Scalar> RestrictedStageGame<S> {
    /// Evaluates every joint action eagerly.
    pub fn from_fn<F>(action_counts: Vec<usize>, mut eval: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Result<Vec<S>>,
    {
        check_counts(&action_counts)?;
        let n = action_counts.len();
        let total = joint_count(&action_counts);
        let total = usize::try_from(total)
            .map_err(|_| Error::DegenerateGame("joint action space too large".into()))?;
        let mut data = Vec::with_capacity(total * n);
        let mut joint = vec![0usize; n];
        for _ in 0..total {
            let v = eval(&joint)?;
            if v.len() != n {
                return Err(Error::PayoffEvaluation(format!(
                    "payoff vector has {} entries for {} players",
                    v.len(),
                    n
                )));
            }
            if let Some(bad) = v.iter().find(|x| !x.is_finite_value()) {
                return Err(Error::PayoffEvaluation(format!(
                    "non-finite payoff {bad:?} at {joint:?}"
                )));
            }
            data.extend(v);
            advance(&mut joint, &action_counts);
        }
        Ok(Self {
            action_counts,
            payoffs: Payoffs::Dense(data),
            constant_sum: None,
        })
    }

    /// Defers evaluation to `eval`; used when the joint space is too large to tabulate.
    pub fn lazy<F>(action_counts: Vec<usize>, eval: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> Result<Vec<S>> + Send + Sync + 'static,
    {
        check_counts(&action_counts)?;
        Ok(Self {
            action_counts,
            payoffs: Payoffs::Lazy(Box::new(eval)),
            constant_sum: None,
        })
    }

    /// Two-player zero-sum game from the row player's payoff matrix.
    pub fn zero_sum(row_payoffs: &[Vec<S>]) -> Result<Self> {
        let rows = row_payoffs.len();
        let cols = row_payoffs.first().map_or(0, Vec::len);
        if row_payoffs.iter().any(|r| r.len() != cols) {
            return Err(Error::DegenerateGame("ragged payoff matrix".into()));
        }
        let game = Self::from_fn(vec![rows, cols], |j| {
            let v = row_payoffs[j[0]][j[1]].clone();
            Ok(vec![v.clone(), -v])
        })?;
        Ok(Self {
            constant_sum: Some(S::zero()),
            ..game
        })
    }

    /// Two-player game with separate payoff matrices.
    pub fn bimatrix(row: &[Vec<S>], col: &[Vec<S>]) -> Result<Self> {
        let rows = row.len();
        let cols = row.first().map_or(0, Vec::len);
        if col.len() != rows || row.iter().chain(col).any(|r| r.len() != cols) {
            return Err(Error::DegenerateGame("mismatched payoff matrices".into()));
        }
        Self::from_fn(vec![rows, cols], |j| {
            Ok(vec![row[j[0]][j[1]].clone(), col[j[0]][j[1]].clone()])
        })
    }

    /// Checks that every joint action's payoffs sum to `total` and records the flag.
    pub fn with_constant_sum(mut self, total: S) -> Result<Self> {
        if let Some(found) = self.find_constant_sum()? {
            if (found.clone() - total.clone()).abs() <= S::tolerance() {
                self.constant_sum = Some(total);
                return Ok(self);
            }
        }
        Err(Error::NotZeroSum(format!(
            "payoffs do not sum to {total:?} at every joint action"
        )))
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.action_counts[player]
    }

    pub fn joint_count(&self) -> u128 {
        joint_count(&self.action_counts)
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.payoffs, Payoffs::Dense(_))
    }

    pub fn constant_sum_flag(&self) -> Option<&S> {
        self.constant_sum.as_ref()
    }

    fn offset(&self, joint: &[usize]) -> usize {
        let mut idx = 0;
        for (a, &c) in joint.iter().zip(&self.action_counts) {
            debug_assert!(*a < c);
            idx = idx * c + a;
        }
        idx * self.action_counts.len()
    }

    /// Payoff of `player` at `joint`.
    pub fn payoff(&self, joint: &[usize], player: usize) -> Result<S> {
        match &self.payoffs {
            Payoffs::Dense(d) => Ok(d[self.offset(joint) + player].clone()),
            Payoffs::Lazy(f) => {
                let v = checked(f(joint)?, self.num_players())?;
                Ok(v[player].clone())
            }
        }
    }

    /// Full payoff vector at `joint`.
    pub fn payoffs(&self, joint: &[usize]) -> Result<Vec<S>> {
        match &self.payoffs {
            Payoffs::Dense(d) => {
                let o = self.offset(joint);
                Ok(d[o..o + self.num_players()].to_vec())
            }
            Payoffs::Lazy(f) => checked(f(joint)?, self.num_players()),
        }
    }

    /// Common payoff sum when every joint action shares one (within tolerance).
    pub fn find_constant_sum(&self) -> Result<Option<S>> {
        let n = self.num_players();
        let mut joint = vec![0usize; n];
        let total = self.joint_count();
        let mut reference: Option<S> = None;
        for _ in 0..total {
            let s = self
                .payoffs(&joint)?
                .into_iter()
                .fold(S::zero(), |a, b| a + b);
            match &reference {
                None => reference = Some(s),
                Some(r) => {
                    if (s - r.clone()).abs() > S::tolerance() {
                        return Ok(None);
                    }
                }
            }
            advance(&mut joint, &self.action_counts);
        }
        Ok(reference)
    }

    /// Parses `{"players": N, "payoffs": nested}`. The nesting has one level per
    /// player; leaves are payoff vectors, or a single row payoff when N = 2
    /// (zero-sum shorthand).
    pub fn from_json(doc: &Value) -> Result<Self> {
        let players = doc
            .get("players")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Config("missing integer field 'players'".into()))?
            as usize;
        let payoffs = doc
            .get("payoffs")
            .ok_or_else(|| Error::Config("missing field 'payoffs'".into()))?;
        if players == 0 {
            return Err(Error::DegenerateGame("no players".into()));
        }
        let mut counts = Vec::with_capacity(players);
        let mut cursor = payoffs;
        for p in 0..players {
            let arr = cursor.as_array().ok_or_else(|| {
                Error::Config(format!("payoffs nesting level {p} is not an array"))
            })?;
            if arr.is_empty() {
                return Err(Error::DegenerateGame(format!("player {p} has no actions")));
            }
            counts.push(arr.len());
            cursor = &arr[0];
        }
        let shorthand = players == 2 && cursor.is_number();
        let game = Self::from_fn(counts, |joint| {
            let mut node = payoffs;
            for (p, &a) in joint.iter().enumerate() {
                node = node
                    .as_array()
                    .and_then(|arr| arr.get(a))
                    .ok_or_else(|| Error::Config(format!("ragged payoffs at player {p}")))?;
            }
            let number = |v: &Value| {
                v.as_f64()
                    .and_then(S::from_f64)
                    .ok_or_else(|| Error::Config(format!("non-numeric payoff {v}")))
            };
            if shorthand {
                let x = number(node)?;
                Ok(vec![x.clone(), -x])
            } else {
                node.as_array()
                    .ok_or_else(|| Error::Config("payoff leaf is not an array".into()))?
                    .iter()
                    .map(number)
                    .collect()
            }
        })?;
        if shorthand {
            game.with_constant_sum(S::zero())
        } else {
            Ok(game)
        }
    }
}

fn checked<S: Scalar>(v: Vec<S>, n: usize) -> Result<Vec<S>> {
    if v.len() != n {
        return Err(Error::PayoffEvaluation(format!(
            "payoff vector has {} entries for {n} players",
            v.len()
        )));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite_value()) {
        return Err(Error::PayoffEvaluation(format!("non-finite payoff {bad:?}")));
    }
    Ok(v)
}

pub fn joint_count(counts: &[usize]) -> u128 {
    counts
        .iter()
        .fold(1u128, |acc, &c| acc.saturating_mul(c as u128))
}

/// Odometer increment in row-major order (last player fastest).
pub fn advance(joint: &mut [usize], counts: &[usize]) {
    for p in (0..joint.len()).rev() {
        joint[p] += 1;
        if joint[p] < counts[p] {
            return;
        }
        joint[p] = 0;
    }
}
