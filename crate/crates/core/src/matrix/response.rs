use super::game::{advance, RestrictedStageGame};
use super::strategy::MixedStrategy;
use crate::error::Result;
use crate::scalar::Scalar;

/// Expected payoff of each of `player`'s actions against the other players'
/// strategies in `profile` (the player's own entry is ignored).
pub fn action_values<S: Scalar>(
    game: &RestrictedStageGame<S>,
    player: usize,
    profile: &[MixedStrategy<S>],
) -> Result<Vec<S>> {
    let n = game.num_players();
    let supports: Vec<Vec<usize>> = (0..n)
        .map(|p| {
            if p == player {
                vec![0]
            } else {
                (0..profile[p].len())
                    .filter(|&a| *profile[p].prob(a) > S::zero())
                    .collect()
            }
        })
        .collect();
    let counts: Vec<usize> = supports.iter().map(Vec::len).collect();
    let combos: usize = counts.iter().product();
    let mut values = vec![S::zero(); game.num_actions(player)];
    let mut pos = vec![0usize; n];
    let mut joint = vec![0usize; n];
    for _ in 0..combos {
        let mut w = S::one();
        for p in 0..n {
            if p != player {
                joint[p] = supports[p][pos[p]];
                w = w * profile[p].prob(joint[p]).clone();
            }
        }
        for (a, v) in values.iter_mut().enumerate() {
            joint[player] = a;
            *v = v.clone() + w.clone() * game.payoff(&joint, player)?;
        }
        advance(&mut pos, &counts);
    }
    Ok(values)
}

/// Best pure response of `player` to the others' strategies; ties go to the
/// lowest index.
pub fn best_response_value<S: Scalar>(
    game: &RestrictedStageGame<S>,
    player: usize,
    profile: &[MixedStrategy<S>],
) -> Result<(usize, S)> {
    let values = action_values(game, player, profile)?;
    let mut best = 0;
    for (a, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = a;
        }
    }
    Ok((best, values[best].clone()))
}

/// Sum over players of the best-response gain against `profile`.
pub fn nash_conv<S: Scalar>(game: &RestrictedStageGame<S>, profile: &[MixedStrategy<S>]) -> Result<S> {
    let mut total = S::zero();
    for p in 0..game.num_players() {
        let values = action_values(game, p, profile)?;
        let (_, br) = best_response_value(game, p, profile)?;
        let own = values
            .iter()
            .zip(profile[p].probs())
            .fold(S::zero(), |acc, (v, q)| acc + v.clone() * q.clone());
        total = total + (br - own);
    }
    Ok(total)
}

/// Mean best-response gain per player (NashConv / N).
pub fn exploitability<S: Scalar>(game: &RestrictedStageGame<S>, profile: &[MixedStrategy<S>]) -> Result<S> {
    let n = S::from_usize(game.num_players()).expect("player count fits scalar");
    Ok(nash_conv(game, profile)? / n)
}
