use serde_json::Value;

use crate::error::{Error, Result};
use crate::microdip::{standard_map, MapGraph, MicroDip, PRESETS};
use crate::stogame::TabularGame;

pub const GAME_NAMES: [&str; 7] = ["duel9", "arena16", "tri12", "microdip", "pennies", "chain", "random"];

pub const DEFAULT_HORIZON: usize = 4;

/// A game built from a registry name.
#[derive(Clone, Debug)]
pub enum GameInstance {
    MicroDip(MicroDip),
    Tabular(TabularGame),
}

/// Runs `$body` with `$g` bound to the concrete game inside a
/// [`GameInstance`].
#[macro_export]
macro_rules! with_game {
    ($inst:expr, $g:ident => $body:expr) => {
        match $inst {
            $crate::runner::GameInstance::MicroDip($g) => $body,
            $crate::runner::GameInstance::Tabular($g) => $body,
        }
    };
}

fn field<'a>(params: &'a Value, key: &str) -> Option<&'a Value> {
    params.as_object().and_then(|m| m.get(key))
}

fn usize_param(params: &Value, key: &str, default: usize) -> Result<usize> {
    match field(params, key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| Error::Config(format!("game parameter '{key}' must be a non-negative integer"))),
    }
}

fn f64_param(params: &Value, key: &str, default: f64) -> Result<f64> {
    match field(params, key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::Config(format!("game parameter '{key}' must be a number"))),
    }
}

fn check_keys(params: &Value, allowed: &[&str]) -> Result<()> {
    match params {
        Value::Null => Ok(()),
        Value::Object(m) => match m.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!(
                "unknown game parameter '{k}' (expected one of {})",
                allowed.join(", ")
            ))),
            None => Ok(()),
        },
        _ => Err(Error::Config("game parameters must be a JSON object".into())),
    }
}

/// Builds a registered game.
///
/// * `duel9`, `arena16`, `tri12`: `{max_turns, victory_threshold, capture_every, discount}`
/// * `microdip`: the same plus `map` (inline map JSON)
/// * `pennies`: `{rounds}`
/// * `chain`: no parameters
/// * `random`: `{seed, turns, width, max_actions, discount, shaping}`
pub fn build_game(name: &str, params: &Value) -> Result<GameInstance> {
    match name {
        n if PRESETS.contains(&n) || n == "microdip" => {
            check_keys(params, &["max_turns", "victory_threshold", "capture_every", "discount", "map"])?;
            let map = if n == "microdip" {
                let doc = field(params, "map").ok_or_else(|| Error::Config("microdip needs a 'map' parameter".into()))?;
                MapGraph::from_json(doc)?
            } else {
                if field(params, "map").is_some() {
                    return Err(Error::Config(format!("preset '{n}' takes no 'map' parameter")));
                }
                standard_map(n)?
            };
            let threshold = map.supply_centers.len() / 2 + 1;
            let game = MicroDip::with_rules(
                map,
                usize_param(params, "max_turns", DEFAULT_HORIZON)?,
                usize_param(params, "victory_threshold", threshold)?,
                usize_param(params, "capture_every", 2)?,
            )?
            .with_discount(f64_param(params, "discount", 1.0)?)?;
            Ok(GameInstance::MicroDip(game.named(n)))
        }
        "pennies" => {
            check_keys(params, &["rounds"])?;
            let rounds = usize_param(params, "rounds", 3)?;
            if rounds == 0 {
                return Err(Error::Config("pennies needs at least one round".into()));
            }
            Ok(GameInstance::Tabular(TabularGame::iterated_pennies(rounds)))
        }
        "chain" => {
            check_keys(params, &[])?;
            Ok(GameInstance::Tabular(TabularGame::chain_conflict()))
        }
        "random" => {
            check_keys(params, &["seed", "turns", "width", "max_actions", "discount", "shaping"])?;
            let turns = usize_param(params, "turns", 4)?;
            let width = usize_param(params, "width", 3)?;
            let max_actions = usize_param(params, "max_actions", 4)?;
            let discount = f64_param(params, "discount", 0.9)?;
            if turns == 0 || width == 0 || max_actions < 2 || !(discount > 0.0 && discount <= 1.0) {
                return Err(Error::Config(
                    "random game needs turns, width >= 1, max_actions >= 2, discount in (0, 1]".into(),
                ));
            }
            let shaping = match field(params, "shaping") {
                None => true,
                Some(v) => v
                    .as_bool()
                    .ok_or_else(|| Error::Config("game parameter 'shaping' must be a boolean".into()))?,
            };
            let seed = field(params, "seed").and_then(Value::as_u64).unwrap_or(0);
            let game = TabularGame::random_zero_sum(seed, turns, width, max_actions, discount, shaping);
            game.validate()?;
            Ok(GameInstance::Tabular(game))
        }
        other => Err(Error::Unknown {
            kind: "game",
            name: other.to_owned(),
        }),
    }
}
