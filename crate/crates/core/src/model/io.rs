//! JSON game description.
//!
//! ```json
//! {
//!   "resources": [
//!     {"id": "r1",
//!      "welfare": {"family": "bent", "params": {"b": 1, "C": 0.5},
//!                  "values": [1.0, 1.5], "tail_slope": 0.5},
//!      "utility": {"values": [1.0, 0.5], "tail_value": 0.5},
//!      "value": 1.0}
//!   ],
//!   "players": [{"actions": [["r1"]]}]
//! }
//! ```
//!
//! When `values` is present it is authoritative; otherwise the family is
//! tabulated up to the number of players. A missing `utility` defaults to
//! the common-interest rule of the welfare rule.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::game::{Game, Resource};
use super::rules::{make_welfare_rule, UtilityRule, WelfareFamily, WelfareRule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    pub resources: Vec<ResourceEntry>,
    pub players: Vec<PlayerEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResourceEntry {
    pub id: String,
    pub welfare: WelfareEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilityEntry>,
    #[serde(default = "one")]
    pub value: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WelfareEntry {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityEntry {
    pub values: Vec<f64>,
    pub tail_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlayerEntry {
    pub actions: Vec<Vec<String>>,
}

impl WelfareEntry {
    fn from_rule(w: &WelfareRule) -> Self {
        let mut params = BTreeMap::new();
        let family = match w.family() {
            Some(WelfareFamily::Bent { b, c }) => {
                params.insert("b".to_string(), *b as f64);
                params.insert("C".to_string(), *c);
                "bent"
            }
            Some(WelfareFamily::Wta { p_d }) => {
                params.insert("p_d".to_string(), *p_d);
                "wta"
            }
            Some(f) => f.name(),
            None => "explicit",
        };
        WelfareEntry {
            family: family.to_string(),
            params,
            values: Some(w.values().to_vec()),
            tail_slope: Some(w.tail_slope()),
        }
    }

    fn to_rule(&self, j_max: usize) -> Result<WelfareRule> {
        let param = |name: &str| {
            self.params
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidGame(format!("{} welfare needs parameter {name:?}", self.family)))
        };
        let family = match self.family.as_str() {
            "bent" => {
                let b = param("b")?;
                if b < 1.0 || b.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!("bent b = {b} must be a positive integer")));
                }
                WelfareFamily::Bent {
                    b: b as usize,
                    c: param("C")?,
                }
            }
            "set_covering" => WelfareFamily::SetCovering,
            "wta" => WelfareFamily::Wta { p_d: param("p_d")? },
            "harmonic" => WelfareFamily::Harmonic,
            "explicit" => {
                return match (&self.values, self.tail_slope) {
                    (Some(values), tail) => WelfareRule::new(values.clone(), tail.unwrap_or(0.0), "explicit"),
                    (None, _) => Err(Error::InvalidGame("explicit welfare needs values".into())),
                }
            }
            other => return Err(Error::InvalidGame(format!("unknown welfare family {other:?}"))),
        };
        match &self.values {
            // tabulated values win; the family only labels them
            Some(values) => {
                let tail = self.tail_slope.unwrap_or(0.0);
                let rebuilt = make_welfare_rule(&family, values.len())?;
                let same = rebuilt.values().iter().zip(values).all(|(a, b)| (a - b).abs() < 1e-12)
                    && (rebuilt.tail_slope() - tail).abs() < 1e-12;
                if same {
                    Ok(rebuilt)
                } else {
                    WelfareRule::new(values.clone(), tail, self.family.clone())
                }
            }
            None => {
                let b = match family {
                    WelfareFamily::Bent { b, .. } => b,
                    _ => 1,
                };
                make_welfare_rule(&family, j_max.max(b))
            }
        }
    }
}

impl GameFile {
    pub fn from_game(game: &Game) -> Self {
        let resources = game
            .resources()
            .iter()
            .map(|r| ResourceEntry {
                id: r.id.clone(),
                welfare: WelfareEntry::from_rule(&r.welfare),
                utility: Some(UtilityEntry {
                    values: r.utility.values().to_vec(),
                    tail_value: r.utility.tail_value(),
                }),
                value: r.value,
            })
            .collect();
        let players = (0..game.n_players())
            .map(|i| PlayerEntry {
                actions: game.actions(i)[1..]
                    .iter()
                    .map(|act| act.iter().map(|&r| game.resources()[r].id.clone()).collect())
                    .collect(),
            })
            .collect();
        GameFile { resources, players }
    }

    pub fn into_game(self) -> Result<Game> {
        let n_players = self.players.len().max(1);
        let mut index = HashMap::new();
        let mut resources = Vec::with_capacity(self.resources.len());
        for (idx, entry) in self.resources.into_iter().enumerate() {
            if index.insert(entry.id.clone(), idx).is_some() {
                return Err(Error::InvalidGame(format!("duplicate resource id {:?}", entry.id)));
            }
            let welfare = entry.welfare.to_rule(n_players)?;
            let utility = match entry.utility {
                Some(u) => UtilityRule::unrestricted(u.values, u.tail_value)?,
                None => crate::designs::design_common_interest(&welfare),
            };
            resources.push(Resource::new(entry.id, Arc::new(welfare), Arc::new(utility), entry.value));
        }
        let mut action_lists = Vec::with_capacity(self.players.len());
        for (i, player) in self.players.into_iter().enumerate() {
            let mut list = Vec::with_capacity(player.actions.len());
            for action in player.actions {
                let ids = action
                    .iter()
                    .map(|id| {
                        index.get(id).copied().ok_or_else(|| {
                            Error::InvalidGame(format!("player {i} references unknown resource {id:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                list.push(ids);
            }
            action_lists.push(list);
        }
        Game::new(resources, action_lists)
    }
}

pub fn game_to_json(game: &Game) -> Result<String> {
    Ok(serde_json::to_string_pretty(&GameFile::from_game(game))?)
}

pub fn game_from_json(text: &str) -> Result<Game> {
    let file: GameFile = serde_json::from_str(text)?;
    file.into_game()
}

pub fn read_game(path: &Path) -> Result<Game> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    game_from_json(&text)
}

pub fn write_game(game: &Game, path: &Path) -> Result<()> {
    std::fs::write(path, game_to_json(game)?).map_err(|e| Error::io(path, e))
}
