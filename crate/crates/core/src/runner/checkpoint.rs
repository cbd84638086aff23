//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "EQLCKPT\0" | u32 format version
//! str game name | str run config JSON | u64 snapshot version | u64 episodes
//! value table | proposal | u8 has_frozen [proposal]
//! 32-byte SHA-256 of everything before it
//! ```
//!
//! Strings and encoded states/actions are `u32 length + bytes`. Table
//! entries are written sorted by their encoded keys, so equal tables give
//! identical files.

use std::collections::BTreeMap;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::dnvi::{ValueEntry, ValueTable};
use crate::error::{Error, Result};
use crate::proposal::{ActionWeights, ProposalModel};
use crate::stogame::Game;

pub const MAGIC: &[u8; 8] = b"EQLCKPT\0";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

pub struct Checkpoint<G: Game> {
    pub game: String,
    pub config: RunConfig,
    /// Version of the last published snapshot.
    pub version: u64,
    /// Self-play episodes completed.
    pub episodes: u64,
    pub values: ValueTable<G::State>,
    /// Trainer's proposal model.
    pub proposal: ProposalModel<G::State, G::Action>,
    /// Proposal the workers used in NPU mode.
    pub frozen: Option<ProposalModel<G::State, G::Action>>,
}

impl<G: Game> Clone for Checkpoint<G> {
    fn clone(&self) -> Self {
        Self {
            game: self.game.clone(),
            config: self.config.clone(),
            version: self.version,
            episodes: self.episodes,
            values: self.values.clone(),
            proposal: self.proposal.clone(),
            frozen: self.frozen.clone(),
        }
    }
}

impl<G: Game> std::fmt::Debug for Checkpoint<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Checkpoint")
            .field("game", &self.game)
            .field("version", &self.version)
            .field("episodes", &self.episodes)
            .field("values", &self.values.len())
            .field("proposal", &self.proposal.len())
            .finish()
    }
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.write_u32::<LE>(b.len() as u32).unwrap();
    out.extend_from_slice(b);
}

fn put_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    out.write_u32::<LE>(xs.len() as u32).unwrap();
    for x in xs {
        out.write_f64::<LE>(*x).unwrap();
    }
}

fn put_proposal<G: Game>(out: &mut Vec<u8>, game: &G, model: &ProposalModel<G::State, G::Action>) {
    out.write_f64::<LE>(model.smoothing).unwrap();
    let sorted: BTreeMap<(Vec<u8>, usize), &ActionWeights<G::Action>> = model
        .entries()
        .map(|((s, p), w)| ((game.encode_state(s), *p), w))
        .collect();
    out.write_u64::<LE>(sorted.len() as u64).unwrap();
    for ((s, p), w) in sorted {
        put_bytes(out, &s);
        out.write_u32::<LE>(p as u32).unwrap();
        out.write_f64::<LE>(w.total).unwrap();
        let actions: BTreeMap<Vec<u8>, f64> = w.weights.iter().map(|(a, x)| (game.encode_action(a), *x)).collect();
        out.write_u64::<LE>(actions.len() as u64).unwrap();
        for (a, x) in actions {
            put_bytes(out, &a);
            out.write_f64::<LE>(x).unwrap();
        }
    }
}

/// Body after magic and version, once both and the checksum are verified.
fn verified_body(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    if bytes.len() < MAGIC.len() + 4 + DIGEST_LEN {
        return Err(Error::Checkpoint("truncated checkpoint".into()));
    }
    let found = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if found != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found,
            expected: FORMAT_VERSION,
        });
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body)[..] != *digest {
        return Err(Error::Checkpoint("checksum mismatch (truncated or corrupt file)".into()));
    }
    Ok(&body[12..])
}

/// Game name and run configuration of a checkpoint, without decoding the
/// tables.
pub fn peek_checkpoint(bytes: &[u8]) -> Result<(String, RunConfig)> {
    let mut r = Reader {
        cur: Cursor::new(verified_body(bytes)?),
    };
    let name = r.string()?;
    let config = serde_json::from_str(&r.string()?).map_err(|e| Error::Checkpoint(format!("bad config: {e}")))?;
    Ok((name, config))
}

struct Reader<'a> {
    cur: Cursor<&'a [u8]>,
}

fn truncated(_: std::io::Error) -> Error {
    Error::Checkpoint("truncated checkpoint".into())
}

impl Reader<'_> {
    fn u32(&mut self) -> Result<u32> {
        self.cur.read_u32::<LE>().map_err(truncated)
    }

    fn u64(&mut self) -> Result<u64> {
        self.cur.read_u64::<LE>().map_err(truncated)
    }

    fn f64(&mut self) -> Result<f64> {
        self.cur.read_f64::<LE>().map_err(truncated)
    }

    fn bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.u32()? as usize;
        let left = self.cur.get_ref().len() - self.cur.position() as usize;
        if n > left {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let mut b = vec![0; n];
        self.cur.read_exact(&mut b).map_err(truncated)?;
        Ok(b)
    }

    fn string(&mut self) -> Result<String> {
        String::from_utf8(self.bytes()?).map_err(|_| Error::Checkpoint("invalid UTF-8 string".into()))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()? as usize;
        (0..n).map(|_| self.f64()).collect()
    }

    fn proposal<G: Game>(&mut self, game: &G) -> Result<ProposalModel<G::State, G::Action>> {
        let mut model = ProposalModel::new(self.f64()?);
        for _ in 0..self.u64()? {
            let state = game.decode_state(&self.bytes()?)?;
            let player = self.u32()? as usize;
            let total = self.f64()?;
            let mut weights = BTreeMap::new();
            for _ in 0..self.u64()? {
                let a = game.decode_action(&self.bytes()?)?;
                weights.insert(a, self.f64()?);
            }
            model.insert_entry(state, player, ActionWeights { weights, total });
        }
        Ok(model)
    }
}

impl<G: Game> Checkpoint<G> {
    pub fn to_bytes(&self, game: &G) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.write_u32::<LE>(FORMAT_VERSION).unwrap();
        put_bytes(&mut out, self.game.as_bytes());
        put_bytes(&mut out, self.config.to_json().as_bytes());
        out.write_u64::<LE>(self.version).unwrap();
        out.write_u64::<LE>(self.episodes).unwrap();
        put_f64s(&mut out, self.values.default_value());
        let sorted: BTreeMap<Vec<u8>, &ValueEntry> =
            self.values.entries().map(|(s, e)| (game.encode_state(s), e)).collect();
        out.write_u64::<LE>(sorted.len() as u64).unwrap();
        for (s, e) in sorted {
            put_bytes(&mut out, &s);
            out.write_u64::<LE>(e.visits).unwrap();
            put_f64s(&mut out, &e.values);
        }
        put_proposal(&mut out, game, &self.proposal);
        match &self.frozen {
            Some(f) => {
                out.push(1);
                put_proposal(&mut out, game, f);
            }
            None => out.push(0),
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest[..]);
        out
    }

    /// Parses a checkpoint for `game`. Nothing is returned unless the whole
    /// file is intact.
    pub fn from_bytes(game: &G, bytes: &[u8]) -> Result<Self> {
        let body = verified_body(bytes)?;
        let mut r = Reader { cur: Cursor::new(body) };
        let name = r.string()?;
        if name != game.name() {
            return Err(Error::GameMismatch {
                found: name,
                expected: game.name().to_owned(),
            });
        }
        let config: RunConfig =
            serde_json::from_str(&r.string()?).map_err(|e| Error::Checkpoint(format!("bad config: {e}")))?;
        let version = r.u64()?;
        let episodes = r.u64()?;
        let default = r.f64s()?;
        if default.len() != game.num_players() {
            return Err(Error::Checkpoint(format!(
                "value table has {} players, game has {}",
                default.len(),
                game.num_players()
            )));
        }
        let mut values = ValueTable::new(default);
        for _ in 0..r.u64()? {
            let state = game.decode_state(&r.bytes()?)?;
            let visits = r.u64()?;
            values.insert(
                state,
                ValueEntry {
                    values: r.f64s()?,
                    visits,
                },
            );
        }
        let proposal = r.proposal(game)?;
        let frozen = match r.cur.read_u8().map_err(truncated)? {
            0 => None,
            1 => Some(r.proposal(game)?),
            x => return Err(Error::Checkpoint(format!("bad frozen-proposal flag {x}"))),
        };
        if r.cur.position() as usize != r.cur.get_ref().len() {
            return Err(Error::Checkpoint("trailing bytes after checkpoint body".into()));
        }
        Ok(Self {
            game: name,
            config,
            version,
            episodes,
            values,
            proposal,
            frozen,
        })
    }

    /// Writes via a temporary file and rename, so a crash never leaves a
    /// half-written checkpoint under `path`.
    pub fn save(&self, game: &G, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes(game))?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(game: &G, path: &Path) -> Result<Self> {
        Self::from_bytes(game, &std::fs::read(path)?)
    }
}
