//! Binary checkpoints: every parameter tensor, every optimizer state, the
//! random streams, and the resolved config text in one file.
//!
//! Layout: the magic bytes `NASA`, a 4-byte little-endian format version,
//! then tensors back to back until end of file. Each tensor is a 4-byte
//! name length, the UTF-8 name, a 4-byte rank, one 4-byte value per
//! dimension, and the payload as little-endian 32-bit floats. Non-float
//! state (config text, step counters, RNG states) travels as byte-valued
//! float tensors so the container stays single-typed.
//!
//! Replay buffers are deliberately not stored; a resumed run continues
//! with the transitions it collects from there on.

use std::collections::HashMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{stream, RngStreams, RunConfig, STREAM_INIT};
use crate::agent::Model;
use crate::envs::make_env;
use crate::error::{Error, Result};
use crate::nn::{Adam, Network};

pub const MAGIC: [u8; 4] = *b"NASA";
pub const FORMAT_VERSION: u32 = 1;

/// A run restored from disk.
#[derive(Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub model: Model<f32>,
    pub streams: RngStreams,
    /// Environment steps the run had completed when saved.
    pub steps_done: u64,
}

/// Every network in the model, keyed by its tensor-name prefix, in the
/// fixed file order shared by save and load.
fn nets(model: &Model<f32>) -> Vec<(String, &Network<f32>)> {
    let mut out: Vec<(String, &Network<f32>)> = Vec::new();
    if let Some(ae) = &model.ae {
        out.push(("enc".to_string(), &ae.enc));
        out.push(("dec".to_string(), &ae.dec));
    }
    out.push(("actor".to_string(), &model.agent.actor));
    out.push(("critic1".to_string(), &model.agent.critic1));
    out.push(("critic2".to_string(), &model.agent.critic2));
    out.push(("target.actor".to_string(), &model.agent.target_actor));
    out.push(("target.critic1".to_string(), &model.agent.target_critic1));
    out.push(("target.critic2".to_string(), &model.agent.target_critic2));
    if let Some(preds) = &model.predictors {
        for (i, net) in preds.members().iter().enumerate() {
            out.push((format!("pred.{i}"), net));
        }
    }
    out
}

fn nets_mut(model: &mut Model<f32>) -> Vec<(String, &mut Network<f32>)> {
    let mut out: Vec<(String, &mut Network<f32>)> = Vec::new();
    if let Some(ae) = &mut model.ae {
        out.push(("enc".to_string(), &mut ae.enc));
        out.push(("dec".to_string(), &mut ae.dec));
    }
    out.push(("actor".to_string(), &mut model.agent.actor));
    out.push(("critic1".to_string(), &mut model.agent.critic1));
    out.push(("critic2".to_string(), &mut model.agent.critic2));
    out.push(("target.actor".to_string(), &mut model.agent.target_actor));
    out.push(("target.critic1".to_string(), &mut model.agent.target_critic1));
    out.push(("target.critic2".to_string(), &mut model.agent.target_critic2));
    if let Some(preds) = &mut model.predictors {
        for (i, net) in preds.members_mut().iter_mut().enumerate() {
            out.push((format!("pred.{i}"), net));
        }
    }
    out
}

fn opts(model: &Model<f32>) -> Vec<(String, &Adam<f32>)> {
    let mut out: Vec<(String, &Adam<f32>)> = Vec::new();
    if let Some(ae) = &model.ae {
        out.push(("opt.enc".to_string(), &ae.opt_enc));
        out.push(("opt.dec".to_string(), &ae.opt_dec));
    }
    for (name, opt) in model.agent.optimizer_states() {
        out.push((name.to_string(), opt));
    }
    if let Some(preds) = &model.predictors {
        for (i, opt) in preds.optimizers().iter().enumerate() {
            out.push((format!("opt.pred.{i}"), opt));
        }
    }
    out
}

fn opts_mut(model: &mut Model<f32>) -> Vec<(String, &mut Adam<f32>)> {
    let mut out: Vec<(String, &mut Adam<f32>)> = Vec::new();
    if let Some(ae) = &mut model.ae {
        out.push(("opt.enc".to_string(), &mut ae.opt_enc));
        out.push(("opt.dec".to_string(), &mut ae.opt_dec));
    }
    for (name, opt) in model.agent.optimizer_states_mut() {
        out.push((name.to_string(), opt));
    }
    if let Some(preds) = &mut model.predictors {
        for (i, opt) in preds.optimizers_mut().iter_mut().enumerate() {
            out.push((format!("opt.pred.{i}"), opt));
        }
    }
    out
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f32_tensor(buf: &mut Vec<u8>, name: &str, dims: &[usize], data: &[f32]) {
    push_u32(buf, name.len() as u32);
    buf.extend_from_slice(name.as_bytes());
    push_u32(buf, dims.len() as u32);
    for &d in dims {
        push_u32(buf, d as u32);
    }
    for &v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn push_byte_tensor(buf: &mut Vec<u8>, name: &str, bytes: &[u8]) {
    let data: Vec<f32> = bytes.iter().map(|&b| f32::from(b)).collect();
    push_f32_tensor(buf, name, &[bytes.len()], &data);
}

/// Seed, stream index, and word position: enough to continue a ChaCha
/// stream exactly where it stopped.
fn rng_state_bytes(rng: &ChaCha8Rng) -> Vec<u8> {
    let mut out = Vec::with_capacity(56);
    out.extend_from_slice(&rng.get_seed());
    out.extend_from_slice(&rng.get_stream().to_le_bytes());
    out.extend_from_slice(&rng.get_word_pos().to_le_bytes());
    out
}

fn rng_from_bytes(name: &str, bytes: &[u8]) -> Result<ChaCha8Rng> {
    if bytes.len() != 56 {
        return Err(Error::Checkpoint {
            offset: 0,
            msg: format!("{name} holds {} bytes, an rng state needs 56", bytes.len()),
        });
    }
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&bytes[..32]);
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(u64::from_le_bytes(bytes[32..40].try_into().expect("8 bytes")));
    rng.set_word_pos(u128::from_le_bytes(bytes[40..56].try_into().expect("16 bytes")));
    Ok(rng)
}

/// Write the complete run state to `path`, atomically via a sibling
/// temporary file.
pub fn save(
    path: &Path,
    cfg: &RunConfig,
    model: &Model<f32>,
    streams: &RngStreams,
    steps_done: u64,
) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&MAGIC);
    push_u32(&mut buf, FORMAT_VERSION);
    push_byte_tensor(&mut buf, "meta.config", cfg.serialize().as_bytes());
    push_byte_tensor(&mut buf, "meta.steps", &steps_done.to_le_bytes());
    push_byte_tensor(&mut buf, "meta.ticks", &model.ticks_done().to_le_bytes());
    for (comp, net) in nets(model) {
        for (pname, p) in net.params() {
            push_f32_tensor(&mut buf, &format!("{comp}.{pname}"), &p.shape, p.v);
        }
    }
    for (name, opt) in opts(model) {
        let (t, m, v) = opt.state();
        push_byte_tensor(&mut buf, &format!("{name}.t"), &t.to_le_bytes());
        for (i, buf_m) in m.iter().enumerate() {
            push_f32_tensor(&mut buf, &format!("{name}.m.{i}"), &[buf_m.len()], buf_m);
        }
        for (i, buf_v) in v.iter().enumerate() {
            push_f32_tensor(&mut buf, &format!("{name}.v.{i}"), &[buf_v.len()], buf_v);
        }
    }
    for (name, rng) in [
        ("rng.env", &streams.env),
        ("rng.explore", &streams.explore),
        ("rng.sampling", &streams.sampling),
        ("rng.eval", &streams.eval),
    ] {
        push_byte_tensor(&mut buf, name, &rng_state_bytes(rng));
    }
    let tmp = path.with_extension("ckpt.tmp");
    std::fs::write(&tmp, &buf)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// One tensor as stored, plus where its record starts in the file.
pub struct RawTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
    pub offset: u64,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Checkpoint {
                offset: self.pos as u64,
                msg: format!("file truncated while reading {what}"),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }
}

/// Parse the container: magic, version, then tensors until end of file.
pub fn read_tensors(bytes: &[u8]) -> Result<Vec<RawTensor>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Checkpoint {
            offset: 0,
            msg: "bad magic, not a checkpoint file".to_string(),
        });
    }
    let version = r.u32("format version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint {
            offset: 4,
            msg: format!("unsupported format version {version}, this build reads {FORMAT_VERSION}"),
        });
    }
    let mut out = Vec::new();
    while r.pos < bytes.len() {
        let offset = r.pos as u64;
        let name_len = r.u32("tensor name length")? as usize;
        if name_len == 0 || name_len > 4096 {
            return Err(Error::Checkpoint {
                offset,
                msg: format!("implausible tensor name length {name_len}"),
            });
        }
        let name = std::str::from_utf8(r.take(name_len, "tensor name")?)
            .map_err(|_| Error::Checkpoint {
                offset,
                msg: "tensor name is not UTF-8".to_string(),
            })?
            .to_string();
        let rank = r.u32("tensor rank")? as usize;
        if rank > 8 {
            return Err(Error::Checkpoint {
                offset,
                msg: format!("implausible rank {rank} for tensor {name}"),
            });
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u32("tensor dims")? as usize);
        }
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&n| n <= (1 << 31))
            .ok_or(Error::Checkpoint {
                offset,
                msg: format!("implausible dims {dims:?} for tensor {name}"),
            })?;
        let raw = r.take(count * 4, &format!("data of tensor {name}"))?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        out.push(RawTensor {
            name,
            dims,
            data,
            offset,
        });
    }
    Ok(out)
}

/// Indexed tensor set that tracks which entries a load consumed.
struct TensorStore {
    tensors: Vec<RawTensor>,
    index: HashMap<String, usize>,
    consumed: Vec<bool>,
    file_len: u64,
}

impl TensorStore {
    fn new(tensors: Vec<RawTensor>, file_len: u64) -> Result<TensorStore> {
        let mut index = HashMap::new();
        for (i, t) in tensors.iter().enumerate() {
            if index.insert(t.name.clone(), i).is_some() {
                return Err(Error::Checkpoint {
                    offset: t.offset,
                    msg: format!("duplicate tensor {}", t.name),
                });
            }
        }
        let consumed = vec![false; tensors.len()];
        Ok(TensorStore {
            tensors,
            index,
            consumed,
            file_len,
        })
    }

    fn take(&mut self, name: &str) -> Result<&RawTensor> {
        match self.index.get(name) {
            Some(&i) => {
                self.consumed[i] = true;
                Ok(&self.tensors[i])
            }
            None => Err(Error::Checkpoint {
                offset: self.file_len,
                msg: format!("missing tensor {name}"),
            }),
        }
    }

    /// Take a tensor and decode it as raw bytes.
    fn bytes(&mut self, name: &str) -> Result<Vec<u8>> {
        let t = self.take(name)?;
        let (offset, tname) = (t.offset, t.name.clone());
        t.data
            .iter()
            .map(|&v| {
                if v.fract() == 0.0 && (0.0..=255.0).contains(&v) {
                    Ok(v as u8)
                } else {
                    Err(Error::Checkpoint {
                        offset,
                        msg: format!("tensor {tname} is not byte-valued"),
                    })
                }
            })
            .collect()
    }

    /// Error if any tensor was never consumed.
    fn finish(&self) -> Result<()> {
        for (t, &used) in self.tensors.iter().zip(&self.consumed) {
            if !used {
                return Err(Error::Checkpoint {
                    offset: t.offset,
                    msg: format!("unexpected tensor {}", t.name),
                });
            }
        }
        Ok(())
    }
}

fn u64_from(name: &str, bytes: &[u8]) -> Result<u64> {
    let arr: [u8; 8] = bytes.try_into().map_err(|_| Error::Checkpoint {
        offset: 0,
        msg: format!("{name} holds {} bytes, a counter needs 8", bytes.len()),
    })?;
    Ok(u64::from_le_bytes(arr))
}

/// Rebuild a run from `path`: config, model with every tensor and
/// optimizer state restored, random streams, and the step counter.
pub fn load(path: &Path) -> Result<Loaded> {
    let bytes = std::fs::read(path)?;
    let file_len = bytes.len() as u64;
    let tensors = read_tensors(&bytes)?;
    let mut store = TensorStore::new(tensors, file_len)?;

    let cfg_bytes = store.bytes("meta.config")?;
    let cfg_text = String::from_utf8(cfg_bytes).map_err(|_| Error::Checkpoint {
        offset: 0,
        msg: "embedded config is not UTF-8".to_string(),
    })?;
    let config = RunConfig::parse(&cfg_text)?;
    let steps_done = u64_from("meta.steps", &store.bytes("meta.steps")?)?;
    let ticks = u64_from("meta.ticks", &store.bytes("meta.ticks")?)?;

    let env = make_env(&config.env, config.image_size)?;
    let mut init = stream(config.seed, STREAM_INIT);
    let mut model: Model<f32> = Model::new(&config.model_config(env.action_dim()), &mut init)?;

    for (comp, net) in nets_mut(&mut model) {
        for (pname, p) in net.params_mut() {
            let full = format!("{comp}.{pname}");
            let t = store.take(&full)?;
            if t.dims != p.shape {
                return Err(Error::Checkpoint {
                    offset: t.offset,
                    msg: format!("tensor {full} has dims {:?}, the model needs {:?}", t.dims, p.shape),
                });
            }
            p.v.copy_from_slice(&t.data);
        }
    }
    for (name, opt) in opts_mut(&mut model) {
        let t = u64_from(&name, &store.bytes(&format!("{name}.t"))?)?;
        let count = opt.state().1.len();
        let mut m = Vec::with_capacity(count);
        let mut v = Vec::with_capacity(count);
        for i in 0..count {
            m.push(store.take(&format!("{name}.m.{i}"))?.data.clone());
        }
        for i in 0..count {
            v.push(store.take(&format!("{name}.v.{i}"))?.data.clone());
        }
        opt.restore_state(t, m, v)?;
    }
    model.set_ticks_done(ticks);

    let streams = RngStreams {
        env: rng_from_bytes("rng.env", &store.bytes("rng.env")?)?,
        explore: rng_from_bytes("rng.explore", &store.bytes("rng.explore")?)?,
        sampling: rng_from_bytes("rng.sampling", &store.bytes("rng.sampling")?)?,
        eval: rng_from_bytes("rng.eval", &store.bytes("rng.eval")?)?,
    };
    store.finish()?;
    Ok(Loaded {
        config,
        model,
        streams,
        steps_done,
    })
}

/// Human-readable listing of a checkpoint: counters, tensor table, and
/// the embedded config.
pub fn inspect(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let tensors = read_tensors(&bytes)?;
    let mut out = format!("format version {FORMAT_VERSION}\n");
    for name in ["meta.steps", "meta.ticks"] {
        if let Some(t) = tensors.iter().find(|t| t.name == name) {
            let b: Vec<u8> = t.data.iter().map(|&v| v as u8).collect();
            if let Ok(v) = u64_from(name, &b) {
                out.push_str(&format!("{} {v}\n", name.trim_start_matches("meta.")));
            }
        }
    }
    let scalars: usize = tensors.iter().map(|t| t.data.len()).sum();
    out.push_str(&format!("tensors {} ({scalars} scalars)\n", tensors.len()));
    for t in &tensors {
        let dims: Vec<String> = t.dims.iter().map(|d| d.to_string()).collect();
        out.push_str(&format!("  {} [{}]\n", t.name, dims.join("x")));
    }
    if let Some(t) = tensors.iter().find(|t| t.name == "meta.config") {
        let b: Vec<u8> = t.data.iter().map(|&v| v as u8).collect();
        if let Ok(text) = String::from_utf8(b) {
            out.push_str("config:\n");
            for line in text.lines() {
                out.push_str("  ");
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    Ok(out)
}
