//! Binary tensor records.
//!
//! A file is the magic `TSG1` followed by records until end of file:
//! name length (u64), name bytes (UTF-8), rank (u64), one u64 per extent,
//! then the values as f32. All integers and floats are little-endian.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::adam::{AdamConfig, AdamState, Moments};
use crate::error::{NnError, Result};
use crate::network::Network;

pub const MAGIC: &[u8; 4] = b"TSG1";

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

pub fn write_records<W: Write>(mut w: W, records: &[Record]) -> Result<()> {
    w.write_all(MAGIC)?;
    for r in records {
        if r.shape.iter().product::<usize>() != r.data.len() {
            return Err(NnError::Format(format!("record `{}` shape {:?} does not hold {} values", r.name, r.shape, r.data.len())));
        }
        w.write_all(&(r.name.len() as u64).to_le_bytes())?;
        w.write_all(r.name.as_bytes())?;
        w.write_all(&(r.shape.len() as u64).to_le_bytes())?;
        for &d in &r.shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        let mut bytes = Vec::with_capacity(r.data.len() * 4);
        for v in &r.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(mut r: R) -> Result<Vec<Record>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 4 || &buf[..4] != MAGIC {
        return Err(NnError::Format("missing TSG1 magic".into()));
    }
    let mut cur = Cursor { buf: &buf, at: 4 };
    let mut out = Vec::new();
    while cur.at < buf.len() {
        let name_len = cur.usize("name length")?;
        let name = String::from_utf8(cur.take(name_len, "name")?.to_vec()).map_err(|_| NnError::Format("record name is not UTF-8".into()))?;
        let rank = cur.usize("rank")?;
        if rank > 16 {
            return Err(NnError::Format(format!("record `{name}` has implausible rank {rank}")));
        }
        let shape = (0..rank).map(|_| cur.usize("extent")).collect::<Result<Vec<_>>>()?;
        let count = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| NnError::Format(format!("record `{name}` is too large")))?;
        let data = cur
            .take(count, "values")?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push(Record { name, shape, data });
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| NnError::Format(format!("truncated {what}")))?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let b = self.take(8, what)?;
        let v = u64::from_le_bytes(b.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| NnError::Format(format!("{what} {v} out of range")))
    }
}

pub fn save_records(path: &Path, records: &[Record]) -> Result<()> {
    write_records(BufWriter::new(File::create(path)?), records)
}

pub fn load_records(path: &Path) -> Result<Vec<Record>> {
    read_records(BufReader::new(File::open(path)?))
}

/// Parameters followed by batch-norm buffers.
pub fn network_records(net: &Network) -> Vec<Record> {
    let mut out: Vec<Record> = net
        .named_params()
        .into_iter()
        .map(|(name, t)| Record {
            name,
            shape: t.shape().to_vec(),
            data: t.to_vec(),
        })
        .collect();
    for (name, data) in net.named_buffers() {
        out.push(Record {
            name,
            shape: vec![data.len()],
            data: data.to_vec(),
        });
    }
    out
}

/// Loads every parameter and buffer of `net` from `records`. Extra records
/// are an error, as are missing ones.
pub fn apply_network_records(net: &mut Network, records: Vec<Record>) -> Result<()> {
    let mut by_name: BTreeMap<String, Record> = BTreeMap::new();
    for r in records {
        if by_name.contains_key(&r.name) {
            return Err(NnError::Format(format!("duplicate record `{}`", r.name)));
        }
        by_name.insert(r.name.clone(), r);
    }
    let params: Vec<(String, Vec<usize>)> = net.named_params().into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect();
    let buffers: Vec<(String, usize)> = net.named_buffers().into_iter().map(|(n, d)| (n, d.len())).collect();
    for (name, shape) in params {
        let r = by_name.remove(&name).ok_or_else(|| NnError::MissingRecord(name.clone()))?;
        if r.shape != shape {
            return Err(NnError::RecordShape { name, expected: shape, found: r.shape });
        }
        net.set_param(&name, r.data)?;
    }
    for (name, len) in buffers {
        let r = by_name.remove(&name).ok_or_else(|| NnError::MissingRecord(name.clone()))?;
        if r.shape != [len] {
            return Err(NnError::RecordShape {
                name,
                expected: vec![len],
                found: r.shape,
            });
        }
        net.set_buffer(&name, r.data)?;
    }
    if let Some(extra) = by_name.keys().next() {
        return Err(NnError::Format(format!("unexpected record `{extra}`")));
    }
    Ok(())
}

pub fn save_network(net: &Network, path: &Path) -> Result<()> {
    save_records(path, &network_records(net))
}

pub fn load_network(net: &mut Network, path: &Path) -> Result<()> {
    apply_network_records(net, load_records(path)?)
}

/// Optimizer state: a rank-0 `step` record, then `m.<param>` and
/// `v.<param>` per parameter. Hyperparameters are not stored.
pub fn adam_records(state: &AdamState) -> Vec<Record> {
    let mut out = vec![Record {
        name: "step".into(),
        shape: vec![],
        data: vec![state.step_count() as f32],
    }];
    for (name, mo) in state.moments() {
        out.push(Record {
            name: format!("m.{name}"),
            shape: vec![mo.m.len()],
            data: mo.m.clone(),
        });
        out.push(Record {
            name: format!("v.{name}"),
            shape: vec![mo.v.len()],
            data: mo.v.clone(),
        });
    }
    out
}

pub fn adam_from_records(config: AdamConfig, records: Vec<Record>) -> Result<AdamState> {
    let mut step = None;
    let mut m: BTreeMap<String, Vec<f32>> = BTreeMap::new();
    let mut v: BTreeMap<String, Vec<f32>> = BTreeMap::new();
    for r in records {
        if r.name == "step" {
            let s = r.data.first().copied().ok_or_else(|| NnError::Format("empty step record".into()))?;
            if !(s >= 0.0) || s.fract() != 0.0 {
                return Err(NnError::Format(format!("invalid step {s}")));
            }
            step = Some(s as u64);
        } else if let Some(name) = r.name.strip_prefix("m.") {
            m.insert(name.to_string(), r.data);
        } else if let Some(name) = r.name.strip_prefix("v.") {
            v.insert(name.to_string(), r.data);
        } else {
            return Err(NnError::Format(format!("unexpected optimizer record `{}`", r.name)));
        }
    }
    let step = step.ok_or_else(|| NnError::MissingRecord("step".into()))?;
    let mut moments = BTreeMap::new();
    for (name, mv) in m {
        let vv = v.remove(&name).ok_or_else(|| NnError::MissingRecord(format!("v.{name}")))?;
        if vv.len() != mv.len() {
            return Err(NnError::RecordShape {
                name: format!("v.{name}"),
                expected: vec![mv.len()],
                found: vec![vv.len()],
            });
        }
        moments.insert(name, Moments { m: mv, v: vv });
    }
    if let Some(name) = v.keys().next() {
        return Err(NnError::MissingRecord(format!("m.{name}")));
    }
    Ok(AdamState::from_parts(config, step, moments))
}

pub fn save_adam(state: &AdamState, path: &Path) -> Result<()> {
    save_records(path, &adam_records(state))
}

pub fn load_adam(config: AdamConfig, path: &Path) -> Result<AdamState> {
    adam_from_records(config, load_records(path)?)
}
