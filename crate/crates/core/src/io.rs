//! The `TNC1` file format.
//!
//! A file is one ASCII header line `TNC1 {json}` followed by the raw site
//! data: for every site in chain order, its entries in row-major order as
//! little-endian `f64` pairs `(re, im)`. The last 8 bytes hold the
//! little-endian CRC-64/XZ of that payload.
//!
//! The JSON object carries `kind` (`"mps"`, `"mpo"` or `"dense"`), `n` and
//! `bonds` for chains, the physical dimension as `d` (`d_out`/`d_in` for
//! operators, a list when sites differ), and `shape` for dense tensors.

use std::io::{Read, Write};
use std::path::Path;

use crc::{Crc, CRC_64_XZ};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::mpo::Mpo;
use crate::mps::{Canonical, Mps};
use crate::tensor::DenseTensor;
use crate::C64;

const MAGIC: &str = "TNC1";
const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

/// Contents of a `TNC1` file.
#[derive(Clone, Debug, PartialEq)]
pub enum Network {
    Mps(Mps),
    Mpo(Mpo),
    Dense(DenseTensor),
}

impl Network {
    pub fn kind(&self) -> &'static str {
        match self {
            Network::Mps(_) => "mps",
            Network::Mpo(_) => "mpo",
            Network::Dense(_) => "dense",
        }
    }
}

fn dims_value(dims: &[usize]) -> Value {
    if dims.windows(2).all(|w| w[0] == w[1]) {
        json!(dims[0])
    } else {
        json!(dims)
    }
}

fn header(net: &Network) -> Value {
    match net {
        Network::Mps(psi) => json!({
            "kind": "mps",
            "n": psi.n_sites(),
            "d": dims_value(&psi.phys_dims()),
            "bonds": psi.bonds(),
            "canonical": psi.canonical(),
        }),
        Network::Mpo(h) => {
            let dims = dims_value(&h.phys_dims());
            json!({
                "kind": "mpo",
                "n": h.n_sites(),
                "d_out": dims,
                "d_in": dims,
                "bonds": h.bonds(),
            })
        }
        Network::Dense(t) => json!({ "kind": "dense", "shape": t.shape() }),
    }
}

fn blocks(net: &Network) -> Vec<&DenseTensor> {
    match net {
        Network::Mps(psi) => psi.sites().iter().collect(),
        Network::Mpo(h) => h.sites().iter().collect(),
        Network::Dense(t) => vec![t],
    }
}

pub fn write(net: &Network, mut w: impl Write) -> Result<()> {
    let mut payload = Vec::new();
    for t in blocks(net) {
        payload.reserve(t.len() * 16);
        for z in t.data() {
            payload.extend_from_slice(&z.re.to_le_bytes());
            payload.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    let checksum = CRC64.checksum(&payload);
    writeln!(w, "{MAGIC} {}", header(net))?;
    w.write_all(&payload)?;
    w.write_all(&checksum.to_le_bytes())?;
    w.flush()?;
    Ok(())
}

fn field_usize(v: &Value, key: &str) -> Result<usize> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| Error::Format(format!("header field `{key}` missing or not an integer")))
}

fn field_list(v: &Value, key: &str) -> Result<Vec<usize>> {
    let arr = v
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format(format!("header field `{key}` missing or not a list")))?;
    arr.iter()
        .map(|x| {
            x.as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::Format(format!("non-integer entry in `{key}`")))
        })
        .collect()
}

fn field_dims(v: &Value, key: &str, n: usize) -> Result<Vec<usize>> {
    match v.get(key) {
        Some(Value::Array(_)) => {
            let dims = field_list(v, key)?;
            if dims.len() != n {
                return Err(Error::Format(format!("`{key}` has {} entries for {n} sites", dims.len())));
            }
            Ok(dims)
        }
        _ => Ok(vec![field_usize(v, key)?; n]),
    }
}

fn shapes(h: &Value) -> Result<Vec<Vec<usize>>> {
    let kind = h.get("kind").and_then(Value::as_str).unwrap_or_default();
    if kind == "dense" {
        return Ok(vec![field_list(h, "shape")?]);
    }
    let n = field_usize(h, "n")?;
    let bonds = field_list(h, "bonds")?;
    if n == 0 || bonds.len() != n + 1 {
        return Err(Error::Format(format!("{} bonds listed for {n} sites", bonds.len())));
    }
    match kind {
        "mps" => {
            let d = field_dims(h, "d", n)?;
            Ok((0..n).map(|j| vec![bonds[j], d[j], bonds[j + 1]]).collect())
        }
        "mpo" => {
            let d_out = field_dims(h, "d_out", n)?;
            let d_in = field_dims(h, "d_in", n)?;
            Ok((0..n)
                .map(|j| vec![bonds[j], d_out[j], d_in[j], bonds[j + 1]])
                .collect())
        }
        other => Err(Error::Format(format!("unknown kind `{other}`"))),
    }
}

pub fn read(mut r: impl Read) -> Result<Network> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let line = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::Format("header is not valid UTF-8".into()))?;
    let (magic, json) = line.split_once(' ').unwrap_or((line, ""));
    if magic != MAGIC {
        return Err(Error::Version(magic.chars().take(16).collect()));
    }
    let h: Value = serde_json::from_str(json).map_err(|e| Error::Format(format!("header: {e}")))?;
    let shapes = shapes(&h)?;
    let entries: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
    let body = &bytes[newline + 1..];
    let expected = entries * 16 + 8;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes after the header, found {}",
            body.len()
        )));
    }
    let (payload, tail) = body.split_at(entries * 16);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    let computed = CRC64.checksum(payload);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let mut values = payload.chunks_exact(16).map(|c| {
        let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
        C64::new(re, im)
    });
    let mut tensors = Vec::with_capacity(shapes.len());
    for shape in shapes {
        let len = shape.iter().product();
        let data: Vec<C64> = values.by_ref().take(len).collect();
        tensors.push(DenseTensor::new(shape, data)?);
    }
    match h["kind"].as_str() {
        Some("mps") => {
            let canonical = match h.get("canonical") {
                Some(v) => serde_json::from_value(v.clone())
                    .map_err(|e| Error::Format(format!("canonical: {e}")))?,
                None => Canonical::None,
            };
            Ok(Network::Mps(Mps::with_canonical(tensors, canonical)?))
        }
        Some("mpo") => Ok(Network::Mpo(Mpo::new(tensors)?)),
        _ => Ok(Network::Dense(tensors.pop().expect("one block"))),
    }
}

pub fn save(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write(net, std::io::BufWriter::new(file))
}

pub fn load(path: impl AsRef<Path>) -> Result<Network> {
    read(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_mpo, random_mps};

    fn round_trip(net: &Network) -> Network {
        let mut buf = Vec::new();
        write(net, &mut buf).unwrap();
        read(buf.as_slice()).unwrap()
    }

    #[test]
    fn mps_round_trip_is_bitwise() {
        let psi = random_mps(6, 2, 4, -0.5, 1).unwrap().scaled(C64::new(0.3, -1.7));
        let net = Network::Mps(psi);
        assert_eq!(round_trip(&net), net);
    }

    #[test]
    fn mpo_and_dense_round_trip() {
        let net = Network::Mpo(random_mpo(4, 3, 2, -0.5, 2).unwrap());
        assert_eq!(round_trip(&net), net);
        let dense = Network::Dense(DenseTensor::from_fn(&[2, 3], |i| C64::new(i[0] as f64, -(i[1] as f64))));
        assert_eq!(round_trip(&dense), dense);
    }

    #[test]
    fn corrupt_byte_fails_checksum() {
        let mut buf = Vec::new();
        write(&Network::Mps(random_mps(6, 2, 3, 0.0, 3).unwrap()), &mut buf).unwrap();
        let k = buf.len() - 20;
        buf[k] ^= 0x10;
        assert!(matches!(read(buf.as_slice()), Err(Error::Checksum { .. })));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let mut buf = Vec::new();
        write(&Network::Mps(random_mps(3, 2, 2, 0.0, 4).unwrap()), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read(buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn other_versions_are_rejected() {
        let mut buf = Vec::new();
        write(&Network::Mps(random_mps(3, 2, 2, 0.0, 5).unwrap()), &mut buf).unwrap();
        buf[3] = b'2';
        assert!(matches!(read(buf.as_slice()), Err(Error::Version(v)) if v == "TNC2"));
    }
}
