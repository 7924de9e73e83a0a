//! Decoder weight files.
//!
//! Layout, all integers `u32` little-endian:
//!
//! ```text
//! magic        8 bytes  "MCEMDEC1"
//! arch tag     u32      1 = affine_exp, 2 = gru, 3 = blstm (reserved)
//! latent_dim   u32
//! freq_dim     u32
//! hidden_dim   u32      0 for affine_exp
//! n_tensors    u32
//! n_tensors × {
//!   name_len   u32
//!   name       name_len bytes, UTF-8
//!   rank       u32
//!   dims       rank × u32
//!   payload    prod(dims) × f32 little-endian, row-major
//! }
//! ```
//!
//! affine_exp tensors: `A` (F×L), `b` (F).
//! gru tensors: `w_ir`, `w_iu`, `w_in` (H×L), `w_hr`, `w_hu`, `w_hn` (H×H),
//! `b_r`, `b_u`, `b_in`, `b_hn` (H), `w_out` (F×H), `b_out` (F).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{AffineExpDecoder, Decoder, DecoderModel, GruDecoder};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MCEMDEC1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchTag {
    AffineExp = 1,
    Gru = 2,
    /// Reserved for ported bidirectional LSTM weights; not loadable yet.
    Blstm = 3,
}

impl ArchTag {
    fn from_u32(v: u32) -> Option<Self> {
        match v {
            1 => Some(ArchTag::AffineExp),
            2 => Some(ArchTag::Gru),
            3 => Some(ArchTag::Blstm),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ArchTag::AffineExp => "affine_exp",
            ArchTag::Gru => "gru",
            ArchTag::Blstm => "blstm",
        }
    }
}

struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

struct ByteReader<R> {
    inner: R,
}

impl<R: Read> ByteReader<R> {
    fn bytes(&mut self, n: usize, what: &str, tensor: Option<&str>) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::format(tensor, format!("truncated while reading {what}")),
            _ => Error::Io(e),
        })?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str, tensor: Option<&str>) -> Result<u32> {
        let b = self.bytes(4, what, tensor)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn load_decoder(path: impl AsRef<Path>) -> Result<DecoderModel> {
    read_decoder(BufReader::new(File::open(path)?))
}

pub fn save_decoder(path: impl AsRef<Path>, model: &DecoderModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_decoder(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn read_decoder<R: Read>(reader: R) -> Result<DecoderModel> {
    let mut r = ByteReader { inner: reader };
    let magic = r.bytes(8, "magic", None)?;
    if magic != MAGIC {
        return Err(Error::format(None, "bad magic, expected MCEMDEC1"));
    }
    let tag = r.u32("architecture tag", None)?;
    let arch = ArchTag::from_u32(tag).ok_or_else(|| Error::format(None, format!("unknown architecture tag {tag}")))?;
    let latent = r.u32("latent_dim", None)? as usize;
    let freq = r.u32("freq_dim", None)? as usize;
    let hidden = r.u32("hidden_dim", None)? as usize;
    let count = r.u32("tensor count", None)? as usize;
    if latent == 0 || freq == 0 {
        return Err(Error::format(None, "latent_dim and freq_dim must be positive"));
    }

    let mut tensors = HashMap::new();
    for i in 0..count {
        let name_len = r.u32("tensor name length", None)? as usize;
        if name_len > 256 {
            return Err(Error::format(
                None,
                format!("tensor #{i} name length {name_len} is implausible"),
            ));
        }
        let name = String::from_utf8(r.bytes(name_len, "tensor name", None)?)
            .map_err(|_| Error::format(None, format!("tensor #{i} name is not UTF-8")))?;
        let t = Some(name.as_str());
        let rank = r.u32("rank", t)? as usize;
        if rank == 0 || rank > 2 {
            return Err(Error::format(t, format!("unsupported rank {rank}")));
        }
        let dims = (0..rank)
            .map(|_| r.u32("dims", t).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = dims.iter().product();
        if n > 1 << 28 {
            return Err(Error::format(t, "tensor too large"));
        }
        let raw = r.bytes(4 * n, "payload", t)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect::<Vec<_>>();
        if let Some(j) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::format(t, format!("non-finite value at flat index {j}")));
        }
        if tensors.insert(name.clone(), Tensor { dims, data }).is_some() {
            return Err(Error::format(t, "duplicate tensor"));
        }
    }

    let tensors = &mut tensors;
    let model = match arch {
        ArchTag::AffineExp => {
            let a = take_mat(tensors, "A", freq, latent)?;
            let b = take_vec(tensors, "b", freq)?;
            DecoderModel::AffineExp(AffineExpDecoder::new(a, b)?)
        }
        ArchTag::Gru => {
            if hidden == 0 {
                return Err(Error::format(None, "gru decoder requires hidden_dim > 0"));
            }
            let w_ir = take_mat(tensors, "w_ir", hidden, latent)?;
            let w_iu = take_mat(tensors, "w_iu", hidden, latent)?;
            let w_in = take_mat(tensors, "w_in", hidden, latent)?;
            let w_hr = take_mat(tensors, "w_hr", hidden, hidden)?;
            let w_hu = take_mat(tensors, "w_hu", hidden, hidden)?;
            let w_hn = take_mat(tensors, "w_hn", hidden, hidden)?;
            let w_out = take_mat(tensors, "w_out", freq, hidden)?;
            let d = GruDecoder {
                w_ir,
                w_iu,
                w_in,
                w_hr,
                w_hu,
                w_hn,
                b_r: take_vec(tensors, "b_r", hidden)?,
                b_u: take_vec(tensors, "b_u", hidden)?,
                b_in: take_vec(tensors, "b_in", hidden)?,
                b_hn: take_vec(tensors, "b_hn", hidden)?,
                w_out,
                b_out: take_vec(tensors, "b_out", freq)?,
            };
            d.check_shapes()?;
            DecoderModel::Gru(d)
        }
        ArchTag::Blstm => return Err(Error::format(None, "architecture blstm is reserved and not supported")),
    };
    if let Some(name) = tensors.keys().next() {
        return Err(Error::format(Some(name), "unexpected tensor"));
    }
    Ok(model)
}

fn take_mat(tensors: &mut HashMap<String, Tensor>, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
    let t = tensors
        .remove(name)
        .ok_or_else(|| Error::format(Some(name), "missing tensor"))?;
    if t.dims != [rows, cols] {
        return Err(Error::format(
            Some(name),
            format!("shape {:?}, expected [{rows}, {cols}]", t.dims),
        ));
    }
    Ok(Array2::from_shape_vec((rows, cols), t.data.into_iter().map(f64::from).collect()).expect("checked shape"))
}

fn take_vec(tensors: &mut HashMap<String, Tensor>, name: &str, len: usize) -> Result<Array1<f64>> {
    let t = tensors
        .remove(name)
        .ok_or_else(|| Error::format(Some(name), "missing tensor"))?;
    if t.dims != [len] {
        return Err(Error::format(
            Some(name),
            format!("shape {:?}, expected [{len}]", t.dims),
        ));
    }
    Ok(t.data.into_iter().map(f64::from).collect())
}

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::invalid("dimension exceeds u32"))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_tensor<W: Write>(w: &mut W, name: &str, dims: &[usize], data: impl Iterator<Item = f64>) -> Result<()> {
    put_u32(w, name.len())?;
    w.write_all(name.as_bytes())?;
    put_u32(w, dims.len())?;
    for &d in dims {
        put_u32(w, d)?;
    }
    for x in data {
        w.write_all(&(x as f32).to_le_bytes())?;
    }
    Ok(())
}

/// Writes `model`; parameters are narrowed to `f32`.
pub fn write_decoder<W: Write>(w: &mut W, model: &DecoderModel) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, model.arch() as usize)?;
    put_u32(w, model.latent_dim())?;
    put_u32(w, model.freq_dim())?;
    match model {
        DecoderModel::AffineExp(d) => {
            put_u32(w, 0)?;
            put_u32(w, 2)?;
            put_tensor(w, "A", &[d.a.nrows(), d.a.ncols()], d.a.iter().copied())?;
            put_tensor(w, "b", &[d.b.len()], d.b.iter().copied())?;
        }
        DecoderModel::Gru(d) => {
            put_u32(w, d.hidden_dim())?;
            put_u32(w, 12)?;
            let mats = [
                ("w_ir", &d.w_ir),
                ("w_iu", &d.w_iu),
                ("w_in", &d.w_in),
                ("w_hr", &d.w_hr),
                ("w_hu", &d.w_hu),
                ("w_hn", &d.w_hn),
                ("w_out", &d.w_out),
            ];
            for (name, m) in mats {
                put_tensor(w, name, &[m.nrows(), m.ncols()], m.iter().copied())?;
            }
            let vecs = [
                ("b_r", &d.b_r),
                ("b_u", &d.b_u),
                ("b_in", &d.b_in),
                ("b_hn", &d.b_hn),
                ("b_out", &d.b_out),
            ];
            for (name, v) in vecs {
                put_tensor(w, name, &[v.len()], v.iter().copied())?;
            }
        }
    }
    Ok(())
}
