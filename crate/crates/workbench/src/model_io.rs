//! Binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `NB2EMLP\0` |
//! | 2     | format version (1) |
//! | 4     | endianness marker `0x01020304` |
//! | 4     | layer count `L` |
//! | 4     | input width |
//! | 8     | `l2_factor` (f64) |
//! | per layer: 4 + 1 | fan-out, activation (0 elu, 1 sine, 2 linear) |
//! | per layer | weights `[fan_in x fan_out]` row-major, then biases, f64 |

use std::io::{self, Read, Write};
use std::path::Path;

use nb2e_core::nn::{Activation, Layer, Matrix, MlpModel};

pub const MAGIC: [u8; 8] = *b"NB2EMLP\0";
pub const FORMAT_VERSION: u16 = 1;
const ENDIAN_MARKER: u32 = 0x0102_0304;
const MAX_LAYER_WIDTH: u32 = 1 << 20;

#[derive(Debug, thiserror::Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    Version(u16),
    #[error("byte-order marker mismatch")]
    Endianness,
    #[error("corrupt model file: {0}")]
    Corrupt(String),
}

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::Elu => 0,
        Activation::Sine => 1,
        Activation::Linear => 2,
    }
}

fn activation_from(code: u8) -> Result<Activation, ModelIoError> {
    match code {
        0 => Ok(Activation::Elu),
        1 => Ok(Activation::Sine),
        2 => Ok(Activation::Linear),
        c => Err(ModelIoError::Corrupt(format!("unknown activation code {c}"))),
    }
}

pub fn write_model<W: Write>(model: &MlpModel, mut w: W) -> io::Result<()> {
    let sizes = model.layer_sizes();
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&ENDIAN_MARKER.to_le_bytes())?;
    w.write_all(&(model.layers().len() as u32).to_le_bytes())?;
    w.write_all(&(sizes[0] as u32).to_le_bytes())?;
    w.write_all(&model.l2_factor().to_le_bytes())?;
    for layer in model.layers() {
        w.write_all(&(layer.fan_out() as u32).to_le_bytes())?;
        w.write_all(&[activation_code(layer.activation)])?;
    }
    for values in model.parameters() {
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    read_array::<4, _>(r).map(u32::from_le_bytes)
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f64>> {
    (0..n).map(|_| read_array::<8, _>(r).map(f64::from_le_bytes)).collect()
}

pub fn read_model<R: Read>(mut r: R) -> Result<MlpModel, ModelIoError> {
    if read_array::<8, _>(&mut r)? != MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    let version = u16::from_le_bytes(read_array::<2, _>(&mut r)?);
    if version != FORMAT_VERSION {
        return Err(ModelIoError::Version(version));
    }
    if read_u32(&mut r)? != ENDIAN_MARKER {
        return Err(ModelIoError::Endianness);
    }
    let n_layers = read_u32(&mut r)?;
    let input = read_u32(&mut r)?;
    if n_layers == 0 || n_layers > 1024 || input == 0 || input > MAX_LAYER_WIDTH {
        return Err(ModelIoError::Corrupt(String::from("implausible layer count or input width")));
    }
    let l2_factor = f64::from_le_bytes(read_array::<8, _>(&mut r)?);
    let mut shapes = Vec::with_capacity(n_layers as usize);
    let mut fan_in = input as usize;
    for _ in 0..n_layers {
        let fan_out = read_u32(&mut r)?;
        if fan_out == 0 || fan_out > MAX_LAYER_WIDTH {
            return Err(ModelIoError::Corrupt(format!("implausible layer width {fan_out}")));
        }
        let activation = activation_from(read_array::<1, _>(&mut r)?[0])?;
        shapes.push((fan_in, fan_out as usize, activation));
        fan_in = fan_out as usize;
    }
    let mut layers = Vec::with_capacity(shapes.len());
    for (fan_in, fan_out, activation) in shapes {
        let weights = Matrix::from_vec(fan_in, fan_out, read_f64s(&mut r, fan_in * fan_out)?);
        let bias = read_f64s(&mut r, fan_out)?;
        layers.push(Layer { weights, bias, activation });
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(ModelIoError::Corrupt(String::from("trailing bytes after parameters")));
    }
    MlpModel::from_layers(layers, l2_factor).map_err(|e| ModelIoError::Corrupt(e.to_string()))
}

pub fn to_bytes(model: &MlpModel) -> Vec<u8> {
    let mut buf = Vec::new();
    write_model(model, &mut buf).expect("writing to memory cannot fail");
    buf
}

pub fn save(model: &MlpModel, path: &Path) -> Result<(), crate::Error> {
    let file = std::fs::File::create(path).map_err(crate::Error::io(path))?;
    write_model(model, io::BufWriter::new(file)).map_err(crate::Error::io(path))
}

pub fn load(path: &Path) -> Result<MlpModel, crate::Error> {
    let file = std::fs::File::open(path).map_err(crate::Error::io(path))?;
    read_model(io::BufReader::new(file)).map_err(|source| crate::Error::ModelFile { path: path.to_path_buf(), source })
}
