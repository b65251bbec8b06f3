//! Binary weights file.
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"LCGECNN1"
//! u8   category
//! u32  layer count (always 3)
//! per layer: u32 kernel, u32 in, u32 out, u8 activation
//! per layer: f64 weights[out*in*k*k], f64 biases[out]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Activation, Architecture, ConvLayer, ConvNet};
use crate::error::{Error, Result};
use crate::regions::Category;

const MAGIC: &[u8; 8] = b"LCGECNN1";

pub fn write_net(mut w: impl Write, net: &ConvNet) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[net.category.to_byte()])?;
    w.write_all(&(net.layers.len() as u32).to_le_bytes())?;
    for l in &net.layers {
        for v in [l.kernel_size, l.in_channels, l.out_channels] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        w.write_all(&[l.activation.to_byte()])?;
    }
    for l in &net.layers {
        for v in l.weights.iter().chain(&l.biases) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("weights file is truncated".into()),
        _ => Error::Io(e),
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b)?;
    Ok(b[0])
}

pub fn read_net(mut r: impl Read) -> Result<ConvNet> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a network weights file (bad magic)".into()));
    }
    let cat = read_u8(&mut r)?;
    let category = Category::from_byte(cat)
        .ok_or_else(|| Error::Format(format!("unknown category byte {cat}")))?;
    let count = read_u32(&mut r)?;
    if count != 3 {
        return Err(Error::Format(format!("expected 3 layers, found {count}")));
    }
    let mut shapes = Vec::with_capacity(3);
    for _ in 0..3 {
        let k = read_u32(&mut r)? as usize;
        let i = read_u32(&mut r)? as usize;
        let o = read_u32(&mut r)? as usize;
        let a = read_u8(&mut r)?;
        let act = Activation::from_byte(a)
            .ok_or_else(|| Error::Format(format!("unknown activation byte {a}")))?;
        if k == 0 || k > 63 || i == 0 || o == 0 || i > 4096 || o > 4096 {
            return Err(Error::Format(format!("implausible layer shape k={k} in={i} out={o}")));
        }
        shapes.push((k, i, o, act));
    }
    let mut layers = Vec::with_capacity(3);
    for (k, i, o, act) in shapes {
        let mut layer = ConvLayer::zeros(k, i, o, act);
        let mut b = [0u8; 8];
        for v in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
            read_exact(&mut r, &mut b)?;
            *v = f64::from_le_bytes(b);
        }
        layers.push(layer);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after weights".into()));
    }
    let layers: [ConvLayer; 3] = layers.try_into().expect("three layers");
    ConvNet::new(category, layers).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_net(path: impl AsRef<Path>, net: &ConvNet) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::from(e).at(path))?;
    let mut w = BufWriter::new(file);
    write_net(&mut w, net).map_err(|e| e.at(path))?;
    w.flush().map_err(|e| Error::from(e).at(path))
}

pub fn load_net(path: impl AsRef<Path>) -> Result<ConvNet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::from(e).at(path))?;
    read_net(BufReader::new(file)).map_err(|e| e.at(path))
}

/// Load and insist on a category and architecture.
pub fn load_net_for(path: impl AsRef<Path>, category: Category, arch: Architecture) -> Result<ConvNet> {
    let path = path.as_ref();
    let net = load_net(path)?;
    if net.category != category {
        return Err(Error::CategoryMismatch {
            expected: category,
            found: net.category,
        }
        .at(path));
    }
    if net.architecture() != arch {
        return Err(Error::ArchitectureMismatch(format!(
            "expected {arch:?}, found {:?}",
            net.architecture()
        ))
        .at(path));
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> Architecture {
        Architecture {
            kernels: [3, 1, 3],
            hidden: [4, 2],
        }
    }

    fn sample_net() -> ConvNet {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = ConvNet::gaussian(Category::Eyes, small(), 0.2, &mut rng);
        net.layers[1].biases = vec![0.1, -0.3];
        net
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = sample_net();
        let mut buf = Vec::new();
        write_net(&mut buf, &net).unwrap();
        assert_eq!(read_net(buf.as_slice()).unwrap(), net);
    }

    #[test]
    fn corrupted_magic_and_truncation() {
        let mut buf = Vec::new();
        write_net(&mut buf, &sample_net()).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_net(bad.as_slice()), Err(Error::Format(_))));
        let cut = &buf[..buf.len() - 3];
        assert!(matches!(read_net(cut), Err(Error::Format(_))));
    }

    #[test]
    fn category_and_architecture_checks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mouth.cnn");
        let mut net = sample_net();
        net.category = Category::Mouth;
        save_net(&path, &net).unwrap();
        let err = load_net_for(&path, Category::Eyes, small()).unwrap_err();
        assert!(matches!(
            err,
            Error::File { ref source, .. } if matches!(**source, Error::CategoryMismatch { .. })
        ));
        let err = load_net_for(&path, Category::Mouth, Architecture::REFERENCE).unwrap_err();
        assert!(err.to_string().contains("architecture"));
        assert_eq!(load_net_for(&path, Category::Mouth, small()).unwrap(), net);
    }
}
