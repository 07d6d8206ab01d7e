//! Versioned flat binary model files.
//!
//! Layout, all little-endian:
//!
//! | field | size |
//! |---|---|
//! | magic `SRELNN01` | 8 bytes |
//! | backbone tag: 0 logistic, 1 mlp, 2 cnn1d | u8 |
//! | mlp: hidden-layer count then each width; cnn1d: block count | u32 each |
//! | input_dim, output_dim | u32 each |
//! | per parameterized layer in order: weights then biases | f64 each |
//!
//! Weight lengths are implied by the spec, so the file is self-describing.
//! `load(save(net)) == net` holds bit-for-bit.

use super::{Backbone, Layer, Network, NetworkSpec, NnError};

const MAGIC: &[u8; 8] = b"SRELNN01";

fn push_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u32).to_le_bytes());
}

/// Serializes a network to the flat binary format.
pub fn save_network(net: &Network) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    match &net.spec.backbone {
        Backbone::Logistic => buf.push(0),
        Backbone::Mlp(hidden) => {
            buf.push(1);
            push_u32(&mut buf, hidden.len());
            for &h in hidden {
                push_u32(&mut buf, h);
            }
        }
        Backbone::Cnn1d(blocks) => {
            buf.push(2);
            push_u32(&mut buf, *blocks);
        }
    }
    push_u32(&mut buf, net.spec.input_dim);
    push_u32(&mut buf, net.spec.output_dim);
    for layer in &net.layers {
        if let Layer::Dense { w, b, .. } | Layer::Conv1d { w, b, .. } = layer {
            for &v in w.iter().chain(b.iter()) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        if self.pos + n > self.buf.len() {
            return Err(NnError::Format(format!(
                "truncated file: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, NnError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64, NnError> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Deserializes a network saved with [`save_network`].
pub fn load_network(buf: &[u8]) -> Result<Network, NnError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(NnError::Format(
            "bad magic: not a model file or unsupported version".into(),
        ));
    }
    let backbone = match r.take(1)?[0] {
        0 => Backbone::Logistic,
        1 => {
            let n = r.u32()?;
            if n > 64 {
                return Err(NnError::Format(format!("implausible hidden count {n}")));
            }
            let mut hidden = Vec::with_capacity(n);
            for _ in 0..n {
                hidden.push(r.u32()?);
            }
            Backbone::Mlp(hidden)
        }
        2 => Backbone::Cnn1d(r.u32()?),
        tag => return Err(NnError::Format(format!("unknown backbone tag {tag}"))),
    };
    let input_dim = r.u32()?;
    let output_dim = r.u32()?;
    let spec = NetworkSpec {
        backbone,
        input_dim,
        output_dim,
    };
    let mut net = Network::init(&spec, 0)?;
    let count = net.param_count();
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        params.push(r.f64()?);
    }
    if r.pos != buf.len() {
        return Err(NnError::Format(format!(
            "{} trailing bytes after parameters",
            buf.len() - r.pos
        )));
    }
    net.set_flat_params(&params);
    Ok(net)
}

pub fn save_network_file(net: &Network, path: &std::path::Path) -> Result<(), NnError> {
    std::fs::write(path, save_network(net))?;
    Ok(())
}

pub fn load_network_file(path: &std::path::Path) -> Result<Network, NnError> {
    load_network(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_roundtrips_exactly() {
        for spec in [
            NetworkSpec::logistic(11, 1),
            NetworkSpec::mlp(vec![8, 4], 11, 1),
            NetworkSpec::cnn1d(1, 24, 7),
            NetworkSpec::cnn1d(3, 64, 7),
        ] {
            let net = Network::init(&spec, 77).unwrap();
            let bytes = save_network(&net);
            let back = load_network(&bytes).unwrap();
            assert_eq!(net, back, "{spec:?}");
        }
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let net = Network::init(&NetworkSpec::logistic(4, 1), 1).unwrap();
        let mut bytes = save_network(&net);

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(load_network(&magic), Err(NnError::Format(_))));

        bytes.truncate(bytes.len() - 3);
        assert!(matches!(load_network(&bytes), Err(NnError::Format(_))));

        let net = Network::init(&NetworkSpec::logistic(4, 1), 1).unwrap();
        let mut long = save_network(&net);
        long.extend_from_slice(&[0u8; 8]);
        assert!(matches!(load_network(&long), Err(NnError::Format(_))));
    }
}
