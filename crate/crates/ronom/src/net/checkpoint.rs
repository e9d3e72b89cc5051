//! Network checkpoints: a single-line JSON header (layer specs, parameter
//! count, init seed) followed by the flat parameters as little-endian f64.

use super::{LayerSpec, NetError, Network, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct Header {
    layers: Vec<LayerSpec>,
    param_count: usize,
    seed: u64,
}

pub fn save_network(net: &Network, path: &Path) -> Result<()> {
    let header = Header {
        layers: net.layers().to_vec(),
        param_count: net.param_count(),
        seed: net.seed,
    };
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer(&mut file, &header).map_err(|e| NetError::Format(e.to_string()))?;
    file.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity(net.params.len() * 8);
    for p in &net.params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    file.write_all(&bytes)?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<Network> {
    let file = std::fs::File::open(path)?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: Header =
        serde_json::from_str(line.trim_end()).map_err(|e| NetError::Format(e.to_string()))?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != header.param_count * 8 {
        return Err(NetError::Format(format!(
            "expected {} parameter bytes, found {}",
            header.param_count * 8,
            bytes.len()
        )));
    }
    let mut net = Network::new(header.layers, header.seed);
    if net.param_count() != header.param_count {
        return Err(NetError::Format("layer specs disagree with count".into()));
    }
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        net.params[i] = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Activation, Padding};

    #[test]
    fn roundtrip_preserves_bits() {
        let net = Network::new(
            vec![
                LayerSpec::Conv1d {
                    in_ch: 1,
                    out_ch: 2,
                    kernel: 3,
                    padding: Padding::Circular,
                },
                LayerSpec::Activation(Activation::Gelu),
                LayerSpec::Dense {
                    input: 10,
                    output: 4,
                },
            ],
            99,
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save_network(&net, &path).unwrap();
        let back = load_network(&path).unwrap();
        assert_eq!(net.params, back.params);
        assert_eq!(net.layers(), back.layers());
        assert_eq!(net.seed, back.seed);
    }

    #[test]
    fn truncated_file_rejected() {
        let net = Network::new(
            vec![LayerSpec::Dense {
                input: 3,
                output: 3,
            }],
            1,
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save_network(&net, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(load_network(&path), Err(NetError::Format(_))));
    }
}
