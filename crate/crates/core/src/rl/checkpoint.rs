//! Binary checkpoint and offline-dataset files. All integers and floats are
//! little-endian.
//!
//! Checkpoint:
//!
//! ```text
//! "QNET"  u32 version=1  u32 n_layers+1  u32 width * (n_layers+1)
//! u64 n_params  f64 * n_params
//! ```
//!
//! Dataset:
//!
//! ```text
//! "QTRN"  u32 version=1  u32 state_dim  u64 n_records
//! per record: f64 * state_dim (s)  u8 action  f64 reward
//!             f64 * state_dim (s')  u8 next-action mask (bit i = slot i)  u8 terminal
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::mlp::QNetwork;
use super::replay::TrainingTransition;
use super::state::{StateVector, N_ACTIONS, STATE_DIM};

const CHECKPOINT_MAGIC: &[u8; 4] = b"QNET";
const DATASET_MAGIC: &[u8; 4] = b"QTRN";
const VERSION: u32 = 1;

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated file: {e}")))?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let found: [u8; 4] = read_array(r)?;
    if &found != magic {
        return Err(Error::Format(format!("bad magic {found:?}")));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

pub fn write_checkpoint(net: &QNetwork, w: &mut impl Write) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(net.sizes().len() as u32).to_le_bytes())?;
    for &s in net.sizes() {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    w.write_all(&(net.params().len() as u64).to_le_bytes())?;
    for p in net.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<QNetwork> {
    read_header(r, CHECKPOINT_MAGIC)?;
    let n_sizes = read_u32(r)? as usize;
    if !(2..=64).contains(&n_sizes) {
        return Err(Error::Format(format!("implausible layer count {n_sizes}")));
    }
    let sizes = (0..n_sizes)
        .map(|_| read_u32(r).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let n_params = read_u64(r)? as usize;
    if n_params != super::mlp::param_count(&sizes) {
        return Err(Error::Format(format!("parameter count {n_params} does not match layers {sizes:?}")));
    }
    let params = (0..n_params).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
    QNetwork::from_params(&sizes, params)
}

pub fn save_checkpoint(net: &QNetwork, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(net, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<QNetwork> {
    read_checkpoint(&mut BufReader::new(File::open(path)?))
}

fn write_state(w: &mut impl Write, s: &StateVector) -> Result<()> {
    for v in s.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_state(r: &mut impl Read) -> Result<StateVector> {
    let mut s = [0.0; STATE_DIM];
    for v in s.iter_mut() {
        *v = read_f64(r)?;
    }
    Ok(StateVector(s))
}

fn mask_bits(mask: &[bool; N_ACTIONS]) -> u8 {
    mask.iter().enumerate().fold(0, |acc, (i, &m)| acc | ((m as u8) << i))
}

pub fn write_dataset(data: &[TrainingTransition], w: &mut impl Write) -> Result<()> {
    w.write_all(DATASET_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(STATE_DIM as u32).to_le_bytes())?;
    w.write_all(&(data.len() as u64).to_le_bytes())?;
    for t in data {
        write_state(w, &t.state)?;
        w.write_all(&[t.action as u8])?;
        w.write_all(&t.reward.to_le_bytes())?;
        write_state(w, &t.next_state)?;
        w.write_all(&[mask_bits(&t.next_mask), t.terminal as u8])?;
    }
    Ok(())
}

pub fn read_dataset(r: &mut impl Read) -> Result<Vec<TrainingTransition>> {
    read_header(r, DATASET_MAGIC)?;
    let dim = read_u32(r)? as usize;
    if dim != STATE_DIM {
        return Err(Error::Format(format!("state dimension {dim}, expected {STATE_DIM}")));
    }
    let n = read_u64(r)? as usize;
    let mut out = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        let state = read_state(r)?;
        let [action] = read_array::<1>(r)?;
        if action as usize >= N_ACTIONS {
            return Err(Error::Format(format!("action {action} out of range")));
        }
        let reward = read_f64(r)?;
        let next_state = read_state(r)?;
        let [bits, terminal] = read_array::<2>(r)?;
        let mut next_mask = [false; N_ACTIONS];
        for (i, m) in next_mask.iter_mut().enumerate() {
            *m = bits & (1 << i) != 0;
        }
        out.push(TrainingTransition {
            state,
            action: action as usize,
            reward,
            next_state,
            next_mask,
            terminal: terminal != 0,
        });
    }
    Ok(out)
}

pub fn save_dataset(data: &[TrainingTransition], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(data, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Vec<TrainingTransition>> {
    read_dataset(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn checkpoint_round_trip() {
        let net = QNetwork::standard(&mut rand_chacha::ChaCha8Rng::seed_from_u64(11));
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"QNET");
        assert_eq!(buf.len(), 4 + 4 + 4 + 4 * 4 + 8 + 8 * net.params().len());
        let back = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn truncated_checkpoint_rejected() {
        let net = QNetwork::standard(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1));
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_checkpoint(&mut buf.as_slice()), Err(Error::Format(_))));
        assert!(read_checkpoint(&mut &b"XXXX\x01\0\0\0"[..]).is_err());
    }

    fn arb_transition() -> impl Strategy<Value = TrainingTransition> {
        (
            proptest::array::uniform22(0.0f64..=1.0),
            0usize..5,
            -30.0f64..10.0,
            proptest::array::uniform22(0.0f64..=1.0),
            proptest::array::uniform5(proptest::bool::ANY),
            proptest::bool::ANY,
        )
            .prop_map(|(s, a, r, n, mask, terminal)| TrainingTransition {
                state: StateVector(s),
                action: a,
                reward: r,
                next_state: StateVector(n),
                next_mask: mask,
                terminal,
            })
    }

    proptest! {
        #[test]
        fn dataset_round_trip(data in proptest::collection::vec(arb_transition(), 0..20)) {
            let mut buf = Vec::new();
            write_dataset(&data, &mut buf).unwrap();
            let back = read_dataset(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(back, data);
        }
    }
}
