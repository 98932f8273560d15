//! Little-endian framed encoding for messages and message logs.
//!
//! Message frame: `u32 payload_len`, then `u32 sender`, six `f32` (position,
//! velocity, target), `u32 latent_len`, and two `f32 × latent_len` latents.
//! A log record prefixes a message frame with `u64 step` and `u32 receiver`.

use std::io::{self, Read, Write};

use super::Message;
use crate::error::{Error, Result};
use crate::geom::Vec2;

pub fn write_message<W: Write>(msg: &Message, mut out: W) -> Result<()> {
    if msg.enc_obstacles.len() != msg.enc_explored.len() {
        return Err(Error::format("message", "latent lengths differ"));
    }
    let n = msg.enc_obstacles.len();
    let payload_len = 4 + 6 * 4 + 4 + 2 * 4 * n;
    let mut buf = Vec::with_capacity(4 + payload_len);
    buf.extend_from_slice(&(payload_len as u32).to_le_bytes());
    buf.extend_from_slice(&(msg.sender as u32).to_le_bytes());
    for v in [msg.position, msg.velocity, msg.target] {
        buf.extend_from_slice(&(v.x as f32).to_le_bytes());
        buf.extend_from_slice(&(v.y as f32).to_le_bytes());
    }
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    for v in msg.enc_obstacles.iter().chain(&msg.enc_explored) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn take<const N: usize>(buf: &[u8], at: &mut usize) -> Result<[u8; N]> {
    let bytes = buf
        .get(*at..*at + N)
        .ok_or_else(|| Error::format("message", "frame shorter than declared"))?;
    *at += N;
    Ok(bytes.try_into().expect("slice of length N"))
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_message<R: Read>(mut input: R) -> Result<Option<Message>> {
    let mut len = [0u8; 4];
    match input.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let mut payload = vec![0u8; u32::from_le_bytes(len) as usize];
    input.read_exact(&mut payload)?;
    let mut at = 0;
    let sender = u32::from_le_bytes(take(&payload, &mut at)?) as usize;
    let mut pose = [0f64; 6];
    for p in &mut pose {
        *p = f32::from_le_bytes(take(&payload, &mut at)?) as f64;
    }
    let n = u32::from_le_bytes(take(&payload, &mut at)?) as usize;
    if payload.len() != at + 8 * n {
        return Err(Error::format("message", "latent length disagrees with frame length"));
    }
    let floats: Vec<f32> = payload[at..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let (o, e) = floats.split_at(n);
    Ok(Some(Message {
        sender,
        position: Vec2::new(pose[0], pose[1]),
        velocity: Vec2::new(pose[2], pose[3]),
        target: Vec2::new(pose[4], pose[5]),
        enc_obstacles: o.to_vec(),
        enc_explored: e.to_vec(),
    }))
}

/// A received message as logged by the simulator (after channel noise).
#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord {
    pub step: u64,
    pub receiver: usize,
    pub message: Message,
}

pub fn write_record<W: Write>(record: &MessageRecord, mut out: W) -> Result<()> {
    out.write_all(&record.step.to_le_bytes())?;
    out.write_all(&(record.receiver as u32).to_le_bytes())?;
    write_message(&record.message, out)
}

pub fn read_record<R: Read>(mut input: R) -> Result<Option<MessageRecord>> {
    let mut step = [0u8; 8];
    match input.read_exact(&mut step) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let mut receiver = [0u8; 4];
    input.read_exact(&mut receiver)?;
    let message =
        read_message(&mut input)?.ok_or_else(|| Error::format("message log", "record header without message"))?;
    Ok(Some(MessageRecord {
        step: u64::from_le_bytes(step),
        receiver: u32::from_le_bytes(receiver) as usize,
        message,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(n: usize) -> Message {
        Message {
            sender: 7,
            position: Vec2::new(1.5, 2.5),
            velocity: Vec2::new(-3.0, 0.25),
            target: Vec2::new(100.0, 50.0),
            enc_obstacles: (0..n).map(|i| i as f32 * 0.5).collect(),
            enc_explored: (0..n).map(|i| 1.0 - i as f32).collect(),
        }
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_message(&sample(2), &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 24 + 4 + 16);
        assert_eq!(&buf[0..4], &((buf.len() - 4) as u32).to_le_bytes());
        assert_eq!(&buf[4..8], &7u32.to_le_bytes());
        assert_eq!(&buf[8..12], &1.5f32.to_le_bytes());
        assert_eq!(&buf[32..36], &2u32.to_le_bytes());
    }

    #[test]
    fn corrupt_frames_are_rejected() {
        let mut buf = Vec::new();
        write_message(&sample(3), &mut buf).unwrap();
        buf[32] = 9;
        assert!(read_message(&buf[..]).is_err());
        assert!(read_message(&buf[..10]).is_err());
        assert!(read_message(&[][..]).unwrap().is_none());
    }

    #[test]
    fn log_stream_reads_back_in_order() {
        let mut buf = Vec::new();
        for step in 0..3 {
            write_record(
                &MessageRecord {
                    step,
                    receiver: 1,
                    message: sample(4),
                },
                &mut buf,
            )
            .unwrap();
        }
        let mut r = &buf[..];
        let mut steps = Vec::new();
        while let Some(rec) = read_record(&mut r).unwrap() {
            assert_eq!(rec.message, sample(4));
            steps.push(rec.step);
        }
        assert_eq!(steps, vec![0, 1, 2]);
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 32, rng_seed: proptest::test_runner::RngSeed::Fixed(4), ..ProptestConfig::default() })]

        #[test]
        fn roundtrip(n in 0usize..64, sender in 0usize..1000, x in -1e4f32..1e4) {
            let mut m = sample(n);
            m.sender = sender;
            m.position = Vec2::new(x as f64, 3.0);
            let mut buf = Vec::new();
            write_message(&m, &mut buf).unwrap();
            prop_assert_eq!(read_message(&buf[..]).unwrap().unwrap(), m);
        }
    }
}
