//! Framed binary transition log for offline learners.
//!
//! Frame: `u32 payload_len`, `u64 step`, `u32 agent`, `u32 obs_len`,
//! `f32 × obs_len` observation, two `f32` action, five `f32` reward terms
//! (terminal, proximity, alignment, collision, predicted collision),
//! `u8 done`, `f32 × obs_len` next observation. Little-endian throughout.

use std::io::{self, Read, Write};

use super::reward::NavReward;
use crate::error::{Error, Result};
use crate::geom::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub step: u64,
    pub agent: usize,
    pub observation: Vec<f32>,
    pub action: Vec2,
    pub reward: NavReward,
    pub done: bool,
    pub next_observation: Vec<f32>,
}

pub fn write_transition<W: Write>(t: &Transition, mut out: W) -> Result<()> {
    let n = t.observation.len();
    if t.next_observation.len() != n {
        return Err(Error::format("transition", "observation lengths differ"));
    }
    let payload_len = 8 + 4 + 4 + 4 * n + 8 + 20 + 1 + 4 * n;
    let mut buf = Vec::with_capacity(4 + payload_len);
    buf.extend_from_slice(&(payload_len as u32).to_le_bytes());
    buf.extend_from_slice(&t.step.to_le_bytes());
    buf.extend_from_slice(&(t.agent as u32).to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    let r = &t.reward;
    let scalars = [
        t.action.x,
        t.action.y,
        r.terminal,
        r.proximity,
        r.alignment,
        r.collision,
        r.predicted_collision,
    ];
    for v in t.observation.iter().copied().chain(scalars.iter().map(|&s| s as f32)) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.push(u8::from(t.done));
    for v in &t.next_observation {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_transition<R: Read>(mut input: R) -> Result<Option<Transition>> {
    let mut len = [0u8; 4];
    match input.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let mut payload = vec![0u8; u32::from_le_bytes(len) as usize];
    input.read_exact(&mut payload)?;
    if payload.len() < 16 {
        return Err(Error::format("transition", "frame too short"));
    }
    let step = u64::from_le_bytes(payload[0..8].try_into().expect("8 bytes"));
    let agent = u32::from_le_bytes(payload[8..12].try_into().expect("4 bytes")) as usize;
    let n = u32::from_le_bytes(payload[12..16].try_into().expect("4 bytes")) as usize;
    if payload.len() != 16 + 8 * n + 28 + 1 {
        return Err(Error::format(
            "transition",
            "observation length disagrees with frame length",
        ));
    }
    let f32s = |bytes: &[u8]| -> Vec<f32> {
        bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect()
    };
    let head_end = 16 + 4 * n + 28;
    let head = f32s(&payload[16..head_end]);
    let (observation, s) = head.split_at(n);
    let done = match payload[head_end] {
        0 => false,
        1 => true,
        _ => return Err(Error::format("transition", "done flag is not 0 or 1")),
    };
    Ok(Some(Transition {
        step,
        agent,
        observation: observation.to_vec(),
        action: Vec2::new(s[0] as f64, s[1] as f64),
        reward: NavReward {
            terminal: s[2] as f64,
            proximity: s[3] as f64,
            alignment: s[4] as f64,
            collision: s[5] as f64,
            predicted_collision: s[6] as f64,
        },
        done,
        next_observation: f32s(&payload[head_end + 1..]),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(step: u64) -> Transition {
        Transition {
            step,
            agent: 3,
            observation: vec![0.0, 0.25, 1.0],
            action: Vec2::new(1.5, -2.0),
            reward: NavReward {
                terminal: 1500.0,
                proximity: 4.0,
                alignment: -0.5,
                collision: -100.0,
                predicted_collision: -10.0,
            },
            done: step == 1,
            next_observation: vec![0.5, 0.5, 0.5],
        }
    }

    #[test]
    fn roundtrip_stream() {
        let mut buf = Vec::new();
        write_transition(&sample(0), &mut buf).unwrap();
        write_transition(&sample(1), &mut buf).unwrap();
        let mut r = buf.as_slice();
        assert_eq!(read_transition(&mut r).unwrap(), Some(sample(0)));
        assert_eq!(read_transition(&mut r).unwrap(), Some(sample(1)));
        assert_eq!(read_transition(&mut r).unwrap(), None);
    }

    #[test]
    fn rejects_bad_frames() {
        let mut t = sample(0);
        t.next_observation.pop();
        assert!(write_transition(&t, Vec::new()).is_err());

        let mut buf = Vec::new();
        write_transition(&sample(0), &mut buf).unwrap();
        let flag = buf.len() - 3 * 4 - 1;
        buf[flag] = 7;
        assert!(read_transition(buf.as_slice()).is_err());
        buf.truncate(buf.len() - 2);
        assert!(read_transition(buf.as_slice()).is_err());
    }
}
