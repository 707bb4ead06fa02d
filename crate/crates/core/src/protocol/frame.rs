//! Wire framing: every protocol message travels as a length-prefixed frame
//! tagged with its kind and the partition round it belongs to.
//!
//! Layout: `[len: u32 BE] [kind: u16 BE] [round: u16 BE] [payload]`, where
//! `len` counts the four tag bytes plus the payload. The same bytes flow
//! over the in-process transport and the TCP transport, so transcripts are
//! comparable across them.

use std::io::{Read, Write};

use super::ProtocolError;

/// Upper bound on a single frame's payload; anything larger is treated as
/// stream corruption rather than allocated.
pub const MAX_PAYLOAD: usize = 1 << 30;

/// What a frame carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u16)]
pub enum FrameKind {
    /// Garbled gate tables and constant tokens, garbler → evaluator.
    GcTable = 1,
    /// The garbler's active input tokens.
    GcTokensA = 2,
    /// Output decode table (dual circuit rounds only).
    GcDecode = 3,
    /// Transfer move 1: sender setup point.
    OtSetup = 4,
    /// Transfer move 2: receiver's blinded points.
    OtBlind = 5,
    /// Transfer move 3: padded message pairs.
    OtPads = 6,
    /// Active output tokens, evaluator → garbler (plain circuit rounds).
    GcOutTokens = 7,
    /// The second party's sealed input for a stateful round.
    SgxCipher = 8,
    /// Sealed reply relayed to the second party (dual stateful rounds).
    SgxReply = 9,
    /// Post-run coin exchange; never part of the message log.
    Trailer = 10,
}

impl FrameKind {
    fn from_code(code: u16) -> Option<FrameKind> {
        Some(match code {
            1 => FrameKind::GcTable,
            2 => FrameKind::GcTokensA,
            3 => FrameKind::GcDecode,
            4 => FrameKind::OtSetup,
            5 => FrameKind::OtBlind,
            6 => FrameKind::OtPads,
            7 => FrameKind::GcOutTokens,
            8 => FrameKind::SgxCipher,
            9 => FrameKind::SgxReply,
            10 => FrameKind::Trailer,
            _ => return None,
        })
    }
}

/// One wire message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    /// Message kind.
    pub kind: FrameKind,
    /// 1-indexed partition round the message belongs to (0 for trailers).
    pub round: u16,
    /// Kind-specific body.
    pub payload: Vec<u8>,
}

impl Frame {
    /// Builds a frame.
    pub fn new(kind: FrameKind, round: u16, payload: Vec<u8>) -> Frame {
        Frame { kind, round, payload }
    }

    /// Encoded size on the wire, including the length prefix.
    pub fn wire_len(&self) -> usize {
        8 + self.payload.len()
    }

    /// Serializes the frame, length prefix included.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&((4 + self.payload.len()) as u32).to_be_bytes());
        out.extend_from_slice(&(self.kind as u16).to_be_bytes());
        out.extend_from_slice(&self.round.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Writes the frame to a stream.
    pub fn write_to(&self, w: &mut dyn Write) -> Result<(), ProtocolError> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    /// Reads one frame from a stream.
    pub fn read_from(r: &mut dyn Read) -> Result<Frame, ProtocolError> {
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let len = u32::from_be_bytes(len) as usize;
        if len < 4 || len - 4 > MAX_PAYLOAD {
            return Err(ProtocolError::Malformed("frame length out of range"));
        }
        let mut tag = [0u8; 4];
        r.read_exact(&mut tag)?;
        let kind = FrameKind::from_code(u16::from_be_bytes([tag[0], tag[1]]))
            .ok_or(ProtocolError::Malformed("unknown frame kind"))?;
        let round = u16::from_be_bytes([tag[2], tag[3]]);
        let mut payload = vec![0u8; len - 4];
        r.read_exact(&mut payload)?;
        Ok(Frame { kind, round, payload })
    }
}
