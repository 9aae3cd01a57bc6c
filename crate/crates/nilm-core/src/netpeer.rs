//! Minimal two-party wire protocol: agree on parameters, exchange public
//! values, then carry ciphertext.
//!
//! Frames are `kind (1 byte) | length (u32 big-endian) | payload`. One
//! session per connection, strictly sequential; any protocol violation
//! produces a single ERROR frame with a UTF-8 reason, after which no key
//! material from the session is usable.

use std::io::{Read, Write};

use crate::codec::Ciphertext;
use crate::error::{Error, Result};
use crate::fileformat::{ciphertext_from_bytes, ciphertext_to_bytes};
use crate::keyschedule::{build_shared_key, SchemeParams, SharedMatrixKey};
use crate::modular::{dh_public, dh_shared};

pub const DEFAULT_PORT: u16 = 4377;

/// Hard cap on frame payloads.
pub const MAX_FRAME_PAYLOAD: u64 = 1 << 24;

/// version + n + p + x + base_a + offset + epsilon
pub const HELLO_PAYLOAD_LEN: usize = 1 + 4 + 8 + 8 + 8 + 4 + 8;

pub const PROTOCOL_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FrameKind {
    Hello = 0x01,
    PubKey = 0x02,
    Ciphertext = 0x03,
    Error = 0x7f,
}

impl FrameKind {
    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0x01 => Ok(Self::Hello),
            0x02 => Ok(Self::PubKey),
            0x03 => Ok(Self::Ciphertext),
            0x7f => Ok(Self::Error),
            other => Err(Error::UnknownKind(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(kind: FrameKind, payload: Vec<u8>) -> Result<Self> {
        if payload.len() as u64 > MAX_FRAME_PAYLOAD {
            return Err(Error::OversizedFrame(payload.len() as u64));
        }
        Ok(Self { kind, payload })
    }
}

/// Wire image of a frame: kind byte, big-endian length, payload.
pub fn frame_encode(frame: &Frame) -> Result<Vec<u8>> {
    if frame.payload.len() as u64 > MAX_FRAME_PAYLOAD {
        return Err(Error::OversizedFrame(frame.payload.len() as u64));
    }
    let mut out = Vec::with_capacity(5 + frame.payload.len());
    out.push(frame.kind as u8);
    out.extend_from_slice(&(frame.payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&frame.payload);
    Ok(out)
}

/// Parses exactly one frame; rejects truncated input, trailing bytes,
/// unknown kinds, and length fields beyond the cap.
pub fn frame_decode(bytes: &[u8]) -> Result<Frame> {
    if bytes.len() < 5 {
        return Err(Error::TruncatedFrame);
    }
    let kind = FrameKind::from_byte(bytes[0])?;
    let length = u32::from_be_bytes(bytes[1..5].try_into().expect("4 bytes")) as u64;
    if length > MAX_FRAME_PAYLOAD {
        return Err(Error::OversizedFrame(length));
    }
    let rest = &bytes[5..];
    if (rest.len() as u64) < length {
        return Err(Error::TruncatedFrame);
    }
    if rest.len() as u64 > length {
        return Err(Error::TrailingBytes);
    }
    Ok(Frame {
        kind,
        payload: rest.to_vec(),
    })
}

pub fn write_frame<W: Write>(stream: &mut W, frame: &Frame) -> Result<()> {
    let bytes = frame_encode(frame)?;
    stream.write_all(&bytes)?;
    stream.flush()?;
    Ok(())
}

pub fn read_frame<R: Read>(stream: &mut R) -> Result<Frame> {
    let mut header = [0u8; 5];
    read_exact_frame(stream, &mut header)?;
    let kind = FrameKind::from_byte(header[0])?;
    let length = u32::from_be_bytes(header[1..5].try_into().expect("4 bytes")) as u64;
    if length > MAX_FRAME_PAYLOAD {
        return Err(Error::OversizedFrame(length));
    }
    let mut payload = vec![0u8; length as usize];
    read_exact_frame(stream, &mut payload)?;
    Ok(Frame { kind, payload })
}

fn read_exact_frame<R: Read>(stream: &mut R, buf: &mut [u8]) -> Result<()> {
    stream.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::TruncatedFrame
        } else {
            Error::ConnectionError(e)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Initiator,
    Responder,
}

/// HELLO payload, all big-endian: version, n, p, x, base_a, offset, and
/// epsilon as raw IEEE-754 bits. The responder must echo it bit-for-bit —
/// both sides have to run the identical float pipeline, so epsilon
/// compares exactly.
pub fn hello_payload(params: &SchemeParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(HELLO_PAYLOAD_LEN);
    out.push(PROTOCOL_VERSION);
    out.extend_from_slice(&(params.n as u32).to_be_bytes());
    out.extend_from_slice(&params.dh.modulus().to_be_bytes());
    out.extend_from_slice(&params.dh.base().to_be_bytes());
    out.extend_from_slice(&params.base_a.to_be_bytes());
    out.extend_from_slice(&params.offset.to_be_bytes());
    out.extend_from_slice(&params.epsilon.to_bits().to_be_bytes());
    out
}

/// Names the first field where a remote HELLO disagrees with ours.
fn hello_mismatch_reason(local: &[u8], remote: &[u8]) -> String {
    if remote.len() != HELLO_PAYLOAD_LEN {
        return format!(
            "hello payload is {} bytes, expected {HELLO_PAYLOAD_LEN}",
            remote.len()
        );
    }
    let fields: [(&str, std::ops::Range<usize>); 7] = [
        ("version", 0..1),
        ("dimension n", 1..5),
        ("prime modulus p", 5..13),
        ("public base x", 13..21),
        ("radix", 21..29),
        ("digit offset", 29..33),
        ("epsilon", 33..41),
    ];
    for (name, range) in fields {
        if local[range.clone()] != remote[range] {
            return format!("parameter disagreement on {name}");
        }
    }
    "parameter disagreement".to_string()
}

/// Best-effort ERROR frame, then the rejection error.
fn reject<S: Write>(stream: &mut S, reason: String) -> Error {
    if let Ok(frame) = Frame::new(FrameKind::Error, reason.clone().into_bytes()) {
        let _ = write_frame(stream, &frame);
    }
    Error::HandshakeRejected(reason)
}

fn expect_kind<S: Write>(stream: &mut S, frame: Frame, want: FrameKind) -> Result<Vec<u8>> {
    match frame.kind {
        k if k == want => Ok(frame.payload),
        FrameKind::Error => Err(Error::HandshakeRejected(
            String::from_utf8_lossy(&frame.payload).into_owned(),
        )),
        other => Err(reject(
            stream,
            format!("unexpected frame kind {other:?} during handshake"),
        )),
    }
}

/// Runs the parameter echo and public-value exchange over a connected
/// stream and derives the shared matrix key.
///
/// Both sides return keys with bitwise-identical nilpotent matrices, or
/// both observe the same failure: parameter disagreement rejects the
/// handshake on each end, and a degenerate shared secret surfaces as
/// [`Error::DegenerateKey`] symmetrically.
pub fn run_handshake<S: Read + Write>(
    role: Role,
    stream: &mut S,
    params: &SchemeParams,
    secret: u64,
) -> Result<SharedMatrixKey> {
    let local_hello = hello_payload(params);
    let own_public = dh_public(&params.dh, secret)?;

    match role {
        Role::Initiator => {
            write_frame(stream, &Frame::new(FrameKind::Hello, local_hello.clone())?)?;
            let frame = read_frame(stream)?;
            let echo = expect_kind(stream, frame, FrameKind::Hello)?;
            if echo != local_hello {
                return Err(reject(stream, hello_mismatch_reason(&local_hello, &echo)));
            }
            write_frame(
                stream,
                &Frame::new(FrameKind::PubKey, own_public.to_be_bytes().to_vec())?,
            )?;
            let frame = read_frame(stream)?;
            let payload = expect_kind(stream, frame, FrameKind::PubKey)?;
            let other_public = parse_pubkey(stream, payload)?;
            let shared = dh_shared(&params.dh, secret, other_public)?;
            build_shared_key(shared, params)
        }
        Role::Responder => {
            let frame = read_frame(stream)?;
            let hello = expect_kind(stream, frame, FrameKind::Hello)?;
            if hello != local_hello {
                return Err(reject(stream, hello_mismatch_reason(&local_hello, &hello)));
            }
            // Echo only after full verification; no key work has happened yet.
            write_frame(stream, &Frame::new(FrameKind::Hello, local_hello)?)?;
            let frame = read_frame(stream)?;
            let payload = expect_kind(stream, frame, FrameKind::PubKey)?;
            let other_public = parse_pubkey(stream, payload)?;
            write_frame(
                stream,
                &Frame::new(FrameKind::PubKey, own_public.to_be_bytes().to_vec())?,
            )?;
            let shared = dh_shared(&params.dh, secret, other_public)?;
            build_shared_key(shared, params)
        }
    }
}

fn parse_pubkey<S: Write>(stream: &mut S, payload: Vec<u8>) -> Result<u64> {
    if payload.len() != 8 {
        return Err(reject(
            stream,
            format!(
                "public value payload is {} bytes, expected 8",
                payload.len()
            ),
        ));
    }
    Ok(u64::from_be_bytes(payload.try_into().expect("8 bytes")))
}

/// Ships a ciphertext as a single frame carrying the container bytes.
pub fn send_ciphertext<W: Write>(stream: &mut W, ct: &Ciphertext) -> Result<()> {
    let body = ciphertext_to_bytes(ct);
    write_frame(stream, &Frame::new(FrameKind::Ciphertext, body)?)
}

/// Receives one ciphertext frame and parses the container body.
pub fn recv_ciphertext<R: Read + Write>(stream: &mut R) -> Result<Ciphertext> {
    let frame = read_frame(stream)?;
    match frame.kind {
        FrameKind::Ciphertext => ciphertext_from_bytes(&frame.payload),
        FrameKind::Error => Err(Error::HandshakeRejected(
            String::from_utf8_lossy(&frame.payload).into_owned(),
        )),
        other => {
            let _ = write_frame(
                stream,
                &Frame::new(
                    FrameKind::Error,
                    format!("expected ciphertext frame, got {other:?}").into_bytes(),
                )?,
            );
            Err(Error::CorruptCiphertext(format!(
                "expected ciphertext frame, got {other:?}"
            )))
        }
    }
}
