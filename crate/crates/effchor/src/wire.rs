//! Binary encoding of values and the length-prefixed frames that carry them
//! between peers.
//!
//! A value is a tag byte followed by its body:
//!
//! | tag  | kind | body                                   |
//! |------|------|----------------------------------------|
//! | 0x00 | unit | empty                                  |
//! | 0x01 | bool | one byte, 0 or 1                       |
//! | 0x02 | int  | 8 bytes, big-endian two's complement   |
//! | 0x03 | str  | 4-byte big-endian length, then UTF-8   |
//! | 0x04 | pair | two encoded values                     |
//! | 0x05 | list | 4-byte big-endian count, then elements |
//!
//! A frame is a 4-byte big-endian payload length followed by the payload.

use std::io::{self, Read, Write};

use effchor_core::Value;

/// Largest accepted frame payload (16 MiB).
pub const MAX_FRAME: usize = 16 * 1024 * 1024;

/// Nesting bound for decoding, so hostile input cannot exhaust the stack.
const MAX_NESTING: usize = 512;

const TAG_UNIT: u8 = 0x00;
const TAG_BOOL: u8 = 0x01;
const TAG_INT: u8 = 0x02;
const TAG_STR: u8 = 0x03;
const TAG_PAIR: u8 = 0x04;
const TAG_LIST: u8 = 0x05;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("unexpected end of input at byte {0}")]
    Truncated(usize),
    #[error("unknown tag {tag:#04x} at byte {at}")]
    UnknownTag { tag: u8, at: usize },
    #[error("invalid bool byte {byte:#04x} at byte {at}")]
    InvalidBool { byte: u8, at: usize },
    #[error("string at byte {0} is not valid UTF-8")]
    InvalidUtf8(usize),
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
    #[error("value nested deeper than {MAX_NESTING} levels")]
    TooDeep,
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("frame of {0} bytes exceeds the {MAX_FRAME}-byte limit")]
    FrameTooLarge(usize),
    #[error("malformed value: {0}")]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn encode_value(v: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    encode_into(v, &mut out);
    out
}

fn encode_into(v: &Value, out: &mut Vec<u8>) {
    match v {
        Value::Unit => out.push(TAG_UNIT),
        Value::Bool(b) => out.extend([TAG_BOOL, u8::from(*b)]),
        Value::Int(n) => {
            out.push(TAG_INT);
            out.extend(n.to_be_bytes());
        }
        Value::Str(s) => {
            out.push(TAG_STR);
            out.extend(len_prefix(s.len()));
            out.extend(s.as_bytes());
        }
        Value::Pair(a, b) => {
            out.push(TAG_PAIR);
            encode_into(a, out);
            encode_into(b, out);
        }
        Value::List(items) => {
            out.push(TAG_LIST);
            out.extend(len_prefix(items.len()));
            for item in items {
                encode_into(item, out);
            }
        }
    }
}

fn len_prefix(n: usize) -> [u8; 4] {
    u32::try_from(n).expect("length fits in 32 bits").to_be_bytes()
}

/// Decodes exactly one value; leftover bytes are an error.
pub fn decode_value(bytes: &[u8]) -> Result<Value, DecodeError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let v = cur.value(0)?;
    match bytes.len() - cur.pos {
        0 => Ok(v),
        n => Err(DecodeError::TrailingBytes(n)),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(DecodeError::Truncated(self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn value(&mut self, nesting: usize) -> Result<Value, DecodeError> {
        if nesting > MAX_NESTING {
            return Err(DecodeError::TooDeep);
        }
        let at = self.pos;
        let tag = self.take(1)?[0];
        match tag {
            TAG_UNIT => Ok(Value::Unit),
            TAG_BOOL => match self.take(1)?[0] {
                0 => Ok(Value::Bool(false)),
                1 => Ok(Value::Bool(true)),
                byte => Err(DecodeError::InvalidBool { byte, at: at + 1 }),
            },
            TAG_INT => {
                let b = self.take(8)?;
                Ok(Value::Int(i64::from_be_bytes(b.try_into().expect("eight bytes"))))
            }
            TAG_STR => {
                let len = self.u32()?;
                let start = self.pos;
                let b = self.take(len)?;
                let s = std::str::from_utf8(b).map_err(|_| DecodeError::InvalidUtf8(start))?;
                Ok(Value::Str(s.into()))
            }
            TAG_PAIR => {
                let a = self.value(nesting + 1)?;
                let b = self.value(nesting + 1)?;
                Ok(Value::pair(a, b))
            }
            TAG_LIST => {
                let count = self.u32()?;
                // Every element takes at least one byte.
                let mut items = Vec::with_capacity(count.min(self.bytes.len() - self.pos));
                for _ in 0..count {
                    items.push(self.value(nesting + 1)?);
                }
                Ok(Value::List(items))
            }
            tag => Err(DecodeError::UnknownTag { tag, at }),
        }
    }
}

/// Length prefix plus payload.
pub fn encode_frame(payload: &[u8]) -> Result<Vec<u8>, WireError> {
    if payload.len() > MAX_FRAME {
        return Err(WireError::FrameTooLarge(payload.len()));
    }
    let mut out = Vec::with_capacity(4 + payload.len());
    out.extend(len_prefix(payload.len()));
    out.extend(payload);
    Ok(out)
}

/// Splits one complete frame into its payload; the buffer must hold exactly
/// one frame.
pub fn decode_frame(bytes: &[u8]) -> Result<Vec<u8>, WireError> {
    let mut r = bytes;
    let payload = read_frame(&mut r)?.ok_or(DecodeError::Truncated(0))?;
    if !r.is_empty() {
        return Err(DecodeError::TrailingBytes(r.len()).into());
    }
    Ok(payload)
}

pub fn write_value<W: Write>(w: &mut W, v: &Value) -> Result<(), WireError> {
    w.write_all(&encode_frame(&encode_value(v))?)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame payload. `Ok(None)` means the stream ended cleanly before
/// a new frame started.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Vec<u8>>, WireError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(DecodeError::Truncated(got).into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(WireError::FrameTooLarge(len));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => WireError::Decode(DecodeError::Truncated(4)),
        _ => WireError::Io(e),
    })?;
    Ok(Some(payload))
}

pub fn read_value<R: Read>(r: &mut R) -> Result<Option<Value>, WireError> {
    match read_frame(r)? {
        Some(payload) => Ok(Some(decode_value(&payload)?)),
        None => Ok(None),
    }
}
