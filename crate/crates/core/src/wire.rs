//! Binary wire format for mote telemetry frames.
//!
//! Every frame is exactly [`FRAME_LEN`] bytes (224 bits):
//!
//! ```text
//! offset  size  field
//! ------  ----  -----------------------------------------------------
//! 0       2     magic 0xA5 0x5A
//! 2       1     format version (0x01)
//! 3       1     node id
//! 4       4     sequence number, big-endian
//! 8       8     timestamp, epoch milliseconds, big-endian
//! 16      10    five ADC readings, one big-endian u16 each, in order:
//!               light, temperature, accel_x, accel_y, voltage
//! 26      2     CRC-16/CCITT-FALSE over bytes 0..26, big-endian
//! ```
//!
//! ADC readings are 10-bit (0..=1023); values above that are rejected on
//! both encode and decode. The trailing CRC makes each frame
//! self-validating, so [`FrameScanner`] can resynchronize on a corrupted
//! stream by searching for the next magic pair and re-validating.
//!
//! Frames are carried over plain TCP back to back with no additional
//! transport framing.

use thiserror::Error;

/// Encoded frame length in bytes.
pub const FRAME_LEN: usize = 28;

/// Frame start marker.
pub const MAGIC: [u8; 2] = [0xA5, 0x5A];

/// Wire format version carried in byte 2.
pub const WIRE_VERSION: u8 = 0x01;

/// Largest valid 10-bit ADC reading.
pub const ADC_MAX: u16 = 1023;

const CRC_OFFSET: usize = 26;

/// The five raw ADC readings of one frame, in wire order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdcReadings {
    pub light: u16,
    pub temperature: u16,
    pub accel_x: u16,
    pub accel_y: u16,
    pub voltage: u16,
}

impl AdcReadings {
    pub fn from_array(values: [u16; 5]) -> Self {
        Self {
            light: values[0],
            temperature: values[1],
            accel_x: values[2],
            accel_y: values[3],
            voltage: values[4],
        }
    }

    pub fn as_array(&self) -> [u16; 5] {
        [
            self.light,
            self.temperature,
            self.accel_x,
            self.accel_y,
            self.voltage,
        ]
    }
}

/// One decoded telemetry message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawFrame {
    pub node_id: u8,
    pub sequence: u32,
    pub timestamp_ms: u64,
    pub adc: AdcReadings,
}

/// Which frame validation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameErrorKind {
    BadMagic,
    BadVersion,
    BadCrc,
    Truncated,
    AdcOutOfRange,
}

impl std::fmt::Display for FrameErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FrameErrorKind::BadMagic => "bad magic",
            FrameErrorKind::BadVersion => "unsupported version",
            FrameErrorKind::BadCrc => "crc mismatch",
            FrameErrorKind::Truncated => "truncated frame",
            FrameErrorKind::AdcOutOfRange => "adc reading out of range",
        };
        f.write_str(s)
    }
}

/// A failed frame validation, with the byte position of the failed check.
///
/// For standalone [`decode_frame`] calls the offset is relative to the
/// start of the input; [`FrameScanner`] reports absolute stream offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{kind} at byte offset {offset}")]
pub struct FrameError {
    pub kind: FrameErrorKind,
    pub offset: u64,
}

impl FrameError {
    fn new(kind: FrameErrorKind, offset: usize) -> Self {
        Self {
            kind,
            offset: offset as u64,
        }
    }
}

const CRC_TABLE: [u16; 256] = build_crc_table();

const fn build_crc_table() -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = (i as u16) << 8;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ 0x1021
            } else {
                crc << 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

/// CRC-16/CCITT-FALSE: polynomial 0x1021, initial value 0xFFFF, no
/// reflection, no final XOR. Check value: `crc16(b"123456789") == 0x29B1`.
pub fn crc16(bytes: &[u8]) -> u16 {
    let mut crc = 0xFFFFu16;
    for &b in bytes {
        crc = (crc << 8) ^ CRC_TABLE[(((crc >> 8) ^ b as u16) & 0xFF) as usize];
    }
    crc
}

/// Encode a frame into its 28-byte wire form.
///
/// Fails with `AdcOutOfRange` if any reading exceeds [`ADC_MAX`]; the
/// error offset names the offending reading's wire position.
pub fn encode_frame(frame: &RawFrame) -> Result<[u8; FRAME_LEN], FrameError> {
    for (i, v) in frame.adc.as_array().iter().enumerate() {
        if *v > ADC_MAX {
            return Err(FrameError::new(FrameErrorKind::AdcOutOfRange, 16 + 2 * i));
        }
    }
    let mut buf = [0u8; FRAME_LEN];
    buf[0..2].copy_from_slice(&MAGIC);
    buf[2] = WIRE_VERSION;
    buf[3] = frame.node_id;
    buf[4..8].copy_from_slice(&frame.sequence.to_be_bytes());
    buf[8..16].copy_from_slice(&frame.timestamp_ms.to_be_bytes());
    for (i, v) in frame.adc.as_array().iter().enumerate() {
        buf[16 + 2 * i..18 + 2 * i].copy_from_slice(&v.to_be_bytes());
    }
    let crc = crc16(&buf[..CRC_OFFSET]);
    buf[26..28].copy_from_slice(&crc.to_be_bytes());
    Ok(buf)
}

/// Decode one frame from the first 28 bytes of `bytes`.
///
/// Validation order: length, magic, version, CRC, ADC bounds. Each failure
/// names the failed check and its byte offset within the input.
pub fn decode_frame(bytes: &[u8]) -> Result<RawFrame, FrameError> {
    if bytes.len() < FRAME_LEN {
        return Err(FrameError::new(FrameErrorKind::Truncated, bytes.len()));
    }
    let b = &bytes[..FRAME_LEN];
    if b[0..2] != MAGIC {
        return Err(FrameError::new(FrameErrorKind::BadMagic, 0));
    }
    if b[2] != WIRE_VERSION {
        return Err(FrameError::new(FrameErrorKind::BadVersion, 2));
    }
    let stored = u16::from_be_bytes([b[26], b[27]]);
    if crc16(&b[..CRC_OFFSET]) != stored {
        return Err(FrameError::new(FrameErrorKind::BadCrc, CRC_OFFSET));
    }
    let mut values = [0u16; 5];
    for (i, v) in values.iter_mut().enumerate() {
        *v = u16::from_be_bytes([b[16 + 2 * i], b[17 + 2 * i]]);
        if *v > ADC_MAX {
            return Err(FrameError::new(FrameErrorKind::AdcOutOfRange, 16 + 2 * i));
        }
    }
    Ok(RawFrame {
        node_id: b[3],
        sequence: u32::from_be_bytes([b[4], b[5], b[6], b[7]]),
        timestamp_ms: u64::from_be_bytes([b[8], b[9], b[10], b[11], b[12], b[13], b[14], b[15]]),
        adc: AdcReadings::from_array(values),
    })
}

/// One item produced by the scanner: a decoded frame or an inline error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScanItem {
    Frame(RawFrame),
    Error(FrameError),
}

/// Incremental frame scanner with resynchronization.
///
/// Feed arbitrary chunks with [`push`](Self::push) and drain results with
/// [`poll`](Self::poll). On a failed decode the scanner reports the error,
/// advances a single byte, and searches for the next magic pair, so a valid
/// frame that appears intact anywhere in the stream is never lost.
///
/// Single consumer; the values it produces may be sent across threads.
#[derive(Debug, Default)]
pub struct FrameScanner {
    buf: Vec<u8>,
    /// Absolute stream offset of `buf[0]`.
    base: u64,
}

impl FrameScanner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append newly received bytes.
    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Number of bytes currently buffered.
    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    fn discard(&mut self, n: usize) {
        self.buf.drain(..n);
        self.base += n as u64;
    }

    fn find_magic(&self) -> Option<usize> {
        self.buf
            .windows(2)
            .position(|w| w[0] == MAGIC[0] && w[1] == MAGIC[1])
    }

    /// Produce the next frame or error, or `None` if more bytes are needed.
    pub fn poll(&mut self) -> Option<ScanItem> {
        let Some(pos) = self.find_magic() else {
            // Nothing resembling a frame start; keep a trailing half-magic.
            let keep = usize::from(self.buf.last() == Some(&MAGIC[0]));
            let drop = self.buf.len() - keep;
            self.discard(drop);
            return None;
        };
        self.discard(pos);
        if self.buf.len() < FRAME_LEN {
            return None;
        }
        match decode_frame(&self.buf[..FRAME_LEN]) {
            Ok(frame) => {
                self.discard(FRAME_LEN);
                Some(ScanItem::Frame(frame))
            }
            Err(e) => {
                let abs = FrameError {
                    kind: e.kind,
                    offset: self.base + e.offset,
                };
                self.discard(1);
                Some(ScanItem::Error(abs))
            }
        }
    }

    /// Signal end of stream. Returns `Truncated` if a magic-led prefix
    /// shorter than a full frame is left in the buffer.
    pub fn finish(&mut self) -> Option<FrameError> {
        let err = self.find_magic().map(|pos| FrameError {
            kind: FrameErrorKind::Truncated,
            offset: self.base + pos as u64,
        });
        let len = self.buf.len();
        self.discard(len);
        err
    }
}
