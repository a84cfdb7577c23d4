//! Flat memory images and their on-disk form.
//!
//! Binary layout, all fields little-endian `u32`:
//!
//! ```text
//! "VXS1" | base | entry | length | bytes...
//! ```
//!
//! Symbols live in a separate text file, one `name 0xADDRESS` per line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"VXS1";
const HEADER_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("not a VXS1 image")]
    BadMagic,
    #[error("image is truncated: header says {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("entry point {entry:#010x} lies outside the image")]
    EntryOutside { entry: u32 },
    #[error("symbol file line {line}: {message}")]
    BadSymbol { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Image {
    pub base: u32,
    pub entry: u32,
    pub bytes: Vec<u8>,
    pub symbols: BTreeMap<String, u32>,
}

impl Image {
    pub fn end(&self) -> u64 {
        self.base as u64 + self.bytes.len() as u64
    }

    pub fn validate(&self) -> Result<(), ImageError> {
        let inside = (self.entry as u64) < self.end() && self.entry >= self.base;
        if inside || (self.bytes.is_empty() && self.entry == self.base) {
            Ok(())
        } else {
            Err(ImageError::EntryOutside { entry: self.entry })
        }
    }

    pub fn symbol(&self, name: &str) -> Option<u32> {
        self.symbols.get(name).copied()
    }

    /// Little-endian word at `addr`, if the image covers it.
    pub fn word_at(&self, addr: u32) -> Option<u32> {
        let off = addr.checked_sub(self.base)? as usize;
        let b = self.bytes.get(off..off + 4)?;
        Some(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + self.bytes.len());
        out.extend_from_slice(MAGIC);
        for field in [self.base, self.entry, self.bytes.len() as u32] {
            out.extend_from_slice(&field.to_le_bytes());
        }
        out.extend_from_slice(&self.bytes);
        out
    }

    /// Parses the binary form. Symbols are not part of it.
    pub fn from_bytes(data: &[u8]) -> Result<Image, ImageError> {
        if data.len() < HEADER_BYTES || &data[..4] != MAGIC {
            return Err(ImageError::BadMagic);
        }
        let field = |i: usize| u32::from_le_bytes(data[4 * i..4 * i + 4].try_into().unwrap());
        let (base, entry, len) = (field(1), field(2), field(3) as usize);
        let body = &data[HEADER_BYTES..];
        if body.len() != len {
            return Err(ImageError::Truncated { expected: len, found: body.len() });
        }
        let image = Image { base, entry, bytes: body.to_vec(), symbols: BTreeMap::new() };
        image.validate()?;
        Ok(image)
    }

    pub fn symbols_text(&self) -> String {
        let mut out = String::new();
        for (name, addr) in &self.symbols {
            let _ = writeln!(out, "{name} {addr:#010x}");
        }
        out
    }

    pub fn parse_symbols(text: &str) -> Result<BTreeMap<String, u32>, ImageError> {
        let mut symbols = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| ImageError::BadSymbol { line: i + 1, message: message.to_string() };
            let (name, addr) = line.split_once(char::is_whitespace).ok_or_else(|| bad("expected `name address`"))?;
            let addr = addr.trim();
            let value = match addr.strip_prefix("0x") {
                Some(hex) => u32::from_str_radix(hex, 16),
                None => addr.parse(),
            }
            .map_err(|_| bad("bad address"))?;
            symbols.insert(name.to_string(), value);
        }
        Ok(symbols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Image {
        let mut symbols = BTreeMap::new();
        symbols.insert("main".to_string(), 0x1000);
        symbols.insert("data".to_string(), 0x1008);
        Image { base: 0x1000, entry: 0x1004, bytes: vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12], symbols }
    }

    #[test]
    fn binary_roundtrip() {
        let img = sample();
        let bytes = img.to_bytes();
        assert_eq!(&bytes[..4], b"VXS1");
        assert_eq!(&bytes[4..8], &[0x00, 0x10, 0, 0]);
        let back = Image::from_bytes(&bytes).unwrap();
        assert_eq!(back.bytes, img.bytes);
        assert_eq!((back.base, back.entry), (img.base, img.entry));
    }

    #[test]
    fn symbols_roundtrip() {
        let img = sample();
        assert_eq!(Image::parse_symbols(&img.symbols_text()).unwrap(), img.symbols);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(Image::from_bytes(b"ELF\x7f"), Err(ImageError::BadMagic));
        let mut bytes = sample().to_bytes();
        bytes.pop();
        assert!(matches!(Image::from_bytes(&bytes), Err(ImageError::Truncated { .. })));
        let img = Image { entry: 0x2000, ..sample() };
        assert_eq!(img.validate(), Err(ImageError::EntryOutside { entry: 0x2000 }));
    }

    #[test]
    fn word_lookup() {
        assert_eq!(sample().word_at(0x1004), Some(0x0807_0605));
        assert_eq!(sample().word_at(0x100a), None);
    }
}
