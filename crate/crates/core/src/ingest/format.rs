use std::io::Write;
use std::path::Path;

use super::{read_file, IngestError};
use crate::mask::Bitmask;

pub const CMSK_MAGIC: &[u8; 4] = b"CMSK";
pub const CSTK_MAGIC: &[u8; 4] = b"CSTK";
pub const FORMAT_VERSION: u8 = 0x01;

const CMSK_HEADER_LEN: usize = 4 + 1 + 4 + 4;
const CSTK_HEADER_LEN: usize = 4 + 1 + 4 + 4 + 4;

/// All candidate feature-map masks for one image; index is the feature-map id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMapStack {
    width: u32,
    height: u32,
    masks: Vec<Bitmask>,
}

impl FeatureMapStack {
    pub fn new(masks: Vec<Bitmask>) -> Result<Self, IngestError> {
        let first = masks.first().ok_or(IngestError::EmptyStack)?;
        let (width, height) = first.dims();
        if let Some(bad) = masks.iter().find(|m| m.dims() != (width, height)) {
            return Err(IngestError::Parse(format!(
                "stack plane is {}x{}, expected {width}x{height}",
                bad.width(),
                bad.height()
            )));
        }
        Ok(Self {
            width,
            height,
            masks,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[Bitmask] {
        &self.masks
    }

    pub fn get(&self, id: usize) -> Option<&Bitmask> {
        self.masks.get(id)
    }

    pub fn into_masks(self) -> Vec<Bitmask> {
        self.masks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlaneHeader {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackHeader {
    pub planes: u32,
    pub width: u32,
    pub height: u32,
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4-byte slice"))
}

fn check_magic(bytes: &[u8], magic: &[u8; 4], header_len: usize) -> Result<(), IngestError> {
    let prefix = bytes.len().min(4);
    if bytes[..prefix] != magic[..prefix] {
        return Err(IngestError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: bytes.iter().take(4).copied().collect(),
        });
    }
    if bytes.len() < header_len {
        return Err(IngestError::Truncated {
            what: "header",
            expected: header_len,
            actual: bytes.len(),
        });
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(IngestError::UnsupportedVersion(bytes[4]));
    }
    Ok(())
}

fn check_dims(width: u32, height: u32) -> Result<(), IngestError> {
    if width == 0 || height == 0 {
        Err(IngestError::ZeroDimensions { width, height })
    } else {
        Ok(())
    }
}

fn check_payload(bytes: &[u8], expected: usize) -> Result<(), IngestError> {
    use std::cmp::Ordering;
    match bytes.len().cmp(&expected) {
        Ordering::Less => Err(IngestError::Truncated {
            what: "payload",
            expected,
            actual: bytes.len(),
        }),
        Ordering::Greater => Err(IngestError::TrailingData {
            extra: bytes.len() - expected,
        }),
        Ordering::Equal => Ok(()),
    }
}

pub fn read_bitmask_header(bytes: &[u8]) -> Result<PlaneHeader, IngestError> {
    check_magic(bytes, CMSK_MAGIC, CMSK_HEADER_LEN)?;
    let header = PlaneHeader {
        width: u32_at(bytes, 5),
        height: u32_at(bytes, 9),
    };
    check_dims(header.width, header.height)?;
    Ok(header)
}

pub fn read_stack_header(bytes: &[u8]) -> Result<StackHeader, IngestError> {
    check_magic(bytes, CSTK_MAGIC, CSTK_HEADER_LEN)?;
    let header = StackHeader {
        planes: u32_at(bytes, 5),
        width: u32_at(bytes, 9),
        height: u32_at(bytes, 13),
    };
    if header.planes == 0 {
        return Err(IngestError::EmptyStack);
    }
    check_dims(header.width, header.height)?;
    Ok(header)
}

pub fn decode_bitmask(bytes: &[u8]) -> Result<Bitmask, IngestError> {
    let PlaneHeader { width, height } = read_bitmask_header(bytes)?;
    let body = &bytes[CMSK_HEADER_LEN..];
    check_payload(body, Bitmask::packed_len(width, height))?;
    Ok(Bitmask::from_packed(width, height, body)?)
}

pub fn encode_bitmask(mask: &Bitmask) -> Vec<u8> {
    let mut out =
        Vec::with_capacity(CMSK_HEADER_LEN + Bitmask::packed_len(mask.width(), mask.height()));
    out.extend_from_slice(CMSK_MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&mask.width().to_le_bytes());
    out.extend_from_slice(&mask.height().to_le_bytes());
    out.extend_from_slice(&mask.to_packed());
    out
}

pub fn decode_feature_stack(bytes: &[u8]) -> Result<FeatureMapStack, IngestError> {
    let StackHeader {
        planes,
        width,
        height,
    } = read_stack_header(bytes)?;
    let plane_len = Bitmask::packed_len(width, height);
    let body = &bytes[CSTK_HEADER_LEN..];
    let expected = (planes as usize)
        .checked_mul(plane_len)
        .ok_or_else(|| IngestError::Parse("stack size overflows".into()))?;
    check_payload(body, expected)?;
    let masks = body
        .chunks_exact(plane_len)
        .map(|chunk| Bitmask::from_packed(width, height, chunk))
        .collect::<Result<Vec<_>, _>>()?;
    FeatureMapStack::new(masks)
}

pub fn encode_feature_stack(stack: &FeatureMapStack) -> Vec<u8> {
    let plane_len = Bitmask::packed_len(stack.width(), stack.height());
    let mut out = Vec::with_capacity(CSTK_HEADER_LEN + plane_len * stack.len());
    out.extend_from_slice(CSTK_MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(stack.len() as u32).to_le_bytes());
    out.extend_from_slice(&stack.width().to_le_bytes());
    out.extend_from_slice(&stack.height().to_le_bytes());
    for mask in stack.masks() {
        out.extend_from_slice(&mask.to_packed());
    }
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)
}

pub fn save_bitmask(path: impl AsRef<Path>, mask: &Bitmask) -> Result<(), IngestError> {
    write_file(path.as_ref(), &encode_bitmask(mask))
}

pub fn save_feature_stack(
    path: impl AsRef<Path>,
    stack: &FeatureMapStack,
) -> Result<(), IngestError> {
    write_file(path.as_ref(), &encode_feature_stack(stack))
}

/// The first `len` bytes of a file and the file's total size.
pub(crate) fn peek_header(path: &Path, len: usize) -> Result<(Vec<u8>, u64), IngestError> {
    use std::io::Read;
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let size = file.metadata().map_err(io_err)?.len();
    let mut buf = Vec::with_capacity(len);
    file.take(len as u64)
        .read_to_end(&mut buf)
        .map_err(io_err)?;
    Ok((buf, size))
}

/// Compares a file's size with the size its header implies.
fn check_file_size(size: u64, header_len: usize, payload: usize) -> Result<(), IngestError> {
    let expected = (header_len + payload) as u64;
    if size < expected {
        Err(IngestError::Truncated {
            what: "payload",
            expected: payload,
            actual: (size as usize).saturating_sub(header_len),
        })
    } else if size > expected {
        Err(IngestError::TrailingData {
            extra: (size - expected) as usize,
        })
    } else {
        Ok(())
    }
}

/// Header of a stack file, checked against the file size without reading the planes.
pub(crate) fn peek_stack_header(path: &Path) -> Result<StackHeader, IngestError> {
    let (head, size) = peek_header(path, CSTK_HEADER_LEN)?;
    let check = || {
        let h = read_stack_header(&head)?;
        let payload = h.planes as usize * Bitmask::packed_len(h.width, h.height);
        check_file_size(size, CSTK_HEADER_LEN, payload)?;
        Ok(h)
    };
    check().map_err(|e: IngestError| e.in_file(path))
}

/// Dimensions of a mask file without decoding its payload (PGM headers are small).
pub(crate) fn peek_mask_dims(path: &Path) -> Result<(u32, u32), IngestError> {
    let (head, size) = peek_header(path, CMSK_HEADER_LEN)?;
    if head.starts_with(b"P5") {
        let m = super::decode_pgm(&read_file(path)?).map_err(|e| e.in_file(path))?;
        return Ok(m.dims());
    }
    let check = || {
        let h = read_bitmask_header(&head)?;
        check_file_size(
            size,
            CMSK_HEADER_LEN,
            Bitmask::packed_len(h.width, h.height),
        )?;
        Ok((h.width, h.height))
    };
    check().map_err(|e: IngestError| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cmsk_payload_loads_empty_mask() {
        let mut bytes = b"CMSK\x01".to_vec();
        bytes.extend_from_slice(&4u32.to_le_bytes());
        bytes.extend_from_slice(&4u32.to_le_bytes());
        bytes.extend_from_slice(&[0, 0, 0, 0]);
        let m = decode_bitmask(&bytes).unwrap();
        assert_eq!(m.dims(), (4, 4));
        assert!(m.is_empty());
    }

    #[test]
    fn cmsk_layout_is_bit_exact() {
        let m = Bitmask::from_coords(9, 2, [(0, 0), (8, 1)]).unwrap();
        let bytes = encode_bitmask(&m);
        assert_eq!(
            bytes,
            [
                b'C',
                b'M',
                b'S',
                b'K',
                1,
                9,
                0,
                0,
                0,
                2,
                0,
                0,
                0, //
                0b1000_0000,
                0,
                0,
                0b1000_0000
            ]
        );
    }

    #[test]
    fn cmsk_padding_bits_are_zeroed_on_load() {
        let mut bytes = encode_bitmask(&Bitmask::empty(3, 1).unwrap());
        *bytes.last_mut().unwrap() = 0xff;
        let m = decode_bitmask(&bytes).unwrap();
        assert_eq!(m.count_ones(), 3);
        assert_eq!(*encode_bitmask(&m).last().unwrap(), 0b1110_0000);
    }

    #[test]
    fn cmsk_header_errors() {
        let good = encode_bitmask(&Bitmask::full(5, 5).unwrap());
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert_eq!(decode_bitmask(&bad_magic).unwrap_err().code(), "bad-magic");

        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert_eq!(
            decode_bitmask(&bad_version).unwrap_err().code(),
            "unsupported-version"
        );

        assert_eq!(
            decode_bitmask(&good[..good.len() - 1]).unwrap_err().code(),
            "truncated"
        );
        assert_eq!(decode_bitmask(&good[..7]).unwrap_err().code(), "truncated");

        let mut zero = good.clone();
        zero[5..9].copy_from_slice(&0u32.to_le_bytes());
        assert_eq!(decode_bitmask(&zero).unwrap_err().code(), "zero-dimensions");

        let mut trailing = good;
        trailing.push(0);
        assert_eq!(
            decode_bitmask(&trailing).unwrap_err().code(),
            "trailing-data"
        );
    }

    #[test]
    fn cstk_with_zero_planes_is_rejected() {
        let mut bytes = b"CSTK\x01".to_vec();
        for v in [0u32, 8, 8] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(
            decode_feature_stack(&bytes).unwrap_err().code(),
            "empty-stack"
        );
    }

    #[test]
    fn cstk_three_planes() {
        let planes: Vec<_> = (0..3)
            .map(|i| Bitmask::from_coords(8, 8, [(i, i)]).unwrap())
            .collect();
        let stack = FeatureMapStack::new(planes.clone()).unwrap();
        let bytes = encode_feature_stack(&stack);
        assert_eq!(bytes.len(), 17 + 3 * 8);
        let back = decode_feature_stack(&bytes).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.masks(), planes.as_slice());
    }

    #[test]
    fn cstk_payload_length_mismatch() {
        let stack = FeatureMapStack::new(vec![Bitmask::full(8, 8).unwrap(); 2]).unwrap();
        let bytes = encode_feature_stack(&stack);
        assert_eq!(
            decode_feature_stack(&bytes[..bytes.len() - 3])
                .unwrap_err()
                .code(),
            "truncated"
        );
        let mut long = bytes.clone();
        long.extend_from_slice(&[0; 8]);
        assert_eq!(
            decode_feature_stack(&long).unwrap_err().code(),
            "trailing-data"
        );
        let mut wrong_magic = bytes;
        wrong_magic[..4].copy_from_slice(b"CMSK");
        assert_eq!(
            decode_feature_stack(&wrong_magic).unwrap_err().code(),
            "bad-magic"
        );
    }

    #[test]
    fn stack_rejects_mixed_shapes() {
        let err = FeatureMapStack::new(vec![
            Bitmask::empty(4, 4).unwrap(),
            Bitmask::empty(4, 5).unwrap(),
        ])
        .unwrap_err();
        assert_eq!(err.code(), "parse");
    }
}
