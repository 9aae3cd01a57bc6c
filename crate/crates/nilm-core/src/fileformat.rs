//! On-disk formats: the three-line key file and the binary ciphertext
//! container. The container is little-endian throughout; the wire protocol
//! in [`crate::netpeer`] carries exactly these container bytes.

use crate::codec::{Ciphertext, ParamsEcho};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::modular::DHParams;

pub const CIPHERTEXT_MAGIC: &[u8; 4] = b"NILM";
pub const CIPHERTEXT_VERSION: u8 = 1;
/// magic + version + n + p + base_a + offset + epsilon + digit_count + block_count
pub const CIPHERTEXT_HEADER_LEN: usize = 4 + 1 + 4 + 8 + 8 + 4 + 8 + 8 + 8;

/// Key file: prime modulus, public base, secret exponent — three ASCII
/// decimal integers, one per line, LF-terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyFile {
    pub params: DHParams,
    pub secret: u64,
}

impl KeyFile {
    pub fn new(params: DHParams, secret: u64) -> Result<Self> {
        if secret < 1 || secret >= params.modulus() {
            return Err(Error::InvalidExponent);
        }
        Ok(Self { params, secret })
    }

    pub fn render(&self) -> String {
        format!(
            "{}\n{}\n{}\n",
            self.params.modulus(),
            self.params.base(),
            self.secret
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut numbers = Vec::with_capacity(3);
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value: u64 = line
                .parse()
                .map_err(|_| Error::MalformedKeyFile(format!("not a decimal integer: {line}")))?;
            numbers.push(value);
        }
        if numbers.len() != 3 {
            return Err(Error::MalformedKeyFile(format!(
                "expected 3 lines (p, x, secret), found {}",
                numbers.len()
            )));
        }
        let params = DHParams::new(numbers[0], numbers[1])?;
        Self::new(params, numbers[2])
    }
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptCiphertext("truncated".to_string()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

/// Serializes a ciphertext to the binary container format.
pub fn ciphertext_to_bytes(ct: &Ciphertext) -> Vec<u8> {
    let n = ct.echo.n as usize;
    let mut buf = Vec::with_capacity(CIPHERTEXT_HEADER_LEN + ct.blocks.len() * n * n * 8);
    buf.extend_from_slice(CIPHERTEXT_MAGIC);
    buf.push(CIPHERTEXT_VERSION);
    put_u32(&mut buf, ct.echo.n);
    put_u64(&mut buf, ct.echo.p);
    put_u64(&mut buf, ct.echo.base_a);
    put_u32(&mut buf, ct.echo.offset);
    put_f64(&mut buf, ct.echo.epsilon);
    put_u64(&mut buf, ct.digit_count);
    put_u64(&mut buf, ct.blocks.len() as u64);
    for block in &ct.blocks {
        for &entry in block.entries() {
            put_f64(&mut buf, entry);
        }
    }
    buf
}

/// Parses and validates the binary container format.
///
/// Rejects wrong magic or version, inconsistent block counts, size
/// mismatches, out-of-range parameters, and non-finite entries — all as
/// [`Error::CorruptCiphertext`].
pub fn ciphertext_from_bytes(bytes: &[u8]) -> Result<Ciphertext> {
    let corrupt = |msg: &str| Error::CorruptCiphertext(msg.to_string());
    let mut r = Reader { bytes, pos: 0 };

    if r.take(4)? != CIPHERTEXT_MAGIC {
        return Err(corrupt("bad magic"));
    }
    if r.take(1)?[0] != CIPHERTEXT_VERSION {
        return Err(corrupt("unsupported version"));
    }
    let n = r.u32()?;
    let p = r.u64()?;
    let base_a = r.u64()?;
    let offset = r.u32()?;
    let epsilon = r.f64()?;
    let digit_count = r.u64()?;
    let block_count = r.u64()?;

    if !(2..=64).contains(&n) {
        return Err(corrupt("dimension out of range [2, 64]"));
    }
    if base_a < 2 {
        return Err(corrupt("radix below 2"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(corrupt("epsilon not positive and finite"));
    }
    let expected_blocks = Ciphertext::expected_block_count(n as usize, digit_count);
    if block_count != expected_blocks {
        return Err(corrupt("block count inconsistent with digit count"));
    }
    let body = (block_count as u128) * (n as u128) * (n as u128) * 8;
    if bytes.len() as u128 != CIPHERTEXT_HEADER_LEN as u128 + body {
        return Err(corrupt("size does not match header"));
    }

    let n = n as usize;
    let mut blocks = Vec::with_capacity(block_count as usize);
    for _ in 0..block_count {
        let mut entries = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            entries.push(r.f64()?);
        }
        blocks.push(Matrix::from_vec(n, entries).map_err(|_| corrupt("non-finite entry"))?);
    }

    Ok(Ciphertext {
        echo: ParamsEcho {
            n: n as u32,
            p,
            base_a,
            offset,
            epsilon,
        },
        digit_count,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_ciphertext() -> Ciphertext {
        Ciphertext {
            echo: ParamsEcho {
                n: 2,
                p: 7,
                base_a: 10,
                offset: 1,
                epsilon: 1.0,
            },
            digit_count: 1,
            blocks: vec![Matrix::from_vec(2, vec![0.0, std::f64::consts::LN_2, 0.0, 0.0]).unwrap()],
        }
    }

    #[test]
    fn header_layout_is_pinned() {
        let bytes = ciphertext_to_bytes(&sample_ciphertext());
        let mut expected = Vec::new();
        expected.extend_from_slice(b"NILM");
        expected.push(1u8);
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&7u64.to_le_bytes());
        expected.extend_from_slice(&10u64.to_le_bytes());
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&1.0f64.to_le_bytes());
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&0.0f64.to_le_bytes());
        expected.extend_from_slice(&std::f64::consts::LN_2.to_le_bytes());
        expected.extend_from_slice(&0.0f64.to_le_bytes());
        expected.extend_from_slice(&0.0f64.to_le_bytes());
        assert_eq!(bytes, expected);
        assert_eq!(bytes.len(), CIPHERTEXT_HEADER_LEN + 4 * 8);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ct = sample_ciphertext();
        let bytes = ciphertext_to_bytes(&ct);
        let back = ciphertext_from_bytes(&bytes).unwrap();
        assert_eq!(back, ct);
        assert_eq!(ciphertext_to_bytes(&back), bytes);
    }

    #[test]
    fn reader_rejects_malformed_input() {
        let good = ciphertext_to_bytes(&sample_ciphertext());

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            ciphertext_from_bytes(&bad_magic),
            Err(Error::CorruptCiphertext(_))
        ));

        let mut bad_version = good.clone();
        bad_version[4] = 9;
        assert!(matches!(
            ciphertext_from_bytes(&bad_version),
            Err(Error::CorruptCiphertext(_))
        ));

        assert!(matches!(
            ciphertext_from_bytes(&good[..good.len() - 1]),
            Err(Error::CorruptCiphertext(_))
        ));

        let mut extended = good.clone();
        extended.push(0);
        assert!(matches!(
            ciphertext_from_bytes(&extended),
            Err(Error::CorruptCiphertext(_))
        ));

        // Claim two blocks while carrying one.
        let mut bad_count = good.clone();
        bad_count[45..53].copy_from_slice(&2u64.to_le_bytes());
        assert!(matches!(
            ciphertext_from_bytes(&bad_count),
            Err(Error::CorruptCiphertext(_))
        ));

        // NaN entry in the block payload.
        let mut bad_entry = good;
        let tail = bad_entry.len() - 8;
        bad_entry[tail..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(
            ciphertext_from_bytes(&bad_entry),
            Err(Error::CorruptCiphertext(_))
        ));
    }

    #[test]
    fn key_file_round_trip_and_validation() {
        let kf = KeyFile::new(DHParams::new(7, 4).unwrap(), 2).unwrap();
        assert_eq!(kf.render(), "7\n4\n2\n");
        assert_eq!(KeyFile::parse(&kf.render()).unwrap(), kf);

        assert!(matches!(
            KeyFile::parse("7\n4\n"),
            Err(Error::MalformedKeyFile(_))
        ));
        assert!(matches!(
            KeyFile::parse("7\nfour\n2\n"),
            Err(Error::MalformedKeyFile(_))
        ));
        assert!(matches!(
            KeyFile::parse("8\n4\n2\n"),
            Err(Error::NotPrime(8))
        ));
        assert!(matches!(
            KeyFile::parse("7\n4\n0\n"),
            Err(Error::InvalidExponent)
        ));
        assert!(matches!(
            KeyFile::parse("7\n4\n7\n"),
            Err(Error::InvalidExponent)
        ));
    }

    proptest! {
        #[test]
        fn container_round_trips_random_instances(
            n in 2u32..6,
            digit_count in 0u64..40,
            p in prop::sample::select(vec![7u64, 101, 65537]),
            seed_entries in proptest::collection::vec(-10.0f64..10.0, 0..1),
        ) {
            let _ = seed_entries;
            let blocks = Ciphertext::expected_block_count(n as usize, digit_count);
            let ct = Ciphertext {
                echo: ParamsEcho { n, p, base_a: 256, offset: 1, epsilon: 1.0 },
                digit_count,
                blocks: (0..blocks)
                    .map(|b| {
                        Matrix::from_fn(n as usize, |i, j| {
                            (b as f64 + 1.0) * 0.001 + (i * n as usize + j) as f64
                        })
                        .unwrap()
                    })
                    .collect(),
            };
            let bytes = ciphertext_to_bytes(&ct);
            let back = ciphertext_from_bytes(&bytes).unwrap();
            prop_assert_eq!(&back, &ct);
            prop_assert_eq!(ciphertext_to_bytes(&back), bytes);
        }
    }
}
