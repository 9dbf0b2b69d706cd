//! Byte formats: coefficient packing, protocol messages, key files and KATs.
//!
//! Packing is little-endian at the bit level: value `i` occupies stream bits
//! `i·w .. (i+1)·w`, and stream bit `j` is bit `j % 8` of byte `j / 8`.
//!
//! * message 1: `seed (32) ‖ pack(b_0) ‖ … ‖ pack(b_{d-1})`
//! * message 2: `pack(u_0) ‖ … ‖ pack(u_{d-1}) ‖ pack_hint(r)`
//!
//! Key and ciphertext files add a header `"E8K1" ‖ kind ‖ log2(q) ‖ k ‖ p`.
//! Protocol messages carry no header.

use std::fmt::Write as _;

use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake128;

use crate::error::{Error, Result};
use crate::kem::{
    self, Ciphertext, PublicKey, ServerState, ENCAPS_ENTROPY_BYTES, GEN_ENTROPY_BYTES,
};
use crate::params::{Params, N};
use crate::reconcile::{HelpHint, SharedKey, KEY_BYTES};
use crate::ring::{Poly, PolyVec};
use crate::sampler::{Seed, SEED_BYTES};

pub const MAGIC: &[u8; 4] = b"E8K1";
pub const HEADER_BYTES: usize = 8;

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    bits: u32,
}

impl BitWriter {
    fn with_capacity(bytes: usize) -> Self {
        Self {
            out: Vec::with_capacity(bytes),
            acc: 0,
            bits: 0,
        }
    }

    fn put(&mut self, value: u32, width: u32) {
        debug_assert!(u64::from(value) < 1u64 << width);
        self.acc |= u64::from(value) << self.bits;
        self.bits += width;
        while self.bits >= 8 {
            self.out.push(self.acc as u8);
            self.acc >>= 8;
            self.bits -= 8;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.bits > 0 {
            self.out.push(self.acc as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    acc: u64,
    bits: u32,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            pos: 0,
            acc: 0,
            bits: 0,
        }
    }

    fn take(&mut self, width: u32) -> u32 {
        while self.bits < width {
            self.acc |= u64::from(self.bytes[self.pos]) << self.bits;
            self.pos += 1;
            self.bits += 8;
        }
        let out = (self.acc & ((1u64 << width) - 1)) as u32;
        self.acc >>= width;
        self.bits -= width;
        out
    }
}

fn expect_len(bytes: &[u8], expected: usize, what: &'static str) -> Result<()> {
    if bytes.len() != expected {
        return Err(Error::Length {
            what,
            expected,
            actual: bytes.len(),
        });
    }
    Ok(())
}

pub fn poly_bytes(params: &Params) -> usize {
    N * params.log_q() as usize / 8
}

pub fn polyvec_bytes(params: &Params) -> usize {
    params.d() * poly_bytes(params)
}

pub fn hint_bytes(params: &Params) -> usize {
    params.hint_bits() / 8
}

pub fn msg1_bytes(params: &Params) -> usize {
    SEED_BYTES + polyvec_bytes(params)
}

pub fn msg2_bytes(params: &Params) -> usize {
    polyvec_bytes(params) + hint_bytes(params)
}

pub fn pack_poly(a: &Poly, params: &Params) -> Vec<u8> {
    let mut w = BitWriter::with_capacity(poly_bytes(params));
    for &c in a.coeffs() {
        w.put(u32::from(c), params.log_q());
    }
    w.finish()
}

pub fn unpack_poly(bytes: &[u8], params: &Params) -> Result<Poly> {
    expect_len(bytes, poly_bytes(params), "polynomial")?;
    let mut r = BitReader::new(bytes);
    let coeffs: Vec<u32> = (0..N).map(|_| r.take(params.log_q())).collect();
    Ok(Poly::from_coeffs(&coeffs, params).expect("log2(q)-bit fields are below q"))
}

pub fn pack_polyvec(v: &PolyVec, params: &Params) -> Vec<u8> {
    v.0.iter().flat_map(|p| pack_poly(p, params)).collect()
}

pub fn unpack_polyvec(bytes: &[u8], params: &Params) -> Result<PolyVec> {
    expect_len(bytes, polyvec_bytes(params), "polynomial vector")?;
    bytes
        .chunks(poly_bytes(params))
        .map(|chunk| unpack_poly(chunk, params))
        .collect::<Result<Vec<_>>>()
        .map(PolyVec)
}

pub fn pack_hint(hint: &HelpHint, params: &Params) -> Vec<u8> {
    let width = params.rec_rate();
    let mut w = BitWriter::with_capacity(hint_bytes(params));
    for block in &hint.blocks {
        for &c in block {
            w.put(u32::from(c), width);
        }
    }
    w.finish()
}

pub fn unpack_hint(bytes: &[u8], params: &Params) -> Result<HelpHint> {
    expect_len(bytes, hint_bytes(params), "hint")?;
    let width = params.rec_rate();
    let mut r = BitReader::new(bytes);
    let mut hint = HelpHint::default();
    for block in hint.blocks.iter_mut() {
        for c in block.iter_mut() {
            *c = r.take(width) as u16;
        }
    }
    Ok(hint)
}

pub fn encode_msg1(pk: &PublicKey, params: &Params) -> Vec<u8> {
    let mut out = Vec::with_capacity(msg1_bytes(params));
    out.extend_from_slice(pk.seed.as_bytes());
    out.extend(pack_polyvec(&pk.b, params));
    out
}

pub fn decode_msg1(bytes: &[u8], params: &Params) -> Result<PublicKey> {
    expect_len(bytes, msg1_bytes(params), "message 1")?;
    let (seed, packed) = bytes.split_at(SEED_BYTES);
    Ok(PublicKey {
        seed: Seed(seed.try_into().expect("seed length")),
        b: unpack_polyvec(packed, params)?,
    })
}

pub fn encode_msg2(ct: &Ciphertext, params: &Params) -> Vec<u8> {
    let mut out = Vec::with_capacity(msg2_bytes(params));
    out.extend(pack_polyvec(&ct.u, params));
    out.extend(pack_hint(&ct.hint, params));
    out
}

pub fn decode_msg2(bytes: &[u8], params: &Params) -> Result<Ciphertext> {
    expect_len(bytes, msg2_bytes(params), "message 2")?;
    let (u, hint) = bytes.split_at(polyvec_bytes(params));
    Ok(Ciphertext {
        u: unpack_polyvec(u, params)?,
        hint: unpack_hint(hint, params)?,
    })
}

/// Secret key payload: `seed ‖ pack(s) ‖ pack(b)`.
pub fn encode_secret(state: &ServerState) -> Vec<u8> {
    let params = &state.params;
    let mut out = Vec::with_capacity(SEED_BYTES + 2 * polyvec_bytes(params));
    out.extend_from_slice(state.seed.as_bytes());
    out.extend(pack_polyvec(&state.s, params));
    out.extend(pack_polyvec(&state.b, params));
    out
}

pub fn decode_secret(bytes: &[u8], params: &Params) -> Result<ServerState> {
    let vec_len = polyvec_bytes(params);
    expect_len(bytes, SEED_BYTES + 2 * vec_len, "secret key")?;
    let (seed, rest) = bytes.split_at(SEED_BYTES);
    let (s, b) = rest.split_at(vec_len);
    Ok(ServerState {
        params: *params,
        seed: Seed(seed.try_into().expect("seed length")),
        s: unpack_polyvec(s, params)?,
        b: unpack_polyvec(b, params)?,
    })
}

/// What a binary file holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileKind {
    PublicKey,
    SecretKey,
    Ciphertext,
    SharedKey,
}

impl FileKind {
    fn tag(self) -> u8 {
        match self {
            FileKind::PublicKey => b'P',
            FileKind::SecretKey => b'S',
            FileKind::Ciphertext => b'C',
            FileKind::SharedKey => b'K',
        }
    }
}

pub fn write_file(kind: FileKind, params: &Params, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + payload.len());
    out.extend_from_slice(MAGIC);
    out.push(kind.tag());
    out.push(params.log_q() as u8);
    out.push(params.k() as u8);
    out.push(params.p() as u8);
    out.extend_from_slice(payload);
    out
}

/// Parses a file header, returning the parameters and the payload.
pub fn read_file(bytes: &[u8], kind: FileKind) -> Result<(Params, &[u8])> {
    if bytes.len() < HEADER_BYTES || &bytes[..4] != MAGIC {
        return Err(Error::Malformed {
            what: "file",
            reason: "missing E8K1 header".into(),
        });
    }
    if bytes[4] != kind.tag() {
        return Err(Error::Malformed {
            what: "file",
            reason: format!("expected a {kind:?} file"),
        });
    }
    if bytes[5] >= 32 {
        return Err(Error::Malformed {
            what: "file",
            reason: format!("modulus exponent {} out of range", bytes[5]),
        });
    }
    let params = Params::new(1u32 << bytes[5], u32::from(bytes[6]), u32::from(bytes[7]))?;
    Ok((params, &bytes[HEADER_BYTES..]))
}

/// One known-answer record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KatRecord {
    pub params: Params,
    /// Server entropy (64 bytes) followed by client entropy (32 bytes).
    pub seed: Vec<u8>,
    pub pk: Vec<u8>,
    pub sk: Vec<u8>,
    pub msg2: Vec<u8>,
    pub key: Vec<u8>,
}

pub const KAT_SEED_BYTES: usize = GEN_ENTROPY_BYTES + ENCAPS_ENTROPY_BYTES;

/// Seed of the `index`-th record of a generated KAT set.
pub fn kat_seed(index: u32) -> [u8; KAT_SEED_BYTES] {
    let mut xof = Shake128::default();
    xof.update(b"e8kem-kat");
    xof.update(&index.to_le_bytes());
    let mut seed = [0u8; KAT_SEED_BYTES];
    xof.finalize_xof().read(&mut seed);
    seed
}

const KAT_FIELDS: [&str; 6] = ["params", "seed", "pk", "sk", "msg2", "key"];

impl KatRecord {
    /// Runs the full exchange from `seed` and records every output.
    pub fn generate(params: &Params, seed: &[u8; KAT_SEED_BYTES]) -> Result<Self> {
        let (gen_entropy, enc_entropy) = seed.split_at(GEN_ENTROPY_BYTES);
        let (pk, state) = kem::gen(gen_entropy.try_into().expect("64 bytes"), params);
        let out = kem::encaps(&pk, enc_entropy.try_into().expect("32 bytes"), params)?;
        let server_key = kem::decaps(&state, &out.ciphertext)?;
        if server_key != out.key {
            return Err(Error::Malformed {
                what: "KAT exchange",
                reason: "keys disagree".into(),
            });
        }
        Ok(Self {
            params: *params,
            seed: seed.to_vec(),
            pk: encode_msg1(&pk, params),
            sk: encode_secret(&state),
            msg2: encode_msg2(&out.ciphertext, params),
            key: out.key.0.to_vec(),
        })
    }

    /// Recomputes the record from its seed. Returns the names of mismatched fields.
    pub fn replay(&self) -> Result<Vec<&'static str>> {
        let seed: [u8; KAT_SEED_BYTES] =
            self.seed.as_slice().try_into().map_err(|_| Error::Length {
                what: "KAT seed",
                expected: KAT_SEED_BYTES,
                actual: self.seed.len(),
            })?;
        let fresh = Self::generate(&self.params, &seed)?;
        let mut bad = Vec::new();
        if fresh.pk != self.pk {
            bad.push("pk");
        }
        if fresh.sk != self.sk {
            bad.push("sk");
        }
        if fresh.msg2 != self.msg2 {
            bad.push("msg2");
        }
        if fresh.key != self.key {
            bad.push("key");
        }
        Ok(bad)
    }

    pub fn shared_key(&self) -> Option<SharedKey> {
        let bytes: [u8; KEY_BYTES] = self.key.as_slice().try_into().ok()?;
        Some(SharedKey(bytes))
    }
}

fn params_bytes(params: &Params) -> [u8; 3] {
    [params.log_q() as u8, params.k() as u8, params.p() as u8]
}

/// Serializes records as `name=hex` lines, one blank line between records.
pub fn kat_write(records: &[KatRecord]) -> String {
    let mut out = String::new();
    for (i, record) in records.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let fields: [(&str, &[u8]); 6] = [
            ("params", &params_bytes(&record.params)),
            ("seed", &record.seed),
            ("pk", &record.pk),
            ("sk", &record.sk),
            ("msg2", &record.msg2),
            ("key", &record.key),
        ];
        for (name, value) in fields {
            writeln!(out, "{name}={}", hex::encode(value)).expect("writing to a String");
        }
    }
    out
}

pub fn kat_read(text: &str) -> Result<Vec<KatRecord>> {
    let malformed = |reason: String| Error::Malformed {
        what: "KAT file",
        reason,
    };
    let mut records = Vec::new();
    let mut current: Vec<Option<Vec<u8>>> = vec![None; KAT_FIELDS.len()];
    let mut started = false;

    let finish = |fields: &mut Vec<Option<Vec<u8>>>, records: &mut Vec<KatRecord>| -> Result<()> {
        let mut take = |name: &str| {
            let idx = KAT_FIELDS
                .iter()
                .position(|f| *f == name)
                .expect("known field");
            fields[idx]
                .take()
                .ok_or_else(|| malformed(format!("record {} lacks `{name}`", records.len())))
        };
        let p = take("params")?;
        if p.len() != 3 || p[0] >= 32 {
            return Err(malformed(
                "params must be three bytes: log2(q), k, p".into(),
            ));
        }
        let params = Params::new(1u32 << p[0], u32::from(p[1]), u32::from(p[2]))?;
        let record = KatRecord {
            params,
            seed: take("seed")?,
            pk: take("pk")?,
            sk: take("sk")?,
            msg2: take("msg2")?,
            key: take("key")?,
        };
        records.push(record);
        Ok(())
    };

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            if started {
                finish(&mut current, &mut records)?;
                started = false;
            }
            continue;
        }
        let (name, value) = line
            .split_once('=')
            .ok_or_else(|| malformed(format!("line {}: expected name=hex", lineno + 1)))?;
        let idx = KAT_FIELDS
            .iter()
            .position(|f| *f == name)
            .ok_or_else(|| malformed(format!("line {}: unknown key `{name}`", lineno + 1)))?;
        if value.chars().any(|c| c.is_ascii_uppercase()) {
            return Err(malformed(format!(
                "line {}: hex must be lowercase",
                lineno + 1
            )));
        }
        let bytes =
            hex::decode(value).map_err(|e| malformed(format!("line {}: {e}", lineno + 1)))?;
        if current[idx].replace(bytes).is_some() {
            return Err(malformed(format!(
                "line {}: duplicate key `{name}`",
                lineno + 1
            )));
        }
        started = true;
    }
    if started {
        finish(&mut current, &mut records)?;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{BLOCKS, BLOCK_DIM};

    #[test]
    fn zero_poly_packs_to_zero_bytes() {
        let params = Params::default();
        let bytes = pack_poly(&Poly::zero(), &params);
        assert_eq!(bytes, vec![0u8; 352]);
        assert_eq!(unpack_poly(&bytes, &params).unwrap(), Poly::zero());
    }

    #[test]
    fn coefficient_bit_layout() {
        let params = Params::default();
        let bytes = pack_poly(&Poly::constant(2047, &params), &params);
        assert_eq!(&bytes[..2], &[0xFF, 0x07]);
        assert!(bytes[2..].iter().all(|&b| b == 0));
        let bytes = pack_poly(&Poly::monomial(1, 1, &params), &params);
        assert_eq!(&bytes[..2], &[0x00, 0x08]);
    }

    #[test]
    fn truncated_input_is_rejected() {
        let params = Params::default();
        let err = unpack_poly(&[0u8; 351], &params).unwrap_err();
        assert_eq!(
            err,
            Error::Length {
                what: "polynomial",
                expected: 352,
                actual: 351
            }
        );
        assert!(unpack_hint(&[0u8; 127], &params).is_err());
        assert!(decode_msg1(&[0u8; 1087], &params).is_err());
        assert!(decode_msg2(&[0u8; 1185], &params).is_err());
    }

    #[test]
    fn hint_bit_layout() {
        let params = Params::default();
        assert_eq!(pack_hint(&HelpHint::default(), &params), vec![0u8; 128]);
        let mut hint = HelpHint::default();
        hint.blocks[0][0] = 15;
        let bytes = pack_hint(&hint, &params);
        assert_eq!(bytes[0], 0x0F);
        assert!(bytes[1..].iter().all(|&b| b == 0));
        hint.blocks[0][1] = 1;
        assert_eq!(pack_hint(&hint, &params)[0], 0x1F);
        assert_eq!(
            unpack_hint(&pack_hint(&hint, &params), &params).unwrap(),
            hint
        );
    }

    #[test]
    fn default_message_sizes() {
        let params = Params::default();
        assert_eq!(msg1_bytes(&params), 1088);
        assert_eq!(msg2_bytes(&params), 1056 + 128);
        assert_eq!(hint_bytes(&params) * 8, BLOCKS * BLOCK_DIM * 4);
    }

    #[test]
    fn file_header_round_trip() {
        let params = Params::new(4096, 4, 3).unwrap();
        let file = write_file(FileKind::Ciphertext, &params, &[1, 2, 3]);
        assert_eq!(&file[..4], b"E8K1");
        let (back, payload) = read_file(&file, FileKind::Ciphertext).unwrap();
        assert_eq!(back, params);
        assert_eq!(payload, &[1, 2, 3]);
        assert!(read_file(&file, FileKind::PublicKey).is_err());
        assert!(read_file(b"E8K", FileKind::PublicKey).is_err());
        assert!(read_file(b"XXXXC\x0c\x04\x03", FileKind::Ciphertext).is_err());
    }

    #[test]
    fn kat_seeds_are_distinct_and_stable() {
        assert_eq!(kat_seed(0), kat_seed(0));
        assert_ne!(kat_seed(0), kat_seed(1));
    }

    #[test]
    fn empty_kat() {
        assert_eq!(kat_write(&[]), "");
        assert_eq!(kat_read("").unwrap(), vec![]);
    }

    #[test]
    fn kat_round_trip_and_replay() {
        let params = Params::default();
        let seed: [u8; KAT_SEED_BYTES] = std::array::from_fn(|i| i as u8);
        let record = KatRecord::generate(&params, &seed).unwrap();
        let text = kat_write(std::slice::from_ref(&record));
        let back = kat_read(&text).unwrap();
        assert_eq!(back, vec![record.clone()]);
        assert!(back[0].replay().unwrap().is_empty());

        let two = kat_write(&[record.clone(), record.clone()]);
        assert_eq!(kat_read(&two).unwrap().len(), 2);

        let mut tampered = record;
        tampered.key[0] ^= 1;
        assert_eq!(tampered.replay().unwrap(), vec!["key"]);
    }

    #[test]
    fn kat_rejects_bad_input() {
        assert!(kat_read("color=00\n").is_err());
        assert!(kat_read("key=zz\n").is_err());
        assert!(kat_read("key=AB\n").is_err());
        assert!(kat_read("key=00\nkey=00\n").is_err());
        assert!(kat_read("key=00\n").is_err());
        assert!(kat_read("no equals sign\n").is_err());
    }
}
