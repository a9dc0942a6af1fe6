//! Keyed variable-length expansion over `F_q` and the stream cipher built on
//! it: `Enc(k, m) = (r, m + expand(k, r, |m|))`.
//!
//! The expansion runs a fixed-output PRF in counter mode over
//! `nonce || counter` (counter as 8 little-endian bytes) and maps each
//! 8-byte little-endian word to `F_q` by rejection sampling, so every output
//! symbol is uniform given uniform PRF output.

use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::field::{FieldElement, FieldError, PrimeField, SeededPrg};

pub const KEY_BYTES: usize = 32;
pub const NONCE_BYTES: usize = 16;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CipherKey([u8; KEY_BYTES]);

impl CipherKey {
    pub fn from_bytes(bytes: [u8; KEY_BYTES]) -> Self {
        Self(bytes)
    }

    pub fn random(prg: &mut SeededPrg) -> Self {
        let mut k = [0u8; KEY_BYTES];
        prg.fill_bytes(&mut k);
        Self(k)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_BYTES] {
        &self.0
    }
}

impl std::fmt::Debug for CipherKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("CipherKey(..)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Nonce([u8; NONCE_BYTES]);

impl Nonce {
    pub fn from_bytes(bytes: [u8; NONCE_BYTES]) -> Self {
        Self(bytes)
    }

    pub fn random(prg: &mut SeededPrg) -> Self {
        let mut r = [0u8; NONCE_BYTES];
        prg.fill_bytes(&mut r);
        Self(r)
    }

    pub fn as_bytes(&self) -> &[u8; NONCE_BYTES] {
        &self.0
    }
}

/// Field symbols needed to carry `bits` bits when each symbol holds
/// `floor(log2 q)` bits.
pub fn symbols_for_bits(field: PrimeField, bits: u32) -> u64 {
    let per = (63 - field.modulus().leading_zeros()).max(1) as u64;
    (bits as u64).div_ceil(per)
}

/// Field symbols to transport one key and one nonce.
pub fn key_material_symbols(field: PrimeField) -> u64 {
    symbols_for_bits(field, ((KEY_BYTES + NONCE_BYTES) * 8) as u32)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub nonce: Nonce,
    pub body: Vec<FieldElement>,
}

impl Ciphertext {
    /// Nonce bytes, then each body element as 8 little-endian bytes.
    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(NONCE_BYTES + 8 * self.body.len());
        out.extend_from_slice(&self.nonce.0);
        for e in &self.body {
            out.extend_from_slice(&e.value().to_le_bytes());
        }
        out
    }

    pub fn from_wire(field: PrimeField, bytes: &[u8]) -> Option<Self> {
        if bytes.len() < NONCE_BYTES || !(bytes.len() - NONCE_BYTES).is_multiple_of(8) {
            return None;
        }
        let nonce = Nonce(bytes[..NONCE_BYTES].try_into().ok()?);
        let body = bytes[NONCE_BYTES..]
            .chunks_exact(8)
            .map(|c| {
                let v = u64::from_le_bytes(c.try_into().unwrap());
                (v < field.modulus()).then(|| field.elem(v))
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Self { nonce, body })
    }
}

/// PRF used by the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrfProfile {
    /// HMAC-SHA256 keyed with the cipher key.
    #[default]
    HmacSha256,
    /// Seedable mixing function for reproducible tests. Not a PRF in any
    /// cryptographic sense; never use it to protect data.
    InsecureTest,
}

impl PrfProfile {
    fn block(self, key: &CipherKey, nonce: &Nonce, counter: u64) -> [u8; 32] {
        match self {
            PrfProfile::HmacSha256 => {
                let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(&key.0)
                    .expect("HMAC accepts any key length");
                mac.update(&nonce.0);
                mac.update(&counter.to_le_bytes());
                mac.finalize().into_bytes().into()
            }
            PrfProfile::InsecureTest => {
                let mut state = counter ^ 0x9e37_79b9_7f4a_7c15;
                for c in key.0.chunks_exact(8).chain(nonce.0.chunks_exact(8)) {
                    state = splitmix(state ^ u64::from_le_bytes(c.try_into().unwrap()));
                }
                let mut out = [0u8; 32];
                for c in out.chunks_exact_mut(8) {
                    state = splitmix(state);
                    c.copy_from_slice(&state.to_le_bytes());
                }
                out
            }
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamCipher {
    field: PrimeField,
    prf: PrfProfile,
}

impl StreamCipher {
    pub fn new(field: PrimeField, prf: PrfProfile) -> Self {
        Self { field, prf }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// `len` pseudorandom field elements determined by `(k, r)`.
    pub fn expand(&self, k: &CipherKey, r: &Nonce, len: usize) -> Vec<FieldElement> {
        let mut out = Vec::with_capacity(len);
        let mut counter = 0u64;
        while out.len() < len {
            let block = self.prf.block(k, r, counter);
            counter += 1;
            for w in block.chunks_exact(8) {
                if out.len() == len {
                    break;
                }
                let raw = u64::from_le_bytes(w.try_into().unwrap());
                if let Some(v) = self.field.accept_raw(raw) {
                    out.push(self.field.elem(v));
                }
            }
        }
        out
    }

    /// Encrypts under a fresh nonce drawn from `prg`.
    pub fn encrypt(&self, k: &CipherKey, m: &[FieldElement], prg: &mut SeededPrg) -> Ciphertext {
        self.encrypt_with_nonce(k, Nonce::random(prg), m)
    }

    pub fn encrypt_with_nonce(&self, k: &CipherKey, nonce: Nonce, m: &[FieldElement]) -> Ciphertext {
        let z = self.expand(k, &nonce, m.len());
        Ciphertext {
            nonce,
            body: m.iter().zip(z).map(|(&a, b)| a + b).collect(),
        }
    }

    /// `body - expand(k, nonce, |body|)`. A wrong key yields unrelated
    /// field elements; there is no integrity check.
    pub fn decrypt(&self, k: &CipherKey, c: &Ciphertext) -> Result<Vec<FieldElement>, FieldError> {
        if let Some(e) = c.body.iter().find(|e| e.field() != self.field) {
            return Err(FieldError::FieldMismatch {
                left: self.field.modulus(),
                right: e.field().modulus(),
            });
        }
        let z = self.expand(k, &c.nonce, c.body.len());
        Ok(c.body.iter().zip(z).map(|(&a, b)| a - b).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn f(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn ciphers(q: u64) -> [StreamCipher; 2] {
        [
            StreamCipher::new(f(q), PrfProfile::HmacSha256),
            StreamCipher::new(f(q), PrfProfile::InsecureTest),
        ]
    }

    #[test]
    fn expand_is_deterministic() {
        let mut prg = SeededPrg::new(1);
        for c in ciphers(10007) {
            let k = CipherKey::random(&mut prg);
            let r = Nonce::random(&mut prg);
            assert_eq!(c.expand(&k, &r, 100), c.expand(&k, &r, 100));
            assert!(c.expand(&k, &r, 0).is_empty());
            // Prefix property of counter mode.
            assert_eq!(c.expand(&k, &r, 7)[..], c.expand(&k, &r, 100)[..7]);
        }
    }

    #[test]
    fn nonces_separate_streams() {
        let mut prg = SeededPrg::new(2);
        for c in ciphers(5) {
            let k = CipherKey::random(&mut prg);
            let mut seen = HashSet::new();
            let mut equal = 0;
            for _ in 0..1000 {
                let r1 = Nonce::random(&mut prg);
                let r2 = Nonce::random(&mut prg);
                let (a, b) = (c.expand(&k, &r1, 64), c.expand(&k, &r2, 64));
                if a == b {
                    equal += 1;
                }
                seen.insert(a);
            }
            assert_eq!(equal, 0);
            assert_eq!(seen.len(), 1000);
        }
    }

    #[test]
    fn roundtrip_and_masking() {
        let mut prg = SeededPrg::new(3);
        for q in [2u64, 7, 10007, 18446744073709551557] {
            for c in ciphers(q) {
                let k = CipherKey::random(&mut prg);
                for len in [0usize, 1, 17, 4096] {
                    let m = prg.sample_vec(f(q), len);
                    let ct = c.encrypt(&k, &m, &mut prg);
                    assert_eq!(ct.body.len(), len);
                    assert_eq!(c.decrypt(&k, &ct).unwrap(), m);
                    let z = c.expand(&k, &ct.nonce, len);
                    let diff: Vec<_> = ct.body.iter().zip(&m).map(|(&a, &b)| a - b).collect();
                    assert_eq!(diff, z);
                }
            }
        }
    }

    #[test]
    fn encryption_is_randomized() {
        let mut prg = SeededPrg::new(4);
        let c = StreamCipher::new(f(10007), PrfProfile::HmacSha256);
        let k = CipherKey::random(&mut prg);
        let m = prg.sample_vec(c.field(), 32);
        let a = c.encrypt(&k, &m, &mut prg);
        let b = c.encrypt(&k, &m, &mut prg);
        assert_ne!(a.nonce, b.nonce);
        assert_ne!(a.body, b.body);
    }

    #[test]
    fn wrong_key_and_zero_body() {
        let mut prg = SeededPrg::new(5);
        let fq = f(10007);
        let c = StreamCipher::new(fq, PrfProfile::HmacSha256);
        let k1 = CipherKey::random(&mut prg);
        let k2 = CipherKey::random(&mut prg);
        let m = prg.sample_vec(fq, 64);
        let ct = c.encrypt(&k1, &m, &mut prg);
        assert_ne!(c.decrypt(&k2, &ct).unwrap(), m);
        let zero = Ciphertext {
            nonce: ct.nonce,
            body: vec![fq.zero(); 10],
        };
        let neg: Vec<_> = c.expand(&k1, &ct.nonce, 10).into_iter().map(|v| -v).collect();
        assert_eq!(c.decrypt(&k1, &zero).unwrap(), neg);
        let other = Ciphertext {
            nonce: ct.nonce,
            body: vec![f(7).one()],
        };
        assert_eq!(
            c.decrypt(&k1, &other),
            Err(FieldError::FieldMismatch {
                left: 10007,
                right: 7
            })
        );
    }

    #[test]
    fn wire_layout() {
        let mut prg = SeededPrg::new(6);
        let fq = f(97);
        let c = StreamCipher::new(fq, PrfProfile::InsecureTest);
        let k = CipherKey::random(&mut prg);
        let ct = c.encrypt(&k, &prg.sample_vec(fq, 3), &mut prg);
        let w = ct.to_wire();
        assert_eq!(w.len(), NONCE_BYTES + 24);
        assert_eq!(&w[..NONCE_BYTES], ct.nonce.as_bytes());
        assert_eq!(
            u64::from_le_bytes(w[NONCE_BYTES..NONCE_BYTES + 8].try_into().unwrap()),
            ct.body[0].value()
        );
        assert_eq!(Ciphertext::from_wire(fq, &w), Some(ct));
        assert_eq!(Ciphertext::from_wire(fq, &w[..NONCE_BYTES + 3]), None);
    }

    #[test]
    fn key_transport_cost() {
        assert_eq!(symbols_for_bits(f(2), 256), 256);
        assert_eq!(symbols_for_bits(f(10007), 256), 20);
        assert_eq!(key_material_symbols(f(18446744073709551557)), 7);
    }

    fn chi_square(counts: &[u64], total: u64) -> f64 {
        let e = total as f64 / counts.len() as f64;
        counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
    }

    #[test]
    fn expand_uniformity_smoke() {
        let mut prg = SeededPrg::new(7);
        for q in [5u64, 10007] {
            for c in ciphers(q) {
                let k = CipherKey::random(&mut prg);
                let r = Nonce::random(&mut prg);
                let n = 200_000;
                let mut counts = vec![0u64; q as usize];
                for v in c.expand(&k, &r, n) {
                    counts[v.value() as usize] += 1;
                }
                let dof = (q - 1) as f64;
                let stat = chi_square(&counts, n as u64);
                assert!(stat < dof + 6.0 * (2.0 * dof).sqrt() + 10.0, "q={q} chi2={stat}");
            }
        }
    }
}
