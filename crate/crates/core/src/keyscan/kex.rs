//! Key exchange methods and host key signature checks.
//!
//! Only the parts needed to reach and check the server's KEX reply are
//! here; no session keys are ever derived.

use num_bigint::BigUint;
use rand::RngCore;
use sha2::{Digest, Sha256, Sha512};

use super::wire::{Reader, Writer};
use crate::sshfp::HostKey;

/// RFC 3526 group 14 (2048-bit MODP) prime.
const GROUP14_PRIME: &str = "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1\
29024E088A67CC74020BBEA63B139B22514A08798E3404DD\
EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245\
E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D\
C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F\
83655D23DCA3AD961C62F356208552BB9ED529077096966D\
670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9\
DE2BCBF6955817183995497CEA956AE515D2261898FA0510\
15728E5A8AACAA68FFFFFFFFFFFFFFFF";

pub fn group14_prime() -> BigUint {
    BigUint::parse_bytes(GROUP14_PRIME.as_bytes(), 16).expect("valid prime literal")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KexMethod {
    Curve25519Sha256,
    DhGroup14Sha256,
}

impl KexMethod {
    /// Names offered by the client, in preference order.
    pub const CLIENT_NAMES: [&'static str; 3] = [
        "curve25519-sha256",
        "curve25519-sha256@libssh.org",
        "diffie-hellman-group14-sha256",
    ];

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "curve25519-sha256" | "curve25519-sha256@libssh.org" => {
                Some(KexMethod::Curve25519Sha256)
            }
            "diffie-hellman-group14-sha256" => Some(KexMethod::DhGroup14Sha256),
            _ => None,
        }
    }

    /// Generates an ephemeral key pair for this method.
    pub fn ephemeral(self) -> Ephemeral {
        match self {
            KexMethod::Curve25519Sha256 => {
                let secret = x25519_dalek::StaticSecret::random_from_rng(rand::thread_rng());
                let public = x25519_dalek::PublicKey::from(&secret).as_bytes().to_vec();
                Ephemeral {
                    method: self,
                    secret: EphemeralSecret::X25519(secret),
                    public,
                }
            }
            KexMethod::DhGroup14Sha256 => {
                let mut x = [0u8; 64];
                rand::thread_rng().fill_bytes(&mut x);
                let x = BigUint::from_bytes_be(&x);
                let e = BigUint::from(2u32).modpow(&x, &group14_prime());
                Ephemeral {
                    method: self,
                    secret: EphemeralSecret::Dh(x),
                    public: e.to_bytes_be(),
                }
            }
        }
    }

    /// Exchange hash `H` over the transcript. Ephemeral public values are
    /// strings for curve25519 and mpints for finite-field DH.
    pub fn exchange_hash(self, t: &Transcript<'_>) -> Vec<u8> {
        let mut w = Writer::new();
        w.string(t.client_version.as_bytes())
            .string(t.server_version.as_bytes())
            .string(t.client_kexinit)
            .string(t.server_kexinit)
            .string(t.host_key);
        match self {
            KexMethod::Curve25519Sha256 => w.string(t.client_public).string(t.server_public),
            KexMethod::DhGroup14Sha256 => w.mpint(t.client_public).mpint(t.server_public),
        };
        w.mpint(t.shared_secret);
        Sha256::digest(w.finish()).to_vec()
    }
}

enum EphemeralSecret {
    X25519(x25519_dalek::StaticSecret),
    Dh(BigUint),
}

pub struct Ephemeral {
    pub method: KexMethod,
    secret: EphemeralSecret,
    /// Public value: 32 curve bytes, or big-endian `e`.
    pub public: Vec<u8>,
}

impl Ephemeral {
    /// Shared secret `K` as big-endian magnitude, or `None` if the peer
    /// value is unacceptable.
    pub fn agree(&self, peer_public: &[u8]) -> Option<Vec<u8>> {
        match &self.secret {
            EphemeralSecret::X25519(secret) => {
                let peer: [u8; 32] = peer_public.try_into().ok()?;
                let shared = secret.diffie_hellman(&x25519_dalek::PublicKey::from(peer));
                shared
                    .was_contributory()
                    .then(|| shared.as_bytes().to_vec())
            }
            EphemeralSecret::Dh(x) => {
                let p = group14_prime();
                let f = BigUint::from_bytes_be(peer_public);
                if f <= BigUint::from(1u32) || f >= &p - 1u32 {
                    return None;
                }
                Some(f.modpow(x, &p).to_bytes_be())
            }
        }
    }
}

/// Inputs to the exchange hash.
pub struct Transcript<'a> {
    pub client_version: &'a str,
    pub server_version: &'a str,
    pub client_kexinit: &'a [u8],
    pub server_kexinit: &'a [u8],
    pub host_key: &'a [u8],
    pub client_public: &'a [u8],
    pub server_public: &'a [u8],
    pub shared_secret: &'a [u8],
}

/// Checks the server's signature over the exchange hash.
///
/// `None` when the key type is not one this crate can verify; `Some(false)`
/// for malformed or wrong signatures.
pub fn verify_signature(key: &HostKey, signature: &[u8], exchange_hash: &[u8]) -> Option<bool> {
    let mut sig = Reader::new(signature);
    let (Ok(sig_algo), Ok(sig_body)) = (sig.utf8(), sig.string()) else {
        return Some(false);
    };
    let mut kb = Reader::new(key.blob());
    kb.string().ok()?;
    match key.algo_name() {
        "ssh-ed25519" => {
            if sig_algo != "ssh-ed25519" {
                return Some(false);
            }
            Some(verify_ed25519(&mut kb, sig_body, exchange_hash).unwrap_or(false))
        }
        "ecdsa-sha2-nistp256" => {
            if sig_algo != "ecdsa-sha2-nistp256" {
                return Some(false);
            }
            Some(verify_p256(&mut kb, sig_body, exchange_hash).unwrap_or(false))
        }
        "ssh-rsa" => Some(verify_rsa(&mut kb, sig_algo, sig_body, exchange_hash).unwrap_or(false)),
        _ => None,
    }
}

fn verify_ed25519(kb: &mut Reader<'_>, sig: &[u8], msg: &[u8]) -> Option<bool> {
    use ed25519_dalek::Verifier;
    let pk: [u8; 32] = kb.string().ok()?.try_into().ok()?;
    let vk = ed25519_dalek::VerifyingKey::from_bytes(&pk).ok()?;
    let sig = ed25519_dalek::Signature::from_slice(sig).ok()?;
    Some(vk.verify(msg, &sig).is_ok())
}

fn verify_p256(kb: &mut Reader<'_>, sig: &[u8], msg: &[u8]) -> Option<bool> {
    use p256::ecdsa::signature::Verifier;
    if kb.string().ok()? != b"nistp256" {
        return Some(false);
    }
    let vk = p256::ecdsa::VerifyingKey::from_sec1_bytes(kb.string().ok()?).ok()?;
    let mut sr = Reader::new(sig);
    let r = left_pad::<32>(sr.mpint().ok()?)?;
    let s = left_pad::<32>(sr.mpint().ok()?)?;
    let sig = p256::ecdsa::Signature::from_scalars(r, s).ok()?;
    Some(vk.verify(msg, &sig).is_ok())
}

fn verify_rsa(kb: &mut Reader<'_>, sig_algo: &str, sig: &[u8], msg: &[u8]) -> Option<bool> {
    use rsa::{BigUint as RsaUint, Pkcs1v15Sign, RsaPublicKey};
    let e = RsaUint::from_bytes_be(kb.mpint().ok()?);
    let n = RsaUint::from_bytes_be(kb.mpint().ok()?);
    let key = RsaPublicKey::new(n, e).ok()?;
    let (scheme, digest) = match sig_algo {
        "rsa-sha2-256" => (Pkcs1v15Sign::new::<Sha256>(), Sha256::digest(msg).to_vec()),
        "rsa-sha2-512" => (Pkcs1v15Sign::new::<Sha512>(), Sha512::digest(msg).to_vec()),
        "ssh-rsa" => (
            Pkcs1v15Sign::new::<sha1::Sha1>(),
            sha1::Sha1::digest(msg).to_vec(),
        ),
        _ => return Some(false),
    };
    Some(key.verify(scheme, &digest, sig).is_ok())
}

fn left_pad<const N: usize>(bytes: &[u8]) -> Option<p256::FieldBytes> {
    if bytes.len() > N {
        return None;
    }
    let mut out = p256::FieldBytes::default();
    out[N - bytes.len()..].copy_from_slice(bytes);
    Some(out)
}
