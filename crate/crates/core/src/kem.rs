//! The three-message key exchange as a passive KEM.
//!
//! ```text
//!  server                                client
//!  A = Expand(seed); s, e ← Ψ_k^d
//!  b = A·s + e            ── (seed, b) ──▶
//!                                        s', e' ← Ψ_k^d, e'' ← Ψ_k
//!                                        u = Aᵀ·s' + e'
//!                                        v = b·s' + e''
//!                         ◀── (u, r) ──  r = HelpRec(v), k = Rec(v, r)
//!  v' = u·s, k̂ = Rec(v', r)
//! ```
//!
//! Noise nonces: the server uses domain 0 with counters `0..d` for `s` and
//! `d..2d` for `e`; the client uses domain 1 with `0..d` for `s'`, `d..2d` for
//! `e'` and `2d` for `e''`. The key is the raw reconciled coset label, with no
//! hashing applied.

use crate::error::{Error, Result};
use crate::params::Params;
use crate::reconcile::{help_rec, rec, HelpHint, SharedKey};
use crate::ring::{Poly, PolyMat, PolyVec};
use crate::sampler::{
    expand_matrix, sample_cbd_poly, sample_cbd_vec, NoiseNonce, Seed, SEED_BYTES,
};

pub const GEN_ENTROPY_BYTES: usize = 64;
pub const ENCAPS_ENTROPY_BYTES: usize = 32;

const SERVER_DOMAIN: u8 = 0;
const CLIENT_DOMAIN: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub seed: Seed,
    pub b: PolyVec,
}

#[derive(Clone, Debug)]
pub struct ServerState {
    pub params: Params,
    pub seed: Seed,
    pub s: PolyVec,
    pub b: PolyVec,
}

impl ServerState {
    pub fn public_key(&self) -> PublicKey {
        PublicKey {
            seed: self.seed,
            b: self.b.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub u: PolyVec,
    pub hint: HelpHint,
}

#[derive(Clone, Debug)]
pub struct ClientOutput {
    pub ciphertext: Ciphertext,
    pub key: SharedKey,
}

/// Server-side noise, kept only by the instrumented entry points.
#[derive(Clone, Debug)]
pub struct ServerNoise {
    pub e: PolyVec,
}

/// Client-side intermediates, kept only by the instrumented entry points.
#[derive(Clone, Debug)]
pub struct ClientNoise {
    pub s_prime: PolyVec,
    pub e_prime: PolyVec,
    pub e_second: Poly,
    pub v: Poly,
}

fn check_vec(v: &PolyVec, params: &Params, what: &'static str) -> Result<()> {
    if v.len() != params.d() {
        return Err(Error::Malformed {
            what,
            reason: format!("expected {} polynomials, got {}", params.d(), v.len()),
        });
    }
    Ok(())
}

pub fn gen(entropy: &[u8; GEN_ENTROPY_BYTES], params: &Params) -> (PublicKey, ServerState) {
    let (pk, state, _) = gen_with_noise(entropy, params);
    (pk, state)
}

pub fn gen_with_noise(
    entropy: &[u8; GEN_ENTROPY_BYTES],
    params: &Params,
) -> (PublicKey, ServerState, ServerNoise) {
    let (seed_bytes, noise_bytes) = entropy.split_at(SEED_BYTES);
    let seed = Seed(seed_bytes.try_into().expect("32-byte half"));
    let noise_seed = Seed(noise_bytes.try_into().expect("32-byte half"));
    let d = params.d() as u8;

    let a = expand_matrix(&seed, params);
    let s = sample_cbd_vec(&noise_seed, NoiseNonce::new(SERVER_DOMAIN, 0), params);
    let e = sample_cbd_vec(&noise_seed, NoiseNonce::new(SERVER_DOMAIN, d), params);
    let b = a.mul_vec(&s, false, params).add(&e, params);

    let state = ServerState {
        params: *params,
        seed,
        s,
        b: b.clone(),
    };
    (PublicKey { seed, b }, state, ServerNoise { e })
}

pub fn encaps(
    pk: &PublicKey,
    entropy: &[u8; ENCAPS_ENTROPY_BYTES],
    params: &Params,
) -> Result<ClientOutput> {
    encaps_with_noise(pk, entropy, params).map(|(out, _)| out)
}

pub fn encaps_with_noise(
    pk: &PublicKey,
    entropy: &[u8; ENCAPS_ENTROPY_BYTES],
    params: &Params,
) -> Result<(ClientOutput, ClientNoise)> {
    check_vec(&pk.b, params, "public key")?;
    let noise_seed = Seed(*entropy);
    let d = params.d() as u8;

    let a: PolyMat = expand_matrix(&pk.seed, params);
    let s_prime = sample_cbd_vec(&noise_seed, NoiseNonce::new(CLIENT_DOMAIN, 0), params);
    let e_prime = sample_cbd_vec(&noise_seed, NoiseNonce::new(CLIENT_DOMAIN, d), params);
    let e_second = sample_cbd_poly(&noise_seed, NoiseNonce::new(CLIENT_DOMAIN, 2 * d), params);

    let u = a.mul_vec(&s_prime, true, params).add(&e_prime, params);
    let v = pk.b.dot(&s_prime, params).add(&e_second, params);
    let hint = help_rec(&v, params);
    let key = rec(&v, &hint, params)?;

    Ok((
        ClientOutput {
            ciphertext: Ciphertext { u, hint },
            key,
        },
        ClientNoise {
            s_prime,
            e_prime,
            e_second,
            v,
        },
    ))
}

/// The server's approximation `v' = u·s`.
pub fn server_view(state: &ServerState, ct: &Ciphertext) -> Result<Poly> {
    check_vec(&ct.u, &state.params, "ciphertext")?;
    Ok(ct.u.dot(&state.s, &state.params))
}

pub fn decaps(state: &ServerState, ct: &Ciphertext) -> Result<SharedKey> {
    let v_prime = server_view(state, ct)?;
    rec(&v_prime, &ct.hint, &state.params)
}
