//! WebAssembly bindings for the browser demo.
//!
//! The page supplies randomness from `crypto.getRandomValues`, so nothing
//! here touches an entropy source.

use e8kem::analysis::pe_bound;
use e8kem::estimator::{dual_cost, primal_cost, AttackCost, LweInstance};
use e8kem::params::Preset;
use e8kem::{codec, kem, Error, Params, Result};
use wasm_bindgen::prelude::*;

/// Bytes of randomness one exchange consumes.
pub const EXCHANGE_ENTROPY_BYTES: usize = kem::GEN_ENTROPY_BYTES + kem::ENCAPS_ENTROPY_BYTES;

#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct Exchange {
    pub server_key: String,
    pub client_key: String,
    pub msg1_hex: String,
    pub msg2_hex: String,
    pub msg1_bytes: usize,
    pub msg2_bytes: usize,
}

#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct Bound {
    pub log2_pe: f64,
    /// One `representative count log2tail` line per class.
    pub classes: String,
}

#[wasm_bindgen(getter_with_clone)]
#[derive(Clone, Debug)]
pub struct Security {
    pub primal: String,
    pub dual: String,
    /// Smallest of the two attacks, rounded, per regime.
    pub classical: u32,
    pub quantum: u32,
    pub plausible: u32,
}

pub fn exchange(preset: &str, entropy: &[u8]) -> Result<Exchange> {
    let params = Params::preset(preset)?;
    if entropy.len() != EXCHANGE_ENTROPY_BYTES {
        return Err(Error::Length {
            what: "exchange entropy",
            expected: EXCHANGE_ENTROPY_BYTES,
            actual: entropy.len(),
        });
    }
    let (gen_seed, enc_seed) = entropy.split_at(kem::GEN_ENTROPY_BYTES);
    let (pk, state) = kem::gen(gen_seed.try_into().unwrap(), &params);
    let msg1 = codec::encode_msg1(&pk, &params);
    let pk = codec::decode_msg1(&msg1, &params)?;
    let client = kem::encaps(&pk, enc_seed.try_into().unwrap(), &params)?;
    let msg2 = codec::encode_msg2(&client.ciphertext, &params);
    let server_key = kem::decaps(&state, &codec::decode_msg2(&msg2, &params)?)?;
    Ok(Exchange {
        server_key: server_key.to_hex(),
        client_key: client.key.to_hex(),
        msg1_hex: hex::encode(&msg1),
        msg2_hex: hex::encode(&msg2),
        msg1_bytes: msg1.len(),
        msg2_bytes: msg2.len(),
    })
}

pub fn failure_bound(preset: &str) -> Result<Bound> {
    let report = pe_bound(&Params::preset(preset)?)?;
    let classes = report
        .tails
        .iter()
        .map(|(orbit, tail)| {
            format!(
                "{:?} x{} log2tail={tail:.2}",
                orbit.representative,
                orbit.count * 32
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Bound {
        log2_pe: report.log2_pe,
        classes,
    })
}

pub fn security(preset: &str) -> Result<Security> {
    let inst = LweInstance::from_params(&Params::preset(preset)?);
    let primal = primal_cost(&inst)?;
    let dual = dual_cost(&inst)?;
    let min = |f: fn(&AttackCost) -> u32| f(&primal).min(f(&dual));
    Ok(Security {
        primal: primal.to_string(),
        dual: dual.to_string(),
        classical: min(|c| c.rounded()[0]),
        quantum: min(|c| c.rounded()[1]),
        plausible: min(|c| c.rounded()[2]),
    })
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = presets)]
pub fn presets_js() -> Vec<String> {
    Preset::ALL.iter().map(Preset::name).collect()
}

#[wasm_bindgen(js_name = entropyBytes)]
pub fn entropy_bytes_js() -> usize {
    EXCHANGE_ENTROPY_BYTES
}

#[wasm_bindgen(js_name = exchange)]
pub fn exchange_js(preset: &str, entropy: &[u8]) -> std::result::Result<Exchange, JsError> {
    exchange(preset, entropy).map_err(js)
}

#[wasm_bindgen(js_name = failureBound)]
pub fn failure_bound_js(preset: &str) -> std::result::Result<Bound, JsError> {
    failure_bound(preset).map_err(js)
}

#[wasm_bindgen(js_name = security)]
pub fn security_js(preset: &str) -> std::result::Result<Security, JsError> {
    security(preset).map_err(js)
}
