//! Length-prefixed framing and the two ends of the TCP exchange.
//!
//! Each frame is a 4-byte big-endian length followed by the payload. The
//! server sends message 1, the client answers with message 2.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

use e8kem::codec::{decode_msg1, decode_msg2, encode_msg1, encode_msg2, msg1_bytes, msg2_bytes};
use e8kem::kem::{self, ENCAPS_ENTROPY_BYTES, GEN_ENTROPY_BYTES};
use e8kem::{Params, SharedKey};

use crate::CliError;

/// Largest frame either side accepts.
pub const MAX_FRAME: usize = 1 << 20;

pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len()).map_err(|_| io::Error::other("frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

pub fn read_frame(r: &mut impl Read) -> io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("frame of {len} bytes"),
        ));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// What one side saw and derived.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub msg1: Vec<u8>,
    pub msg2: Vec<u8>,
    pub key: SharedKey,
}

fn expect_size(payload: &[u8], expected: usize, what: &str) -> Result<(), CliError> {
    if payload.len() != expected {
        return Err(CliError::Io(format!(
            "{what}: expected {expected} bytes, got {}",
            payload.len()
        )));
    }
    Ok(())
}

/// Runs the server side on an accepted connection.
pub fn serve(
    stream: &mut TcpStream,
    params: &Params,
    entropy: &[u8; GEN_ENTROPY_BYTES],
) -> Result<Transcript, CliError> {
    let (pk, state) = kem::gen(entropy, params);
    let msg1 = encode_msg1(&pk, params);
    write_frame(stream, &msg1)?;
    let msg2 = read_frame(stream)?;
    expect_size(&msg2, msg2_bytes(params), "message 2")?;
    let ct = decode_msg2(&msg2, params)?;
    let key = kem::decaps(&state, &ct)?;
    Ok(Transcript { msg1, msg2, key })
}

/// Accepts one connection and serves it.
pub fn serve_one(
    listener: &TcpListener,
    params: &Params,
    entropy: &[u8; GEN_ENTROPY_BYTES],
) -> Result<Transcript, CliError> {
    let (mut stream, _) = listener.accept()?;
    serve(&mut stream, params, entropy)
}

/// Connects to a server and runs the client side.
pub fn connect(
    addr: impl ToSocketAddrs,
    params: &Params,
    entropy: &[u8; ENCAPS_ENTROPY_BYTES],
) -> Result<Transcript, CliError> {
    let mut stream = TcpStream::connect(addr)?;
    let msg1 = read_frame(&mut stream)?;
    expect_size(&msg1, msg1_bytes(params), "message 1")?;
    let pk = decode_msg1(&msg1, params)?;
    let out = kem::encaps(&pk, entropy, params)?;
    let msg2 = encode_msg2(&out.ciphertext, params);
    write_frame(&mut stream, &msg2)?;
    Ok(Transcript {
        msg1,
        msg2,
        key: out.key,
    })
}
