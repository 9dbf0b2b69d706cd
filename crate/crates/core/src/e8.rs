//! E8 lattice geometry.
//!
//! `E8 = D8 ∪ (D8 + g)` with `g = (1/2, …, 1/2)` and `D8` the integer vectors
//! of even coordinate sum. Everything here is exact integer arithmetic. Points
//! of the unit lattice are carried in doubled coordinates (`2λ ∈ Z^8`); points
//! of a scaled lattice `s·E8` with even `s` are plain integer vectors.
//!
//! Conventions (not dictated by the lattice itself, but normative for the wire
//! format):
//!
//! * rounding sends halves up;
//! * the D8 parity fix moves the coordinate with the largest rounding error to
//!   its second-nearest integer, lowest index first on ties;
//! * when the D8 candidate and the glue-coset candidate are equally close, the
//!   one whose residual `x - candidate` is lexicographically smaller wins. The
//!   rule only looks at residuals, so the quantizer commutes exactly with
//!   translations by lattice points;
//! * hint labels are basis coordinates mod `2^(p-1)`;
//! * key labels use the D8 glue construction described at [`key_label`].

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::params::{Params, BLOCK_DIM};

pub type Coords = [i64; BLOCK_DIM];

/// A point `coords / den` of `Q^8`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Block8 {
    pub coords: Coords,
    pub den: i64,
}

impl Block8 {
    pub fn new(coords: Coords, den: i64) -> Self {
        assert!(den > 0, "denominator must be positive");
        Self { coords, den }
    }

    pub fn integer(coords: Coords) -> Self {
        Self::new(coords, 1)
    }

    /// Coordinates scaled to denominator `2`, if exactly representable.
    pub fn doubled(&self) -> Option<Coords> {
        let mut out = [0i64; BLOCK_DIM];
        for (dst, &c) in out.iter_mut().zip(&self.coords) {
            let twice = 2 * c;
            if twice % self.den != 0 {
                return None;
            }
            *dst = twice / self.den;
        }
        Some(out)
    }

    /// Value equality across denominators.
    pub fn same_point(&self, other: &Block8) -> bool {
        self.coords
            .iter()
            .zip(&other.coords)
            .all(|(&a, &b)| a * other.den == b * self.den)
    }
}

/// Generator matrix of E8 (rows) and its inverse, both doubled to integers.
#[derive(Debug)]
pub struct E8Basis {
    /// `2E`.
    pub doubled: [[i64; 8]; 8],
    /// `2E^{-1}`.
    pub inverse_doubled: [[i64; 8]; 8],
}

impl E8Basis {
    pub fn get() -> &'static E8Basis {
        static BASIS: OnceLock<E8Basis> = OnceLock::new();
        BASIS.get_or_init(|| {
            let mut doubled = [[0i64; 8]; 8];
            doubled[0][0] = 4;
            for (i, row) in doubled.iter_mut().enumerate().take(7).skip(1) {
                row[i - 1] = -2;
                row[i] = 2;
            }
            doubled[7] = [1; 8];

            // Back substitution of z·E = λ gives
            //   z_7 = 2λ_7
            //   z_j = Σ_{t=j}^{6} λ_t - (7 - j)λ_7       (1 ≤ j ≤ 6)
            //   z_0 = (Σ_{t=0}^{6} λ_t - 7λ_7) / 2
            let mut inverse_doubled = [[0i64; 8]; 8];
            for row in inverse_doubled.iter_mut().take(7) {
                row[0] = 1;
            }
            inverse_doubled[7][0] = -7;
            for j in 1..7 {
                for row in inverse_doubled.iter_mut().take(7).skip(j) {
                    row[j] = 2;
                }
                inverse_doubled[7][j] = -2 * (7 - j as i64);
            }
            inverse_doubled[7][7] = 4;
            E8Basis {
                doubled,
                inverse_doubled,
            }
        })
    }
}

/// The 240 Voronoi-relevant vectors of E8, in doubled coordinates.
#[derive(Debug)]
pub struct RelevantVectors {
    /// `(±1, ±1, 0^6)` patterns, 112 of them.
    pub type1: Vec<Coords>,
    /// `(±1/2)^8` with an even number of minus signs, 128 of them.
    pub type2: Vec<Coords>,
}

impl RelevantVectors {
    pub fn get() -> &'static RelevantVectors {
        static VECTORS: OnceLock<RelevantVectors> = OnceLock::new();
        VECTORS.get_or_init(|| {
            let mut type1 = Vec::with_capacity(112);
            for a in 0..8 {
                for b in a + 1..8 {
                    for (sa, sb) in [(2, 2), (2, -2), (-2, 2), (-2, -2)] {
                        let mut v = [0i64; 8];
                        v[a] = sa;
                        v[b] = sb;
                        type1.push(v);
                    }
                }
            }
            let mut type2 = Vec::with_capacity(128);
            for mask in 0u32..256 {
                if mask.count_ones() % 2 == 0 {
                    let mut v = [1i64; 8];
                    for (i, c) in v.iter_mut().enumerate() {
                        if mask >> i & 1 == 1 {
                            *c = -1;
                        }
                    }
                    type2.push(v);
                }
            }
            RelevantVectors { type1, type2 }
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &Coords> {
        self.type1.iter().chain(&self.type2)
    }
}

/// Whether an integer residual lies in the closed Voronoi cell of `scale·E8`.
///
/// Checks `⟨r, s·v⟩ ≤ ‖s·v‖²/2` for all 240 relevant vectors `v`. In doubled
/// coordinates `v2 = 2v` this is `⟨r, v2⟩ ≤ 2s`.
pub fn in_voronoi_scaled(residual: &Coords, scale: i64) -> bool {
    RelevantVectors::get()
        .iter()
        .all(|v| dot(residual, v) <= 2 * scale)
}

pub(crate) fn dot(a: &Coords, b: &Coords) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &Coords) -> i64 {
    dot(a, a)
}

/// Nearest point of `s·D8` to `x`, for even `s > 0`.
fn decode_d8(x: &Coords, s: i64) -> Coords {
    let half = s / 2;
    let mut point = [0i64; BLOCK_DIM];
    let mut errors = [0i64; BLOCK_DIM];
    let mut parity = 0i64;
    for i in 0..BLOCK_DIM {
        let f = (x[i] + half).div_euclid(s);
        point[i] = f;
        errors[i] = x[i] - f * s;
        parity += f;
    }
    if parity.rem_euclid(2) == 1 {
        let mut worst = 0;
        for i in 1..BLOCK_DIM {
            if errors[i].abs() > errors[worst].abs() {
                worst = i;
            }
        }
        point[worst] += if errors[worst] < 0 { -1 } else { 1 };
    }
    point.map(|f| f * s)
}

/// Nearest point of `s·E8` to the integer vector `x`. `s` must be even.
pub fn nearest_scaled(x: &Coords, s: i64) -> Coords {
    debug_assert!(s > 0 && s % 2 == 0);
    let half = s / 2;
    let d8 = decode_d8(x, s);
    let shifted = x.map(|c| c - half);
    let coset = decode_d8(&shifted, s).map(|c| c + half);

    let r_d8 = sub(x, &d8);
    let r_coset = sub(x, &coset);
    match norm2(&r_d8).cmp(&norm2(&r_coset)) {
        std::cmp::Ordering::Less => d8,
        std::cmp::Ordering::Greater => coset,
        std::cmp::Ordering::Equal => {
            if r_d8 <= r_coset {
                d8
            } else {
                coset
            }
        }
    }
}

pub(crate) fn sub(a: &Coords, b: &Coords) -> Coords {
    let mut out = [0i64; BLOCK_DIM];
    for i in 0..BLOCK_DIM {
        out[i] = a[i] - b[i];
    }
    out
}

/// Closest point of E8 to an arbitrary rational point, returned with `den = 2`.
pub fn cvp_e8(x: &Block8) -> Block8 {
    let scaled = nearest_scaled(&x.coords.map(|c| 2 * c), 2 * x.den);
    Block8::new(scaled.map(|c| c / x.den), 2)
}

/// `scale · Q_E8(x / scale)` for an integer point and even scale.
pub fn quantize_scaled(x: &Coords, scale: i64) -> Result<Coords> {
    if scale <= 0 || scale % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "lattice scale {scale} must be a positive even integer"
        )));
    }
    Ok(nearest_scaled(x, scale))
}

/// Basis coordinates `z` with `z·E = λ`, for `λ` given in doubled coordinates.
pub fn e8_coords_doubled(doubled: &Coords) -> Result<Coords> {
    let inv = &E8Basis::get().inverse_doubled;
    let mut z = [0i64; BLOCK_DIM];
    for (col, dst) in z.iter_mut().enumerate() {
        let acc: i64 = (0..BLOCK_DIM).map(|t| doubled[t] * inv[t][col]).sum();
        if acc % 4 != 0 {
            return Err(Error::NotOnLattice(format!("{:?}/2 is not in E8", doubled)));
        }
        *dst = acc / 4;
    }
    Ok(z)
}

/// Basis coordinates of a point of E8.
pub fn e8_coords(point: &Block8) -> Result<Coords> {
    let doubled = point
        .doubled()
        .ok_or_else(|| Error::NotOnLattice(format!("{point:?} is not half-integral")))?;
    e8_coords_doubled(&doubled)
}

/// `z·E` in doubled coordinates.
pub fn from_coords_doubled(z: &Coords) -> Coords {
    let basis = &E8Basis::get().doubled;
    let mut out = [0i64; BLOCK_DIM];
    for (row, &zi) in basis.iter().zip(z) {
        for (dst, &b) in out.iter_mut().zip(row) {
            *dst += zi * b;
        }
    }
    out
}

/// Label of the coset of `Λ2` containing a point of `Λ1 = s1·E8`.
pub fn hint_label(point: &Coords, params: &Params) -> Result<[u16; BLOCK_DIM]> {
    let half = params.s1() / 2;
    let mut doubled = [0i64; BLOCK_DIM];
    for (dst, &c) in doubled.iter_mut().zip(point) {
        if c % half != 0 {
            return Err(Error::NotOnLattice(format!("{point:?} is not in Λ1")));
        }
        *dst = c / half;
    }
    let z = e8_coords_doubled(&doubled)?;
    let modulus = i64::from(params.hint_modulus());
    Ok(z.map(|zi| zi.rem_euclid(modulus) as u16))
}

/// Canonical representative `s1·(label·E)` of a hint coset.
pub fn hint_lift(label: &[u16; BLOCK_DIM], params: &Params) -> Result<Coords> {
    if let Some(index) = label
        .iter()
        .position(|&l| u32::from(l) >= params.hint_modulus())
    {
        return Err(Error::HintOutOfRange {
            block: 0,
            index,
            value: u32::from(label[index]),
        });
    }
    let z = label.map(i64::from);
    let half = params.s1() / 2;
    Ok(from_coords_doubled(&z).map(|c| c * half))
}

/// Byte label of the coset of `Λ3 = qZ^8` containing a point of `Λ2 = (q/2)E8`.
///
/// With coordinates reduced into `[0, q)` write `t_i = coord_i / (q/4)`. All
/// `t_i` share a parity `g` (the glue bit) and `x_i = (t_i - g)/2 ∈ {0, 1}`
/// has even weight, so `x_7` is implied. The byte is `x_0 … x_6` in bits 0..6
/// and `g` in bit 7.
pub fn key_label(point: &Coords, params: &Params) -> Result<u8> {
    let q = i64::from(params.q());
    let quarter = q / 4;
    let mut t = [0i64; BLOCK_DIM];
    for (dst, &c) in t.iter_mut().zip(point) {
        let r = c.rem_euclid(q);
        if r % quarter != 0 {
            return Err(Error::NotOnLattice(format!("{point:?} is not in Λ2")));
        }
        *dst = r / quarter;
    }
    let glue = t[0] & 1;
    if t.iter().any(|&ti| ti & 1 != glue) {
        return Err(Error::NotOnLattice(format!(
            "{point:?} mixes D8 and its coset"
        )));
    }
    let bits = t.map(|ti| (ti - glue) / 2);
    if bits.iter().sum::<i64>() % 2 != 0 {
        return Err(Error::NotOnLattice(format!("{point:?} has odd D8 parity")));
    }
    let mut byte = (glue as u8) << 7;
    for (i, &b) in bits.iter().take(7).enumerate() {
        byte |= (b as u8) << i;
    }
    Ok(byte)
}

/// The unique point of `Λ2 ∩ [0, q)^8` with the given key label.
pub fn key_lift(label: u8, params: &Params) -> Coords {
    let quarter = i64::from(params.q()) / 4;
    let glue = i64::from(label >> 7);
    let mut bits = [0i64; BLOCK_DIM];
    for (i, b) in bits.iter_mut().take(7).enumerate() {
        *b = i64::from(label >> i & 1);
    }
    bits[7] = bits[..7].iter().sum::<i64>() % 2;
    bits.map(|b| (2 * b + glue) * quarter)
}
