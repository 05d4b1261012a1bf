//! Short-Weierstrass curves `y^2 = x^3 - 3x + b (mod p)`.
//!
//! Field arithmetic is Montgomery-form modular arithmetic from `crypto-bigint`;
//! the group law is implemented here. Scalar multiplication is double-and-add
//! in Jacobian coordinates and is **not constant-time**: this is a simulator,
//! not a cryptographic library.

use std::fmt;

use crypto_bigint::modular::{MontyForm, MontyParams};
use crypto_bigint::{Odd, U256};

use super::{ChainError, Result};

type Fe = MontyForm<{ U256::LIMBS }>;

/// A point in affine coordinates, or the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ECPoint {
    Infinity,
    Affine { x: U256, y: U256 },
}

impl ECPoint {
    pub fn affine(x: U256, y: U256) -> Self {
        ECPoint::Affine { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ECPoint::Infinity)
    }

    pub fn x(&self) -> Option<U256> {
        match self {
            ECPoint::Infinity => None,
            ECPoint::Affine { x, .. } => Some(*x),
        }
    }
}

impl fmt::Display for ECPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ECPoint::Infinity => write!(f, "O"),
            ECPoint::Affine { x, y } => write!(f, "({}, {})", short_hex(x), short_hex(y)),
        }
    }
}

/// Hex without leading zeros.
pub fn short_hex(v: &U256) -> String {
    let s = hex::encode(v.to_be_bytes());
    let t = s.trim_start_matches('0');
    if t.is_empty() { "0".into() } else { t.into() }
}

/// Parses up to 64 hex digits, optional `0x` prefix.
pub fn parse_hex(s: &str) -> Result<U256> {
    let t = s.trim();
    let t = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).unwrap_or(t);
    if t.is_empty() || t.len() > 64 || !t.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(ChainError::CurveFile(format!("bad hex integer {s:?}")));
    }
    Ok(U256::from_be_hex(&format!("{t:0>64}")))
}

/// Curve parameters `(p, a, b, G, n, h)` with `a` pinned to `p - 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveParams {
    pub p: U256,
    pub a: U256,
    pub b: U256,
    pub g: ECPoint,
    pub n: U256,
    pub h: U256,
    field: MontyParams<{ U256::LIMBS }>,
    b_m: Fe,
}

const TOY: &str = "61,5e,6,1,2,6b,1";
const P256: &str = "ffffffff00000001000000000000000000000000ffffffffffffffffffffffff,\
ffffffff00000001000000000000000000000000fffffffffffffffffffffffc,\
5ac635d8aa3a93e7b3ebbd55769886bc651d06b0cc53b0f63bce3c3e27d2604b,\
6b17d1f2e12c4247f8bce6e563a440f277037d812deb33a0f4a13945d898c296,\
4fe342e2fe1a7f9b8ee7eb4a7c0f9e162bce33576b315ececbb6406837bf51f5,\
ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551,1";

impl CurveParams {
    /// Builds and validates a curve.
    pub fn new(p: U256, a: U256, b: U256, g: (U256, U256), n: U256, h: U256) -> Result<Self> {
        let odd: Option<Odd<U256>> = Odd::new(p).into();
        let odd = odd.ok_or_else(|| ChainError::InvalidCurve("p must be odd".into()))?;
        if p <= U256::from_u8(3) {
            return Err(ChainError::InvalidCurve("p must exceed 3".into()));
        }
        if a != p.wrapping_sub(&U256::from_u8(3)) {
            return Err(ChainError::InvalidCurve("a must equal p - 3".into()));
        }
        if b >= p || g.0 >= p || g.1 >= p {
            return Err(ChainError::InvalidCurve("b and G must be reduced mod p".into()));
        }
        if n <= U256::ONE {
            return Err(ChainError::InvalidCurve("n must exceed 1".into()));
        }
        let field = MontyParams::new(odd);
        let b_m = Fe::new(&b, field);
        let curve = Self { p, a, b, g: ECPoint::affine(g.0, g.1), n, h, field, b_m };
        // 4a^3 + 27b^2 with a = -3 is 27b^2 - 108.
        let am = curve.fe(&a);
        let disc = am.square() * am * curve.small(4) + b_m.square() * curve.small(27);
        if disc.retrieve() == U256::ZERO {
            return Err(ChainError::InvalidCurve("curve is singular".into()));
        }
        if !curve.is_on_curve(&curve.g) {
            return Err(ChainError::InvalidCurve("G is not on the curve".into()));
        }
        if curve.mul_unchecked(&n, &curve.g) != ECPoint::Infinity {
            return Err(ChainError::InvalidCurve("n * G is not the point at infinity".into()));
        }
        Ok(curve)
    }

    /// Parses `p,a,b,Gx,Gy,n,h` in hex; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let body: String = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .collect::<Vec<_>>()
            .join("");
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(ChainError::CurveFile(format!("expected 7 comma-separated fields, got {}", fields.len())));
        }
        let v: Vec<U256> = fields.iter().map(|f| parse_hex(f)).collect::<Result<_>>()?;
        Self::new(v[0], v[1], v[2], (v[3], v[4]), v[5], v[6])
    }

    pub fn to_file_string(&self) -> String {
        let (gx, gy) = match self.g {
            ECPoint::Affine { x, y } => (x, y),
            ECPoint::Infinity => unreachable!("validated base point"),
        };
        [self.p, self.a, self.b, gx, gy, self.n, self.h]
            .iter()
            .map(short_hex)
            .collect::<Vec<_>>()
            .join(",")
    }

    /// A 107-point curve over F_97 with generator (1, 2), small enough to enumerate.
    pub fn toy() -> Self {
        Self::parse(TOY).expect("bundled toy curve is valid")
    }

    /// The 256-bit NIST P-256 parameters.
    pub fn p256() -> Self {
        Self::parse(P256).expect("bundled P-256 parameters are valid")
    }

    fn fe(&self, v: &U256) -> Fe {
        Fe::new(v, self.field)
    }

    fn small(&self, v: u8) -> Fe {
        Fe::new(&U256::from_u8(v), self.field)
    }

    pub fn is_on_curve(&self, pt: &ECPoint) -> bool {
        match pt {
            ECPoint::Infinity => true,
            ECPoint::Affine { x, y } => {
                if *x >= self.p || *y >= self.p {
                    return false;
                }
                let (xm, ym) = (self.fe(x), self.fe(y));
                let rhs = xm.square() * xm - xm * self.small(3) + self.b_m;
                ym.square() == rhs
            }
        }
    }

    fn check(&self, pt: &ECPoint) -> Result<()> {
        if self.is_on_curve(pt) {
            Ok(())
        } else {
            Err(ChainError::OffCurve(pt.to_string()))
        }
    }

    pub fn negate(&self, pt: &ECPoint) -> ECPoint {
        match pt {
            ECPoint::Infinity => ECPoint::Infinity,
            ECPoint::Affine { x, y } => ECPoint::affine(*x, (-self.fe(y)).retrieve()),
        }
    }

    /// Chord-and-tangent addition in affine coordinates.
    pub fn point_add(&self, p: &ECPoint, q: &ECPoint) -> Result<ECPoint> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.add_unchecked(p, q))
    }

    fn add_unchecked(&self, p: &ECPoint, q: &ECPoint) -> ECPoint {
        let (x1, y1, x2, y2) = match (p, q) {
            (ECPoint::Infinity, _) => return *q,
            (_, ECPoint::Infinity) => return *p,
            (ECPoint::Affine { x: a, y: b }, ECPoint::Affine { x: c, y: d }) => {
                (self.fe(a), self.fe(b), self.fe(c), self.fe(d))
            }
        };
        let lambda = if x1 == x2 {
            if y1 != y2 || y1.retrieve() == U256::ZERO {
                return ECPoint::Infinity;
            }
            // (3x^2 + a) / 2y with a = -3.
            (x1.square() * self.small(3) - self.small(3)) * invert(&y1.double())
        } else {
            (y2 - y1) * invert(&(x2 - x1))
        };
        let x3 = lambda.square() - x1 - x2;
        let y3 = lambda * (x1 - x3) - y1;
        ECPoint::affine(x3.retrieve(), y3.retrieve())
    }

    /// `k * P` by left-to-right double-and-add.
    pub fn scalar_mul(&self, k: &U256, pt: &ECPoint) -> Result<ECPoint> {
        self.check(pt)?;
        Ok(self.mul_unchecked(k, pt))
    }

    pub(crate) fn mul_unchecked(&self, k: &U256, pt: &ECPoint) -> ECPoint {
        let (px, py) = match pt {
            ECPoint::Infinity => return ECPoint::Infinity,
            ECPoint::Affine { x, y } => (self.fe(x), self.fe(y)),
        };
        let mut acc = Jacobian::infinity(self.field);
        for i in (0..k.bits_vartime()).rev() {
            acc = acc.double();
            if k.bit_vartime(i) {
                acc = acc.add_affine(&px, &py);
            }
        }
        acc.to_affine()
    }
}

fn invert(v: &Fe) -> Fe {
    Option::from(v.inv()).expect("nonzero element of a prime field is invertible")
}

#[derive(Clone, Copy)]
struct Jacobian {
    x: Fe,
    y: Fe,
    z: Fe,
}

impl Jacobian {
    fn infinity(params: MontyParams<{ U256::LIMBS }>) -> Self {
        Self { x: Fe::one(params), y: Fe::one(params), z: Fe::zero(params) }
    }

    fn is_infinity(&self) -> bool {
        self.z.retrieve() == U256::ZERO
    }

    // dbl-2001-b, valid for a = -3.
    fn double(&self) -> Self {
        if self.is_infinity() || self.y.retrieve() == U256::ZERO {
            return Self::infinity(*self.x.params());
        }
        let delta = self.z.square();
        let gamma = self.y.square();
        let beta = self.x * gamma;
        let t = (self.x - delta) * (self.x + delta);
        let alpha = t.double() + t;
        let beta4 = beta.double().double();
        let x3 = alpha.square() - beta4.double();
        let z3 = (self.y + self.z).square() - gamma - delta;
        let g2 = gamma.square().double();
        let y3 = alpha * (beta4 - x3) - g2.double().double();
        Self { x: x3, y: y3, z: z3 }
    }

    // madd-2007-bl.
    fn add_affine(&self, x2: &Fe, y2: &Fe) -> Self {
        if self.is_infinity() {
            return Self { x: *x2, y: *y2, z: Fe::one(*x2.params()) };
        }
        let z1z1 = self.z.square();
        let u2 = *x2 * z1z1;
        let s2 = *y2 * self.z * z1z1;
        let h = u2 - self.x;
        let r = (s2 - self.y).double();
        if h.retrieve() == U256::ZERO {
            if r.retrieve() == U256::ZERO {
                return self.double();
            }
            return Self::infinity(*self.x.params());
        }
        let hh = h.square();
        let i = hh.double().double();
        let j = h * i;
        let v = self.x * i;
        let x3 = r.square() - j - v.double();
        let y3 = r * (v - x3) - (self.y * j).double();
        let z3 = (self.z + h).square() - z1z1 - hh;
        Self { x: x3, y: y3, z: z3 }
    }

    fn to_affine(&self) -> ECPoint {
        if self.is_infinity() {
            return ECPoint::Infinity;
        }
        let zi = invert(&self.z);
        let zi2 = zi.square();
        ECPoint::affine((self.x * zi2).retrieve(), (self.y * zi2 * zi).retrieve())
    }
}
