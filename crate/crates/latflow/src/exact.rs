//! Exact arithmetic in ℚ and ℚ(√D), the input micro-grammar, and continued
//! fractions.
//!
//! Grammar for one entry (entries of a vector are comma separated):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | atom
//! atom  := INT | FLOAT | 'sqrt' INT | 'sqrt(' INT ')' | 'phi'
//!        | 'wrap(' expr ')' | '(' expr ')'
//! ```
//!
//! `phi` is `(√5 − 1)/2` and `wrap` reduces mod 1 into `[−1/2, 1/2)`. Any
//! float literal makes the whole entry a float.

use crate::error::{Error, Result};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

pub type Q = Ratio<i128>;

fn q_to_f64(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Largest `k` with `k² | n`, and the square-free cofactor.
fn square_free_split(n: u64) -> (u64, u64) {
    let (mut k, mut m, mut p) = (1u64, n, 2u64);
    while p * p <= m {
        while m % (p * p) == 0 {
            m /= p * p;
            k *= p;
        }
        p += 1;
    }
    (k, m)
}

/// `a + b√D` with `D` square-free; `D = 1` exactly when `b = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadNum {
    pub a: Q,
    pub b: Q,
    pub root: u64,
}

impl QuadNum {
    pub fn rational(a: Q) -> Self {
        Self { a, b: Q::zero(), root: 1 }
    }

    pub fn int(n: i128) -> Self {
        Self::rational(Q::from_integer(n))
    }

    pub fn frac(p: i128, q: i128) -> Result<Self> {
        if q == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Self::rational(Q::new(p, q)))
    }

    /// `√n` in canonical form.
    pub fn sqrt(n: u64) -> Self {
        let (k, m) = square_free_split(n);
        if m == 1 || n == 0 {
            Self::int(if n == 0 { 0 } else { k as i128 })
        } else {
            Self { a: Q::zero(), b: Q::from_integer(k as i128), root: m }.canonical()
        }
    }

    /// `(√5 − 1)/2`.
    pub fn phi() -> Self {
        Self { a: Q::new(-1, 2), b: Q::new(1, 2), root: 5 }
    }

    fn canonical(mut self) -> Self {
        if self.root == 1 {
            self.a += self.b;
            self.b = Q::zero();
        }
        if self.b.is_zero() {
            self.root = 1;
        }
        self
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn common_root(&self, other: &Self) -> Result<u64> {
        match (self.root, other.root) {
            (1, r) | (r, 1) => Ok(r),
            (r, s) if r == s => Ok(r),
            (r, s) => Err(Error::Parse(format!("mixed square roots √{r} and √{s} in one entry"))),
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let root = self.common_root(o)?;
        Ok(Self { a: self.a + o.a, b: self.b + o.b, root }.canonical())
    }

    pub fn neg(&self) -> Self {
        Self { a: -self.a, b: -self.b, root: self.root }
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        let root = self.common_root(o)?;
        let dd = Q::from_integer(root as i128);
        Ok(Self {
            a: self.a * o.a + self.b * o.b * dd,
            b: self.a * o.b + self.b * o.a,
            root,
        }
        .canonical())
    }

    /// `a² − b²D`; nonzero unless the number is zero.
    pub fn field_norm(&self) -> Q {
        self.a * self.a - self.b * self.b * Q::from_integer(self.root as i128)
    }

    pub fn recip(&self) -> Result<Self> {
        let n = self.field_norm();
        if n.is_zero() {
            return Err(Error::Parse("division by zero".into()));
        }
        Ok(Self { a: self.a / n, b: -self.b / n, root: self.root }.canonical())
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        self.mul(&o.recip()?)
    }

    pub fn scale(&self, q: i128) -> Self {
        let k = Q::from_integer(q);
        Self { a: self.a * k, b: self.b * k, root: self.root }.canonical()
    }

    /// Exact sign.
    pub fn signum(&self) -> i32 {
        let sa = sgn(&self.a);
        let sb = sgn(&self.b);
        if sb == 0 || sa == sb {
            return if sa == 0 { sb } else { sa };
        }
        if sa == 0 {
            return sb;
        }
        let a2 = self.a * self.a;
        let b2d = self.b * self.b * Q::from_integer(self.root as i128);
        if a2 > b2d {
            sa
        } else {
            sb
        }
    }

    pub fn cmp_exact(&self, o: &Self) -> Result<Ordering> {
        Ok(self.sub(o)?.signum().cmp(&0))
    }

    /// Exact floor.
    pub fn floor(&self) -> i128 {
        let mut n = self.to_f64().floor() as i128;
        while self.sub(&Self::int(n)).expect("same root").signum() < 0 {
            n -= 1;
        }
        while self.sub(&Self::int(n + 1)).expect("same root").signum() >= 0 {
            n += 1;
        }
        n
    }

    /// Float value, using the conjugate when `a` and `b√D` nearly cancel.
    pub fn to_f64(&self) -> f64 {
        let a = q_to_f64(&self.a);
        if self.b.is_zero() {
            return a;
        }
        let bs = q_to_f64(&self.b) * (self.root as f64).sqrt();
        if sgn(&self.a) * sgn(&self.b) < 0 {
            q_to_f64(&self.field_norm()) / (a - bs)
        } else {
            a + bs
        }
    }

    /// Representative of `x mod 1` in `[−1/2, 1/2)`.
    pub fn wrap_unit(&self) -> Self {
        let half = Self::frac(1, 2).expect("nonzero");
        let shifted = self.add(&half).expect("rational shift");
        self.sub(&Self::int(shifted.floor())).expect("integer shift")
    }

    /// `‖x‖_ℤ`, the distance to the nearest integer. Exact zero detection.
    pub fn dist_to_int(&self) -> f64 {
        self.wrap_unit().to_f64().abs()
    }
}

fn sgn(q: &Q) -> i32 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

impl fmt::Display for QuadNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let (bn, bd) = (*self.b.numer(), *self.b.denom());
        let sign = if bn < 0 { "-" } else { "+" };
        let mag = bn.abs();
        let coeff = if mag == 1 { String::new() } else { format!("{mag}*") };
        let den = if bd == 1 { String::new() } else { format!("/{bd}") };
        if self.a.is_zero() {
            let lead = if bn < 0 { "-" } else { "" };
            write!(f, "{lead}{coeff}sqrt{}{den}", self.root)
        } else {
            write!(f, "{}{sign}{coeff}sqrt{}{den}", self.a, self.root)
        }
    }
}

/// A parsed input entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Exact(QuadNum),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64(),
            Value::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&QuadNum> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Float(_) => None,
        }
    }

    fn binop(self, o: Value, op: char) -> Result<Value> {
        match (self, o) {
            (Value::Exact(a), Value::Exact(b)) => Ok(Value::Exact(match op {
                '+' => a.add(&b)?,
                '-' => a.sub(&b)?,
                '*' => a.mul(&b)?,
                _ => a.div(&b)?,
            })),
            (a, b) => {
                let (x, y) = (a.to_f64(), b.to_f64());
                Ok(Value::Float(match op {
                    '+' => x + y,
                    '-' => x - y,
                    '*' => x * y,
                    _ => x / y,
                }))
            }
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse(format!(
            "{msg} at position {} in '{}'",
            self.pos,
            String::from_utf8_lossy(self.s)
        )))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(w.as_bytes()) {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Value> {
        let mut v = self.term()?;
        loop {
            if self.eat(b'+') {
                v = v.binop(self.term()?, '+')?;
            } else if self.eat(b'-') {
                v = v.binop(self.term()?, '-')?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<Value> {
        let mut v = self.unary()?;
        loop {
            if self.eat(b'*') {
                v = v.binop(self.unary()?, '*')?;
            } else if self.eat(b'/') {
                v = v.binop(self.unary()?, '/')?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<Value> {
        if self.eat(b'-') {
            return Value::Exact(QuadNum::int(0)).binop(self.unary()?, '-');
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.atom()
    }

    fn uint(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .expect("ascii")
            .parse()
            .map_err(|e| Error::Parse(format!("{e}")))
    }

    fn atom(&mut self) -> Result<Value> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(_) => {
                if self.eat_word("sqrt") {
                    let n = if self.eat(b'(') {
                        let n = self.uint()?;
                        if !self.eat(b')') {
                            return self.err("expected ')'");
                        }
                        n
                    } else {
                        self.uint()?
                    };
                    Ok(Value::Exact(QuadNum::sqrt(n)))
                } else if self.eat_word("phi") {
                    Ok(Value::Exact(QuadNum::phi()))
                } else if self.eat_word("wrap") {
                    if !self.eat(b'(') {
                        return self.err("expected '(' after wrap");
                    }
                    let v = self.expr()?;
                    if !self.eat(b')') {
                        return self.err("expected ')'");
                    }
                    Ok(match v {
                        Value::Exact(q) => Value::Exact(q.wrap_unit()),
                        Value::Float(x) => Value::Float(crate::flows::wrap_unit(x)),
                    })
                } else {
                    self.err("unexpected token")
                }
            }
            None => self.err("unexpected end of input"),
        }
    }

    fn number(&mut self) -> Result<Value> {
        let start = self.pos;
        let mut float = false;
        while self.pos < self.s.len() {
            let c = self.s[self.pos];
            if c.is_ascii_digit() {
                self.pos += 1;
            } else if c == b'.' {
                float = true;
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && self.pos > start {
                float = true;
                self.pos += 1;
                if self.pos < self.s.len() && (self.s[self.pos] == b'-' || self.s[self.pos] == b'+') {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let tok = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        if float {
            tok.parse::<f64>()
                .map(Value::Float)
                .map_err(|e| Error::Parse(format!("bad float '{tok}': {e}")))
        } else {
            tok.parse::<i128>()
                .map(|n| Value::Exact(QuadNum::int(n)))
                .map_err(|e| Error::Parse(format!("bad integer '{tok}': {e}")))
        }
    }
}

/// Parses one entry of the micro-grammar.
pub fn parse_value(s: &str) -> Result<Value> {
    let mut p = Parser { s: s.as_bytes(), pos: 0 };
    let v = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    if let Value::Float(x) = v {
        if !x.is_finite() {
            return Err(Error::Parse(format!("non-finite value in '{s}'")));
        }
    }
    Ok(v)
}

/// Parses a comma separated vector, splitting only at parenthesis depth 0.
pub fn parse_vector(s: &str) -> Result<Vec<Value>> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts.into_iter().map(parse_value).collect()
}

/// Partial quotients of `x`, stopping at `max_terms` or when the expansion
/// terminates (rational input). The flag is true on termination.
pub fn continued_fraction(x: &QuadNum, max_terms: usize) -> (Vec<i128>, bool) {
    let mut out = Vec::new();
    let mut y = x.clone();
    for _ in 0..max_terms {
        let a = y.floor();
        out.push(a);
        let rest = y.sub(&QuadNum::int(a)).expect("integer shift");
        if rest.signum() == 0 {
            return (out, true);
        }
        y = rest.recip().expect("nonzero remainder");
    }
    (out, false)
}

/// Convergents `p_k/q_k` from partial quotients.
pub fn convergents(terms: &[i128]) -> Vec<(i128, i128)> {
    let (mut p0, mut q0, mut p1, mut q1) = (1i128, 0i128, 0i128, 1i128);
    let mut out = Vec::with_capacity(terms.len());
    for &a in terms {
        let (p, q) = (a * p0 + p1, a * q0 + q1);
        out.push((p, q));
        p1 = p0;
        q1 = q0;
        p0 = p;
        q0 = q;
    }
    out
}

/// The largest convergent denominator `q ≤ bound`; it satisfies
/// `‖qx‖ ≤ 1/bound`.
pub fn dirichlet_witness(x: &QuadNum, bound: u64) -> Result<u64> {
    if bound == 0 {
        return Err(Error::InvalidParameter("Q must be >= 1".into()));
    }
    let mut best = 1u64;
    let mut terms = Vec::new();
    let mut y = x.clone();
    let (mut p0, mut q0, mut p1, mut q1) = (1i128, 0i128, 0i128, 1i128);
    loop {
        let a = y.floor();
        terms.push(a);
        let (p, q) = (a * p0 + p1, a * q0 + q1);
        if q > bound as i128 {
            break;
        }
        best = q as u64;
        let rest = y.sub(&QuadNum::int(a)).expect("integer shift");
        if rest.signum() == 0 {
            break;
        }
        y = rest.recip().expect("nonzero remainder");
        p1 = p0;
        q1 = q0;
        p0 = p;
        q0 = q;
    }
    Ok(best)
}


/// `(A + B√D)/γ` with big integers, for quantities such as `m + qξ` with
/// huge `q`. Floors are exact; float conversion keeps full relative
/// precision even under cancellation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigQuad {
    a: BigInt,
    b: BigInt,
    g: BigInt,
    root: u64,
}

/// `x = m·2^e` with `|m|` representable; `e = 0` for moderate sizes.
fn big_split(x: &BigInt) -> (f64, i64) {
    let bits = x.bits() as i64;
    if bits <= 960 {
        (x.to_f64().expect("finite"), 0)
    } else {
        let s = bits - 64;
        ((x >> (s as usize)).to_f64().expect("finite"), s)
    }
}

fn ldexp(mut m: f64, mut e: i64) -> f64 {
    while e > 0 {
        let k = e.min(1000);
        m *= 2f64.powi(k as i32);
        e -= k;
    }
    while e < 0 {
        let k = (-e).min(1000);
        m /= 2f64.powi(k as i32);
        e += k;
    }
    m
}

impl BigQuad {
    pub fn from_int(n: BigInt) -> Self {
        Self { a: n, b: BigInt::zero(), g: BigInt::one(), root: 1 }
    }

    pub fn from_quad(q: &QuadNum) -> Self {
        let (an, ad) = (BigInt::from(*q.a.numer()), BigInt::from(*q.a.denom()));
        let (bn, bd) = (BigInt::from(*q.b.numer()), BigInt::from(*q.b.denom()));
        let g = ad.lcm(&bd);
        Self { a: an * (&g / &ad), b: bn * (&g / &bd), g, root: q.root }
    }

    /// The exact dyadic rational equal to a finite float.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "finite input");
        if x == 0.0 {
            return Self::from_int(BigInt::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 0 { 1 } else { -1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let m = BigInt::from(mant) * sign;
        if e >= 0 {
            Self::from_int(m << (e as usize))
        } else {
            Self { a: m, b: BigInt::zero(), g: BigInt::one() << ((-e) as usize), root: 1 }.reduced()
        }
    }

    pub fn from_value(v: &Value) -> Self {
        match v {
            Value::Exact(q) => Self::from_quad(q),
            Value::Float(x) => Self::from_f64(*x),
        }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    fn reduced(mut self) -> Self {
        let c = self.a.gcd(&self.b).gcd(&self.g);
        if !c.is_one() && !c.is_zero() {
            self.a /= &c;
            self.b /= &c;
            self.g /= &c;
        }
        if self.b.is_zero() {
            self.root = 1;
        }
        self
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let root = match (self.root, o.root) {
            (1, r) | (r, 1) => r,
            (r, s) if r == s => r,
            (r, s) => return Err(Error::Parse(format!("mixed square roots √{r} and √{s}"))),
        };
        Ok(Self {
            a: &self.a * &o.g + &o.a * &self.g,
            b: &self.b * &o.g + &o.b * &self.g,
            g: &self.g * &o.g,
            root,
        }
        .reduced())
    }

    pub fn add_int(&self, k: &BigInt) -> Self {
        Self { a: &self.a + k * &self.g, b: self.b.clone(), g: self.g.clone(), root: self.root }
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        Self { a: &self.a * k, b: &self.b * k, g: self.g.clone(), root: self.root }.reduced()
    }

    pub fn neg(&self) -> Self {
        Self { a: -&self.a, b: -&self.b, g: self.g.clone(), root: self.root }
    }

    pub fn signum(&self) -> i32 {
        let sa = self.a.sign();
        let sb = self.b.sign();
        let to_i = |s: Sign| match s {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        };
        let (sa, sb) = (to_i(sa), to_i(sb));
        if sb == 0 || sa == sb || sa == 0 {
            return if sa == 0 { sb } else { sa };
        }
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * BigInt::from(self.root);
        if a2 > b2d {
            sa
        } else {
            sb
        }
    }

    /// Exact floor.
    pub fn floor(&self) -> BigInt {
        let b2d = &self.b * &self.b * BigInt::from(self.root);
        let r = b2d.sqrt();
        // floor(b√D)
        let s = if self.b.sign() == Sign::Minus {
            if &r * &r == b2d {
                -r
            } else {
                -r - 1
            }
        } else {
            r
        };
        (&self.a + s).div_floor(&self.g)
    }

    /// `x − round(x)` in `[−1/2, 1/2)`.
    pub fn frac_centered(&self) -> f64 {
        let two = BigInt::from(2);
        let shifted = Self { a: &self.a * &two + &self.g, b: &self.b * &two, g: &self.g * &two, root: self.root };
        let n = shifted.floor();
        self.add_int(&-n).to_f64()
    }

    pub fn to_f64(&self) -> f64 {
        let sq = (self.root as f64).sqrt();
        let (gm, ge) = big_split(&self.g);
        if self.b.is_zero() {
            let (am, ae) = big_split(&self.a);
            return ldexp(am / gm, ae - ge);
        }
        let same = self.a.sign() == self.b.sign() || self.a.is_zero();
        let shift = (self.a.bits().max(self.b.bits()) as i64 - 900).max(0) as usize;
        let (ash, bsh) = ((&self.a >> shift).to_f64().unwrap(), (&self.b >> shift).to_f64().unwrap());
        if same {
            ldexp((ash + bsh * sq) / gm, shift as i64 - ge)
        } else {
            let n = &self.a * &self.a - &self.b * &self.b * BigInt::from(self.root);
            let (nm, ne) = big_split(&n);
            ldexp(nm / (ash - bsh * sq) / gm, ne - shift as i64 - ge)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(s: &str) -> QuadNum {
        parse_value(s).unwrap().exact().unwrap().clone()
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(QuadNum::sqrt(8), QuadNum { a: Q::zero(), b: Q::from_integer(2), root: 2 });
        assert_eq!(QuadNum::sqrt(9), QuadNum::int(3));
        assert_eq!(ex("6/4"), QuadNum::frac(3, 2).unwrap());
        assert_eq!(ex("sqrt2*sqrt2"), QuadNum::int(2));
        assert_eq!(ex("(1+sqrt5)/2 - 1"), QuadNum::phi());
    }

    #[test]
    fn grammar() {
        assert!((ex("sqrt2-1").to_f64() - 0.414_213_562_373_095_1).abs() <= f64::EPSILON * 0.5);
        assert!((ex("(sqrt2-1)/2").to_f64() - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-16);
        assert_eq!(ex("1+3*sqrt(12)/2"), ex("1+3*sqrt3"));
        assert_eq!(ex("wrap(2*sqrt2-2)"), ex("2*sqrt2-3"));
        assert!(matches!(parse_value("0.25").unwrap(), Value::Float(x) if x == 0.25));
        assert!(parse_value("sqrt2+sqrt3").is_err());
        assert!(parse_value("1/0").is_err());
        assert!(parse_value("1+").is_err());
        let v = parse_vector("sqrt2-1,(sqrt2-1)/2").unwrap();
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn exact_sign_and_floor() {
        let x = ex("sqrt2-1");
        assert_eq!(x.signum(), 1);
        assert_eq!(x.floor(), 0);
        assert_eq!(ex("1-sqrt2").floor(), -1);
        assert_eq!(ex("7/2").floor(), 3);
        assert_eq!(ex("-7/2").floor(), -4);
        assert_eq!(ex("phi").wrap_unit(), ex("phi-1"));
    }

    #[test]
    fn cf_of_sqrt2_minus_1() {
        let (t, done) = continued_fraction(&ex("sqrt2-1"), 6);
        assert!(!done);
        assert_eq!(t, vec![0, 2, 2, 2, 2, 2]);
        let dens: Vec<i128> = convergents(&t).iter().map(|c| c.1).collect();
        assert_eq!(dens, vec![1, 2, 5, 12, 29, 70]);
        let (t, done) = continued_fraction(&ex("13/5"), 10);
        assert!(done);
        assert_eq!(t, vec![2, 1, 1, 2]);
    }

    #[test]
    fn dirichlet_examples() {
        assert_eq!(dirichlet_witness(&ex("sqrt2-1"), 5).unwrap(), 5);
        assert_eq!(dirichlet_witness(&ex("1/3"), 10).unwrap(), 3);
        let q = dirichlet_witness(&ex("1/3"), 10).unwrap();
        assert_eq!(ex("1/3").scale(q as i128).dist_to_int(), 0.0);
    }

    #[test]
    fn display_round_trips() {
        for s in ["sqrt2-1", "(sqrt2-1)/2", "3/7", "phi", "-sqrt5", "2*sqrt3/5+1/4"] {
            let x = ex(s);
            assert_eq!(ex(&x.to_string()), x, "{s} -> {x}");
        }
    }

    #[test]
    fn bigquad_matches_small_exact() {
        for s in ["sqrt2-1", "(sqrt2-1)/2", "3/7", "phi", "-sqrt5", "2*sqrt3/5+1/4", "-7/2"] {
            let x = ex(s);
            let b = BigQuad::from_quad(&x);
            assert_eq!(b.floor(), BigInt::from(x.floor()), "{s}");
            assert_eq!(b.to_f64(), x.to_f64(), "{s}");
            for q in [1i128, 7, 12345, 999_999] {
                let want = x.scale(q).wrap_unit().to_f64();
                let got = b.mul_int(&BigInt::from(q)).frac_centered();
                assert!((want - got).abs() < 1e-15, "{s} q={q}: {want} vs {got}");
            }
        }
    }

    #[test]
    fn bigquad_huge_multiplier() {
        // q = 70·10^40: q(√2−1) is within 1/q of an integer only for
        // convergent denominators; check consistency of floor and frac.
        let x = BigQuad::from_quad(&ex("sqrt2-1"));
        let q = BigInt::from(70) * BigInt::from(10).pow(40);
        let y = x.mul_int(&q);
        let f = y.frac_centered();
        assert!((-0.5..0.5).contains(&f));
        let back = y.add_int(&-y.floor()).to_f64();
        assert!((0.0..1.0).contains(&back));
        assert!(((back - f).rem_euclid(1.0)).abs() < 1e-12 || (back - f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bigquad_from_f64_is_exact() {
        for x in [0.1, -2.5e-7, 12345.678, 1e300, 5e-324] {
            assert_eq!(BigQuad::from_f64(x).to_f64(), x);
        }
    }
}
