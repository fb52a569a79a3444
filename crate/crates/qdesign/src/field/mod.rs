//! Exact arithmetic in GF(p^m).
//!
//! Elements are dense integer indices in [0, q): the base-p digits
//! (d0..d_{m-1}) of an index encode the residue d0 + d1*x + ... modulo the
//! field's irreducible modulus polynomial. Index 0 is the additive identity
//! and index 1 the multiplicative identity.
//!
//! Multiplication and inversion use precomputed log/antilog tables for
//! q <= 2^16; the schoolbook multiply-and-reduce path is kept as the
//! reference implementation and the two must agree bit-for-bit.

pub mod poly;

use serde::Serialize;
use thiserror::Error;

/// Fields larger than this are out of scope.
pub const MAX_Q: u64 = 1 << 20;
/// Log/antilog tables are built up to this size.
const TABLE_Q: u64 = 1 << 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be >= 1")]
    InvalidDegree,
    #[error("supplied modulus is not monic of degree m")]
    MalformedModulus,
    #[error("supplied modulus is reducible over GF(p)")]
    ReducibleModulus,
    #[error("field size {0} exceeds the supported limit {MAX_Q}")]
    FieldTooLarge(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("element index {0} out of range for a field with {1} elements")]
    IndexOutOfRange(u64, u64),
    #[error("quadratic residues are only defined for odd q")]
    EvenCharacteristicQr,
    #[error("quadratic residue test requires a nonzero element")]
    ZeroQr,
}

/// An element of GF(q), stored as its dense index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Elem(pub u32);

impl std::fmt::Display for Elem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Immutable model of GF(p^m). Safe to share across threads; every
/// operation is a pure function of the context and its operands.
#[derive(Debug, Clone)]
pub struct FieldCtx {
    p: u32,
    m: u32,
    q: u32,
    modulus: Vec<u32>,
    /// log[a] for a in 1..q (slot 0 unused), present when q <= 2^16
    log: Option<Vec<u32>>,
    /// exp[i] = g^i for i in 0..q-1
    exp: Option<Vec<u32>>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl FieldCtx {
    /// Builds GF(p^m). When `modulus` is omitted the lexicographically
    /// smallest monic irreducible of degree m over GF(p) is selected, so
    /// construction is deterministic.
    pub fn new(p: u64, m: u32, modulus: Option<&[u32]>) -> Result<FieldCtx, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if m < 1 {
            return Err(FieldError::InvalidDegree);
        }
        let q = (p as u64).checked_pow(m).ok_or(FieldError::FieldTooLarge(u64::MAX))?;
        if q > MAX_Q {
            return Err(FieldError::FieldTooLarge(q));
        }
        let p = p as u32;
        let modulus = match modulus {
            Some(c) => {
                if c.len() != m as usize + 1
                    || c[m as usize] != 1
                    || c.iter().any(|&x| x >= p)
                {
                    return Err(FieldError::MalformedModulus);
                }
                if !poly::is_irreducible(c, p) {
                    return Err(FieldError::ReducibleModulus);
                }
                c.to_vec()
            }
            None => poly::lex_smallest_irreducible(p, m),
        };
        let mut ctx = FieldCtx {
            p,
            m,
            q: q as u32,
            modulus,
            log: None,
            exp: None,
        };
        if q <= TABLE_Q {
            ctx.build_tables();
        }
        Ok(ctx)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn has_tables(&self) -> bool {
        self.log.is_some()
    }

    pub fn elem(&self, idx: u64) -> Result<Elem, FieldError> {
        if idx < self.q as u64 {
            Ok(Elem(idx as u32))
        } else {
            Err(FieldError::IndexOutOfRange(idx, self.q as u64))
        }
    }

    pub fn zero(&self) -> Elem {
        Elem(0)
    }

    pub fn one(&self) -> Elem {
        Elem(1)
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.q).map(Elem)
    }

    fn coeffs_of(&self, e: Elem) -> Vec<u32> {
        let mut c = vec![0u32; self.m as usize];
        let mut v = e.0;
        for d in c.iter_mut() {
            *d = v % self.p;
            v /= self.p;
        }
        c
    }

    fn elem_from_coeffs(&self, c: &[u32]) -> Elem {
        debug_assert!(poly::degree(c) < self.m as usize || poly::is_zero(c));
        let mut idx = 0u64;
        for &d in c.iter().rev() {
            idx = idx * self.p as u64 + d as u64;
        }
        Elem(idx as u32)
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.p == 2 {
            return Elem(a.0 ^ b.0);
        }
        let (mut av, mut bv) = (a.0, b.0);
        let mut idx = 0u32;
        let mut scale = 1u32;
        for _ in 0..self.m {
            let d = (av % self.p + bv % self.p) % self.p;
            idx += d * scale;
            scale *= self.p;
            av /= self.p;
            bv /= self.p;
        }
        Elem(idx)
    }

    pub fn neg(&self, a: Elem) -> Elem {
        if self.p == 2 {
            return a;
        }
        let mut av = a.0;
        let mut idx = 0u32;
        let mut scale = 1u32;
        for _ in 0..self.m {
            let d = (self.p - av % self.p) % self.p;
            idx += d * scale;
            scale *= self.p;
            av /= self.p;
        }
        Elem(idx)
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    /// Schoolbook polynomial multiply-and-reduce; the reference path.
    pub fn mul_ref(&self, a: Elem, b: Elem) -> Elem {
        let ac = self.coeffs_of(a);
        let bc = self.coeffs_of(b);
        let prod = poly::mul(&ac, &bc, self.p);
        let r = poly::rem(&prod, &self.modulus, self.p);
        self.elem_from_coeffs(&r)
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        match (&self.log, &self.exp) {
            (Some(log), Some(exp)) => {
                if a.0 == 0 || b.0 == 0 {
                    return Elem(0);
                }
                let n = self.q as u64 - 1;
                let s = (log[a.0 as usize] as u64 + log[b.0 as usize] as u64) % n;
                Elem(exp[s as usize])
            }
            _ => self.mul_ref(a, b),
        }
    }

    /// Multiplicative inverse. The reference path is pow(a, q-2).
    pub fn inv(&self, a: Elem) -> Result<Elem, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::DivisionByZero);
        }
        match (&self.log, &self.exp) {
            (Some(log), Some(exp)) => {
                let n = self.q as u64 - 1;
                let s = (n - log[a.0 as usize] as u64) % n;
                Ok(Elem(exp[s as usize]))
            }
            _ => Ok(self.pow(a, self.q as u64 - 2)),
        }
    }

    /// a^e, with the exponent reduced mod (q-1) for nonzero bases.
    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if a.0 == 0 {
            return if e == 0 { Elem(1) } else { Elem(0) };
        }
        let mut e = e % (self.q as u64 - 1);
        let mut base = a;
        let mut acc = Elem(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// e^{p^l}; a field automorphism for every l >= 0.
    pub fn frobenius(&self, e: Elem, l: u32) -> Elem {
        if e.0 == 0 {
            return e;
        }
        // p^l mod (q-1), computed without overflow
        let n = self.q as u64 - 1;
        let mut exp = 1u64;
        for _ in 0..l {
            exp = exp * self.p as u64 % n;
        }
        self.pow(e, exp)
    }

    /// True iff e is a nonzero square; requires odd q and e != 0.
    pub fn is_qr(&self, e: Elem) -> Result<bool, FieldError> {
        if self.p == 2 {
            return Err(FieldError::EvenCharacteristicQr);
        }
        if e.0 == 0 {
            return Err(FieldError::ZeroQr);
        }
        Ok(self.pow(e, (self.q as u64 - 1) / 2) == Elem(1))
    }

    /// gcd(p^l + 1, q - 1), the delta of the point-count bounds.
    pub fn gcd_delta(&self, l: u32) -> u64 {
        gcd((self.p as u64).pow(l) + 1, self.q as u64 - 1)
    }

    fn build_tables(&mut self) {
        let q = self.q as usize;
        if q == 2 {
            self.exp = Some(vec![1]);
            self.log = Some(vec![0, 0]);
            return;
        }
        let n = q as u64 - 1;
        let g = self.find_generator();
        let mut exp = vec![0u32; n as usize];
        let mut log = vec![0u32; q];
        let mut acc = Elem(1);
        for (i, slot) in exp.iter_mut().enumerate() {
            *slot = acc.0;
            log[acc.0 as usize] = i as u32;
            acc = self.mul_ref(acc, g);
        }
        debug_assert_eq!(acc, Elem(1));
        self.exp = Some(exp);
        self.log = Some(log);
    }

    fn find_generator(&self) -> Elem {
        let n = self.q as u64 - 1;
        let mut factors = Vec::new();
        let mut v = n;
        let mut d = 2u64;
        while d * d <= v {
            if v % d == 0 {
                factors.push(d);
                while v % d == 0 {
                    v /= d;
                }
            }
            d += 1;
        }
        if v > 1 {
            factors.push(v);
        }
        'cand: for idx in 2..self.q {
            let g = Elem(idx);
            for &f in &factors {
                if self.pow_ref(g, n / f) == Elem(1) {
                    continue 'cand;
                }
            }
            return g;
        }
        unreachable!("GF(q)* is cyclic")
    }

    // pow on the reference multiply, usable before tables exist
    fn pow_ref(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = Elem(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_ref(acc, base);
            }
            base = self.mul_ref(base, base);
            e >>= 1;
        }
        acc
    }
}
