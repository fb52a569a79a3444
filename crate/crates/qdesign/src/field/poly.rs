//! Dense univariate polynomial arithmetic over GF(p), used only for
//! modulus selection and irreducibility checking at field construction.
//!
//! Coefficient vectors are little-endian: `c[i]` is the coefficient of x^i.

/// Strips trailing zero coefficients, keeping at least one entry.
pub fn trim(c: &mut Vec<u32>) {
    while c.len() > 1 && *c.last().unwrap() == 0 {
        c.pop();
    }
}

pub fn degree(c: &[u32]) -> usize {
    let mut d = c.len() - 1;
    while d > 0 && c[d] == 0 {
        d -= 1;
    }
    d
}

pub fn is_zero(c: &[u32]) -> bool {
    c.iter().all(|&x| x == 0)
}

pub fn mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + ai as u64 * bj as u64) % p as u64;
        }
    }
    let mut out: Vec<u32> = out.into_iter().map(|x| x as u32).collect();
    trim(&mut out);
    out
}

/// Remainder of `a` modulo the monic polynomial `m`.
pub fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let dm = degree(m);
    debug_assert_eq!(m[dm], 1, "modulus must be monic");
    let mut r: Vec<u32> = a.to_vec();
    trim(&mut r);
    while degree(&r) >= dm && !is_zero(&r) {
        let dr = degree(&r);
        let lead = r[dr];
        if lead != 0 {
            let shift = dr - dm;
            for i in 0..=dm {
                let sub = (lead as u64 * m[i] as u64) % p as u64;
                r[shift + i] = ((r[shift + i] as u64 + p as u64 - sub) % p as u64) as u32;
            }
        }
        trim(&mut r);
        if degree(&r) < dm {
            break;
        }
    }
    r
}

/// Irreducibility over GF(p) by trial division against every monic
/// polynomial of degree 1..=deg/2.
pub fn is_irreducible(f: &[u32], p: u32) -> bool {
    let d = degree(f);
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    for dd in 1..=d / 2 {
        // monic divisors of degree dd, low coefficients as base-p digits
        let count = (p as u64).pow(dd as u32);
        for low in 0..count {
            let mut g = vec![0u32; dd + 1];
            let mut v = low;
            for coeff in g.iter_mut().take(dd) {
                *coeff = (v % p as u64) as u32;
                v /= p as u64;
            }
            g[dd] = 1;
            if is_zero(&rem(f, &g, p)) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest monic irreducible of degree `m` over GF(p),
/// comparing the low coefficient vectors (a0,...,a_{m-1}) as base-p integers.
pub fn lex_smallest_irreducible(p: u32, m: u32) -> Vec<u32> {
    let m = m as usize;
    let count = (p as u64).pow(m as u32);
    for low in 0..count {
        let mut f = vec![0u32; m + 1];
        let mut v = low;
        for coeff in f.iter_mut().take(m) {
            *coeff = (v % p as u64) as u32;
            v /= p as u64;
        }
        f[m] = 1;
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("an irreducible of every degree exists over GF(p)")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lex_smallest_gf2_deg3() {
        // x^3 + x + 1
        assert_eq!(lex_smallest_irreducible(2, 3), vec![1, 1, 0, 1]);
    }

    #[test]
    fn lex_smallest_degree_one_is_x() {
        assert_eq!(lex_smallest_irreducible(3, 1), vec![0, 1]);
        assert_eq!(lex_smallest_irreducible(2, 1), vec![0, 1]);
    }

    #[test]
    fn reducible_detected() {
        // x^2 + 1 = (x+1)^2 over GF(2)
        assert!(!is_irreducible(&[1, 0, 1], 2));
        // x^2 + 1 is irreducible over GF(3)
        assert!(is_irreducible(&[1, 0, 1], 3));
    }

    #[test]
    fn rem_exact_division() {
        // (x+1)(x^2+x+1) = x^3 + 1 over GF(2)
        let prod = mul(&[1, 1], &[1, 1, 1], 2);
        assert_eq!(prod, vec![1, 0, 0, 1]);
        assert!(is_zero(&rem(&prod, &[1, 1, 1], 2)));
    }
}
