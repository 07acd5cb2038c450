//! Word-sized modular helpers. Every modulus used here is a power of an odd
//! prime below 2^63, so products fit comfortably in u128.

pub fn ppow(p: u32, e: u32) -> u64 {
    (p as u64).pow(e)
}

/// Largest e with p^e < 2^63.
pub fn max_digits(p: u32) -> u32 {
    let mut e = 0;
    let mut x: u128 = 1;
    while x * (p as u128) < (1u128 << 63) {
        x *= p as u128;
        e += 1;
    }
    e
}

#[inline]
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    acc
}

pub fn invmod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(m as i128) as u64)
}

/// Reduce a signed integer into [0, m).
pub fn reduce_i64(n: i64, m: u64) -> u64 {
    (n as i128).rem_euclid(m as i128) as u64
}

/// Strip factors of p: returns (v_p(x), x / p^v). x must be nonzero.
pub fn split_p(mut x: u64, p: u32) -> (u32, u64) {
    let p = p as u64;
    let mut v = 0;
    while x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    (v, x)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// ε(t) mod p^e: the (p-1)-th root of unity congruent to t mod p.
pub fn teich_mod(p: u32, t: u64, e: u32) -> u64 {
    let m = ppow(p, e);
    let mut x = t % m;
    loop {
        let y = powmod(x, p as u64, m);
        if y == x {
            return x;
        }
        x = y;
    }
}

/// The exponent m mod p^(e-1) with u^m ≡ y mod p^e, for y ≡ 1 mod p.
/// Digit-by-digit: at step i the residual y·u^(-m_i) is 1 + p^(i+1)·d_i·(unit of u^(p^i)).
pub fn log1_mod(p: u32, u: u64, y: u64, e: u32) -> u64 {
    let m = ppow(p, e);
    let pm = p as u64;
    let u_inv = invmod(u, m).expect("u is a unit");
    let mut acc = 0u64;
    let mut z = y % m;
    let mut g = u % m;
    let mut g_inv = u_inv;
    for i in 0..e.saturating_sub(1) {
        let scale = ppow(p, i + 1);
        let zd = ((z + m - 1) % m / scale) % pm;
        if zd != 0 {
            let gd = ((g + m - 1) % m / scale) % pm;
            let d = mulmod(zd, invmod(gd, pm).expect("u is a topological generator"), pm);
            acc += d * ppow(p, i);
            z = mulmod(z, powmod(g_inv, d, m), m);
        }
        g = powmod(g, pm, m);
        g_inv = powmod(g_inv, pm, m);
    }
    acc
}
