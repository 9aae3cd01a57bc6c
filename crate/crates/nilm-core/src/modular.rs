//! Integer modular arithmetic and the two-party exponential key exchange.
//!
//! The modulus is capped below 2^31 so products always fit 64-bit
//! intermediates; this is a desk-scale scheme and the cap keeps every
//! implementation honest about that.

use crate::error::{Error, Result};

/// Upper bound (exclusive) for the prime modulus.
pub const MAX_MODULUS: u64 = 1 << 31;

/// Miller-Rabin witnesses that decide primality exactly for all
/// m < 3_215_031_751, which covers every modulus below [`MAX_MODULUS`].
const WITNESSES: [u64; 4] = [2, 3, 5, 7];

/// `base^exp mod p` by square-and-multiply.
pub fn mod_pow(base: u64, exp: u64, p: u64) -> Result<u64> {
    if p < 2 {
        return Err(Error::InvalidModulus);
    }
    let mut result: u64 = 1 % p;
    let mut base = base % p;
    let mut exp = exp;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    Ok(result)
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

/// Deterministic Miller-Rabin with the fixed witness set {2, 3, 5, 7}.
///
/// Exact for every `m` below 3_215_031_751; callers in this crate never pass
/// anything larger than [`MAX_MODULUS`].
pub fn is_prime(m: u64) -> bool {
    if m < 2 {
        return false;
    }
    for w in WITNESSES {
        if m == w {
            return true;
        }
        if m.is_multiple_of(w) {
            return false;
        }
    }
    // m - 1 = 2^s * d with d odd
    let mut d = m - 1;
    let s = d.trailing_zeros();
    d >>= s;

    'witness: for w in WITNESSES {
        let mut x = mod_pow(w, d, m).expect("m >= 2");
        if x == 1 || x == m - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, m);
            if x == m - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Public parameters of the exchange: a prime modulus and a public base.
///
/// The base is not required to generate the whole group; tiny-order bases
/// are fine as long as the derived shared secret is not degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DHParams {
    p: u64,
    x: u64,
}

impl DHParams {
    pub fn new(p: u64, x: u64) -> Result<Self> {
        if !(3..MAX_MODULUS).contains(&p) {
            return Err(Error::InvalidModulus);
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if x < 2 || x > p - 2 {
            return Err(Error::InvalidParams("public base must lie in [2, p-2]"));
        }
        Ok(Self { p, x })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn base(&self) -> u64 {
        self.x
    }
}

/// One party's secret exponent and the public value derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DHKeyPair {
    secret: u64,
    public: u64,
}

impl DHKeyPair {
    pub fn from_secret(params: &DHParams, secret: u64) -> Result<Self> {
        let public = dh_public(params, secret)?;
        Ok(Self { secret, public })
    }

    pub fn secret(&self) -> u64 {
        self.secret
    }

    pub fn public(&self) -> u64 {
        self.public
    }
}

/// `x^secret mod p`, the value a party publishes.
pub fn dh_public(params: &DHParams, secret: u64) -> Result<u64> {
    if secret < 1 || secret >= params.p {
        return Err(Error::InvalidExponent);
    }
    mod_pow(params.x, secret, params.p)
}

/// Shared secret `K = other_public^secret mod p`.
///
/// A K of 0 or 1 would make the downstream key schedule constant, so those
/// values are rejected as [`Error::DegenerateKey`]; both parties observe the
/// same K and therefore the same rejection.
pub fn dh_shared(params: &DHParams, secret: u64, other_public: u64) -> Result<u64> {
    if secret < 1 || secret >= params.p {
        return Err(Error::InvalidExponent);
    }
    if other_public < 1 || other_public >= params.p {
        return Err(Error::InvalidExponent);
    }
    let k = mod_pow(other_public, secret, params.p)?;
    if k <= 1 {
        return Err(Error::DegenerateKey);
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Naive repeated-multiplication oracle for mod_pow.
    fn naive_pow(base: u64, exp: u64, p: u64) -> u64 {
        let mut acc = 1 % p;
        for _ in 0..exp {
            acc = (acc * (base % p)) % p;
        }
        acc
    }

    /// Trial-division oracle for primality.
    fn trial_division(m: u64) -> bool {
        if m < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= m {
            if m.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn mod_pow_worked_example_values() {
        assert_eq!(mod_pow(4, 2, 7).unwrap(), 2);
        assert_eq!(mod_pow(4, 8, 7).unwrap(), 2);
        assert_eq!(mod_pow(4, 0, 7).unwrap(), 1);
        assert!(matches!(mod_pow(3, 5, 1), Err(Error::InvalidModulus)));
        assert!(matches!(mod_pow(3, 5, 0), Err(Error::InvalidModulus)));
    }

    #[test]
    fn mod_pow_agrees_with_naive_oracle() {
        for p in [7u64, 11, 101] {
            for base in 0..50 {
                for exp in 0..50 {
                    assert_eq!(
                        mod_pow(base, exp, p).unwrap(),
                        naive_pow(base, exp, p),
                        "base={base} exp={exp} p={p}"
                    );
                }
            }
        }
    }

    #[test]
    fn is_prime_basics() {
        assert!(is_prime(7));
        assert!(!is_prime(1));
        assert!(!is_prime(0));
        assert!(is_prime(2));
        // Largest prime below the modulus cap; cross-checked by trial division.
        assert!(is_prime((1 << 31) - 1));
        assert!(trial_division((1 << 31) - 1));
    }

    #[test]
    fn is_prime_agrees_with_trial_division() {
        for m in 0..100_000u64 {
            assert_eq!(is_prime(m), trial_division(m), "m={m}");
        }
    }

    #[test]
    fn dh_public_worked_example_values() {
        let params = DHParams::new(7, 4).unwrap();
        assert_eq!(dh_public(&params, 2).unwrap(), 2);
        assert_eq!(dh_public(&params, 4).unwrap(), 4);
        assert_eq!(dh_public(&params, 1).unwrap(), 4);
        assert!(matches!(dh_public(&params, 0), Err(Error::InvalidExponent)));
        assert!(matches!(dh_public(&params, 7), Err(Error::InvalidExponent)));
    }

    #[test]
    fn dh_shared_worked_example_values() {
        let params = DHParams::new(7, 4).unwrap();
        assert_eq!(dh_shared(&params, 2, 4).unwrap(), 2);
        assert_eq!(dh_shared(&params, 4, 2).unwrap(), 2);
        assert!(matches!(
            dh_shared(&params, 2, 1),
            Err(Error::DegenerateKey)
        ));
    }

    #[test]
    fn dh_shared_commutes_for_small_moduli() {
        for p in [7u64, 11, 101] {
            let bases: Vec<u64> = (2..=p - 2).collect();
            for &x in &bases {
                let params = DHParams::new(p, x).unwrap();
                for a in 1..p.min(12) {
                    for b in 1..p.min(12) {
                        let pub_a = dh_public(&params, a).unwrap();
                        let pub_b = dh_public(&params, b).unwrap();
                        let alice = dh_shared(&params, a, pub_b);
                        let bob = dh_shared(&params, b, pub_a);
                        match (alice, bob) {
                            (Ok(ka), Ok(kb)) => assert_eq!(ka, kb),
                            (Err(Error::DegenerateKey), Err(Error::DegenerateKey)) => {}
                            other => {
                                panic!("asymmetric outcome for p={p} x={x} a={a} b={b}: {other:?}")
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(matches!(DHParams::new(8, 2), Err(Error::NotPrime(8))));
        assert!(matches!(DHParams::new(2, 2), Err(Error::InvalidModulus)));
        assert!(matches!(
            DHParams::new(1 << 31, 2),
            Err(Error::InvalidModulus)
        ));
        assert!(matches!(DHParams::new(7, 1), Err(Error::InvalidParams(_))));
        assert!(matches!(DHParams::new(7, 6), Err(Error::InvalidParams(_))));
        let kp = DHKeyPair::from_secret(&DHParams::new(7, 4).unwrap(), 2).unwrap();
        assert_eq!(kp.public(), 2);
        assert_eq!(kp.secret(), 2);
    }
}
