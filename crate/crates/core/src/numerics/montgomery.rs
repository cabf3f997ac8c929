//! Fixed-width Montgomery arithmetic for the Pollard-rho inner loop.

use num_bigint::BigUint;

/// Montgomery context for an odd modulus of `k` 64-bit limbs.
pub(crate) struct Montgomery {
    n: Vec<u64>,
    n_prime: u64,
}

impl Montgomery {
    pub(crate) fn new(modulus: &BigUint) -> Self {
        let n = modulus.to_u64_digits();
        debug_assert!(n[0] & 1 == 1, "modulus must be odd");
        // -n^-1 mod 2^64 by Newton iteration.
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n[0].wrapping_mul(inv)));
        }
        Self {
            n,
            n_prime: inv.wrapping_neg(),
        }
    }

    pub(crate) fn limbs(&self) -> usize {
        self.n.len()
    }

    /// Any residue below `n`, padded to the modulus width.
    pub(crate) fn element(&self, v: &BigUint) -> Vec<u64> {
        let mut out = v.to_u64_digits();
        out.resize(self.n.len(), 0);
        out
    }

    pub(crate) fn to_biguint(v: &[u64]) -> BigUint {
        let mut bytes = Vec::with_capacity(v.len() * 8);
        for limb in v {
            bytes.extend_from_slice(&limb.to_le_bytes());
        }
        BigUint::from_bytes_le(&bytes)
    }

    /// `out = a * b * 2^(-64k) mod n` (CIOS).
    pub(crate) fn mul(&self, a: &[u64], b: &[u64], out: &mut [u64], scratch: &mut Vec<u64>) {
        let k = self.n.len();
        scratch.clear();
        scratch.resize(k + 2, 0);
        let t = scratch.as_mut_slice();
        for &bi in b.iter().take(k) {
            let mut carry = 0u128;
            for j in 0..k {
                let s = u128::from(t[j]) + u128::from(a[j]) * u128::from(bi) + carry;
                t[j] = s as u64;
                carry = s >> 64;
            }
            let s = u128::from(t[k]) + carry;
            t[k] = s as u64;
            t[k + 1] = (s >> 64) as u64;

            let m = t[0].wrapping_mul(self.n_prime);
            let s = u128::from(t[0]) + u128::from(m) * u128::from(self.n[0]);
            let mut carry = s >> 64;
            for j in 1..k {
                let s = u128::from(t[j]) + u128::from(m) * u128::from(self.n[j]) + carry;
                t[j - 1] = s as u64;
                carry = s >> 64;
            }
            let s = u128::from(t[k]) + carry;
            t[k - 1] = s as u64;
            t[k] = t[k + 1] + (s >> 64) as u64;
        }
        out.copy_from_slice(&t[..k]);
        if t[k] != 0 || !less_than(out, &self.n) {
            sub_in_place(out, &self.n);
        }
    }

    /// `out = (a + small) mod n` for `a < n`.
    pub(crate) fn add_small(&self, a: &mut [u64], small: u64) {
        let mut carry = small;
        for limb in a.iter_mut() {
            let (s, c) = limb.overflowing_add(carry);
            *limb = s;
            carry = u64::from(c);
            if carry == 0 {
                break;
            }
        }
        if carry != 0 || !less_than(a, &self.n) {
            sub_in_place(a, &self.n);
        }
    }
}

fn less_than(a: &[u64], b: &[u64]) -> bool {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// `a -= b`, wrapping at the limb width.
fn sub_in_place(a: &mut [u64], b: &[u64]) {
    let mut borrow = 0u64;
    for (x, &y) in a.iter_mut().zip(b) {
        let (d1, b1) = x.overflowing_sub(y);
        let (d2, b2) = d1.overflowing_sub(borrow);
        *x = d2;
        borrow = u64::from(b1 || b2);
    }
}

/// `out = |a - b|`.
pub(crate) fn abs_diff(a: &[u64], b: &[u64], out: &mut [u64]) {
    let (hi, lo) = if less_than(a, b) { (b, a) } else { (a, b) };
    out.copy_from_slice(hi);
    sub_in_place(out, lo);
}
