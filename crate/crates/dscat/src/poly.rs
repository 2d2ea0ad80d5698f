//! Multivariate polynomial algebra over `Complex64`, plus polynomials
//! weighted by complex powers of `1 - |Y|^2`, for the exact operator
//! identity checks on the unit ball.
//!
//! Coefficient arithmetic is exact for integer data (products and sums of
//! integers well inside 2^53), which is what the identity checks rely on:
//! the residual of a true operator identity on an integer basis is the
//! float zero, not a small number.

use num_complex::Complex64;
use std::collections::BTreeMap;

type C = Complex64;

const ZERO: C = Complex64::new(0.0, 0.0);

/// Dense-exponent sparse polynomial in `nvars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, C>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Poly::zero(nvars);
        if c != ZERO {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, C::new(1.0, 0.0))
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, C::new(1.0, 0.0));
        p
    }

    /// `|Y|^2`.
    pub fn r2(nvars: usize) -> Self {
        let mut p = Poly::zero(nvars);
        for i in 0..nvars {
            let mut e = vec![0; nvars];
            e[i] = 2;
            p.terms.insert(e, C::new(1.0, 0.0));
        }
        p
    }

    /// `1 - |Y|^2`.
    pub fn nu2(nvars: usize) -> Self {
        Poly::one(nvars).sub(&Poly::r2(nvars))
    }

    pub fn monomial(nvars: usize, exps: &[u32]) -> Self {
        let mut p = Poly::zero(nvars);
        p.terms.insert(exps.to_vec(), C::new(1.0, 0.0));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == ZERO)
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            let entry = out.terms.entry(e.clone()).or_insert(ZERO);
            *entry += c;
            if *entry == ZERO {
                out.terms.remove(e);
            }
        }
        out
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(C::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C) -> Poly {
        if c == ZERO {
            return Poly::zero(self.nvars);
        }
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect() }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let entry = out.terms.entry(e.clone()).or_insert(ZERO);
                *entry += ca * cb;
                if *entry == ZERO {
                    out.terms.remove(&e);
                }
            }
        }
        out
    }

    pub fn partial(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut en = e.clone();
            en[i] -= 1;
            let entry = out.terms.entry(en.clone()).or_insert(ZERO);
            *entry += c * (e[i] as f64);
            if *entry == ZERO {
                out.terms.remove(&en);
            }
        }
        out
    }

    /// Flat positive Laplacian convention is NOT applied here: this is the
    /// plain sum of second partials.
    pub fn laplacian(&self) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for i in 0..self.nvars {
            out = out.add(&self.partial(i).partial(i));
        }
        out
    }

    /// Euler operator `sum_i Y_i d/dY_i` (multiplies each monomial by its
    /// degree).
    pub fn euler(&self) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let d: u32 = e.iter().sum();
            if d > 0 {
                out.terms.insert(e.clone(), c * (d as f64));
            }
        }
        out
    }

    pub fn eval(&self, y: &[f64]) -> C {
        let mut acc = ZERO;
        for (e, c) in &self.terms {
            let mut m = 1.0;
            for (yi, &p) in y.iter().zip(e) {
                m *= yi.powi(p as i32);
            }
            acc += c * m;
        }
        acc
    }

    /// All monomials of total degree `<= degree`.
    pub fn basis_up_to(nvars: usize, degree: u32) -> Vec<Poly> {
        let mut out = Vec::new();
        let mut exps = vec![0u32; nvars];
        loop {
            if exps.iter().sum::<u32>() <= degree {
                out.push(Poly::monomial(nvars, &exps));
            }
            // odometer increment bounded by `degree` in each slot
            let mut i = 0;
            loop {
                if i == nvars {
                    return out;
                }
                exps[i] += 1;
                if exps[i] > degree {
                    exps[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }
}

/// `sum_j (1 - |Y|^2)^{base + j} p_j(Y)` with complex `base`.
///
/// The representation is not unique (a factor of `1 - |Y|^2` can move
/// between the exponent and the polynomial); [`RimPoly::canonical`]
/// collapses everything onto the lowest layer for comparisons.
#[derive(Debug, Clone)]
pub struct RimPoly {
    pub nvars: usize,
    pub base: C,
    pub layers: BTreeMap<i32, Poly>,
}

impl RimPoly {
    pub fn from_poly(p: Poly, base: C) -> Self {
        let nvars = p.nvars;
        let mut layers = BTreeMap::new();
        if !p.is_zero() {
            layers.insert(0, p);
        }
        RimPoly { nvars, base, layers }
    }

    pub fn zero_like(&self) -> Self {
        RimPoly { nvars: self.nvars, base: self.base, layers: BTreeMap::new() }
    }

    fn insert(&mut self, j: i32, p: Poly) {
        if p.is_zero() {
            return;
        }
        match self.layers.entry(j) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(p);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let q = o.get().add(&p);
                if q.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = q;
                }
            }
        }
    }

    pub fn add(&self, o: &RimPoly) -> RimPoly {
        assert_eq!(self.base, o.base, "rim powers must share the base exponent");
        let mut out = self.clone();
        for (j, p) in &o.layers {
            out.insert(*j, p.clone());
        }
        out
    }

    pub fn sub(&self, o: &RimPoly) -> RimPoly {
        self.add(&o.scale(C::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C) -> RimPoly {
        RimPoly {
            nvars: self.nvars,
            base: self.base,
            layers: self.layers.iter().map(|(j, p)| (*j, p.scale(c))).collect(),
        }
    }

    pub fn mul_poly(&self, q: &Poly) -> RimPoly {
        let mut out = self.zero_like();
        for (j, p) in &self.layers {
            out.insert(*j, p.mul(q));
        }
        out
    }

    /// Multiply by `(1 - |Y|^2)^k` by shifting layers (`k` may be negative)
    /// and adjust `base` by `delta_base`, so the overall weight changes by
    /// `(1-|Y|^2)^{k + delta_base}`.
    pub fn shift(&self, k: i32, delta_base: C) -> RimPoly {
        RimPoly {
            nvars: self.nvars,
            base: self.base + delta_base,
            layers: self.layers.iter().map(|(j, p)| (j + k, p.clone())).collect(),
        }
    }

    /// `d/dY_i`, using
    /// `d/dY_i (1-r^2)^{b+j} p = (1-r^2)^{b+j} p_i - 2(b+j) Y_i (1-r^2)^{b+j-1} p`.
    pub fn partial(&self, i: usize) -> RimPoly {
        let yi = Poly::var(self.nvars, i);
        let mut out = self.zero_like();
        for (j, p) in &self.layers {
            out.insert(*j, p.partial(i));
            let coef = (self.base + *j as f64) * (-2.0);
            out.insert(*j - 1, yi.mul(p).scale(coef));
        }
        out
    }

    pub fn laplacian(&self) -> RimPoly {
        let mut out = self.zero_like();
        for i in 0..self.nvars {
            out = out.add(&self.partial(i).partial(i));
        }
        out
    }

    pub fn euler(&self) -> RimPoly {
        let mut out = self.zero_like();
        for i in 0..self.nvars {
            out = out.add(&self.partial(i).mul_poly(&Poly::var(self.nvars, i)));
        }
        out
    }

    /// Collapse onto the lowest layer: returns `(j_min, q)` with the value
    /// equal to `(1-r^2)^{base + j_min} q(Y)`.
    pub fn canonical(&self) -> (i32, Poly) {
        let Some((&jmin, _)) = self.layers.iter().next() else {
            return (0, Poly::zero(self.nvars));
        };
        let nu2 = Poly::nu2(self.nvars);
        let mut acc = Poly::zero(self.nvars);
        for (j, p) in &self.layers {
            let mut q = p.clone();
            for _ in 0..(j - jmin) {
                q = q.mul(&nu2);
            }
            acc = acc.add(&q);
        }
        (jmin, acc)
    }

    /// Max coefficient magnitude of the canonical collapse; exact zero for
    /// exact identities on integer data.
    pub fn residual_norm(&self) -> f64 {
        self.canonical().1.max_coeff()
    }

    pub fn eval(&self, y: &[f64]) -> C {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        let nu2 = 1.0 - r2;
        let mut acc = ZERO;
        for (j, p) in &self.layers {
            let w = (self.base + *j as f64) * nu2.ln();
            acc += p.eval(y) * w.exp();
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    #[test]
    fn laplacian_of_r2() {
        // Delta |Y|^2 = 2 d
        for d in 1..4 {
            let lap = Poly::r2(d).laplacian();
            assert_eq!(lap, Poly::constant(d, c(2.0 * d as f64)));
        }
    }

    #[test]
    fn euler_multiplies_by_degree() {
        let p = Poly::monomial(2, &[2, 1]);
        assert_eq!(p.euler(), p.scale(c(3.0)));
    }

    #[test]
    fn rim_partial_matches_numeric() {
        let base = C::new(0.7, 0.0);
        let p = Poly::monomial(2, &[1, 2]).add(&Poly::one(2));
        let f = RimPoly::from_poly(p, base);
        let g = f.partial(0);
        let y = [0.3, -0.4];
        let h = 1e-6;
        let up = f.eval(&[y[0] + h, y[1]]);
        let dn = f.eval(&[y[0] - h, y[1]]);
        let want = (up - dn) / (2.0 * h);
        assert!((g.eval(&y) - want).norm() < 1e-8);
    }

    #[test]
    fn canonical_detects_rearranged_zero() {
        // (1-r^2)^{b+1} * 1 - (1-r^2)^b * (1-r^2) == 0
        let one = Poly::one(2);
        let mut a = RimPoly::from_poly(one.clone(), c(0.5));
        a.layers = BTreeMap::from([(1, one)]);
        let b = RimPoly::from_poly(Poly::nu2(2), c(0.5));
        assert_eq!(a.sub(&b).residual_norm(), 0.0);
    }
}
