//! Sparse affine forms with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// `constant + sum_k coeff_k * x_k` over integer-indexed unknowns.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearForm {
    pub constant: BigRational,
    pub terms: BTreeMap<usize, BigRational>,
}

impl LinearForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: BigRational) -> Self {
        Self {
            constant: value,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(id: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(id, BigRational::from_integer(1.into()));
        Self {
            constant: BigRational::zero(),
            terms,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, id: usize) -> BigRational {
        self.terms.get(&id).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, id: usize, coeff: &BigRational) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(id).or_insert_with(BigRational::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&id);
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &LinearForm, scale: &BigRational) {
        if scale.is_zero() {
            return;
        }
        self.constant += &other.constant * scale;
        for (id, c) in &other.terms {
            self.add_term(*id, &(c * scale));
        }
    }

    pub fn add_scaled_int(&mut self, other: &LinearForm, scale: &BigInt) {
        self.add_scaled(other, &BigRational::from_integer(scale.clone()));
    }

    pub fn scaled(&self, scale: &BigRational) -> LinearForm {
        let mut out = LinearForm::zero();
        out.add_scaled(self, scale);
        out
    }

    pub fn sub(&self, other: &LinearForm) -> LinearForm {
        let mut out = self.clone();
        out.add_scaled(other, &-BigRational::from_integer(1.into()));
        out
    }

    /// Evaluate with `values[id]` for every unknown.
    pub fn eval(&self, values: &[BigRational]) -> BigRational {
        let mut acc = self.constant.clone();
        for (id, c) in &self.terms {
            acc += c * &values[*id];
        }
        acc
    }

    pub fn eval_f64(&self, values: &[f64]) -> f64 {
        let mut acc = ratio_to_f64(&self.constant);
        for (id, c) in &self.terms {
            acc += ratio_to_f64(c) * values[*id];
        }
        acc
    }

    /// Replace every unknown by a form, e.g. to move from fine to coarse variables.
    pub fn substitute(&self, mut expr: impl FnMut(usize) -> LinearForm) -> LinearForm {
        let mut out = LinearForm::constant(self.constant.clone());
        for (id, c) in &self.terms {
            out.add_scaled(&expr(*id), c);
        }
        out
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (id, c) in &self.terms {
            if c.is_negative() {
                write!(f, " - {}*x{}", -c, id)?;
            } else {
                write!(f, " + {}*x{}", c, id)?;
            }
        }
        Ok(())
    }
}

/// Nearest `f64` to a rational; exact for moderately sized values and
/// correct to a few ulps for huge numerators and denominators.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let (n, d) = (r.numer(), r.denom());
    let shift = n.bits().max(d.bits()).saturating_sub(1000) as usize;
    let n = n >> shift;
    let d = d >> shift;
    n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
}

/// Integer `BigInt` as a rational.
pub fn int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}
