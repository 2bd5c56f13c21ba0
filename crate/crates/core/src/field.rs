//! Field operations shared by every arithmetic carrier the maps run over:
//! exact rationals, `F_p` residues and rational functions in epsilon.

use std::fmt::Debug;

use num_traits::{One, Zero};

use crate::epsfield::EpsRational;
use crate::error::{Error, Result};
use crate::numbers::{reduce_mod, FpElem, Rational};

pub trait Field: Clone + PartialEq + Debug {
    /// Embeds a rational constant into the same carrier as `self`.
    fn constant(&self, c: &Rational) -> Result<Self>;
    fn plus(&self, rhs: &Self) -> Result<Self>;
    fn minus(&self, rhs: &Self) -> Result<Self>;
    fn times(&self, rhs: &Self) -> Result<Self>;
    fn over(&self, rhs: &Self) -> Result<Self>;
    fn is_zero_elem(&self) -> bool;

    fn powi(&self, k: u32) -> Result<Self> {
        let mut acc = self.constant(&Rational::one())?;
        for _ in 0..k {
            acc = acc.times(self)?;
        }
        Ok(acc)
    }
}

impl Field for Rational {
    fn constant(&self, c: &Rational) -> Result<Self> {
        Ok(c.clone())
    }
    fn plus(&self, rhs: &Self) -> Result<Self> {
        Ok(self + rhs)
    }
    fn minus(&self, rhs: &Self) -> Result<Self> {
        Ok(self - rhs)
    }
    fn times(&self, rhs: &Self) -> Result<Self> {
        Ok(self * rhs)
    }
    fn over(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self / rhs)
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
}

impl Field for FpElem {
    fn constant(&self, c: &Rational) -> Result<Self> {
        reduce_mod(c, self.prime())
    }
    fn plus(&self, rhs: &Self) -> Result<Self> {
        self.add(rhs)
    }
    fn minus(&self, rhs: &Self) -> Result<Self> {
        self.sub(rhs)
    }
    fn times(&self, rhs: &Self) -> Result<Self> {
        self.mul(rhs)
    }
    fn over(&self, rhs: &Self) -> Result<Self> {
        self.div(rhs)
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
}

impl Field for EpsRational {
    fn constant(&self, c: &Rational) -> Result<Self> {
        Ok(EpsRational::constant(c.clone()))
    }
    fn plus(&self, rhs: &Self) -> Result<Self> {
        Ok(self.add(rhs))
    }
    fn minus(&self, rhs: &Self) -> Result<Self> {
        Ok(self.sub(rhs))
    }
    fn times(&self, rhs: &Self) -> Result<Self> {
        Ok(self.mul(rhs))
    }
    fn over(&self, rhs: &Self) -> Result<Self> {
        self.div(rhs)
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
}
