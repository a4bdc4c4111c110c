use std::ops::{Div, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A nonzero complex number stored as `(log|x|, arg x)` with an unwrapped
/// argument, so that real and complex powers follow a chosen sheet.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BranchedValue {
    pub log_mod: f64,
    pub arg: f64,
}

impl BranchedValue {
    pub const ONE: Self = Self { log_mod: 0.0, arg: 0.0 };

    pub fn from_log(log: Complex64) -> Self {
        Self { log_mod: log.re, arg: log.im }
    }

    /// Principal branch, `arg ∈ (-π, π]`.
    pub fn principal(z: Complex64) -> Self {
        Self { log_mod: z.norm().ln(), arg: z.arg() }
    }

    pub fn log(&self) -> Complex64 {
        Complex64::new(self.log_mod, self.arg)
    }

    pub fn value(&self) -> Complex64 {
        self.log().exp()
    }

    pub fn powf(&self, p: f64) -> Self {
        Self { log_mod: p * self.log_mod, arg: p * self.arg }
    }

    pub fn powc(&self, p: Complex64) -> Self {
        Self::from_log(p * self.log())
    }

    pub fn conj(&self) -> Self {
        Self { log_mod: self.log_mod, arg: -self.arg }
    }

    /// Continue the branch to `z`, assuming `z` is close to the current value
    /// (the argument increment is taken on the principal branch of the ratio).
    pub fn continue_to(&self, z: Complex64) -> Self {
        let ratio = z / self.value();
        Self { log_mod: z.norm().ln(), arg: self.arg + ratio.arg() }
    }

    pub fn is_finite(&self) -> bool {
        self.log_mod.is_finite() && self.arg.is_finite()
    }
}

impl Mul for BranchedValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self { log_mod: self.log_mod + rhs.log_mod, arg: self.arg + rhs.arg }
    }
}

impl Div for BranchedValue {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Self { log_mod: self.log_mod - rhs.log_mod, arg: self.arg - rhs.arg }
    }
}
