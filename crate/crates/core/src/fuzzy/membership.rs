use serde::{Deserialize, Serialize};

/// Shape of a linguistic term over a variable's universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum MembershipFunction {
    Gaussian {
        center: f64,
        sigma: f64,
    },
    Triangular {
        a: f64,
        b: f64,
        c: f64,
    },
    Trapezoidal {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    },
    Singleton {
        value: f64,
    },
    /// Crisp truth term of a boolean variable; `x >= 0.5` reads as true.
    CrispBool {
        value: bool,
    },
}

const SINGLETON_EPS: f64 = 1e-9;

impl MembershipFunction {
    /// Membership degree of `x`, always in `[0, 1]`. Non-finite input maps to 0.
    pub fn evaluate(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return 0.0;
        }
        let mu = match *self {
            MembershipFunction::Gaussian { center, sigma } => {
                let z = x - center;
                (-(z * z) / (2.0 * sigma * sigma)).exp()
            }
            MembershipFunction::Triangular { a, b, c } => trapezoid(x, a, b, b, c),
            MembershipFunction::Trapezoidal { a, b, c, d } => trapezoid(x, a, b, c, d),
            MembershipFunction::Singleton { value } => {
                if (x - value).abs() <= SINGLETON_EPS {
                    1.0
                } else {
                    0.0
                }
            }
            MembershipFunction::CrispBool { value } => {
                if (x >= 0.5) == value {
                    1.0
                } else {
                    0.0
                }
            }
        };
        mu.clamp(0.0, 1.0)
    }

    /// Checks the parameter ordering constraints of the shape.
    pub fn validate(&self) -> Result<(), String> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match *self {
            MembershipFunction::Gaussian { center, sigma } => {
                if !finite(&[center, sigma]) || sigma <= 0.0 {
                    return Err(format!("gaussian needs finite center and sigma > 0, got sigma={sigma}"));
                }
            }
            MembershipFunction::Triangular { a, b, c } => {
                if !finite(&[a, b, c]) || !(a <= b && b <= c) || a == c {
                    return Err(format!("triangular needs a <= b <= c with a < c, got ({a}, {b}, {c})"));
                }
            }
            MembershipFunction::Trapezoidal { a, b, c, d } => {
                if !finite(&[a, b, c, d]) || !(a <= b && b <= c && c <= d) || a == d {
                    return Err(format!("trapezoidal needs a <= b <= c <= d with a < d, got ({a}, {b}, {c}, {d})"));
                }
            }
            MembershipFunction::Singleton { value } => {
                if !value.is_finite() {
                    return Err("singleton value must be finite".into());
                }
            }
            MembershipFunction::CrispBool { .. } => {}
        }
        Ok(())
    }
}

fn trapezoid(x: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    if x < a || x > d {
        0.0
    } else if x >= b && x <= c {
        1.0
    } else if x < b {
        (x - a) / (b - a)
    } else {
        (d - x) / (d - c)
    }
}
