//! JSON values with floats written to 17 significant digits.

use nalgebra::{DMatrix, DVector};
use serde_json::{Number, Value};

/// `x` as a JSON number with 17 significant digits; non-finite values
/// become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    Value::Number(serde_json::from_str::<Number>(&text).expect("formatted float is valid JSON"))
}

pub fn vector(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

/// Row-major nested arrays.
pub fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|x| num(*x)).collect()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123, 0.0] {
            let text = num(x).to_string();
            assert_eq!(text.parse::<f64>().unwrap(), x);
            let mantissa = text.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
        assert_eq!(num(f64::NAN), Value::Null);
    }
}
