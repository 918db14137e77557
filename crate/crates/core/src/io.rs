//! Canonical JSON and the strategy file format.
//!
//! Canonical output is a single line with sorted object keys, integers
//! written as integers and every other number printed like C's `%.17g`,
//! followed by a newline. Complex entries are `[re, im]` pairs and matrices
//! are nested row-major arrays.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{invalid, Result};
use crate::linalg::{c, ComplexMatrix};
use crate::scenario::counterexample::CounterexampleStrategy;
use crate::states::{Povm, SenderStates, Strategy};

/// Formats a float with 17 significant digits the way `printf("%.17g")`
/// does: trailing zeros trimmed, exponent form outside `1e-4 ≤ |x| < 1e17`.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(text: &str) -> &str {
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.')
    } else {
        text
    }
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(num) => {
            if num.is_i64() || num.is_u64() {
                out.push_str(&num.to_string());
            } else {
                let x = num.as_f64().expect("finite float");
                out.push_str(&format_g17(x));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.into_iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("string"));
                out.push(':');
                write_value(&map[key], out);
            }
            out.push('}');
        }
    }
}

/// Canonical single-line text with a trailing newline.
pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out.push('\n');
    out
}

/// Canonical text for any serializable value. Non-finite floats become `null`.
pub fn to_canonical<T: Serialize>(value: &T) -> Result<String> {
    Ok(to_canonical_string(&serde_json::to_value(value)?))
}

pub fn matrix_to_value(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| invalid(format!("{what}: expected a number, got {v}")))
}

pub fn matrix_from_value(value: &Value, what: &str) -> Result<ComplexMatrix> {
    let rows = value
        .as_array()
        .ok_or_else(|| invalid(format!("{what}: expected an array of rows")))?;
    let dim = rows.len();
    if dim == 0 {
        return Err(invalid(format!("{what}: empty matrix")));
    }
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        let entries = row
            .as_array()
            .filter(|r| r.len() == dim)
            .ok_or_else(|| invalid(format!("{what}: row {i} must hold {dim} entries")))?;
        for (j, entry) in entries.iter().enumerate() {
            let pair = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| invalid(format!("{what}[{i}][{j}]: expected [re, im]")))?;
            m[(i, j)] = c(number(&pair[0], what)?, number(&pair[1], what)?);
        }
    }
    Ok(m)
}

pub fn strategy_to_value(strategy: &Strategy) -> Value {
    let senders: Vec<Value> = strategy
        .senders
        .iter()
        .map(|s| {
            let rho: Vec<Value> = s
                .rho
                .iter()
                .map(|row| Value::Array(row.iter().map(matrix_to_value).collect()))
                .collect();
            let mut obj = Map::new();
            obj.insert("rho".into(), Value::Array(rho));
            Value::Object(obj)
        })
        .collect();
    json!({
        "n": strategy.n,
        "senders": senders,
        "povm": strategy.povm.elements.iter().map(matrix_to_value).collect::<Vec<_>>(),
    })
}

/// Parses and validates a strategy document.
pub fn strategy_from_value(value: &Value) -> Result<Strategy> {
    let n = value
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| invalid("strategy: missing integer field \"n\""))? as usize;
    let senders_json = value
        .get("senders")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("strategy: missing array field \"senders\""))?;
    let mut senders = Vec::with_capacity(senders_json.len());
    for (j, sender) in senders_json.iter().enumerate() {
        let rho = sender
            .get("rho")
            .and_then(Value::as_array)
            .filter(|r| r.len() == 2)
            .ok_or_else(|| invalid(format!("sender {}: \"rho\" must be a 2x2 array", j + 1)))?;
        let mut mats = Vec::with_capacity(4);
        for (a, row) in rho.iter().enumerate() {
            let row = row
                .as_array()
                .filter(|r| r.len() == 2)
                .ok_or_else(|| invalid(format!("sender {}: rho[{a}] must hold two matrices", j + 1)))?;
            for (x, m) in row.iter().enumerate() {
                mats.push(matrix_from_value(m, &format!("sender {} rho[{a}][{x}]", j + 1))?);
            }
        }
        let mut it = mats.into_iter();
        let mut next = || it.next().expect("four matrices");
        let states = SenderStates {
            rho: [[next(), next()], [next(), next()]],
        };
        senders.push(states);
    }
    let povm_json = value
        .get("povm")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("strategy: missing array field \"povm\""))?;
    let elements = povm_json
        .iter()
        .enumerate()
        .map(|(k, m)| matrix_from_value(m, &format!("povm[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    if senders.len() != n {
        return Err(invalid(format!("n = {n} but {} senders listed", senders.len())));
    }
    let strategy = Strategy {
        n,
        senders,
        povm: Povm { elements },
    };
    strategy.validate()?;
    Ok(strategy)
}

/// `{"first": [3 matrices], "second": [3 matrices], "m0": matrix}`.
pub fn counterexample_to_value(strategy: &CounterexampleStrategy) -> Value {
    let list = |ms: &[ComplexMatrix; 3]| Value::Array(ms.iter().map(matrix_to_value).collect());
    json!({
        "first": list(&strategy.first),
        "second": list(&strategy.second),
        "m0": matrix_to_value(&strategy.m0),
    })
}

pub fn strategy_to_canonical(strategy: &Strategy) -> String {
    to_canonical_string(&strategy_to_value(strategy))
}

pub fn strategy_from_str(text: &str) -> Result<Strategy> {
    let value: Value = serde_json::from_str(text)?;
    strategy_from_value(&value)
}

pub fn read_strategy(path: &Path) -> Result<Strategy> {
    strategy_from_str(&fs::read_to_string(path)?)
}

pub fn write_strategy(path: &Path, strategy: &Strategy) -> Result<()> {
    fs::write(path, strategy_to_canonical(strategy))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{ideal_strategy, random_strategy};

    #[test]
    fn g17_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (0.1, "0.10000000000000001"),
            (-2.5, "-2.5"),
            (std::f64::consts::FRAC_1_SQRT_2, "0.70710678118654757"),
            (1e-5, "1.0000000000000001e-05"),
            (1.5e-300, "1.5000000000000001e-300"),
            (123456789.0, "123456789"),
            (1e17, "1e+17"),
            (0.0001, "0.0001"),
            (0.0, "0"),
            (-0.0, "-0"),
            (2.0f64.sqrt() * 2.0, "2.8284271247461903"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g17(x), want, "{x:e}");
        }
    }

    #[test]
    fn g17_round_trips() {
        for x in [0.3, 1.0 / 3.0, -7.123456789e-12, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn canonical_sorts_keys_and_keeps_integers() {
        let v = json!({"b": 1, "a": [0.5, 2], "c": {"z": true, "y": null}});
        assert_eq!(
            to_canonical_string(&v),
            "{\"a\":[0.5,2],\"b\":1,\"c\":{\"y\":null,\"z\":true}}\n"
        );
    }

    #[test]
    fn strategy_round_trip_is_byte_identical() {
        for strategy in [ideal_strategy(2).unwrap(), random_strategy(3, 4).unwrap()] {
            let text = strategy_to_canonical(&strategy);
            let parsed = strategy_from_value(&serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(parsed, strategy);
            assert_eq!(strategy_to_canonical(&parsed), text);
        }
    }

    #[test]
    fn malformed_strategies_are_rejected() {
        let mut v = strategy_to_value(&ideal_strategy(2).unwrap());
        v["n"] = json!(3);
        assert!(strategy_from_value(&v).is_err());
        let mut v = strategy_to_value(&ideal_strategy(2).unwrap());
        v["povm"][0][0][0] = json!([5.0, 0.0]);
        assert!(strategy_from_value(&v).is_err());
        assert!(strategy_from_value(&json!({"n": 2})).is_err());
    }
}
