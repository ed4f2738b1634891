//! Report values and serialization helpers shared by the CLI and library.
//!
//! Exact rationals serialize as `"num/den"` strings next to a decimal
//! rendering; non-degenerate enclosures expose both endpoints. All JSON is
//! emitted through `serde_json`'s sorted maps, so identical inputs yield
//! byte-identical reports.

use crate::interval::{ratio_to_f64, QInterval};
use num_rational::BigRational;
use serde_json::{json, Value};

/// CSV schema version line; the first line of every CSV report.
pub const CSV_HEADER: &str = "# kbv-report v1";

pub fn rational_str(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// JSON rendering of a certified value: exact rationals yield
/// `{"exact": "num/den", "decimal": x}`, enclosures yield
/// `{"lo": ..., "hi": ..., "decimal": midpoint}`.
pub fn mass_json(v: &QInterval) -> Value {
    match v.as_exact() {
        Some(q) => json!({
            "exact": rational_str(q),
            "decimal": ratio_to_f64(q),
        }),
        None => json!({
            "lo": rational_str(v.lo()),
            "hi": rational_str(v.hi()),
            "decimal": v.to_f64(),
        }),
    }
}

/// Compact single-cell rendering for CSV columns.
pub fn mass_csv(v: &QInterval) -> String {
    match v.as_exact() {
        Some(q) => rational_str(q),
        None => format!("[{};{}]", rational_str(v.lo()), rational_str(v.hi())),
    }
}

/// Decimal column companion to [`mass_csv`].
pub fn mass_decimal(v: &QInterval) -> f64 {
    v.to_f64()
}
