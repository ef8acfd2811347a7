use alloc::format;
use alloc::string::String;

/// Two-decimal rendering that never prints a negative zero.
pub fn fixed2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        String::from("0.00")
    } else {
        s
    }
}
