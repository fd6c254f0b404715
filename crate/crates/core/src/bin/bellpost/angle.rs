//! Angle literals such as `0.25`, `pi`, `-pi/2`, `3pi/4` or `0.5*pi`.

use std::f64::consts::PI;

pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || format!("invalid angle `{text}` (use radians, e.g. 0.3, pi/4, -3pi/2)");
    let Some(pos) = s.find("pi") else {
        return s
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(err);
    };
    let (head, tail) = (&s[..pos], &s[pos + 2..]);
    let coef = match head.strip_suffix('*').unwrap_or(head) {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| err())?,
    };
    let denom = match tail {
        "" => 1.0,
        t => t
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .filter(|d| *d != 0.0)
            .ok_or_else(err)?,
    };
    let v = coef * PI / denom;
    v.is_finite().then_some(v).ok_or_else(err)
}
