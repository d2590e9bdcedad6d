//! Float formatting for data files: 17 significant digits, enough for every
//! f64 to survive a write/parse round trip bit-exactly.

pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::sig17;

    #[test]
    fn round_trips_exactly() {
        for &x in &[
            0.0,
            1.0,
            -1.0,
            33.0,
            28.718,
            std::f64::consts::PI,
            1.0e-300,
            -4.9e-324,
            f64::MAX,
        ] {
            let text = sig17(x);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{text}");
        }
    }
}
