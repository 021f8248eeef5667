//! Number formatting shared by all artifact writers.

/// 17 significant digits in scientific notation; parses back to the same
/// `f64` bit pattern.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(sig17(0.25), "2.5000000000000000e-1");
        assert_eq!(sig17(1.0), "1.0000000000000000e0");
        assert_eq!(sig17(0.0), "0.0000000000000000e0");
    }

    proptest! {
        #[test]
        fn round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let back: f64 = sig17(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
