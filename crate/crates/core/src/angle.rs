//! Heading arithmetic on the half-open interval `[-pi, pi)`.

use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Wrap an angle into `[-pi, pi)`.
pub fn wrap(angle: f64) -> f64 {
    let mut wrapped = angle - TWO_PI * ((angle + PI) / TWO_PI).floor();
    // floor() can leave the result a rounding error above the open end.
    if wrapped >= PI {
        wrapped -= TWO_PI;
    }
    if wrapped < -PI {
        wrapped += TWO_PI;
    }
    wrapped
}

/// Shortest signed difference `a - b`, wrapped.
pub fn diff(a: f64, b: f64) -> f64 {
    wrap(a - b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn open_end_maps_to_closed_end() {
        assert_eq!(wrap(PI), -PI);
        assert_eq!(wrap(-PI), -PI);
        assert_eq!(wrap(0.0), 0.0);
    }

    #[test]
    fn shortest_way_around() {
        // -3.0 - 3.0 = -6.0 -> 2*pi - 6
        assert!((diff(-3.0, 3.0) - (TWO_PI - 6.0)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn wrapped_in_range_and_congruent(a in -1e4f64..1e4) {
            let w = wrap(a);
            prop_assert!((-PI..PI).contains(&w));
            let turns = (a - w) / TWO_PI;
            prop_assert!((turns - turns.round()).abs() < 1e-9);
        }
    }
}
