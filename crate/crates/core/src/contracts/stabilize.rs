//! Series stabilization and componentwise ordering.
//!
//! Numeric signals are smoothed before contracts look at them: the
//! stabilized value at row `t` is the rounded mean of the `m` values
//! strictly before `t`. This suppresses single-sample glitches at the cost
//! of an `m`-row warm-up, which is why contract evaluation starts at row
//! `m`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StabilizeError {
    #[error("stabilization window must be at least 1")]
    EmptyWindow,
    #[error("stabilization window {window} exceeds the series length {len}")]
    WindowExceedsSeries { window: usize, len: usize },
    #[error("componentwise comparison needs equal lengths, got {a} and {b}")]
    LengthMismatch { a: usize, b: usize },
}

/// Moving average over the `m` preceding values, rounding half away from
/// zero upward. Output index `k` is the stabilized value at original row
/// `m + k`, so the result has `series.len() - m` entries.
pub fn stabilize(series: &[i64], m: usize) -> Result<Vec<i64>, StabilizeError> {
    if m == 0 {
        return Err(StabilizeError::EmptyWindow);
    }
    if m > series.len() {
        return Err(StabilizeError::WindowExceedsSeries {
            window: m,
            len: series.len(),
        });
    }
    let m_i = m as i64;
    let mut out = Vec::with_capacity(series.len() - m);
    let mut sum: i64 = series[..m].iter().sum();
    for t in m..series.len() {
        // Round half up: floor((2*sum + m) / (2*m)).
        out.push((2 * sum + m_i).div_euclid(2 * m_i));
        sum += series[t] - series[t - m];
    }
    Ok(out)
}

/// Whether `a[i] <= b[i]` for every component.
pub fn componentwise_leq(a: &[i64], b: &[i64]) -> Result<bool, StabilizeError> {
    if a.len() != b.len() {
        return Err(StabilizeError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    Ok(a.iter().zip(b).all(|(x, y)| x <= y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_with_window_two() {
        // Rows 2 and 3 average the two preceding samples.
        let out = stabilize(&[10, 20, 30, 40], 2).unwrap();
        assert_eq!(out, vec![15, 25]);
    }

    #[test]
    fn window_one_is_a_one_row_shift() {
        let s = [7, -3, 12, 12, 0];
        let out = stabilize(&s, 1).unwrap();
        assert_eq!(out, vec![7, -3, 12, 12]);
    }

    #[test]
    fn constant_series_is_a_fixed_point() {
        let out = stabilize(&[42; 10], 4).unwrap();
        assert_eq!(out, vec![42; 6]);
    }

    #[test]
    fn rounding_is_half_up_including_negatives() {
        // mean(1, 2) = 1.5 -> 2; mean(-1, -2) = -1.5 -> -1.
        assert_eq!(stabilize(&[1, 2, 0], 2).unwrap()[0], 2);
        assert_eq!(stabilize(&[-1, -2, 0], 2).unwrap()[0], -1);
    }

    #[test]
    fn errors_on_degenerate_windows() {
        assert_eq!(stabilize(&[1, 2], 0).unwrap_err(), StabilizeError::EmptyWindow);
        assert_eq!(
            stabilize(&[1, 2], 3).unwrap_err(),
            StabilizeError::WindowExceedsSeries { window: 3, len: 2 }
        );
        // m == len leaves nothing to evaluate but is well-formed.
        assert_eq!(stabilize(&[1, 2], 2).unwrap(), Vec::<i64>::new());
    }

    #[test]
    fn componentwise_order_is_partial() {
        assert_eq!(componentwise_leq(&[1, 2], &[1, 3]).unwrap(), true);
        assert_eq!(componentwise_leq(&[1, 4], &[1, 3]).unwrap(), false);
        // Incomparable both ways.
        assert_eq!(componentwise_leq(&[0, 4], &[1, 3]).unwrap(), false);
        assert_eq!(componentwise_leq(&[1, 3], &[0, 4]).unwrap(), false);
        assert!(componentwise_leq(&[1], &[1, 2]).is_err());
    }
}
