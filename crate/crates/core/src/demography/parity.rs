//! Parity ages: where the sex ratio crosses 100, and where mean male
//! quality catches up with mean female quality.

use crate::error::ParityError;

const BRACKET_TOL: f64 = 1e-9;

fn defined(ages: &[f64], values: &[Option<f64>]) -> Vec<(f64, f64)> {
    ages.iter().zip(values).filter_map(|(&a, v)| v.map(|v| (a, v))).collect()
}

/// First age at which `sr` falls to 100, linearly interpolated between the
/// bracketing points. Undefined points are skipped.
pub fn parity_age_numbers(ages: &[f64], sr: &[Option<f64>]) -> Result<f64, ParityError> {
    let pts = defined(ages, sr);
    let &(_, s0) = pts.first().ok_or(ParityError::Empty)?;
    if s0 <= 100.0 {
        return Err(ParityError::StartsBelow);
    }
    for w in pts.windows(2) {
        let ((a1, s1), (a2, s2)) = (w[0], w[1]);
        if s2 <= 100.0 {
            let span = s1 - s2;
            if span.abs() < BRACKET_TOL {
                return Ok(a2);
            }
            return Ok(a1 + (s1 - 100.0) / span * (a2 - a1));
        }
    }
    Err(ParityError::NeverCrosses)
}

/// First age at which mean male quality reaches mean female quality.
pub fn parity_age_quality(ages: &[f64], q_male: &[Option<f64>], q_female: &[Option<f64>]) -> Result<f64, ParityError> {
    let diff: Vec<Option<f64>> = q_male
        .iter()
        .zip(q_female)
        .map(|(m, f)| Some((*m)? - (*f)?))
        .collect();
    let pts = defined(ages, &diff);
    let &(a0, d0) = pts.first().ok_or(ParityError::Empty)?;
    if d0 >= 0.0 {
        return Ok(a0);
    }
    for w in pts.windows(2) {
        let ((a1, d1), (a2, d2)) = (w[0], w[1]);
        if d2 >= 0.0 {
            let span = d2 - d1;
            if span.abs() < BRACKET_TOL {
                return Ok(a2);
            }
            return Ok(a1 + (-d1) / span * (a2 - a1));
        }
    }
    Err(ParityError::NoQualityParity)
}
