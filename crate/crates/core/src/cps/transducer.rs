//! Unweighted split conformal transducer computed directly by counting
//! calibration scores, independently of the weighted construction.

use super::TIE_TOLERANCE;
use crate::error::{Error, Result};

/// `Q(y, tau) = (#{R_i < r} + tau * (#{R_i = r} + 1)) / (n + 1)` where `r`
/// is the score of the candidate label, with ties counted within the tie
/// tolerance in score space.
pub fn split_conformal_transducer(scores: &[f64], candidate_score: f64, tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau must lie in [0, 1], got {tau}")));
    }
    let mut less = 0usize;
    let mut equal = 0usize;
    for &s in scores {
        if s < candidate_score - TIE_TOLERANCE {
            less += 1;
        } else if s <= candidate_score + TIE_TOLERANCE {
            equal += 1;
        }
    }
    Ok((less as f64 + tau * (equal as f64 + 1.0)) / (scores.len() as f64 + 1.0))
}

/// Atoms `(mu + sigma * R_(k), multiplicity / (n + 1))` of the unweighted
/// split predictive system, with tail mass `1 / (n + 1)`.
pub fn unweighted_atoms(scores: &[f64], prediction: f64, sigma: f64) -> (Vec<(f64, f64)>, f64) {
    let n1 = scores.len() as f64 + 1.0;
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut atoms: Vec<(f64, usize)> = Vec::new();
    let mut group_start = f64::NEG_INFINITY;
    for s in sorted {
        let v = prediction + sigma * s;
        match atoms.last_mut() {
            Some((_, count)) if v - group_start <= TIE_TOLERANCE => *count += 1,
            _ => {
                group_start = v;
                atoms.push((v, 1));
            }
        }
    }
    let atoms = atoms.into_iter().map(|(v, c)| (v, c as f64 / n1)).collect();
    (atoms, 1.0 / n1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_scores() {
        let scores = [-1.0, 0.0, 0.0, 2.0];
        assert_eq!(split_conformal_transducer(&scores, 0.0, 0.0).unwrap(), 0.2);
        assert_eq!(split_conformal_transducer(&scores, 0.0, 1.0).unwrap(), 0.8);
        assert_eq!(split_conformal_transducer(&scores, 5.0, 1.0).unwrap(), 1.0);
        assert_eq!(split_conformal_transducer(&scores, -5.0, 0.0).unwrap(), 0.0);
        assert!(split_conformal_transducer(&scores, 0.0, 2.0).is_err());
    }

    #[test]
    fn atoms_group_duplicates() {
        let (atoms, tail) = unweighted_atoms(&[1.0, 1.0], 0.0, 1.0);
        assert_eq!(atoms, vec![(1.0, 2.0 / 3.0)]);
        assert_eq!(tail, 1.0 / 3.0);
    }
}
