//! Small dense vector helpers shared by the geometric modules.

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Lexicographic total order on coordinate vectors.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Volume of the Euclidean ball of radius `r` in dimension `d`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    let half = d as f64 / 2.0;
    std::f64::consts::PI.powf(half) * r.powi(d as i32) / statrs::function::gamma::gamma(half + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(1, 2.0) - 4.0).abs() < 1e-12);
        assert!((ball_volume(2, 1.0) - std::f64::consts::PI).abs() < 1e-12);
        assert!((ball_volume(3, 1.0) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn lexicographic_order() {
        use std::cmp::Ordering::*;
        assert_eq!(lex_cmp(&[0.0, 1.0], &[0.0, 2.0]), Less);
        assert_eq!(lex_cmp(&[1.0, -5.0], &[0.0, 2.0]), Greater);
        assert_eq!(lex_cmp(&[1.0], &[1.0]), Equal);
    }
}
