//! Pearson chi-squared test of independence on an r×c contingency table.

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquared {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
}

/// Statistic, degrees of freedom and upper-tail p-value (no continuity correction).
pub fn chi_squared_independence(table: &[Vec<u64>]) -> Result<ChiSquared, EvalError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 {
        return Err(EvalError::Degenerate(format!(
            "table must be at least 2x2, got {rows}x{cols}"
        )));
    }
    if let Some(i) = table.iter().position(|r| r.len() != cols) {
        return Err(EvalError::Degenerate(format!(
            "row {i} has {} columns, expected {cols}",
            table[i].len()
        )));
    }
    let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    if let Some(i) = row_sums.iter().position(|&s| s == 0) {
        return Err(EvalError::Degenerate(format!("row {i} sums to zero")));
    }
    if let Some(j) = col_sums.iter().position(|&s| s == 0) {
        return Err(EvalError::Degenerate(format!("column {j} sums to zero")));
    }
    let total = row_sums.iter().sum::<u64>() as f64;
    let mut statistic = 0.0;
    for (row, &rs) in table.iter().zip(&row_sums) {
        for (&observed, &cs) in row.iter().zip(&col_sums) {
            let expected = rs as f64 * cs as f64 / total;
            let d = observed as f64 - expected;
            statistic += d * d / expected;
        }
    }
    let dof = ((rows - 1) * (cols - 1)) as u32;
    Ok(ChiSquared {
        statistic,
        dof,
        p_value: chi_squared_sf(statistic, dof),
    })
}

/// Upper tail P(X > x) of a chi-squared distribution with `dof` degrees of freedom.
pub fn chi_squared_sf(x: f64, dof: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(f64::from(dof) / 2.0, x / 2.0)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(a) for a > 0.
pub fn ln_gamma(a: f64) -> f64 {
    if a < 0.5 {
        // reflection: Γ(a)Γ(1-a) = π / sin(πa)
        return (std::f64::consts::PI / (std::f64::consts::PI * a).sin()).ln() - ln_gamma(1.0 - a);
    }
    let a = a - 1.0;
    let t = a + LANCZOS_G + 0.5;
    let series = LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |acc, (i, c)| acc + c / (a + (i + 1) as f64));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (a + 0.5) * t.ln() - t + series.ln()
}

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Regularized lower incomplete gamma P(a, x) by its power series; converges fast for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = a;
    for _ in 0..MAX_ITER {
        n += 1.0;
        term *= x / n;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma Q(a, x) by modified Lentz continued fraction; for x ≥ a + 1.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}
