//! Brute-force scans for metastability windows on recorded residuals.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::gfn::CounterexampleFn;

/// Outcome of [`find_metastable_window`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum WindowScan {
    /// The smallest `N` whose window `[N, N + g(N)]` fits and stays below `ε`.
    Found { n: u64, window_end: u64, skipped: u64 },
    /// Every fitting window up to the cap has a residual `≥ ε`.
    NotFound { checked: u64, skipped: u64 },
    /// No window up to the cap fits in the trace.
    Inconclusive { skipped: u64 },
}

impl WindowScan {
    pub fn n(&self) -> Option<u64> {
        match self {
            WindowScan::Found { n, .. } => Some(*n),
            _ => None,
        }
    }
}

/// `first_bad[m]`: least `j ≥ m` with `residuals[j] ≥ ε` (or `len`).
fn first_bad(residuals: &[f64], eps: f64) -> Vec<usize> {
    let mut out = vec![residuals.len(); residuals.len() + 1];
    for m in (0..residuals.len()).rev() {
        out[m] = if residuals[m] < eps { out[m + 1] } else { m };
    }
    out
}

fn window_end(g: &CounterexampleFn, n: usize, last: usize) -> Option<usize> {
    let end = g.eval_u64(n as u64) + n;
    end.to_usize().filter(|&e| e <= last)
}

/// Scans `N = 0, …, cap` for the first `N` with `residuals[m] < ε` for all
/// `m ∈ [N, N + g(N)]`. Windows running past the last index are skipped.
pub fn find_metastable_window(residuals: &[f64], eps: f64, g: &CounterexampleFn, cap: usize) -> WindowScan {
    if residuals.is_empty() {
        return WindowScan::Inconclusive { skipped: 0 };
    }
    let last = residuals.len() - 1;
    let bad = first_bad(residuals, eps);
    let (mut checked, mut skipped) = (0u64, 0u64);
    for n in 0..=cap.min(last) {
        let Some(end) = window_end(g, n, last) else {
            skipped += 1;
            continue;
        };
        checked += 1;
        if bad[n] > end {
            return WindowScan::Found {
                n: n as u64,
                window_end: end as u64,
                skipped,
            };
        }
    }
    if checked == 0 {
        WindowScan::Inconclusive { skipped }
    } else {
        WindowScan::NotFound { checked, skipped }
    }
}

/// Outcome of [`check_candidate_shape`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CandidateCheck {
    /// `N' = hⁱ(0) + 1 ≥ N` has the window property.
    Confirmed { n: u64, i: u64 },
    /// The next candidate at or past `N` has a window beyond the trace.
    Inconclusive { next_candidate: u64 },
    /// All `M` candidates at or past `N` fit in the trace and fail.
    Failed { tried: u64 },
}

/// Looks for a candidate `N' = hⁱ(0) + 1`, `i < M`, with `N' ≥ n_emp` and the
/// window property on `residuals`. `h` must satisfy `h(n) > n`.
pub fn check_candidate_shape(
    residuals: &[f64],
    eps: f64,
    g: &CounterexampleFn,
    h: impl Fn(&BigUint) -> BigUint,
    m: &BigUint,
    n_emp: u64,
) -> CandidateCheck {
    let last = residuals.len().saturating_sub(1);
    let bad = first_bad(residuals, eps);
    let mut v = BigUint::zero();
    let mut i = 0u64;
    let mut tried = 0u64;
    while &BigUint::from(i) < m {
        let cand = &v + 1u32;
        let Some(c) = cand.to_usize().filter(|&c| c <= last) else {
            return CandidateCheck::Inconclusive {
                next_candidate: cand.to_u64().unwrap_or(u64::MAX),
            };
        };
        if c as u64 >= n_emp {
            let Some(end) = window_end(g, c, last) else {
                return CandidateCheck::Inconclusive { next_candidate: c as u64 };
            };
            tried += 1;
            if bad[c] > end {
                return CandidateCheck::Confirmed { n: c as u64, i };
            }
        }
        v = h(&v);
        i += 1;
    }
    CandidateCheck::Failed { tried }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halving(len: usize) -> Vec<f64> {
        (0..len).map(|n| 0.5f64.powi(n as i32)).collect()
    }

    #[test]
    fn first_index_below_eps() {
        let r = halving(30);
        let zero = CounterexampleFn::Zero;
        assert_eq!(find_metastable_window(&r, 0.1, &zero, 29).n(), Some(4));
        let ten = CounterexampleFn::parse("const:10").unwrap();
        assert_eq!(find_metastable_window(&r, 0.1, &ten, 29).n(), Some(4));
    }

    #[test]
    fn oscillating_residuals() {
        // 1/n + (n mod 2): only even n dip below 0.5 (n ≥ 3), so no window of length 2
        let r: Vec<f64> = (0..50)
            .map(|n| if n == 0 { 2.0 } else { 1.0 / n as f64 + (n % 2) as f64 })
            .collect();
        let one = CounterexampleFn::parse("const:1").unwrap();
        assert_eq!(
            find_metastable_window(&r, 0.5, &one, 49),
            WindowScan::NotFound { checked: 49, skipped: 1 }
        );
        assert_eq!(find_metastable_window(&r, 0.5, &CounterexampleFn::Zero, 49).n(), Some(4));
    }

    #[test]
    fn windows_past_the_trace_are_inconclusive() {
        let r = halving(5);
        let big = CounterexampleFn::parse("const:100").unwrap();
        assert_eq!(
            find_metastable_window(&r, 0.1, &big, 4),
            WindowScan::Inconclusive { skipped: 5 }
        );
        assert_eq!(find_metastable_window(&[], 0.1, &big, 4), WindowScan::Inconclusive { skipped: 0 });
    }

    #[test]
    fn candidate_shape() {
        let r = halving(40);
        let zero = CounterexampleFn::Zero;
        let h = |n: &BigUint| n + 2u32;
        // candidates 1, 3, 5, …; N = 4 is found, N' = 5 confirms
        assert_eq!(
            check_candidate_shape(&r, 0.1, &zero, h, &BigUint::from(100u32), 4),
            CandidateCheck::Confirmed { n: 5, i: 2 }
        );
        assert_eq!(
            check_candidate_shape(&r[..5], 0.1, &zero, h, &BigUint::from(100u32), 4),
            CandidateCheck::Inconclusive { next_candidate: 5 }
        );
        assert_eq!(
            check_candidate_shape(&r, 0.1, &zero, h, &BigUint::from(2u32), 4),
            CandidateCheck::Failed { tried: 0 }
        );
    }
}
