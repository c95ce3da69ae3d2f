use serde::{Deserialize, Serialize};

/// Per-action statistics of one player at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionStats {
    /// Sum of risk-averse rewards.
    pub r_alpha: f64,
    pub n: u64,
    /// Smallest reward seen; `+∞` while unvisited.
    pub a_alpha: f64,
    /// Largest reward seen; `−∞` while unvisited.
    pub c_alpha: f64,
}

impl Default for ActionStats {
    fn default() -> Self {
        ActionStats { r_alpha: 0.0, n: 0, a_alpha: f64::INFINITY, c_alpha: f64::NEG_INFINITY }
    }
}

impl ActionStats {
    #[inline]
    pub fn update(&mut self, reward: f64) {
        self.r_alpha += reward;
        self.n += 1;
        self.a_alpha = self.a_alpha.min(reward);
        self.c_alpha = self.c_alpha.max(reward);
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.r_alpha / self.n as f64)
    }

    /// Invariants: unvisited ⇔ empty support; visited ⇒ `a ≤ mean ≤ c`.
    pub fn is_consistent(&self) -> bool {
        match self.n {
            0 => self.a_alpha == f64::INFINITY && self.c_alpha == f64::NEG_INFINITY && self.r_alpha == 0.0,
            n => {
                let mean = self.r_alpha / n as f64;
                let slack = 1e-9 * (1.0 + mean.abs());
                self.a_alpha <= self.c_alpha && self.a_alpha <= mean + slack && mean <= self.c_alpha + slack
            }
        }
    }
}

/// Risk-averse UCT index of a visited action. The exploration width is the
/// observed reward support, clamped below at the bid increment.
#[inline]
pub fn selection_index(s: &ActionStats, total_visits: u64, epsilon: f64) -> f64 {
    debug_assert!(s.n > 0);
    let n = s.n as f64;
    let width = (s.c_alpha - s.a_alpha).max(epsilon);
    s.r_alpha / n + width * (2.0 * (total_visits as f64).ln() / n).sqrt()
}

/// Index of the action to play: the first unvisited action if any,
/// otherwise the highest index value, ties to the lowest position.
pub fn select_action(stats: &[ActionStats], epsilon: f64) -> usize {
    debug_assert!(!stats.is_empty());
    if let Some(k) = stats.iter().position(|s| s.n == 0) {
        return k;
    }
    let total: u64 = stats.iter().map(|s| s.n).sum();
    let mut best = 0;
    let mut best_q = f64::NEG_INFINITY;
    for (k, s) in stats.iter().enumerate() {
        let q = selection_index(s, total, epsilon);
        if q > best_q {
            best_q = q;
            best = k;
        }
    }
    best
}

/// Final move: highest mean reward among visited actions, ties to the lowest position.
pub fn best_mean(stats: &[ActionStats]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in stats.iter().enumerate() {
        if let Some(m) = s.mean() {
            if best.is_none_or(|(_, bm)| m > bm) {
                best = Some((k, m));
            }
        }
    }
    best.map(|(k, _)| k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn stats(r: f64, n: u64, a: f64, c: f64) -> ActionStats {
        ActionStats { r_alpha: r, n, a_alpha: a, c_alpha: c }
    }

    #[test]
    fn index_spot_value() {
        let q = selection_index(&stats(10.0, 4, 0.0, 8.0), 10, 1.0);
        let oracle = 2.5 + 8.0 * (2.0 * 10f64.ln() / 4.0).sqrt();
        assert_abs_diff_eq!(q, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(q, 11.084, epsilon = 1e-3);
    }

    #[test]
    fn narrow_support_clamps_to_increment() {
        let tight = selection_index(&stats(6.0, 3, 2.0, 2.0), 9, 0.5);
        assert_abs_diff_eq!(tight, 2.0 + 0.5 * (2.0 * 9f64.ln() / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn unvisited_action_goes_first() {
        let s = [stats(100.0, 5, 10.0, 30.0), ActionStats::default(), stats(1.0, 1, 1.0, 1.0)];
        assert_eq!(select_action(&s, 1.0), 1);
    }

    #[test]
    fn ties_go_to_lowest_position() {
        let s = [stats(4.0, 2, 2.0, 2.0), stats(4.0, 2, 2.0, 2.0)];
        assert_eq!(select_action(&s, 1.0), 0);
        assert_eq!(best_mean(&s), Some(0));
        assert_eq!(best_mean(&[ActionStats::default()]), None);
    }

    #[test]
    fn updates_track_sum_count_and_support() {
        let mut s = ActionStats::default();
        assert!(s.is_consistent());
        s.update(5.0);
        assert_eq!(s, stats(5.0, 1, 5.0, 5.0));
        s.update(-2.0);
        assert_eq!(s, stats(3.0, 2, -2.0, 5.0));
        assert!(s.is_consistent());
    }
}
