//! Newest-first sample history with contiguous windows.

/// Fixed-length history of the most recent samples, newest first.
///
/// Backed by a buffer twice the window length so that [`window`](Self::window)
/// is always a contiguous slice; the window is copied back once per `len`
/// pushes.
#[derive(Debug, Clone)]
pub struct SampleHistory {
    data: Vec<f64>,
    len: usize,
    pos: usize,
}

impl SampleHistory {
    /// All-zero history (cold start).
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "history length must be positive");
        Self {
            data: vec![0.0; 2 * len],
            len,
            pos: len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn push(&mut self, x: f64) {
        if self.pos == 0 {
            let keep = self.len - 1;
            self.data.copy_within(0..keep, self.len + 1);
            self.pos = self.len + 1;
        }
        self.pos -= 1;
        self.data[self.pos] = x;
    }

    /// `[x(n), x(n-1), ..., x(n-len+1)]`.
    #[inline]
    pub fn window(&self) -> &[f64] {
        &self.data[self.pos..self.pos + self.len]
    }

    pub fn newest(&self) -> f64 {
        self.data[self.pos]
    }

    pub fn clear(&mut self) {
        self.data.fill(0.0);
        self.pos = self.len;
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorize the reduction.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_is_newest_first_and_wraps() {
        let mut h = SampleHistory::new(3);
        assert_eq!(h.window(), &[0.0, 0.0, 0.0]);
        for x in 1..=10 {
            h.push(x as f64);
            let n = x as f64;
            let expect: Vec<f64> = (0..3).map(|j| (n - j as f64).max(0.0)).collect();
            assert_eq!(h.window(), expect.as_slice());
            assert_eq!(h.newest(), n);
        }
    }

    #[test]
    fn single_sample_history() {
        let mut h = SampleHistory::new(1);
        h.push(2.0);
        h.push(3.0);
        assert_eq!(h.window(), &[3.0]);
    }

    #[test]
    fn dot_matches_naive_on_odd_lengths() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5 - 1.0).collect();
        let b: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
