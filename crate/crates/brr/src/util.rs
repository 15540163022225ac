//! Small internal helpers shared across modules.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `row` over `0..n`, in parallel when requested and the `parallel`
/// feature is enabled. The output is always in row order and each row's
/// computation is identical in both modes, so callers that reduce the
/// returned vector sequentially get bit-identical results either way.
pub(crate) fn run_rows<T: Send>(
    n: usize,
    parallel: bool,
    row: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return (0..n).into_par_iter().map(row).collect();
        }
    }
    let _ = parallel;
    (0..n).map(row).collect()
}

/// Compensated (Neumaier) summation: deterministic for a fixed input order
/// and accurate to well under 1e-12 relative at our scales.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_rows_preserves_order() {
        let seq = run_rows(100, false, |i| i * i);
        let par = run_rows(100, true, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        // naive summation loses the 1.0 here; compensation keeps it
        let mut s = Neumaier::default();
        for v in [1e16, 1.0, -1e16] {
            s.add(v);
        }
        assert_eq!(s.value(), 1.0);
    }
}
