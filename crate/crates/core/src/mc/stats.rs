/// Compensated summation; values are added in a fixed order by callers.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Mean and standard error of a real sample, accumulated in index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: usize,
    /// First value; sums are taken about it to avoid cancellation.
    shift: f64,
    s1: KahanSum,
    s2: KahanSum,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        if self.n == 0 {
            self.shift = x;
        }
        self.n += 1;
        let y = x - self.shift;
        self.s1.add(y);
        self.s2.add(y * y);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.shift + self.s1.value() / self.n as f64
    }

    /// `sample-std/√n`.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.s1.value() / n;
        let var = ((self.s2.value() - n * m * m) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Least-squares line through `(x, y)` with independent `y` errors `sy`;
/// returns `(slope, intercept, slope standard error)`.
pub fn linear_fit(x: &[f64], y: &[f64], sy: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let slope = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / sxx;
    let var: f64 = x.iter().zip(sy).map(|(a, s)| ((a - mx) / sxx).powi(2) * s * s).sum();
    (slope, my - slope * mx, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive() {
        let mut k = KahanSum::default();
        let mut naive = 0.0;
        k.add(1.0);
        naive += 1.0;
        for _ in 0..1_000_000 {
            k.add(1e-16);
            naive += 1e-16;
        }
        assert!((k.value() - (1.0 + 1e-10)).abs() < 1e-15);
        assert_eq!(naive, 1.0);
    }

    #[test]
    fn moments_of_small_sample() {
        let mut m = Moments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        assert!((m.stderr() - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        let mut one = Moments::default();
        one.push(7.0);
        assert_eq!((one.mean(), one.stderr()), (7.0, 0.0));
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<_> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (s, i, e) = linear_fit(&x, &y, &[0.1; 4]);
        assert!((s + 0.5).abs() < 1e-15 && (i - 2.0).abs() < 1e-15);
        assert!((e - 0.1 / 5f64.sqrt()).abs() < 1e-15);
    }
}
