//! Reference computations for the test suites.
//!
//! Each function here recomputes a quantity by a different, deliberately
//! naive route than `grasp-core` uses. Only parameter layouts and value types
//! are shared with the library; no arithmetic path is.

pub mod flops_naive;
pub mod head_fd;

use grasp_core::pareto::ModelCard;

/// Angle between two vectors via `2·atan2(|û - v̂|, |û + v̂|)`, which is
/// accurate for nearly parallel vectors, converted to angular similarity.
pub fn angular_similarity_atan2(u: &[f64], v: &[f64]) -> f64 {
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a / nu, b / nv);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    let theta = 2.0 * diff.sqrt().atan2(sum.sqrt());
    1.0 - 2.0 * theta / std::f64::consts::PI
}

/// O(n²) scan: indices of cards no other card dominates, in input order.
pub fn brute_force_frontier(cards: &[ModelCard]) -> Vec<usize> {
    let better = |a: &ModelCard, b: &ModelCard| {
        let no_worse = a.top5_accuracy >= b.top5_accuracy && a.flops <= b.flops;
        let differs = a.top5_accuracy != b.top5_accuracy || a.flops != b.flops;
        no_worse && differs
    };
    (0..cards.len()).filter(|&i| !cards.iter().any(|c| better(c, &cards[i]))).collect()
}

/// Linear scan for the budgeted choice: best accuracy among frontier cards
/// within budget, else the cheapest frontier card. Returns `(index, over_budget)`.
pub fn budget_scan(cards: &[ModelCard], budget: u64) -> (usize, bool) {
    let front = brute_force_frontier(cards);
    let mut best: Option<usize> = None;
    for &i in &front {
        if cards[i].flops > budget {
            continue;
        }
        best = match best {
            Some(b) if cards[b].top5_accuracy >= cards[i].top5_accuracy => Some(b),
            _ => Some(i),
        };
    }
    match best {
        Some(b) => (b, false),
        None => (*front.iter().min_by_key(|&&i| cards[i].flops).expect("non-empty"), true),
    }
}

/// Direct 2-D Gaussian convolution with a `(2r+1)²` kernel, `r = ceil(3σ)`,
/// normalized over the square window, clamp-to-edge, rounded to u8.
pub fn blur_dense_2d(data: &[u8], width: usize, height: usize, channels: usize, sigma: f64) -> Vec<u8> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            kernel.push(((-(dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = kernel.iter().sum();
    let (w, h) = (width as isize, height as isize);
    let mut out = vec![0u8; data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..channels {
                let mut acc = 0.0;
                let mut k = 0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sx = (x + dx).clamp(0, w - 1) as usize;
                        let sy = (y + dy).clamp(0, h - 1) as usize;
                        acc += kernel[k] / total * data[(sy * width + sx) * channels + c] as f64;
                        k += 1;
                    }
                }
                out[(y as usize * width + x as usize) * channels + c] = acc.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    out
}

/// Mean of the last `window` vectors of `stream[..=end]`.
pub fn trailing_mean(stream: &[[f64; 5]], end: usize, window: usize) -> [f64; 5] {
    let start = (end + 1).saturating_sub(window);
    let mut acc = [0.0; 5];
    for s in &stream[start..=end] {
        for i in 0..5 {
            acc[i] += s[i];
        }
    }
    let n = (end + 1 - start) as f64;
    acc.map(|v| v / n)
}

/// The Adam recurrences written out literally, one parameter at a time.
pub struct ReferenceAdam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl ReferenceAdam {
    pub fn new(n: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { beta1, beta2, eps, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, theta: &mut [f64], g: &[f64], lr: f64) {
        self.t += 1;
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i].powi(2);
            let m_hat = self.m[i] / (1.0 - self.beta1.powi(self.t));
            let v_hat = self.v[i] / (1.0 - self.beta2.powi(self.t));
            theta[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
