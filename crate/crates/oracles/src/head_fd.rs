//! Central finite differences of the head objective, recomputed from the raw
//! parameter buffer with an independent forward pass.

use grasp_core::head::{layer_shapes, DenseHead};

const EPS: f64 = 1e-12;

/// One labeled sample, owned.
pub type Sample = (Vec<f64>, [f64; 5]);

/// Where the forward pass sits relative to the non-smooth points of the
/// objective: the sign of every hidden pre-activation and whether each output
/// probability is inside the log clamp.
#[derive(Debug, PartialEq, Eq)]
struct Regime(Vec<bool>);

fn forward(feature_dim: usize, params: &[f64], x: &[f64], regime: &mut Vec<bool>) -> [f64; 5] {
    let shapes = layer_shapes(feature_dim);
    let mut act = x.to_vec();
    for (l, s) in shapes.iter().enumerate() {
        let mut next = vec![0.0; s.out_dim];
        for o in 0..s.out_dim {
            let mut z = params[s.offset + s.weight_len() + o];
            for i in 0..s.in_dim {
                z += params[s.offset + o * s.in_dim + i] * act[i];
            }
            next[o] = z;
        }
        if l < 2 {
            for z in &mut next {
                regime.push(*z > 0.0);
                if *z < 0.0 {
                    *z = 0.0;
                }
            }
        }
        act = next;
    }
    let m = act.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = act.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    let p: [f64; 5] = std::array::from_fn(|i| e[i] / s);
    for &pi in &p {
        regime.push(pi > EPS && pi < 1.0 - EPS);
    }
    p
}

/// Batch-mean per-category binary cross-entropy with clamped predictions.
fn objective(feature_dim: usize, params: &[f64], batch: &[Sample], regime: &mut Vec<bool>) -> f64 {
    let mut total = 0.0;
    for (x, y) in batch {
        let p = forward(feature_dim, params, x, regime);
        let mut l = 0.0;
        for i in 0..5 {
            let pc = p[i].clamp(EPS, 1.0 - EPS);
            l -= y[i] * pc.ln() + (1.0 - y[i]) * (1.0 - pc).ln();
        }
        total += l / 5.0;
    }
    total / batch.len() as f64
}

pub fn loss(head: &DenseHead, batch: &[Sample]) -> f64 {
    objective(head.feature_dim(), head.params(), batch, &mut Vec::new())
}

/// Central difference for parameter `index`, or `None` when the step crosses
/// a ReLU kink or the clamp boundary (the objective is not smooth there).
pub fn partial(head: &DenseHead, batch: &[Sample], index: usize, step: f64) -> Option<f64> {
    let f = head.feature_dim();
    let mut params = head.params().to_vec();
    let mut base = Vec::new();
    objective(f, &params, batch, &mut base);

    let orig = params[index];
    params[index] = orig + step;
    let mut up = Vec::new();
    let plus = objective(f, &params, batch, &mut up);
    params[index] = orig - step;
    let mut down = Vec::new();
    let minus = objective(f, &params, batch, &mut down);

    if Regime(up) != Regime(base.clone()) || Regime(down) != Regime(base) {
        return None;
    }
    Some((plus - minus) / (2.0 * step))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CheckReport {
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_err: f64,
}

/// Relative error with a floor on the denominator, so that entries that are
/// zero in both routes (dead ReLU units) compare as equal.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `analytic` against central differences at `indices`.
pub fn check(
    head: &DenseHead,
    batch: &[Sample],
    analytic: &[f64],
    indices: &[usize],
    step: f64,
    floor: f64,
) -> CheckReport {
    let mut r = CheckReport::default();
    for &i in indices {
        match partial(head, batch, i, step) {
            Some(n) => {
                r.checked += 1;
                r.max_rel_err = r.max_rel_err.max(relative_error(analytic[i], n, floor));
            }
            None => r.skipped += 1,
        }
    }
    r
}
