//! Naive layer implementations that execute real arithmetic and count every
//! scalar operation as it happens.

use grasp_core::flops::LayerSpec;

/// Tallies operations by kind; [`Counter::total`] is the FLOP count.
#[derive(Debug, Default, Clone, Copy)]
pub struct Counter {
    pub mul: u64,
    pub add: u64,
    pub div: u64,
    pub cmp: u64,
    pub exp: u64,
    pub other: u64,
}

impl Counter {
    pub fn total(&self) -> u64 {
        self.mul + self.add + self.div + self.cmp + self.exp + self.other
    }

    fn mul(&mut self, a: f64, b: f64) -> f64 {
        self.mul += 1;
        a * b
    }

    fn add(&mut self, a: f64, b: f64) -> f64 {
        self.add += 1;
        a + b
    }

    fn sub(&mut self, a: f64, b: f64) -> f64 {
        self.add += 1;
        a - b
    }

    fn div(&mut self, a: f64, b: f64) -> f64 {
        self.div += 1;
        a / b
    }

    fn max(&mut self, a: f64, b: f64) -> f64 {
        self.cmp += 1;
        a.max(b)
    }

    fn exp(&mut self, a: f64) -> f64 {
        self.exp += 1;
        a.exp()
    }
}

/// Deterministic pseudo-data so the loops operate on real values.
fn value(i: usize) -> f64 {
    ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5
}

fn tensor(len: usize) -> Vec<f64> {
    (0..len).map(value).collect()
}

fn out_extent(extent: usize, kernel: usize, stride: usize, padding: usize) -> usize {
    (extent + 2 * padding - kernel) / stride + 1
}

/// Runs `layer` on synthetic data and returns the operation tally.
pub fn count_layer(layer: &LayerSpec) -> Counter {
    let mut c = Counter::default();
    match *layer {
        LayerSpec::Dense { in_dim, out_dim } => {
            let x = tensor(in_dim);
            let w = tensor(in_dim * out_dim);
            let b = tensor(out_dim);
            for o in 0..out_dim {
                let mut acc = 0.0;
                for i in 0..in_dim {
                    let p = c.mul(w[o * in_dim + i], x[i]);
                    acc = c.add(acc, p);
                }
                let _ = c.add(acc, b[o]);
            }
        }
        LayerSpec::Conv2D { in_h, in_w, in_ch, out_ch, kernel, stride, padding } => {
            let x = tensor(in_h * in_w * in_ch);
            let w = tensor(kernel * kernel * in_ch * out_ch);
            let b = tensor(out_ch);
            let (oh, ow) = (out_extent(in_h, kernel, stride, padding), out_extent(in_w, kernel, stride, padding));
            for oy in 0..oh {
                for ox in 0..ow {
                    for o in 0..out_ch {
                        let mut acc = 0.0;
                        for ky in 0..kernel {
                            for kx in 0..kernel {
                                for ci in 0..in_ch {
                                    let iy = (oy * stride + ky) as isize - padding as isize;
                                    let ix = (ox * stride + kx) as isize - padding as isize;
                                    let inside = iy >= 0 && ix >= 0 && (iy as usize) < in_h && (ix as usize) < in_w;
                                    let xv =
                                        if inside { x[((iy as usize) * in_w + ix as usize) * in_ch + ci] } else { 0.0 };
                                    let p = c.mul(w[((o * kernel + ky) * kernel + kx) * in_ch + ci], xv);
                                    acc = c.add(acc, p);
                                }
                            }
                        }
                        let _ = c.add(acc, b[o]);
                    }
                }
            }
        }
        LayerSpec::DepthwiseConv2D { in_h, in_w, channels, kernel, stride, padding, depth_multiplier } => {
            let x = tensor(in_h * in_w * channels);
            let w = tensor(kernel * kernel * channels * depth_multiplier);
            let b = tensor(channels * depth_multiplier);
            let (oh, ow) = (out_extent(in_h, kernel, stride, padding), out_extent(in_w, kernel, stride, padding));
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..channels {
                        for m in 0..depth_multiplier {
                            let oc = ch * depth_multiplier + m;
                            let mut acc = 0.0;
                            for ky in 0..kernel {
                                for kx in 0..kernel {
                                    let iy = (oy * stride + ky) as isize - padding as isize;
                                    let ix = (ox * stride + kx) as isize - padding as isize;
                                    let inside = iy >= 0 && ix >= 0 && (iy as usize) < in_h && (ix as usize) < in_w;
                                    let xv = if inside {
                                        x[((iy as usize) * in_w + ix as usize) * channels + ch]
                                    } else {
                                        0.0
                                    };
                                    let p = c.mul(w[(oc * kernel + ky) * kernel + kx], xv);
                                    acc = c.add(acc, p);
                                }
                            }
                            let _ = c.add(acc, b[oc]);
                        }
                    }
                }
            }
        }
        LayerSpec::GlobalAvgPool2D { in_h, in_w, channels } => {
            let x = tensor(in_h * in_w * channels);
            for ch in 0..channels {
                let mut acc = 0.0;
                for p in 0..in_h * in_w {
                    acc = c.add(acc, x[p * channels + ch]);
                }
                let _ = c.div(acc, (in_h * in_w) as f64);
            }
        }
        LayerSpec::Activation { size } => {
            for v in tensor(size) {
                let _ = c.max(v, 0.0);
            }
        }
        LayerSpec::ElementwiseAdd { size } => {
            let (a, b) = (tensor(size), tensor(size + 1));
            for i in 0..size {
                let _ = c.add(a[i], b[i + 1]);
            }
        }
        LayerSpec::Softmax { size } => {
            let x = tensor(size);
            // The running max is treated as free; the remaining four passes are counted.
            let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let shifted: Vec<f64> = x.iter().map(|&v| c.sub(v, m)).collect();
            let e: Vec<f64> = shifted.iter().map(|&v| c.exp(v)).collect();
            let mut sum = 0.0;
            for &v in &e {
                sum = c.add(sum, v);
            }
            for &v in &e {
                let _ = c.div(v, sum);
            }
        }
        LayerSpec::MaxPool2D { in_h, in_w, channels, kernel, stride } => {
            let x = tensor(in_h * in_w * channels);
            let (oh, ow) = (out_extent(in_h, kernel, stride, 0), out_extent(in_w, kernel, stride, 0));
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..channels {
                        let mut best = x[((oy * stride) * in_w + ox * stride) * channels + ch];
                        for ky in 0..kernel {
                            for kx in 0..kernel {
                                if ky == 0 && kx == 0 {
                                    continue;
                                }
                                let v = x[((oy * stride + ky) * in_w + ox * stride + kx) * channels + ch];
                                best = c.max(best, v);
                            }
                        }
                        let _ = best;
                    }
                }
            }
        }
    }
    c
}
