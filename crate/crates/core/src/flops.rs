//! Floating-point operation counts for symbolic layer descriptions.
//!
//! Conventions: a multiply and an add are one FLOP each (a multiply-accumulate
//! is two), biases cost one add per output, pooling comparisons are counted as
//! FLOPs, and softmax costs four operations per element (max-subtract, exp,
//! sum, divide).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlopsError {
    #[error("invalid layer: {0}")]
    InvalidLayer(&'static str),
    #[error("layer {index} expects input {expected:?} but receives {actual:?}")]
    ShapeMismatch { index: usize, expected: TensorShape, actual: TensorShape },
}

/// Activation shape flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorShape {
    Spatial { h: usize, w: usize, c: usize },
    Flat(usize),
}

impl TensorShape {
    pub fn len(&self) -> usize {
        match *self {
            TensorShape::Spatial { h, w, c } => h * w * c,
            TensorShape::Flat(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", deny_unknown_fields))]
pub enum LayerSpec {
    Conv2D {
        in_h: usize,
        in_w: usize,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        stride: usize,
        #[cfg_attr(feature = "serde", serde(default))]
        padding: usize,
    },
    DepthwiseConv2D {
        in_h: usize,
        in_w: usize,
        channels: usize,
        kernel: usize,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        stride: usize,
        #[cfg_attr(feature = "serde", serde(default))]
        padding: usize,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        depth_multiplier: usize,
    },
    Dense {
        in_dim: usize,
        out_dim: usize,
    },
    GlobalAvgPool2D {
        in_h: usize,
        in_w: usize,
        channels: usize,
    },
    Activation {
        size: usize,
    },
    Softmax {
        size: usize,
    },
    MaxPool2D {
        in_h: usize,
        in_w: usize,
        channels: usize,
        kernel: usize,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        stride: usize,
    },
    ElementwiseAdd {
        size: usize,
    },
}

#[cfg(feature = "serde")]
fn one() -> usize {
    1
}

fn conv_out(extent: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize, FlopsError> {
    let padded = extent + 2 * padding;
    if kernel > padded {
        return Err(FlopsError::InvalidLayer("kernel larger than padded input"));
    }
    Ok((padded - kernel) / stride + 1)
}

fn positive(values: &[usize]) -> Result<(), FlopsError> {
    if values.contains(&0) {
        Err(FlopsError::InvalidLayer("dimensions, kernel and stride must be positive"))
    } else {
        Ok(())
    }
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv2D { .. } => "Conv2D",
            LayerSpec::DepthwiseConv2D { .. } => "DepthwiseConv2D",
            LayerSpec::Dense { .. } => "Dense",
            LayerSpec::GlobalAvgPool2D { .. } => "GlobalAvgPool2D",
            LayerSpec::Activation { .. } => "Activation",
            LayerSpec::Softmax { .. } => "Softmax",
            LayerSpec::MaxPool2D { .. } => "MaxPool2D",
            LayerSpec::ElementwiseAdd { .. } => "ElementwiseAdd",
        }
    }

    /// Shape the layer consumes.
    pub fn input_shape(&self) -> TensorShape {
        match *self {
            LayerSpec::Conv2D { in_h, in_w, in_ch, .. } => TensorShape::Spatial { h: in_h, w: in_w, c: in_ch },
            LayerSpec::DepthwiseConv2D { in_h, in_w, channels, .. }
            | LayerSpec::GlobalAvgPool2D { in_h, in_w, channels }
            | LayerSpec::MaxPool2D { in_h, in_w, channels, .. } => {
                TensorShape::Spatial { h: in_h, w: in_w, c: channels }
            }
            LayerSpec::Dense { in_dim, .. } => TensorShape::Flat(in_dim),
            LayerSpec::Activation { size } | LayerSpec::Softmax { size } | LayerSpec::ElementwiseAdd { size } => {
                TensorShape::Flat(size)
            }
        }
    }

    /// Validates the layer and returns the shape it produces.
    pub fn output_shape(&self) -> Result<TensorShape, FlopsError> {
        match *self {
            LayerSpec::Conv2D { in_h, in_w, in_ch, out_ch, kernel, stride, padding } => {
                positive(&[in_h, in_w, in_ch, out_ch, kernel, stride])?;
                Ok(TensorShape::Spatial {
                    h: conv_out(in_h, kernel, stride, padding)?,
                    w: conv_out(in_w, kernel, stride, padding)?,
                    c: out_ch,
                })
            }
            LayerSpec::DepthwiseConv2D { in_h, in_w, channels, kernel, stride, padding, depth_multiplier } => {
                positive(&[in_h, in_w, channels, kernel, stride, depth_multiplier])?;
                Ok(TensorShape::Spatial {
                    h: conv_out(in_h, kernel, stride, padding)?,
                    w: conv_out(in_w, kernel, stride, padding)?,
                    c: channels * depth_multiplier,
                })
            }
            LayerSpec::Dense { in_dim, out_dim } => {
                positive(&[in_dim, out_dim])?;
                Ok(TensorShape::Flat(out_dim))
            }
            LayerSpec::GlobalAvgPool2D { in_h, in_w, channels } => {
                positive(&[in_h, in_w, channels])?;
                Ok(TensorShape::Flat(channels))
            }
            LayerSpec::Activation { size } | LayerSpec::Softmax { size } | LayerSpec::ElementwiseAdd { size } => {
                positive(&[size])?;
                Ok(TensorShape::Flat(size))
            }
            LayerSpec::MaxPool2D { in_h, in_w, channels, kernel, stride } => {
                positive(&[in_h, in_w, channels, kernel, stride])?;
                Ok(TensorShape::Spatial {
                    h: conv_out(in_h, kernel, stride, 0)?,
                    w: conv_out(in_w, kernel, stride, 0)?,
                    c: channels,
                })
            }
        }
    }

    /// Whether this layer can consume `prev`. Flat-input layers accept any
    /// shape with the right element count (implicit flatten).
    fn accepts(&self, prev: TensorShape) -> bool {
        match self.input_shape() {
            TensorShape::Flat(n) => prev.len() == n,
            spatial => prev == spatial,
        }
    }
}

/// Counts the FLOPs of one inference pass through `layer`.
pub fn layer_flops(layer: &LayerSpec) -> Result<u64, FlopsError> {
    let out = layer.output_shape()?;
    let (oh, ow) = match out {
        TensorShape::Spatial { h, w, .. } => (h as u64, w as u64),
        TensorShape::Flat(_) => (1, 1),
    };
    let flops = match *layer {
        LayerSpec::Conv2D { in_ch, out_ch, kernel, .. } => {
            let k2 = (kernel * kernel) as u64;
            oh * ow * out_ch as u64 * (2 * k2 * in_ch as u64 + 1)
        }
        LayerSpec::DepthwiseConv2D { channels, kernel, depth_multiplier, .. } => {
            let k2 = (kernel * kernel) as u64;
            oh * ow * (channels * depth_multiplier) as u64 * (2 * k2 + 1)
        }
        LayerSpec::Dense { in_dim, out_dim } => 2 * in_dim as u64 * out_dim as u64 + out_dim as u64,
        LayerSpec::GlobalAvgPool2D { in_h, in_w, channels } => channels as u64 * (in_h * in_w) as u64 + channels as u64,
        LayerSpec::Activation { size } | LayerSpec::ElementwiseAdd { size } => size as u64,
        LayerSpec::Softmax { size } => 4 * size as u64,
        LayerSpec::MaxPool2D { channels, kernel, .. } => oh * ow * channels as u64 * (kernel * kernel - 1) as u64,
    };
    Ok(flops)
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkSpec {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(name: impl Into<String>, layers: Vec<LayerSpec>) -> Self {
        Self { name: name.into(), layers }
    }
}

/// Per-layer FLOPs after checking that consecutive layers fit together.
pub fn per_layer_flops(net: &NetworkSpec) -> Result<Vec<u64>, FlopsError> {
    let mut counts = Vec::with_capacity(net.layers.len());
    let mut prev: Option<TensorShape> = None;
    for (index, layer) in net.layers.iter().enumerate() {
        let out = layer.output_shape()?;
        if let Some(actual) = prev {
            if !layer.accepts(actual) {
                return Err(FlopsError::ShapeMismatch { index, expected: layer.input_shape(), actual });
            }
        }
        counts.push(layer_flops(layer)?);
        // Elementwise layers keep the spatial layout of their input.
        prev = Some(match (layer, prev) {
            (LayerSpec::Activation { .. } | LayerSpec::Softmax { .. } | LayerSpec::ElementwiseAdd { .. }, Some(p)) => p,
            _ => out,
        });
    }
    Ok(counts)
}

pub fn network_flops(net: &NetworkSpec) -> Result<u64, FlopsError> {
    Ok(per_layer_flops(net)?.iter().sum())
}

/// Width of each dense layer in the grasp head.
pub const HEAD_WIDTHS: [usize; 3] = [256, 128, 5];

/// Replacement top network for a backbone feature map of the given shape:
/// global average pooling, two ReLU dense layers (256, 128) and a 5-way softmax.
pub fn head_spec(feature_h: usize, feature_w: usize, feature_ch: usize) -> NetworkSpec {
    let [h1, h2, out] = HEAD_WIDTHS;
    NetworkSpec::new(
        "grasp-head",
        vec![
            LayerSpec::GlobalAvgPool2D { in_h: feature_h, in_w: feature_w, channels: feature_ch },
            LayerSpec::Dense { in_dim: feature_ch, out_dim: h1 },
            LayerSpec::Activation { size: h1 },
            LayerSpec::Dense { in_dim: h1, out_dim: h2 },
            LayerSpec::Activation { size: h2 },
            LayerSpec::Dense { in_dim: h2, out_dim: out },
            LayerSpec::Softmax { size: out },
        ],
    )
}
