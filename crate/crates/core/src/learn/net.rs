//! Layered feed-forward networks over a flat parameter vector: dense layers,
//! a single-channel 1-D convolution, forward/backward passes.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerDesc {
    /// Fully connected; `relu` applies to the layer output.
    Dense { in_dim: usize, out_dim: usize, relu: bool },
    /// Single-channel 1-D convolution followed by ReLU; output is flattened
    /// as filters x output-length.
    Conv1d { len_in: usize, filters: usize, kernel: usize, stride: usize },
}

impl LayerDesc {
    pub fn param_count(&self) -> usize {
        match *self {
            LayerDesc::Dense { in_dim, out_dim, .. } => in_dim * out_dim + out_dim,
            LayerDesc::Conv1d { filters, kernel, .. } => filters * kernel + filters,
        }
    }

    pub fn out_len(&self) -> usize {
        match *self {
            LayerDesc::Dense { out_dim, .. } => out_dim,
            LayerDesc::Conv1d { len_in, filters, kernel, stride } => {
                filters * ((len_in - kernel) / stride + 1)
            }
        }
    }

    pub fn in_len(&self) -> usize {
        match *self {
            LayerDesc::Dense { in_dim, .. } => in_dim,
            LayerDesc::Conv1d { len_in, .. } => len_in,
        }
    }

    /// Fan-in used for He-uniform initialization.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerDesc::Dense { in_dim, .. } => in_dim,
            LayerDesc::Conv1d { kernel, .. } => kernel,
        }
    }
}

/// Offsets of each layer's parameter block in the flat vector.
pub fn layer_offsets(layers: &[LayerDesc]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(layers.len() + 1);
    let mut total = 0;
    for layer in layers {
        offsets.push(total);
        total += layer.param_count();
    }
    offsets.push(total);
    offsets
}

/// Activations per layer boundary: `acts[0]` is the input, `acts[i+1]` the
/// output of layer i (post-ReLU where applicable).
pub fn forward(layers: &[LayerDesc], offsets: &[usize], params: &[f64], input: &[f64]) -> Vec<Vec<f64>> {
    let mut acts = Vec::with_capacity(layers.len() + 1);
    acts.push(input.to_vec());
    for (li, layer) in layers.iter().enumerate() {
        let input = &acts[li];
        let p = &params[offsets[li]..offsets[li + 1]];
        let out = match *layer {
            LayerDesc::Dense { in_dim, out_dim, relu } => {
                debug_assert_eq!(input.len(), in_dim);
                let (weights, biases) = p.split_at(in_dim * out_dim);
                let mut out = vec![0.0; out_dim];
                for (j, o) in out.iter_mut().enumerate() {
                    let mut z = biases[j];
                    for (i, &x) in input.iter().enumerate() {
                        z += weights[i * out_dim + j] * x;
                    }
                    *o = if relu { z.max(0.0) } else { z };
                }
                out
            }
            LayerDesc::Conv1d { len_in, filters, kernel, stride } => {
                debug_assert_eq!(input.len(), len_in);
                let (weights, biases) = p.split_at(filters * kernel);
                let out_len = (len_in - kernel) / stride + 1;
                let mut out = vec![0.0; filters * out_len];
                for f in 0..filters {
                    let w = &weights[f * kernel..(f + 1) * kernel];
                    for t in 0..out_len {
                        let mut z = biases[f];
                        for (ki, &wk) in w.iter().enumerate() {
                            z += wk * input[t * stride + ki];
                        }
                        out[f * out_len + t] = z.max(0.0);
                    }
                }
                out
            }
        };
        acts.push(out);
    }
    acts
}

/// Accumulates parameter gradients into `grad` given the gradient of the loss
/// with respect to the network output (pre-activation of the last layer is
/// the output itself since the last layer is linear).
pub fn backward(
    layers: &[LayerDesc],
    offsets: &[usize],
    params: &[f64],
    acts: &[Vec<f64>],
    d_out: &[f64],
    grad: &mut [f64],
) {
    let mut delta = d_out.to_vec();
    for (li, layer) in layers.iter().enumerate().rev() {
        let input = &acts[li];
        let output = &acts[li + 1];
        let p = &params[offsets[li]..offsets[li + 1]];
        let g = &mut grad[offsets[li]..offsets[li + 1]];
        match *layer {
            LayerDesc::Dense { in_dim, out_dim, relu } => {
                if relu {
                    for (d, &o) in delta.iter_mut().zip(output) {
                        if o <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                let (weights, _) = p.split_at(in_dim * out_dim);
                let (gw, gb) = g.split_at_mut(in_dim * out_dim);
                for (j, &dj) in delta.iter().enumerate() {
                    gb[j] += dj;
                    for (i, &x) in input.iter().enumerate() {
                        gw[i * out_dim + j] += x * dj;
                    }
                }
                let mut d_in = vec![0.0; in_dim];
                for (i, di) in d_in.iter_mut().enumerate() {
                    for (j, &dj) in delta.iter().enumerate() {
                        *di += weights[i * out_dim + j] * dj;
                    }
                }
                delta = d_in;
            }
            LayerDesc::Conv1d { len_in, filters, kernel, stride } => {
                for (d, &o) in delta.iter_mut().zip(output) {
                    if o <= 0.0 {
                        *d = 0.0;
                    }
                }
                let (weights, _) = p.split_at(filters * kernel);
                let (gw, gb) = g.split_at_mut(filters * kernel);
                let out_len = (len_in - kernel) / stride + 1;
                let mut d_in = vec![0.0; len_in];
                for f in 0..filters {
                    let w = &weights[f * kernel..(f + 1) * kernel];
                    for t in 0..out_len {
                        let d = delta[f * out_len + t];
                        if d == 0.0 {
                            continue;
                        }
                        gb[f] += d;
                        for ki in 0..kernel {
                            gw[f * kernel + ki] += input[t * stride + ki] * d;
                            d_in[t * stride + ki] += w[ki] * d;
                        }
                    }
                }
                delta = d_in;
            }
        }
    }
}
