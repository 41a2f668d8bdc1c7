//! Minimal dense-network substrate: MLP forward, reverse-mode gradients,
//! adaptive-moment updates, and finite-difference verification.
//!
//! Everything is f64 and deterministic given an [`RngStream`].

mod adam;

pub use adam::Adam;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::{dot, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputHead {
    Linear,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Orthogonal,
    UniformScaled,
}

/// Architecture of a dense network: sizes, hidden activation, output head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_head: OutputHead,
    pub init: Init,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, hidden_activation: Activation, output_head: OutputHead) -> Self {
        Self { layer_sizes, hidden_activation, output_head, init: Init::Orthogonal }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::Dimension("MlpSpec needs at least 2 layer sizes".into()));
        }
        if self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Dimension("zero layer size".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn weight_name(i: usize) -> String {
        format!("w{i}")
    }

    fn bias_name(i: usize) -> String {
        format!("b{i}")
    }
}

/// Named, shaped weights for one network. Ordered map so iteration is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub entries: BTreeMap<String, Tensor>,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::Consistency(format!("missing parameter {name}")))
    }

    pub fn param_count(&self) -> usize {
        self.entries.values().map(|t| t.len()).sum()
    }
}

impl Default for ParameterSet {
    fn default() -> Self {
        Self::new()
    }
}

/// d(loss)/d(param) for every trainable parameter, same names and shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientRecord {
    pub entries: BTreeMap<String, Tensor>,
}

impl GradientRecord {
    pub fn zeros_like(params: &ParameterSet) -> Self {
        let entries = params
            .entries
            .iter()
            .map(|(k, t)| (k.clone(), Tensor::zeros(t.shape.clone())))
            .collect();
        Self { entries }
    }

    /// Element-wise `self += other * scale`.
    pub fn add_scaled(&mut self, other: &GradientRecord, scale: f64) {
        for (k, t) in &mut self.entries {
            let o = &other.entries[k];
            for (a, b) in t.values.iter_mut().zip(&o.values) {
                *a += b * scale;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.entries.values_mut() {
            for v in &mut t.values {
                *v *= s;
            }
        }
    }
}

fn activate(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
        Activation::Tanh => x.tanh(),
    }
}

// Gradient at the ReLU kink (x == 0) is defined as 0.
fn activate_grad(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Tanh => {
            let t = x.tanh();
            1.0 - t * t
        }
    }
}

/// Numerically stable softmax (max-subtraction).
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Dimension("softmax on empty vector".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logit".into()));
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Fresh parameters for `spec`, drawn from `rng`.
///
/// Weights use the spec's init scheme (orthogonal rows/columns or uniform
/// scaled by 1/sqrt(fan_in)); biases start at zero.
pub fn init_params(spec: &MlpSpec, rng: &mut RngStream) -> Result<ParameterSet> {
    spec.validate()?;
    let mut params = ParameterSet::new();
    for i in 0..spec.n_layers() {
        let (fan_in, fan_out) = (spec.layer_sizes[i], spec.layer_sizes[i + 1]);
        let w = match spec.init {
            Init::Orthogonal => orthogonal(fan_out, fan_in, rng),
            Init::UniformScaled => {
                let k = 1.0 / (fan_in as f64).sqrt();
                let values = (0..fan_out * fan_in).map(|_| rng.range_f64(-k, k)).collect();
                Tensor { shape: vec![fan_out, fan_in], values }
            }
        };
        params.entries.insert(MlpSpec::weight_name(i), w);
        params.entries.insert(MlpSpec::bias_name(i), Tensor::zeros(vec![fan_out]));
    }
    Ok(params)
}

/// Random matrix with orthonormal rows (out <= in) or columns (out > in),
/// via modified Gram-Schmidt with one re-orthogonalization pass.
fn orthogonal(out: usize, inp: usize, rng: &mut RngStream) -> Tensor {
    let (r, c) = if out <= inp { (out, inp) } else { (inp, out) };
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(r);
    while rows.len() < r {
        let mut v: Vec<f64> = (0..c).map(|_| rng.normal()).collect();
        for _ in 0..2 {
            for u in &rows {
                let proj = dot(&v, u);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-8 {
            continue; // degenerate draw, retry
        }
        for vi in &mut v {
            *vi /= norm;
        }
        rows.push(v);
    }
    let mut values = vec![0.0; out * inp];
    for (i, row) in rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if out <= inp {
                values[i * inp + j] = x;
            } else {
                values[j * inp + i] = x;
            }
        }
    }
    Tensor { shape: vec![out, inp], values }
}

/// Cached intermediates of one forward pass, consumed by [`backward_traced`].
pub struct ForwardTrace {
    /// Input followed by each layer's post-activation output.
    activations: Vec<Vec<f64>>,
    /// Pre-activation z per layer.
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

fn layer_shapes_match(spec: &MlpSpec, params: &ParameterSet, i: usize) -> Result<()> {
    let w = params.get(&MlpSpec::weight_name(i))?;
    let b = params.get(&MlpSpec::bias_name(i))?;
    let (fan_in, fan_out) = (spec.layer_sizes[i], spec.layer_sizes[i + 1]);
    if w.shape != [fan_out, fan_in] || b.shape != [fan_out] {
        return Err(Error::Dimension(format!(
            "layer {i}: want w [{fan_out},{fan_in}] b [{fan_out}], got w {:?} b {:?}",
            w.shape, b.shape
        )));
    }
    Ok(())
}

/// Forward pass that keeps intermediates for backprop.
pub fn forward_trace(spec: &MlpSpec, params: &ParameterSet, input: &[f64]) -> Result<ForwardTrace> {
    spec.validate()?;
    if input.len() != spec.input_dim() {
        return Err(Error::Dimension(format!(
            "input length {} != first layer size {}",
            input.len(),
            spec.input_dim()
        )));
    }
    let mut activations = vec![input.to_vec()];
    let mut pre = Vec::with_capacity(spec.n_layers());
    for i in 0..spec.n_layers() {
        layer_shapes_match(spec, params, i)?;
        let w = params.get(&MlpSpec::weight_name(i))?;
        let b = params.get(&MlpSpec::bias_name(i))?;
        let x = &activations[i];
        let fan_out = spec.layer_sizes[i + 1];
        let mut z = vec![0.0; fan_out];
        for (o, zo) in z.iter_mut().enumerate() {
            let row = &w.values[o * x.len()..(o + 1) * x.len()];
            *zo = dot(row, x) + b.values[o];
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite pre-activation at layer {i}")));
        }
        let last = i + 1 == spec.n_layers();
        let a = if last {
            match spec.output_head {
                OutputHead::Linear => z.clone(),
                OutputHead::Softmax => softmax(&z)?,
            }
        } else {
            z.iter().map(|&v| activate(spec.hidden_activation, v)).collect()
        };
        pre.push(z);
        activations.push(a);
    }
    let output = activations.last().unwrap().clone();
    Ok(ForwardTrace { activations, pre, output })
}

/// Forward pass; output length equals the last layer size.
pub fn mlp_forward(spec: &MlpSpec, params: &ParameterSet, input: &Tensor) -> Result<Tensor> {
    let trace = forward_trace(spec, params, &input.values)?;
    Ok(Tensor::vector(trace.output))
}

/// Gradients of `loss = dot(upstream, output)` with respect to every parameter.
pub fn backward(
    spec: &MlpSpec,
    params: &ParameterSet,
    input: &Tensor,
    upstream: &Tensor,
) -> Result<GradientRecord> {
    let trace = forward_trace(spec, params, &input.values)?;
    let (grads, _) = backward_traced(spec, params, &trace, &upstream.values)?;
    Ok(grads)
}

/// Backprop from a cached trace. Also returns d(loss)/d(input) so callers can
/// chain networks (decoder into encoder, mixer into policy heads).
pub fn backward_traced(
    spec: &MlpSpec,
    params: &ParameterSet,
    trace: &ForwardTrace,
    upstream: &[f64],
) -> Result<(GradientRecord, Vec<f64>)> {
    if upstream.len() != spec.output_dim() {
        return Err(Error::Dimension(format!(
            "upstream length {} != output size {}",
            upstream.len(),
            spec.output_dim()
        )));
    }
    let n = spec.n_layers();
    let mut grads = GradientRecord { entries: BTreeMap::new() };

    // Delta at the output layer's pre-activation.
    let mut delta: Vec<f64> = match spec.output_head {
        OutputHead::Linear => upstream.to_vec(),
        OutputHead::Softmax => {
            let p = &trace.output;
            let up: f64 = dot(upstream, p);
            p.iter().zip(upstream).map(|(&pi, &ui)| pi * (ui - up)).collect()
        }
    };

    for i in (0..n).rev() {
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient at layer {i}")));
        }
        let x = &trace.activations[i];
        let w = params.get(&MlpSpec::weight_name(i))?;
        let mut dw = vec![0.0; delta.len() * x.len()];
        for (o, &d) in delta.iter().enumerate() {
            for (j, &xj) in x.iter().enumerate() {
                dw[o * x.len() + j] = d * xj;
            }
        }
        grads.entries.insert(
            MlpSpec::weight_name(i),
            Tensor { shape: vec![delta.len(), x.len()], values: dw },
        );
        grads
            .entries
            .insert(MlpSpec::bias_name(i), Tensor { shape: vec![delta.len()], values: delta.clone() });

        // Propagate to the previous layer (or to the input when i == 0).
        let mut prev = vec![0.0; x.len()];
        for (o, &d) in delta.iter().enumerate() {
            let row = &w.values[o * x.len()..(o + 1) * x.len()];
            for (j, &wj) in row.iter().enumerate() {
                prev[j] += wj * d;
            }
        }
        if i > 0 {
            for (pj, &zj) in prev.iter_mut().zip(&trace.pre[i - 1]) {
                *pj *= activate_grad(spec.hidden_activation, zj);
            }
        }
        delta = prev;
    }
    Ok((grads, delta))
}

/// Worst relative error of [`backward`] against central finite differences
/// over `trials` random (input, upstream) pairs. Samples a bounded number of
/// parameter coordinates per trial.
pub fn gradient_check(
    spec: &MlpSpec,
    params: &ParameterSet,
    trials: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    const H: f64 = 1e-5;
    const COORDS_PER_TRIAL: usize = 30;
    if trials == 0 {
        return Err(Error::Domain("gradient_check needs trials >= 1".into()));
    }
    let mut params = params.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let input = draw_input_off_kinks(spec, &params, rng)?;
        let upstream: Vec<f64> = (0..spec.output_dim()).map(|_| rng.normal()).collect();
        let analytic = backward(
            spec,
            &params,
            &Tensor::vector(input.clone()),
            &Tensor::vector(upstream.clone()),
        )?;
        let names: Vec<String> = params.entries.keys().cloned().collect();
        for _ in 0..COORDS_PER_TRIAL {
            let name = &names[rng.below(names.len())];
            let idx = rng.below(params.entries[name].len());
            let orig = params.entries[name].values[idx];

            params.entries.get_mut(name).unwrap().values[idx] = orig + H;
            let up_out = forward_trace(spec, &params, &input)?.output().to_vec();
            params.entries.get_mut(name).unwrap().values[idx] = orig - H;
            let dn_out = forward_trace(spec, &params, &input)?.output().to_vec();
            params.entries.get_mut(name).unwrap().values[idx] = orig;

            let numeric = (dot(&upstream, &up_out) - dot(&upstream, &dn_out)) / (2.0 * H);
            let a = analytic.entries[name].values[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

/// Inputs for finite-difference checks. For ReLU nets, redraw until every
/// pre-activation is clear of the kink so the h-perturbation cannot cross it.
fn draw_input_off_kinks(
    spec: &MlpSpec,
    params: &ParameterSet,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    for _ in 0..200 {
        let input: Vec<f64> = (0..spec.input_dim()).map(|_| rng.normal()).collect();
        if spec.hidden_activation != Activation::Relu {
            return Ok(input);
        }
        let trace = forward_trace(spec, params, &input)?;
        let clear = trace
            .pre
            .iter()
            .take(spec.n_layers() - 1)
            .all(|z| z.iter().all(|&v| v.abs() > 1e-3));
        if clear {
            return Ok(input);
        }
    }
    Err(Error::Numeric("could not find an input away from ReLU kinks".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded(name: &str) -> RngStream {
        RngStream::named(0, name)
    }

    fn linear_spec(sizes: Vec<usize>) -> MlpSpec {
        MlpSpec::new(sizes, Activation::Tanh, OutputHead::Linear)
    }

    #[test]
    fn identity_single_layer() {
        let spec = linear_spec(vec![2, 2]);
        let mut params = ParameterSet::new();
        params
            .entries
            .insert("w0".into(), Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        params.entries.insert("b0".into(), Tensor::zeros(vec![2]));
        let out = mlp_forward(&spec, &params, &Tensor::vector(vec![1.0, 2.0])).unwrap();
        assert_eq!(out.values, vec![1.0, 2.0]);
    }

    #[test]
    fn softmax_head_symmetry() {
        let mut spec = linear_spec(vec![2, 2]);
        spec.output_head = OutputHead::Softmax;
        let mut params = ParameterSet::new();
        params
            .entries
            .insert("w0".into(), Tensor::new(vec![2, 2], vec![0.0; 4]).unwrap());
        params.entries.insert("b0".into(), Tensor::zeros(vec![2]));
        let out = mlp_forward(&spec, &params, &Tensor::vector(vec![3.0, -1.0])).unwrap();
        assert!((out.values[0] - 0.5).abs() < 1e-15);
        assert!((out.values[1] - 0.5).abs() < 1e-15);
    }

    // Independent scalar-by-scalar re-computation of a 2-3-2 tanh net.
    #[test]
    fn forward_matches_scalar_oracle() {
        let spec = linear_spec(vec![2, 3, 2]);
        let params = init_params(&spec, &mut seeded("fwd-oracle")).unwrap();
        let input = [1.0, 0.0];

        let w0 = params.get("w0").unwrap();
        let b0 = params.get("b0").unwrap();
        let w1 = params.get("w1").unwrap();
        let b1 = params.get("b1").unwrap();
        let mut hidden = [0.0f64; 3];
        for o in 0..3 {
            let mut acc = b0.values[o];
            for j in 0..2 {
                acc += w0.at(o, j) * input[j];
            }
            hidden[o] = acc.tanh();
        }
        let mut expect = [0.0f64; 2];
        for o in 0..2 {
            let mut acc = b1.values[o];
            for j in 0..3 {
                acc += w1.at(o, j) * hidden[j];
            }
            expect[o] = acc;
        }

        let out = mlp_forward(&spec, &params, &Tensor::vector(input.to_vec())).unwrap();
        for (a, e) in out.values.iter().zip(expect) {
            assert!((a - e).abs() < 1e-12, "forward {a} vs oracle {e}");
        }
    }

    #[test]
    fn forward_rejects_bad_input_len() {
        let spec = linear_spec(vec![2, 2]);
        let params = init_params(&spec, &mut seeded("badlen")).unwrap();
        let err = mlp_forward(&spec, &params, &Tensor::vector(vec![1.0])).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        let spec = linear_spec(vec![2, 2]);
        let mut params = ParameterSet::new();
        params
            .entries
            .insert("w0".into(), Tensor::new(vec![2, 2], vec![0.3, -0.2, 0.1, 0.4]).unwrap());
        params.entries.insert("b0".into(), Tensor::zeros(vec![2]));
        let x = vec![2.0, -1.0];
        let u = vec![0.5, 3.0];
        let g = backward(&spec, &params, &Tensor::vector(x.clone()), &Tensor::vector(u.clone())).unwrap();
        let dw = &g.entries["w0"];
        for o in 0..2 {
            for j in 0..2 {
                assert!((dw.at(o, j) - u[o] * x[j]).abs() < 1e-15);
            }
        }
        assert_eq!(g.entries["b0"].values, u);
    }

    #[test]
    fn zero_upstream_zero_gradients() {
        let spec = linear_spec(vec![3, 4, 2]);
        let params = init_params(&spec, &mut seeded("zero-up")).unwrap();
        let g = backward(
            &spec,
            &params,
            &Tensor::vector(vec![0.1, 0.2, 0.3]),
            &Tensor::vector(vec![0.0, 0.0]),
        )
        .unwrap();
        for t in g.entries.values() {
            assert!(t.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gradcheck_linear_net_nearly_exact() {
        let spec = MlpSpec {
            layer_sizes: vec![3, 2],
            hidden_activation: Activation::Tanh,
            output_head: OutputHead::Linear,
            init: Init::UniformScaled,
        };
        let params = init_params(&spec, &mut seeded("gc-lin")).unwrap();
        let err = gradient_check(&spec, &params, 4, &mut seeded("gc-lin-t")).unwrap();
        assert!(err < 1e-8, "linear gradcheck err {err}");
    }

    #[test]
    fn gradcheck_tanh_and_relu_nets() {
        for (name, act) in [("tanh", Activation::Tanh), ("relu", Activation::Relu)] {
            let spec = MlpSpec::new(vec![4, 8, 8, 3], act, OutputHead::Linear);
            let params = init_params(&spec, &mut seeded(name)).unwrap();
            let err = gradient_check(&spec, &params, 4, &mut RngStream::named(1, name)).unwrap();
            assert!(err < 1e-4, "{name} gradcheck err {err}");
        }
    }

    #[test]
    fn gradcheck_softmax_head() {
        let spec = MlpSpec::new(vec![4, 8, 3], Activation::Tanh, OutputHead::Softmax);
        let params = init_params(&spec, &mut seeded("gc-sm")).unwrap();
        let err = gradient_check(&spec, &params, 4, &mut seeded("gc-sm-t")).unwrap();
        assert!(err < 1e-4, "softmax gradcheck err {err}");
    }

    #[test]
    fn softmax_known_values() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = softmax(&[1.0f64.ln(), 3.0f64.ln()]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[1] - 0.75).abs() < 1e-12);
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!(p[0] > 0.999999 && p[0].is_finite());
        assert!(p[1] >= 0.0 && p[1] < 1e-6);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(matches!(softmax(&[f64::INFINITY, 0.0]), Err(Error::Numeric(_))));
    }

    #[test]
    fn orthogonal_square_is_orthonormal() {
        for seed in 0..3u64 {
            let w = orthogonal(16, 16, &mut RngStream::named(seed, "orth"));
            for i in 0..16 {
                for j in 0..16 {
                    let mut acc = 0.0;
                    for k in 0..16 {
                        acc += w.at(i, k) * w.at(j, k);
                    }
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((acc - want).abs() < 1e-6, "WWt[{i}][{j}] = {acc}");
                }
            }
        }
    }

    #[test]
    fn backward_reports_input_gradient() {
        // Finite-difference the input of a small tanh net.
        let spec = linear_spec(vec![3, 5, 2]);
        let params = init_params(&spec, &mut seeded("dinput")).unwrap();
        let input = vec![0.3, -0.2, 0.7];
        let upstream = vec![1.0, -0.5];
        let trace = forward_trace(&spec, &params, &input).unwrap();
        let (_, dinput) = backward_traced(&spec, &params, &trace, &upstream).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let mut up = input.clone();
            up[j] += h;
            let mut dn = input.clone();
            dn[j] -= h;
            let fu = dot(&upstream, forward_trace(&spec, &params, &up).unwrap().output());
            let fd = dot(&upstream, forward_trace(&spec, &params, &dn).unwrap().output());
            let numeric = (fu - fd) / (2.0 * h);
            assert!((dinput[j] - numeric).abs() < 1e-6, "dinput[{j}]");
        }
    }
}
