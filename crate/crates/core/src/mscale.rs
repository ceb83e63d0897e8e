//! Multi-scale networks: fixed input scalings spread over subnetworks or over groups of
//! first-layer neurons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::activation::ActivationKind;
use crate::nn::model::{DerivOrder, Model, ModelOutput, OutputAdjoint};
use crate::nn::network::{init_network, Architecture, InitScheme, MlpNetwork, MlpTape};

pub use crate::nn::activation::compact as compact_activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MscaleVariant {
    /// `f(x) = Σ_i f_i(α_i x)` over independent subnetworks.
    SumOfSubnets,
    /// One network whose `i`-th group of first-layer neurons sees `α_i x`.
    ScaledGroups,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MscaleSpec {
    pub scales: Vec<f64>,
    /// Widths of each subnetwork (variant 1) or of the shared network (variant 2).
    pub widths: Vec<usize>,
    pub activation: ActivationKind,
    pub variant: MscaleVariant,
    pub init: InitScheme,
}

impl MscaleSpec {
    /// Scales `1, 2, 4, …, 2^{m−1}`.
    pub fn power_of_two_scales(m: usize) -> Vec<f64> {
        (0..m).map(|i| 2f64.powi(i as i32)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::InvalidParameter("at least one scale is required".into()));
        }
        if let Some(a) = self.scales.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidParameter(format!("scales must be positive, got {a}")));
        }
        Architecture::uniform(&self.widths, self.activation).validate()?;
        if self.variant == MscaleVariant::ScaledGroups && !self.widths[1].is_multiple_of(self.scales.len()) {
            return Err(Error::InvalidArchitecture(format!(
                "first hidden width {} is not divisible by {} scale groups",
                self.widths[1],
                self.scales.len()
            )));
        }
        Ok(())
    }
}

/// Seed of subnetwork `i`; subnetwork 0 reuses the base seed.
fn subnet_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Sum of scaled subnetworks with one flat parameter vector.
#[derive(Debug, Clone)]
pub struct SubnetSum {
    /// Subnetworks with their input scale; their own parameters are ignored.
    templates: Vec<MlpNetwork>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

impl SubnetSum {
    fn subnet(&self, i: usize) -> Result<MlpNetwork> {
        let t = &self.templates[i];
        let p = self.params[self.offsets[i]..self.offsets[i + 1]].to_vec();
        let net = MlpNetwork::from_params(t.architecture().clone(), p, t.output_scaling())?;
        net.with_first_layer_scales(t.first_layer_scales().expect("scaled template").to_vec())
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

#[derive(Debug, Clone)]
pub enum MscaleModel {
    Sum(SubnetSum),
    Groups(MlpNetwork),
}

pub enum MscaleTape {
    Sum(Vec<MlpTape>),
    Groups(MlpTape),
}

pub fn build_mscale(spec: &MscaleSpec, seed: u64) -> Result<MscaleModel> {
    spec.validate()?;
    let arch = Architecture::uniform(&spec.widths, spec.activation);
    match spec.variant {
        MscaleVariant::SumOfSubnets => {
            let mut templates = Vec::with_capacity(spec.scales.len());
            let mut params = Vec::new();
            let mut offsets = vec![0];
            for (i, &a) in spec.scales.iter().enumerate() {
                let net = init_network(&arch, spec.init, subnet_seed(seed, i))?;
                params.extend_from_slice(net.params());
                offsets.push(params.len());
                templates.push(net.with_first_layer_scales(vec![a; spec.widths[1]])?);
            }
            Ok(MscaleModel::Sum(SubnetSum { templates, offsets, params }))
        }
        MscaleVariant::ScaledGroups => {
            let group = spec.widths[1] / spec.scales.len();
            let scales = (0..spec.widths[1]).map(|j| spec.scales[j / group]).collect();
            Ok(MscaleModel::Groups(init_network(&arch, spec.init, seed)?.with_first_layer_scales(scales)?))
        }
    }
}

impl Model for MscaleModel {
    type Tape = MscaleTape;

    fn input_dim(&self) -> usize {
        match self {
            MscaleModel::Sum(s) => s.templates[0].input_dim(),
            MscaleModel::Groups(n) => n.input_dim(),
        }
    }

    fn params(&self) -> &[f64] {
        match self {
            MscaleModel::Sum(s) => &s.params,
            MscaleModel::Groups(n) => n.params(),
        }
    }

    fn params_mut(&mut self) -> &mut [f64] {
        match self {
            MscaleModel::Sum(s) => &mut s.params,
            MscaleModel::Groups(n) => n.params_mut(),
        }
    }

    fn check_order(&self, order: DerivOrder) -> Result<()> {
        match self {
            MscaleModel::Sum(s) => s.templates[0].check_order(order),
            MscaleModel::Groups(n) => n.check_order(order),
        }
    }

    fn forward_tape(&self, inputs: &[f64], order: DerivOrder) -> Result<(ModelOutput, MscaleTape)> {
        match self {
            MscaleModel::Groups(n) => n.forward_tape(inputs, order).map(|(o, t)| (o, MscaleTape::Groups(t))),
            MscaleModel::Sum(s) => {
                let mut total: Option<ModelOutput> = None;
                let mut tapes = Vec::with_capacity(s.len());
                for i in 0..s.len() {
                    let (out, tape) = s.subnet(i)?.forward_tape(inputs, order)?;
                    tapes.push(tape);
                    match total.as_mut() {
                        None => total = Some(out),
                        Some(t) => {
                            add_into(&mut t.value, &out.value);
                            add_into(&mut t.grad, &out.grad);
                            add_into(&mut t.laplacian, &out.laplacian);
                        }
                    }
                }
                Ok((total.expect("at least one subnet"), MscaleTape::Sum(tapes)))
            }
        }
    }

    fn backward(&self, tape: &MscaleTape, adjoint: &OutputAdjoint, grad: &mut [f64]) {
        match (self, tape) {
            (MscaleModel::Groups(n), MscaleTape::Groups(t)) => n.backward(t, adjoint, grad),
            (MscaleModel::Sum(s), MscaleTape::Sum(tapes)) => {
                for (i, t) in tapes.iter().enumerate() {
                    let net = s.subnet(i).expect("subnet rebuilt from validated parameters");
                    net.backward(t, adjoint, &mut grad[s.offsets[i]..s.offsets[i + 1]]);
                }
            }
            _ => panic!("tape does not belong to this model variant"),
        }
    }
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}
