//! Convolution layer over sparse region vectors.
//!
//! Weight matrices are stored input-major (`d` rows of `m` neuron weights)
//! so that computing a region's response is one contiguous row gather per
//! active component. Nothing here ever touches the inactive coordinates,
//! which is what makes large `p * |V|` input spaces affordable.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::sparse::SparseVector;

/// Parameters of one convolution layer: `m` neurons over a `d`-dimensional
/// region space, with the rectifier `max(0, x)` as activation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    /// `d x m`, input-major: `weights.row(i)[j]` is the weight of input
    /// coordinate `i` into neuron `j`.
    weights: Mat,
    /// One bias per neuron.
    bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(input_dim: usize, neurons: usize) -> Self {
        ConvLayer {
            weights: Mat::zeros(input_dim, neurons),
            bias: vec![0.0; neurons],
        }
    }

    /// Builds a layer from neuron-major rows (`m x d`, one row per neuron),
    /// the layout used by tests and hand-written examples.
    pub fn from_neuron_rows(neurons: usize, input_dim: usize, rows: Vec<f64>) -> Self {
        let neuron_major = Mat::from_vec(neurons, input_dim, rows);
        ConvLayer {
            weights: neuron_major.transposed(),
            bias: vec![0.0; neurons],
        }
    }

    pub fn neurons(&self) -> usize {
        self.weights.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    /// Weight of input coordinate `input` into `neuron`.
    pub fn weight(&self, neuron: usize, input: usize) -> f64 {
        self.weights.get(input, neuron)
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// Input-major weight storage, for initialization, updates, and
    /// serialization.
    pub fn weights(&self) -> &Mat {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Mat {
        &mut self.weights
    }

    /// Response of a single neuron to one region, rectified.
    pub fn neuron_response(&self, neuron: usize, region: &SparseVector) -> f64 {
        let mut acc = self.bias[neuron];
        for (ix, val) in region.iter() {
            acc += val * self.weights.get(ix, neuron);
        }
        acc.max(0.0)
    }

    /// Applies the layer to every region: row `l` of the result is
    /// `max(0, W r_l + b)`. Fails if a region's dimension does not match
    /// the layer.
    pub fn forward(&self, regions: &[SparseVector]) -> Result<Mat> {
        let m = self.neurons();
        let mut out = Mat::zeros(regions.len(), m);
        for (l, region) in regions.iter().enumerate() {
            if region.dim() != self.input_dim() {
                return Err(Error::config(format!(
                    "region dimension {} does not match convolution input dimension {}",
                    region.dim(),
                    self.input_dim()
                )));
            }
            let row = out.row_mut(l);
            row.copy_from_slice(&self.bias);
            for (ix, val) in region.iter() {
                let wrow = self.weights.row(ix);
                for (o, w) in row.iter_mut().zip(wrow) {
                    *o += val * w;
                }
            }
            for o in row.iter_mut() {
                if *o < 0.0 {
                    *o = 0.0;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_yield_rectified_bias() {
        let mut layer = ConvLayer::zeros(6, 3);
        layer.bias_mut().copy_from_slice(&[0.5, -0.5, 0.0]);
        let regions = vec![
            SparseVector::from_pairs(6, vec![(0, 1.0)]).unwrap(),
            SparseVector::empty(6),
        ];
        let out = layer.forward(&regions).unwrap();
        assert_eq!(out.row(0), &[0.5, 0.0, 0.0]);
        assert_eq!(out.row(1), &[0.5, 0.0, 0.0]);
    }

    #[test]
    fn single_neuron_gathers_active_components() {
        let mut layer = ConvLayer::from_neuron_rows(1, 4, vec![1.0, 2.0, 3.0, 4.0]);
        layer.bias_mut()[0] = 0.5;
        let region = SparseVector::from_pairs(4, vec![(1, 1.0), (3, 2.0)]).unwrap();
        let out = layer.forward(&[region]).unwrap();
        assert_eq!(out.get(0, 0), 10.5);
    }

    #[test]
    fn negative_preactivations_clamp_to_zero() {
        let layer = ConvLayer::from_neuron_rows(2, 2, vec![-1.0, 0.0, 1.0, 0.0]);
        let region = SparseVector::from_pairs(2, vec![(0, 2.0)]).unwrap();
        let out = layer.forward(&[region]).unwrap();
        assert_eq!(out.row(0), &[0.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let layer = ConvLayer::zeros(4, 1);
        let region = SparseVector::empty(5);
        assert!(layer.forward(&[region]).is_err());
    }

    #[test]
    fn output_shape_is_regions_by_neurons() {
        let layer = ConvLayer::zeros(3, 2);
        let regions = vec![SparseVector::empty(3); 5];
        let out = layer.forward(&regions).unwrap();
        assert_eq!((out.rows(), out.cols()), (5, 2));
    }
}
