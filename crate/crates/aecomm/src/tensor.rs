//! Shape-tagged row-major arrays of 64-bit floats.
//!
//! A [`Tensor`] carries every vector-valued quantity in the crate: one-hot
//! messages, transmitted signals, layer activations, and gradients. The
//! invariant `product(shape) == data.len()` is enforced at construction and
//! on deserialization.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major `f64` array with an explicit shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr")]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct TensorRepr {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<TensorRepr> for Tensor {
    type Error = Error;

    fn try_from(r: TensorRepr) -> Result<Self> {
        Tensor::from_vec(r.shape, r.data)
    }
}

impl Tensor {
    /// All-zero tensor of the given shape.
    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; len],
        }
    }

    /// Builds a tensor from a flat row-major buffer, checking the shape.
    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if expect != data.len() {
            return Err(Error::Argument(format!(
                "tensor shape {:?} requires {} elements, got {}",
                shape,
                expect,
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    /// Rank-1 tensor from a plain vector.
    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// True when no element is NaN or infinite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_product_must_match() {
        assert!(Tensor::from_vec(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::from_vec(vec![2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn deserialization_rejects_bad_shape() {
        let good: Tensor = serde_json::from_str(r#"{"shape":[2,2],"data":[1,2,3,4]}"#).unwrap();
        assert_eq!(good.len(), 4);
        let bad: std::result::Result<Tensor, _> =
            serde_json::from_str(r#"{"shape":[2,2],"data":[1,2,3]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = Tensor::from_vec(vec![3], vec![0.1, -2.5e-7, 3.0_f64.sqrt()]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: Tensor = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
    }
}
