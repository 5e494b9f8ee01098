use crate::error::{KernelError, Result};

/// Dense N-dimensional array of `f32` in contiguous row-major order.
///
/// Activations use NHWC order: batch, height, width, channels. Convolution
/// weights are `[kh, kw, cin, cout]`, depthwise weights `[kh, kw, c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    /// Builds a tensor from a shape and a matching row-major buffer.
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(KernelError::shape(
                "Tensor::new",
                format!("every dimension must be positive, got {shape:?}"),
            ));
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(KernelError::shape(
                "Tensor::new",
                format!(
                    "buffer has {} elements but shape {shape:?} needs {expected}",
                    data.len()
                ),
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn full(shape: &[usize], value: f32) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn scalar(value: f32) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// New tensor over the same data with a different shape; the element
    /// count must match exactly.
    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() || shape.iter().any(|&d| d == 0) {
            return Err(KernelError::shape(
                "Tensor::reshape",
                format!(
                    "cannot view {} elements as shape {shape:?} ({expected} elements)",
                    self.data.len()
                ),
            ));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// The four NHWC dimensions; errors when the tensor is not rank 4.
    pub fn dims4(&self, context: &'static str) -> Result<(usize, usize, usize, usize)> {
        match self.shape[..] {
            [n, h, w, c] => Ok((n, h, w, c)),
            _ => Err(KernelError::shape(
                context,
                format!("expected a rank-4 NHWC tensor, got shape {:?}", self.shape),
            )),
        }
    }

    /// The two dimensions of a matrix; errors when the tensor is not rank 2.
    pub fn dims2(&self, context: &'static str) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(KernelError::shape(
                context,
                format!("expected a rank-2 tensor, got shape {:?}", self.shape),
            )),
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f32> {
        self.data.iter()
    }
}

/// Row-major offset of NHWC coordinates. Callers guarantee bounds.
#[inline]
pub fn idx4(shape: &[usize], n: usize, h: usize, w: usize, c: usize) -> usize {
    ((n * shape[1] + h) * shape[2] + w) * shape[3] + c
}

/// Gradient bundle returned by every backward kernel: the gradient with
/// respect to the layer input plus one gradient per parameter tensor,
/// keyed by the parameter's name and shaped exactly like it.
#[derive(Clone, Debug)]
pub struct LayerGrads {
    pub d_input: Tensor,
    pub d_params: Vec<(&'static str, Tensor)>,
}

impl LayerGrads {
    pub fn input_only(d_input: Tensor) -> Self {
        LayerGrads {
            d_input,
            d_params: Vec::new(),
        }
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.d_params
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t)
    }
}
