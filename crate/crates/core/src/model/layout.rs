//! Mixed-radix indexing over products of finite domains.
//!
//! Assignments are laid out row-major: the first variable is the most
//! significant digit.

/// Dimensions of a product space with precomputed strides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Layout {
    pub fn new(dims: Vec<usize>) -> Layout {
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let len = dims.iter().product();
        Layout { dims, strides, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn index(&self, assignment: &[usize]) -> usize {
        debug_assert_eq!(assignment.len(), self.dims.len());
        assignment.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn assignment(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (i, s) in self.strides.iter().enumerate() {
            out[i] = index / s;
            index %= s;
        }
        out
    }

    /// For every cell of this layout, the index of its restriction to the
    /// variables at `positions` (in the order given).
    pub fn projection(&self, positions: &[usize]) -> Vec<usize> {
        let sub_dims: Vec<usize> = positions.iter().map(|&p| self.dims[p]).collect();
        let sub = Layout::new(sub_dims);
        let mut out = Vec::with_capacity(self.len);
        let mut digits = vec![0usize; self.dims.len()];
        for _ in 0..self.len {
            let idx = positions.iter().zip(&sub.strides).map(|(&p, s)| digits[p] * s).sum();
            out.push(idx);
            for d in (0..digits.len()).rev() {
                digits[d] += 1;
                if digits[d] < self.dims[d] {
                    break;
                }
                digits[d] = 0;
            }
        }
        out
    }
}
