//! Dense row-major containers for layer math.

/// 4-D tensor in (batch, channels, height, width) layout, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    shape: (usize, usize, usize, usize),
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(shape: (usize, usize, usize, usize)) -> Self {
        let len = shape.0 * shape.1 * shape.2 * shape.3;
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(shape: (usize, usize, usize, usize), data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            shape.0 * shape.1 * shape.2 * shape.3,
            "data length does not match shape"
        );
        Self { shape, data }
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Flat offset of element (n, c, h, w).
    #[inline]
    pub fn offset(&self, n: usize, c: usize, h: usize, w: usize) -> usize {
        ((n * self.shape.1 + c) * self.shape.2 + h) * self.shape.3 + w
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, h: usize, w: usize) -> f64 {
        self.data[self.offset(n, c, h, w)]
    }

    #[inline]
    pub fn at_mut(&mut self, n: usize, c: usize, h: usize, w: usize) -> &mut f64 {
        let i = self.offset(n, c, h, w);
        &mut self.data[i]
    }

    /// One (n, c) plane of h·w contiguous values.
    #[inline]
    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let hw = self.shape.2 * self.shape.3;
        let start = (n * self.shape.1 + c) * hw;
        &self.data[start..start + hw]
    }

    #[inline]
    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [f64] {
        let hw = self.shape.2 * self.shape.3;
        let start = (n * self.shape.1 + c) * hw;
        &mut self.data[start..start + hw]
    }
}

/// Row-major matrix used for flattened features and logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Reshape a (n, c, h, w) tensor to (n, c·h·w) rows, preserving order.
pub fn flatten(x: &Tensor4) -> Mat {
    let (n, c, h, w) = x.shape();
    Mat::from_vec(n, c * h * w, x.data().to_vec())
}

/// Inverse of [`flatten`] for gradients.
pub fn unflatten(m: &Mat, shape: (usize, usize, usize, usize)) -> Tensor4 {
    Tensor4::from_vec(shape, m.data().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_preserves_order() {
        let t = Tensor4::from_vec((2, 1, 2, 2), (1..=8).map(f64::from).collect());
        let m = flatten(&t);
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 4);
        assert_eq!(m.row(0), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.row(1), &[5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn unflatten_inverts_flatten() {
        let t = Tensor4::from_vec((2, 3, 2, 2), (0..24).map(f64::from).collect());
        assert_eq!(unflatten(&flatten(&t), t.shape()), t);
    }

    #[test]
    fn offsets_are_row_major() {
        let t = Tensor4::from_vec((1, 2, 2, 3), (0..12).map(f64::from).collect());
        assert_eq!(t.at(0, 1, 1, 2), 11.0);
        assert_eq!(t.plane(0, 1), &[6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
    }
}
