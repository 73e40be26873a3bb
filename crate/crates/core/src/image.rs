/// 8-bit RGB triple.
pub type Rgb = [u8; 3];

/// Minimal row-major pixel buffer used for depth, color, label and
/// confidence channels. Conversion to/from PNG happens at the dataset
/// boundary only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image<P> {
    width: usize,
    height: usize,
    data: Vec<P>,
}

impl<P: Copy> Image<P> {
    pub fn new_filled(width: usize, height: usize, fill: P) -> Self {
        Image {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    /// Wraps an existing row-major buffer; `data.len()` must equal `width * height`.
    pub fn from_vec(width: usize, height: usize, data: Vec<P>) -> Self {
        assert_eq!(data.len(), width * height, "buffer size mismatch");
        Image {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> P {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: P) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[P] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<P> {
        self.data
    }

    pub fn same_dims<Q>(&self, other: &Image<Q>) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Iterates pixels in row-major order as `((x, y), value)`.
    pub fn pixels(&self) -> impl Iterator<Item = ((usize, usize), P)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, &p)| ((i % w, i / w), p))
    }
}
