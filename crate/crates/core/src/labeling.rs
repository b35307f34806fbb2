//! 8-connected component labeling on row-major grids.

use crate::grid::for_each_neighbor8;

/// Component labels (0 = excluded, `1..=K` in order of each component's first
/// pixel in a row-major scan) and per-component pixel counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub labels: Vec<u32>,
    /// `sizes[k - 1]` is the pixel count of component `k`.
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

/// Labels 8-connected components of the pixels accepted by `include`, where
/// two included neighbors belong together only if `joins(a, b)` holds.
pub fn label_components(
    width: usize,
    height: usize,
    include: impl Fn(usize) -> bool,
    joins: impl Fn(usize, usize) -> bool,
) -> Components {
    let n = width * height;
    let mut labels = vec![0u32; n];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if labels[start] != 0 || !include(start) {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let mut size = 0;
        while let Some(p) = stack.pop() {
            size += 1;
            for_each_neighbor8(width, height, p, |q| {
                if labels[q] == 0 && include(q) && joins(p, q) {
                    labels[q] = label;
                    stack.push(q);
                }
            });
        }
        sizes.push(size);
    }
    Components { labels, sizes }
}

/// Components of a boolean mask.
pub fn label_mask(width: usize, height: usize, mask: &[bool]) -> Components {
    label_components(width, height, |i| mask[i], |_, _| true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_connect() {
        #[rustfmt::skip]
        let mask = [
            true,  false, false,
            false, true,  false,
            false, false, true,
        ];
        let c = label_mask(3, 3, &mask);
        assert_eq!(c.count(), 1);
        assert_eq!(c.sizes, vec![3]);
    }

    #[test]
    fn row_major_first_pixel_order() {
        #[rustfmt::skip]
        let mask = [
            false, false, true,
            false, false, false,
            true,  false, false,
        ];
        let c = label_mask(3, 3, &mask);
        assert_eq!(c.labels, vec![0, 0, 1, 0, 0, 0, 2, 0, 0]);
    }

    #[test]
    fn u_shape_is_one_component() {
        // the right arm is reached only through the bottom row
        #[rustfmt::skip]
        let mask = [
            true, false, false, true,
            true, false, false, true,
            true, true,  true,  true,
        ];
        let c = label_mask(4, 3, &mask);
        assert_eq!(c.count(), 1);
        assert!(c.labels.iter().zip(&mask).all(|(&l, &m)| (l == 1) == m));
    }
}
