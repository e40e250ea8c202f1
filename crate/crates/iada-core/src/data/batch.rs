//! Batch value types moving between data, engine, and nets.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::Array3;

/// Class count of the digit task.
pub const NUM_CLASSES: usize = 10;

/// Side length of the square digit images.
pub const IMAGE_SIDE: usize = 28;

/// Images with supervision targets. Pixel values lie in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LabeledBatch<F> {
    /// `[B × H × W]`
    pub images: Array3<F>,
    /// Class ids in `[0, NUM_CLASSES)`, one per image.
    pub labels: Vec<u8>,
}

impl<F: Scalar> LabeledBatch<F> {
    pub fn new(images: Array3<F>, labels: Vec<u8>) -> Result<LabeledBatch<F>> {
        let b = images.dim().0;
        if b == 0 {
            return Err(Error::invalid("batch must contain at least one image"));
        }
        if labels.len() != b {
            return Err(Error::invalid(format!(
                "{} labels for {} images",
                labels.len(),
                b
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
            return Err(Error::invalid(format!(
                "label {bad} out of range [0, {NUM_CLASSES})"
            )));
        }
        Ok(LabeledBatch { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Images only — how target domains are seen during adaptation.
#[derive(Debug, Clone)]
pub struct UnlabeledBatch<F> {
    /// `[B × H × W]`
    pub images: Array3<F>,
}

impl<F: Scalar> UnlabeledBatch<F> {
    pub fn new(images: Array3<F>) -> Result<UnlabeledBatch<F>> {
        if images.dim().0 == 0 {
            return Err(Error::invalid("batch must contain at least one image"));
        }
        Ok(UnlabeledBatch { images })
    }

    pub fn len(&self) -> usize {
        self.images.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validates_shape_and_labels() {
        let images = Array3::<f32>::zeros((2, 4, 4));
        assert!(LabeledBatch::new(images.clone(), vec![0, 9]).is_ok());
        assert!(LabeledBatch::new(images.clone(), vec![0]).is_err());
        assert!(LabeledBatch::new(images, vec![0, 10]).is_err());
        assert!(LabeledBatch::new(Array3::<f32>::zeros((0, 4, 4)), vec![]).is_err());
        assert!(UnlabeledBatch::new(Array3::<f32>::zeros((0, 4, 4))).is_err());
    }
}
