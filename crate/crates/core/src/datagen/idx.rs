//! Big-endian IDX files as distributed with MNIST and Fashion-MNIST.

use std::path::Path;

use super::{BaseDataset, DataError};
use crate::numkernel::DatasetShard;
use crate::scalar::Scalar;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32, DataError> {
    let word = bytes.get(at..at + 4).ok_or(DataError::Truncated {
        needed: at + 4,
        available: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(word.try_into().expect("slice of length 4")))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<(), DataError> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(DataError::BadMagic { expected, found });
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages, DataError> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let needed = 16 + count * rows * cols;
    if bytes.len() < needed {
        return Err(DataError::Truncated {
            needed,
            available: bytes.len(),
        });
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..needed].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, DataError> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let needed = 8 + count;
    if bytes.len() < needed {
        return Err(DataError::Truncated {
            needed,
            available: bytes.len(),
        });
    }
    Ok(bytes[8..needed].to_vec())
}

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads an image/label IDX pair; pixels are scaled from `0..=255` to `[0, 1]`.
/// The class count is `max label + 1`.
pub fn load_idx<T: Scalar>(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<BaseDataset<T>, DataError> {
    let images = parse_idx_images(&read(images_path.as_ref())?)?;
    let labels = parse_idx_labels(&read(labels_path.as_ref())?)?;
    if images.count != labels.len() {
        return Err(DataError::CountMismatch {
            images: images.count,
            labels: labels.len(),
        });
    }
    let scale = T::of(255.0);
    let features = images.pixels.iter().map(|&p| T::of(f64::from(p)) / scale).collect();
    let labels: Vec<usize> = labels.into_iter().map(usize::from).collect();
    let num_classes = labels.iter().max().map_or(0, |&m| m + 1).max(2);
    let dim = images.rows * images.cols;
    BaseDataset::new(DatasetShard::new(features, dim, labels)?, num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(count: u32, pixels: &[u8]) -> Vec<u8> {
        let mut b = IMAGES_MAGIC.to_be_bytes().to_vec();
        for v in [count, 2, 2] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.extend_from_slice(pixels);
        b
    }

    fn labels(values: &[u8]) -> Vec<u8> {
        let mut b = LABELS_MAGIC.to_be_bytes().to_vec();
        b.extend_from_slice(&(values.len() as u32).to_be_bytes());
        b.extend_from_slice(values);
        b
    }

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, bytes).unwrap();
        p
    }

    #[test]
    fn two_image_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let img = write(dir.path(), "img", &images(2, &[0, 255, 255, 0, 0, 0, 255, 255]));
        let lab = write(dir.path(), "lab", &labels(&[0, 1]));
        let base = load_idx::<f64>(&img, &lab).unwrap();
        assert_eq!(base.dim(), 4);
        assert_eq!(base.data().features(), &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(base.data().labels(), &[0, 1]);
    }

    #[test]
    fn labels_with_image_magic_is_bad_magic() {
        let mut bytes = labels(&[0, 1]);
        bytes[..4].copy_from_slice(&IMAGES_MAGIC.to_be_bytes());
        assert!(matches!(
            parse_idx_labels(&bytes),
            Err(DataError::BadMagic {
                expected: LABELS_MAGIC,
                found: IMAGES_MAGIC
            })
        ));
    }

    #[test]
    fn count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let img = write(dir.path(), "img", &images(3, &[0; 12]));
        let lab = write(dir.path(), "lab", &labels(&[0, 1]));
        assert!(matches!(
            load_idx::<f64>(&img, &lab),
            Err(DataError::CountMismatch { images: 3, labels: 2 })
        ));
    }

    #[test]
    fn truncated() {
        assert!(matches!(
            parse_idx_images(&images(2, &[0; 7])),
            Err(DataError::Truncated { needed: 24, available: 23 })
        ));
        assert!(matches!(parse_idx_labels(&[0, 0, 8]), Err(DataError::Truncated { .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_idx::<f64>("/nonexistent/a", "/nonexistent/b"),
            Err(DataError::Io { .. })
        ));
    }
}
