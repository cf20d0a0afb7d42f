//! Compression of dense weight matrices: magnitude pruning, four
//! weight-sharing quantizers, and storage as Huffman address maps (HAM and
//! its sparse variant sHAM) next to CSC and index-map baselines. Products
//! `x^T W` run directly on every stored form.
//!
//! ```
//! use sham_core::formats::{Archive, Format};
//! use sham_core::kernels::CompressedDot;
//! use sham_core::{DenseMatrix, WordSize};
//!
//! let w = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 2.0]]).unwrap();
//! let a = Archive::compress(&w, Format::Sham, WordSize::W32, None).unwrap();
//! let back = Archive::from_bytes(&a.to_bytes()).unwrap();
//! assert!(back.decompress().unwrap().bit_eq(&w));
//! assert_eq!(back.matrix().dot(&[1.0, 1.0, 1.0]).unwrap(), vec![2.0, 4.0]);
//! assert!(a.space_report().within_bound());
//! ```
//!
//! Quantizers and sweeps draw randomness from [`Rng`] only, so a seed fixes
//! every output. With the default `parallel` feature, batched products in
//! [`kernels::pardot`] run on rayon; results do not depend on the thread
//! count.

pub mod error;
pub mod formats;
pub mod huffman;
pub mod kernels;
pub mod matrix;
pub mod parallel;
pub mod pipeline;
pub mod quant;
pub mod rng;
pub mod sweep;

pub use error::{Error, Result};
pub use matrix::{occupancy_ratio, stats, DenseMatrix, SparsityStats, WordSize};
pub use rng::Rng;
