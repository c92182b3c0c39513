//! Consistency-guided semi-supervised outlier detection for heterogeneous
//! (nominal + numeric) tabular data, built on fuzzy rough sets.
//!
//! ```
//! use cod_core::dataset::{Attribute, Dataset};
//! use cod_core::detector::{detect, CodConfig};
//!
//! let ds = Dataset::new(
//!     vec![
//!         Attribute::nominal("gender", &["m", "m", "f", "f"]),
//!         Attribute::numeric("age", vec![38.0, 47.0, 51.0, 44.0]),
//!         Attribute::numeric("weight", vec![62.5, 72.3, 52.6, 65.6]),
//!     ],
//!     &[2],
//! )?;
//! let report = detect(&ds, &CodConfig::default())?;
//! assert_eq!(report.scores.len(), 4);
//! assert!(report.flags[2]);
//! # Ok::<(), cod_core::CodError>(())
//! ```

pub mod consistency;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod fuzzy;
pub mod metrics;
pub mod relation;
pub mod synthetic;

pub use dataset::{load_csv, Dataset, DatasetSchema};
pub use detector::{detect, CodConfig, OutlierReport, ThresholdMode};
pub use error::{CodError, Result};
