//! Dataset ingestion, run-record persistence, spectrum CSV and TOML configuration.

pub mod config;
pub mod dataset;
pub mod error;
pub mod idx;
pub mod pgm;
pub mod record;
pub mod spectrum_csv;

pub use config::{load_toml_table, merge_tables, parse_toml_table};
pub use dataset::{LabeledDataset, Normalization};
pub use error::{IoError, IoResult};
pub use idx::{load_idx, read_idx_images, read_idx_labels, save_idx, write_idx_images, write_idx_labels, IdxImages};
pub use pgm::{image_dataset, load_grayscale_image, parse_pgm, GrayImage};
pub use record::{decode_run_record, encode_run_record, read_run_record, write_run_record, RecordWriter, SCHEMA_VERSION};
pub use spectrum_csv::{read_spectrum_csv, write_spectrum_csv};
