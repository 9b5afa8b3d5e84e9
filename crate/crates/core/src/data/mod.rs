//! Loading, normalizing, windowing and synthesizing univariate series.

pub mod io;
pub mod norm;
pub mod synthetic;
pub mod window;

pub use io::{
    load_column, load_windowed_text, parse_column, parse_windowed_text, read_metadata,
    write_column, write_metadata, TraceMetadata,
};
pub use norm::{normalize, normalize_windows, NormRange, NormRecord};
pub use synthetic::{synthetic_dataset, SyntheticKind};
pub use window::{window_count, window_series, SeriesBatch, SeriesPool};
