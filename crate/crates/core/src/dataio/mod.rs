//! Label/detection parsing, dataset splitting and raster I/O.

mod labels;
mod raster;
mod split;

pub use labels::{
    parse_detection_file, parse_detection_file_with, parse_label_file, parse_label_file_with,
    serialize_detections, serialize_labels, Annotation, DetFormat, Detection, ParseError,
    ParseErrorKind, COORD_SLACK,
};
pub(crate) use raster::quantize;
pub use raster::{
    catmull_rom, load_ppm, read_ppm_dims, resize_image, write_ppm, RasterError, RasterImage,
    ResizeMethod,
};
pub use split::{
    split_dataset, ImageRecord, Manifest, ManifestFile, SplitError, SplitName, SplitSpec,
};
