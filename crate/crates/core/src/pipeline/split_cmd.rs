use std::io::ErrorKind;
use std::path::Path;

use super::upscale::list_images;
use super::{PipelineError, Result};
use crate::dataio::{
    parse_label_file, read_ppm_dims, split_dataset, ImageRecord, ManifestFile, SplitSpec,
};

/// Build a manifest from the images in `image_dir`. Dimensions come from the
/// image headers; a missing label file means an image without objects.
pub fn split_command(
    image_dir: &Path,
    label_dir: &Path,
    spec: SplitSpec,
    seed: u64,
) -> Result<ManifestFile> {
    let mut records = Vec::new();
    for path in list_images(image_dir)? {
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
        let dims = read_ppm_dims(&bytes).map_err(|source| PipelineError::Raster {
            path: path.clone(),
            source,
        })?;
        let image_id = path
            .file_stem()
            .expect("listed files have names")
            .to_string_lossy()
            .into_owned();
        let label_path = label_dir.join(format!("{image_id}.txt"));
        let annotations = match std::fs::read_to_string(&label_path) {
            Ok(text) => parse_label_file(&text).map_err(|source| PipelineError::Parse {
                path: label_path.clone(),
                source,
            })?,
            Err(e) if e.kind() == ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(PipelineError::io(&label_path, e)),
        };
        records.push(ImageRecord {
            image_id,
            dims,
            annotations,
        });
    }
    Ok(split_dataset(records, spec, seed)?.to_file())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxgeom::ImageDims;
    use crate::dataio::{write_ppm, RasterImage};

    fn corpus(n: usize) -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        std::fs::create_dir(d.path().join("images")).unwrap();
        std::fs::create_dir(d.path().join("labels")).unwrap();
        let img = RasterImage::filled(ImageDims::new(4, 3).unwrap(), 1, 0).unwrap();
        for i in 0..n {
            std::fs::write(
                d.path().join(format!("images/im{i:03}.pgm")),
                write_ppm(&img),
            )
            .unwrap();
            if i % 2 == 0 {
                std::fs::write(
                    d.path().join(format!("labels/im{i:03}.txt")),
                    "0 0.5 0.5 0.2 0.2\n",
                )
                .unwrap();
            }
        }
        d
    }

    #[test]
    fn counts_and_determinism() {
        let d = corpus(15);
        let (img, lab) = (d.path().join("images"), d.path().join("labels"));
        let a = split_command(&img, &lab, SplitSpec::Counts(9, 4, 2), 7).unwrap();
        assert_eq!((a.train.len(), a.val.len(), a.test.len()), (9, 4, 2));
        assert_eq!(
            a.to_json(),
            split_command(&img, &lab, SplitSpec::Counts(9, 4, 2), 7)
                .unwrap()
                .to_json()
        );
        assert!(split_command(&img, &lab, SplitSpec::Counts(9, 4, 1), 7).is_err());
        let r = split_command(&img, &lab, SplitSpec::DEFAULT_RATIO, 7).unwrap();
        assert_eq!((r.train.len(), r.val.len(), r.test.len()), (11, 3, 1));
    }

    #[test]
    fn malformed_label_aborts() {
        let d = corpus(3);
        std::fs::write(d.path().join("labels/im001.txt"), "0 0.5 0.5\n").unwrap();
        let err = split_command(
            &d.path().join("images"),
            &d.path().join("labels"),
            SplitSpec::DEFAULT_RATIO,
            0,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
