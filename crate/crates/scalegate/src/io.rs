//! Lossless image file I/O: PNG (8-bit gray and RGB) plus binary PPM/PGM.
//!
//! PPM (P6) and PGM (P5) are kept dependency-free so golden tests can pin
//! exact bytes. Inputs that would lose information are rejected instead of
//! converted: 16-bit depths, alpha channels, palette tricks all fail loudly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Loads a PNG or binary PPM/PGM file, dispatching on magic bytes.
///
/// Samples come back exactly as stored: no color conversion, no gamma.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|source| Error::Io { path: path.into(), source })?;
    if data.len() < 2 {
        return Err(Error::CorruptHeader {
            path: path.into(),
            reason: format!("file is only {} bytes long", data.len()),
        });
    }
    match &data[..2] {
        [0x89, b'P'] => decode_png(path, &data),
        b"P6" | b"P5" => decode_pnm(path, &data),
        magic => Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: format!("unrecognized magic bytes {magic:02x?} (expected PNG, P6 or P5)"),
        }),
    }
}

/// Saves `img` losslessly; the extension picks the format (.png, .ppm, .pgm).
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "png" => encode_png(img, path),
        "ppm" if img.channels() == 3 => write_pnm(img, path, b"P6"),
        "pgm" if img.channels() == 1 => write_pnm(img, path, b"P5"),
        _ => Err(Error::UnsupportedExtension { path: path.into() }),
    }
}

fn decode_png(path: &Path, data: &[u8]) -> Result<Image> {
    use ::image::DynamicImage;

    let decoded = ::image::load_from_memory_with_format(data, ::image::ImageFormat::Png)
        .map_err(|e| Error::CorruptHeader { path: path.into(), reason: e.to_string() })?;
    let (width, height) = (decoded.width(), decoded.height());
    match decoded {
        DynamicImage::ImageLuma8(buf) => Image::from_samples(width, height, 1, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => Image::from_samples(width, height, 3, buf.into_raw()),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgba8(_) => {
            Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: "alpha channel present; flatten it explicitly before use".into(),
            })
        }
        other => Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: format!("{:?} samples are not 8-bit gray or RGB", other.color()),
        }),
    }
}

fn encode_png(img: &Image, path: &Path) -> Result<()> {
    let color = match img.channels() {
        1 => ::image::ExtendedColorType::L8,
        _ => ::image::ExtendedColorType::Rgb8,
    };
    ::image::save_buffer_with_format(
        path,
        img.samples(),
        img.width(),
        img.height(),
        color,
        ::image::ImageFormat::Png,
    )
    .map_err(|e| match e {
        ::image::ImageError::IoError(source) => Error::Io { path: path.into(), source },
        other => Error::Io {
            path: path.into(),
            source: std::io::Error::other(other.to_string()),
        },
    })
}

fn decode_pnm(path: &Path, data: &[u8]) -> Result<Image> {
    let corrupt = |reason: String| Error::CorruptHeader { path: path.into(), reason };
    let channels = if &data[..2] == b"P6" { 3u8 } else { 1u8 };

    let mut pos = 2usize;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        *field = read_pnm_number(data, &mut pos)
            .ok_or_else(|| corrupt("truncated or malformed header field".into()))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(corrupt(format!("degenerate dimensions {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(corrupt(format!("invalid maxval {maxval}")));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: format!("maxval {maxval} implies 16-bit samples; only 8-bit is supported"),
        });
    }
    // Exactly one whitespace byte separates the header from the raster.
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(corrupt("missing whitespace before raster data".into())),
    }
    let expected = width as usize * height as usize * channels as usize;
    let raster = data
        .get(pos..pos + expected)
        .ok_or_else(|| corrupt(format!("raster truncated: need {expected} bytes")))?;
    Image::from_samples(width, height, channels, raster.to_vec())
}

/// Reads one decimal header field, skipping whitespace and `#` comments.
fn read_pnm_number(data: &[u8], pos: &mut usize) -> Option<u32> {
    loop {
        match data.get(*pos)? {
            b if b.is_ascii_whitespace() => *pos += 1,
            b'#' => {
                while *data.get(*pos)? != b'\n' {
                    *pos += 1;
                }
            }
            _ => break,
        }
    }
    let start = *pos;
    while data.get(*pos).is_some_and(|b| b.is_ascii_digit()) {
        *pos += 1;
    }
    if *pos == start {
        return None;
    }
    std::str::from_utf8(&data[start..*pos]).ok()?.parse().ok()
}

fn write_pnm(img: &Image, path: &Path, magic: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(img.samples().len() + 32);
    out.extend_from_slice(magic);
    out.extend_from_slice(format!("\n{} {}\n255\n", img.width(), img.height()).as_bytes());
    out.extend_from_slice(img.samples());
    std::fs::write(path, out).map_err(|source| Error::Io { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn ppm_p6_fixture_loads_in_row_major_order() {
        let dir = tmp();
        let path = dir.path().join("fixture.ppm");
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255]);
        std::fs::write(&path, bytes).unwrap();

        let img = load_image(&path).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (2, 2, 3));
        assert_eq!(img.samples(), &[255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255]);
    }

    #[test]
    fn pgm_body_is_raw_sample_bytes() {
        let dir = tmp();
        let path = dir.path().join("gray.pgm");
        let img = Image::filled(1, 1, 1, 128).unwrap();
        save_image(&img, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n1 1\n255\n"));
        assert_eq!(&bytes[bytes.len() - 1..], &[0x80]);
    }

    #[test]
    fn png_round_trip_is_bit_exact() {
        let dir = tmp();
        let path = dir.path().join("rt.png");
        let samples: Vec<u8> = (0..17 * 13 * 3).map(|i| (i * 31 % 256) as u8).collect();
        let img = Image::from_samples(17, 13, 3, samples).unwrap();
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn pnm_round_trip_is_bit_exact() {
        let dir = tmp();
        for (channels, ext) in [(1u8, "pgm"), (3u8, "ppm")] {
            let path = dir.path().join(format!("rt.{ext}"));
            let samples: Vec<u8> =
                (0..17 * 13 * channels as usize).map(|i| (i * 7 % 251) as u8).collect();
            let img = Image::from_samples(17, 13, channels, samples).unwrap();
            save_image(&img, &path).unwrap();
            assert_eq!(load_image(&path).unwrap(), img);
        }
    }

    #[test]
    fn truncated_files_report_corrupt_header() {
        let dir = tmp();
        let p1 = dir.path().join("trunc.ppm");
        std::fs::write(&p1, b"P6\n10 10").unwrap();
        assert!(matches!(load_image(&p1), Err(Error::CorruptHeader { .. })));

        let p2 = dir.path().join("trunc.png");
        std::fs::write(&p2, &[0x89, b'P', b'N', b'G', 0x0d]).unwrap();
        assert!(matches!(load_image(&p2), Err(Error::CorruptHeader { .. })));

        let p3 = dir.path().join("short.ppm");
        std::fs::write(&p3, b"P").unwrap();
        assert!(matches!(load_image(&p3), Err(Error::CorruptHeader { .. })));
    }

    #[test]
    fn raster_shorter_than_header_promise_is_corrupt() {
        let dir = tmp();
        let path = dir.path().join("short_raster.ppm");
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_image(&path), Err(Error::CorruptHeader { .. })));
    }

    #[test]
    fn unknown_magic_is_unsupported_format() {
        let dir = tmp();
        let path = dir.path().join("noise.bin");
        std::fs::write(&path, b"GIF89a....").unwrap();
        assert!(matches!(load_image(&path), Err(Error::UnsupportedFormat { .. })));
    }

    #[test]
    fn sixteen_bit_pnm_is_rejected_not_truncated() {
        let dir = tmp();
        let path = dir.path().join("deep.ppm");
        let mut bytes = b"P6\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0, 1, 0, 2, 0, 3]);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_image(&path), Err(Error::UnsupportedFormat { .. })));
    }

    #[test]
    fn alpha_png_is_rejected() {
        let dir = tmp();
        let path = dir.path().join("alpha.png");
        ::image::save_buffer_with_format(
            &path,
            &[1, 2, 3, 4],
            1,
            1,
            ::image::ExtendedColorType::Rgba8,
            ::image::ImageFormat::Png,
        )
        .unwrap();
        assert!(matches!(load_image(&path), Err(Error::UnsupportedFormat { .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_image("/nonexistent/nope.png"), Err(Error::Io { .. })));
    }

    #[test]
    fn unwritable_directory_is_io_error() {
        let img = Image::filled(1, 1, 1, 0).unwrap();
        assert!(matches!(
            save_image(&img, "/nonexistent/dir/out.png"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn channel_extension_mismatch_is_unsupported() {
        let dir = tmp();
        let gray = Image::filled(2, 2, 1, 9).unwrap();
        let rgb = Image::filled(2, 2, 3, 9).unwrap();
        assert!(matches!(
            save_image(&gray, dir.path().join("x.ppm")),
            Err(Error::UnsupportedExtension { .. })
        ));
        assert!(matches!(
            save_image(&rgb, dir.path().join("x.pgm")),
            Err(Error::UnsupportedExtension { .. })
        ));
        assert!(matches!(
            save_image(&rgb, dir.path().join("x.jpg")),
            Err(Error::UnsupportedExtension { .. })
        ));
    }
}
