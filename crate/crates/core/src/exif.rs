//! Byte-level EXIF metadata parsing and intrinsics seeding.
//!
//! Handles JPEG streams (APP1 `Exif\0\0` segment) and bare TIFF streams,
//! honoring the declared byte order. Only the tags needed to seed
//! calibration are extracted; everything else is skipped. All reads are
//! bounds-checked: a truncated or self-referential IFD yields a
//! `malformed-ifd` error, never a read past the buffer.

use crate::calib::CameraIntrinsics;
use crate::error::{Error, Result};

const TAG_ORIENTATION: u16 = 0x0112;
const TAG_EXIF_IFD: u16 = 0x8769;
const TAG_FOCAL_LENGTH: u16 = 0x920A;
const TAG_PIXEL_X: u16 = 0xA002;
const TAG_PIXEL_Y: u16 = 0xA003;
const TAG_FOCAL_35MM: u16 = 0xA405;

const TYPE_SHORT: u16 = 3;
const TYPE_LONG: u16 = 4;
const TYPE_RATIONAL: u16 = 5;

/// Diagonal of a full-frame 36x24 mm sensor, used to convert 35mm-film
/// equivalent focal lengths.
pub const FULL_FRAME_DIAGONAL_MM: f64 = 43.267;

/// Unsigned EXIF rational, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExifRational {
    pub num: u32,
    pub den: u32,
}

impl ExifRational {
    pub fn new(num: u32, den: u32) -> Self {
        Self { num, den }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// The metadata subset relevant to calibration seeding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExifRecord {
    /// Tag 0x920A, lens focal length in millimeters.
    pub focal_length_mm: Option<ExifRational>,
    /// Tag 0xA405, focal length in 35mm-film terms.
    pub focal_length_35mm: Option<u16>,
    /// Tags 0xA002 / 0xA003, declared raster dimensions.
    pub pixel_width: Option<u32>,
    pub pixel_height: Option<u32>,
    /// Tag 0x0112, 1-8; defaults to 1 (upright).
    pub orientation: u8,
}

impl Default for ExifRecord {
    fn default() -> Self {
        Self {
            focal_length_mm: None,
            focal_length_35mm: None,
            pixel_width: None,
            pixel_height: None,
            orientation: 1,
        }
    }
}

impl ExifRecord {
    /// Whether either focal-length tag is present.
    pub fn has_focal_length(&self) -> bool {
        self.focal_length_mm.is_some() || self.focal_length_35mm.is_some()
    }

    /// Declared pixel dimensions with the width/height swap applied for
    /// the transposed orientations 5-8.
    pub fn effective_pixel_dims(&self) -> Option<(u32, u32)> {
        let (w, h) = (self.pixel_width?, self.pixel_height?);
        if self.orientation >= 5 {
            Some((h, w))
        } else {
            Some((w, h))
        }
    }
}

/// Physical sensor dimensions in millimeters, landscape convention
/// (width >= height, swapped on construction if violated).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SensorSpec {
    sensor_width_mm: f64,
    sensor_height_mm: f64,
}

impl SensorSpec {
    pub fn new(sensor_width_mm: f64, sensor_height_mm: f64) -> Result<Self> {
        if !(sensor_width_mm > 0.0 && sensor_height_mm > 0.0)
            || !sensor_width_mm.is_finite()
            || !sensor_height_mm.is_finite()
        {
            return Err(Error::ConfigInvalid(format!(
                "sensor dimensions {sensor_width_mm} x {sensor_height_mm} must be positive"
            )));
        }
        let (w, h) = if sensor_width_mm >= sensor_height_mm {
            (sensor_width_mm, sensor_height_mm)
        } else {
            (sensor_height_mm, sensor_width_mm)
        };
        Ok(Self {
            sensor_width_mm: w,
            sensor_height_mm: h,
        })
    }

    pub fn width_mm(&self) -> f64 {
        self.sensor_width_mm
    }

    pub fn height_mm(&self) -> f64 {
        self.sensor_height_mm
    }

    pub fn diagonal_mm(&self) -> f64 {
        (self.sensor_width_mm * self.sensor_width_mm
            + self.sensor_height_mm * self.sensor_height_mm)
            .sqrt()
    }
}

/// Parse EXIF metadata from a JPEG or TIFF byte stream.
pub fn parse_exif(bytes: &[u8]) -> Result<ExifRecord> {
    if bytes.len() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8 {
        let payload = find_jpeg_exif_payload(bytes)?;
        return parse_tiff_blob(payload);
    }
    if bytes.len() >= 8 && (bytes.starts_with(&LE_HEADER) || bytes.starts_with(&BE_HEADER)) {
        return parse_tiff_blob(bytes);
    }
    Err(Error::NotAnImage(
        "expected a JPEG (FFD8) or TIFF (II*/MM*) stream".into(),
    ))
}

const LE_HEADER: [u8; 4] = [0x49, 0x49, 0x2A, 0x00];
const BE_HEADER: [u8; 4] = [0x4D, 0x4D, 0x00, 0x2A];

/// Walk JPEG segments until the APP1 EXIF payload, the start of scan,
/// or the end of the stream.
fn find_jpeg_exif_payload(bytes: &[u8]) -> Result<&[u8]> {
    let mut i = 2usize;
    loop {
        if i >= bytes.len() || bytes[i] != 0xFF {
            return Err(Error::NoExifSegment);
        }
        let mut j = i + 1;
        while j < bytes.len() && bytes[j] == 0xFF {
            j += 1; // fill bytes
        }
        if j >= bytes.len() {
            return Err(Error::NoExifSegment);
        }
        let marker = bytes[j];
        i = j + 1;
        match marker {
            0x00 | 0x01 | 0xD0..=0xD8 => continue, // standalone markers
            0xD9 | 0xDA => return Err(Error::NoExifSegment), // EOI / start of scan
            _ => {
                if i + 2 > bytes.len() {
                    return Err(Error::NoExifSegment);
                }
                let len = u16::from_be_bytes([bytes[i], bytes[i + 1]]) as usize;
                if len < 2 || i + len > bytes.len() {
                    return Err(Error::NoExifSegment);
                }
                let seg = &bytes[i + 2..i + len];
                if marker == 0xE1 && seg.len() >= 6 && &seg[..6] == b"Exif\0\0" {
                    return Ok(&seg[6..]);
                }
                i += len;
            }
        }
    }
}

struct TiffReader<'a> {
    data: &'a [u8],
    le: bool,
}

impl TiffReader<'_> {
    fn slice(&self, off: usize, n: usize) -> Result<&[u8]> {
        let end = off
            .checked_add(n)
            .ok_or_else(|| Error::MalformedIfd("offset overflow".into()))?;
        self.data.get(off..end).ok_or_else(|| {
            Error::MalformedIfd(format!(
                "read of {n} bytes at offset {off} beyond {}-byte buffer",
                self.data.len()
            ))
        })
    }

    fn u16_at(&self, off: usize) -> Result<u16> {
        let b = self.slice(off, 2)?;
        Ok(if self.le {
            u16::from_le_bytes([b[0], b[1]])
        } else {
            u16::from_be_bytes([b[0], b[1]])
        })
    }

    fn u32_at(&self, off: usize) -> Result<u32> {
        let b = self.slice(off, 4)?;
        Ok(if self.le {
            u32::from_le_bytes([b[0], b[1], b[2], b[3]])
        } else {
            u32::from_be_bytes([b[0], b[1], b[2], b[3]])
        })
    }
}

fn type_size(typ: u16) -> u64 {
    match typ {
        1 | 2 | 6 | 7 => 1,
        TYPE_SHORT | 8 => 2,
        TYPE_LONG | 9 | 11 => 4,
        TYPE_RATIONAL | 10 | 12 => 8,
        _ => 0,
    }
}

/// Offset of an entry's value: inline when it fits in the 4-byte field,
/// otherwise behind the stored offset.
fn value_offset(r: &TiffReader, entry: usize, typ: u16, count: u32) -> Result<usize> {
    let total = type_size(typ) * count as u64;
    if total == 0 {
        return Err(Error::MalformedIfd("empty or unknown value type".into()));
    }
    if total <= 4 {
        Ok(entry + 8)
    } else {
        Ok(r.u32_at(entry + 8)? as usize)
    }
}

fn read_unsigned(r: &TiffReader, entry: usize, typ: u16, count: u32) -> Result<Option<u32>> {
    if count == 0 {
        return Ok(None);
    }
    match typ {
        TYPE_SHORT => {
            let off = value_offset(r, entry, typ, count)?;
            Ok(Some(r.u16_at(off)? as u32))
        }
        TYPE_LONG => {
            let off = value_offset(r, entry, typ, count)?;
            Ok(Some(r.u32_at(off)?))
        }
        _ => Ok(None), // mistyped tag: skip
    }
}

fn read_rational(r: &TiffReader, entry: usize, typ: u16, count: u32) -> Result<Option<ExifRational>> {
    if typ != TYPE_RATIONAL || count == 0 {
        return Ok(None);
    }
    let off = value_offset(r, entry, typ, count)?;
    let num = r.u32_at(off)?;
    let den = r.u32_at(off + 4)?;
    if den == 0 {
        return Ok(None);
    }
    Ok(Some(ExifRational::new(num, den)))
}

/// Process one IFD, returning the offset of the next one in the chain.
fn walk_ifd(
    r: &TiffReader,
    offset: usize,
    record: &mut ExifRecord,
    exif_ifd: &mut Option<usize>,
) -> Result<usize> {
    let count = r.u16_at(offset)? as usize;
    let next_off = offset + 2 + count * 12;
    let next = r.u32_at(next_off)? as usize;
    for k in 0..count {
        let entry = offset + 2 + k * 12;
        let tag = r.u16_at(entry)?;
        let typ = r.u16_at(entry + 2)?;
        let cnt = r.u32_at(entry + 4)?;
        match tag {
            TAG_ORIENTATION => {
                if let Some(v) = read_unsigned(r, entry, typ, cnt)? {
                    if (1..=8).contains(&v) {
                        record.orientation = v as u8;
                    }
                }
            }
            TAG_EXIF_IFD => {
                if let Some(v) = read_unsigned(r, entry, typ, cnt)? {
                    *exif_ifd = Some(v as usize);
                }
            }
            TAG_FOCAL_LENGTH => {
                if let Some(v) = read_rational(r, entry, typ, cnt)? {
                    record.focal_length_mm = Some(v);
                }
            }
            TAG_FOCAL_35MM => {
                if let Some(v) = read_unsigned(r, entry, typ, cnt)? {
                    record.focal_length_35mm = Some(v.min(u16::MAX as u32) as u16);
                }
            }
            TAG_PIXEL_X => {
                if let Some(v) = read_unsigned(r, entry, typ, cnt)? {
                    record.pixel_width = Some(v);
                }
            }
            TAG_PIXEL_Y => {
                if let Some(v) = read_unsigned(r, entry, typ, cnt)? {
                    record.pixel_height = Some(v);
                }
            }
            _ => {} // unknown tag: skip without touching its value
        }
    }
    Ok(next)
}

fn parse_tiff_blob(data: &[u8]) -> Result<ExifRecord> {
    if data.len() < 8 {
        return Err(Error::MalformedIfd("truncated TIFF header".into()));
    }
    let le = if data.starts_with(&LE_HEADER) {
        true
    } else if data.starts_with(&BE_HEADER) {
        false
    } else {
        return Err(Error::MalformedIfd("bad TIFF byte-order mark".into()));
    };
    let r = TiffReader { data, le };
    let mut record = ExifRecord::default();
    let mut exif_ifd = None;

    let mut offset = r.u32_at(4)? as usize;
    let mut chain = 0;
    while offset != 0 && chain < 8 {
        chain += 1;
        offset = walk_ifd(&r, offset, &mut record, &mut exif_ifd)?;
    }
    if let Some(off) = exif_ifd {
        let mut nested = None;
        walk_ifd(&r, off, &mut record, &mut nested)?;
    }
    Ok(record)
}

/// Seed pinhole intrinsics from EXIF focal length and the physical
/// sensor size. `image_width_px`/`image_height_px` are the decoded
/// raster's dimensions; the sensor side paired with the raster width is
/// chosen so long sides match.
pub fn seed_intrinsics(
    exif: &ExifRecord,
    sensor: &SensorSpec,
    image_width_px: u32,
    image_height_px: u32,
) -> Result<CameraIntrinsics> {
    let focal_mm = match (&exif.focal_length_mm, exif.focal_length_35mm) {
        (Some(r), _) => r.as_f64(),
        (None, Some(f35)) => f35 as f64 * sensor.diagonal_mm() / FULL_FRAME_DIAGONAL_MM,
        (None, None) => return Err(Error::NoFocalLength),
    };
    seed_intrinsics_from_focal(focal_mm, sensor, image_width_px, image_height_px)
}

/// Seed intrinsics from an explicitly known focal length in mm.
pub fn seed_intrinsics_from_focal(
    focal_mm: f64,
    sensor: &SensorSpec,
    image_width_px: u32,
    image_height_px: u32,
) -> Result<CameraIntrinsics> {
    if !(focal_mm > 0.0) || !focal_mm.is_finite() {
        return Err(Error::NoFocalLength);
    }
    if image_width_px == 0 || image_height_px == 0 {
        return Err(Error::InvalidRaster("empty image".into()));
    }
    let landscape = image_width_px >= image_height_px;
    let width_side_mm = if landscape {
        sensor.width_mm()
    } else {
        sensor.height_mm()
    };
    let f_px = focal_mm * image_width_px as f64 / width_side_mm;
    Ok(CameraIntrinsics::new(
        f_px,
        f_px,
        image_width_px as f64 / 2.0,
        image_height_px as f64 / 2.0,
        0.0,
        0.0,
    ))
}

// ---------------------------------------------------------------------------
// Fixture writer

fn put_u16(buf: &mut Vec<u8>, v: u16, le: bool) {
    if le {
        buf.extend_from_slice(&v.to_le_bytes());
    } else {
        buf.extend_from_slice(&v.to_be_bytes());
    }
}

fn put_u32(buf: &mut Vec<u8>, v: u32, le: bool) {
    if le {
        buf.extend_from_slice(&v.to_le_bytes());
    } else {
        buf.extend_from_slice(&v.to_be_bytes());
    }
}

fn put_entry_short(buf: &mut Vec<u8>, tag: u16, value: u16, le: bool) {
    put_u16(buf, tag, le);
    put_u16(buf, TYPE_SHORT, le);
    put_u32(buf, 1, le);
    put_u16(buf, value, le);
    put_u16(buf, 0, le);
}

fn put_entry_long(buf: &mut Vec<u8>, tag: u16, value: u32, le: bool) {
    put_u16(buf, tag, le);
    put_u16(buf, TYPE_LONG, le);
    put_u32(buf, 1, le);
    put_u32(buf, value, le);
}

fn put_entry_rational_ref(buf: &mut Vec<u8>, tag: u16, data_offset: u32, le: bool) {
    put_u16(buf, tag, le);
    put_u16(buf, TYPE_RATIONAL, le);
    put_u32(buf, 1, le);
    put_u32(buf, data_offset, le);
}

/// Serialize a record as a minimal TIFF blob (IFD0 with orientation and
/// the Exif sub-IFD pointer, then the sub-IFD with the focal and pixel
/// tags). Mostly useful for tests and synthetic fixtures.
pub fn encode_exif_tiff(record: &ExifRecord, little_endian: bool) -> Vec<u8> {
    let le = little_endian;
    let mut exif_count = 0u16;
    exif_count += record.focal_length_mm.is_some() as u16;
    exif_count += record.pixel_width.is_some() as u16;
    exif_count += record.pixel_height.is_some() as u16;
    exif_count += record.focal_length_35mm.is_some() as u16;

    let ifd0_offset = 8u32;
    let ifd0_size = 2 + 2 * 12 + 4;
    let exif_offset = ifd0_offset + ifd0_size;
    let exif_size = 2 + exif_count as u32 * 12 + 4;
    let data_offset = exif_offset + exif_size;

    let mut buf = Vec::with_capacity(data_offset as usize + 8);
    buf.extend_from_slice(if le { &LE_HEADER } else { &BE_HEADER });
    put_u32(&mut buf, ifd0_offset, le);

    // IFD0: orientation, Exif IFD pointer (tags ascending).
    put_u16(&mut buf, 2, le);
    put_entry_short(&mut buf, TAG_ORIENTATION, record.orientation as u16, le);
    put_entry_long(&mut buf, TAG_EXIF_IFD, exif_offset, le);
    put_u32(&mut buf, 0, le);

    // Exif sub-IFD, tags ascending: 0x920A, 0xA002, 0xA003, 0xA405.
    put_u16(&mut buf, exif_count, le);
    if record.focal_length_mm.is_some() {
        put_entry_rational_ref(&mut buf, TAG_FOCAL_LENGTH, data_offset, le);
    }
    if let Some(w) = record.pixel_width {
        put_entry_long(&mut buf, TAG_PIXEL_X, w, le);
    }
    if let Some(h) = record.pixel_height {
        put_entry_long(&mut buf, TAG_PIXEL_Y, h, le);
    }
    if let Some(f35) = record.focal_length_35mm {
        put_entry_short(&mut buf, TAG_FOCAL_35MM, f35, le);
    }
    put_u32(&mut buf, 0, le);

    if let Some(r) = record.focal_length_mm {
        put_u32(&mut buf, r.num, le);
        put_u32(&mut buf, r.den, le);
    }
    buf
}

/// The TIFF blob wrapped as an APP1 payload (`Exif\0\0` + TIFF).
pub fn encode_exif_app1(record: &ExifRecord, little_endian: bool) -> Vec<u8> {
    let mut out = b"Exif\0\0".to_vec();
    out.extend(encode_exif_tiff(record, little_endian));
    out
}

/// Splice an APP1 EXIF segment into an existing JPEG, right after SOI.
pub fn embed_exif_jpeg(jpeg: &[u8], record: &ExifRecord, little_endian: bool) -> Result<Vec<u8>> {
    if jpeg.len() < 2 || jpeg[0] != 0xFF || jpeg[1] != 0xD8 {
        return Err(Error::NotAnImage("not a JPEG stream".into()));
    }
    let payload = encode_exif_app1(record, little_endian);
    let seg_len = payload.len() + 2;
    if seg_len > u16::MAX as usize {
        return Err(Error::ConfigInvalid("EXIF payload too large".into()));
    }
    let mut out = Vec::with_capacity(jpeg.len() + seg_len + 2);
    out.extend_from_slice(&jpeg[..2]);
    out.push(0xFF);
    out.push(0xE1);
    out.extend_from_slice(&(seg_len as u16).to_be_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&jpeg[2..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Fixture assembled by hand, independent of the writer: IFD0 with
    /// an Exif pointer, sub-IFD with FocalLength = 415/100.
    fn handcrafted_le_fixture() -> Vec<u8> {
        let mut b = vec![
            0x49, 0x49, 0x2A, 0x00, // II*\0
            0x08, 0x00, 0x00, 0x00, // IFD0 at 8
            // IFD0: 1 entry
            0x01, 0x00, //
            0x69, 0x87, 0x04, 0x00, 0x01, 0x00, 0x00, 0x00, 0x1A, 0x00, 0x00, 0x00,
            0x00, 0x00, 0x00, 0x00, // next IFD
            // Exif IFD at 26: 1 entry
            0x01, 0x00, //
            0x0A, 0x92, 0x05, 0x00, 0x01, 0x00, 0x00, 0x00, 0x2C, 0x00, 0x00, 0x00,
            0x00, 0x00, 0x00, 0x00, // next IFD
        ];
        b.extend_from_slice(&415u32.to_le_bytes());
        b.extend_from_slice(&100u32.to_le_bytes());
        b
    }

    #[test]
    fn parses_handcrafted_little_endian_rational() {
        let rec = parse_exif(&handcrafted_le_fixture()).unwrap();
        assert_eq!(rec.focal_length_mm, Some(ExifRational::new(415, 100)));
        assert_eq!(rec.focal_length_mm.unwrap().as_f64(), 4.15);
        assert_eq!(rec.orientation, 1);
    }

    #[test]
    fn endianness_does_not_change_the_record() {
        let record = ExifRecord {
            focal_length_mm: Some(ExifRational::new(415, 100)),
            focal_length_35mm: Some(29),
            pixel_width: Some(3264),
            pixel_height: Some(2448),
            orientation: 6,
        };
        let le = parse_exif(&encode_exif_tiff(&record, true)).unwrap();
        let be = parse_exif(&encode_exif_tiff(&record, false)).unwrap();
        assert_eq!(le, record);
        assert_eq!(be, record);
    }

    #[test]
    fn jpeg_without_app1_reports_missing_segment() {
        let img = crate::raster::RasterImage::from_vec(8, 8, 1, vec![200; 64]).unwrap();
        let jpeg = img.encode_jpeg(90).unwrap();
        assert!(matches!(parse_exif(&jpeg), Err(Error::NoExifSegment)));
    }

    #[test]
    fn jpeg_round_trip_through_app1() {
        let img = crate::raster::RasterImage::from_vec(8, 8, 1, vec![200; 64]).unwrap();
        let jpeg = img.encode_jpeg(90).unwrap();
        let record = ExifRecord {
            focal_length_mm: Some(ExifRational::new(4150, 1000)),
            focal_length_35mm: None,
            pixel_width: Some(8),
            pixel_height: Some(8),
            orientation: 1,
        };
        let with_exif = embed_exif_jpeg(&jpeg, &record, true).unwrap();
        assert_eq!(parse_exif(&with_exif).unwrap(), record);
        // The spliced stream still decodes as an image.
        assert!(crate::raster::RasterImage::decode(&with_exif).is_ok());
    }

    #[test]
    fn bad_magic_is_not_an_image() {
        assert!(matches!(
            parse_exif(b"PNG is not handled here"),
            Err(Error::NotAnImage(_))
        ));
        assert!(matches!(parse_exif(&[]), Err(Error::NotAnImage(_))));
    }

    #[test]
    fn truncated_ifd_is_malformed() {
        let mut bytes = handcrafted_le_fixture();
        bytes.truncate(20); // cuts IFD0 mid-entry
        assert!(matches!(parse_exif(&bytes), Err(Error::MalformedIfd(_))));
    }

    #[test]
    fn out_of_bounds_value_offset_is_malformed() {
        let mut bytes = handcrafted_le_fixture();
        // The focal entry's value offset lives at bytes 36..40; point it
        // far outside the buffer.
        bytes[36..40].copy_from_slice(&0x00FF_FFFFu32.to_le_bytes());
        assert!(matches!(parse_exif(&bytes), Err(Error::MalformedIfd(_))));
    }

    #[test]
    fn zero_denominator_rational_is_skipped() {
        let mut bytes = handcrafted_le_fixture();
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&0u32.to_le_bytes());
        let rec = parse_exif(&bytes).unwrap();
        assert_eq!(rec.focal_length_mm, None);
    }

    #[test]
    fn fuzzed_buffers_never_panic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let valid = encode_exif_tiff(
            &ExifRecord {
                focal_length_mm: Some(ExifRational::new(415, 100)),
                focal_length_35mm: Some(29),
                pixel_width: Some(3264),
                pixel_height: Some(2448),
                orientation: 3,
            },
            true,
        );
        for _ in 0..2000 {
            // Random garbage with valid-looking prefixes.
            let len = rng.random_range(0..128);
            let mut bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            if len >= 4 && rng.random_bool(0.5) {
                let head = if rng.random_bool(0.5) { LE_HEADER } else { BE_HEADER };
                bytes[..4].copy_from_slice(&head);
            }
            let _ = parse_exif(&bytes);

            // Seeded mutations of a valid blob.
            let mut mutated = valid.clone();
            for _ in 0..rng.random_range(1..6) {
                let i = rng.random_range(0..mutated.len());
                mutated[i] = rng.random();
            }
            let _ = parse_exif(&mutated);
        }
    }

    #[test]
    fn sensor_spec_swaps_to_landscape() {
        let s = SensorSpec::new(3.6, 4.8).unwrap();
        assert_eq!(s.width_mm(), 4.8);
        assert_eq!(s.height_mm(), 3.6);
        assert!(SensorSpec::new(-1.0, 2.0).is_err());
    }

    #[test]
    fn seed_from_direct_focal_length() {
        let record = ExifRecord {
            focal_length_mm: Some(ExifRational::new(415, 100)),
            ..Default::default()
        };
        let sensor = SensorSpec::new(4.80, 3.60).unwrap();
        let intr = seed_intrinsics(&record, &sensor, 3264, 2448).unwrap();
        assert_eq!(intr.fx, 4.15 * 3264.0 / 4.80);
        assert!((intr.fx - 2822.0).abs() < 1e-9);
        assert_eq!(intr.fy, intr.fx);
        assert_eq!((intr.cx, intr.cy), (1632.0, 1224.0));
        assert_eq!((intr.k1, intr.k2), (0.0, 0.0));
    }

    #[test]
    fn seed_from_35mm_equivalent() {
        let record = ExifRecord {
            focal_length_35mm: Some(29),
            ..Default::default()
        };
        let sensor = SensorSpec::new(4.80, 3.60).unwrap();
        let intr = seed_intrinsics(&record, &sensor, 3264, 2448).unwrap();
        // diag = 6.0 mm exactly; focal = 29 * 6 / 43.267 = 4.0216 mm.
        let focal = 29.0 * 6.0 / FULL_FRAME_DIAGONAL_MM;
        assert!((focal - 4.0216).abs() < 1e-4);
        assert_eq!(intr.fx, focal * 3264.0 / 4.80);
    }

    #[test]
    fn seed_without_focal_tags_fails() {
        let sensor = SensorSpec::new(4.80, 3.60).unwrap();
        assert!(matches!(
            seed_intrinsics(&ExifRecord::default(), &sensor, 100, 100),
            Err(Error::NoFocalLength)
        ));
    }

    #[test]
    fn portrait_rasters_pair_long_sides() {
        let record = ExifRecord {
            focal_length_mm: Some(ExifRational::new(4, 1)),
            ..Default::default()
        };
        let sensor = SensorSpec::new(4.80, 3.60).unwrap();
        let portrait = seed_intrinsics(&record, &sensor, 2448, 3264).unwrap();
        assert_eq!(portrait.fx, 4.0 * 2448.0 / 3.60);
    }

    #[test]
    fn halving_the_raster_halves_the_intrinsics() {
        let record = ExifRecord {
            focal_length_mm: Some(ExifRational::new(415, 100)),
            ..Default::default()
        };
        let sensor = SensorSpec::new(4.80, 3.60).unwrap();
        let full = seed_intrinsics(&record, &sensor, 3264, 2448).unwrap();
        let half = seed_intrinsics(&record, &sensor, 1632, 1224).unwrap();
        assert_eq!(half.fx, full.fx / 2.0);
        assert_eq!(half.fy, full.fy / 2.0);
        assert_eq!(half.cx, full.cx / 2.0);
        assert_eq!(half.cy, full.cy / 2.0);
    }

    #[test]
    fn transposed_orientations_swap_declared_dims() {
        let mut record = ExifRecord {
            pixel_width: Some(400),
            pixel_height: Some(300),
            ..Default::default()
        };
        assert_eq!(record.effective_pixel_dims(), Some((400, 300)));
        record.orientation = 6;
        assert_eq!(record.effective_pixel_dims(), Some((300, 400)));
    }
}
