//! NIfTI-1 file reading and writing.
//!
//! Single-file volumes (`.nii`), optionally gzip-compressed (`.nii.gz`,
//! detected by the 0x1F 0x8B magic), in either byte order (detected by the
//! `dim[0] in 1..=7` heuristic). On-disk types uint8, int16, int32, float32
//! and float64 are decoded to `f32`, applying `v' = scl_slope * v +
//! scl_inter` when `scl_slope != 0`. The affine comes from the sform when
//! `sform_code > 0`, else the qform, else a diagonal built from `pixdim`.
//!
//! The writer always emits little-endian float32 single-file NIfTI-1 with
//! the sform set, so `read(write(v))` reproduces the data bit-exactly and
//! the affine within `f32` precision.

use std::io::Read;
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, NiftiError, Result};
use crate::grid::Grid;
use crate::volume::{Affine, Volume};

/// Cap on the decoded data section. Guards against corrupt headers and
/// decompression bombs; generously above any real brain acquisition.
pub const MAX_DATA_BYTES: u64 = 1 << 30;

const HEADER_LEN: usize = 348;
const MAGIC_SINGLE: [u8; 4] = *b"n+1\0";
const MAGIC_PAIR: [u8; 4] = *b"ni1\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endianness {
    Little,
    Big,
}

/// Supported on-disk datatypes (NIfTI-1 codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Datatype {
    Uint8 = 2,
    Int16 = 4,
    Int32 = 8,
    Float32 = 16,
    Float64 = 64,
}

impl Datatype {
    pub fn from_code(code: i16) -> Option<Datatype> {
        Some(match code {
            2 => Datatype::Uint8,
            4 => Datatype::Int16,
            8 => Datatype::Int32,
            16 => Datatype::Float32,
            64 => Datatype::Float64,
            _ => return None,
        })
    }

    pub fn byte_size(self) -> usize {
        match self {
            Datatype::Uint8 => 1,
            Datatype::Int16 => 2,
            Datatype::Int32 => 4,
            Datatype::Float32 => 4,
            Datatype::Float64 => 8,
        }
    }
}

/// The NIfTI-1 header fields this pipeline consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub endianness: Endianness,
    pub dim: [i16; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
    pub magic: [u8; 4],
}

impl NiftiHeader {
    /// Parse the fixed 348-byte header, detecting byte order.
    pub fn parse(bytes: &[u8]) -> std::result::Result<NiftiHeader, NiftiError> {
        if bytes.len() < HEADER_LEN {
            return Err(NiftiError::Truncated {
                expected: HEADER_LEN,
                got: bytes.len(),
            });
        }
        let sizeof_le = LittleEndian::read_i32(&bytes[0..4]);
        let sizeof_be = BigEndian::read_i32(&bytes[0..4]);
        if sizeof_le == 540 || sizeof_be == 540 {
            return Err(NiftiError::Nifti2Unsupported);
        }
        let dim0_le = LittleEndian::read_i16(&bytes[40..42]);
        let dim0_be = BigEndian::read_i16(&bytes[40..42]);
        let endianness = if (1..=7).contains(&dim0_le) {
            Endianness::Little
        } else if (1..=7).contains(&dim0_be) {
            Endianness::Big
        } else {
            return Err(NiftiError::UnknownEndianness { dim0: dim0_le });
        };
        let header = match endianness {
            Endianness::Little => Self::read_fields::<LittleEndian>(bytes, endianness),
            Endianness::Big => Self::read_fields::<BigEndian>(bytes, endianness),
        };
        let sizeof_hdr = match endianness {
            Endianness::Little => sizeof_le,
            Endianness::Big => sizeof_be,
        };
        if sizeof_hdr != HEADER_LEN as i32 {
            return Err(NiftiError::BadSizeofHdr { value: sizeof_hdr });
        }
        if header.magic == MAGIC_PAIR {
            return Err(NiftiError::HeaderPairUnsupported);
        }
        if header.magic != MAGIC_SINGLE {
            return Err(NiftiError::InvalidMagic {
                magic: header.magic,
            });
        }
        Ok(header)
    }

    fn read_fields<E: ByteOrder>(b: &[u8], endianness: Endianness) -> NiftiHeader {
        let mut dim = [0i16; 8];
        E::read_i16_into(&b[40..56], &mut dim);
        let mut pixdim = [0f32; 8];
        E::read_f32_into(&b[76..108], &mut pixdim);
        let mut srow = [[0f32; 4]; 3];
        for (i, row) in srow.iter_mut().enumerate() {
            E::read_f32_into(&b[280 + 16 * i..296 + 16 * i], row);
        }
        NiftiHeader {
            endianness,
            dim,
            datatype: E::read_i16(&b[70..72]),
            bitpix: E::read_i16(&b[72..74]),
            pixdim,
            vox_offset: E::read_f32(&b[108..112]),
            scl_slope: E::read_f32(&b[112..116]),
            scl_inter: E::read_f32(&b[116..120]),
            qform_code: E::read_i16(&b[252..254]),
            sform_code: E::read_i16(&b[254..256]),
            quatern: [
                E::read_f32(&b[256..260]),
                E::read_f32(&b[260..264]),
                E::read_f32(&b[264..268]),
            ],
            qoffset: [
                E::read_f32(&b[268..272]),
                E::read_f32(&b[272..276]),
                E::read_f32(&b[276..280]),
            ],
            srow,
            magic: [b[344], b[345], b[346], b[347]],
        }
    }

    /// Shape after squeezing trailing singleton dimensions down to rank 3.
    pub fn squeezed_shape(&self) -> std::result::Result<[usize; 3], NiftiError> {
        let mut rank = self.dim[0] as usize;
        if rank > 7 {
            return Err(NiftiError::InvalidDims {
                dims: self.dim.to_vec(),
            });
        }
        for i in 1..=rank {
            if self.dim[i] < 1 {
                return Err(NiftiError::InvalidDims {
                    dims: self.dim.to_vec(),
                });
            }
        }
        while rank > 3 && self.dim[rank] == 1 {
            rank -= 1;
        }
        if rank != 3 {
            return Err(NiftiError::UnsupportedRank { rank });
        }
        Ok([
            self.dim[1] as usize,
            self.dim[2] as usize,
            self.dim[3] as usize,
        ])
    }

    /// Voxel-to-world affine: sform when `sform_code > 0`, else qform when
    /// `qform_code > 0`, else diagonal pixdim.
    pub fn affine(&self) -> Affine {
        if self.sform_code > 0 {
            let mut m = [[0.0f64; 4]; 4];
            for i in 0..3 {
                for j in 0..4 {
                    m[i][j] = self.srow[i][j] as f64;
                }
            }
            m[3][3] = 1.0;
            return Affine(m);
        }
        if self.qform_code > 0 {
            return self.qform_affine();
        }
        Affine::diagonal([
            self.pixdim[1].abs() as f64,
            self.pixdim[2].abs() as f64,
            self.pixdim[3].abs() as f64,
        ])
    }

    /// Quaternion-form affine per the nifti1 reference method.
    fn qform_affine(&self) -> Affine {
        let b = self.quatern[0] as f64;
        let c = self.quatern[1] as f64;
        let d = self.quatern[2] as f64;
        let a2 = 1.0 - (b * b + c * c + d * d);
        let a = if a2 > 0.0 { a2.sqrt() } else { 0.0 };
        let qfac = if self.pixdim[0] < 0.0 { -1.0 } else { 1.0 };
        let sp = [
            self.pixdim[1].abs() as f64,
            self.pixdim[2].abs() as f64,
            self.pixdim[3].abs() as f64 * qfac,
        ];
        let r = [
            [
                a * a + b * b - c * c - d * d,
                2.0 * (b * c - a * d),
                2.0 * (b * d + a * c),
            ],
            [
                2.0 * (b * c + a * d),
                a * a + c * c - b * b - d * d,
                2.0 * (c * d - a * b),
            ],
            [
                2.0 * (b * d - a * c),
                2.0 * (c * d + a * b),
                a * a + d * d - b * b - c * c,
            ],
        ];
        let mut m = [[0.0f64; 4]; 4];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = r[i][j] * sp[j];
            }
            m[i][3] = self.qoffset[i] as f64;
        }
        m[3][3] = 1.0;
        Affine(m)
    }
}

/// Volume id for a NIfTI path: the file name with `.nii` / `.nii.gz`
/// stripped.
pub fn volume_id_from_path(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.strip_suffix(".nii.gz")
        .or_else(|| name.strip_suffix(".nii"))
        .unwrap_or(&name)
        .to_string()
}

/// Read a NIfTI-1 file (plain or gzipped), using the file name as id.
pub fn read_nifti(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_nifti_bytes(&bytes, &volume_id_from_path(path))
}

/// Decode a NIfTI-1 file from memory.
pub fn read_nifti_bytes(bytes: &[u8], id: &str) -> Result<Volume> {
    read_nifti_bytes_limited(bytes, id, MAX_DATA_BYTES)
}

/// Decode with an explicit cap on the data section size.
pub fn read_nifti_bytes_limited(bytes: &[u8], id: &str, max_data_bytes: u64) -> Result<Volume> {
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        let mut decoder = GzDecoder::new(bytes);
        read_stream(&mut decoder, id, max_data_bytes, true)
    } else {
        let mut cursor = bytes;
        read_stream(&mut cursor, id, max_data_bytes, false)
    }
}

fn read_stream<R: Read>(r: &mut R, id: &str, cap: u64, gzipped: bool) -> Result<Volume> {
    let map_io = |e: std::io::Error| -> Error {
        if gzipped {
            NiftiError::Gzip(e.to_string()).into()
        } else {
            Error::io("<memory>", e)
        }
    };

    let mut header_bytes = [0u8; HEADER_LEN];
    let got = fill(r, &mut header_bytes).map_err(map_io)?;
    if got < HEADER_LEN {
        return Err(NiftiError::Truncated {
            expected: HEADER_LEN,
            got,
        }
        .into());
    }
    let header = NiftiHeader::parse(&header_bytes)?;

    let shape = header.squeezed_shape()?;
    let datatype = Datatype::from_code(header.datatype).ok_or(NiftiError::UnsupportedDatatype {
        code: header.datatype,
    })?;

    let voxels = shape.iter().map(|&n| n as u64).product::<u64>();
    let data_bytes = voxels * datatype.byte_size() as u64;
    if data_bytes > cap {
        return Err(NiftiError::TooLarge {
            voxels,
            limit: cap / datatype.byte_size() as u64,
        }
        .into());
    }

    let vo = header.vox_offset;
    if !vo.is_finite() || vo < 352.0 || vo.fract() != 0.0 || vo > 1e9 {
        return Err(NiftiError::InvalidVoxOffset { vox_offset: vo }.into());
    }
    let skip = vo as u64 - HEADER_LEN as u64;
    let skipped = std::io::copy(&mut r.take(skip), &mut std::io::sink()).map_err(map_io)?;
    if skipped < skip {
        return Err(NiftiError::DataTruncated {
            expected: data_bytes as usize,
            got: 0,
        }
        .into());
    }

    let mut raw = Vec::new();
    r.take(data_bytes)
        .read_to_end(&mut raw)
        .map_err(map_io)?;
    if (raw.len() as u64) < data_bytes {
        return Err(NiftiError::DataTruncated {
            expected: data_bytes as usize,
            got: raw.len(),
        }
        .into());
    }

    let data = match header.endianness {
        Endianness::Little => decode::<LittleEndian>(&raw, datatype, &header),
        Endianness::Big => decode::<BigEndian>(&raw, datatype, &header),
    };

    let non_finite = data.iter().filter(|v| !v.is_finite()).count();
    if non_finite > 0 {
        return Err(NiftiError::NonFinite { count: non_finite }.into());
    }

    let spacing = [
        header.pixdim[1].abs() as f64,
        header.pixdim[2].abs() as f64,
        header.pixdim[3].abs() as f64,
    ];
    let grid = Grid::from_vec(shape, data)?;
    Volume::new(grid, spacing, header.affine(), id)
}

fn decode<E: ByteOrder>(raw: &[u8], datatype: Datatype, header: &NiftiHeader) -> Vec<f32> {
    let slope = header.scl_slope as f64;
    let inter = header.scl_inter as f64;
    let scale = |v: f64| -> f32 {
        if slope != 0.0 {
            (slope * v + inter) as f32
        } else {
            v as f32
        }
    };
    match datatype {
        Datatype::Uint8 => raw.iter().map(|&v| scale(v as f64)).collect(),
        Datatype::Int16 => raw
            .chunks_exact(2)
            .map(|c| scale(E::read_i16(c) as f64))
            .collect(),
        Datatype::Int32 => raw
            .chunks_exact(4)
            .map(|c| scale(E::read_i32(c) as f64))
            .collect(),
        Datatype::Float32 => raw
            .chunks_exact(4)
            .map(|c| scale(E::read_f32(c) as f64))
            .collect(),
        Datatype::Float64 => raw
            .chunks_exact(8)
            .map(|c| scale(E::read_f64(c)))
            .collect(),
    }
}

fn fill<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

/// Serialize a volume as float32 single-file NIfTI-1 (little-endian).
pub fn write_nifti_bytes(volume: &Volume, gzip: bool) -> Result<Vec<u8>> {
    let shape = volume.shape();
    if shape.iter().any(|&n| n > i16::MAX as usize) {
        return Err(NiftiError::DimsExceedFormat { dims: shape }.into());
    }

    let mut out = vec![0u8; 352];
    LittleEndian::write_i32(&mut out[0..4], HEADER_LEN as i32);
    out[38] = b'r'; // "regular" flag, conventional
    let dim: [i16; 8] = [3, shape[0] as i16, shape[1] as i16, shape[2] as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut out[40 + 2 * i..42 + 2 * i], *d);
    }
    LittleEndian::write_i16(&mut out[70..72], Datatype::Float32 as i16);
    LittleEndian::write_i16(&mut out[72..74], 32);
    let spacing = volume.spacing();
    let pixdim: [f32; 8] = [
        1.0,
        spacing[0] as f32,
        spacing[1] as f32,
        spacing[2] as f32,
        1.0,
        1.0,
        1.0,
        1.0,
    ];
    for (i, p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut out[76 + 4 * i..80 + 4 * i], *p);
    }
    LittleEndian::write_f32(&mut out[108..112], 352.0); // vox_offset
    LittleEndian::write_f32(&mut out[112..116], 1.0); // scl_slope
    LittleEndian::write_f32(&mut out[116..120], 0.0); // scl_inter
    out[123] = 10; // xyzt_units: mm | sec
    LittleEndian::write_i16(&mut out[252..254], 0); // qform_code
    LittleEndian::write_i16(&mut out[254..256], 1); // sform_code
    let affine = volume.affine();
    for i in 0..3 {
        for j in 0..4 {
            let off = 280 + 16 * i + 4 * j;
            LittleEndian::write_f32(&mut out[off..off + 4], affine.0[i][j] as f32);
        }
    }
    out[344..348].copy_from_slice(&MAGIC_SINGLE);
    // bytes 348..352 stay zero: no header extensions.

    out.reserve(volume.grid().len() * 4);
    for &v in volume.grid().as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }

    if gzip {
        use std::io::Write;
        let mut encoder = GzEncoder::new(Vec::new(), Compression::default());
        encoder
            .write_all(&out)
            .and_then(|_| encoder.finish())
            .map_err(|e| Error::Nifti(NiftiError::Gzip(e.to_string())))
    } else {
        Ok(out)
    }
}

/// Write a volume to disk; see [`write_nifti_bytes`].
pub fn write_nifti(volume: &Volume, path: impl AsRef<Path>, gzip: bool) -> Result<()> {
    let path = path.as_ref();
    let bytes = write_nifti_bytes(volume, gzip)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
