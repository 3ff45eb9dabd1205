//! Point-cloud file formats.
//!
//! Text: one point per line, `x y z` or `x y z r g b`, whitespace separated.
//! Blank lines and lines starting with `#` are skipped.
//!
//! Binary `PCB1`: magic `PCB1`, u32 LE point count, u8 flag (0 = xyz,
//! 1 = xyzrgb), then f32 LE values row-major.

use std::io::{Read, Write};
use std::path::Path;

use super::PointCloud;
use crate::error::{Error, Result};
use crate::scalar::{Scalar, Vec3};

pub const PCB1_MAGIC: &[u8; 4] = b"PCB1";

pub fn parse_text<T: Scalar>(text: &str) -> Result<PointCloud<T>> {
    let mut points = Vec::new();
    let mut colors = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse_at(lineno + 1, e))?;
        if values.len() != 3 && values.len() != 6 {
            return Err(Error::parse_at(
                lineno + 1,
                format!("expected 3 or 6 values, found {}", values.len()),
            ));
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::parse_at(lineno + 1, "mixed xyz and xyzrgb rows"));
            }
            _ => {}
        }
        points.push([T::lit(values[0]), T::lit(values[1]), T::lit(values[2])]);
        if values.len() == 6 {
            colors.push([T::lit(values[3]), T::lit(values[4]), T::lit(values[5])]);
        }
    }
    if width == Some(6) {
        PointCloud::with_colors(points, colors)
    } else {
        PointCloud::new(points)
    }
}

pub fn to_text<T: Scalar>(cloud: &PointCloud<T>) -> String {
    let mut out = String::with_capacity(cloud.len() * 32);
    for (i, p) in cloud.points().iter().enumerate() {
        out.push_str(&format!("{} {} {}", p[0], p[1], p[2]));
        if let Some(c) = cloud.colors() {
            out.push_str(&format!(" {} {} {}", c[i][0], c[i][1], c[i][2]));
        }
        out.push('\n');
    }
    out
}

pub fn read_pcb1<T: Scalar>(mut reader: impl Read) -> Result<PointCloud<T>> {
    let mut header = [0u8; 9];
    reader
        .read_exact(&mut header)
        .map_err(|_| Error::parse("truncated PCB1 header"))?;
    if &header[..4] != PCB1_MAGIC {
        return Err(Error::parse("bad PCB1 magic"));
    }
    let count = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let width = match header[8] {
        0 => 3,
        1 => 6,
        f => return Err(Error::parse(format!("unknown PCB1 flag {f}"))),
    };
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    if body.len() != count * width * 4 {
        return Err(Error::parse(format!(
            "PCB1 body has {} bytes, expected {}",
            body.len(),
            count * width * 4
        )));
    }
    let values: Vec<T> = body
        .chunks_exact(4)
        .map(|b| T::lit(f32::from_le_bytes(b.try_into().unwrap()) as f64))
        .collect();
    let rows = values.chunks_exact(width);
    let points = rows.clone().map(|r| [r[0], r[1], r[2]]).collect();
    if width == 6 {
        PointCloud::with_colors(points, rows.map(|r| [r[3], r[4], r[5]]).collect())
    } else {
        PointCloud::new(points)
    }
}

pub fn write_pcb1<T: Scalar>(cloud: &PointCloud<T>, mut writer: impl Write) -> Result<()> {
    let count = u32::try_from(cloud.len())
        .map_err(|_| Error::InvalidCount("too many points for PCB1".into()))?;
    writer.write_all(PCB1_MAGIC)?;
    writer.write_all(&count.to_le_bytes())?;
    writer.write_all(&[u8::from(cloud.colors().is_some())])?;
    let put = |w: &mut dyn Write, v: &Vec3<T>| -> std::io::Result<()> {
        for x in v {
            w.write_all(&(x.to_f64_lossy() as f32).to_le_bytes())?;
        }
        Ok(())
    };
    for (i, p) in cloud.points().iter().enumerate() {
        put(&mut writer, p)?;
        if let Some(c) = cloud.colors() {
            put(&mut writer, &c[i])?;
        }
    }
    Ok(())
}

/// Reads a cloud, choosing the format by sniffing the `PCB1` magic.
pub fn load<T: Scalar>(path: impl AsRef<Path>) -> Result<PointCloud<T>> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(PCB1_MAGIC) {
        read_pcb1(&bytes[..])
    } else {
        let text = std::str::from_utf8(&bytes).map_err(Error::parse)?;
        parse_text(text)
    }
}

/// Writes PCB1 when the extension is `.pcb`, text otherwise.
pub fn save<T: Scalar>(cloud: &PointCloud<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "pcb") {
        let mut buf = Vec::new();
        write_pcb1(cloud, &mut buf)?;
        std::fs::write(path, buf)?;
    } else {
        std::fs::write(path, to_text(cloud))?;
    }
    Ok(())
}
