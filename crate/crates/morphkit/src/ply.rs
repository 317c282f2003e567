//! ASCII PLY export/import for colored point clouds.
//!
//! Layout: `element vertex M` with float x y z and uchar red green blue.
//! Coordinates are printed as shortest-round-trip f32, so import recovers
//! them to f32 precision; colors quantize to 8 bits.

use crate::numerics::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum PlyError {
    #[error("malformed ply: {0}")]
    Malformed(String),
}

/// Serialize a colored cloud. Colors are clamped to [0, 1].
pub fn write_ply(points: &Tensor, colors: &Tensor) -> String {
    let m = points.rows();
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {m}\n"));
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    out.push_str("end_header\n");
    for i in 0..m {
        let p = points.row(i);
        let c = colors.row(i);
        let quant = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            p[0] as f32,
            p[1] as f32,
            p[2] as f32,
            quant(c[0]),
            quant(c[1]),
            quant(c[2])
        ));
    }
    out
}

/// Parse a cloud written by [`write_ply`].
pub fn read_ply(text: &str) -> Result<(Tensor, Tensor), PlyError> {
    let mut lines = text.lines();
    let mut vertex_count: Option<usize> = None;
    for line in lines.by_ref() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("element vertex ") {
            vertex_count = Some(
                rest.trim()
                    .parse()
                    .map_err(|e| PlyError::Malformed(format!("vertex count: {e}")))?,
            );
        }
        if line == "end_header" {
            break;
        }
    }
    let m = vertex_count.ok_or_else(|| PlyError::Malformed("missing element vertex".into()))?;
    let mut pts = Vec::with_capacity(m * 3);
    let mut cols = Vec::with_capacity(m * 3);
    for (i, line) in lines.enumerate() {
        if i >= m {
            break;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(PlyError::Malformed(format!("vertex line {i}: want 6 fields")));
        }
        for f in &fields[..3] {
            pts.push(
                f.parse::<f64>()
                    .map_err(|e| PlyError::Malformed(format!("vertex line {i}: {e}")))?,
            );
        }
        for f in &fields[3..] {
            let v: u8 = f
                .parse()
                .map_err(|e| PlyError::Malformed(format!("vertex line {i}: {e}")))?;
            cols.push(v as f64 / 255.0);
        }
    }
    if pts.len() != m * 3 {
        return Err(PlyError::Malformed(format!(
            "expected {m} vertices, found {}",
            pts.len() / 3
        )));
    }
    Ok((
        Tensor::from_vec(&[m, 3], pts).expect("sized above"),
        Tensor::from_vec(&[m, 3], cols).expect("sized above"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn round_trip_within_f32_precision() {
        let mut rng = Rng::new(1);
        let points = rng.gaussian(&[32, 3]);
        let colors = rng.gaussian(&[32, 3]).map(|v| v.abs().min(1.0));
        let text = write_ply(&points, &colors);
        let (p2, c2) = read_ply(&text).unwrap();
        for (a, b) in points.data().iter().zip(p2.data()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        for (a, b) in colors.data().iter().zip(c2.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn malformed_input_errors() {
        assert!(read_ply("not a ply").is_err());
        assert!(read_ply("ply\nformat ascii 1.0\nend_header\n").is_err());
    }
}
