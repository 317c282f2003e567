//! Corpus manifests: newline-delimited (family, params, seed) records.

use super::{generate, Family, ShapeError, ShapeSample, FAMILIES};
use crate::numerics::Rng;

/// One manifest line.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeRecord {
    pub family: Family,
    pub params: Vec<f64>,
    pub seed: u64,
}

/// A realized corpus plus the records that produced it.
pub struct Corpus {
    pub records: Vec<ShapeRecord>,
    pub samples: Vec<ShapeSample>,
}

impl Corpus {
    pub fn from_records(records: &[ShapeRecord], m: usize) -> Result<Self, ShapeError> {
        let samples = records
            .iter()
            .map(|r| generate(r.family, &r.params, m, r.seed))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { records: records.to_vec(), samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// The standard corpus: `per_family` records for each family, parameters
/// uniform over the family ranges, quantized to 1e-6 so manifests
/// round-trip through text exactly.
pub fn default_manifest(per_family: usize, seed: u64) -> Vec<ShapeRecord> {
    let mut records = Vec::with_capacity(per_family * FAMILIES.len());
    for family in FAMILIES {
        let mut rng = Rng::new(seed).fork(family.id() as u64 + 101);
        for k in 0..per_family {
            let params: Vec<f64> = family
                .param_ranges()
                .iter()
                .map(|&(lo, hi)| quantize(rng.uniform_in(lo, hi)))
                .collect();
            let sample_seed = seed
                .wrapping_mul(1_000_003)
                .wrapping_add((family.id() * per_family + k) as u64);
            records.push(ShapeRecord { family, params, seed: sample_seed });
        }
    }
    records
}

fn quantize(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Serialize records to the manifest text form.
pub fn write_manifest(records: &[ShapeRecord]) -> String {
    let mut out = String::from("# family params... seed\n");
    for r in records {
        let params: Vec<String> = r.params.iter().map(|p| format!("{:.6}", p)).collect();
        out.push_str(&format!("{} {} {}\n", r.family.name(), params.join(" "), r.seed));
    }
    out
}

/// Parse manifest text. Lines starting with `#` and blank lines are skipped.
pub fn parse_manifest(text: &str) -> Result<Vec<ShapeRecord>, ShapeError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(ShapeError::BadManifest {
                line: idx + 1,
                detail: "expected: family params... seed".into(),
            });
        }
        let family = Family::from_name(fields[0])?;
        let expected = family.param_count();
        if fields.len() != expected + 2 {
            return Err(ShapeError::BadManifest {
                line: idx + 1,
                detail: format!("{} takes {} params", family.name(), expected),
            });
        }
        let params = fields[1..=expected]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ShapeError::BadManifest { line: idx + 1, detail: e.to_string() })?;
        let seed = fields[expected + 1]
            .parse::<u64>()
            .map_err(|e| ShapeError::BadManifest { line: idx + 1, detail: e.to_string() })?;
        records.push(ShapeRecord { family, params, seed });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let records = default_manifest(4, 77);
        let text = write_manifest(&records);
        let parsed = parse_manifest(&text).unwrap();
        assert_eq!(records, parsed);
    }

    #[test]
    fn default_manifest_is_deterministic_and_sized() {
        let a = default_manifest(8, 1);
        let b = default_manifest(8, 1);
        assert_eq!(a, b);
        assert_eq!(a.len(), 48);
        for f in FAMILIES {
            assert_eq!(a.iter().filter(|r| r.family == f).count(), 8);
        }
    }

    #[test]
    fn default_manifest_generates_valid_shapes() {
        let records = default_manifest(2, 5);
        let corpus = Corpus::from_records(&records, 32).unwrap();
        assert_eq!(corpus.len(), 12);
    }

    #[test]
    fn bad_manifest_lines_error() {
        assert!(parse_manifest("sphere 0.5").is_err());
        assert!(parse_manifest("pyramid 0.5 0.5 1").is_err());
        assert!(parse_manifest("sphere 0.5 0.5 notanumber").is_err());
    }
}
