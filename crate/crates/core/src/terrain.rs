//! Stepfield terrain: generation, rugosity and height queries.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower truncation bound of block heights (cm).
pub const HEIGHT_MIN: f64 = 0.0;
/// Upper truncation bound of block heights (cm).
pub const HEIGHT_MAX: f64 = 12.0;
/// Default block side (cm).
pub const DEFAULT_BLOCK_SIZE: f64 = 10.0;

const MAX_REJECTIONS: usize = 1_000_000;

/// Parameters a stepfield was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub mean: f64,
    pub std: f64,
    pub increment: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Grid of square blocks. Columns run along `x`, rows along `y`; heights
/// are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stepfield {
    pub block_size: f64,
    pub n_cols: usize,
    pub n_rows: usize,
    pub heights: Vec<f64>,
    pub provenance: Provenance,
}

fn quantize(h: f64, increment: f64) -> f64 {
    let top = (HEIGHT_MAX / increment).floor() * increment;
    let q = (h / increment + 0.5).floor() * increment;
    q.clamp(HEIGHT_MIN, top)
}

/// Draws a stepfield with independent truncated-normal block heights.
///
/// Heights are resampled until they fall in `[0, 12]` cm and then rounded
/// half-up to a multiple of `increment` (clamped back inside the bounds).
pub fn generate_stepfield(seed: u64, mean: f64, std: f64, increment: f64, n_cols: usize, n_rows: usize) -> Result<Stepfield> {
    if !(increment > 0.0) || !increment.is_finite() {
        return Err(Error::invalid("increment", format!("{increment} must be positive")));
    }
    if !(HEIGHT_MIN..=HEIGHT_MAX).contains(&mean) {
        return Err(Error::invalid("mean", format!("{mean} outside [0, 12]")));
    }
    if !(std >= 0.0) || !std.is_finite() {
        return Err(Error::invalid("std", format!("{std} must be non-negative")));
    }
    if n_cols == 0 || n_rows == 0 {
        return Err(Error::invalid("dims", format!("{n_cols}x{n_rows} has no blocks")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(mean, std).map_err(|e| Error::invalid("std", e.to_string()))?;
    let mut heights = Vec::with_capacity(n_cols * n_rows);
    for _ in 0..n_cols * n_rows {
        let mut h = mean;
        if std > 0.0 {
            let mut tries = 0;
            loop {
                h = normal.sample(&mut rng);
                if (HEIGHT_MIN..=HEIGHT_MAX).contains(&h) {
                    break;
                }
                tries += 1;
                if tries > MAX_REJECTIONS {
                    return Err(Error::invalid("std", "truncated normal has no mass in [0, 12]"));
                }
            }
        }
        heights.push(quantize(h, increment));
    }
    Ok(Stepfield {
        block_size: DEFAULT_BLOCK_SIZE,
        n_cols,
        n_rows,
        heights,
        provenance: Provenance {
            seed,
            mean,
            std,
            increment,
            lower: HEIGHT_MIN,
            upper: HEIGHT_MAX,
        },
    })
}

/// A single all-zero block.
pub fn flat_terrain() -> Stepfield {
    Stepfield {
        block_size: DEFAULT_BLOCK_SIZE,
        n_cols: 1,
        n_rows: 1,
        heights: vec![0.0],
        provenance: Provenance {
            seed: 0,
            mean: 0.0,
            std: 0.0,
            increment: 1.0,
            lower: HEIGHT_MIN,
            upper: HEIGHT_MAX,
        },
    }
}

/// Population standard deviation of block heights over the block size.
///
/// The flat field is treated as rough-free: a single all-zero block has
/// rugosity 0; any other single-block field is rejected.
pub fn rugosity(field: &Stepfield) -> Result<f64> {
    let n = field.heights.len();
    if n < 2 {
        if n == 1 && field.heights[0] == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::InsufficientSamples(format!("rugosity needs at least 2 blocks, got {n}")));
    }
    let mean = field.heights.iter().sum::<f64>() / n as f64;
    let var = field.heights.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n as f64;
    Ok(var.sqrt() / field.block_size)
}

impl Stepfield {
    /// Extent along `x`, the direction of travel.
    pub fn x_extent(&self) -> f64 {
        self.n_cols as f64 * self.block_size
    }

    /// Extent across the direction of travel.
    pub fn y_extent(&self) -> f64 {
        self.n_rows as f64 * self.block_size
    }

    pub fn block(&self, col: usize, row: usize) -> f64 {
        self.heights[row * self.n_cols + col]
    }

    /// Height of the block containing `(x, y)`; 0 outside the field.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        if !(x >= 0.0 && y >= 0.0) {
            return 0.0;
        }
        let col = (x / self.block_size).floor();
        let row = (y / self.block_size).floor();
        if col >= self.n_cols as f64 || row >= self.n_rows as f64 {
            return 0.0;
        }
        self.block(col as usize, row as usize)
    }

    pub fn rugosity(&self) -> Result<f64> {
        rugosity(self)
    }

    /// Text grid: `key value` header lines, a blank line, then one line of
    /// space-separated heights per row.
    pub fn to_text(&self) -> String {
        let p = &self.provenance;
        let mut s = String::new();
        let _ = writeln!(s, "block_size {:?}", self.block_size);
        let _ = writeln!(s, "cols {}", self.n_cols);
        let _ = writeln!(s, "rows {}", self.n_rows);
        let _ = writeln!(s, "seed {}", p.seed);
        let _ = writeln!(s, "mean {:?}", p.mean);
        let _ = writeln!(s, "std {:?}", p.std);
        let _ = writeln!(s, "increment {:?}", p.increment);
        let _ = writeln!(s, "lower {:?}", p.lower);
        let _ = writeln!(s, "upper {:?}", p.upper);
        s.push('\n');
        for row in self.heights.chunks(self.n_cols) {
            let line: Vec<String> = row.iter().map(|h| format!("{h:?}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Stepfield> {
        let ctx = "stepfield";
        let (header, body) = text
            .split_once("\n\n")
            .ok_or_else(|| Error::parse(ctx, "missing blank line after header"))?;
        let mut get = std::collections::HashMap::new();
        for line in header.lines() {
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| Error::parse(ctx, format!("bad header line {line:?}")))?;
            get.insert(k.trim(), v.trim());
        }
        fn field<T: std::str::FromStr>(get: &std::collections::HashMap<&str, &str>, key: &str) -> Result<T> {
            let v = get.get(key).ok_or_else(|| Error::parse("stepfield", format!("missing {key}")))?;
            v.parse().map_err(|_| Error::parse("stepfield", format!("bad {key}: {v:?}")))
        }
        let n_cols: usize = field(&get, "cols")?;
        let n_rows: usize = field(&get, "rows")?;
        let block_size: f64 = field(&get, "block_size")?;
        if n_cols == 0 || n_rows == 0 || !(block_size > 0.0) {
            return Err(Error::parse(ctx, "empty grid or non-positive block size"));
        }
        let provenance = Provenance {
            seed: field(&get, "seed")?,
            mean: field(&get, "mean")?,
            std: field(&get, "std")?,
            increment: field(&get, "increment")?,
            lower: field(&get, "lower")?,
            upper: field(&get, "upper")?,
        };
        let mut heights = Vec::with_capacity(n_cols * n_rows);
        let rows: Vec<&str> = body.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.len() != n_rows {
            return Err(Error::parse(ctx, format!("expected {n_rows} rows, found {}", rows.len())));
        }
        for (r, line) in rows.iter().enumerate() {
            let before = heights.len();
            for tok in line.split_whitespace() {
                heights.push(tok.parse::<f64>().map_err(|_| Error::parse(ctx, format!("row {r}: bad height {tok:?}")))?);
            }
            if heights.len() - before != n_cols {
                return Err(Error::parse(ctx, format!("row {r} has {} values, expected {n_cols}", heights.len() - before)));
            }
        }
        Ok(Stepfield {
            block_size,
            n_cols,
            n_rows,
            heights,
            provenance,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Stepfield> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Stepfield::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_std_is_constant() {
        let f = generate_stepfield(3, 6.3, 0.0, 1.0, 4, 5).unwrap();
        assert!(f.heights.iter().all(|&h| h == 6.0));
        assert_eq!(rugosity(&f).unwrap(), 0.0);
    }

    #[test]
    fn half_up_rounding_and_clamp() {
        assert_eq!(quantize(6.5, 1.0), 7.0);
        assert_eq!(quantize(6.49, 1.0), 6.0);
        assert_eq!(quantize(3.75, 2.5), 5.0);
        assert_eq!(quantize(11.9, 2.5), 10.0);
        assert_eq!(quantize(11.6, 1.0), 12.0);
        assert_eq!(quantize(0.2, 2.5), 0.0);
    }

    #[test]
    fn rugosity_closed_form() {
        let mut f = flat_terrain();
        assert_eq!(rugosity(&f).unwrap(), 0.0);
        f.n_cols = 2;
        f.n_rows = 2;
        f.heights = vec![0.0, 12.0, 12.0, 0.0];
        assert!((rugosity(&f).unwrap() - 0.6).abs() < 1e-15);
        f.n_cols = 1;
        f.n_rows = 1;
        f.heights = vec![4.0];
        assert!(rugosity(&f).is_err());
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(generate_stepfield(0, 6.0, -1.0, 1.0, 2, 2).is_err());
        assert!(generate_stepfield(0, 6.0, 1.0, 0.0, 2, 2).is_err());
        assert!(generate_stepfield(0, 13.0, 1.0, 1.0, 2, 2).is_err());
        assert!(generate_stepfield(0, 6.0, 1.0, 1.0, 0, 2).is_err());
    }

    #[test]
    fn height_lookup_half_open() {
        let mut f = generate_stepfield(1, 6.0, 3.0, 1.0, 3, 2).unwrap();
        f.heights = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(f.height_at(0.0, 0.0), 1.0);
        assert_eq!(f.height_at(10.0, 0.0), 2.0);
        assert_eq!(f.height_at(9.999, 9.999), 1.0);
        assert_eq!(f.height_at(10.0, 10.0), 5.0);
        assert_eq!(f.height_at(29.9, 19.9), 6.0);
        assert_eq!(f.height_at(30.0, 5.0), 0.0);
        assert_eq!(f.height_at(-0.1, 5.0), 0.0);
        assert_eq!(f.height_at(5.0, 20.0), 0.0);
        assert_eq!(flat_terrain().height_at(3.0, -7.0), 0.0);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let f = generate_stepfield(42, 6.25, 4.0, 2.5, 5, 30).unwrap();
        let back = Stepfield::from_text(&f.to_text()).unwrap();
        assert_eq!(f, back);
        let g = generate_stepfield(7, 6.0, 2.0, 0.1, 3, 3).unwrap();
        assert_eq!(Stepfield::from_text(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn malformed_text_rejected() {
        let f = generate_stepfield(42, 6.0, 2.0, 1.0, 2, 2).unwrap();
        let t = f.to_text();
        assert!(Stepfield::from_text(&t.replace("cols 2", "cols 3")).is_err());
        assert!(Stepfield::from_text(&t.replace("\n\n", "\n")).is_err());
        assert!(Stepfield::from_text(&format!("{t}1 2\n")).is_err());
        assert!(Stepfield::from_text("").is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_stepfield(9, 6.0, 2.0, 1.0, 8, 16).unwrap();
        let b = generate_stepfield(9, 6.0, 2.0, 1.0, 8, 16).unwrap();
        let c = generate_stepfield(10, 6.0, 2.0, 1.0, 8, 16).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.heights, c.heights);
    }
}
