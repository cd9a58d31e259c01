//! Gridded connection fields, height functions and stride integrals.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::solver::{local_connection, LocalConnection};
use crate::error::{Error, Result};
use crate::morphology::{posture_at_shape, GaitProgram, RobotMorphology, ShapePoint};

/// Uniform square grid over shape space, `n × n` nodes on `[−bound, bound]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub bound: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { bound: FRAC_PI_2, n: 61 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || !(self.bound > 0.0 && self.bound.is_finite()) {
            return Err(Error::invalid("grid", format!("{} nodes on ±{}", self.n, self.bound)));
        }
        if self.bound > crate::morphology::CHART_BOUND {
            return Err(Error::invalid("grid", format!("bound {} beyond the chart", self.bound)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.bound / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.bound + i as f64 * self.spacing()
    }

    /// Node at column `i1` (along `w1`) and row `i2` (along `w2`).
    pub fn node(&self, i1: usize, i2: usize) -> ShapePoint {
        ShapePoint::new(self.coord(i1), self.coord(i2))
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Which body-velocity component a field describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
    Theta,
}

impl Component {
    pub fn row(self) -> usize {
        match self {
            Component::X => 0,
            Component::Y => 1,
            Component::Theta => 2,
        }
    }
}

impl std::str::FromStr for Component {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Component::X),
            "y" => Ok(Component::Y),
            "theta" => Ok(Component::Theta),
            _ => Err(Error::invalid("component", s)),
        }
    }
}

/// Local connection sampled on a grid; nodes without stance feet hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionField {
    pub grid: GridSpec,
    pub connection: Vec<Option<LocalConnection>>,
    /// Intended stance pattern of each node, one bit per foot.
    pub stance: Vec<u128>,
}

/// Sample the local connection at every grid node (row-major, `w2` rows).
pub fn connection_field(morph: &RobotMorphology, gait: &GaitProgram, grid: GridSpec) -> Result<ConnectionField> {
    grid.validate()?;
    if morph.n_feet() > 128 {
        return Err(Error::invalid("morphology", "more than 64 leg pairs"));
    }
    let mut connection = Vec::with_capacity(grid.len());
    let mut stance = Vec::with_capacity(grid.len());
    for i2 in 0..grid.n {
        for i1 in 0..grid.n {
            let w = grid.node(i1, i2);
            let p = posture_at_shape(morph, gait, w);
            let bits = p
                .intended_stance
                .iter()
                .enumerate()
                .fold(0u128, |acc, (k, &s)| if s { acc | 1 << k } else { acc });
            stance.push(bits);
            connection.push(if bits == 0 {
                None
            } else {
                Some(local_connection(morph, gait, w)?)
            });
        }
    }
    Ok(ConnectionField {
        grid,
        connection,
        stance,
    })
}

impl ConnectionField {
    fn row_at(&self, idx: usize, component: Component) -> [f64; 2] {
        self.connection[idx].map_or([0.0, 0.0], |a| a.rows[component.row()])
    }

    /// Curl of one connection row, oriented with the gait path.
    ///
    /// The circular gait path runs clockwise in the `(w1, w2)` plane, so the
    /// height function is `∂A₁/∂w2 − ∂A₂/∂w1`, making the enclosed integral
    /// equal to the displacement per cycle. Central differences inside,
    /// one-sided at the edges. Nodes next to a change of stance pattern, or
    /// without stance feet, are masked.
    pub fn height(&self, component: Component) -> HeightField {
        let n = self.grid.n;
        let h = self.grid.spacing();
        let idx = |i1: usize, i2: usize| i2 * n + i1;
        let diff = |lo: usize, hi: usize, span: usize, f: &dyn Fn(usize) -> f64| (f(hi) - f(lo)) / (span as f64 * h);
        let mut values = Vec::with_capacity(self.grid.len());
        let mut mask = Vec::with_capacity(self.grid.len());
        for i2 in 0..n {
            for i1 in 0..n {
                let (l1, h1) = (i1.saturating_sub(1), (i1 + 1).min(n - 1));
                let (l2, h2) = (i2.saturating_sub(1), (i2 + 1).min(n - 1));
                let d_a1_d_w2 = diff(idx(i1, l2), idx(i1, h2), h2 - l2, &|k| self.row_at(k, component)[0]);
                let d_a2_d_w1 = diff(idx(l1, i2), idx(h1, i2), h1 - l1, &|k| self.row_at(k, component)[1]);
                values.push(d_a1_d_w2 - d_a2_d_w1);
                let here = self.stance[idx(i1, i2)];
                let switch = [idx(l1, i2), idx(h1, i2), idx(i1, l2), idx(i1, h2)]
                    .iter()
                    .any(|&k| self.stance[k] != here);
                mask.push(here == 0 || switch);
            }
        }
        HeightField {
            component,
            grid: self.grid,
            values,
            mask,
        }
    }
}

/// Height function of one component on a fresh grid.
pub fn height_function(
    morph: &RobotMorphology,
    gait: &GaitProgram,
    component: Component,
    grid: GridSpec,
) -> Result<HeightField> {
    Ok(connection_field(morph, gait, grid)?.height(component))
}

/// Gridded height function with its stance-switch mask.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub component: Component,
    pub grid: GridSpec,
    /// Row-major values, rows along `w2`.
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    component: Component,
    bound: f64,
    n: usize,
    spacing: f64,
}

const COLUMNS: &str = "w1 w2 value mask";

impl HeightField {
    pub fn value_at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i2 * self.grid.n + i1]
    }

    /// Columnar text: a JSON header line, a column line, then one node per line.
    pub fn to_columnar(&self) -> String {
        let header = Header {
            component: self.component,
            bound: self.grid.bound,
            n: self.grid.n,
            spacing: self.grid.spacing(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        out.push_str(COLUMNS);
        out.push('\n');
        for i2 in 0..self.grid.n {
            for i1 in 0..self.grid.n {
                let k = i2 * self.grid.n + i1;
                let w = self.grid.node(i1, i2);
                let _ = writeln!(out, "{:?} {:?} {:?} {}", w.w1, w.w2, self.values[k], u8::from(self.mask[k]));
            }
        }
        out
    }

    pub fn from_columnar(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Header = serde_json::from_str(lines.next().unwrap_or(""))
            .map_err(|e| Error::parse("height field header", e.to_string()))?;
        let grid = GridSpec {
            bound: header.bound,
            n: header.n,
        };
        grid.validate()?;
        if lines.next() != Some(COLUMNS) {
            return Err(Error::parse("height field", format!("expected column line `{COLUMNS}`")));
        }
        let mut values = Vec::with_capacity(grid.len());
        let mut mask = Vec::with_capacity(grid.len());
        for (row, line) in lines.enumerate() {
            let bad = |d: String| Error::parse(format!("height field row {row}"), d);
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 4 {
                return Err(bad(format!("{} columns", cols.len())));
            }
            values.push(cols[2].parse::<f64>().map_err(|e| bad(e.to_string()))?);
            mask.push(match cols[3] {
                "0" => false,
                "1" => true,
                m => return Err(bad(format!("mask `{m}`"))),
            });
        }
        if values.len() != grid.len() {
            return Err(Error::parse(
                "height field",
                format!("{} rows for a {}x{} grid", values.len(), grid.n, grid.n),
            ));
        }
        Ok(HeightField {
            component: header.component,
            grid,
            values,
            mask,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_columnar()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_columnar(&text)
    }
}

/// Displacement per cycle from integrating the connection along a closed path.
///
/// Trapezoidal rule over consecutive samples; returns `(Δx, Δy, Δθ)`.
pub fn stride_line_integral(morph: &RobotMorphology, gait: &GaitProgram, path: &[ShapePoint]) -> Result<[f64; 3]> {
    let (first, last) = match (path.first(), path.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::OpenPath { gap: f64::INFINITY }),
    };
    let gap = (first.w1 - last.w1).hypot(first.w2 - last.w2);
    let scale = path.iter().map(|p| p.norm()).fold(1.0, f64::max);
    if gap > 1e-9 * scale {
        return Err(Error::OpenPath { gap });
    }
    let conn = path
        .iter()
        .map(|&w| local_connection(morph, gait, w))
        .collect::<Result<Vec<_>>>()?;
    let mut total = [0.0; 3];
    for k in 0..path.len() - 1 {
        let dw = [path[k + 1].w1 - path[k].w1, path[k + 1].w2 - path[k].w2];
        for (c, t) in total.iter_mut().enumerate() {
            let a = conn[k].rows[c];
            let b = conn[k + 1].rows[c];
            *t += 0.5 * ((a[0] + b[0]) * dw[0] + (a[1] + b[1]) * dw[1]);
        }
    }
    Ok(total)
}

/// Sum of `value · cell area` over nodes inside the circle of radius `a_b`.
///
/// Every node counts, masked or not: summed central differences telescope
/// to the boundary circulation, so jumps inside the circle cancel exactly.
pub fn stride_surface_integral(field: &HeightField, a_b: f64) -> Result<f64> {
    let bound = field.grid.bound;
    if !(a_b >= 0.0) || a_b > bound * (1.0 + 1e-12) {
        return Err(Error::OutsideGrid { radius: a_b, bound });
    }
    let h = field.grid.spacing();
    let reach = a_b + 1e-9 * bound;
    let mut sum = 0.0;
    for i2 in 0..field.grid.n {
        for i1 in 0..field.grid.n {
            if field.grid.node(i1, i2).norm() <= reach {
                sum += field.value_at(i1, i2);
            }
        }
    }
    Ok(sum * h * h)
}

/// Radius (0.01 rad steps, plus the grid bound) enclosing the largest
/// integral; ties go to the smallest radius.
pub fn optimal_amplitude(field: &HeightField) -> f64 {
    let bound = field.grid.bound;
    let mut radii: Vec<f64> = (0..).map(|k| k as f64 * 0.01).take_while(|&r| r < bound).collect();
    radii.push(bound);
    let mut best = (0.0, f64::NEG_INFINITY);
    for r in radii {
        let s = stride_surface_integral(field, r).expect("radius within grid");
        if s > best.1 {
            best = (r, s);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(grid: GridSpec, f: impl Fn(ShapePoint) -> f64) -> HeightField {
        let mut values = Vec::new();
        for i2 in 0..grid.n {
            for i1 in 0..grid.n {
                values.push(f(grid.node(i1, i2)));
            }
        }
        HeightField {
            component: Component::X,
            grid,
            mask: vec![false; values.len()],
            values,
        }
    }

    #[test]
    fn grid_geometry() {
        let g = GridSpec::default();
        assert_eq!(g.coord(0), -FRAC_PI_2);
        assert!(g.coord(30).abs() < 1e-15);
        assert!((g.coord(60) - FRAC_PI_2).abs() < 1e-12);
        assert!(GridSpec { bound: 1.0, n: 2 }.validate().is_err());
    }

    #[test]
    fn surface_integral_of_constant_field() {
        let f = synthetic(GridSpec { bound: 1.0, n: 201 }, |_| 1.0);
        let s = stride_surface_integral(&f, 0.8).unwrap();
        let exact = std::f64::consts::PI * 0.64;
        assert!((s - exact).abs() / exact < 0.01, "{s} vs {exact}");
        assert_eq!(stride_surface_integral(&f, 0.0).unwrap(), 0.01 * 0.01);
        assert!(matches!(stride_surface_integral(&f, 1.1), Err(Error::OutsideGrid { .. })));
    }

    #[test]
    fn positive_field_is_optimal_at_bound() {
        let f = synthetic(GridSpec::default(), |w| 1.0 + w.w1 * w.w1);
        assert_eq!(optimal_amplitude(&f), FRAC_PI_2);
    }

    #[test]
    fn optimal_radius_finds_sign_change() {
        // positive disc of radius 0.7 inside a negative annulus
        let f = synthetic(GridSpec::default(), |w| if w.norm() < 0.7 { 1.0 } else { -1.0 });
        let a = optimal_amplitude(&f);
        assert!((a - 0.7).abs() <= 0.03, "{a}");
    }

    #[test]
    fn columnar_round_trip_is_bit_exact() {
        let mut f = synthetic(GridSpec { bound: 1.2, n: 7 }, |w| (w.w1 * 3.1).sin() / 7.0 + w.w2 * 1e-17);
        f.mask[3] = true;
        f.component = Component::Theta;
        let text = f.to_columnar();
        let back = HeightField::from_columnar(&text).unwrap();
        assert_eq!(back, f);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.to_columnar(), text);
    }

    #[test]
    fn malformed_columnar_is_rejected() {
        let f = synthetic(GridSpec { bound: 1.0, n: 3 }, |_| 0.5);
        let text = f.to_columnar();
        let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(HeightField::from_columnar(&truncated).is_err());
        assert!(HeightField::from_columnar(&text.replace(" 0\n", " 2\n")).is_err());
        assert!(HeightField::from_columnar("{}\n").is_err());
    }

    #[test]
    fn open_path_is_rejected() {
        let m = RobotMorphology::default();
        let g = GaitProgram::for_morphology(&m);
        let path = [ShapePoint::new(0.0, 0.5), ShapePoint::new(0.5, 0.0)];
        assert!(matches!(stride_line_integral(&m, &g, &path), Err(Error::OpenPath { .. })));
        assert!(stride_line_integral(&m, &g, &[]).is_err());
    }

    #[test]
    fn point_path_has_no_displacement() {
        let m = RobotMorphology::default();
        let g = GaitProgram::for_morphology(&m);
        let path = vec![ShapePoint::ORIGIN; 16];
        assert_eq!(stride_line_integral(&m, &g, &path).unwrap(), [0.0; 3]);
    }
}
