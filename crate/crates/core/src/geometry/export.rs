//! Tessellated surface output: binary STL and a structured grid CSV.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::blade::{BladeGeometry, Point3};

const STL_HEADER: &[u8] = b"bladeopt structured blade surface";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceFormat {
    Stl,
    GridCsv,
}

/// Encoded output plus the number of degenerate triangles dropped.
#[derive(Debug, Clone)]
pub struct Tessellation {
    pub bytes: Vec<u8>,
    pub triangles: usize,
    pub skipped: usize,
}

fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Two triangles per grid quad, wound so that `root->tip x outline order`
/// gives the facet normal.
pub fn stl_bytes(blades: &[BladeGeometry]) -> Tessellation {
    let mut facets: Vec<(Point3, [Point3; 3])> = Vec::new();
    let mut skipped = 0;
    for blade in blades {
        for i in 0..blade.grid.len().saturating_sub(1) {
            let (lower, upper) = (&blade.grid[i], &blade.grid[i + 1]);
            for j in 0..lower.len().min(upper.len()).saturating_sub(1) {
                let (a, b, c, d) = (lower[j], upper[j], upper[j + 1], lower[j + 1]);
                for tri in [[a, b, c], [a, c, d]] {
                    let n = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
                    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                    if !(len > 0.0) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                        skipped += 1;
                        continue;
                    }
                    facets.push(([n[0] / len, n[1] / len, n[2] / len], tri));
                }
            }
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} degenerate triangles");
    }
    let mut bytes = Vec::with_capacity(84 + 50 * facets.len());
    let mut header = [0u8; 80];
    header[..STL_HEADER.len()].copy_from_slice(STL_HEADER);
    bytes.extend_from_slice(&header);
    bytes.extend_from_slice(&(facets.len() as u32).to_le_bytes());
    for (normal, tri) in &facets {
        for v in normal.iter().chain(tri.iter().flatten()) {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        bytes.extend_from_slice(&0u16.to_le_bytes());
    }
    Tessellation { bytes, triangles: facets.len(), skipped }
}

/// `blade_id,i,j,x,y,z`, one row per grid point, shortest round-trip decimal
/// formatting.
pub fn grid_csv(blades: &[BladeGeometry]) -> String {
    let mut s = String::from("blade_id,i,j,x,y,z\n");
    for (b, blade) in blades.iter().enumerate() {
        for (i, row) in blade.grid.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                let _ = writeln!(s, "{b},{i},{j},{:?},{:?},{:?}", p[0], p[1], p[2]);
            }
        }
    }
    s
}

/// Reads a grid CSV back; section radii are recovered from the first point of
/// each row.
pub fn parse_grid_csv(text: &str) -> Result<Vec<BladeGeometry>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "blade_id,i,j,x,y,z" => {}
        _ => return Err(Error::Schema("grid CSV header must be `blade_id,i,j,x,y,z`".into())),
    }
    let mut blades: Vec<BladeGeometry> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::parse(lineno + 1, format!("expected 6 fields, found {}", f.len())));
        }
        let idx = |s: &str| s.trim().parse::<usize>().map_err(|e| Error::parse(lineno + 1, e.to_string()));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::parse(lineno + 1, e.to_string()));
        let (b, i, j) = (idx(f[0])?, idx(f[1])?, idx(f[2])?);
        let p = [num(f[3])?, num(f[4])?, num(f[5])?];
        if b == blades.len() {
            blades.push(BladeGeometry { grid: Vec::new(), section_radii: Vec::new() });
        }
        let blade = blades.get_mut(b).ok_or_else(|| Error::parse(lineno + 1, "blade ids out of order"))?;
        if i == blade.grid.len() {
            blade.grid.push(Vec::new());
            blade.section_radii.push((p[1] * p[1] + p[2] * p[2]).sqrt());
        }
        let row = blade.grid.get_mut(i).ok_or_else(|| Error::parse(lineno + 1, "row indices out of order"))?;
        if j != row.len() {
            return Err(Error::parse(lineno + 1, "column indices out of order"));
        }
        row.push(p);
    }
    Ok(blades)
}

pub fn export_surface(blades: &[BladeGeometry], format: SurfaceFormat, path: &Path) -> Result<usize> {
    let (bytes, skipped) = match format {
        SurfaceFormat::Stl => {
            let t = stl_bytes(blades);
            (t.bytes, t.skipped)
        }
        SurfaceFormat::GridCsv => (grid_csv(blades).into_bytes(), 0),
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(skipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> BladeGeometry {
        BladeGeometry {
            grid: vec![vec![[0.0, 1.0, 0.0], [0.0, 1.0, 0.1]], vec![[0.0, 2.0, 0.0], [0.0, 2.0, 0.1]]],
            section_radii: vec![1.0, 2.0],
        }
    }

    #[test]
    fn two_by_two_grid_gives_two_triangles() {
        let t = stl_bytes(&[quad()]);
        assert_eq!(t.triangles, 2);
        assert_eq!(t.bytes.len(), 84 + 2 * 50);
        assert_eq!(u32::from_le_bytes(t.bytes[80..84].try_into().unwrap()), 2);
        // radial (+y) x chordwise (+z) = +x
        let nx = f32::from_le_bytes(t.bytes[84..88].try_into().unwrap());
        assert_eq!(nx, 1.0);
    }

    #[test]
    fn degenerate_quads_are_skipped() {
        let mut g = quad();
        g.grid[1][1] = g.grid[1][0];
        let t = stl_bytes(&[g]);
        assert_eq!(t.triangles, 1);
        assert_eq!(t.skipped, 1);
    }

    #[test]
    fn grid_csv_round_trip() {
        let g = BladeGeometry {
            grid: vec![vec![[0.1, 0.2 / 3.0, 1e-17]; 3]; 2],
            section_radii: vec![(0.2f64 / 3.0).hypot(1e-17); 2],
        };
        let back = parse_grid_csv(&grid_csv(&[g.clone(), g.clone()])).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].grid, g.grid);
        assert!(parse_grid_csv("x,y\n").is_err());
        assert!(matches!(parse_grid_csv("blade_id,i,j,x,y,z\n0,0,0,1,2\n"), Err(Error::Parse { line: Some(2), .. })));
    }
}
