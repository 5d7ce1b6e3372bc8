//! ASCII PLY and XYZ readers and writers.
//!
//! Only the `vertex` element of an ASCII PLY is read; `x y z` are required
//! and `nx ny nz` are picked up when all three are declared. Other vertex
//! properties are skipped. XYZ files hold exactly three columns per line,
//! `#` lines are comments.
//!
//! Writers emit shortest round-trip decimal text, so loading a saved cloud
//! reproduces every coordinate bit-for-bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::cloud::PointCloud;
use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    PlyAscii,
    Xyz,
    Auto,
}

impl CloudFormat {
    /// Resolves `Auto` from the extension, then from a leading `ply` line.
    fn resolve(self, path: &Path, text: &str) -> Result<CloudFormat> {
        if self != CloudFormat::Auto {
            return Ok(self);
        }
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("ply") => Ok(CloudFormat::PlyAscii),
            Some("xyz") | Some("txt") | Some("pts") => Ok(CloudFormat::Xyz),
            _ if text.lines().next().map(str::trim) == Some("ply") => Ok(CloudFormat::PlyAscii),
            _ if !text.trim().is_empty() => Ok(CloudFormat::Xyz),
            _ => Err(Error::UnknownFormat(path.to_path_buf())),
        }
    }

    /// Output format for `path`, defaulting to PLY.
    pub fn for_output(self, path: &Path) -> CloudFormat {
        match self {
            CloudFormat::Auto => match path.extension().and_then(|e| e.to_str()) {
                Some(e) if e.eq_ignore_ascii_case("xyz") || e.eq_ignore_ascii_case("txt") => {
                    CloudFormat::Xyz
                }
                _ => CloudFormat::PlyAscii,
            },
            f => f,
        }
    }
}

pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parsed = match format.resolve(path, &text)? {
        CloudFormat::PlyAscii => parse_ply(&text),
        _ => parse_xyz(&text),
    };
    let (positions, normals) = parsed.map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(PointCloud::with_normals(positions, normals)?.with_id(id))
}

/// Writes `cloud`. Each entry of `comments` becomes a header comment line.
pub fn save_cloud(
    cloud: &PointCloud,
    path: impl AsRef<Path>,
    format: CloudFormat,
    comments: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let text = match format.for_output(path) {
        CloudFormat::Xyz => to_xyz(cloud, comments)?,
        _ => to_ply(cloud, comments),
    };
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_ply(cloud: &PointCloud, comments: &[String]) -> String {
    let mut out = String::with_capacity(cloud.len() * 64 + 256);
    out.push_str("ply\nformat ascii 1.0\n");
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "comment {line}");
        }
    }
    let _ = writeln!(out, "element vertex {}", cloud.len());
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if cloud.normals().is_some() {
        out.push_str("property float nx\nproperty float ny\nproperty float nz\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.positions().iter().enumerate() {
        let _ = write!(out, "{} {} {}", p.x, p.y, p.z);
        if let Some(n) = cloud.normals() {
            let _ = write!(out, " {} {} {}", n[i].x, n[i].y, n[i].z);
        }
        out.push('\n');
    }
    out
}

pub fn to_xyz(cloud: &PointCloud, comments: &[String]) -> Result<String> {
    if cloud.normals().is_some() {
        return Err(Error::XyzWithNormals);
    }
    let mut out = String::with_capacity(cloud.len() * 48);
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    for p in cloud.positions() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    Ok(out)
}

type Parsed = (Vec<Point3<f64>>, Option<Vec<Vector3<f64>>>);

fn number(token: &str, line: usize) -> Result<f64, ParseError> {
    let v: f64 = token.parse().map_err(|_| ParseError::NonNumeric {
        line,
        token: token.to_string(),
    })?;
    if !v.is_finite() {
        return Err(ParseError::NonFinite {
            line,
            token: token.to_string(),
        });
    }
    Ok(v)
}

pub fn parse_xyz(text: &str) -> Result<Parsed, ParseError> {
    let mut positions = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(ParseError::ColumnCount {
                line,
                expected: 3,
                found: tokens.len(),
            });
        }
        positions.push(Point3::new(
            number(tokens[0], line)?,
            number(tokens[1], line)?,
            number(tokens[2], line)?,
        ));
    }
    if positions.is_empty() {
        return Err(ParseError::NoPoints {
            line: last_line.max(1),
        });
    }
    Ok((positions, None))
}

struct PlyLayout {
    vertex_count: usize,
    columns: usize,
    xyz: [usize; 3],
    normal: Option<[usize; 3]>,
}

fn parse_ply_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<PlyLayout, ParseError> {
    let malformed = |line: usize, reason: &str| ParseError::MalformedHeader {
        line,
        reason: reason.to_string(),
    };
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        Some((n, _)) => return Err(malformed(n, "first line must be `ply`")),
        None => return Err(malformed(1, "empty file")),
    }

    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut names: Vec<String> = Vec::new();
    let mut saw_format = false;
    let mut last = 1;
    for (n, raw) in lines.by_ref() {
        last = n;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            ["comment", ..] | ["obj_info", ..] => continue,
            ["format", "ascii", _] => saw_format = true,
            ["format", fmt, _] => {
                return Err(ParseError::BinaryPly {
                    line: n,
                    format: fmt.to_string(),
                })
            }
            ["element", "vertex", count] => {
                if vertex_count.is_some() {
                    return Err(malformed(n, "duplicate vertex element"));
                }
                vertex_count = Some(
                    count
                        .parse::<usize>()
                        .map_err(|_| malformed(n, "vertex count is not an integer"))?,
                );
                in_vertex = true;
            }
            ["element", _, _] => {
                if vertex_count.is_none() {
                    return Err(malformed(n, "vertex element must come first"));
                }
                in_vertex = false;
            }
            ["property", "list", ..] if in_vertex => {
                return Err(malformed(
                    n,
                    "list properties on vertices are not supported",
                ))
            }
            ["property", _ty, name] => {
                if in_vertex {
                    names.push(name.to_string());
                }
            }
            ["property", "list", _, _, _] => {}
            ["end_header"] => {
                if !saw_format {
                    return Err(malformed(n, "missing format line"));
                }
                let vertex_count =
                    vertex_count.ok_or_else(|| malformed(n, "missing vertex element"))?;
                let find = |name: &str| names.iter().position(|p| p == name);
                let xyz = match (find("x"), find("y"), find("z")) {
                    (Some(x), Some(y), Some(z)) => [x, y, z],
                    _ => return Err(malformed(n, "vertex element lacks x, y, z")),
                };
                let normal = match (find("nx"), find("ny"), find("nz")) {
                    (Some(a), Some(b), Some(c)) => Some([a, b, c]),
                    (None, None, None) => None,
                    _ => return Err(malformed(n, "partial normal properties")),
                };
                return Ok(PlyLayout {
                    vertex_count,
                    columns: names.len(),
                    xyz,
                    normal,
                });
            }
            _ => return Err(malformed(n, &format!("unrecognized line {:?}", raw.trim()))),
        }
    }
    Err(malformed(last, "missing end_header"))
}

pub fn parse_ply(text: &str) -> Result<Parsed, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let layout = parse_ply_header(&mut lines)?;
    let mut positions = Vec::with_capacity(layout.vertex_count);
    let mut normals = layout
        .normal
        .map(|_| Vec::with_capacity(layout.vertex_count));
    let mut last_line = 0;
    while positions.len() < layout.vertex_count {
        let Some((line, raw)) = lines.next() else {
            return Err(ParseError::UnexpectedEof {
                line: last_line + 1,
                declared: layout.vertex_count,
                found: positions.len(),
            });
        };
        last_line = line;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != layout.columns {
            return Err(ParseError::ColumnCount {
                line,
                expected: layout.columns,
                found: tokens.len(),
            });
        }
        let values = tokens
            .iter()
            .map(|t| number(t, line))
            .collect::<Result<Vec<f64>, _>>()?;
        let [x, y, z] = layout.xyz;
        positions.push(Point3::new(values[x], values[y], values[z]));
        if let (Some(out), Some([a, b, c])) = (normals.as_mut(), layout.normal) {
            let n = Vector3::new(values[a], values[b], values[c]);
            let len = n.norm();
            if len == 0.0 {
                return Err(ParseError::ZeroNormal { line });
            }
            // files commonly store single-precision normals
            out.push(n / len);
        }
    }
    if positions.is_empty() {
        return Err(ParseError::NoPoints {
            line: last_line.max(1),
        });
    }
    Ok((positions, normals))
}
