//! Plain-text node, tet and weight files.
//!
//! All three formats are whitespace-separated with `#` comments. Weights are
//! written with 17 significant digits, enough to reproduce every `f64`
//! exactly on reload.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::assembly::{GlobalWeights, WeightMeta};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mesh::{NodeSet, Tessellation};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let body = l.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((i + 1, body))
    })
}

fn fields<'a, const K: usize>(path: &Path, line: usize, body: &'a str) -> Result<[&'a str; K]> {
    let parts: Vec<&str> = body.split_whitespace().collect();
    parts
        .try_into()
        .map_err(|p: Vec<&str>| parse_err(path, line, format!("expected {K} fields, found {}", p.len())))
}

pub fn parse_nodes(text: &str, path: &Path) -> Result<NodeSet> {
    let mut points = Vec::new();
    let mut flags = Vec::new();
    for (line, body) in data_lines(text) {
        let [x, y, z, flag] = fields::<4>(path, line, body)?;
        let coord = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(path, line, format!("bad coordinate '{s}'")))
        };
        points.push(Vec3::new(coord(x)?, coord(y)?, coord(z)?));
        flags.push(match flag {
            "0" => false,
            "1" => true,
            _ => {
                return Err(parse_err(
                    path,
                    line,
                    format!("surface flag must be 0 or 1, got '{flag}'"),
                ))
            }
        });
    }
    NodeSet::new(points, flags)
}

pub fn format_nodes(nodes: &NodeSet) -> String {
    let mut out = format!("# x y z on_surface\n# count={}\n", nodes.len());
    for (p, &s) in nodes.points.iter().zip(&nodes.on_surface) {
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e} {}", p.x, p.y, p.z, s as u8);
    }
    out
}

pub fn load_nodes(path: &Path) -> Result<NodeSet> {
    parse_nodes(&read(path)?, path)
}

pub fn save_nodes(path: &Path, nodes: &NodeSet) -> Result<()> {
    write(path, &format_nodes(nodes))
}

/// Tets referencing `nodes`; out-of-range indices are reported at their line.
pub fn parse_tets(text: &str, path: &Path, nodes: &NodeSet) -> Result<Tessellation> {
    let mut tets = Vec::new();
    for (line, body) in data_lines(text) {
        let raw = fields::<4>(path, line, body)?;
        let mut t = [0usize; 4];
        for (slot, s) in t.iter_mut().zip(raw) {
            *slot = s
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad node index '{s}'")))?;
            if *slot >= nodes.len() {
                return Err(parse_err(
                    path,
                    line,
                    format!("node index {slot} out of range (there are {} nodes)", nodes.len()),
                ));
            }
        }
        tets.push(t);
    }
    Tessellation::new(nodes, tets)
}

pub fn format_tets(tess: &Tessellation) -> String {
    let mut out = format!("# i0 i1 i2 i3 (0-based)\n# count={}\n", tess.len());
    for t in &tess.tets {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    out
}

pub fn load_tets(path: &Path, nodes: &NodeSet) -> Result<Tessellation> {
    parse_tets(&read(path)?, path, nodes)
}

pub fn save_tets(path: &Path, tess: &Tessellation) -> Result<()> {
    write(path, &format_tets(tess))
}

pub fn format_weights(w: &GlobalWeights) -> String {
    let m = &w.meta;
    let mut out = String::new();
    let _ = writeln!(out, "# m={}", m.m);
    let _ = writeln!(out, "# n={}", m.n);
    let _ = writeln!(out, "# p={}", m.p);
    let _ = writeln!(out, "# q={}", m.q);
    let _ = writeln!(out, "# mode={}", m.mode);
    if let Some(eta) = m.eta {
        let _ = writeln!(out, "# eta={eta}");
    }
    let _ = writeln!(out, "# mesh_hash={}", m.mesh_hash);
    let _ = writeln!(out, "# count={}", w.weights.len());
    for (i, v) in w.weights.iter().enumerate() {
        let _ = writeln!(out, "{i} {v:.16e}");
    }
    out
}

pub fn parse_weights(text: &str, path: &Path) -> Result<GlobalWeights> {
    let mut header = std::collections::HashMap::new();
    for (i, l) in text.lines().enumerate() {
        if let Some(rest) = l.trim().strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                header.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
            }
        }
    }
    let get = |k: &str| {
        header
            .get(k)
            .ok_or_else(|| parse_err(path, 1, format!("missing header line '# {k}=...'")))
    };
    fn num<T: std::str::FromStr>(path: &Path, (line, v): &(usize, String)) -> Result<T> {
        v.parse()
            .map_err(|_| parse_err(path, *line, format!("bad header value '{v}'")))
    }
    let (mode_line, mode) = get("mode")?;
    let meta = WeightMeta {
        m: num(path, get("m")?)?,
        n: num(path, get("n")?)?,
        p: num(path, get("p")?)?,
        q: num(path, get("q")?)?,
        mode: mode
            .parse()
            .map_err(|_| parse_err(path, *mode_line, format!("bad mode '{mode}'")))?,
        eta: header.get("eta").map(|e| num(path, e)).transpose()?,
        mesh_hash: get("mesh_hash")?.1.clone(),
    };
    let mut weights = Vec::new();
    for (line, body) in data_lines(text) {
        let [i, v] = fields::<2>(path, line, body)?;
        let idx: usize = i
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad index '{i}'")))?;
        if idx != weights.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected index {}, found {idx}", weights.len()),
            ));
        }
        weights.push(
            v.parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .ok_or_else(|| parse_err(path, line, format!("bad weight '{v}'")))?,
        );
    }
    if let Some(c) = header.get("count") {
        let count: usize = num(path, c)?;
        if count != weights.len() {
            return Err(parse_err(
                path,
                c.0,
                format!("header says {count} weights, file has {}", weights.len()),
            ));
        }
    }
    Ok(GlobalWeights { weights, meta })
}

pub fn load_weights(path: &Path) -> Result<GlobalWeights> {
    parse_weights(&read(path)?, path)
}

pub fn save_weights(path: &Path, w: &GlobalWeights) -> Result<()> {
    write(path, &format_weights(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sliver::SliverMode;

    fn p() -> &'static Path {
        Path::new("test.txt")
    }

    fn one_tet() -> NodeSet {
        parse_nodes("# unit tet\n0 0 0 1\n1 0 0 1\n0 1 0 1\n0 0 1 0\n", p()).unwrap()
    }

    #[test]
    fn nodes_and_tets_round_trip() {
        let nodes = one_tet();
        assert_eq!(nodes.on_surface, [true, true, true, false]);
        assert_eq!(parse_nodes(&format_nodes(&nodes), p()).unwrap(), nodes);
        let tess = parse_tets("0 1 2 3\n", p(), &nodes).unwrap();
        assert_eq!(parse_tets(&format_tets(&tess), p(), &nodes).unwrap(), tess);
    }

    #[test]
    fn off_by_one_index_reports_its_line() {
        let nodes = one_tet();
        let err = parse_tets("# one-based by mistake\n1 2 3 4\n", p(), &nodes).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(err.is_input_error());
    }

    #[test]
    fn malformed_node_lines() {
        assert!(matches!(
            parse_nodes("0 0 0 1\n0 0 x 1\n", p()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_nodes("0 0 0\n", p()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_nodes("0 0 0 2\n", p()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse_nodes("0 0 0 1\n0 0 0 0\n", p()), Err(Error::Input(_))));
    }

    #[test]
    fn weights_round_trip_bit_exactly() {
        let w = GlobalWeights {
            weights: vec![0.1, -1.0 / 3.0, 5e-324, 1.7976931348623157e308, std::f64::consts::PI],
            meta: WeightMeta {
                m: 3,
                n: 40,
                p: 1,
                q: 21,
                mode: SliverMode::Unknown,
                eta: Some(30),
                mesh_hash: "abc123".into(),
            },
        };
        let back = parse_weights(&format_weights(&w), p()).unwrap();
        assert_eq!(back.meta, w.meta);
        for (a, b) in back.weights.iter().zip(&w.weights) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let f = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(
            back.integrate(&f).unwrap().to_bits(),
            w.integrate(&f).unwrap().to_bits()
        );
    }

    #[test]
    fn weights_header_is_checked() {
        let text = "# m=2\n# n=20\n# p=1\n# q=21\n# mode=known\n# mesh_hash=x\n# count=2\n0 1.0\n";
        assert!(matches!(parse_weights(text, p()), Err(Error::Parse { line: 7, .. })));
        assert!(parse_weights("0 1.0\n", p()).is_err());
    }
}
