use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use epictrl::graph::{karate, karate_layout, StaticGraph};
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Float with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn write(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write(path, &text)
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Record of one command invocation.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments as given, replayable with `epictrl replay`.
    pub args: Vec<String>,
    pub inputs: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        RunManifest {
            command: command.to_string(),
            args: args.to_vec(),
            inputs: BTreeMap::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) {
        self.inputs
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn input_path(&mut self, key: &str, path: &Path) {
        let resolved = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
        self.input(key, resolved.display().to_string());
    }

    pub fn output(&mut self, path: PathBuf) {
        self.outputs.push(path.display().to_string());
    }

    pub fn save(mut self, path: &Path) -> Result<(), CliError> {
        self.outputs.push(path.display().to_string());
        write_json(path, &self).map(|_| ())
    }
}

/// Node coordinates: the frozen Karate drawing when `g` is the Karate
/// graph, a circle otherwise.
fn layout(g: &StaticGraph) -> Vec<(f64, f64)> {
    if g.n() == 34 && karate().edges().iter().all(|&(i, j)| g.has_edge(i, j)) {
        return karate_layout();
    }
    let n = g.n() as f64;
    (0..g.n())
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n;
            (a.cos(), a.sin())
        })
        .collect()
}

/// Network map with node fill darkness proportional to `weights`.
pub fn network_svg(g: &StaticGraph, weights: &[f64], title: &str) -> String {
    let pos = layout(g);
    let (w, h, pad) = (600.0, 600.0, 40.0);
    let (xmin, xmax) = pos
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (ymin, ymax) = pos
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
    let sx = |x: f64| pad + (x - xmin) / (xmax - xmin).max(1e-12) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - ymin) / (ymax - ymin).max(1e-12) * (h - 2.0 * pad);
    let top = weights.iter().copied().fold(0.0, f64::max);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<title>{title}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for &(i, j) in g.edges() {
        s += &format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999\" stroke-width=\"1\"/>\n",
            sx(pos[i].0),
            sy(pos[i].1),
            sx(pos[j].0),
            sy(pos[j].1)
        );
    }
    for (i, &(x, y)) in pos.iter().enumerate() {
        let frac = if top > 0.0 {
            (weights.get(i).copied().unwrap_or(0.0) / top).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let shade = (255.0 * (1.0 - frac)).round() as u8;
        s += &format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"11\" fill=\"rgb({shade},{shade},{shade})\" stroke=\"black\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\" text-anchor=\"middle\" fill=\"{}\">{}</text>\n",
            sx(x),
            sy(y),
            sx(x),
            sy(y) + 3.0,
            if frac > 0.5 { "white" } else { "black" },
            i
        );
    }
    s += "</svg>\n";
    s
}

/// Line plot of `(x, y)` points; NaN points are skipped.
pub fn line_svg(points: &[(f64, f64)], xlabel: &str, ylabel: &str) -> String {
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    let (w, h, pad) = (600.0, 400.0, 50.0);
    let (x0, x1) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let y1 = finite.iter().map(|p| p.1).fold(0.0, f64::max);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-12) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - y / y1.max(1e-12) * (h - 2.0 * pad);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    s += &format!(
        "<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{0}\" stroke=\"black\"/>\n",
        h - pad,
        w - pad
    );
    s += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xlabel}</text>\n<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">{ylabel}</text>\n",
        w / 2.0,
        h - 10.0,
        h / 2.0,
        h / 2.0
    );
    if finite.is_empty() {
        return s + "</svg>\n";
    }
    s += &format!(
        "<text x=\"{pad}\" y=\"{}\" font-size=\"10\">{x0:.3}</text>\n<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{x1:.3}</text>\n<text x=\"{}\" y=\"{pad}\" font-size=\"10\" text-anchor=\"end\">{y1:.3}</text>\n",
        h - pad + 15.0,
        w - pad,
        h - pad + 15.0,
        pad - 4.0
    );
    let pts: Vec<String> = finite.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    s += &format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n",
        pts.join(" ")
    );
    s + "</svg>\n"
}
