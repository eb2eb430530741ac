//! Deterministic CSV and SVG emission.
//!
//! Every CSV starts with comment lines carrying the tool version, the
//! canonical spec string and its hash, the seed and the backend, so a file
//! is reproducible from its own header. No timestamps: identical inputs
//! give byte-identical outputs.

use std::io::Write;
use std::path::Path;

use assemblies::additive::PolygonalPath;

pub struct CsvOut {
    sink: Box<dyn Write>,
}

fn fnv1a64(s: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// RFC-4180 quoting: quote when the field contains a comma, quote or
/// newline; embedded quotes are doubled.
pub fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl CsvOut {
    pub fn create(path: Option<&Path>) -> std::io::Result<CsvOut> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => Box::new(std::io::BufWriter::new(std::io::stdout())),
        };
        Ok(CsvOut { sink })
    }

    /// Standard header block. `extras` are additional key=value comments.
    pub fn header(
        &mut self,
        spec_canonical: &str,
        seed: Option<u64>,
        backend: Option<&str>,
        extras: &[(&str, String)],
    ) -> std::io::Result<()> {
        writeln!(self.sink, "# tool: assemblies {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(
            self.sink,
            "# spec: {} hash={:016x}",
            spec_canonical,
            fnv1a64(spec_canonical)
        )?;
        if let Some(seed) = seed {
            writeln!(self.sink, "# seed: {seed}")?;
        }
        if let Some(backend) = backend {
            writeln!(self.sink, "# backend: {backend}")?;
        }
        for (k, v) in extras {
            writeln!(self.sink, "# {k}: {v}")?;
        }
        Ok(())
    }

    pub fn comment(&mut self, line: &str) -> std::io::Result<()> {
        writeln!(self.sink, "# {line}")
    }

    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        let line: Vec<String> = fields.iter().map(|f| csv_escape(f)).collect();
        writeln!(self.sink, "{}", line.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.sink.flush()
    }
}

/// Pure-emission line chart: the given labelled curves on [0,1], with the
/// unit band y = +-1 and the extremal functions g1 (sqrt(2) t capped at
/// sqrt(2)/2) and g2 (the tent t, 1-t) as reference overlays.
pub fn write_paths_svg(
    path: &Path,
    curves: &[(String, &PolygonalPath)],
    y_range: f64,
) -> std::io::Result<()> {
    const W: f64 = 720.0;
    const H: f64 = 480.0;
    const PAD: f64 = 40.0;
    let ymax = y_range.max(1.2);
    let x_px = |t: f64| PAD + t * (W - 2.0 * PAD);
    let y_px = |y: f64| H / 2.0 - y / ymax * (H / 2.0 - PAD);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    // axes and unit band
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888\"/>\n",
        x_px(0.0),
        y_px(0.0),
        x_px(1.0),
        y_px(0.0)
    ));
    for band in [1.0f64, -1.0] {
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#bbb\" stroke-dasharray=\"6 4\"/>\n",
            x_px(0.0),
            y_px(band),
            x_px(1.0),
            y_px(band)
        ));
    }
    let polyline = |pts: &[(f64, f64)], stroke: &str, width: f64, dash: &str| {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(t, y)| format!("{:.2},{:.2}", x_px(t), y_px(y)))
            .collect();
        format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"{}/>\n",
            coords.join(" "),
            if dash.is_empty() {
                String::new()
            } else {
                format!(" stroke-dasharray=\"{dash}\"")
            }
        )
    };
    // extremal reference functions
    let r2 = std::f64::consts::SQRT_2;
    svg.push_str(&polyline(
        &[(0.0, 0.0), (0.5, r2 / 2.0), (1.0, r2 / 2.0)],
        "#2a9d8f",
        1.5,
        "4 3",
    ));
    svg.push_str(&polyline(
        &[(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)],
        "#e9c46a",
        1.5,
        "4 3",
    ));
    let palette = ["#264653", "#e76f51", "#6a4c93", "#1d7874", "#b5179e"];
    for (idx, (label, curve)) in curves.iter().enumerate() {
        let (ts, ys) = curve.breakpoints();
        let pts: Vec<(f64, f64)> = ts.iter().cloned().zip(ys.iter().cloned()).collect();
        svg.push_str(&polyline(&pts, palette[idx % palette.len()], 1.0, ""));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{}\">{}</text>\n",
            W - PAD - 160.0,
            PAD + 14.0 * idx as f64,
            palette[idx % palette.len()],
            label
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)
}
