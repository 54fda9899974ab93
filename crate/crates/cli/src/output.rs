use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use fluxonium::{DeviceConfig, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Identifies the tool, the config and the command in every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub command: String,
}

impl Header {
    pub fn new(cfg: &DeviceConfig, command: String) -> Self {
        Self {
            tool: "fluxsim",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: config_hash(cfg),
            command,
        }
    }

    fn csv_block(&self) -> String {
        format!(
            "# tool = {} {}\n# config_sha256 = {}\n# command = {}\n",
            self.tool, self.version, self.config_sha256, self.command
        )
    }
}

pub fn config_hash(cfg: &DeviceConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical().as_bytes()))
}

pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
    pub header: Header,
    pub written: Vec<PathBuf>,
}

fn io(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(format!("{}: {e}", path.display())))
}

impl Sink {
    pub fn new(dir: &Path, format: Format, header: Header) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), format, header, written: Vec::new() })
    }

    /// Write a table in the selected format.
    pub fn table<T: Serialize>(&mut self, stem: &str, columns: &[&str], rows: &[Vec<f64>], json: &T) -> Result<()> {
        match self.format {
            Format::Csv => self.csv(stem, columns, rows),
            Format::Json => self.json(stem, json),
        }
    }

    pub fn csv(&mut self, stem: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let text: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|v| format!("{v:e}")).collect()).collect();
        self.csv_text(stem, columns, &text)
    }

    pub fn csv_text(&mut self, stem: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(format!("{stem}.csv"));
        let mut buf = self.header.csv_block().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(columns).map_err(|e| io(&path, e))?;
            for r in rows {
                w.write_record(r).map_err(|e| io(&path, e))?;
            }
            w.flush().map_err(|e| io(&path, e))?;
        }
        self.put(path, buf)
    }

    pub fn json<T: Serialize>(&mut self, stem: &str, data: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            header: &'a Header,
            data: &'a T,
        }
        let path = self.dir.join(format!("{stem}.json"));
        let mut text =
            serde_json::to_string_pretty(&Doc { header: &self.header, data }).map_err(|e| io(&path, e))?;
        text.push('\n');
        self.put(path, text.into_bytes())
    }

    pub fn svg(&mut self, stem: &str, body: String) -> Result<()> {
        let path = self.dir.join(format!("{stem}.svg"));
        let h = &self.header;
        let text = format!(
            "<!-- tool = {} {}; config_sha256 = {}; command = {} -->\n{body}",
            h.tool, h.version, h.config_sha256, h.command
        );
        self.put(path, text.into_bytes())
    }

    fn put(&mut self, path: PathBuf, bytes: Vec<u8>) -> Result<()> {
        fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

/// Heatmap of `z[row][col]` in [-1, 1] on a blue–white–red scale.
pub fn heatmap_svg(title: &str, x: &[f64], y: &[f64], z: &[Vec<f64>], x_label: &str, y_label: &str) -> String {
    let (cell, margin) = (6.0, 60.0);
    let w = margin * 1.5 + cell * x.len() as f64;
    let h = margin * 1.5 + cell * y.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, w / 2.0);
    for (r, row) in z.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let v = v.clamp(-1.0, 1.0);
            let (red, green, blue) = if v >= 0.0 {
                (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
            } else {
                (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
            };
            // y grows downward in SVG; put the first row at the bottom.
            let px = margin + c as f64 * cell;
            let py = margin * 0.5 + (y.len() - 1 - r) as f64 * cell;
            let _ = writeln!(
                s,
                r#"<rect x="{px}" y="{py}" width="{cell}" height="{cell}" fill="rgb({},{},{})"/>"#,
                red as u8, green as u8, blue as u8
            );
        }
    }
    let bottom = margin * 0.5 + cell * y.len() as f64;
    if let (Some(x0), Some(x1)) = (x.first(), x.last()) {
        let _ = writeln!(s, r#"<text x="{margin}" y="{}">{x0:.3}</text>"#, bottom + 15.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{x1:.3}</text>"#,
            margin + cell * x.len() as f64,
            bottom + 15.0
        );
    }
    if let (Some(y0), Some(y1)) = (y.first(), y.last()) {
        let _ = writeln!(s, r#"<text x="{}" y="{bottom}" text-anchor="end">{y0:.2}</text>"#, margin - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.2}</text>"#, margin - 4.0, margin * 0.5 + 10.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, w / 2.0, bottom + 30.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        h / 2.0,
        h / 2.0
    );
    s.push_str("</svg>\n");
    s
}
