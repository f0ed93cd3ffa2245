//! Result files. Everything here is a pure function of the spec and the
//! rows, so identical runs give byte-identical files.

use std::fmt::Write as _;
use std::path::PathBuf;

use super::{Curve, DecodeSpec, ExperimentSpec, ResultRow};
use crate::aoisim::Mode;
use crate::error::{Error, Result};

/// Shortest round-trip decimal form.
pub(crate) fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn ms(seconds: f64) -> String {
    fmt_num(seconds * 1e3)
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub spec: ExperimentSpec,
    pub curves: Vec<Curve>,
    /// Point-major, then replication.
    pub rows: Vec<ResultRow>,
}

impl ExperimentOutput {
    fn soft_curves(&self) -> impl Iterator<Item = &Curve> {
        self.curves.iter().filter(|c| c.mode == Mode::SoftCoAp)
    }

    fn forwarding_curves(&self) -> impl Iterator<Item = &Curve> {
        self.curves.iter().filter(|c| c.mode != Mode::SingleAp)
    }

    fn has_snr(&self) -> bool {
        self.spec.decode == DecodeSpec::MonteCarlo
    }

    /// Column names of `results.csv`; depends on the spec only.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = [
            "scenario",
            "sweep",
            "x",
            "replication",
            "seed",
            "n_sensors",
            "n_aps",
            "slot_ms",
            "rounds",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        if self.has_snr() {
            cols.push("snr_primary_db".into());
        }
        cols.push("p_primary".into());
        cols.push("p_co_ap".into());
        cols.extend(self.soft_curves().map(|c| format!("p_{}", c.label())));
        cols.extend(self.curves.iter().map(|c| format!("aoi_{}_ms", c.label())));
        cols.extend(self.forwarding_curves().map(|c| format!("delay_{}_ms", c.label())));
        cols
    }

    pub fn results_csv(&self) -> String {
        let mut out = self.columns().join(",");
        out.push('\n');
        for row in &self.rows {
            let p = &row.point;
            let first = &row.curves[0].stats;
            let mut cells = vec![
                self.spec.name.clone(),
                self.spec.sweep.to_string(),
                fmt_num(p.x),
                row.replication.to_string(),
                row.seed.to_string(),
                p.n_sensors.to_string(),
                p.n_aps.to_string(),
                ms(self.spec.system.slot_seconds),
                self.spec.system.rounds.to_string(),
            ];
            if self.has_snr() {
                cells.push(p.snr_primary_db.iter().map(|s| fmt_num(*s)).collect::<Vec<_>>().join(";"));
            }
            cells.push(fmt_num(first.decode_primary));
            cells.push(fmt_num(first.decode_co_ap));
            let by = |c: &Curve| row.curves.iter().find(|r| r.curve == *c).expect("every curve ran");
            cells.extend(self.soft_curves().map(|c| fmt_num(by(c).stats.decode_soft)));
            cells.extend(self.curves.iter().map(|c| ms(by(c).network_avg_aoi)));
            cells.extend(
                self.forwarding_curves()
                    .map(|c| by(c).stats.mean_delay.map(ms).unwrap_or_default()),
            );
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Long format: one line per (point, replication, curve, sensor).
    pub fn per_sensor_csv(&self) -> String {
        let mut out = String::from("x,replication,curve,sensor,aoi_ms\n");
        for row in &self.rows {
            for c in &row.curves {
                let label = c.curve.label();
                for (i, a) in c.per_sensor_avg_aoi.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{label},{i},{}", fmt_num(row.point.x), row.replication, ms(*a));
                }
            }
        }
        out
    }

    fn point_rows(&self, index: usize) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(move |r| r.point.index == index)
    }

    /// Mean network AoI (seconds) of a curve at a point, over replications.
    pub fn mean_aoi(&self, point: usize, label: &str) -> Option<f64> {
        let v: Vec<f64> = self
            .point_rows(point)
            .filter_map(|r| r.curves.iter().find(|c| c.curve.label() == label))
            .map(|c| c.network_avg_aoi)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Plot files: one per curve (`x aoi_mean_ms aoi_stderr_ms replications`)
    /// and `decode_probability.dat`.
    pub fn plot_data(&self) -> Vec<(String, String)> {
        let points: Vec<usize> = {
            let mut v: Vec<usize> = self.rows.iter().map(|r| r.point.index).collect();
            v.dedup();
            v
        };
        let mut files = Vec::new();
        for curve in &self.curves {
            let label = curve.label();
            let mut text = format!("# {} {label}\n# x aoi_mean_ms aoi_stderr_ms replications\n", self.spec.name);
            for &p in &points {
                let v: Vec<f64> = self
                    .point_rows(p)
                    .filter_map(|r| r.curves.iter().find(|c| c.curve == *curve))
                    .map(|c| c.network_avg_aoi * 1e3)
                    .collect();
                let x = self.point_rows(p).next().expect("point has rows").point.x;
                let (mean, se) = mean_se(&v);
                let _ = writeln!(text, "{} {} {} {}", fmt_num(x), fmt_num(mean), fmt_num(se), v.len());
            }
            files.push((format!("{label}.dat"), text));
        }

        let soft: Vec<&Curve> = self.soft_curves().collect();
        let mut text = format!("# {} observed decode probability\n# x p_primary p_co_ap", self.spec.name);
        for c in &soft {
            let _ = write!(text, " p_{}", c.label());
        }
        text.push('\n');
        for &p in &points {
            let rows: Vec<&ResultRow> = self.point_rows(p).collect();
            let avg = |f: &dyn Fn(&ResultRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
            let _ = write!(
                text,
                "{} {} {}",
                fmt_num(rows[0].point.x),
                fmt_num(avg(&|r| r.curves[0].stats.decode_primary)),
                fmt_num(avg(&|r| r.curves[0].stats.decode_co_ap))
            );
            for c in &soft {
                let v = avg(&|r| {
                    r.curves
                        .iter()
                        .find(|x| x.curve == **c)
                        .expect("every curve ran")
                        .stats
                        .decode_soft
                });
                let _ = write!(text, " {}", fmt_num(v));
            }
            text.push('\n');
        }
        files.push(("decode_probability.dat".into(), text));
        files
    }

    pub fn manifest(&self) -> String {
        let mut m = String::new();
        let _ = writeln!(m, "scenario = \"{}\"", self.spec.name);
        let _ = writeln!(m, "sweep = \"{}\"", self.spec.sweep);
        let _ = writeln!(m, "points = {}", self.spec.values.len());
        let _ = writeln!(m, "replications = {}", self.spec.replications);
        let _ = writeln!(m, "seed = {}", self.spec.seed);
        m.push_str("config = \"config.toml\"\nresults = \"results.csv\"\nper_sensor = \"per_sensor.csv\"\n");
        let cols = self
            .columns()
            .iter()
            .map(|c| format!("\"{c}\""))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(m, "results_columns = [{cols}]");
        for (file, _) in self.plot_data() {
            let _ = writeln!(m, "\n[[plot]]\nfile = \"{file}\"");
            if let Some(label) = file.strip_suffix(".dat").filter(|l| *l != "decode_probability") {
                let _ = writeln!(
                    m,
                    "curve = \"{label}\"\ncolumns = [\"x\", \"aoi_mean_ms\", \"aoi_stderr_ms\", \"replications\"]"
                );
            }
        }
        m
    }

    /// Writes every output file into `spec.output_dir`.
    pub fn write(&self) -> Result<Vec<PathBuf>> {
        let dir = &self.spec.output_dir;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = vec![
            ("config.toml".to_string(), self.spec.to_toml()),
            ("results.csv".to_string(), self.results_csv()),
            ("per_sensor.csv".to_string(), self.per_sensor_csv()),
            ("manifest.toml".to_string(), self.manifest()),
        ];
        files.extend(self.plot_data());
        let mut written = Vec::with_capacity(files.len());
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
