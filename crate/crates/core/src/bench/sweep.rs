//! Parameter sweeps over the bundled benchmarks.

use std::io::Write;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use super::{run_bench_row, BenchError, BenchName, BenchSpec, MetricsRow};
use crate::config::{BenchConfig, ConfigError, SimConfig};

/// One swept parameter: a dotted config path and the values it takes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub values: Vec<Value>,
}

/// Sweep description, read from JSON:
///
/// ```json
/// {"base": {"vlen_bits": 256}, "benches": ["memcpy"], "bytes": [262144],
///  "seed": 1, "axes": [{"param": "llc.block_bits", "values": [4096, 8192]}]}
/// ```
///
/// `bytes` and `seed` fall back to the base config's `bench` section.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub base: SimConfig,
    pub benches: Vec<String>,
    #[serde(default)]
    pub bytes: Vec<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub axes: Vec<Axis>,
}

/// One point of the cartesian product.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub bench: String,
    pub data_bytes: u64,
    pub seed: u64,
    /// Config with the axis values applied, or why they could not be.
    pub config: Result<SimConfig, ConfigError>,
}

impl Grid {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Points in row-major order: benches, then sizes, then axes in order.
    pub fn points(&self) -> Vec<GridPoint> {
        let defaults = self.base.bench.clone().unwrap_or_default();
        let sizes = if self.bytes.is_empty() { vec![defaults.bytes] } else { self.bytes.clone() };
        let seed = self.seed.unwrap_or(defaults.seed);

        let mut configs: Vec<Result<SimConfig, ConfigError>> = vec![Ok(self.base.clone())];
        for axis in &self.axes {
            configs = configs
                .into_iter()
                .flat_map(|cfg| {
                    axis.values.iter().map(move |v| {
                        let mut cfg = cfg.clone()?;
                        cfg.set_param(&axis.param, v)?;
                        Ok(cfg)
                    })
                })
                .collect();
        }
        let mut points = Vec::new();
        for bench in &self.benches {
            for &data_bytes in &sizes {
                for config in &configs {
                    let config = config.clone().map(|mut c| {
                        c.bench = Some(BenchConfig { name: bench.clone(), bytes: data_bytes, seed });
                        c
                    });
                    points.push(GridPoint { bench: bench.clone(), data_bytes, seed, config });
                }
            }
        }
        points
    }
}

fn run_point(point: &GridPoint) -> MetricsRow {
    let config = match &point.config {
        Ok(c) => c,
        Err(e) => {
            return MetricsRow::failed(&point.bench, &SimConfig::default(), point.data_bytes, point.seed, &e.to_string())
        }
    };
    let name: BenchName = match point.bench.parse() {
        Ok(n) => n,
        Err(e) => return MetricsRow::failed(&point.bench, config, point.data_bytes, point.seed, &e.to_string()),
    };
    if let Err(e) = config.cache_config() {
        return MetricsRow::failed(&point.bench, config, point.data_bytes, point.seed, &e.to_string());
    }
    run_bench_row(&BenchSpec { name, data_bytes: point.data_bytes, seed: point.seed, config: config.clone() })
}

/// Runs every grid point in parallel; rows come back in grid order.
/// Points that cannot run become rows with `validated = false` and an error.
pub fn sweep(grid: &Grid) -> Vec<MetricsRow> {
    grid.points().par_iter().map(run_point).collect()
}

/// Writes rows as CSV with a header line.
pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<(), BenchError> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    writer.flush().map_err(|e| csv_error(e.into()))?;
    Ok(())
}

fn csv_error(e: csv::Error) -> BenchError {
    BenchError::Io(e.to_string())
}
