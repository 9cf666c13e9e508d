//! Per-generation population statistics and the history files both
//! optimizers emit.

use std::fs;
use std::io;
use std::path::Path;

use crate::fitness::Candidate;

/// Fitness spread of one generation (or swarm iteration) plus a snapshot of
/// its best candidate.
#[derive(Debug, Clone)]
pub struct GenerationStats {
    pub generation: u32,
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    pub std: f64,
    pub best: Candidate,
}

/// Computes min/max/avg/std (population formula) over cached fitness values.
pub fn population_stats(generation: u32, population: &[Candidate]) -> GenerationStats {
    assert!(!population.is_empty(), "stats over an empty population");
    let values: Vec<f64> = population.iter().map(Candidate::fitness).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let avg = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - avg) * (v - avg)).sum::<f64>() / values.len() as f64;
    let best = population
        .iter()
        .max_by(|a, b| {
            a.fitness()
                .partial_cmp(&b.fitness())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("nonempty")
        .clone();
    GenerationStats {
        generation,
        min,
        max,
        avg,
        std: var.sqrt(),
        best,
    }
}

/// Writes the fitness-history CSV: header `<label>,min,max,avg,std`, one row
/// per generation, LF line endings.
pub fn write_history_csv(path: &Path, label: &str, rows: &[GenerationStats]) -> io::Result<()> {
    let mut out = format!("{label},min,max,avg,std\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.generation, row.min, row.max, row.avg, row.std
        ));
    }
    fs::write(path, out)
}

/// Companion gnuplot-friendly data file: space-separated columns with a
/// commented header.
pub fn write_history_dat(path: &Path, label: &str, rows: &[GenerationStats]) -> io::Result<()> {
    let mut out = format!("# {label} min max avg std\n");
    for row in rows {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            row.generation, row.min, row.max, row.avg, row.std
        ));
    }
    fs::write(path, out)
}
