//! Executes a validated spec and writes its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use afbm_core::metrics::{
    ber_curves, channel_sir_samples, heatmap_csv, mean_magnitude, realization_deltas, sir_waveform, snr_at_ber, BerOptions,
    BerPoint, SirStatistics,
};
use afbm_core::{Constellation, Domain, ModulationConfig, Modem};
use rayon::prelude::*;

use crate::spec::{config_label, ExperimentKind, ExperimentSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a run produces, held in memory until it is written.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub hash: String,
    pub version: &'static str,
    pub elapsed: Duration,
    /// Configurations times realizations (or BER trials) actually run.
    pub evaluations: u64,
    /// Main results table.
    pub csv: String,
    /// Further CSV files, by file name.
    pub extra: Vec<(String, String)>,
    /// Gnuplot data blocks, one per curve, if requested.
    pub gnuplot: Option<String>,
    pub summary: Vec<String>,
}

#[derive(Debug)]
pub enum RunError {
    /// The spec violates constraints; nothing was computed or written.
    Invalid(Vec<String>),
    Failed(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Invalid(d) => write!(f, "invalid experiment spec:\n  {}", d.join("\n  ")),
            RunError::Failed(m) => f.write_str(m),
        }
    }
}

fn failed(e: impl ToString) -> RunError {
    RunError::Failed(e.to_string())
}

fn header(spec: &ExperimentSpec, columns: &str) -> String {
    format!("# afbm {VERSION} kind={} spec={}\n{columns}\n", spec.kind, spec.hash())
}

fn config_columns(cfg: &ModulationConfig) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        config_label(cfg),
        cfg.filter,
        cfg.overlap,
        cfg.subcarriers,
        cfg.pruned_size,
        cfg.fft_size,
        cfg.symbols
    )
}

const CONFIG_HEADER: &str = "config,filter,overlap,L,P,N,K";

pub fn run(spec: &ExperimentSpec, override_orthogonality: bool) -> Result<ExperimentReport, RunError> {
    let blocking: Vec<String> =
        spec.validate().into_iter().filter(|d| !(d.overridable && override_orthogonality)).map(|d| d.to_string()).collect();
    if !blocking.is_empty() {
        return Err(RunError::Invalid(blocking));
    }
    let configs = spec.configs().map_err(failed)?;
    let modems: Vec<Modem> = configs.iter().map(Modem::new).collect::<Result<_, _>>().map_err(failed)?;
    let start = Instant::now();
    let mut report = match spec.kind {
        ExperimentKind::SirWaveform => sir_waveform_report(spec, &modems),
        ExperimentKind::SirChannel => sir_channel_report(spec, &modems)?,
        ExperimentKind::Ber => ber_report(spec, &modems)?,
    };
    report.elapsed = start.elapsed();
    Ok(report)
}

fn empty_report(spec: &ExperimentSpec, csv: String) -> ExperimentReport {
    ExperimentReport {
        kind: spec.kind,
        hash: spec.hash(),
        version: VERSION,
        elapsed: Duration::ZERO,
        evaluations: 0,
        csv,
        extra: vec![],
        gnuplot: None,
        summary: vec![],
    }
}

fn sir_waveform_report(spec: &ExperimentSpec, modems: &[Modem]) -> ExperimentReport {
    let sirs: Vec<_> = modems.par_iter().map(sir_waveform).collect();
    let mut csv = header(spec, &format!("{CONFIG_HEADER},sir_db,interference,orthogonal"));
    let mut plot = String::new();
    let mut report = empty_report(spec, String::new());
    let mut last_group = None;
    for (m, s) in modems.iter().zip(&sirs) {
        let c = m.config();
        writeln!(csv, "{},{:.12e},{:.12e},{}", config_columns(c), s.db, s.interference, s.orthogonal).unwrap();
        let group = (c.filter, c.subcarriers, c.fft_size);
        if last_group != Some(group) {
            if last_group.is_some() {
                plot.push_str("\n\n");
            }
            writeln!(plot, "# {} L={} N={}\n# P sir_db", c.filter, c.subcarriers, c.fft_size).unwrap();
            last_group = Some(group);
        }
        writeln!(plot, "{} {:.6}", c.pruned_size, s.db).unwrap();
    }
    let mut groups: Vec<_> = modems.iter().map(|m| (m.config().filter, m.config().subcarriers, m.config().fft_size)).collect();
    groups.dedup();
    for g in groups {
        let (best, sir) = modems
            .iter()
            .zip(&sirs)
            .filter(|(m, _)| (m.config().filter, m.config().subcarriers, m.config().fft_size) == g)
            .max_by(|a, b| a.1.db.total_cmp(&b.1.db))
            .expect("group is non-empty");
        report.summary.push(format!("{} L={} N={}: best P = {} at {:.2} dB", g.0, g.1, g.2, best.config().pruned_size, sir.db));
    }
    report.csv = csv;
    report.evaluations = modems.len() as u64;
    report.gnuplot = spec.output.gnuplot.then_some(plot);
    report
}

fn sir_channel_report(spec: &ExperimentSpec, modems: &[Modem]) -> Result<ExperimentReport, RunError> {
    let domains = spec.parsed_domains().map_err(failed)?;
    let averaging = spec.averaging().map_err(failed)?;
    let profile = spec.profile();
    let mut csv = header(spec, &format!("{CONFIG_HEADER},domain,metric,value"));
    let mut samples_csv = header(spec, "config,realization,domain,robust_db,trace_db,substituted");
    let mut report = empty_report(spec, String::new());
    let mut plot = String::new();
    for m in modems {
        let label = config_label(m.config());
        let samples = channel_sir_samples(m, &profile, &domains, spec.realizations, spec.seed, spec.sir.noise_var).map_err(failed)?;
        let mut per_domain = vec![];
        for (j, d) in domains.iter().enumerate() {
            let column: Vec<_> = samples.iter().map(|row| row[j]).collect();
            for (r, s) in column.iter().enumerate() {
                writeln!(samples_csv, "{label},{r},{d},{:.12e},{:.12e},{}", s.robust_db, s.trace_db, s.substituted).unwrap();
            }
            let stats = SirStatistics::from_samples(&column, averaging, label.clone()).map_err(failed)?;
            for (metric, v) in [
                ("average_db", stats.average_db),
                ("maximum_db", stats.maximum_db),
                ("minimum_db", stats.minimum_db),
                ("realizations", stats.realizations as f64),
                ("substituted", stats.substituted as f64),
            ] {
                writeln!(csv, "{},{d},{metric},{v:.12e}", config_columns(m.config())).unwrap();
            }
            if !plot.is_empty() {
                plot.push_str("\n\n");
            }
            writeln!(plot, "# {label} {d}\n# realization sir_db").unwrap();
            for (r, s) in column.iter().enumerate() {
                writeln!(plot, "{r} {:.6}", s.db()).unwrap();
            }
            report.summary.push(format!(
                "{label} {d:<11}: avg {:7.2} dB  max {:7.2}  min {:7.2}  ({} realizations, {} substituted)",
                stats.average_db, stats.maximum_db, stats.minimum_db, stats.realizations, stats.substituted
            ));
            per_domain.push((*d, stats));
        }
        let find = |want: Domain| per_domain.iter().find(|(d, _)| *d == want).map(|(_, s)| s);
        if let (Some(a), Some(f)) = (find(Domain::Affine), find(Domain::FilteredTd)) {
            report.summary.push(format!(
                "{label} worst filtered-TD minus average affine: {:+.2} dB",
                f.minimum_db - a.average_db
            ));
        }
        if spec.sir.heatmap_realizations > 0 {
            let transmit = m.transmit_matrix();
            let n = spec.sir.heatmap_realizations.min(spec.realizations);
            let per_real: Vec<_> = (0..n as u64)
                .into_par_iter()
                .map(|r| realization_deltas(m, &profile, &transmit, &domains, spec.seed, r, spec.sir.noise_var))
                .collect::<Result<_, _>>()
                .map_err(failed)?;
            for (j, d) in domains.iter().enumerate() {
                let mats: Vec<_> = per_real.iter().map(|row| row[j].matrix.clone()).collect();
                let mean = mean_magnitude(&mats).map_err(failed)?;
                report.extra.push((format!("heatmap-{label}-{d}"), heatmap_csv(&mean)));
            }
        }
        report.evaluations += spec.realizations as u64;
    }
    report.csv = csv;
    report.extra.insert(0, ("sir-channel-samples".into(), samples_csv));
    report.gnuplot = spec.output.gnuplot.then_some(plot);
    Ok(report)
}

fn ber_report(spec: &ExperimentSpec, modems: &[Modem]) -> Result<ExperimentReport, RunError> {
    let domains = spec.parsed_domains().map_err(failed)?;
    let grid = spec.snr_grid();
    let options = BerOptions {
        constellation: Constellation::QPSK,
        min_errors: spec.ber.min_errors,
        max_trials: spec.ber.max_trials,
        batch: spec.ber.batch,
    };
    let mut csv = header(spec, &format!("{CONFIG_HEADER},domain,snr_db,bit_errors,bits_total,ber,trials"));
    let mut report = empty_report(spec, String::new());
    let mut plot = String::new();
    for m in modems {
        let label = config_label(m.config());
        let curves = ber_curves(m, &spec.profile(), &domains, &grid, options, spec.seed).map_err(failed)?;
        for (d, curve) in domains.iter().zip(&curves) {
            for p in curve {
                writeln!(
                    csv,
                    "{},{d},{},{},{},{:.12e},{}",
                    config_columns(m.config()),
                    p.snr_db,
                    p.bit_errors,
                    p.bits_total,
                    p.ber,
                    p.trials
                )
                .unwrap();
            }
            if !plot.is_empty() {
                plot.push_str("\n\n");
            }
            writeln!(plot, "# {label} {d}\n# snr_db ber").unwrap();
            for p in curve {
                writeln!(plot, "{} {:.6e}", p.snr_db, p.ber).unwrap();
            }
            report.evaluations += curve.iter().map(|p: &BerPoint| p.trials).max().unwrap_or(0);
        }
        let crossing = |c: &[BerPoint]| snr_at_ber(c, 1e-2);
        let parts: Vec<String> = domains
            .iter()
            .zip(&curves)
            .map(|(d, c)| format!("{d} {}", crossing(c).map_or("not reached".into(), |v| format!("{v:.2} dB"))))
            .collect();
        report.summary.push(format!("{label} SNR at BER 1e-2: {}", parts.join(", ")));
    }
    report.csv = csv;
    report.gnuplot = spec.output.gnuplot.then_some(plot);
    Ok(report)
}

impl ExperimentReport {
    pub fn main_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}-{}.csv", self.kind, &self.hash[..12]))
    }

    pub fn summary_text(&self) -> String {
        let mut s = format!(
            "afbm {} {}\nspec {}\nwall clock {:.2} s, {} evaluations\n\n",
            self.version,
            self.kind,
            self.hash,
            self.elapsed.as_secs_f64(),
            self.evaluations
        );
        for line in &self.summary {
            s.push_str(line);
            s.push('\n');
        }
        s
    }

    /// Writes all artifacts and returns their paths, main CSV first.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let short = &self.hash[..12];
        let mut files = vec![(self.main_path(dir), self.csv.clone())];
        for (name, body) in &self.extra {
            files.push((dir.join(format!("{name}-{short}.csv")), body.clone()));
        }
        if let Some(plot) = &self.gnuplot {
            files.push((dir.join(format!("{}-{short}.dat", self.kind)), plot.clone()));
        }
        files.push((dir.join("summary.txt"), self.summary_text()));
        for (path, body) in &files {
            fs::write(path, body)?;
        }
        Ok(files.into_iter().map(|f| f.0).collect())
    }
}
