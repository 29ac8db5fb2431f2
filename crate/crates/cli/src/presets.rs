//! Shipped experiment specs.

use crate::spec::*;

pub const NAMES: [&str; 3] = ["fig2", "table1", "fig5"];

fn reference_channel() -> ChannelSection {
    ChannelSection { paths: 3, max_delay: 16, max_doppler: 2.0 }
}

fn both_filters() -> Vec<String> {
    vec!["hermite".into(), "phydyas".into()]
}

fn base(kind: ExperimentKind, seed: u64, grid: Vec<GridEntry>) -> ExperimentSpec {
    ExperimentSpec {
        kind,
        seed,
        realizations: 0,
        domains: vec!["affine".into(), "filtered-td".into()],
        channel: reference_channel(),
        modulation: ModulationSection::default(),
        sir: SirSection::default(),
        ber: BerSection::default(),
        output: OutputSection::default(),
        grid,
    }
}

fn table_grid() -> Vec<GridEntry> {
    vec![GridEntry { subcarriers: 128, fft_size: 256, pruned_sizes: vec![192, 256], filters: both_filters() }]
}

pub fn preset(name: &str) -> Option<ExperimentSpec> {
    match name {
        // waveform SIR against P, L = N/2, from the smallest P meeting the
        // orthogonality condition of the reference channel (84)
        "fig2" => Some(base(
            ExperimentKind::SirWaveform,
            0,
            [128usize, 256]
                .iter()
                .map(|&n| GridEntry {
                    subcarriers: n / 2,
                    fft_size: n,
                    pruned_sizes: (n / 2 + 8..=n).step_by(8).filter(|&p| p >= 84).collect(),
                    filters: both_filters(),
                })
                .collect(),
        )),
        "table1" => {
            let mut s = base(ExperimentKind::SirChannel, 2024, table_grid());
            s.realizations = 200;
            Some(s)
        }
        "fig5" => Some(base(ExperimentKind::Ber, 7, table_grid())),
        _ => None,
    }
}
