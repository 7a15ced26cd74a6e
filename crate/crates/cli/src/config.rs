//! Config-file loading and flag/file merging.
//!
//! The file mirrors the flag set: top-level `threads`, `log_level` and `seed`, plus one
//! table per subcommand (`[select]`, `[pool_info]`, ...) whose keys are the flag names
//! with underscores. A flag given on the command line always wins.

use std::path::Path;

use serde::Deserialize;

use crate::args::{
    EvalArgs, HistArgs, LogLevel, PoolInfoArgs, PqmfArgs, SelectArgs, StatsArgs, StftLossArgs,
};
use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub log_level: Option<LogLevel>,
    pub seed: Option<u64>,
    pub select: SelectArgs,
    pub stats: StatsArgs,
    pub hist: HistArgs,
    pub eval: EvalArgs,
    pub pqmf: PqmfArgs,
    pub stftloss: StftLossArgs,
    pub pool_info: PoolInfoArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Toml {
            path: path.to_path_buf(),
            source: Box::new(e),
        })
    }
}

/// Fills every unset field of `self` from `file`.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_impl {
    ($t:ty { $($f:ident),* $(,)? }) => {
        impl Merge for $t {
            fn merge(self, file: Self) -> Self {
                Self { $($f: self.$f.or(file.$f),)* }
            }
        }
    };
}

merge_impl!(SelectArgs {
    pool, plda, target, criterion, k, alpha, sigmoid_c, epsilon, out, list, reference, exclude_speakers
});
merge_impl!(StatsArgs { report, reference, out });
merge_impl!(HistArgs { report, bins, out, group_by });
merge_impl!(EvalArgs {
    pairs, plda, embeddings, out, mcd_order, fft_size, hop, frame_period_ms, f0_min, f0_max
});
merge_impl!(PqmfArgs {
    bands, taps, beta, roundtrip, synthetic, seed, sample_rate, seconds, report, write_reconstruction
});
merge_impl!(StftLossArgs { a, b, preset, bands, out });
merge_impl!(PoolInfoArgs { pool, format });

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::CriterionArg;

    #[test]
    fn flags_override_file() {
        let file = FileConfig::parse(
            "threads = 2\n[select]\nk = 10\nalpha = 0.3\ncriterion = \"dc2\"\n",
            Path::new("x.toml"),
        )
        .unwrap();
        assert_eq!(file.threads, Some(2));
        let flags = SelectArgs {
            k: Some(85),
            ..Default::default()
        };
        let merged = flags.merge(file.select);
        assert_eq!(merged.k, Some(85));
        assert_eq!(merged.alpha, Some(0.3));
        assert_eq!(merged.criterion, Some(CriterionArg::Dc2));
        assert_eq!(merged.pool, None);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = FileConfig::parse("[select]\nkk = 1\n", Path::new("x.toml")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(FileConfig::parse("bogus = 1\n", Path::new("x.toml")).is_err());
    }
}
