use voxsel_core::embeddings::{load_pool, PoolFormat};

use crate::args::{FormatArg, PoolInfoArgs};
use crate::error::{at_path, required, CliResult};

pub fn run(a: PoolInfoArgs) -> CliResult<()> {
    let path = required(a.pool, "pool-info", "pool")?;
    let format = match a.format {
        Some(FormatArg::Jsonl) => PoolFormat::Jsonl,
        Some(FormatArg::Xvecbin) => PoolFormat::Xvecbin,
        None => at_path(&path, PoolFormat::sniff(&path))?,
    };
    let pool = at_path(&path, load_pool(&path, format))?;
    println!("dimension: {}", pool.dimension());
    println!("records: {}", pool.len());
    println!("speakers: {}", pool.num_speakers());
    Ok(())
}
