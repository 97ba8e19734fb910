use std::fs;

use anyhow::{Context, Result};
use ews_core::ingest::write_csv;
use ews_core::synth::{generate_scenario, ScenarioSpec, RNG_NAME};

use crate::GenerateArgs;

/// Writes the trace CSV plus a `<out>.meta.json` sidecar naming the
/// generator and seed.
pub fn run(args: &GenerateArgs) -> Result<()> {
    let mut spec = ScenarioSpec::from_file(&args.spec).with_context(|| format!("scenario {}", args.spec.display()))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let records = generate_scenario(&spec)?;
    write_csv(&args.out, &records).with_context(|| format!("cannot write {}", args.out.display()))?;

    let meta = serde_json::json!({
        "rng": RNG_NAME,
        "seed": spec.seed,
        "records": records.len(),
        "duration_s": spec.duration_s,
        "scenario": spec,
    });
    let meta_path = {
        let mut p = args.out.clone().into_os_string();
        p.push(".meta.json");
        std::path::PathBuf::from(p)
    };
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")
        .with_context(|| format!("cannot write {}", meta_path.display()))?;

    let last = records.last().map_or(0.0, |r| r.t_secs());
    println!(
        "wrote {} records spanning {:.3} s (scenario {:.1} s, seed {}, {}) to {}",
        records.len(),
        last,
        spec.duration_s,
        spec.seed,
        RNG_NAME,
        args.out.display()
    );
    Ok(())
}
