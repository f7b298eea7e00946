//! Handcrafted time-series features of one two-qubit trajectory.

use lindblad_learn::dataset::simulate_sample;
use lindblad_learn::features::{FeatureRecord, FeatureSet, FEATURE_NAMES};
use lindblad_learn::models::{ModelId, ModelSpec};

fn main() -> lindblad_learn::Result<()> {
    let rec = simulate_sample(&ModelSpec::new(ModelId::Heisenberg), 0, 3)?;
    for set in [FeatureSet::F10, FeatureSet::F18] {
        let f = FeatureRecord::from_sample(&rec, set)?;
        println!("{}: {} features for {} channels", set.as_str(), f.features.len(), rec.series.len());
    }

    // per-channel layout: channel c occupies features[c*18 .. (c+1)*18]
    let f = FeatureRecord::from_sample(&rec, FeatureSet::F18)?;
    for (name, chunk) in rec.model.observable_names().iter().zip(f.features.chunks(18)) {
        println!("{name}:");
        for (feature, v) in FEATURE_NAMES.iter().zip(chunk) {
            println!("  {feature:<20} {v:>12.5}");
        }
    }
    Ok(())
}
