//! Learns the constant decay rate of a single qubit from ⟨σ_z(t)⟩ features,
//! then evaluates on held-out samples and round-trips the checkpoint.
//!
//! Pass a sample count to change the dataset size (default 300).

use lindblad_learn::dataset::{generate_dataset, split};
use lindblad_learn::features::FeatureRecord;
use lindblad_learn::models::{ModelId, ModelSpec};
use lindblad_learn::nn::{evaluate, train, RegressorConfig, RegressorModel};

fn main() -> lindblad_learn::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    let id = ModelId::SqConst;

    let mut config = RegressorConfig::for_model(id);
    config.max_epochs = 60;
    let data = generate_dataset(&ModelSpec::new(id), n, 1, 1)?;
    let records: Vec<FeatureRecord> = data
        .records
        .iter()
        .map(|r| FeatureRecord::from_sample(r, config.feature_set))
        .collect::<Result<_, _>>()?;
    let (train_set, test_set) = split(&records, 0.8, 1)?;

    let model = train(&config, &train_set, id.target_names(), Some(id))?;
    let eval = evaluate(&model, &test_set)?;
    println!("{}", eval.metrics.to_json()?);

    let dir = std::env::temp_dir().join("lindblad-train-example");
    eval.write_report(&dir)?;
    let ckpt = dir.join("model.json");
    model.save(&ckpt)?;
    let restored = RegressorModel::load(&ckpt)?;
    assert_eq!(evaluate(&restored, &test_set)?.metrics, eval.metrics);
    println!("report and checkpoint in {}", dir.display());
    Ok(())
}
