//! Generates a small dataset in parallel, writes it as JSON Lines and makes
//! the 80/20 split.

use lindblad_learn::dataset::{generate_dataset, read_jsonl, split, write_jsonl};
use lindblad_learn::models::{ModelId, ModelSpec};

fn main() -> lindblad_learn::Result<()> {
    let spec = ModelSpec::new(ModelId::SqTd);
    let data = generate_dataset(&spec, 40, 7, 4)?;
    println!("{} records, {} skipped", data.records.len(), data.skipped.len());

    let path = std::env::temp_dir().join("lindblad-sq-td.jsonl");
    write_jsonl(&path, &data.records)?;
    let back = read_jsonl(&path)?;
    assert_eq!(back, data.records);
    println!("wrote {}", path.display());

    let first = &back[0];
    println!("sample {} (seed {}): targets {:?}", first.sample_id, first.seed, first.targets);

    let (train, test) = split(&back, 0.8, 7)?;
    println!("split {}/{}", train.len(), test.len());
    Ok(())
}
