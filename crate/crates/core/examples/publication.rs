//! Two data owners publish under independent keys and a third party pools
//! the manifests. Keys stay in their own directories.

use neuracrypt::encoder::ArchConfig;
use neuracrypt::io::{
    encode_dataset, keygen, load_pool_shards, pool_merge, synth_generate, utility_pool, write_pgm,
    EncodeRequest, SyntheticConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let root = dir.path();
    let arch = ArchConfig {
        height: 32,
        width: 32,
        channels: 1,
        patch: 8,
        depth: 7,
        hidden: 64,
    };
    let mut shards = Vec::new();
    for (i, owner) in ["hospital-a", "hospital-b"].into_iter().enumerate() {
        let data = synth_generate(&SyntheticConfig::new(32, 32, 60, 10 + i as u64))?;
        let raw = root.join("private").join(owner);
        std::fs::create_dir_all(&raw)?;
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for (j, (img, &l)) in data.images.iter().zip(&data.labels).enumerate() {
            let name = format!("scan{j:03}.pgm");
            std::fs::write(raw.join(&name), write_pgm(img)?)?;
            inputs.push(raw.join(&name));
            labels.push((name, if l == 1 { "finding" } else { "normal" }.to_owned()));
        }
        let key_path = raw.join("key.nck");
        keygen(None, arch, &key_path)?;
        let manifest = encode_dataset(&EncodeRequest {
            key_path,
            inputs,
            labels,
            out_dir: root.join("public").join(owner),
            owner_id: owner.into(),
            task: "finding".into(),
            nonce_base: None,
        })?;
        println!("{owner}: published {} files", manifest.files.len());
        shards.push((std::path::PathBuf::from(owner), manifest));
    }
    let pool = pool_merge(&shards)?;
    let pool_path = root.join("public").join("pool.json");
    std::fs::write(&pool_path, pool.to_json())?;
    println!("pool: owners {:?}, {} files, labels {:?}", pool.owners, pool.files.len(), pool.labels);
    let report = utility_pool(&load_pool_shards(&pool_path)?, 0)?;
    print!("{}", neuracrypt::io::render_utility(&report));
    Ok(())
}
