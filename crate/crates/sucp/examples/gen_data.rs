//! Writes a synthetic check-in corpus in the flat-file input format, handy
//! for trying the CLI without a real dataset.
//!
//!     cargo run --example gen_data -- out_dir [groups] [group_size] [seed]

use sucp::synth::{generate, SynthConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let dir = args
        .get(1)
        .map(String::as_str)
        .unwrap_or("synth-data")
        .to_string();
    let mut cfg = SynthConfig::default();
    if let Some(g) = args.get(2) {
        cfg.num_groups = g.parse()?;
    }
    if let Some(s) = args.get(3) {
        cfg.group_size = s.parse()?;
    }
    if let Some(seed) = args.get(4) {
        cfg.seed = seed.parse()?;
    }

    std::fs::create_dir_all(&dir)?;
    let data = generate(&cfg);
    let checkins = std::path::Path::new(&dir).join("checkins.tsv");
    let friendships = std::path::Path::new(&dir).join("friendships.tsv");
    data.write_files(&checkins, &friendships)?;

    let (tf, vf) = cfg.exact_fracs();
    println!("wrote {} check-ins for {} users", data.checkins.len(), cfg.num_users());
    println!("  {}", checkins.display());
    println!("  {}", friendships.display());
    println!("suggested split fractions: train_frac = {tf}, valid_frac = {vf}");
    Ok(())
}
