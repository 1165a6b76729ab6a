//! Generate a seeded grid of synthetic tokens and write it as a corpus that
//! the `analyze` subcommand can read.

use gesture_dynamics::batch::write_corpus;
use gesture_dynamics::synth::{sweep, SweepBase, SweepGrid};

fn main() -> gesture_dynamics::Result<()> {
    let grid = SweepGrid {
        r: vec![0.2, 0.36, 0.6],
        displacement: vec![4.0, 8.0],
        x0: vec![30.0],
        noise_sd: vec![0.0, 0.05],
        seeds: vec![1],
        base: SweepBase::default(),
    };
    let tokens = sweep(&grid)?;
    for st in &tokens {
        println!(
            "{:<32} truth t = {:>6.2} r = {:.2}  onset {:>3} offset {:>3}",
            st.token.id(),
            st.truth.t,
            st.truth.r,
            st.token.onset(),
            st.token.offset()
        );
    }
    let dir = std::env::temp_dir().join("gesture-dynamics-sweep");
    write_corpus(&tokens, &dir)?;
    println!("{} tokens written to {}", tokens.len(), dir.display());
    Ok(())
}
