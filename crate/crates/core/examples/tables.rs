//! Prints a reproduced simulation table: `cargo run --release --example tables -- a 10000`.

use urnsim::tables::{reproduce_table, Design, TableSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let design: Design = args.next().unwrap_or_else(|| "a".into()).parse()?;
    let reps = args.next().map_or(Ok(10_000), |s| s.parse())?;
    let mut spec = TableSpec::new(design, reps);
    spec.parallelism = std::thread::available_parallelism().map_or(1, |n| n.get());
    print!("{}", reproduce_table(&spec)?.render());
    Ok(())
}
