//! Grid of methods over several m, written as CSV the way the `sweep`
//! subcommand does.
//!
//! cargo run --release --example regime_sweep > sweep.csv

use invwalk::budget::WorkBudget;
use invwalk::cli::{parse_m_list, sweep, NExpr, Normalize, SweepMethod, SweepSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SweepSpec {
        ms: parse_m_list("10:40:10")?,
        ns: ["m", "4*m", "m^2", "m^3*log(m)/9.8696"].iter().map(|s| NExpr::parse(s)).collect::<Result<_, _>>()?,
        methods: vec![SweepMethod::Closed, SweepMethod::Lower, SweepMethod::Upper, SweepMethod::Predict],
        precision: 128,
        normalize: Normalize::None,
        trials: 0,
        seed: 0,
        workers: 1,
    };
    let rows = sweep(&spec, WorkBudget::default())?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
