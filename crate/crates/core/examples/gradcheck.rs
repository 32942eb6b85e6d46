//! Finite-difference check of every parameter tensor of a tiny model, for
//! all six representation modes.

use wordchar_nmt::gradcheck::model_suite;
use wordchar_nmt::ReprMode;

fn main() -> wordchar_nmt::Result<()> {
    for mode in ReprMode::ALL {
        let report = model_suite(mode, 0)?;
        let worst = report.worst().expect("model has parameters");
        println!(
            "{:<22} {:>2} tensors  worst {:.2e} ({})  {}",
            mode.name(),
            report.groups.len(),
            worst.max_rel_error,
            worst.name,
            if report.passed() { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
