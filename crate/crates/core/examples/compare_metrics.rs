//! Fisher against Killing distances along random directions, the same study
//! as `normgeo compare`.

use normgeo::commands::{compare, CompareOptions, Context, PairFamily};

fn main() {
    for family in [
        PairFamily::Leaf,
        PairFamily::Transversal,
        PairFamily::Generic,
    ] {
        let opts = CompareOptions {
            dim: 2,
            count: 8,
            separation: (0.5, 3.0),
            family,
        };
        match compare(&Context::default(), opts) {
            Ok(report) => println!(
                "{family:?}: ratio quantiles {}",
                report.outputs["ratio_quantiles"]
            ),
            Err(e) => eprintln!("{family:?}: {e}"),
        }
    }
}
