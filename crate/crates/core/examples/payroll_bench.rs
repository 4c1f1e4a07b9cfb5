//! Payroll as a pipeline versus the same payroll as one contract. Pass
//! `N K` to change recipients and periods.

use streampay::bench::{run_comparison, PayrollConfig};
use streampay::CostTable;

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse().expect("number"));
    let n = args.next().unwrap_or(3);
    let k = args.next().unwrap_or(3) as u32;
    let report = run_comparison(&PayrollConfig::new(n as usize, k), CostTable::default())
        .expect("both variants agree");
    print!("{}", report.render());
}
