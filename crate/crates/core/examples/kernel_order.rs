//! Kernel order versus Blackwell order on a pair of 3x3 kernels.
//!
//! `g` is a noisy but full-rank signal, `h` perfectly separates the first two
//! states and pools the third. `g` wins the kernel order, yet `h` is not a
//! garbling of `g`.

use mechkernel::kernel::{average, blackwell_more_informative, kernel_more_informative, kernel_order_witness, StochasticKernel};
use mechkernel::rational::{format_rational, parse_rational};

fn kernel(rows: &[[&str; 3]]) -> mechkernel::Result<StochasticKernel> {
    let rows = rows.iter().map(|r| r.iter().map(|s| parse_rational(s)).collect()).collect::<Result<Vec<_>, _>>()?;
    StochasticKernel::from_rows(rows)
}

fn show(atoms: &[mechkernel::Q]) -> String {
    atoms.iter().map(format_rational).collect::<Vec<_>>().join(", ")
}

fn main() -> mechkernel::Result<()> {
    let g = kernel(&[["0.8", "0.1", "0.1"], ["0.1", "0.8", "0.1"], ["0.1", "0.1", "0.8"]])?;
    let h = kernel(&[["1", "0", "0.5"], ["0", "1", "0.5"], ["0", "0", "0"]])?;

    println!("g kernel-more-informative than h: {}", kernel_more_informative(&g, &h)?);
    println!("h kernel-more-informative than g: {}", kernel_more_informative(&h, &g)?);
    if let Some((mu0, mu_bar)) = kernel_order_witness(&h, &g)? {
        println!("h cannot tell ({}) from ({})", show(mu0.atoms()), show(mu_bar.atoms()));
        println!("  h-averages: ({}) vs ({})", show(average(&h, &mu0)?.atoms()), show(average(&h, &mu_bar)?.atoms()));
        println!("  g-averages: ({}) vs ({})", show(average(&g, &mu0)?.atoms()), show(average(&g, &mu_bar)?.atoms()));
    }
    match blackwell_more_informative(&g, &h)? {
        Some(s) => println!("garbling found: {:?}", s.matrix().to_rows()),
        None => println!("no garbling S with h = S·g: g is not Blackwell more informative"),
    }
    Ok(())
}
