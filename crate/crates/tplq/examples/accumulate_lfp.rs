//! Exercise the linear-fractional accumulation solver directly and verify
//! one instance against exhaustive vertex enumeration.
//!
//! Run with: cargo run --example accumulate_lfp

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use tplq::accumulate;

fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn main() {
    // Two conditional distributions over the same four targets. The solver
    // finds sup ln((d*q)/(d'*q)) over q in [1, e^alpha]^4, the worst-case
    // extra leakage one release can extract from their difference.
    let d = vec![frac(1, 2), frac(1, 4), frac(1, 4), frac(0, 1)];
    let dp = vec![frac(1, 8), frac(1, 8), frac(1, 4), frac(1, 2)];

    println!("{:>8} {:>12}", "alpha", "accumulate");
    for alpha in [0.01, 0.05, 0.1, 0.5, 1.0, 2.0] {
        println!("{alpha:>8} {:>12.6}", accumulate(alpha, &d, &dp));
    }

    // The optimum sits at a vertex of the box, so enumerating all 2^k
    // corners reproduces the sweep result.
    let alpha: f64 = 0.5;
    let boost = alpha.exp();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << d.len()) {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..d.len() {
            let q = if mask & (1 << i) != 0 { boost } else { 1.0 };
            num += d[i].to_f64().unwrap() * q;
            den += dp[i].to_f64().unwrap() * q;
        }
        best = best.max((num / den).ln());
    }
    best = best.clamp(0.0, alpha);
    println!("\nvertex enumeration at alpha=0.5: {best:.6}");
    println!("sort-and-sweep solver:          {:.6}", accumulate(alpha, &d, &dp));

    // Identical rows leak nothing extra; disjoint rows leak the full budget.
    let same = accumulate(1.0, &d, &d);
    let disjoint = accumulate(1.0, &[frac(1, 1), frac(0, 1)], &[frac(0, 1), frac(1, 1)]);
    println!("\nidentical rows: {same}, disjoint rows: {disjoint}");
}
