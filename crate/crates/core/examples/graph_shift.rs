//! The weighted shift on the spine-and-branches graph and its
//! generalized-kernel vectors.

use opshift::dynamics::Operator;
use opshift::graph::{GraphShift, GraphVertex};

fn main() -> opshift::error::Result<()> {
    let g = GraphShift::default();
    println!("truncation M = {}, ||T|| <= {}", g.truncation(), g.norm_bound().to_decimal_string());

    for big_k in [3u64, 6, 12] {
        let y = g.branch_kernel_vector(1, 1, 1, big_k)?;
        let e = g.basis(GraphVertex::Branch { n: 1, k: 1, j: 1 });
        // T^{j+K-k-1} y_K = 0 with j = k = 1
        let p = big_k - 1;
        let op = Operator::graph(g.clone());
        let killed = op.power(&y, p)?.is_zero();
        println!(
            "y_{big_k}: T^{p} y = 0: {killed}, ||y - e(1,1)_1|| = {}",
            y.sub(&e)?.norm().to_decimal_string()
        );
    }
    for big_k in [2u64, 4, 8, 12] {
        let (z, dropped) = g.spine_kernel_vector(1, big_k)?;
        let e = g.basis(GraphVertex::Spine(1));
        println!(
            "z_{big_k}: ||z - e_1|| = {:.6}, truncated mass {:.3e}",
            z.sub(&e)?.norm().to_f64(),
            dropped.to_f64()
        );
    }

    // S e_n = e_{n+1} / 2 on the spine
    let s = g.right_inverse(&g.basis(GraphVertex::Spine(2)))?;
    println!("S e_2 = {}", serde_json::to_string(&s.to_json()).unwrap());
    Ok(())
}
