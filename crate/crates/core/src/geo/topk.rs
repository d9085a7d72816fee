use core::cmp::Reverse;

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;

/// IPs kept by the map export.
pub const DEFAULT_MAP_TOP_K: usize = 100_000;

/// IPs listed per country in the map tooltip.
pub const DEFAULT_TOOLTIP_TOP: usize = 10;

/// The `k` highest-count IPs, descending by count, ties by ascending IP.
///
/// Bounded min-heap selection: `O(n log k)` time, `O(k)` extra space.
pub fn top_k_ips<I>(totals: I, k: usize) -> Vec<(u32, u64)>
where
    I: IntoIterator<Item = (u32, u64)>,
{
    if k == 0 {
        return Vec::new();
    }
    // Larger key == better rank. The heap root is the worst kept entry.
    let mut heap: BinaryHeap<Reverse<(u64, Reverse<u32>)>> = BinaryHeap::new();
    for (ip, count) in totals {
        let key = (count, Reverse(ip));
        if heap.len() < k {
            heap.push(Reverse(key));
        } else if heap.peek().is_some_and(|Reverse(worst)| key > *worst) {
            heap.pop();
            heap.push(Reverse(key));
        }
    }
    let mut out: Vec<(u32, u64)> = heap
        .into_iter()
        .map(|Reverse((count, Reverse(ip)))| (ip, count))
        .collect();
    out.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}
