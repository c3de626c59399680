use super::GroupSpec;

fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn go(n: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=max.min(n)).rev() {
            cur.push(part);
            go(n - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

fn prime_powers(mut n: usize) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// One representative per isomorphism type of abelian group of order `n`,
/// in invariant-factor form (`d₁ | d₂ | …`), fewest factors first.
pub fn abelian_groups_of_order(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![1]];
    }
    let mut acc: Vec<Vec<usize>> = vec![vec![]];
    for (p, e) in prime_powers(n) {
        let mut next = Vec::new();
        for base in &acc {
            for part in partitions(e) {
                // part is descending; merge with the descending invariant factors in base
                let len = base.len().max(part.len());
                let mut merged = vec![1usize; len];
                for (j, slot) in merged.iter_mut().enumerate() {
                    let b = base.get(j).copied().unwrap_or(1);
                    let q = part.get(j).map(|&k| p.pow(k)).unwrap_or(1);
                    *slot = b * q;
                }
                next.push(merged);
            }
        }
        acc = next;
    }
    let mut out: Vec<Vec<usize>> = acc
        .into_iter()
        .map(|mut v| {
            v.reverse();
            v
        })
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// All isomorphism types with `1 ≤ |G| ≤ max`, ordered by size.
pub fn abelian_groups_up_to(max: usize) -> Vec<GroupSpec> {
    (1..=max)
        .flat_map(abelian_groups_of_order)
        .map(|orders| GroupSpec::new(&orders).expect("catalog orders are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_orders() {
        assert_eq!(abelian_groups_of_order(8), vec![vec![8], vec![2, 4], vec![2, 2, 2]]);
        assert_eq!(abelian_groups_of_order(12), vec![vec![12], vec![2, 6]]);
        assert_eq!(abelian_groups_of_order(9), vec![vec![9], vec![3, 3]]);
        assert_eq!(abelian_groups_of_order(6), vec![vec![6]]);
        assert_eq!(abelian_groups_of_order(16).len(), 5);
        assert_eq!(abelian_groups_of_order(72).len(), 6);
    }

    #[test]
    fn up_to_ten() {
        let gs = abelian_groups_up_to(10);
        // 1,2,3,4(2),5,6,7,8(3),9(2),10
        assert_eq!(gs.len(), 14);
        assert!(gs.iter().all(|g| g.size() <= 10));
    }
}
