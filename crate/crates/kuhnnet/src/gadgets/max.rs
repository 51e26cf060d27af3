use crate::compose::{Lin, NetBuilder};
use crate::error::{Error, Result};
use crate::net::ReluNet;

/// Pairwise max tree on `m ≤ 2^k` inputs of either sign.
///
/// Each pair uses `max{a,b} = (a+b)/2 + |a-b|/2` with the sum carried as
/// `σ(a+b) - σ(-a-b)`. An unpaired element rides along as `σ(a) - σ(-a)`.
pub fn build_max_net(k: u32, m: usize) -> Result<ReluNet> {
    if m == 0 {
        return Err(Error::input("max net needs at least one input"));
    }
    if k >= usize::BITS || m > 1usize << k {
        return Err(Error::input(format!("arity {m} exceeds 2^{k}")));
    }
    let mut nb = NetBuilder::new(m);
    let mut vals = nb.inputs();
    while vals.len() > 1 {
        let mut d = nb.begin();
        let mut next = Vec::with_capacity(vals.len().div_ceil(2));
        for pair in vals.chunks(2) {
            match pair {
                [a, b] => {
                    let sp = d.relu(a.clone() + b.clone());
                    let sn = d.relu(-(a.clone() + b.clone()));
                    let dp = d.relu(a.clone() - b.clone());
                    let dn = d.relu(b.clone() - a.clone());
                    next.push((sp - sn + dp + dn) * 0.5);
                }
                [a] => next.push(d.keep(a.clone())),
                _ => unreachable!(),
            }
        }
        nb.push(d);
        vals = next;
    }
    Ok(nb.finish(&[vals.pop().unwrap_or_else(Lin::zero)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(build_max_net(1, 2).unwrap().eval1(&[3.0, -5.0]), 3.0);
        assert_eq!(build_max_net(2, 4).unwrap().eval1(&[1.0, 4.0, 2.0, 4.0]), 4.0);
        let one = build_max_net(0, 1).unwrap();
        assert_eq!(one.depth(), 0);
        assert_eq!(one.eval1(&[-7.5]), -7.5);
        assert!(build_max_net(2, 5).is_err());
        assert!(build_max_net(2, 0).is_err());
    }

    #[test]
    fn size_within_bounds() {
        for k in 0..5u32 {
            for m in 1..=(1usize << k) {
                let net = build_max_net(k, m).unwrap();
                assert!(net.width() <= 1 << (k + 1));
                assert!(net.depth() <= k as usize + 1);
            }
        }
    }
}
