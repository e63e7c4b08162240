use super::types::Secret;
use crate::error::{usage, Error, Result};

/// Joint reconstruction `k_j = Σ_i (m′^j_i ⊕ r′^j_i)·2^(n-i)`.
///
/// `published` is indexed `[j][i]`; `shares[i]` is party `i`'s sifted
/// `R′_i`. Every party must contribute.
pub fn reconstruct(published: &[Vec<u8>], shares: &[Option<&[u8]>]) -> Result<Secret> {
    let n = shares.len();
    let present = shares.iter().filter(|s| s.is_some()).count();
    if n == 0 || present < n {
        return Err(Error::InsufficientShares { present, required: n.max(1) });
    }
    let rows = combine(published, shares)?;
    let rows: Vec<Vec<u8>> = rows.into_iter().map(|r| r.into_iter().map(|b| b.expect("all shares present")).collect()).collect();
    Secret::from_bit_rows(&rows)
}

/// Per-tuple bit rows `m′ ⊕ r′`, `None` where a share is missing.
pub(crate) fn combine(published: &[Vec<u8>], shares: &[Option<&[u8]>]) -> Result<Vec<Vec<Option<u8>>>> {
    let n = shares.len();
    let len = published.len();
    if len == 0 {
        return Err(usage("no published rows"));
    }
    if published.iter().any(|row| row.len() != n) {
        return Err(usage(format!("published rows must hold {n} bits")));
    }
    for share in shares.iter().flatten() {
        if share.len() != len {
            return Err(usage(format!("share of length {} does not match L = {len}", share.len())));
        }
    }
    Ok(published
        .iter()
        .enumerate()
        .map(|(j, row)| {
            row.iter()
                .zip(shares)
                .map(|(m, share)| share.map(|s| m ^ s[j]))
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_arithmetic() {
        let published = vec![vec![1, 0]];
        let r1 = [0u8];
        let r2 = [1u8];
        let secret = reconstruct(&published, &[Some(&r1), Some(&r2)]).unwrap();
        assert_eq!(secret.values(), &[3]);

        let zeros = vec![vec![0, 0, 0]];
        let z = [0u8];
        let secret = reconstruct(&zeros, &[Some(&z), Some(&z), Some(&z)]).unwrap();
        assert_eq!(secret.values(), &[0]);
    }

    #[test]
    fn missing_share_is_insufficient() {
        let published = vec![vec![1, 0]];
        let r1 = [0u8];
        let err = reconstruct(&published, &[Some(&r1), None]).unwrap_err();
        assert!(matches!(err, Error::InsufficientShares { present: 1, required: 2 }));
    }

    #[test]
    fn shape_mismatch_is_usage() {
        let published = vec![vec![1, 0]];
        let r = [0u8, 1];
        assert!(matches!(reconstruct(&published, &[Some(&r), Some(&r)]), Err(Error::Usage(_))));
    }
}
