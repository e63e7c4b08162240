use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::adversary::AttackModel;
use crate::error::{usage, Error, Result};
use crate::protocol::{run_session, OpPolicy, QubitCounts, Secret, SessionConfig};
use crate::seed::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolId {
    Ref34,
    Ref35,
    Ref36,
    ThisWork,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 4] = [Self::Ref34, Self::Ref35, Self::Ref36, Self::ThisWork];

    pub fn label(self) -> &'static str {
        match self {
            Self::Ref34 => "ref34",
            Self::Ref35 => "ref35",
            Self::Ref36 => "ref36",
            Self::ThisWork => "this_work",
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProtocolId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| usage(format!("unknown protocol id {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EfficiencyEntry {
    pub protocol: ProtocolId,
    pub n: usize,
    pub eta: Ratio<u128>,
}

/// Qubit efficiency `c/q` of each scheme for `n` parties.
pub fn qubit_efficiency(protocol: ProtocolId, n: usize) -> Result<EfficiencyEntry> {
    if n == 0 {
        return Err(Error::Domain("party count must be at least 1".into()));
    }
    let m = n as u128;
    let den = match protocol {
        ProtocolId::Ref34 => {
            let exp = u32::try_from(n).ok().filter(|&e| e < 64).ok_or_else(|| Error::Domain(format!("4^{n} overflows")))?;
            4u128.pow(exp)
        }
        ProtocolId::Ref35 => 6 * m + 4,
        ProtocolId::Ref36 => 5 * m,
        ProtocolId::ThisWork => 3 * m + 1,
    };
    Ok(EfficiencyEntry { protocol, n, eta: Ratio::new(1, den) })
}

/// Every protocol for every `n` in the range, grouped by protocol.
pub fn efficiency_table(ns: impl IntoIterator<Item = usize> + Clone) -> Result<Vec<EfficiencyEntry>> {
    let mut rows = Vec::new();
    for protocol in ProtocolId::ALL {
        for n in ns.clone() {
            rows.push(qubit_efficiency(protocol, n)?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EfficiencyDerivation {
    /// Shared classical values.
    pub c: u128,
    /// Qubits generated in the session.
    pub q: u128,
    pub eta: Ratio<u128>,
    pub counts: QubitCounts,
    pub slots_created: u64,
}

/// Counts the qubits an honest session actually generates. Parties flip
/// exactly half their positions, so the fresh-qubit count is `nL`.
pub fn derive_efficiency_this_work(n: usize, len: usize, seed: u64) -> Result<EfficiencyDerivation> {
    let mut config = SessionConfig::new(n, len, seed);
    config.op_policy = OpPolicy::Balanced;
    config.record_transcript = false;
    let secret = Secret::random(n, len, &mut stream_rng(seed, u64::MAX - 1))?;
    let result = run_session(&config, &secret, &AttackModel::None)?;
    if result.outcome.secret() != Some(&secret) {
        return Err(Error::Validation("efficiency session did not reconstruct the secret".into()));
    }
    let c = len as u128;
    let q = u128::from(result.counts.total());
    Ok(EfficiencyDerivation {
        c,
        q,
        eta: Ratio::new(c, q),
        counts: result.counts,
        slots_created: result.slots_created,
    })
}

/// `q = L(n+1) + 2Ln`.
pub fn formula_qubits(n: usize, len: usize) -> u128 {
    let (n, l) = (n as u128, len as u128);
    l * (n + 1) + 2 * l * n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_ids() {
        assert_eq!("this_work".parse::<ProtocolId>().unwrap(), ProtocolId::ThisWork);
        assert!(matches!("ref37".parse::<ProtocolId>(), Err(Error::Usage(_))));
    }

    #[test]
    fn small_session_count() {
        let d = derive_efficiency_this_work(2, 4, 0).unwrap();
        assert_eq!((d.c, d.q), (4, 28));
        assert_eq!(d.eta, Ratio::new(1, 7));
        assert_eq!(u128::from(d.slots_created), d.q);
        let d = derive_efficiency_this_work(1, 1, 0).unwrap();
        assert_eq!((d.c, d.q), (1, 4));
    }

    #[test]
    fn zero_parties_rejected() {
        assert!(qubit_efficiency(ProtocolId::ThisWork, 0).is_err());
        assert!(qubit_efficiency(ProtocolId::Ref34, 64).is_err());
    }
}
