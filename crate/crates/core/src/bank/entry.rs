use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::predict::Scheme;
use crate::error::{Error, Result};
use crate::gp::KernelSpec;

/// One kernel per channel. The variant fixes the channel pair, so a direct
/// bank cannot hold speed/heading kernels or the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum ChannelSpecs {
    Direct { x: KernelSpec, y: KernelSpec },
    Indirect { speed: KernelSpec, heading: KernelSpec },
}

impl ChannelSpecs {
    pub fn scheme(&self) -> Scheme {
        match self {
            ChannelSpecs::Direct { .. } => Scheme::Direct,
            ChannelSpecs::Indirect { .. } => Scheme::Indirect,
        }
    }

    pub fn from_pair(scheme: Scheme, first: KernelSpec, second: KernelSpec) -> Self {
        match scheme {
            Scheme::Direct => ChannelSpecs::Direct { x: first, y: second },
            Scheme::Indirect => ChannelSpecs::Indirect {
                speed: first,
                heading: second,
            },
        }
    }

    /// `(channel name, spec)` for both channels, in window order.
    pub fn named(&self) -> [(&'static str, KernelSpec); 2] {
        match *self {
            ChannelSpecs::Direct { x, y } => [("x", x), ("y", y)],
            ChannelSpecs::Indirect { speed, heading } => [("speed", speed), ("heading", heading)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedAt {
    pub trip_id: String,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    pub id: usize,
    pub specs: ChannelSpecs,
    pub created_at: CreatedAt,
    /// Creation counts as the first use.
    pub use_count: usize,
    pub total_persistency_s: f64,
}

/// Append-only collection of fitted kernel pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    pub scheme: Scheme,
    pub hybrid: bool,
    pub pte_threshold_m: f64,
    pub tw: usize,
    entries: Vec<BankEntry>,
}

impl KernelBank {
    pub fn new(scheme: Scheme, hybrid: bool, pte_threshold_m: f64, tw: usize) -> Self {
        Self {
            scheme,
            hybrid,
            pte_threshold_m,
            tw,
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[BankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&BankEntry> {
        self.entries.get(id)
    }

    pub(crate) fn get_mut(&mut self, id: usize) -> Option<&mut BankEntry> {
        self.entries.get_mut(id)
    }

    /// Append a new entry with the next id and return that id.
    pub fn push(&mut self, specs: ChannelSpecs, created_at: CreatedAt) -> Result<usize> {
        if specs.scheme() != self.scheme {
            return Err(Error::InvalidInput(format!(
                "cannot add {} kernels to a {} bank",
                specs.scheme(),
                self.scheme
            )));
        }
        let id = self.entries.len();
        self.entries.push(BankEntry {
            id,
            specs,
            created_at,
            use_count: 0,
            total_persistency_s: 0.0,
        });
        Ok(id)
    }

    pub fn to_records(&self) -> Vec<BankRecord> {
        self.entries
            .iter()
            .flat_map(|e| {
                e.specs.named().map(|(channel, spec)| BankRecord {
                    id: e.id,
                    scheme: self.scheme,
                    channel: channel.to_string(),
                    spec,
                    created_at: e.created_at.clone(),
                    use_count: e.use_count,
                    total_persistency_s: e.total_persistency_s,
                })
            })
            .collect()
    }

    /// Rebuild a bank from its file records. Every id must appear with both
    /// of its scheme's channels, and ids must be dense from 0.
    pub fn from_records(
        records: &[BankRecord],
        scheme: Scheme,
        hybrid: bool,
        pte_threshold_m: f64,
        tw: usize,
    ) -> Result<Self> {
        let mut bank = Self::new(scheme, hybrid, pte_threshold_m, tw);
        let names: [&str; 2] = match scheme {
            Scheme::Direct => ["x", "y"],
            Scheme::Indirect => ["speed", "heading"],
        };
        let n_ids = records.iter().map(|r| r.id + 1).max().unwrap_or(0);
        for id in 0..n_ids {
            let of_id: Vec<&BankRecord> = records.iter().filter(|r| r.id == id).collect();
            let find = |name: &str| -> Result<&BankRecord> {
                let hits: Vec<_> = of_id.iter().filter(|r| r.channel == name).collect();
                match hits.as_slice() {
                    [one] => Ok(one),
                    _ => Err(Error::InvalidInput(format!(
                        "bank entry {id} needs exactly one '{name}' record, found {}",
                        hits.len()
                    ))),
                }
            };
            let (a, b) = (find(names[0])?, find(names[1])?);
            if of_id.len() != 2 || of_id.iter().any(|r| r.scheme != scheme) {
                return Err(Error::InvalidInput(format!(
                    "bank entry {id} does not match scheme {scheme}"
                )));
            }
            a.spec.validate()?;
            b.spec.validate()?;
            bank.push(ChannelSpecs::from_pair(scheme, a.spec, b.spec), a.created_at.clone())?;
            let e = bank.get_mut(id).expect("just pushed");
            e.use_count = a.use_count;
            e.total_persistency_s = a.total_persistency_s;
        }
        Ok(bank)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.to_records())?;
        Ok(())
    }

    pub fn read_records<R: Read>(input: R) -> Result<Vec<BankRecord>> {
        Ok(serde_json::from_reader(input)?)
    }
}

/// One channel of one bank entry as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankRecord {
    pub id: usize,
    pub scheme: Scheme,
    pub channel: String,
    pub spec: KernelSpec,
    pub created_at: CreatedAt,
    pub use_count: usize,
    pub total_persistency_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: f64) -> KernelSpec {
        KernelSpec::new(v, 0.7, 0.3, 0.0, 1e-3).unwrap()
    }

    #[test]
    fn scheme_isolation() {
        let mut bank = KernelBank::new(Scheme::Direct, false, 0.5, 10);
        let indirect = ChannelSpecs::Indirect {
            speed: spec(1.0),
            heading: spec(1.0),
        };
        let at = CreatedAt {
            trip_id: "a".into(),
            t0: 0.9,
        };
        assert!(bank.push(indirect, at.clone()).is_err());
        assert_eq!(
            bank.push(
                ChannelSpecs::Direct {
                    x: spec(1.0),
                    y: spec(2.0)
                },
                at
            )
            .unwrap(),
            0
        );
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut bank = KernelBank::new(Scheme::Indirect, true, 0.3, 10);
        for i in 0..3 {
            let id = bank
                .push(
                    ChannelSpecs::Indirect {
                        speed: spec(0.1 + i as f64 / 3.0),
                        heading: spec(1.0 / 7.0),
                    },
                    CreatedAt {
                        trip_id: format!("t{i}"),
                        t0: 0.9 + i as f64 * 0.1,
                    },
                )
                .unwrap();
            bank.get_mut(id).unwrap().use_count = i + 1;
        }
        let mut buf = Vec::new();
        bank.write_json(&mut buf).unwrap();
        let records = KernelBank::read_records(buf.as_slice()).unwrap();
        assert_eq!(records.len(), 6);
        let back = KernelBank::from_records(&records, Scheme::Indirect, true, 0.3, 10).unwrap();
        assert_eq!(back, bank);
        assert!(KernelBank::from_records(&records, Scheme::Direct, true, 0.3, 10).is_err());
    }
}
