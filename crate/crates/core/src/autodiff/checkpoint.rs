use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const PARAM_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Serializable snapshot of a [`ParamSet`]. Values round-trip bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCheckpoint {
    pub format_version: u32,
    pub seed: u64,
    pub params: Vec<ParamRecord>,
}

impl From<&ParamSet> for ParamCheckpoint {
    fn from(set: &ParamSet) -> Self {
        Self {
            format_version: PARAM_FORMAT_VERSION,
            seed: set.seed(),
            params: set
                .iter()
                .map(|(_, name, t)| ParamRecord {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                    values: t.values().to_vec(),
                })
                .collect(),
        }
    }
}

impl ParamCheckpoint {
    pub fn into_params(self) -> Result<ParamSet> {
        if self.format_version != PARAM_FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported parameter format version {}",
                self.format_version
            )));
        }
        let mut set = ParamSet::new(self.seed);
        for rec in self.params {
            set.insert(rec.name, Tensor::new(rec.shape, rec.values)?)?;
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut set = ParamSet::new(9);
        set.weight("w", 3, 4, &mut rng).unwrap();
        set.embedding("e", 5, 2, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        ParamCheckpoint::from(&set).save(&path).unwrap();
        let back = ParamCheckpoint::load(&path).unwrap().into_params().unwrap();
        assert_eq!(back.seed(), 9);
        for ((_, n1, t1), (_, n2, t2)) in set.iter().zip(back.iter()) {
            assert_eq!(n1, n2);
            assert_eq!(t1.shape(), t2.shape());
            let bits1: Vec<u64> = t1.values().iter().map(|v| v.to_bits()).collect();
            let bits2: Vec<u64> = t2.values().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits1, bits2);
        }
    }
}
