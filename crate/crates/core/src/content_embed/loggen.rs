use super::{ConsumptionRecord, ContentId, EmbedError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Planted-cluster consumption log: users and items are split into clusters
/// and a user mostly consumes items of its own cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogSpec {
    pub users: u32,
    pub items: u32,
    pub clusters: u32,
    /// Consumptions per user.
    pub history_len: u32,
    /// Probability that a consumption picks an item outside the user's cluster.
    pub inter_cluster_prob: f64,
    pub seed: u64,
}

impl Default for LogSpec {
    fn default() -> Self {
        Self {
            users: 200,
            items: 200,
            clusters: 2,
            history_len: 20,
            inter_cluster_prob: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLog {
    pub records: Vec<ConsumptionRecord>,
    pub user_cluster: Vec<u32>,
    pub item_cluster: Vec<u32>,
}

impl LogSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("users", self.users),
            ("items", self.items),
            ("clusters", self.clusters),
            ("history_len", self.history_len),
        ] {
            if v == 0 {
                errs.push(format!("{name} must be > 0"));
            }
        }
        if self.clusters > self.items {
            errs.push("clusters must not exceed items".into());
        }
        if !(0.0..=1.0).contains(&self.inter_cluster_prob) {
            errs.push("inter_cluster_prob must lie in [0, 1]".into());
        }
        errs
    }

    pub fn item_cluster(&self, item: u32) -> u32 {
        (item as u64 * self.clusters as u64 / self.items as u64) as u32
    }

    fn cluster_range(&self, k: u32) -> (u32, u32) {
        let lo = (k as u64 * self.items as u64).div_ceil(self.clusters as u64) as u32;
        let hi = ((k as u64 + 1) * self.items as u64).div_ceil(self.clusters as u64) as u32;
        (lo, hi)
    }
}

pub fn generate_log(spec: &LogSpec) -> Result<SyntheticLog, EmbedError> {
    let errs = spec.validate();
    if !errs.is_empty() {
        return Err(EmbedError::Config(errs.join("; ")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let user_cluster: Vec<u32> = (0..spec.users).map(|u| u % spec.clusters).collect();
    let item_cluster: Vec<u32> = (0..spec.items).map(|i| spec.item_cluster(i)).collect();
    let mut records = Vec::with_capacity((spec.users * spec.history_len) as usize);
    for u in 0..spec.users {
        let home = user_cluster[u as usize];
        let mut ts = 0u64;
        for _ in 0..spec.history_len {
            let cluster = if spec.clusters > 1 && rng.gen_bool(spec.inter_cluster_prob) {
                let k = rng.gen_range(0..spec.clusters - 1);
                if k >= home {
                    k + 1
                } else {
                    k
                }
            } else {
                home
            };
            let (lo, hi) = spec.cluster_range(cluster);
            ts += rng.gen_range(1..=3600);
            records.push(ConsumptionRecord {
                user_id: u,
                content_id: ContentId(rng.gen_range(lo..hi)),
                timestamp: ts,
            });
        }
    }
    Ok(SyntheticLog {
        records,
        user_cluster,
        item_cluster,
    })
}

impl SyntheticLog {
    /// Ground-truth labels as CSV `kind,id,cluster` with kind `user` or `item`.
    pub fn write_labels_csv<W: std::io::Write>(&self, out: W) -> Result<(), EmbedError> {
        let io = |e: csv::Error| EmbedError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "id", "cluster"]).map_err(io)?;
        for (i, k) in self.user_cluster.iter().enumerate() {
            w.write_record(["user", &i.to_string(), &k.to_string()]).map_err(io)?;
        }
        for (i, k) in self.item_cluster.iter().enumerate() {
            w.write_record(["item", &i.to_string(), &k.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| EmbedError::Io(e.to_string()))
    }
}
