use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    User,
    Role,
    SecurityGroup,
    Flavor,
    Image,
    Network,
    Subnet,
    Port,
    Router,
    Server,
    Volume,
}

impl EntityKind {
    pub const COUNT: usize = 11;

    pub const ALL: [EntityKind; Self::COUNT] = [
        EntityKind::User,
        EntityKind::Role,
        EntityKind::SecurityGroup,
        EntityKind::Flavor,
        EntityKind::Image,
        EntityKind::Network,
        EntityKind::Subnet,
        EntityKind::Port,
        EntityKind::Router,
        EntityKind::Server,
        EntityKind::Volume,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::User => "User",
            EntityKind::Role => "Role",
            EntityKind::SecurityGroup => "SecurityGroup",
            EntityKind::Flavor => "Flavor",
            EntityKind::Image => "Image",
            EntityKind::Network => "Network",
            EntityKind::Subnet => "Subnet",
            EntityKind::Port => "Port",
            EntityKind::Router => "Router",
            EntityKind::Server => "Server",
            EntityKind::Volume => "Volume",
        }
    }

    /// Error name reported when a creation of this kind is rejected by quota.
    pub fn quota_error_name(self) -> String {
        format!("{}QuotaExceeded", self.as_str())
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown entity kind {s:?}"))
    }
}

/// Per-kind entity counter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct EntityCounts([u32; EntityKind::COUNT]);

impl EntityCounts {
    pub fn get(&self, kind: EntityKind) -> u32 {
        self.0[kind.index()]
    }

    pub fn set(&mut self, kind: EntityKind, n: u32) {
        self.0[kind.index()] = n;
    }

    pub fn increment(&mut self, kind: EntityKind) {
        self.0[kind.index()] += 1;
    }

    /// Returns false (and leaves the count alone) when it is already zero.
    pub fn decrement(&mut self, kind: EntityKind) -> bool {
        let slot = &mut self.0[kind.index()];
        if *slot == 0 {
            return false;
        }
        *slot -= 1;
        true
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&n| n == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityKind, u32)> + '_ {
        EntityKind::ALL.into_iter().map(|k| (k, self.get(k)))
    }

    pub fn add_assign(&mut self, other: &EntityCounts) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
    }
}

// Serialized as a map of the non-zero counts.
impl Serialize for EntityCounts {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<EntityKind, u32> = self.iter().filter(|&(_, n)| n > 0).collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EntityCounts {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<EntityKind, u32>::deserialize(deserializer)?;
        let mut counts = EntityCounts::default();
        for (k, n) in map {
            counts.set(k, n);
        }
        Ok(counts)
    }
}

pub const DEFAULT_QUOTA: u32 = 10;

/// The default project quotas: 10 instances, security groups, routers and volumes.
pub fn default_quotas() -> BTreeMap<EntityKind, u32> {
    [
        EntityKind::SecurityGroup,
        EntityKind::Router,
        EntityKind::Server,
        EntityKind::Volume,
    ]
    .into_iter()
    .map(|k| (k, DEFAULT_QUOTA))
    .collect()
}
