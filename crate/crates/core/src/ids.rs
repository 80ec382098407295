use std::fmt;

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Transmitter identifier.
    TxId
);
id_type!(
    /// Receiving point identifier.
    RxId
);
id_type!(
    /// Broadcast network identifier.
    NetId
);
id_type!(
    /// A frequency channel, in kHz. Models decompose into one block per channel.
    Channel
);

/// A (receiving point, network) pair; the unit of service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey {
    pub receiver: RxId,
    pub network: NetId,
}

impl PairKey {
    pub fn new(receiver: RxId, network: NetId) -> Self {
        Self { receiver, network }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.receiver, self.network)
    }
}
