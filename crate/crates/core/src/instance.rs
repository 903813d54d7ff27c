use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bundle::Bundle;
use crate::error::{input, Error, Result};
use crate::valuations::Valuation;

/// `n` bidders over `m` items, one valuation per bidder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub m: usize,
    pub bidders: Vec<Valuation>,
}

impl Instance {
    pub fn new(m: usize, bidders: Vec<Valuation>) -> Result<Self> {
        let instance = Instance { m, bidders };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bidders.is_empty() {
            return input("instance needs at least one bidder");
        }
        for (i, v) in self.bidders.iter().enumerate() {
            v.validate(self.m).map_err(|e| Error::Input(format!("bidder {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.bidders.len()
    }

    pub fn valuation(&self, i: usize) -> &Valuation {
        &self.bidders[i]
    }

    pub fn all_items(&self) -> Bundle {
        Bundle::full(self.m)
    }

    /// The same instance with bidder `i` reporting `report` instead.
    pub fn with_report(&self, i: usize, report: Valuation) -> Instance {
        let mut bidders = self.bidders.clone();
        bidders[i] = report;
        Instance { m: self.m, bidders }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let instance: Instance = serde_json::from_str(text).map_err(|e| Error::Input(format!("instance json: {e}")))?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn load(path: &Path) -> std::io::Result<Result<Self>> {
        let text = std::fs::read_to_string(path)?;
        Ok(Instance::from_json(&text))
    }
}
