//! Data-driven downlink link budget.
//!
//! A budget is an ordered list of signed line items plus the carrier and
//! service target. Evaluation produces EIRP, the SINR the target needs, the
//! receiver sensitivity, the minimum NRSRP (per resource element) at the UE
//! and the maximum allowed path loss.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio_math::{required_sinr_for_throughput, thermal_noise, CarrierConfig};

pub const DEFAULT_EFFICIENCY: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    /// Conducted transmit power, dBm.
    TxPowerDbm,
    GainDb,
    LossDb,
    MarginDb,
}

/// Which end of the link an item belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Tx,
    Rx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLineItem {
    pub name: String,
    pub kind: ItemKind,
    /// Required for gains and losses, ignored for transmit power and margins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    pub value_db: f64,
}

impl BudgetLineItem {
    pub fn new(name: impl Into<String>, kind: ItemKind, side: Option<Side>, value_db: f64) -> Self {
        BudgetLineItem {
            name: name.into(),
            kind,
            side,
            value_db,
        }
    }
}

fn default_efficiency() -> f64 {
    DEFAULT_EFFICIENCY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub carrier: CarrierConfig,
    pub target_throughput_mbps: f64,
    pub layers: u32,
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
    pub ue_noise_figure_db: f64,
    pub items: Vec<BudgetLineItem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetResult {
    pub eirp_dbm: f64,
    pub required_sinr_db: f64,
    /// Wideband sensitivity: noise floor plus required SINR.
    pub receiver_sensitivity_dbm: f64,
    /// Wideband-consistent: `eirp − (required_nrsrp + 10·log10(subcarriers))`,
    /// which equals `eirp − sensitivity − margins − rx losses + rx gains`.
    pub mapl_db: f64,
    /// Per resource element.
    pub required_nrsrp_dbm: f64,
}

impl LinkBudget {
    pub fn from_json(text: &str) -> Result<Self> {
        let b: LinkBudget =
            serde_json::from_str(text).map_err(|e| Error::config(format!("budget config: {e}")))?;
        b.validate()?;
        Ok(b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("budget serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.carrier.validate()?;
        if self.items.is_empty() {
            return Err(Error::config("budget has no line items"));
        }
        if !(self.target_throughput_mbps.is_finite() && self.target_throughput_mbps > 0.0) {
            return Err(Error::config(format!(
                "target throughput must be positive, got {}",
                self.target_throughput_mbps
            )));
        }
        if self.layers == 0 {
            return Err(Error::config("layers must be at least 1"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::config(format!("efficiency must be in (0, 1], got {}", self.efficiency)));
        }
        let tx_count = self.items.iter().filter(|i| i.kind == ItemKind::TxPowerDbm).count();
        match tx_count {
            0 => return Err(Error::config("budget has no transmit power item")),
            1 => {}
            n => return Err(Error::config(format!("budget has {n} transmit power items, expected one"))),
        }
        for item in &self.items {
            if !item.value_db.is_finite() {
                return Err(Error::config(format!("item '{}' has a non-finite value", item.name)));
            }
            match item.kind {
                ItemKind::LossDb | ItemKind::MarginDb if item.value_db < 0.0 => {
                    return Err(Error::config(format!(
                        "item '{}' is a loss or margin and must be nonnegative, got {}",
                        item.name, item.value_db
                    )));
                }
                ItemKind::GainDb | ItemKind::LossDb if item.side.is_none() => {
                    return Err(Error::config(format!("item '{}' needs a side (tx or rx)", item.name)));
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn sum(&self, kind: ItemKind, side: Option<Side>) -> f64 {
        self.items
            .iter()
            .filter(|i| i.kind == kind && (side.is_none() || i.side == side))
            .map(|i| i.value_db)
            .sum()
    }

    /// Same budget with a different service target.
    pub fn with_target(&self, throughput_mbps: f64) -> LinkBudget {
        LinkBudget {
            target_throughput_mbps: throughput_mbps,
            ..self.clone()
        }
    }
}

pub fn evaluate_budget(budget: &LinkBudget) -> Result<BudgetResult> {
    budget.validate()?;
    let tx_power = budget.sum(ItemKind::TxPowerDbm, None);
    let eirp = tx_power + budget.sum(ItemKind::GainDb, Some(Side::Tx)) - budget.sum(ItemKind::LossDb, Some(Side::Tx));

    let required_sinr = required_sinr_for_throughput(
        budget.target_throughput_mbps,
        budget.carrier.bandwidth_mhz,
        budget.layers,
        budget.efficiency,
    )?;
    let sensitivity = thermal_noise(budget.carrier.bandwidth_mhz, budget.ue_noise_figure_db)? + required_sinr;

    let rx_adjust = budget.sum(ItemKind::MarginDb, None) + budget.sum(ItemKind::LossDb, Some(Side::Rx))
        - budget.sum(ItemKind::GainDb, Some(Side::Rx));
    let per_re = budget.carrier.per_re_offset_db();
    let required_nrsrp = sensitivity + rx_adjust - per_re;
    let mapl = eirp - (required_nrsrp + per_re);

    Ok(BudgetResult {
        eirp_dbm: eirp,
        required_sinr_db: required_sinr,
        receiver_sensitivity_dbm: sensitivity,
        mapl_db: mapl,
        required_nrsrp_dbm: required_nrsrp,
    })
}

pub fn required_nrsrp_for_throughput(budget: &LinkBudget, throughput_mbps: f64) -> Result<f64> {
    if !(throughput_mbps.is_finite() && throughput_mbps > 0.0) {
        return Err(Error::domain(format!("throughput must be positive, got {throughput_mbps}")));
    }
    Ok(evaluate_budget(&budget.with_target(throughput_mbps))?.required_nrsrp_dbm)
}

/// Human-readable table of the line items and the evaluated result.
pub fn format_budget_table(budget: &LinkBudget, result: &BudgetResult) -> String {
    let mut out = String::new();
    let width = budget
        .items
        .iter()
        .map(|i| i.name.len())
        .max()
        .unwrap_or(0)
        .max(32);
    let _ = writeln!(
        out,
        "carrier: {} MHz @ {} MHz, {} subcarriers, {:?}; target {} Mbps over {} layer(s), efficiency {}",
        budget.carrier.bandwidth_mhz,
        budget.carrier.center_freq_mhz,
        budget.carrier.subcarrier_count,
        budget.carrier.duplex,
        budget.target_throughput_mbps,
        budget.layers,
        budget.efficiency
    );
    let _ = writeln!(out, "{:<width$}  {:<6} {:<4} {:>10}", "item", "kind", "side", "value");
    for item in &budget.items {
        let (kind, unit) = match item.kind {
            ItemKind::TxPowerDbm => ("power", "dBm"),
            ItemKind::GainDb => ("gain", "dB"),
            ItemKind::LossDb => ("loss", "dB"),
            ItemKind::MarginDb => ("margin", "dB"),
        };
        let side = match item.side {
            Some(Side::Tx) => "tx",
            Some(Side::Rx) => "rx",
            None => "-",
        };
        let _ = writeln!(out, "{:<width$}  {:<6} {:<4} {:>10.2} {unit}", item.name, kind, side, item.value_db);
    }
    let rows = [
        ("UE noise figure", budget.ue_noise_figure_db, "dB"),
        ("EIRP", result.eirp_dbm, "dBm"),
        ("required SINR", result.required_sinr_db, "dB"),
        ("receiver sensitivity (wideband)", result.receiver_sensitivity_dbm, "dBm"),
        ("maximum allowed path loss", result.mapl_db, "dB"),
        ("required NRSRP (per RE)", result.required_nrsrp_dbm, "dBm"),
    ];
    for (name, v, unit) in rows {
        let _ = writeln!(out, "{:<width$}  {:>22.2} {unit}", name, v);
    }
    out
}
