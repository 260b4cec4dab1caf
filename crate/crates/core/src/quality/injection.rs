//! Error-injection audits: known errors planted to measure reviewer detection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::outcome::{Severity, ValidationOutcome};
use crate::ids::{CampaignId, ItemId, PersonId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedError {
    pub item_id: ItemId,
    pub known_error: String,
    pub severity: Severity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionCampaign {
    pub campaign_id: CampaignId,
    pub owner: PersonId,
    pub planted: Vec<PlantedError>,
    pub detected: BTreeSet<ItemId>,
    pub closed: bool,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum InjectionError {
    #[error("campaign {0} has no planted errors")]
    Empty(CampaignId),
    #[error("campaign {0} is still open")]
    Open(CampaignId),
    #[error("campaign {0} is closed")]
    Closed(CampaignId),
    #[error("item {0} is already planted in this campaign")]
    DuplicateItem(ItemId),
}

impl InjectionCampaign {
    pub fn new(
        campaign_id: CampaignId,
        owner: PersonId,
        planted: Vec<PlantedError>,
    ) -> Result<Self, InjectionError> {
        if planted.is_empty() {
            return Err(InjectionError::Empty(campaign_id));
        }
        let mut seen = BTreeSet::new();
        for p in &planted {
            if !seen.insert(&p.item_id) {
                return Err(InjectionError::DuplicateItem(p.item_id.clone()));
            }
        }
        Ok(Self {
            campaign_id,
            owner,
            planted,
            detected: BTreeSet::new(),
            closed: false,
        })
    }

    pub fn is_planted(&self, item: &ItemId) -> bool {
        self.planted.iter().any(|p| &p.item_id == item)
    }

    /// Mark planted items as detected when a review outcome reports a finding.
    pub fn observe(&mut self, outcome: &ValidationOutcome) {
        if self.is_planted(&outcome.item_id) && !outcome.findings.is_empty() {
            self.detected.insert(outcome.item_id.clone());
        }
    }

    pub fn detection_rate(&self) -> f64 {
        self.detected.len() as f64 / self.planted.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub campaign_id: CampaignId,
    pub planted: usize,
    pub detected: usize,
    pub detection_rate: f64,
    pub missed: Vec<PlantedError>,
}

/// Detection report for a closed campaign, recomputed from the outcomes.
pub fn run_injection_audit<'a>(
    campaign: &InjectionCampaign,
    outcomes: impl IntoIterator<Item = &'a ValidationOutcome>,
) -> Result<AuditReport, InjectionError> {
    if campaign.planted.is_empty() {
        return Err(InjectionError::Empty(campaign.campaign_id.clone()));
    }
    if !campaign.closed {
        return Err(InjectionError::Open(campaign.campaign_id.clone()));
    }
    let mut c = campaign.clone();
    c.detected.clear();
    for o in outcomes {
        c.observe(o);
    }
    let missed: Vec<PlantedError> = c
        .planted
        .iter()
        .filter(|p| !c.detected.contains(&p.item_id))
        .cloned()
        .collect();
    Ok(AuditReport {
        campaign_id: c.campaign_id.clone(),
        planted: c.planted.len(),
        detected: c.detected.len(),
        detection_rate: c.detection_rate(),
        missed,
    })
}
