//! Extended Definition of Done, computed from registry evidence.

use crate::governance::Tier;
use crate::ids::ItemId;
use crate::quality::{ChecklistSet, DetectedIn};
use crate::registry::events::Settlement;
use crate::registry::snapshot::{RegistrySnapshot, SchemaError};

use super::effort::DoDState;

/// DoD conditions for an item using the bundled checklist templates.
pub fn dod_check(item: &ItemId, snapshot: &RegistrySnapshot) -> Result<DoDState, SchemaError> {
    dod_check_with(item, snapshot, ChecklistSet::bundled())
}

/// DoD conditions for an item.
///
/// * validated per tier: Tier 1 and AI-restricted work is human-executed, so
///   this holds trivially. Tier 2 needs a review outcome whose checklist
///   answers every check of the type's template. Tier 3 and Tier 4 need a
///   review of the item or a sampling outcome for the type since the item
///   was classified.
/// * provenance recorded: required for Tier 2 and above.
/// * owner confirmed: an owner_assigned event names the current owner.
/// * integration verified: an explicit integration_verified event.
/// * deficiencies: no findings on the latest review, or a settlement
///   recorded after it.
pub fn dod_check_with(
    item: &ItemId,
    snapshot: &RegistrySnapshot,
    checklists: &ChecklistSet,
) -> Result<DoDState, SchemaError> {
    let rec = snapshot.item(item)?;
    let tt = snapshot.task_type(&rec.task_type_id)?;
    let outcomes: Vec<_> = snapshot.outcomes_for(item).collect();

    let validated_per_tier = match rec.tier {
        Tier::AiRestricted | Tier::Tier1Pilot | Tier::Tier1 => true,
        Tier::Tier2 => {
            let template = checklists.get(tt.checklist_domain);
            outcomes.iter().any(|o| {
                o.outcome.detected_in == DetectedIn::Review
                    && template.missing_checks(&o.outcome.checklist_results).is_empty()
            })
        }
        Tier::Tier3 | Tier::Tier4 => {
            outcomes.iter().any(|o| o.outcome.detected_in.is_validation())
                || snapshot.outcomes.iter().any(|o| {
                    o.task_type_id == rec.task_type_id
                        && o.outcome.detected_in == DetectedIn::Sampling
                        && o.cycle >= rec.classified_cycle
                })
        }
    };

    let provenance_recorded = !rec.tier.requires_owner() || snapshot.provenance.contains_key(item);

    let owner_confirmed = match (&rec.owner, &rec.confirmed_owner) {
        (Some(o), Some(c)) => o == c,
        _ => false,
    };

    let latest = outcomes.iter().max_by_key(|o| o.event_id);
    let open_findings = latest.is_some_and(|o| !o.outcome.findings.is_empty());
    let settled_after = match (latest, &rec.settled) {
        (Some(o), Some(s)) => s.event_id > o.event_id,
        _ => false,
    };
    let accepted_risk_note = rec
        .settled
        .as_ref()
        .filter(|s| settled_after && s.resolution == Settlement::AcceptedRisk)
        .map(|s| s.note.clone());

    Ok(DoDState {
        validated_per_tier,
        provenance_recorded,
        owner_confirmed,
        integration_verified: rec.integration_verified,
        deficiencies_resolved_or_accepted: !open_findings || settled_after,
        accepted_risk_note,
    })
}
