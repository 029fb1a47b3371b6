//! Pareto-efficient model selection over (top-5 accuracy, FLOPs).
//!
//! Accuracy is maximized and FLOPs minimized. A card dominates another when it
//! is at least as good on both objectives and strictly better on one, so two
//! cards with identical objectives never dominate each other and both stay on
//! the frontier.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParetoError {
    #[error("card set is empty")]
    EmptyInput,
    #[error("duplicate card name `{0}`")]
    DuplicateName(String),
    #[error("card `{name}`: {reason}")]
    InvalidCard { name: String, reason: &'static str },
}

/// A pretrained model as a point in objective space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCard {
    pub name: String,
    pub top5_accuracy: f64,
    pub flops: u64,
}

impl ModelCard {
    pub fn new(name: impl Into<String>, top5_accuracy: f64, flops: u64) -> Result<Self, ParetoError> {
        let name = name.into();
        if !(top5_accuracy > 0.0 && top5_accuracy <= 1.0) {
            return Err(ParetoError::InvalidCard { name, reason: "top-5 accuracy must be in (0, 1]" });
        }
        if flops == 0 {
            return Err(ParetoError::InvalidCard { name, reason: "flops must be positive" });
        }
        Ok(Self { name, top5_accuracy, flops })
    }
}

/// A collection of cards with unique names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CardSet {
    cards: Vec<ModelCard>,
}

impl CardSet {
    pub fn new(cards: Vec<ModelCard>) -> Result<Self, ParetoError> {
        let mut seen = BTreeSet::new();
        for c in &cards {
            if !seen.insert(c.name.as_str()) {
                return Err(ParetoError::DuplicateName(c.name.clone()));
            }
        }
        Ok(Self { cards })
    }

    pub fn cards(&self) -> &[ModelCard] {
        &self.cards
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&ModelCard> {
        self.cards.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.cards.iter().map(|c| c.name.as_str())
    }

    pub fn into_cards(self) -> Vec<ModelCard> {
        self.cards
    }
}

pub fn dominates(a: &ModelCard, b: &ModelCard) -> bool {
    a.top5_accuracy >= b.top5_accuracy && a.flops <= b.flops && (a.top5_accuracy > b.top5_accuracy || a.flops < b.flops)
}

/// Frontier ordering: FLOPs ascending, then accuracy descending, then name.
fn frontier_order(a: &ModelCard, b: &ModelCard) -> Ordering {
    a.flops.cmp(&b.flops).then(b.top5_accuracy.total_cmp(&a.top5_accuracy)).then_with(|| a.name.cmp(&b.name))
}

/// Returns every card not dominated by another card, sorted by ascending FLOPs.
///
/// Runs in `O(n log n)`: after sorting by FLOPs, a card survives iff it has
/// the best accuracy within its FLOPs group and beats every strictly cheaper card.
pub fn pareto_frontier(set: &CardSet) -> Result<CardSet, ParetoError> {
    if set.is_empty() {
        return Err(ParetoError::EmptyInput);
    }
    let mut sorted: Vec<&ModelCard> = set.cards.iter().collect();
    sorted.sort_by(|a, b| frontier_order(a, b));

    let mut frontier = Vec::new();
    let mut best_cheaper = f64::NEG_INFINITY;
    let mut start = 0;
    while start < sorted.len() {
        let flops = sorted[start].flops;
        let end = start + sorted[start..].iter().take_while(|c| c.flops == flops).count();
        // Groups are sorted by accuracy descending, so the head holds the max.
        let group_best = sorted[start].top5_accuracy;
        if group_best > best_cheaper {
            frontier
                .extend(sorted[start..end].iter().take_while(|c| c.top5_accuracy == group_best).map(|c| (*c).clone()));
        }
        best_cheaper = best_cheaper.max(group_best);
        start = end;
    }
    Ok(CardSet { cards: frontier })
}

/// Outcome of [`select_for_budget`].
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSelection {
    pub card: ModelCard,
    /// Set when no frontier card fits and the cheapest one was returned instead.
    pub over_budget: bool,
}

/// Most accurate frontier card within `max_flops`, falling back to the
/// cheapest frontier card (flagged) when nothing fits.
pub fn select_for_budget(set: &CardSet, max_flops: u64) -> Result<BudgetSelection, ParetoError> {
    let frontier = pareto_frontier(set)?;
    let within = frontier
        .cards
        .iter()
        .filter(|c| c.flops <= max_flops)
        .max_by(|a, b| a.top5_accuracy.total_cmp(&b.top5_accuracy).then_with(|| b.flops.cmp(&a.flops)));
    match within {
        Some(card) => Ok(BudgetSelection { card: card.clone(), over_budget: false }),
        None => Ok(BudgetSelection { card: frontier.cards[0].clone(), over_budget: true }),
    }
}
