use std::collections::BTreeMap;

use super::{Amount, AppSpec, Id, ModelError, Placement};

/// Hardware allocated per node. Zero entries are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct HwLedger(BTreeMap<Id, Amount>);

impl HwLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, node: &str) -> Amount {
        self.0.get(node).copied().unwrap_or(Amount::ZERO)
    }

    pub fn allocate(&mut self, node: &Id, amount: Amount) {
        if amount.is_zero() {
            return;
        }
        *self.0.entry(node.clone()).or_default() = self.get(node) + amount;
    }

    pub fn release(&mut self, node: &Id, amount: Amount) -> Result<(), ModelError> {
        if amount.is_zero() {
            return Ok(());
        }
        let left = self.get(node).checked_sub(amount).ok_or_else(|| ModelError::LedgerUnderflow(node.to_string()))?;
        if left.is_zero() {
            self.0.remove(node);
        } else {
            self.0.insert(node.clone(), left);
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Id, Amount)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<Id>> FromIterator<(K, Amount)> for HwLedger {
    fn from_iter<I: IntoIterator<Item = (K, Amount)>>(iter: I) -> Self {
        let mut l = HwLedger::new();
        for (k, v) in iter {
            l.allocate(&k.into(), v);
        }
        l
    }
}

/// Bandwidth allocated per directed node pair. Zero entries are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BwLedger(BTreeMap<(Id, Id), Amount>);

impl BwLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, src: &Id, dst: &Id) -> Amount {
        self.0.get(&(src.clone(), dst.clone())).copied().unwrap_or(Amount::ZERO)
    }

    pub fn allocate(&mut self, src: &Id, dst: &Id, amount: Amount) {
        if amount.is_zero() {
            return;
        }
        *self.0.entry((src.clone(), dst.clone())).or_default() = self.get(src, dst) + amount;
    }

    pub fn release(&mut self, src: &Id, dst: &Id, amount: Amount) -> Result<(), ModelError> {
        if amount.is_zero() {
            return Ok(());
        }
        let key = (src.clone(), dst.clone());
        let left = self
            .get(src, dst)
            .checked_sub(amount)
            .ok_or_else(|| ModelError::LedgerUnderflow(format!("{src} -> {dst}")))?;
        if left.is_zero() {
            self.0.remove(&key);
        } else {
            self.0.insert(key, left);
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Id, &Id, Amount)> {
        self.0.iter().map(|((s, d), v)| (s, d, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<Id>> FromIterator<(K, K, Amount)> for BwLedger {
    fn from_iter<I: IntoIterator<Item = (K, K, Amount)>>(iter: I) -> Self {
        let mut l = BwLedger::new();
        for (s, d, v) in iter {
            l.allocate(&s.into(), &d.into(), v);
        }
        l
    }
}

/// Recomputes the allocations a placement implies for `app`.
///
/// Interactions between colocated services allocate no bandwidth.
pub fn derive_ledgers(app: &AppSpec, p: &Placement) -> Result<(HwLedger, BwLedger), ModelError> {
    let mut hw = HwLedger::new();
    for a in p.iter() {
        let s = app.service(&a.service).ok_or_else(|| ModelError::UnknownService(a.service.clone()))?;
        hw.allocate(&a.node, s.hw_reqs);
    }
    let mut bw = BwLedger::new();
    for r in app.s2s() {
        if let (Some(n1), Some(n2)) = (p.node_of(&r.from), p.node_of(&r.to)) {
            if n1 != n2 {
                bw.allocate(n1, n2, r.min_bandwidth);
            }
        }
    }
    Ok((hw, bw))
}
