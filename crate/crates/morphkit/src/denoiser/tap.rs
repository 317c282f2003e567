//! Attention taps: capture Q/K/V from a forward pass and inject replacement
//! K/V into the next one. The morphing mechanisms are built on these hooks.

use crate::numerics::Tensor;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AttnKind {
    SelfAttn,
    CrossAttn,
}

impl AttnKind {
    fn index(self) -> usize {
        match self {
            AttnKind::SelfAttn => 0,
            AttnKind::CrossAttn => 1,
        }
    }
}

/// Captured projections for one (block, kind).
#[derive(Clone, Debug)]
pub struct TapEntry {
    /// Absent when only K/V were projected (the pre-pass of fused attention).
    pub q: Option<Tensor>,
    pub k: Tensor,
    pub v: Tensor,
}

/// Per-sampling-task capture/injection state. Writing a replacement affects
/// only the next forward pass of the matching (block, kind); captures are
/// overwritten every pass and cleared between timesteps.
#[derive(Clone, Debug)]
pub struct AttentionTap {
    captured: Vec<Option<TapEntry>>,
    pending: Vec<Option<(Tensor, Tensor)>>,
}

impl AttentionTap {
    pub fn new(n_blocks: usize) -> Self {
        Self { captured: vec![None; n_blocks * 2], pending: vec![None; n_blocks * 2] }
    }

    fn slot(&self, block: usize, kind: AttnKind) -> usize {
        block * 2 + kind.index()
    }

    pub fn clear(&mut self) {
        for c in &mut self.captured {
            *c = None;
        }
        for p in &mut self.pending {
            *p = None;
        }
    }

    pub fn record(&mut self, block: usize, kind: AttnKind, q: Option<Tensor>, k: Tensor, v: Tensor) {
        let slot = self.slot(block, kind);
        self.captured[slot] = Some(TapEntry { q, k, v });
    }

    pub fn get(&self, block: usize, kind: AttnKind) -> Option<&TapEntry> {
        self.captured[self.slot(block, kind)].as_ref()
    }

    /// Queue replacement K/V for the next forward pass of (block, kind).
    pub fn write(&mut self, block: usize, kind: AttnKind, k: Tensor, v: Tensor) {
        let slot = self.slot(block, kind);
        self.pending[slot] = Some((k, v));
    }

    pub(crate) fn take_pending(&mut self, block: usize, kind: AttnKind) -> Option<(Tensor, Tensor)> {
        let slot = self.slot(block, kind);
        self.pending[slot].take()
    }
}
