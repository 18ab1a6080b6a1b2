use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubLayer {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRole {
    Conv { layer: usize, sub_layer: SubLayer, index: usize },
    FullyConnected,
    /// Extra block appended after the readout block on discarded qubits.
    Spectator { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub role: BlockRole,
    pub qubits: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub layer: usize,
    pub active: Vec<usize>,
    pub first_sub_layer: Vec<(usize, usize)>,
    pub second_sub_layer: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolLayer {
    pub layer: usize,
    /// `(survivor, discarded)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    Conv(ConvLayer),
    Pool(PoolLayer),
}

/// Qubit layout of a QCNN: alternating convolution and pooling stages down
/// to two active qubits, then one fully connected block and a two-qubit
/// readout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcnnTopology {
    n_qubits: usize,
    stages: Vec<Stage>,
    fully_connected: (usize, usize),
    spectators: Vec<(usize, usize)>,
    #[serde(skip)]
    blocks: Vec<Block>,
}

/// Active-qubit count after pooling `active` qubits.
pub fn next_active_count(active: usize) -> usize {
    let target = active.div_ceil(2) + 1;
    target - target % 2
}

impl QcnnTopology {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits < 4 || !n_qubits.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "qubit count must be even and at least 4, got {n_qubits}"
            )));
        }
        let mut active: Vec<usize> = (0..n_qubits).collect();
        let mut stages = Vec::new();
        let mut layer = 1;
        while active.len() > 2 {
            let first: Vec<_> = active.chunks_exact(2).map(|p| (p[0], p[1])).collect();
            let second: Vec<_> = active[1..].chunks_exact(2).map(|p| (p[0], p[1])).collect();
            stages.push(Stage::Conv(ConvLayer {
                layer,
                active: active.clone(),
                first_sub_layer: first.clone(),
                second_sub_layer: second,
            }));
            let pooled = active.len() - next_active_count(active.len());
            let pairs = first[..pooled].to_vec();
            let survivors: Vec<usize> = active
                .iter()
                .copied()
                .filter(|q| !pairs.iter().any(|&(_, d)| d == *q))
                .collect();
            stages.push(Stage::Pool(PoolLayer { layer, pairs, survivors: survivors.clone() }));
            active = survivors;
            layer += 1;
        }
        let mut t = Self {
            n_qubits,
            stages,
            fully_connected: (active[0], active[1]),
            spectators: Vec::new(),
            blocks: Vec::new(),
        };
        t.blocks = t.collect_blocks();
        Ok(t)
    }

    fn collect_blocks(&self) -> Vec<Block> {
        let mut blocks = Vec::new();
        for stage in &self.stages {
            if let Stage::Conv(c) = stage {
                for (sub_layer, pairs) in [(SubLayer::First, &c.first_sub_layer), (SubLayer::Second, &c.second_sub_layer)] {
                    for (index, &qubits) in pairs.iter().enumerate() {
                        blocks.push(Block { role: BlockRole::Conv { layer: c.layer, sub_layer, index }, qubits });
                    }
                }
            }
        }
        blocks.push(Block { role: BlockRole::FullyConnected, qubits: self.fully_connected });
        for (index, &qubits) in self.spectators.iter().enumerate() {
            blocks.push(Block { role: BlockRole::Spectator { index }, qubits });
        }
        blocks
    }

    /// Adds a block after the readout block. Both qubits must already be
    /// discarded by pooling.
    pub fn with_spectator_block(mut self, a: usize, b: usize) -> Result<Self> {
        let discarded = self.discarded_qubits();
        if a == b || !discarded.contains(&a) || !discarded.contains(&b) {
            return Err(Error::InvalidConfig(format!("spectator block ({a}, {b}) must act on two distinct discarded qubits")));
        }
        self.spectators.push((a, b));
        self.blocks = self.collect_blocks();
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn conv_layers(&self) -> impl Iterator<Item = &ConvLayer> {
        self.stages.iter().filter_map(|s| match s {
            Stage::Conv(c) => Some(c),
            Stage::Pool(_) => None,
        })
    }

    pub fn conv_layer(&self, layer: usize) -> Option<&ConvLayer> {
        self.conv_layers().find(|c| c.layer == layer)
    }

    pub fn conv_layer_count(&self) -> usize {
        self.conv_layers().count()
    }

    /// Convolution layers plus the fully connected layer.
    pub fn total_layers(&self) -> usize {
        self.conv_layer_count() + 1
    }

    /// Number of active qubits entering each convolution layer, then 2.
    pub fn active_counts(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.conv_layers().map(|c| c.active.len()).collect();
        v.push(2);
        v
    }

    pub fn fully_connected(&self) -> (usize, usize) {
        self.fully_connected
    }

    /// Qubits measured by the readout.
    pub fn readout_qubits(&self) -> (usize, usize) {
        self.fully_connected
    }

    pub fn discarded_qubits(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self
            .stages
            .iter()
            .filter_map(|s| match s {
                Stage::Pool(p) => Some(p.pairs.iter().map(|&(_, d)| d)),
                Stage::Conv(_) => None,
            })
            .flatten()
            .collect();
        d.sort_unstable();
        d
    }

    /// Blocks in application order.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_index(&self, role: BlockRole) -> Option<usize> {
        self.blocks.iter().position(|b| b.role == role)
    }

    /// For each block, whether it lies in the backward light cone of the
    /// readout qubits.
    pub fn readout_light_cone(&self) -> Vec<bool> {
        let (a, b) = self.readout_qubits();
        let mut live = vec![false; self.n_qubits];
        live[a] = true;
        live[b] = true;
        let mut inside = vec![false; self.blocks.len()];
        for (k, block) in self.blocks.iter().enumerate().rev() {
            let (p, q) = block.qubits;
            if live[p] || live[q] {
                inside[k] = true;
                live[p] = true;
                live[q] = true;
            }
        }
        inside
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn active_count_schedule() {
        let seq = |n| QcnnTopology::new(n).unwrap().active_counts();
        assert_eq!(seq(4), vec![4, 2]);
        assert_eq!(seq(6), vec![6, 4, 2]);
        assert_eq!(seq(8), vec![8, 4, 2]);
        assert_eq!(seq(10), vec![10, 6, 4, 2]);
        assert_eq!(seq(16), vec![16, 8, 4, 2]);
    }

    #[test]
    fn eight_qubit_layout() {
        let t = QcnnTopology::new(8).unwrap();
        let c1 = t.conv_layer(1).unwrap();
        assert_eq!(c1.first_sub_layer, vec![(0, 1), (2, 3), (4, 5), (6, 7)]);
        assert_eq!(c1.second_sub_layer, vec![(1, 2), (3, 4), (5, 6)]);
        let c2 = t.conv_layer(2).unwrap();
        assert_eq!(c2.active, vec![0, 2, 4, 6]);
        assert_eq!(c2.first_sub_layer, vec![(0, 2), (4, 6)]);
        assert_eq!(c2.second_sub_layer, vec![(2, 4)]);
        assert_eq!(t.fully_connected(), (0, 4));
        assert_eq!(t.total_layers(), 3);
        assert_eq!(t.blocks().len(), 7 + 3 + 1);
    }

    #[test]
    fn odd_or_small_sizes_are_rejected() {
        for n in [0, 2, 3, 5, 7] {
            assert!(QcnnTopology::new(n).is_err());
        }
    }

    #[test]
    fn spectator_blocks_sit_outside_light_cone() {
        let t = QcnnTopology::new(8).unwrap().with_spectator_block(1, 3).unwrap();
        let cone = t.readout_light_cone();
        assert!(!cone[t.blocks().len() - 1]);
        assert!(cone[..t.blocks().len() - 1].iter().all(|&x| x));
        assert!(QcnnTopology::new(8).unwrap().with_spectator_block(0, 1).is_err());
    }
}
