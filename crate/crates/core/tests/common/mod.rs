#![allow(dead_code)]

use qgnn_core::graphbuild::{GraphMeta, ScaleBounds, SubGraph};

/// Five scaled nodes on three layers: one true chain and one fake branch.
pub fn five_node_graph() -> SubGraph {
    SubGraph {
        node_features: vec![
            [0.1, 0.2, 0.5],
            [0.2, 0.25, 0.55],
            [0.3, 0.3, 0.6],
            [0.2, 0.8, 0.4],
            [0.3, 0.75, 0.45],
        ],
        hit_ids: vec![1, 2, 3, 4, 5],
        layers: vec![0, 1, 2, 1, 2],
        edges: vec![(0, 1), (1, 2), (0, 3), (3, 4)],
        labels: vec![1, 1, 0, 0],
        meta: GraphMeta {
            event_id: 0,
            phi_index: 0,
            z_index: 0,
            bounds: ScaleBounds {
                r: (0.0, 1.0),
                phi: (0.0, 1.0),
                z: (0.0, 1.0),
            },
            scaled: true,
        },
    }
}
