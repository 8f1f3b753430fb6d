//! Dof management for V_h (conforming or DG), W_h and Z_h.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::shape::{edge_sign, LegendreSegment, SegmentBasis, TriangleBasis};
use super::DiscretizationError;
use crate::geometry::{BoundaryMesh, CurvedMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeKind {
    Conforming,
    Dg,
}

/// Local-to-global map of one element: global index and orientation sign
/// of every local basis function.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementDofs {
    pub global: Vec<usize>,
    pub sign: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SpaceTriple {
    pub kind: VolumeKind,
    pub p: usize,
    pub tri: TriangleBasis,
    pub seg_z: SegmentBasis,
    pub seg_w: LegendreSegment,
    pub volume: Vec<ElementDofs>,
    pub n_volume: usize,
    /// W_h: panel i owns dofs i p .. (i + 1) p.
    pub n_w: usize,
    /// Z_h: dof i is the hat at the start of panel i; bubbles follow.
    pub n_z: usize,
    pub n_panels: usize,
}

impl SpaceTriple {
    pub fn new(
        mesh: &CurvedMesh,
        gamma: &BoundaryMesh,
        kind: VolumeKind,
        p: usize,
    ) -> Result<Self, DiscretizationError> {
        let tri = TriangleBasis::new(p)?;
        let seg_z = SegmentBasis::new(p)?;
        let seg_w = LegendreSegment::new(p)?;
        let nloc = tri.dim();
        let (volume, n_volume) = match kind {
            VolumeKind::Dg => {
                let v = (0..mesh.element_count())
                    .map(|e| ElementDofs { global: (e * nloc..(e + 1) * nloc).collect(), sign: vec![1.0; nloc] })
                    .collect();
                (v, mesh.element_count() * nloc)
            }
            VolumeKind::Conforming => {
                let nv = mesh.vertices.len();
                let ne = tri.edge_dofs();
                let nb = tri.bubble_dofs();
                let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
                for el in &mesh.elements {
                    for e in 0..3 {
                        let (a, b) = (el.vertices[(e + 1) % 3], el.vertices[(e + 2) % 3]);
                        let key = (a.min(b), a.max(b));
                        let next = edge_id.len();
                        edge_id.entry(key).or_insert(next);
                    }
                }
                let n_edges = edge_id.len();
                let bubble0 = nv + n_edges * ne;
                let mut out = Vec::with_capacity(mesh.element_count());
                for (ei, el) in mesh.elements.iter().enumerate() {
                    let mut global = Vec::with_capacity(nloc);
                    let mut sign = Vec::with_capacity(nloc);
                    for &v in &el.vertices {
                        global.push(v);
                        sign.push(1.0);
                    }
                    for e in 0..3 {
                        let (a, b) = (el.vertices[(e + 1) % 3], el.vertices[(e + 2) % 3]);
                        let id = edge_id[&(a.min(b), a.max(b))];
                        for j in 0..ne {
                            global.push(nv + id * ne + j);
                            sign.push(edge_sign(j, a > b));
                        }
                    }
                    for j in 0..nb {
                        global.push(bubble0 + ei * nb + j);
                        sign.push(1.0);
                    }
                    out.push(ElementDofs { global, sign });
                }
                (out, bubble0 + mesh.element_count() * nb)
            }
        };
        let n_panels = gamma.len();
        Ok(SpaceTriple {
            kind,
            p,
            tri,
            seg_z,
            seg_w,
            volume,
            n_volume,
            n_w: n_panels * p,
            n_z: n_panels * p,
            n_panels,
        })
    }

    pub fn total(&self) -> usize {
        self.n_volume + self.n_w + self.n_z
    }

    pub fn w_dofs(&self, panel: usize) -> Vec<usize> {
        (panel * self.p..(panel + 1) * self.p).collect()
    }

    pub fn z_dofs(&self, panel: usize) -> Vec<usize> {
        let n = self.n_panels;
        let mut d = vec![panel, (panel + 1) % n];
        for j in 0..self.p - 1 {
            d.push(n + panel * (self.p - 1) + j);
        }
        d
    }

    /// Volume quadrature exactness: 2p + 2 on affine, 2p + 6 on curved elements.
    pub fn volume_exactness(&self, curved: bool) -> usize {
        if curved {
            2 * self.p + 6
        } else {
            2 * self.p + 2
        }
    }
}
