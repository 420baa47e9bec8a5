use super::grid::{GridLattice, ScalarGrid3};

/// Voxel set on a node lattice, with its 6-connected component structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Region3 {
    pub lattice: GridLattice,
    pub mask: Vec<bool>,
    /// Voxel count per connected component, parallel to `component_labels`
    /// values minus one (label 0 = not in region).
    pub component_counts: Vec<usize>,
    pub component_labels: Vec<u32>,
}

impl Region3 {
    pub fn from_mask(lattice: GridLattice, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), lattice.len());
        let mut r = Region3 {
            lattice,
            mask,
            component_counts: Vec::new(),
            component_labels: Vec::new(),
        };
        r.relabel();
        r
    }

    pub fn empty(lattice: GridLattice) -> Self {
        Self::from_mask(lattice, vec![false; lattice.len()])
    }

    pub fn from_grid_threshold(grid: &ScalarGrid3, pred: impl Fn(f64) -> bool) -> Self {
        assert_eq!(grid.channels, 1);
        let mask = grid.values.iter().map(|&v| pred(v)).collect();
        Self::from_mask(grid.lattice, mask)
    }

    pub fn voxel_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn contains_index(&self, x: usize, y: usize, z: usize) -> bool {
        self.mask[self.lattice.index(x, y, z)]
    }

    /// Membership test for an arbitrary point via its nearest lattice node.
    pub fn contains_point(&self, p: super::vec3::Vec3) -> bool {
        match self.lattice.nearest_node(p) {
            Some([x, y, z]) => self.contains_index(x, y, z),
            None => false,
        }
    }

    /// 6-connected flood fill relabeling.
    fn relabel(&mut self) {
        let d = self.lattice.dims;
        let n = self.lattice.len();
        let mut labels = vec![0u32; n];
        let mut counts = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if !self.mask[start] || labels[start] != 0 {
                continue;
            }
            let id = counts.len() as u32 + 1;
            let mut count = 0usize;
            labels[start] = id;
            stack.push(start);
            while let Some(i) = stack.pop() {
                count += 1;
                let x = i % d[0];
                let y = (i / d[0]) % d[1];
                let z = i / (d[0] * d[1]);
                let mut visit = |nx: usize, ny: usize, nz: usize| {
                    let j = self.lattice.index(nx, ny, nz);
                    if self.mask[j] && labels[j] == 0 {
                        labels[j] = id;
                        stack.push(j);
                    }
                };
                if x > 0 {
                    visit(x - 1, y, z);
                }
                if x + 1 < d[0] {
                    visit(x + 1, y, z);
                }
                if y > 0 {
                    visit(x, y - 1, z);
                }
                if y + 1 < d[1] {
                    visit(x, y + 1, z);
                }
                if z > 0 {
                    visit(x, y, z - 1);
                }
                if z + 1 < d[2] {
                    visit(x, y, z + 1);
                }
            }
            counts.push(count);
        }
        self.component_labels = labels;
        self.component_counts = counts;
    }

    pub fn intersect(&self, other: &Region3) -> Region3 {
        assert_eq!(self.lattice, other.lattice);
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        Region3::from_mask(self.lattice, mask)
    }

    pub fn union(&self, other: &Region3) -> Region3 {
        assert_eq!(self.lattice, other.lattice);
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect();
        Region3::from_mask(self.lattice, mask)
    }

    pub fn subtract(&self, other: &Region3) -> Region3 {
        assert_eq!(self.lattice, other.lattice);
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && !*b).collect();
        Region3::from_mask(self.lattice, mask)
    }

    /// 0/1 occupancy grid view of the mask.
    pub fn to_grid(&self) -> ScalarGrid3 {
        ScalarGrid3 {
            lattice: self.lattice,
            channels: 1,
            values: self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Removes connected components smaller than `min_voxels` (6-connectivity).
pub fn connected_components(region: &Region3, min_voxels: usize) -> Region3 {
    let mut mask = region.mask.clone();
    for (i, label) in region.component_labels.iter().enumerate() {
        if *label > 0 && region.component_counts[(*label - 1) as usize] < min_voxels {
            mask[i] = false;
        }
    }
    Region3::from_mask(region.lattice, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vec3::Vec3;

    fn lattice() -> GridLattice {
        GridLattice::new(Vec3::ZERO, 1.0, [10, 10, 10])
    }

    fn blob(mask: &mut [bool], lat: &GridLattice, base: [usize; 3], n: usize) {
        // n voxels in a straight x run.
        for i in 0..n {
            mask[lat.index(base[0] + i, base[1], base[2])] = true;
        }
    }

    #[test]
    fn small_components_removed() {
        // Flood-fill oracle: two disjoint blobs of 10 and 3 voxels, min 5.
        let lat = lattice();
        let mut mask = vec![false; lat.len()];
        blob(&mut mask, &lat, [0, 0, 0], 10);
        blob(&mut mask, &lat, [0, 5, 5], 3);
        let r = Region3::from_mask(lat, mask);
        assert_eq!(r.component_counts.len(), 2);
        let f = connected_components(&r, 5);
        assert_eq!(f.voxel_count(), 10);
        assert_eq!(f.component_counts, vec![10]);
    }

    #[test]
    fn empty_mask_stays_empty() {
        let r = Region3::empty(lattice());
        let f = connected_components(&r, 3);
        assert_eq!(f.voxel_count(), 0);
        assert!(f.component_counts.is_empty());
    }

    #[test]
    fn full_mask_is_one_component() {
        let lat = lattice();
        let r = Region3::from_mask(lat, vec![true; lat.len()]);
        let f = connected_components(&r, 1);
        assert_eq!(f.component_counts, vec![lat.len()]);
    }

    #[test]
    fn component_counts_sum_to_popcount() {
        let lat = lattice();
        let mut mask = vec![false; lat.len()];
        blob(&mut mask, &lat, [0, 0, 0], 4);
        blob(&mut mask, &lat, [2, 8, 2], 6);
        blob(&mut mask, &lat, [5, 4, 9], 2);
        let r = Region3::from_mask(lat, mask);
        let total: usize = r.component_counts.iter().sum();
        assert_eq!(total, r.voxel_count());
    }

    #[test]
    fn filtering_is_idempotent() {
        let lat = lattice();
        let mut mask = vec![false; lat.len()];
        blob(&mut mask, &lat, [0, 0, 0], 7);
        blob(&mut mask, &lat, [0, 3, 3], 2);
        let r = Region3::from_mask(lat, mask);
        let once = connected_components(&r, 4);
        let twice = connected_components(&once, 4);
        assert_eq!(once, twice);
    }

    #[test]
    fn diagonal_voxels_are_separate_components() {
        // 6-connectivity: corner contact does not connect.
        let lat = lattice();
        let mut mask = vec![false; lat.len()];
        mask[lat.index(0, 0, 0)] = true;
        mask[lat.index(1, 1, 0)] = true;
        let r = Region3::from_mask(lat, mask);
        assert_eq!(r.component_counts.len(), 2);
    }
}
