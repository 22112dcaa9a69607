//! Local 3×3×3 topology: simple-point characterization for (26, 6) connectivity.
//!
//! A neighborhood is a 26-bit mask over the voxels around a center, indexed in
//! z, y, x order with the center skipped. A foreground voxel is simple iff the
//! foreground of its punctured 26-neighborhood forms exactly one 26-component
//! and the background of its punctured 18-neighborhood has exactly one
//! 6-component that is 6-adjacent to the center.

use std::sync::LazyLock;

pub const NEIGHBOR_COUNT: usize = 26;

pub struct Tables {
    pub offsets: [[i64; 3]; NEIGHBOR_COUNT],
    adj26: [u32; NEIGHBOR_COUNT],
    adj6: [u32; NEIGHBOR_COUNT],
    n18: u32,
    faces: u32,
}

pub static TABLES: LazyLock<Tables> = LazyLock::new(|| {
    let mut offsets = [[0i64; 3]; NEIGHBOR_COUNT];
    let mut k = 0;
    for dz in -1..=1 {
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx, dy, dz) != (0, 0, 0) {
                    offsets[k] = [dx, dy, dz];
                    k += 1;
                }
            }
        }
    }
    let l1 = |o: &[i64; 3]| o.iter().map(|v| v.abs()).sum::<i64>();
    let mut adj26 = [0u32; NEIGHBOR_COUNT];
    let mut adj6 = [0u32; NEIGHBOR_COUNT];
    let mut n18 = 0u32;
    let mut faces = 0u32;
    for i in 0..NEIGHBOR_COUNT {
        let a = offsets[i];
        if l1(&a) <= 2 {
            n18 |= 1 << i;
        }
        if l1(&a) == 1 {
            faces |= 1 << i;
        }
        for j in 0..NEIGHBOR_COUNT {
            if i == j {
                continue;
            }
            let b = offsets[j];
            let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
            if d.iter().all(|v| v.abs() <= 1) {
                adj26[i] |= 1 << j;
            }
            if l1(&d) == 1 {
                adj6[i] |= 1 << j;
            }
        }
    }
    Tables {
        offsets,
        adj26,
        adj6,
        n18,
        faces,
    }
});

const ALL: u32 = (1 << NEIGHBOR_COUNT) - 1;

/// Splits `set` into connected components under `adj`, calling `visit` on each.
fn for_each_component(mut set: u32, adj: &[u32; NEIGHBOR_COUNT], mut visit: impl FnMut(u32)) {
    while set != 0 {
        let seed = set & set.wrapping_neg();
        let mut comp = seed;
        let mut frontier = seed;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                let b = f.trailing_zeros() as usize;
                next |= adj[b];
                f &= f - 1;
            }
            next &= set & !comp;
            comp |= next;
            frontier = next;
        }
        set &= !comp;
        visit(comp);
    }
}

/// Number of 26-connected foreground components in the punctured neighborhood.
pub fn t26(neighbors: u32) -> usize {
    let mut n = 0;
    for_each_component(neighbors & ALL, &TABLES.adj26, |_| n += 1);
    n
}

/// Number of 6-connected background components in N18* that touch a face neighbor.
pub fn t6_background(neighbors: u32) -> usize {
    let t = &*TABLES;
    let bg = !neighbors & t.n18;
    let mut n = 0;
    for_each_component(bg, &t.adj6, |c| {
        if c & t.faces != 0 {
            n += 1
        }
    });
    n
}

pub fn is_simple(neighbors: u32) -> bool {
    t26(neighbors) == 1 && t6_background(neighbors) == 1
}
