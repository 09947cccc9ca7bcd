//! A 256×256 raster set whose exclusions are laid out by hand.
//!
//! Four layers over sixteen 64×64 blocks (90 m cells):
//! - slope (%): 10 over all of block (1,0) and over rows 0..10 × cols 64..84,
//!   nodata at (130,130), 2 elsewhere
//! - protected: a single no-go cell at (32,160) buffered by 180 m
//! - radiation (kWh/m²/day): 4.0 over block (3,3) except (200,200), and over
//!   rows 0..5 × cols 64..84; 5.5 elsewhere
//! - roads: all zero
//!
//! Expected counts, worked by hand:
//! - slope 4096 + 200 + 1, protected 13, radiation 4095 + 100, overlap 100
//! - count 2: 100 cells, count 1: 8305, count 0: 57131
//! - viable cells per block: (1,0) none, (3,3) 1, (0,1) 3896, (0,2) 4083,
//!   (2,2) 4095, the other eleven 4096

use microgrid_core::siting::{Distance, ExclusionRule, GridRaster};

pub const N: usize = 256;
pub const NODATA: f64 = -9999.0;

pub fn layers() -> Vec<(GridRaster, ExclusionRule)> {
    let slope = GridRaster::from_fn(N, N, 90.0, |r, c| {
        if (r, c) == (130, 130) {
            NODATA
        } else if (64..128).contains(&r) && c < 64 || r < 10 && (64..84).contains(&c) {
            10.0
        } else {
            2.0
        }
    })
    .unwrap()
    .with_nodata(Some(NODATA))
    .with_unit(Some("%".into()));
    let protected =
        GridRaster::from_fn(N, N, 90.0, |r, c| if (r, c) == (32, 160) { 1.0 } else { 0.0 }).unwrap();
    let radiation = GridRaster::from_fn(N, N, 90.0, |r, c| {
        let dark = r >= 192 && c >= 192 && (r, c) != (200, 200);
        if dark || r < 5 && (64..84).contains(&c) {
            4.0
        } else {
            5.5
        }
    })
    .unwrap()
    .with_unit(Some("kWh/m2/day".into()));
    let roads = GridRaster::filled(N, N, 0.0, 90.0).unwrap();
    vec![
        (slope, ExclusionRule::above("slope", 5.0, "%")),
        (
            protected,
            ExclusionRule::no_go("protected_lands").with_buffer(Distance::metres(180.0)),
        ),
        (radiation, ExclusionRule::below("solar_radiation", 4.8, "kWh/m2/day")),
        (roads, ExclusionRule::no_go("major_roads")),
    ]
}

pub const COUNT_HISTOGRAM: [usize; 3] = [57_131, 8_305, 100];

/// (block_row, block_col, viable cells) in expected site-index order.
pub fn expected_parcels() -> Vec<(usize, usize, usize)> {
    let mut v = vec![(3, 3, 1), (0, 1, 3896), (0, 2, 4083), (2, 2, 4095)];
    for br in 0..4 {
        for bc in 0..4 {
            if !matches!((br, bc), (1, 0) | (3, 3) | (0, 1) | (0, 2) | (2, 2)) {
                v.push((br, bc, 4096));
            }
        }
    }
    v
}
