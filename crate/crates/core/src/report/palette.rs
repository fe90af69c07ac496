//! Fixed categorical palettes.
//!
//! Clusters are shown by 1-based number: 1 brown, 2 blue, 3 pink, 4 yellow,
//! 5 green, 6 orange, 7 light blue, 8 purple. Severity category 5 is black, and a
//! self-balanced station in combined mode is drawn cyan so it nearly vanishes
//! on a light basemap.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PaletteColor {
    pub name: &'static str,
    pub hex: &'static str,
}

const fn c(name: &'static str, hex: &'static str) -> PaletteColor {
    PaletteColor { name, hex }
}

/// Indexed by 0-based cluster index (cluster number minus one).
pub const CLUSTER_PALETTE: [PaletteColor; 8] = [
    c("brown", "#a65628"),
    c("blue", "#377eb8"),
    c("pink", "#f781bf"),
    c("yellow", "#ffd92f"),
    c("green", "#4daf4a"),
    c("orange", "#ff7f00"),
    c("light_blue", "#8dd3f0"),
    c("purple", "#984ea3"),
];

/// Indexed by severity category minus one.
pub const CATEGORY_PALETTE: [PaletteColor; 8] = [
    c("light_gray", "#d9d9d9"),
    c("yellow", "#ffd92f"),
    c("orange", "#ff7f00"),
    c("red", "#e41a1c"),
    c("black", "#000000"),
    c("purple", "#984ea3"),
    c("blue", "#377eb8"),
    c("brown", "#a65628"),
];

pub const SELF_BALANCED_COLOR: PaletteColor = c("cyan", "#00ffff");

/// Models with more than eight clusters reuse colors cyclically.
pub fn cluster_color(index: usize) -> PaletteColor {
    CLUSTER_PALETTE[index % CLUSTER_PALETTE.len()]
}

/// Categories beyond the palette take the last color.
pub fn category_color(category: u8) -> PaletteColor {
    let i = (category.max(1) as usize - 1).min(CATEGORY_PALETTE.len() - 1);
    CATEGORY_PALETTE[i]
}
