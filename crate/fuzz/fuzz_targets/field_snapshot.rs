#![no_main]

use blowup_core::field::{ComplexField, Grid};
use libfuzzer_sys::fuzz_target;

// First byte picks the grid: dimension 1..=3, 8 or 16 points per axis.
fuzz_target!(|data: &[u8]| {
    let Some((&shape, rest)) = data.split_first() else {
        return;
    };
    let dimension = 1 + (shape % 3) as usize;
    let points = if shape & 0x10 == 0 { 8 } else { 16 };
    let grid = Grid::new(dimension, 2.0, points).expect("valid grid");
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(field) = ComplexField::from_csv(&grid, text) {
        let again =
            ComplexField::from_csv(&grid, &field.to_csv()).expect("written snapshot parses");
        assert_eq!(again, field);
    }
});
