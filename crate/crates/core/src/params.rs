//! Named matrix blocks packed into one flat `f64` vector.
//!
//! Trainable models keep all weights in a single buffer so Adam, gradient
//! checks and blob I/O operate on plain slices.

use ndarray::{ArrayView2, ArrayViewMut2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    blocks: Vec<Block>,
    total: usize,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a block and returns its index.
    pub fn push(&mut self, name: &str, rows: usize, cols: usize) -> usize {
        self.blocks.push(Block {
            name: name.to_string(),
            rows,
            cols,
            offset: self.total,
        });
        self.total += rows * cols;
        self.blocks.len() - 1
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, idx: usize) -> &Block {
        &self.blocks[idx]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn view<'a>(&self, data: &'a [f64], idx: usize) -> ArrayView2<'a, f64> {
        let b = &self.blocks[idx];
        ArrayView2::from_shape((b.rows, b.cols), &data[b.range()]).expect("block shape")
    }

    pub fn view_mut<'a>(&self, data: &'a mut [f64], idx: usize) -> ArrayViewMut2<'a, f64> {
        let b = &self.blocks[idx];
        ArrayViewMut2::from_shape((b.rows, b.cols), &mut data[b.range()]).expect("block shape")
    }

    pub fn slice<'a>(&self, data: &'a [f64], idx: usize) -> &'a [f64] {
        &data[self.blocks[idx].range()]
    }

    pub fn slice_mut<'a>(&self, data: &'a mut [f64], idx: usize) -> &'a mut [f64] {
        &mut data[self.blocks[idx].range()]
    }
}
