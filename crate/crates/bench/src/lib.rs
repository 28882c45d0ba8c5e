//! Benchmarks for the grid, labeling, training and prediction stages live
//! under `benches/`.
