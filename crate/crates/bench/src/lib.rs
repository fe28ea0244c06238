// SPDX-License-Identifier: Apache-2.0

//! Criterion benchmarks for rdf-core live in `benches/`.
