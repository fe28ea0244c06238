// SPDX-License-Identifier: Apache-2.0

//! Physical-design flow toolkit: design database, format readers and writers,
//! route-guide translation, checkers, a small timing engine, reference
//! placement and routing stages, and a flow runner.

pub mod check;
pub mod flow;
pub mod gen;
pub mod geom;
pub mod io;
pub mod model;
pub mod sta;
pub mod stages;
pub mod translate;

pub use geom::{Dbu, Direction, Orientation, Point, Rect};
pub use model::*;
