// SPDX-License-Identifier: Apache-2.0

//! Test-only oracles and fixture generators.
//!
//! Nothing in here may call into `arbohub-core`: the oracles exist to check the
//! implementation along an independent path, so they carry their own calendar
//! arithmetic and their own quadrature.

pub mod calendar;
pub mod crps;
pub mod fixtures;
