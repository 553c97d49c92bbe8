//! Default numerical tolerances, collected in one place.
//!
//! | name | default | used by |
//! |------|---------|---------|
//! | `QUAD_ABS` | 1e-10 | adaptive radial quadrature |
//! | `DIRICHLET` | 1e-12 | boundary value check of Dirichlet profiles |
//! | `LEVEL_REL` | 1e-10 | level finder, relative to `|B_1|` |
//! | `PROJECTION` | 1e-12 | star-domain volume projection |
//! | `POTENTIAL_ABS` | 1e-8 | Green's potential quadrature |
//! | `FIELD_REL` | 1e-6 | `L^p` norms of star potentials |
//! | `NULL_SPACE` | 1e-13 | numerical rank cut of the mode system, relative to the largest singular value |
//! | `NEWTON_STEP` | 1e-13 | maximum-point Newton iteration |
//! | `TALENTI` | 1e-8 | slack in comparison checks |

pub const QUAD_ABS: f64 = 1e-10;
pub const DIRICHLET: f64 = 1e-12;
pub const LEVEL_REL: f64 = 1e-10;
pub const PROJECTION: f64 = 1e-12;
pub const POTENTIAL_ABS: f64 = 1e-8;
pub const FIELD_REL: f64 = 1e-6;
pub const NULL_SPACE: f64 = 1e-13;
pub const NEWTON_STEP: f64 = 1e-13;
pub const TALENTI: f64 = 1e-8;
