//! Minimum sets, certified bisection for `sigma`/`tau`, generalized
//! inverses, and selections.

mod bisect;
mod inverse;
mod min_set;
mod select;

pub use bisect::{sigma_bisect, tau_bisect, tau_bisect_direct, Enclosure, MAX_ITERATIONS};
pub use inverse::{gen_inverse_vee, gen_inverse_wedge, vee, wedge};
pub use min_set::{location_predicates, min_set_pwl, Escape, MinSet, MinSetKind};
pub use select::SelectionPolicy;
