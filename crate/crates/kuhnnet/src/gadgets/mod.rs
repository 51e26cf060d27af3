//! Small networks used as building blocks: max, median, and 1D memorizers.

mod deep;
mod max;
mod median;
mod memorize;
mod pwl;

pub use deep::{build_memorizer_deep, deep_capacity};
pub use max::build_max_net;
pub use median::build_median_net;
pub use memorize::{build_memorizer_2layer, build_memorizer_sqrt, sqrt_shape, Samples1D};
pub use pwl::{net_to_pwl, Pwl};

pub(crate) use memorize::{ceil_sqrt, plan_two_layer};
