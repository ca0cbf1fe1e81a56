//! Datasets, non-iid partitioning and backdoor poisoning.

mod backdoor;
pub mod cifar;
mod dataset;
mod partition;
mod synthetic;

pub use backdoor::{
    inject_backdoor, make_backdoor_testset, BackdoorSpec, Poisoned, Rate, Trigger, TriggerPattern,
};
pub use cifar::load_cifar10;
pub use dataset::{one_hot, Dataset};
pub use partition::{partition, Partition, PartitionPlan, PartitionScheme};
pub use synthetic::{gen_synthetic, synthetic_train_test, SyntheticParams};
