// Float methods for no_std builds. Under `cfg(test)` std is linked and its
// inherent methods shadow the trait, hence the allow.
#[allow(unused_imports)]
pub(crate) use num_traits::Float;
