#![no_std]
extern crate alloc;

pub mod encoders;
pub mod eval;
pub mod expr;
pub mod graph;
pub mod harness;
pub mod logic;
pub mod num;
pub mod syntax;
pub mod tensor;
pub mod treewidth;
pub mod value;
pub mod wl;

#[cfg(feature = "std")]
extern crate std;

#[cfg(feature = "std")]
mod std_errors {
    macro_rules! std_error {
        ($($t:ty),*) => { $(impl std::error::Error for $t {})* };
    }
    std_error!(
        crate::encoders::EncodeError,
        crate::eval::EvalError,
        crate::expr::ExprError,
        crate::graph::CorpusError,
        crate::graph::GraphError,
        crate::harness::HarnessError,
        crate::logic::LogicError,
        crate::num::ParseRatError,
        crate::syntax::ParseError,
        crate::treewidth::TwError,
        crate::wl::WlError
    );
}
