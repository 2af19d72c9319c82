//! Hopf ring of `K(n)_* BP<h>_*` style expressions, the Ravenel-Wilson
//! relation, and verified derivation chains.

pub mod certificate;
pub mod expr;
pub mod f0;
pub mod rw;

pub use certificate::{lift_rule, verify_xpzero, Certificate, Lift, SideCondition, Status, Step, Verdict};
pub use expr::{Atom, HopfExpr, Label, Params, StarMono, Term};
pub use f0::{f0_nonnilpotence, F0Elem, F0Report, F0Row};
pub use rw::{rw_extract, Context, GenSeries, Mode, RwIdentity};
