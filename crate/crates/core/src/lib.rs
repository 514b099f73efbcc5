//! Type-checking kernel for the Calculus of Algebraic Constructions.

pub mod cic;
pub mod critical;
pub mod diagnostic;
pub mod elaborate;
pub mod position;
pub mod positivity;
pub mod precedence;
pub mod print;
pub mod recursor;
pub mod rewrite;
pub mod signature;
pub mod syntax;
pub mod term;
pub mod typing;

pub use diagnostic::{Code, Diagnostic, Severity};
pub use position::Position;
pub use signature::{RewriteRule, Signature, SymbolDecl};
pub use term::{Environment, Name, Sort, Substitution, Term, Var};
