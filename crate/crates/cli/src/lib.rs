//! A small language for describing twisted cohomology rings and querying the Steenrod
//! calculus engine, with a corpus of built-in scenarios.

pub mod ast;
pub mod corpus;
pub mod eval;
pub mod lexer;
pub mod parser;

pub use ast::File;
pub use eval::{EvalError, Outcome, Session, Status};
pub use lexer::SyntaxError;
pub use parser::{parse, parse_poly};
