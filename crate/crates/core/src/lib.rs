pub mod asp;
pub mod cli;
pub mod compile;
pub mod corpus;
pub mod ast;
pub mod error;
pub mod parser;
pub mod registry;
pub mod rewriter;
pub mod safety;
pub mod solver;
pub mod token;
