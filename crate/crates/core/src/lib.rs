//! Desk-scale laboratory for perturbed asynchronous parallel SGD with
//! consistent read: the optimizer engine itself plus the machinery that
//! checks its second-order convergence story end to end. Parameter
//! feasibility ledgers, staleness schedules, block classification, descent
//! inequalities, coupled-run saddle escape, and instability certificates
//! for the underlying delayed linear recursions all live here.

pub mod coupling;
pub mod delay;
pub mod diagnostics;
pub mod engine;
pub mod linalg;
pub mod oracles;
pub mod params;
pub mod stats;
pub mod streams;
pub mod tds;
