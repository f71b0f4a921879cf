//! Two-dimensional Carleman toolkit: polynomial weights, the conjugated
//! symbol and its bracket, sub-ellipticity certification, the flow-based
//! weight pair and the weighted inequality on manufactured data.

pub mod flow;
pub mod inequality;
pub mod poly;
pub mod subellipticity;
pub mod weight;

pub use flow::{flow_deform, Arc, FlowReport, FlowSpec};
pub use inequality::{carleman_inequality_check, CarlemanReport, CarlemanRow, Manufactured, Side};
pub use poly::{Poly2, PolyTerm};
pub use subellipticity::{find_critical_points, verify_subellipticity, SubellipticityReport};
pub use weight::{
    characteristic_covectors, closed_form_bracket, conjugated_symbol, poisson_bracket, printed_form_bracket,
    WeightFunction,
};
