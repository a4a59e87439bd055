use crcurv_core::expr::Expr;
use crcurv_core::sphere::CurvatureFunction;

use crate::error::{CliError, Result};

/// Parses a curvature expression and checks it is positive on S³.
///
/// ```
/// let k = crcurv::kexpr::parse_k("2 + x2").unwrap();
/// let north = crcurv_core::SpherePoint::north();
/// assert_eq!(k.value(north), 3.0);
/// assert!(crcurv::kexpr::parse_k("x1").is_err());
/// ```
pub fn parse_k(text: &str) -> Result<CurvatureFunction> {
    let expr = Expr::parse(text).map_err(|error| CliError::Expression {
        caret: format!("{}^", " ".repeat(text[..error.position.min(text.len())].chars().count())),
        expr: text.to_string(),
        error,
    })?;
    Ok(CurvatureFunction::new(Box::new(expr))?)
}
