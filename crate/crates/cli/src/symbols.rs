//! Classical symbols from the command line: built-in names or `u-expr:pdeg`.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use anyhow::{anyhow, bail, Context as _, Result};
use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables, DefaultNumericTypes, EvalexprError,
    Function, HashMapContext, Node, Value,
};
use ptcs_core::cs_quantization::{ClassicalSymbol, PositionFunction};

type Ctx = HashMapContext<DefaultNumericTypes>;

fn unary(ctx: &mut Ctx, name: &str, f: fn(f64) -> f64) -> Result<()> {
    ctx.set_function(
        name.into(),
        Function::new(move |v: &Value<DefaultNumericTypes>| Ok(Value::Float(f(v.as_number()?)))),
    )
    .map_err(|e| anyhow!("{e}"))
}

fn base_context(nu: f64) -> Result<Ctx> {
    let mut ctx = Ctx::new();
    ctx.set_value("pi".into(), Value::Float(PI))
        .map_err(|e| anyhow!("{e}"))?;
    ctx.set_value("nu".into(), Value::Float(nu))
        .map_err(|e| anyhow!("{e}"))?;
    ctx.set_value("x".into(), Value::Float(0.0))
        .map_err(|e| anyhow!("{e}"))?;
    unary(&mut ctx, "sin", f64::sin)?;
    unary(&mut ctx, "cos", f64::cos)?;
    unary(&mut ctx, "tan", f64::tan)?;
    unary(&mut ctx, "cot", |x| 1.0 / x.tan())?;
    unary(&mut ctx, "exp", f64::exp)?;
    unary(&mut ctx, "ln", f64::ln)?;
    unary(&mut ctx, "sqrt", f64::sqrt)?;
    unary(&mut ctx, "abs", f64::abs)?;
    Ok(ctx)
}

/// A position function parsed from an expression in `x` (reduced position in
/// `[0, pi]`), with constants `pi` and `nu` and the usual elementary functions.
pub fn expression(expr: &str, nu: f64) -> Result<PositionFunction> {
    let node: Node<DefaultNumericTypes> =
        build_operator_tree(expr).map_err(|e| anyhow!("cannot parse `{expr}`: {e}"))?;
    let mut ctx = base_context(nu)?;
    let probe = move |ctx: &mut Ctx, x: f64| -> std::result::Result<f64, EvalexprError<DefaultNumericTypes>> {
        ctx.set_value("x".into(), Value::Float(x))?;
        node.eval_number_with_context(ctx)
    };
    probe(&mut ctx, PI / 3.0).map_err(|e| anyhow!("cannot evaluate `{expr}` at x = pi/3: {e}"))?;
    let shared = Arc::new(Mutex::new(ctx));
    let name = expr.to_string();
    Ok(PositionFunction::custom(name, move |x| {
        let mut ctx = shared.lock().expect("expression context poisoned");
        probe(&mut ctx, x).unwrap_or(f64::NAN)
    }))
}

/// `name` or `u-expr:pdeg`, e.g. `hamiltonian`, `1/sin(x)^2:0`, `x:1`.
pub fn parse_symbol(spec: &str, nu: f64) -> Result<ClassicalSymbol> {
    if let Ok(symbol) = ClassicalSymbol::named(spec, nu) {
        return Ok(symbol);
    }
    let Some((expr, degree)) = spec.rsplit_once(':') else {
        bail!("unknown symbol `{spec}`; use a built-in name or `<u-expr>:<p-degree>`");
    };
    let degree: u8 = degree
        .trim()
        .parse()
        .with_context(|| format!("p-degree `{degree}` is not an integer"))?;
    if degree > 2 {
        bail!("p-degree {degree} exceeds 2");
    }
    Ok(ClassicalSymbol::monomial(spec, expression(expr.trim(), nu)?, degree)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions_evaluate() {
        let f = expression("1/sin(x)^2 + nu", 2.0).unwrap();
        let PositionFunction::Custom { f, .. } = f else {
            panic!()
        };
        assert!((f(PI / 2.0) - 3.0).abs() < 1e-15);
        assert!((f(PI / 6.0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn symbol_specs() {
        assert_eq!(parse_symbol("x:1", 0.0).unwrap().max_p_degree(), 1);
        assert!(parse_symbol("x:3", 0.0).is_err());
        assert!(parse_symbol("x+:0", 0.0).is_err());
        assert!(parse_symbol("spin", 0.0).is_err());
        assert!(parse_symbol("hamiltonian", 1.0).is_ok());
    }
}
