//! A small geometric program: minimize x*y subject to 2/x <= 1, 3/y <= 1
//! and x + y <= 20.

use posy::{solve, GpProblem, Monomial, Posynomial, SolveOptions};

fn main() -> Result<(), posy::GpError> {
    let x = Monomial::var(0);
    let y = Monomial::var(1);
    let mut gp = GpProblem::new(2, Posynomial::from(&x * &y));
    gp.add_constraint(Posynomial::from(x.inv().scale(2.0)?));
    gp.add_constraint(Posynomial::from(y.inv().scale(3.0)?));
    gp.add_constraint(Posynomial::new(vec![x.scale(0.05)?, y.scale(0.05)?])?);

    let sol = solve(&gp, &SolveOptions::default())?;
    println!("status {:?}, x = {:.6}, y = {:.6}, objective {:.6}", sol.status, sol.x[0], sol.x[1], sol.objective_value);
    Ok(())
}
