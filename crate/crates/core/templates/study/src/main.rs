mod eval_functions;
mod method_functions;
mod model_functions;

use simstudy::cli::{RunContext, Study};
use simstudy::{params, Result, Simulation};

pub struct MyStudy;

impl Study for MyStudy {
    fn name(&self) -> &str {
        env!("CARGO_PKG_NAME")
    }

    fn label(&self) -> &str {
        "My simulation study"
    }

    fn generators(&self) -> Vec<simstudy::ModelGenerator> {
        vec![model_functions::make_my_model().expect("valid generator")]
    }

    fn sources(&self) -> Vec<(String, String)> {
        vec![
            ("main.rs".into(), include_str!("main.rs").into()),
            (
                "model_functions.rs".into(),
                include_str!("model_functions.rs").into(),
            ),
            (
                "method_functions.rs".into(),
                include_str!("method_functions.rs").into(),
            ),
            (
                "eval_functions.rs".into(),
                include_str!("eval_functions.rs").into(),
            ),
        ]
    }

    fn run(&self, ctx: &RunContext) -> Result<Vec<Simulation>> {
        let mut sim = ctx.open(self.name(), self.label())?;
        let generator = model_functions::make_my_model()?;
        sim.generate_model(&generator, params!("n" => 20usize, "mu" => 1.0), &[])?
            .simulate_from_model(ctx.nsim_or(10), &ctx.index_or(&[1]), ctx.parallel)?
            .run_method(&[method_functions::my_method()?.into()], ctx.parallel)?
            .evaluate(&[eval_functions::his_loss()?], ctx.parallel)?;
        Ok(vec![sim])
    }

    fn report_template(&self) -> String {
        include_str!("../writeup.md").into()
    }
}

#[allow(dead_code)]
fn main() -> std::process::ExitCode {
    simstudy::cli::main(&MyStudy)
}
