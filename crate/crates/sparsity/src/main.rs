fn main() -> std::process::ExitCode {
    simstudy::cli::main(&bet_on_sparsity::BetOnSparsity)
}
