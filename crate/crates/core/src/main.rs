use clap::Parser;

fn main() {
    let cli = vdw_pme::cli::Cli::parse();
    std::process::exit(vdw_pme::cli::main_with(cli));
}
