use clap::Parser;

fn main() {
    let cli = vmd_cli::Cli::parse();
    match vmd_cli::execute(cli) {
        Ok(text) => print!("{text}"),
        Err(error) => {
            eprintln!("vmd: {error:#}");
            std::process::exit(1);
        }
    }
}
