mod bench;
mod cycle;
mod score;

use crate::args::{Cli, Command, CycleCmd};
use crate::config::EngineConfig;
use crate::failure::CmdResult;

pub fn run(cli: &Cli) -> CmdResult {
    let cfg = EngineConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Score(c) => score::score(c, &cfg),
        Command::Aggregate(c) => score::aggregate(c, &cfg),
        Command::Select(c) => cycle::select(c, &cfg),
        Command::Cycle(CycleCmd::Run(c)) => cycle::cycle_run(c, &cfg),
        Command::Ttc(c) => bench::ttc(c, &cfg),
        Command::Simulate(c) => bench::simulate(c, &cfg),
        Command::Report(c) => cycle::report(c, &cfg),
        Command::Generate(c) => bench::generate(c, &cfg),
    }
}
