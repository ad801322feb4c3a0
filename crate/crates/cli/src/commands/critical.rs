use wicksell::inference::CriticalTable;

use super::{emit, to_json};
use crate::error::{from_lib_config, CliResult};
use crate::CriticalTableArgs;

pub fn run(args: &CriticalTableArgs) -> CliResult<()> {
    let table = CriticalTable::generate(args.sims, args.seed).map_err(from_lib_config)?;
    emit(Some(&args.output), &to_json(&table))
}
