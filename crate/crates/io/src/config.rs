//! TOML configuration: parsing and layering of override tables onto defaults.

use std::path::Path;

use toml::{Table, Value};

use crate::error::{read_file, IoError, IoResult};

pub fn parse_toml_table(text: &str) -> IoResult<Table> {
    text.parse::<Table>().map_err(|e| IoError::Config(e.to_string()))
}

pub fn load_toml_table(path: &Path) -> IoResult<Table> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| IoError::Config(format!("{}: {e}", path.display())))?;
    parse_toml_table(text).map_err(|e| IoError::Config(format!("{}: {e}", path.display())))
}

/// Deep-merge `over` into `base`: nested tables merge key by key, anything else replaces.
pub fn merge_tables(base: &mut Table, over: &Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge_tables(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}
