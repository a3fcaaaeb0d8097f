//! The twelve built-in tasks, three per context level.

use ctxplace_core::task::TaskDef;

use crate::format::parse_task;
use crate::Error;

/// `(id, file contents)` in catalog order.
pub const SOURCES: [(&str, &str); 12] = [
    ("L1T1", include_str!("../tasks/L1T1.toml")),
    ("L1T2", include_str!("../tasks/L1T2.toml")),
    ("L1T3", include_str!("../tasks/L1T3.toml")),
    ("L2T1", include_str!("../tasks/L2T1.toml")),
    ("L2T2", include_str!("../tasks/L2T2.toml")),
    ("L2T3", include_str!("../tasks/L2T3.toml")),
    ("L3T1", include_str!("../tasks/L3T1.toml")),
    ("L3T2", include_str!("../tasks/L3T2.toml")),
    ("L3T3", include_str!("../tasks/L3T3.toml")),
    ("L4T1", include_str!("../tasks/L4T1.toml")),
    ("L4T2", include_str!("../tasks/L4T2.toml")),
    ("L4T3", include_str!("../tasks/L4T3.toml")),
];

/// Expected titles, checked when the catalog loads.
pub const TITLES: [(&str, &str); 12] = [
    ("L1T1", "Put a cup on the table."),
    ("L1T2", "Put a person next to the desk."),
    ("L1T3", "Put a pillow on the bed."),
    ("L2T1", "Place a goldfish in a fishbowl."),
    ("L2T2", "Place a chair next to the desk."),
    ("L2T3", "Line up a group of people."),
    ("L3T1", "Place a soccer goal and a goalkeeper on the field."),
    ("L3T2", "Arrange tableware according to table manners."),
    ("L3T3", "Arrange a classroom layout"),
    ("L4T1", "Place a pair of KOMAINU statues at a Shinto shrine."),
    ("L4T2", "Assemble a KAGAMI-MOCHI."),
    ("L4T3", "Set up a HINA-MATSURI display."),
];

pub fn ids() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(id, _)| *id)
}

/// Loads one built-in task by id (case-insensitive).
pub fn task(id: &str) -> Result<TaskDef, Error> {
    let (key, text) = SOURCES
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::UnknownTask(id.into()))?;
    let t = parse_task(text, &format!("builtin:{key}"))?;
    let title = TITLES.iter().find(|(k, _)| k == key).map(|(_, t)| *t);
    if t.id != *key || Some(t.title.as_str()) != title {
        return Err(Error::Format {
            origin: format!("builtin:{key}"),
            message: "id or title does not match the catalog".into(),
        });
    }
    Ok(t)
}

/// Every built-in task in catalog order.
pub fn builtin() -> Result<Vec<TaskDef>, Error> {
    ids().map(task).collect()
}
