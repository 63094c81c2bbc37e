//! Partial character tables shipped with the library.

use crate::chartab::{parse_table, CharacterTable, TableError};

/// Name, description and file content of every embedded table.
pub const DATASETS: &[(&str, &str, &str)] = &[
    (
        "psl2_2f_rows",
        "PSL(2,2^f) at f = 5: the two degree 31 rows on 1a, 2a, 3a",
        include_str!("../data/psl2_2f_rows.json"),
    ),
    (
        "pgl2_3f_rows",
        "PGL(2,3^f) at f = 5: tau and the two degree 242 rows on 1a, 2a, 2b, 3a",
        include_str!("../data/pgl2_3f_rows.json"),
    ),
    (
        "l3_17_aut_partial",
        "Aut(PSL(3,17)): four characters on 1a, 2a, 2b, 3a, 17a, 17b and the 51 classes of order 307",
        include_str!("../data/l3_17_aut_partial.json"),
    ),
    (
        "psl2_3f_eta",
        "PSL(2,3^f) at f = 3: the pair eta, eta' of degree 13",
        include_str!("../data/psl2_3f_eta.json"),
    ),
    (
        "pgl2_243_rows",
        "PGL(2,243): the degree 242 row and psi1..psi5 on 1a, 3a and the order 11 classes",
        include_str!("../data/pgl2_243_rows.json"),
    ),
    (
        "psp4_7_partial",
        "PSp(4,7): chi of degree 175 and the 7-modular phi of degree 5",
        include_str!("../data/psp4_7_partial.json"),
    ),
    (
        "psp4_7_aut_partial",
        "Aut(PSp(4,7)): chi of degree 50 and the 7-modular phi of degree 5",
        include_str!("../data/psp4_7_aut_partial.json"),
    ),
];

pub fn names() -> Vec<&'static str> {
    DATASETS.iter().map(|d| d.0).collect()
}

pub fn raw(name: &str) -> Option<&'static str> {
    DATASETS.iter().find(|d| d.0 == name).map(|d| d.2)
}

pub fn load(name: &str) -> Result<CharacterTable, TableError> {
    let text = raw(name).ok_or_else(|| TableError::Malformed(format!("no embedded dataset {name:?}")))?;
    parse_table(text)
}
