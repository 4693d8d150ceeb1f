//! The 16-student running example used throughout the tests and the guide.

use crate::data::{ranking_from_rank_column, Attribute, Dataset, Ranking, Schema};

/// Gender, School, Address, Failures, Grade and Rank of the sixteen students.
pub const STUDENTS: [(&str, &str, &str, &str, u32, u64); 16] = [
    ("F", "MS", "R", "1", 11, 8),
    ("M", "MS", "R", "1", 15, 3),
    ("M", "GP", "U", "1", 8, 10),
    ("M", "GP", "U", "2", 4, 16),
    ("M", "MS", "R", "0", 19, 2),
    ("F", "MS", "U", "1", 4, 15),
    ("F", "GP", "R", "1", 7, 11),
    ("M", "GP", "R", "1", 6, 13),
    ("F", "MS", "R", "0", 14, 4),
    ("F", "MS", "R", "2", 7, 12),
    ("M", "MS", "R", "2", 13, 6),
    ("F", "GP", "U", "0", 20, 1),
    ("F", "GP", "U", "2", 12, 7),
    ("M", "MS", "U", "1", 13, 5),
    ("F", "GP", "U", "1", 5, 14),
    ("M", "GP", "U", "0", 9, 9),
];

/// The students table over Gender, School, Address and Failures, with the
/// ranking given by its Rank column.
pub fn students() -> (Dataset, Ranking) {
    let domain = |labels: &[&str]| labels.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let schema = Schema::new(vec![
        Attribute::new("Gender", domain(&["F", "M"])),
        Attribute::new("School", domain(&["MS", "GP"])),
        Attribute::new("Address", domain(&["R", "U"])),
        Attribute::new("Failures", domain(&["0", "1", "2"])),
    ])
    .expect("static schema");
    let rows = STUDENTS
        .iter()
        .map(|(g, s, a, f, _, _)| {
            vec![
                schema.attributes()[0].code_of(g).unwrap(),
                schema.attributes()[1].code_of(s).unwrap(),
                schema.attributes()[2].code_of(a).unwrap(),
                schema.attributes()[3].code_of(f).unwrap(),
            ]
        })
        .collect();
    let data = Dataset::new(schema, rows).expect("static rows");
    let ranks: Vec<u64> = STUDENTS.iter().map(|s| s.5).collect();
    let ranking = ranking_from_rank_column(&data, &ranks).expect("static ranks");
    (data, ranking)
}

/// The students table as CSV, including the Grade and Rank columns.
pub fn students_csv() -> String {
    let mut out = String::from("Gender,School,Address,Failures,Grade,Rank\n");
    for (g, s, a, f, grade, rank) in STUDENTS {
        out.push_str(&format!("{g},{s},{a},{f},{grade},{rank}\n"));
    }
    out
}
